//! Dense complex linear algebra over qubit registers.
//!
//! Basis ordering: qubit 1 is the most significant bit of a basis index, so
//! `|q1 q2 … qn⟩` has index `q1·2^(n-1) + … + qn`. Every module in the crate
//! uses this convention.

mod cq;
mod ops;
mod types;

use std::sync::atomic::{AtomicUsize, Ordering};

pub use cq::CqState;
pub use ops::{
    apply_unitary, hermitian_eigenvalues, measure_computational, measurement_distribution,
    mixture, partial_trace, permute_qubits, tensor, trace_distance, trace_norm, Measurement,
};
pub use types::{DensityMatrix, QubitSet, StateVector, UnitaryMatrix};

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used as storage for every operator.
pub type Matrix = nalgebra::DMatrix<C64>;

/// Tolerance for validity checks and exact-identity assertions.
pub const TOLERANCE: f64 = 1e-9;

/// Outcome probabilities at or below this are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-15;

pub const DEFAULT_MAX_QUBITS: usize = 10;

static MAX_QUBITS: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_QUBITS);

/// Current cap on the qubit count of dense objects.
pub fn max_qubits() -> usize {
    MAX_QUBITS.load(Ordering::Relaxed)
}

/// Changes the dense qubit cap. Dense storage is `4^n` complex entries, so
/// raising this far past the default is rarely useful.
pub fn set_max_qubits(n: usize) {
    MAX_QUBITS.store(n, Ordering::Relaxed);
}

pub(crate) fn check_cap(n: usize) -> crate::Result<()> {
    let cap = max_qubits();
    if n > cap {
        return Err(crate::Error::TooManyQubits { n, cap });
    }
    Ok(())
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Number of qubits for a dimension, if it is a power of two.
pub(crate) fn qubits_for_dim(dim: usize) -> Option<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        None
    } else {
        Some(dim.trailing_zeros() as usize)
    }
}

/// Bit mask of qubit `q` (1-based) in an `n`-qubit basis index.
#[inline]
pub(crate) fn qubit_mask(q: usize, n: usize) -> usize {
    1usize << (n - q)
}

/// For each sub-index `s` over `targets` (first target most significant),
/// the global index bits it sets.
pub(crate) fn scatter_table(targets: &[usize], n: usize) -> Vec<usize> {
    let m = targets.len();
    (0..1usize << m)
        .map(|s| {
            targets
                .iter()
                .enumerate()
                .filter(|(pos, _)| s >> (m - 1 - pos) & 1 == 1)
                .fold(0, |acc, (_, &q)| acc | qubit_mask(q, n))
        })
        .collect()
}

/// Global indices whose bits on `targets` are all zero, in increasing order.
pub(crate) fn rest_indices(targets: &[usize], n: usize) -> Vec<usize> {
    let mask = targets.iter().fold(0, |acc, &q| acc | qubit_mask(q, n));
    (0..1usize << n).filter(|i| i & mask == 0).collect()
}

/// Reads the bits of `index` on `targets` as a sub-index.
#[inline]
pub(crate) fn gather(index: usize, targets: &[usize], n: usize) -> usize {
    targets
        .iter()
        .fold(0, |acc, &q| (acc << 1) | usize::from(index & qubit_mask(q, n) != 0))
}

/// Bits of `value` over `width` positions, most significant first.
pub fn to_bits(value: usize, width: usize) -> Vec<bool> {
    (0..width).map(|i| value >> (width - 1 - i) & 1 == 1).collect()
}

/// Inverse of [`to_bits`].
pub fn from_bits(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}
