//! Quantum one-time pad: `U_r = X^{r₁}Z^{s₁} ⊗ … ⊗ X^{rₙ}Z^{sₙ}`.

use rand::Rng;

use crate::par::Exec;
use crate::qmath::{
    apply_unitary, qubit_mask, DensityMatrix, Matrix, QubitSet, StateVector, UnitaryMatrix, C64,
};
use crate::{Error, Result};

/// Largest register the exact key-space averages accept (`16^n` work).
pub const MAX_TWIRL_QUBITS: usize = 6;

/// A `2n`-bit pad key laid out as `(r₁, s₁, …, rₙ, sₙ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadKey {
    bits: Vec<bool>,
}

impl PadKey {
    pub fn new(n: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "pad key for {n} qubits needs {} bits, got {}",
                2 * n,
                bits.len()
            )));
        }
        Ok(Self { bits })
    }

    pub fn from_pairs(pairs: &[(bool, bool)]) -> Self {
        Self { bits: pairs.iter().flat_map(|&(r, s)| [r, s]).collect() }
    }

    /// Key number `index` in the enumeration order of all `4ⁿ` keys.
    pub fn from_index(n: usize, index: usize) -> Self {
        Self { bits: crate::qmath::to_bits(index, 2 * n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { bits: vec![false; 2 * n] }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self { bits: (0..2 * n).map(|_| rng.random()).collect() }
    }

    pub fn n(&self) -> usize {
        self.bits.len() / 2
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// `(r_q, s_q)` for 1-based qubit `q`.
    pub fn pair(&self, q: usize) -> (bool, bool) {
        (self.bits[2 * (q - 1)], self.bits[2 * (q - 1) + 1])
    }

    pub fn xor(&self, other: &PadKey) -> Result<PadKey> {
        if self.bits.len() != other.bits.len() {
            return Err(Error::DimensionMismatch("pad keys of different length".into()));
        }
        Ok(Self { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect() })
    }

    /// X and Z bit masks over an `n`-qubit basis index.
    fn masks(&self) -> (usize, usize) {
        let n = self.n();
        (1..=n).fold((0, 0), |(x, z), q| {
            let (r, s) = self.pair(q);
            let m = qubit_mask(q, n);
            (x | if r { m } else { 0 }, z | if s { m } else { 0 })
        })
    }
}

/// `X^r Z^s` on one qubit.
pub fn single_pad(r: bool, s: bool) -> UnitaryMatrix {
    let x = if r { UnitaryMatrix::x() } else { UnitaryMatrix::identity(1) };
    let z = if s { UnitaryMatrix::z() } else { UnitaryMatrix::identity(1) };
    x.compose(&z).expect("single-qubit operators")
}

pub fn pad_unitary(key: &PadKey) -> UnitaryMatrix {
    (1..=key.n()).fold(UnitaryMatrix::identity(0), |acc, q| {
        let (r, s) = key.pair(q);
        acc.kron(&single_pad(r, s))
    })
}

pub fn encrypt(psi: &StateVector, key: &PadKey) -> Result<StateVector> {
    if psi.n() != key.n() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit key for a {}-qubit state",
            key.n(),
            psi.n()
        )));
    }
    psi.apply(&pad_unitary(key))
}

/// Undoes the pad on `targets` by conjugating with `(X^r Z^s)†`, one
/// `(r, s)` pair per target.
pub fn decrypt_qubits(
    rho: &DensityMatrix,
    key_fragment: &[(bool, bool)],
    targets: &QubitSet,
) -> Result<DensityMatrix> {
    if key_fragment.len() != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} key pairs for {} targets",
            key_fragment.len(),
            targets.len()
        )));
    }
    let mut out = rho.clone();
    for (&(r, s), &q) in key_fragment.iter().zip(targets.indices()) {
        if r || s {
            out = apply_unitary(&out, &single_pad(r, s).adjoint(), &QubitSet::single(q))?;
        }
    }
    Ok(out)
}

/// `U ρ U†` for the Pauli with the given X/Z masks, via index arithmetic:
/// `U|a⟩ = (−1)^{|z∧a|} |a ⊕ x⟩`.
fn pauli_conjugate_into(acc: &mut Matrix, rho: &Matrix, x: usize, z: usize) {
    let sign = |a: usize| if (z & a).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    let d = rho.nrows();
    for i in 0..d {
        let si = sign(i ^ x);
        for j in 0..d {
            acc[(i, j)] += rho[(i ^ x, j ^ x)] * (si * sign(j ^ x));
        }
    }
}

/// Average of `U_r ρ U_r†` over every key supported on `qubits`.
fn twirl(rho: &DensityMatrix, qubits: &[usize], exec: Exec) -> DensityMatrix {
    let n = rho.n();
    let m = qubits.len();
    let keys = 1usize << (2 * m);
    let chunk = 64usize.min(keys);
    let chunks = keys.div_ceil(chunk);
    let d = rho.dim();
    let partials = exec.map(chunks, |c| {
        let mut acc = Matrix::zeros(d, d);
        for key in c * chunk..((c + 1) * chunk).min(keys) {
            let (mut x, mut z) = (0, 0);
            for (pos, &q) in qubits.iter().enumerate() {
                let shift = 2 * (m - 1 - pos);
                if key >> (shift + 1) & 1 == 1 {
                    x |= qubit_mask(q, n);
                }
                if key >> shift & 1 == 1 {
                    z |= qubit_mask(q, n);
                }
            }
            pauli_conjugate_into(&mut acc, rho.matrix(), x, z);
        }
        acc
    });
    let sum = partials.into_iter().fold(Matrix::zeros(d, d), |a, b| a + b);
    DensityMatrix::from_raw(n, sum / C64::new(keys as f64, 0.0))
}

/// `U_r ρ U_r†` using index arithmetic instead of a dense product.
pub fn conjugate_by_key(rho: &DensityMatrix, key: &PadKey) -> Result<DensityMatrix> {
    if rho.n() != key.n() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit key for a {}-qubit state",
            key.n(),
            rho.n()
        )));
    }
    let (x, z) = key.masks();
    let mut acc = Matrix::zeros(rho.dim(), rho.dim());
    pauli_conjugate_into(&mut acc, rho.matrix(), x, z);
    Ok(DensityMatrix::from_raw(rho.n(), acc))
}

/// `(1/4ⁿ) Σ_r U_r ρ U_r†`, summed over every key.
pub fn average_encryption(rho: &DensityMatrix) -> Result<DensityMatrix> {
    average_encryption_with(rho, Exec::default())
}

pub fn average_encryption_with(rho: &DensityMatrix, exec: Exec) -> Result<DensityMatrix> {
    if rho.n() > MAX_TWIRL_QUBITS {
        return Err(Error::TooManyQubits { n: rho.n(), cap: MAX_TWIRL_QUBITS });
    }
    let all: Vec<usize> = (1..=rho.n()).collect();
    Ok(twirl(rho, &all, exec))
}

/// Averages the pad over the qubits in `unknown` only.
pub fn partial_average_encryption(
    rho: &DensityMatrix,
    unknown: &QubitSet,
) -> Result<DensityMatrix> {
    unknown.check(rho.n())?;
    if unknown.len() > MAX_TWIRL_QUBITS {
        return Err(Error::TooManyQubits { n: unknown.len(), cap: MAX_TWIRL_QUBITS });
    }
    Ok(twirl(rho, unknown.indices(), Exec::default()))
}
