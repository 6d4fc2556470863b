use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{c, check_cap, ops, qubits_for_dim, re, Matrix, C64, TOLERANCE};
use crate::{Error, Result};

/// Ordered list of distinct 1-based qubit indices.
///
/// Range checks happen where the set is applied to a concrete system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitSet(Vec<usize>);

impl QubitSet {
    pub fn new(indices: impl Into<Vec<usize>>) -> Result<Self> {
        let indices = indices.into();
        let mut seen = BTreeSet::new();
        for &q in &indices {
            if q == 0 {
                return Err(Error::QubitOutOfRange { index: 0, n: 0 });
            }
            if !seen.insert(q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `len` consecutive qubits starting at `first`.
    pub fn range(first: usize, len: usize) -> Self {
        assert!(first >= 1, "qubit indices are 1-based");
        Self((first..first + len).collect())
    }

    pub fn all(n: usize) -> Self {
        Self::range(1, n)
    }

    pub fn single(q: usize) -> Self {
        Self::range(q, 1)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.contains(&q)
    }

    /// Qubits of an `n`-qubit system not in this set, ascending.
    pub fn complement(&self, n: usize) -> Self {
        Self((1..=n).filter(|q| !self.contains(*q)).collect())
    }

    pub fn sorted(&self) -> Self {
        let mut v = self.0.clone();
        v.sort_unstable();
        Self(v)
    }

    /// Concatenation; fails on overlap.
    pub fn union(&self, other: &QubitSet) -> Result<Self> {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self::new(v)
    }

    pub fn intersects(&self, other: &QubitSet) -> bool {
        self.0.iter().any(|q| other.contains(*q))
    }

    pub fn check(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&q| q > n) {
            Some(&index) => Err(Error::QubitOutOfRange { index, n }),
            None => Ok(()),
        }
    }
}

/// Normalised pure state over `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_dim(amps.len())
            .ok_or_else(|| Error::DimensionMismatch(format!("length {}", amps.len())))?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidState(format!("squared norm {norm}")));
        }
        Ok(Self { n, amps })
    }

    /// Normalises `amps` first.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm <= TOLERANCE {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amps.into_iter().map(|a| a / norm).collect())
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![C64::default(); 1 << n];
        amps[index] = re(1.0);
        Self { n, amps }
    }

    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn plus() -> Self {
        Self { n: 1, amps: vec![re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)] }
    }

    pub fn minus() -> Self {
        Self { n: 1, amps: vec![re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)] }
    }

    /// `|Φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
    pub fn bell() -> Self {
        let h = re(FRAC_1_SQRT_2);
        Self { n: 2, amps: vec![h, C64::default(), C64::default(), h] }
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps).expect("gaussian vector is nonzero")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        StateVector { n: self.n + other.n, amps }
    }

    pub fn apply(&self, u: &UnitaryMatrix) -> Result<StateVector> {
        if u.n() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit unitary on {}-qubit state",
                u.n(),
                self.n
            )));
        }
        let v = u.matrix() * nalgebra::DVector::from_column_slice(&self.amps);
        Ok(StateVector { n: self.n, amps: v.as_slice().to_vec() })
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityMatrix::from_raw(self.n, &v * v.adjoint())
    }
}

/// Unitary operator on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    n: usize,
    data: Matrix,
}

impl UnitaryMatrix {
    pub fn new(data: Matrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch("unitary must be square".into()));
        }
        let n = qubits_for_dim(data.nrows())
            .ok_or_else(|| Error::DimensionMismatch(format!("dimension {}", data.nrows())))?;
        let dev = (data.adjoint() * &data - Matrix::identity(data.nrows(), data.ncols()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > TOLERANCE {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let d = rows.len();
        Self::new(Matrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub(crate) fn from_raw(n: usize, data: Matrix) -> Self {
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        let d = 1 << n;
        Self { n, data: Matrix::identity(d, d) }
    }

    pub fn x() -> Self {
        Self::from_raw(1, Matrix::from_row_slice(2, 2, &[re(0.), re(1.), re(1.), re(0.)]))
    }

    pub fn y() -> Self {
        Self::from_raw(1, Matrix::from_row_slice(2, 2, &[re(0.), c(0., -1.), c(0., 1.), re(0.)]))
    }

    pub fn z() -> Self {
        Self::from_raw(1, Matrix::from_row_slice(2, 2, &[re(1.), re(0.), re(0.), re(-1.)]))
    }

    pub fn h() -> Self {
        let h = FRAC_1_SQRT_2;
        Self::from_raw(1, Matrix::from_row_slice(2, 2, &[re(h), re(h), re(h), re(-h)]))
    }

    /// Control is the first qubit.
    pub fn cnot() -> Self {
        Self::permutation(2, &[0, 1, 3, 2]).expect("valid permutation")
    }

    pub fn swap() -> Self {
        Self::permutation(2, &[0, 2, 1, 3]).expect("valid permutation")
    }

    /// Basis permutation `|i⟩ ↦ |perm[i]⟩`.
    pub fn permutation(n: usize, perm: &[usize]) -> Result<Self> {
        let d = 1 << n;
        if perm.len() != d {
            return Err(Error::DimensionMismatch(format!("permutation of length {}", perm.len())));
        }
        let mut seen = vec![false; d];
        let mut data = Matrix::zeros(d, d);
        for (i, &p) in perm.iter().enumerate() {
            if p >= d || seen[p] {
                return Err(Error::DimensionMismatch("not a permutation".into()));
            }
            seen[p] = true;
            data[(p, i)] = re(1.0);
        }
        Ok(Self { n, data })
    }

    /// Completes `columns` (orthonormal, each of length `2^n`) to a unitary
    /// whose leading columns are exactly the given ones. Extra columns come
    /// from Gram–Schmidt over the standard basis.
    pub fn complete(n: usize, columns: &[Vec<C64>]) -> Result<Self> {
        let d = 1usize << n;
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(d);
        for col in columns {
            if col.len() != d {
                return Err(Error::DimensionMismatch(format!("column of length {}", col.len())));
            }
            basis.push(col.clone());
        }
        for e in 0..d {
            if basis.len() == d {
                break;
            }
            let mut v = vec![C64::default(); d];
            v[e] = re(1.0);
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for b in &basis {
                    let proj: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= proj * bi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-7 {
                basis.push(v.into_iter().map(|z| z / norm).collect());
            }
        }
        let data = Matrix::from_fn(d, d, |i, j| basis[j][i]);
        Self::new(data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self { n: self.n, data: self.data.adjoint() }
    }

    /// `self ⊗ other`.
    pub fn kron(&self, other: &UnitaryMatrix) -> Self {
        Self { n: self.n + other.n, data: self.data.kronecker(&other.data) }
    }

    /// Operator product `self · other` (apply `other` first).
    pub fn compose(&self, other: &UnitaryMatrix) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{} vs {} qubits", self.n, other.n)));
        }
        Ok(Self { n: self.n, data: &self.data * &other.data })
    }

    /// Whether the matrix maps every basis state to a basis state.
    pub fn is_permutation(&self) -> bool {
        self.data.column_iter().all(|col| {
            let mut ones = 0;
            for z in col.iter() {
                if (z - re(1.0)).norm() <= TOLERANCE {
                    ones += 1;
                } else if z.norm() > TOLERANCE {
                    return false;
                }
            }
            ones == 1
        })
    }
}

/// Density operator over `n` qubits: Hermitian, unit trace, positive
/// semidefinite (all within [`TOLERANCE`]).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Matrix,
}

impl DensityMatrix {
    /// Validates `data` as a density matrix.
    pub fn new(data: Matrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        let n = qubits_for_dim(data.nrows())
            .ok_or_else(|| Error::DimensionMismatch(format!("dimension {}", data.nrows())))?;
        check_cap(n)?;
        let herm = (&data - data.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = data.trace();
        if (tr.re - 1.0).abs() > TOLERANCE || tr.im.abs() > TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = ops::hermitian_eigenvalues(&data).into_iter().fold(f64::INFINITY, f64::min);
        if min < -TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { n, data })
    }

    /// Wraps a matrix produced by an operation that preserves validity.
    pub(crate) fn from_raw(n: usize, data: Matrix) -> Self {
        debug_assert_eq!(data.nrows(), 1 << n);
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch("ragged matrix".into()));
        }
        Self::new(Matrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let d = 1 << n;
        let mut data = Matrix::zeros(d, d);
        data[(index, index)] = re(1.0);
        Self { n, data }
    }

    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    /// `𝕀/2ⁿ`.
    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1 << n;
        Self { n, data: Matrix::identity(d, d) * re(1.0 / d as f64) }
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let d = probabilities.len();
        Self::new(Matrix::from_fn(d, d, |i, j| if i == j { re(probabilities[i]) } else { re(0.) }))
    }

    /// Random mixed state of the given rank (Ginibre construction).
    pub fn random<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Self {
        let d = 1 << n;
        let g = Matrix::from_fn(d, rank.max(1), |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        Self::from_raw(n, m / re(tr))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        ops::hermitian_eigenvalues(&self.data)
    }

    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        (&self.data - &other.data).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `U ρ U†` for a unitary on all qubits.
    pub fn conjugate(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.n() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit unitary on {}-qubit state",
                u.n(),
                self.n
            )));
        }
        Ok(Self::from_raw(self.n, u.matrix() * &self.data * u.matrix().adjoint()))
    }

    /// Probabilities of the computational-basis outcomes.
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_set_rejects_duplicates_and_zero() {
        assert_eq!(QubitSet::new(vec![1, 2, 1]), Err(Error::DuplicateQubit(1)));
        assert!(QubitSet::new(vec![0]).is_err());
        assert!(QubitSet::new(vec![3]).unwrap().check(2).is_err());
        assert_eq!(QubitSet::new(vec![2]).unwrap().complement(3).indices(), &[1, 3]);
    }

    #[test]
    fn unitary_validation() {
        assert!(UnitaryMatrix::new(Matrix::from_element(2, 2, re(1.0))).is_err());
        assert!(UnitaryMatrix::new(UnitaryMatrix::h().matrix().clone()).is_ok());
        assert!(UnitaryMatrix::cnot().is_permutation());
        assert!(!UnitaryMatrix::h().is_permutation());
    }

    #[test]
    fn density_validation() {
        let bad_trace = Matrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(bad_trace), Err(Error::InvalidState(_))));
        let negative = Matrix::from_row_slice(2, 2, &[re(1.5), re(0.), re(0.), re(-0.5)]);
        assert!(matches!(DensityMatrix::new(negative), Err(Error::InvalidState(_))));
        let non_herm = Matrix::from_row_slice(2, 2, &[re(0.5), re(0.3), re(0.), re(0.5)]);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(DensityMatrix::new(DensityMatrix::maximally_mixed(2).matrix().clone()).is_ok());
    }

    #[test]
    fn completion_keeps_leading_columns() {
        let plus = StateVector::plus().tensor(&StateVector::basis(1, 1));
        let u = UnitaryMatrix::complete(2, &[plus.amplitudes().to_vec()]).unwrap();
        let out = StateVector::zero(2).apply(&u).unwrap();
        assert!((out.inner(&plus).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = crate::seeded_rng(3);
        let rho = DensityMatrix::random(3, 2, &mut rng);
        assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        let psi = StateVector::random(3, &mut rng);
        assert!((psi.inner(&psi).re - 1.0).abs() < 1e-12);
    }
}
