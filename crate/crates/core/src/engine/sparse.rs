//! Sparse states over up to 128 qubits.
//!
//! Protocol registers are wide but nearly classical: coins and measurement
//! records sit in basis states and only a few qubits are ever in
//! superposition. Amplitudes are kept in ordered maps keyed by the basis
//! index (qubit 1 most significant), which also makes every iteration order
//! deterministic.

use std::collections::BTreeMap;

use crate::qmath::{hermitian_eigenvalues, DensityMatrix, Matrix, QubitSet, StateVector, C64};
use crate::{Error, Result};

pub type Index = u128;

pub const MAX_SPARSE_QUBITS: usize = 128;

/// Amplitudes and matrix entries below this modulus are dropped.
pub const PRUNE: f64 = 1e-14;

/// Largest connected block diagonalised densely by
/// [`SparseDensity::trace_distance`].
pub const MAX_DENSE_BLOCK: usize = 1 << 12;

#[inline]
pub(crate) fn bit(index: Index, n: usize, q: usize) -> bool {
    index >> (n - q) & 1 == 1
}

#[inline]
pub(crate) fn mask(n: usize, q: usize) -> Index {
    1 << (n - q)
}

/// Reads `qubits` (first one most significant) out of a basis index.
pub(crate) fn read(index: Index, n: usize, qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |acc, &q| acc << 1 | usize::from(bit(index, n, q)))
}

/// Overwrites `qubits` with `value` (first qubit most significant).
pub(crate) fn write(index: Index, n: usize, qubits: &[usize], value: usize) -> Index {
    let m = qubits.len();
    qubits.iter().enumerate().fold(index, |acc, (i, &q)| {
        if value >> (m - 1 - i) & 1 == 1 {
            acc | mask(n, q)
        } else {
            acc & !mask(n, q)
        }
    })
}

pub(crate) fn read_bits(index: Index, n: usize, qubits: &[usize]) -> Vec<bool> {
    qubits.iter().map(|&q| bit(index, n, q)).collect()
}

pub(crate) fn write_bits(index: Index, n: usize, qubits: &[usize], bits: &[bool]) -> Index {
    qubits.iter().zip(bits).fold(index, |acc, (&q, &b)| {
        if b {
            acc | mask(n, q)
        } else {
            acc & !mask(n, q)
        }
    })
}

fn check_width(n: usize) -> Result<()> {
    if n > MAX_SPARSE_QUBITS {
        return Err(Error::TooManyQubits { n, cap: MAX_SPARSE_QUBITS });
    }
    Ok(())
}

/// Pure state stored as its nonzero amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    n: usize,
    amps: BTreeMap<Index, C64>,
}

impl SparseState {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: Index) -> Result<Self> {
        check_width(n)?;
        if n < MAX_SPARSE_QUBITS && index >> n != 0 {
            return Err(Error::DimensionMismatch(format!("index {index} on {n} qubits")));
        }
        Ok(Self { n, amps: BTreeMap::from([(index, C64::new(1.0, 0.0))]) })
    }

    /// Builds a state from amplitudes; fails unless the norm is one.
    pub fn from_amplitudes(n: usize, amps: impl IntoIterator<Item = (Index, C64)>) -> Result<Self> {
        check_width(n)?;
        let mut map = BTreeMap::new();
        for (i, a) in amps {
            *map.entry(i).or_insert(C64::default()) += a;
        }
        map.retain(|_, a: &mut C64| a.norm() > PRUNE);
        let s = Self { n, amps: map };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > crate::qmath::TOLERANCE {
            return Err(Error::InvalidState(format!("squared norm {norm}")));
        }
        Ok(s)
    }

    pub fn from_state_vector(psi: &StateVector) -> Self {
        let amps = psi
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > PRUNE)
            .map(|(i, a)| (i as Index, *a))
            .collect();
        Self { n: psi.n(), amps }
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &SparseState) -> Result<Self> {
        let n = self.n + other.n;
        check_width(n)?;
        let mut amps = BTreeMap::new();
        for (&i, &a) in &self.amps {
            for (&j, &b) in &other.amps {
                amps.insert(i << other.n | j, a * b);
            }
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nonzero amplitudes.
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (Index, C64)> + '_ {
        self.amps.iter().map(|(&i, &a)| (i, a))
    }

    pub fn amplitude(&self, index: Index) -> C64 {
        self.amps.get(&index).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// The basis index if the state is a single basis vector.
    pub fn as_basis(&self) -> Option<Index> {
        match self.amps.len() {
            1 => self.amps.keys().next().copied(),
            _ => None,
        }
    }

    /// Applies the linear map whose action on a basis vector is `image`.
    pub(crate) fn map_linear<F>(&self, image: F) -> Result<Self>
    where
        F: Fn(Index) -> Result<Vec<(Index, C64)>>,
    {
        let mut out: BTreeMap<Index, C64> = BTreeMap::new();
        for (&i, &a) in &self.amps {
            for (j, u) in image(i)? {
                *out.entry(j).or_default() += a * u;
            }
        }
        out.retain(|_, a| a.norm() > PRUNE);
        Ok(Self { n: self.n, amps: out })
    }

    /// Outcome probabilities of a computational-basis measurement of
    /// `targets`, keyed by outcome (first target most significant).
    pub fn outcome_distribution(&self, targets: &[usize]) -> BTreeMap<usize, f64> {
        let mut dist = BTreeMap::new();
        for (&i, a) in &self.amps {
            *dist.entry(read(i, self.n, targets)).or_insert(0.0) += a.norm_sqr();
        }
        dist
    }

    /// Normalised post-measurement state for `outcome`, with its probability.
    pub fn project(&self, targets: &[usize], outcome: usize) -> (f64, SparseState) {
        let kept: BTreeMap<Index, C64> = self
            .amps
            .iter()
            .filter(|(&i, _)| read(i, self.n, targets) == outcome)
            .map(|(&i, &a)| (i, a))
            .collect();
        let p: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        let scale = if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 };
        let amps = kept.into_iter().map(|(i, a)| (i, a * scale)).collect();
        (p, SparseState { n: self.n, amps })
    }

    /// Probability that qubit `q` reads 1.
    pub fn probability_one(&self, q: usize) -> f64 {
        self.amps.iter().filter(|(&i, _)| bit(i, self.n, q)).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// `|ψ⟩⟨ψ|` traced down to the first `keep` qubits.
    pub fn reduce_to_prefix(&self, keep: usize) -> SparseDensity {
        let drop = self.n - keep;
        let low: Index = if drop == 0 { 0 } else if drop >= 128 { Index::MAX } else { (1 << drop) - 1 };
        let mut groups: BTreeMap<Index, Vec<(Index, C64)>> = BTreeMap::new();
        for (&i, &a) in &self.amps {
            let head = if drop >= 128 { 0 } else { i >> drop };
            groups.entry(i & low).or_default().push((head, a));
        }
        let mut rho = SparseDensity::zeros(keep);
        for vec in groups.values() {
            rho.add_outer(1.0, vec);
        }
        rho.prune();
        rho
    }

    /// `|ψ⟩⟨ψ|` traced down to `keep` (ascending order is used).
    pub fn reduce(&self, keep: &QubitSet) -> Result<SparseDensity> {
        SparseDensity::from_pure(self).reduce(keep)
    }

    pub fn to_state_vector(&self) -> Result<StateVector> {
        crate::qmath::check_cap(self.n)?;
        let mut amps = vec![C64::default(); 1 << self.n];
        for (&i, &a) in &self.amps {
            amps[i as usize] = a;
        }
        StateVector::new(amps)
    }
}

/// Positive operator stored by its nonzero entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDensity {
    n: usize,
    entries: BTreeMap<(Index, Index), C64>,
}

impl SparseDensity {
    pub fn zeros(n: usize) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    pub fn from_pure(psi: &SparseState) -> Self {
        let mut rho = Self::zeros(psi.n);
        let v: Vec<_> = psi.amplitudes().collect();
        rho.add_outer(1.0, &v);
        rho
    }

    pub fn from_dense(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let mut entries = BTreeMap::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                if z.norm() > PRUNE {
                    entries.insert((r as Index, c as Index), z);
                }
            }
        }
        Self { n: rho.n(), entries }
    }

    pub fn to_dense(&self) -> Result<DensityMatrix> {
        crate::qmath::check_cap(self.n)?;
        let d = 1usize << self.n;
        let mut m = Matrix::zeros(d, d);
        for (&(r, c), &z) in &self.entries {
            m[(r as usize, c as usize)] = z;
        }
        DensityMatrix::new(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((Index, Index), C64)> + '_ {
        self.entries.iter().map(|(&k, &z)| (k, z))
    }

    pub fn get(&self, row: Index, col: Index) -> C64 {
        self.entries.get(&(row, col)).copied().unwrap_or_default()
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().filter(|((r, c), _)| r == c).map(|(_, z)| z.re).sum()
    }

    /// Adds `weight · |v⟩⟨v|`.
    pub fn add_outer(&mut self, weight: f64, v: &[(Index, C64)]) {
        for &(i, a) in v {
            for &(j, b) in v {
                *self.entries.entry((i, j)).or_default() += a * b.conj() * weight;
            }
        }
    }

    /// Adds `weight · other`.
    pub fn add_scaled(&mut self, weight: f64, other: &SparseDensity) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch(format!("{} vs {} qubits", other.n, self.n)));
        }
        for (&k, &z) in &other.entries {
            *self.entries.entry(k).or_default() += z * weight;
        }
        Ok(())
    }

    pub fn scaled(&self, weight: f64) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|(&k, &z)| (k, z * weight)).collect() }
    }

    pub(crate) fn prune(&mut self) {
        self.entries.retain(|_, z| z.norm() > PRUNE);
    }

    /// Partial trace keeping `keep`, renumbered in ascending order.
    pub fn reduce(&self, keep: &QubitSet) -> Result<SparseDensity> {
        keep.check(self.n)?;
        let kept = keep.sorted();
        let kept = kept.indices();
        let rest: Vec<usize> = (1..=self.n).filter(|q| !kept.contains(q)).collect();
        let mut out = BTreeMap::new();
        for (&(r, c), &z) in &self.entries {
            if read_wide(r, self.n, &rest) == read_wide(c, self.n, &rest) {
                let key = (read_wide(r, self.n, kept), read_wide(c, self.n, kept));
                *out.entry(key).or_insert(C64::default()) += z;
            }
        }
        let mut rho = SparseDensity { n: kept.len(), entries: out };
        rho.prune();
        Ok(rho)
    }

    /// Applies `ρ ↦ UρU†` for the linear map with basis images `image`.
    pub(crate) fn conjugate_linear<F>(&self, image: F) -> Result<Self>
    where
        F: Fn(Index) -> Result<Vec<(Index, C64)>>,
    {
        let mut cache: BTreeMap<Index, Vec<(Index, C64)>> = BTreeMap::new();
        for &(r, c) in self.entries.keys() {
            for i in [r, c] {
                if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(i) {
                    slot.insert(image(i)?);
                }
            }
        }
        let mut out: BTreeMap<(Index, Index), C64> = BTreeMap::new();
        for (&(r, c), &z) in &self.entries {
            for &(i, a) in &cache[&r] {
                for &(j, b) in &cache[&c] {
                    *out.entry((i, j)).or_default() += a * z * b.conj();
                }
            }
        }
        let mut rho = SparseDensity { n: self.n, entries: out };
        rho.prune();
        Ok(rho)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &SparseDensity) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, z) in &self.entries {
            worst = worst.max((z - other.entries.get(k).copied().unwrap_or_default()).norm());
        }
        for (k, z) in &other.entries {
            if !self.entries.contains_key(k) {
                worst = worst.max(z.norm());
            }
        }
        worst
    }

    /// Eigenvalues of `self − other`, block by block.
    fn difference_spectrum(&self, other: &SparseDensity) -> Result<Vec<f64>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{} vs {} qubits", self.n, other.n)));
        }
        let mut diff = self.entries.clone();
        for (&k, &z) in &other.entries {
            *diff.entry(k).or_default() -= z;
        }
        diff.retain(|_, z| z.norm() > PRUNE);
        block_spectrum(&diff)
    }

    /// `½‖ρ − σ‖₁`, computed over the connected blocks of the combined
    /// sparsity pattern.
    pub fn trace_distance(&self, other: &SparseDensity) -> Result<f64> {
        let spectrum = self.difference_spectrum(other)?;
        Ok((0.5 * spectrum.iter().map(|l| l.abs()).sum::<f64>()).clamp(0.0, 1.0))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        block_spectrum(&self.entries)
    }
}

fn read_wide(index: Index, n: usize, qubits: &[usize]) -> Index {
    qubits.iter().fold(0, |acc, &q| acc << 1 | Index::from(bit(index, n, q)))
}

/// Spectrum of a Hermitian operator given by entries: split into connected
/// components of the index graph, diagonalise each densely.
fn block_spectrum(entries: &BTreeMap<(Index, Index), C64>) -> Result<Vec<f64>> {
    let mut ids: BTreeMap<Index, usize> = BTreeMap::new();
    for &(r, c) in entries.keys() {
        let next = ids.len();
        ids.entry(r).or_insert(next);
        let next = ids.len();
        ids.entry(c).or_insert(next);
    }
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(r, c) in entries.keys() {
        let (a, b) = (find(&mut parent, ids[&r]), find(&mut parent, ids[&c]));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut members: BTreeMap<usize, Vec<Index>> = BTreeMap::new();
    for (&index, &id) in &ids {
        let root = find(&mut parent, id);
        members.entry(root).or_default().push(index);
    }
    let mut block_entries: BTreeMap<usize, Vec<(Index, Index, C64)>> = BTreeMap::new();
    for (&(r, c), &z) in entries {
        let root = find(&mut parent, ids[&r]);
        block_entries.entry(root).or_default().push((r, c, z));
    }
    let mut spectrum = Vec::new();
    for (root, members) in &members {
        let s = members.len();
        if s > MAX_DENSE_BLOCK {
            return Err(Error::Unsupported(format!("coherent block of dimension {s}")));
        }
        let pos: BTreeMap<Index, usize> = members.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut m = Matrix::zeros(s, s);
        for &(r, c, z) in block_entries.get(root).into_iter().flatten() {
            m[(pos[&r], pos[&c])] = z;
        }
        spectrum.extend(hermitian_eigenvalues(&m));
    }
    Ok(spectrum)
}
