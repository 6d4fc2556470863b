use std::collections::BTreeMap;

use super::{ops::trace_norm, re, DensityMatrix, Matrix};
use crate::{Error, Result};

/// Classical-quantum state `Σ_x p(x) |x⟩⟨x| ⊗ ρ_x`, stored as weighted
/// blocks keyed by the classical label.
#[derive(Clone, Debug, Default)]
pub struct CqState {
    n: Option<usize>,
    blocks: BTreeMap<Vec<u8>, Matrix>,
}

impl CqState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `weight · ρ` to the block labelled `label`.
    pub fn add(&mut self, label: Vec<u8>, weight: f64, rho: &DensityMatrix) -> Result<()> {
        match self.n {
            Some(n) if n != rho.n() => {
                return Err(Error::DimensionMismatch(format!("{} vs {n} qubits", rho.n())))
            }
            _ => self.n = Some(rho.n()),
        }
        let term = rho.matrix() * re(weight);
        self.blocks
            .entry(label)
            .and_modify(|m| *m += &term)
            .or_insert(term);
        Ok(())
    }

    /// Quantum register size, once known.
    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.blocks.values().map(|m| m.trace().re).sum()
    }

    /// Weight and normalised state of one block.
    pub fn block(&self, label: &[u8]) -> Option<(f64, DensityMatrix)> {
        let m = self.blocks.get(label)?;
        let w = m.trace().re;
        let n = self.n?;
        Some((w, DensityMatrix::from_raw(n, m / re(w))))
    }

    pub fn labels(&self) -> impl Iterator<Item = &Vec<u8>> {
        self.blocks.keys()
    }

    /// The quantum part with the classical label forgotten.
    pub fn quantum_marginal(&self) -> Option<DensityMatrix> {
        let n = self.n?;
        let d = 1 << n;
        let sum = self.blocks.values().fold(Matrix::zeros(d, d), |acc, m| acc + m);
        Some(DensityMatrix::from_raw(n, sum))
    }

    /// `½ Σ_x ‖p(x)ρ_x − q(x)σ_x‖₁`, the trace distance of the two
    /// block-diagonal operators.
    pub fn trace_distance(&self, other: &CqState) -> Result<f64> {
        if let (Some(a), Some(b)) = (self.n, other.n) {
            if a != b {
                return Err(Error::DimensionMismatch(format!("{a} vs {b} qubits")));
            }
        }
        let mut total = 0.0;
        for (label, m) in &self.blocks {
            total += match other.blocks.get(label) {
                Some(o) => trace_norm(&(m - o)),
                None => m.trace().re,
            };
        }
        for (label, o) in &other.blocks {
            if !self.blocks.contains_key(label) {
                total += o.trace().re;
            }
        }
        Ok((0.5 * total).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_of_disjoint_labels_is_one() {
        let mut a = CqState::new();
        a.add(vec![0], 1.0, &DensityMatrix::zero(1)).unwrap();
        let mut b = CqState::new();
        b.add(vec![1], 1.0, &DensityMatrix::zero(1)).unwrap();
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn blocks_accumulate() {
        let mut a = CqState::new();
        a.add(vec![0], 0.5, &DensityMatrix::basis(1, 0)).unwrap();
        a.add(vec![0], 0.5, &DensityMatrix::basis(1, 1)).unwrap();
        let (w, rho) = a.block(&[0]).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-15);
        assert!(a.add(vec![1], 0.1, &DensityMatrix::zero(2)).is_err());
    }
}
