use rand::Rng;

use super::{
    check_cap, gather, re, rest_indices, scatter_table, to_bits, DensityMatrix, Matrix, QubitSet,
    UnitaryMatrix, C64, TOLERANCE, ZERO_PROBABILITY,
};
use crate::{Error, Result};

/// `a ⊗ b`, with `a`'s qubits first.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let n = a.n() + b.n();
    check_cap(n)?;
    Ok(DensityMatrix::from_raw(n, a.matrix().kronecker(b.matrix())))
}

/// Reduced state on `keep`. Kept qubits are relabelled `1..=|keep|` in
/// ascending order of their original index.
pub fn partial_trace(rho: &DensityMatrix, keep: &QubitSet) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n = rho.n();
    keep.check(n)?;
    let kept = keep.sorted();
    let traced = kept.complement(n);
    let kept_idx = scatter_table(kept.indices(), n);
    let traced_idx = scatter_table(traced.indices(), n);
    let d = kept_idx.len();
    let m = rho.matrix();
    let out = Matrix::from_fn(d, d, |i, j| {
        traced_idx.iter().map(|&t| m[(kept_idx[i] | t, kept_idx[j] | t)]).sum()
    });
    Ok(DensityMatrix::from_raw(kept.len(), out))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    // symmetrise so tiny asymmetries from round-off do not leak in
    let h = (m + m.adjoint()) * re(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(m: &Matrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

/// `½‖ρ − σ‖₁`, clamped to `[0, 1]`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.n() != sigma.n() {
        return Err(Error::DimensionMismatch(format!("{} vs {} qubits", rho.n(), sigma.n())));
    }
    Ok((0.5 * trace_norm(&(rho.matrix() - sigma.matrix()))).clamp(0.0, 1.0))
}

/// Left-multiplies `m` in place by `u` acting on the target sub-index.
fn left_apply(m: &mut Matrix, u: &Matrix, scatter: &[usize], rest: &[usize]) {
    let k = scatter.len();
    let mut buf = vec![C64::default(); k];
    for col in 0..m.ncols() {
        for &r in rest {
            for (s, b) in buf.iter_mut().enumerate() {
                *b = m[(r | scatter[s], col)];
            }
            for s2 in 0..k {
                m[(r | scatter[s2], col)] = (0..k).map(|s| u[(s2, s)] * buf[s]).sum();
            }
        }
    }
}

/// `U ρ U†` with `U` acting on `targets` (its qubit `i` on `targets[i]`).
pub fn apply_unitary(
    rho: &DensityMatrix,
    u: &UnitaryMatrix,
    targets: &QubitSet,
) -> Result<DensityMatrix> {
    let n = rho.n();
    targets.check(n)?;
    if u.n() != targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit unitary on {} targets",
            u.n(),
            targets.len()
        )));
    }
    let scatter = scatter_table(targets.indices(), n);
    let rest = rest_indices(targets.indices(), n);
    let mut m = rho.matrix().clone();
    left_apply(&mut m, u.matrix(), &scatter, &rest);
    // (U (U ρ)†)† = U ρ U†
    let mut mt = m.adjoint();
    left_apply(&mut mt, u.matrix(), &scatter, &rest);
    Ok(DensityMatrix::from_raw(n, mt.adjoint()))
}

/// Relabels qubits: qubit `q` of `rho` becomes qubit `positions[q-1]`.
pub fn permute_qubits(rho: &DensityMatrix, positions: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n();
    if positions.len() != n {
        return Err(Error::DimensionMismatch(format!("{} positions for {n} qubits", positions.len())));
    }
    let target = QubitSet::new(positions.to_vec())?;
    target.check(n)?;
    let scatter = scatter_table(target.indices(), n);
    let m = rho.matrix();
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(scatter[i], scatter[j])] = m[(i, j)];
        }
    }
    Ok(DensityMatrix::from_raw(n, out))
}

/// Outcome of a computational-basis measurement.
#[derive(Clone, Debug)]
pub struct Measurement {
    /// One bit per target, in target order.
    pub bits: Vec<bool>,
    pub post_state: DensityMatrix,
    pub probability: f64,
}

fn outcome_probabilities(rho: &DensityMatrix, targets: &QubitSet) -> Vec<f64> {
    let n = rho.n();
    let m = rho.matrix();
    let mut probs = vec![0.0; 1 << targets.len()];
    for i in 0..rho.dim() {
        probs[gather(i, targets.indices(), n)] += m[(i, i)].re;
    }
    probs
}

/// Samples a computational-basis measurement of `targets` from the Born
/// distribution and returns the normalised post-measurement state.
pub fn measure_computational<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    targets: &QubitSet,
    rng: &mut R,
) -> Result<Measurement> {
    let n = rho.n();
    targets.check(n)?;
    let probs = outcome_probabilities(rho, targets);
    let total: f64 = probs.iter().filter(|&&p| p > ZERO_PROBABILITY).sum();
    let mut x = rng.random::<f64>() * total;
    let mut outcome = None;
    for (o, &p) in probs.iter().enumerate() {
        if p <= ZERO_PROBABILITY {
            continue;
        }
        outcome = Some(o);
        if x < p {
            break;
        }
        x -= p;
    }
    let outcome = outcome.ok_or_else(|| Error::InvalidState("no outcome has probability".into()))?;
    let p = probs[outcome];
    let m = rho.matrix();
    let tg = targets.indices();
    let post = Matrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        if gather(i, tg, n) == outcome && gather(j, tg, n) == outcome {
            m[(i, j)] / p
        } else {
            C64::default()
        }
    });
    Ok(Measurement {
        bits: to_bits(outcome, targets.len()),
        post_state: DensityMatrix::from_raw(n, post),
        probability: p,
    })
}

/// Exact outcome distribution of measuring `targets`, ordered by outcome.
/// Impossible outcomes are omitted.
pub fn measurement_distribution(
    rho: &DensityMatrix,
    targets: &QubitSet,
) -> Result<Vec<(Vec<bool>, f64)>> {
    targets.check(rho.n())?;
    Ok(outcome_probabilities(rho, targets)
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > ZERO_PROBABILITY)
        .map(|(o, p)| (to_bits(o, targets.len()), p))
        .collect())
}

/// Convex combination of equally sized states.
pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<DensityMatrix> {
    let first = parts.first().ok_or(Error::EmptySelection)?;
    let n = first.1.n();
    let mut total = 0.0;
    let mut acc = Matrix::zeros(first.1.dim(), first.1.dim());
    for (w, rho) in parts {
        if *w < -TOLERANCE {
            return Err(Error::WeightSum(*w));
        }
        if rho.n() != n {
            return Err(Error::DimensionMismatch(format!("{} vs {n} qubits", rho.n())));
        }
        total += w;
        acc += rho.matrix() * re(*w);
    }
    if (total - 1.0).abs() > TOLERANCE {
        return Err(Error::WeightSum(total));
    }
    Ok(DensityMatrix::from_raw(n, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::StateVector;

    fn ket0() -> DensityMatrix {
        DensityMatrix::basis(1, 0)
    }

    fn bell() -> DensityMatrix {
        StateVector::bell().to_density()
    }

    /// Entry-by-entry Kronecker product, independent of nalgebra's.
    fn kron_oracle(a: &DensityMatrix, b: &DensityMatrix) -> Matrix {
        let (da, db) = (a.dim(), b.dim());
        Matrix::from_fn(da * db, da * db, |i, j| a.get(i / db, j / db) * b.get(i % db, j % db))
    }

    #[test]
    fn tensor_examples() {
        let zz = tensor(&ket0(), &ket0()).unwrap();
        assert!(zz.max_abs_diff(&DensityMatrix::basis(2, 0)) < 1e-15);
        let mm = tensor(&DensityMatrix::maximally_mixed(1), &DensityMatrix::maximally_mixed(1)).unwrap();
        assert!(mm.max_abs_diff(&DensityMatrix::maximally_mixed(2)) < 1e-15);
        let half = DensityMatrix::maximally_mixed(1);
        let t = tensor(&ket0(), &half).unwrap();
        assert_eq!(t.matrix(), &kron_oracle(&ket0(), &half));
        let expected = DensityMatrix::diagonal(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(t.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_examples() {
        let q1 = QubitSet::single(1);
        let zz = DensityMatrix::basis(2, 0);
        assert!(partial_trace(&zz, &q1).unwrap().max_abs_diff(&ket0()) < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!(partial_trace(&bell(), &q1).unwrap().max_abs_diff(&mixed) < 1e-15);
        // index-summation oracle: Σ_a ρ[(a,i),(a,j)] for diag(1/2,1/2,0,0)
        let rho = DensityMatrix::diagonal(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        let oracle = Matrix::from_fn(2, 2, |i, j| (0..2).map(|a| rho.get(2 * a + i, 2 * a + j)).sum());
        let out = partial_trace(&rho, &QubitSet::single(2)).unwrap();
        assert_eq!(out.matrix(), &oracle);
        assert!(out.max_abs_diff(&mixed) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = DensityMatrix::zero(2);
        assert_eq!(partial_trace(&rho, &QubitSet::empty()), Err(Error::EmptySelection));
        assert!(matches!(
            partial_trace(&rho, &QubitSet::single(3)),
            Err(Error::QubitOutOfRange { index: 3, n: 2 })
        ));
    }

    #[test]
    fn trace_distance_examples() {
        let r = bell();
        assert!(trace_distance(&r, &r).unwrap() < 1e-15);
        let one = DensityMatrix::basis(1, 1);
        assert!((trace_distance(&ket0(), &one).unwrap() - 1.0).abs() < 1e-12);
        // ρ − σ = diag(1/2, −1/2): eigenvalues ±1/2
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!((trace_distance(&ket0(), &mixed).unwrap() - 0.5).abs() < 1e-12);
        assert!(trace_distance(&ket0(), &bell()).is_err());
    }

    #[test]
    fn apply_unitary_examples() {
        let q1 = QubitSet::single(1);
        let x = UnitaryMatrix::x();
        let out = apply_unitary(&ket0(), &x, &q1).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis(1, 1)) < 1e-15);
        let plus = StateVector::plus().to_density();
        let out = apply_unitary(&ket0(), &UnitaryMatrix::h(), &q1).unwrap();
        assert!(out.max_abs_diff(&plus) < 1e-15);
        // embedding oracle: (𝕀 ⊗ X) ρ (𝕀 ⊗ X)†
        let zz = DensityMatrix::basis(2, 0);
        let embedded = UnitaryMatrix::identity(1).kron(&x);
        let oracle = zz.conjugate(&embedded).unwrap();
        let out = apply_unitary(&zz, &x, &QubitSet::single(2)).unwrap();
        assert!(out.max_abs_diff(&oracle) < 1e-15);
        assert!(out.max_abs_diff(&DensityMatrix::basis(2, 1)) < 1e-15);
        assert!(apply_unitary(&zz, &x, &QubitSet::all(2)).is_err());
    }

    #[test]
    fn apply_unitary_respects_target_order() {
        // CNOT with control on qubit 2 and target on qubit 1: |01⟩ → |11⟩
        let rho = DensityMatrix::basis(2, 0b01);
        let out = apply_unitary(&rho, &UnitaryMatrix::cnot(), &QubitSet::new(vec![2, 1]).unwrap()).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis(2, 0b11)) < 1e-15);
    }

    #[test]
    fn measurement_examples() {
        let mut rng = crate::seeded_rng(1);
        let q1 = QubitSet::single(1);
        let m = measure_computational(&ket0(), &q1, &mut rng).unwrap();
        assert_eq!(m.bits, vec![false]);
        assert!((m.probability - 1.0).abs() < 1e-15);

        let plus = StateVector::plus().to_density();
        let mut seen = [false; 2];
        for _ in 0..64 {
            let m = measure_computational(&plus, &q1, &mut rng).unwrap();
            assert!((m.probability - 0.5).abs() < 1e-12);
            seen[usize::from(m.bits[0])] = true;
            let expected = DensityMatrix::basis(1, usize::from(m.bits[0]));
            assert!(m.post_state.max_abs_diff(&expected) < 1e-12);
        }
        assert_eq!(seen, [true, true]);

        // projector arithmetic: ⟨ab|Φ⁺⟩⟨Φ⁺|ab⟩ = 1/2 for ab ∈ {00, 11}, else 0
        let both = QubitSet::all(2);
        for _ in 0..32 {
            let m = measure_computational(&bell(), &both, &mut rng).unwrap();
            assert_eq!(m.bits[0], m.bits[1]);
            assert!((m.probability - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_examples() {
        let q1 = QubitSet::single(1);
        let d = measurement_distribution(&DensityMatrix::basis(1, 1), &q1).unwrap();
        assert_eq!(d, vec![(vec![true], 1.0)]);
        let d = measurement_distribution(&DensityMatrix::maximally_mixed(1), &q1).unwrap();
        assert_eq!(d, vec![(vec![false], 0.5), (vec![true], 0.5)]);
        let minus = StateVector::minus().to_density();
        let d = measurement_distribution(&minus, &q1).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|(_, p)| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn mixture_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let kets = [
            StateVector::new(vec![re(h), re(h), re(0.), re(0.)]).unwrap(),
            StateVector::new(vec![re(h), re(-h), re(0.), re(0.)]).unwrap(),
            StateVector::new(vec![re(0.), re(0.), re(h), re(h)]).unwrap(),
            StateVector::new(vec![re(0.), re(0.), re(h), re(-h)]).unwrap(),
        ];
        let parts: Vec<_> = kets.iter().map(|k| (0.25, k.to_density())).collect();
        let avg = mixture(&parts).unwrap();
        assert!(avg.max_abs_diff(&DensityMatrix::maximally_mixed(2)) < 1e-12);
        let r = bell();
        assert!(mixture(&[(1.0, r.clone())]).unwrap().max_abs_diff(&r) < 1e-15);
        let m = mixture(&[(0.5, ket0()), (0.5, DensityMatrix::basis(1, 1))]).unwrap();
        assert!(m.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-15);
        assert!(matches!(mixture(&[(0.7, ket0())]), Err(Error::WeightSum(_))));
    }

    #[test]
    fn permute_qubits_moves_factors() {
        let a = DensityMatrix::basis(1, 1);
        let b = DensityMatrix::zero(2);
        let t = tensor(&a, &b).unwrap(); // |1 00⟩
        let moved = permute_qubits(&t, &[3, 1, 2]).unwrap(); // |0 0 1⟩
        assert!(moved.max_abs_diff(&DensityMatrix::basis(3, 1)) < 1e-15);
    }
}
