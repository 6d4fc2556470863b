//! Unitary dilation of a channel given by Kraus operators.
//!
//! The dilation acts on `system ⊗ environment` with the environment starting
//! in `|0⟩`: `|ψ⟩|0⟩ ↦ Σ_k K_k|ψ⟩|k⟩`. The columns with environment index 0
//! therefore hold the Kraus operators stacked along the environment index;
//! the remaining columns are an arbitrary orthonormal completion.

use rand::Rng;

use crate::qmath::{
    check_cap, partial_trace, qubits_for_dim, tensor, trace_distance, DensityMatrix, Matrix,
    QubitSet, StateVector, UnitaryMatrix, C64, TOLERANCE,
};
use crate::{Error, Result};

/// Largest system the dilation accepts.
pub const MAX_SYSTEM_QUBITS: usize = 2;

#[derive(Clone, Debug)]
pub struct Purification {
    pub dilation: UnitaryMatrix,
    pub system_qubits: usize,
    pub env_qubits: usize,
}

fn check_kraus(kraus: &[Matrix]) -> Result<usize> {
    let first = kraus.first().ok_or(Error::EmptySelection)?;
    let d = first.nrows();
    let n = qubits_for_dim(d).ok_or_else(|| Error::DimensionMismatch(format!("dimension {d}")))?;
    if kraus.iter().any(|k| k.nrows() != d || k.ncols() != d) {
        return Err(Error::DimensionMismatch("Kraus operators must share one square shape".into()));
    }
    if n > MAX_SYSTEM_QUBITS {
        return Err(Error::Unsupported(format!("{n}-qubit channel (at most {MAX_SYSTEM_QUBITS})")));
    }
    let sum = kraus.iter().fold(Matrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
    let dev = (sum - Matrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > TOLERANCE {
        return Err(Error::NotTracePreserving(dev));
    }
    Ok(n)
}

/// Applies `ρ ↦ Σ K ρ K†`.
pub fn apply_channel(kraus: &[Matrix], rho: &DensityMatrix) -> Result<DensityMatrix> {
    let n = check_kraus(kraus)?;
    if rho.n() != n {
        return Err(Error::DimensionMismatch(format!("{n}-qubit channel on {}-qubit state", rho.n())));
    }
    let d = rho.dim();
    let out = kraus.iter().fold(Matrix::zeros(d, d), |acc, k| acc + k * rho.matrix() * k.adjoint());
    DensityMatrix::new(out)
}

pub fn purify_channel(kraus: &[Matrix]) -> Result<Purification> {
    let n = check_kraus(kraus)?;
    let r = kraus.len();
    let env = if r <= 1 { 0 } else { (r - 1).ilog2() as usize + 1 };
    check_cap(n + env)?;
    let d = 1usize << n;
    let e = 1usize << env;
    let total = d * e;
    // isometry columns: input |i⟩|0⟩ ↦ Σ_k K_k|i⟩|k⟩
    let columns: Vec<Vec<C64>> = (0..d)
        .map(|i| {
            let mut col = vec![C64::default(); total];
            for (k, op) in kraus.iter().enumerate() {
                for a in 0..d {
                    col[a * e + k] = op[(a, i)];
                }
            }
            col
        })
        .collect();
    let completed = UnitaryMatrix::complete(n + env, &columns)?;
    let w = completed.matrix();
    let mut data = Matrix::zeros(total, total);
    let mut extra = d;
    for col in 0..total {
        let source = if col % e == 0 {
            col / e
        } else {
            extra += 1;
            extra - 1
        };
        data.set_column(col, &w.column(source));
    }
    Ok(Purification { dilation: UnitaryMatrix::new(data)?, system_qubits: n, env_qubits: env })
}

/// `Tr_env(U (ρ ⊗ |0⟩⟨0|) U†)`.
pub fn dilated_output(p: &Purification, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let joint = tensor(rho, &DensityMatrix::zero(p.env_qubits))?;
    let out = joint.conjugate(&p.dilation)?;
    partial_trace(&out, &QubitSet::all(p.system_qubits))
}

/// Largest trace distance between the channel and the traced dilation over
/// all basis states and `samples` random mixed states.
pub fn check_purification<R: Rng + ?Sized>(
    kraus: &[Matrix],
    p: &Purification,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let n = p.system_qubits;
    let mut inputs: Vec<DensityMatrix> = (0..1usize << n).map(|i| DensityMatrix::basis(n, i)).collect();
    for s in 0..samples {
        inputs.push(if s % 2 == 0 {
            StateVector::random(n, rng).to_density()
        } else {
            DensityMatrix::random(n, 1 << n, rng)
        });
    }
    let mut worst: f64 = 0.0;
    for rho in &inputs {
        let expected = apply_channel(kraus, rho)?;
        let got = dilated_output(p, rho)?;
        worst = worst.max(trace_distance(&expected, &got)?);
    }
    Ok(worst)
}

fn m2(rows: [[f64; 2]; 2]) -> Matrix {
    Matrix::from_fn(2, 2, |i, j| C64::new(rows[i][j], 0.0))
}

/// The fixed five-channel suite: identity, depolarizing, correlated
/// dephasing (two qubits), amplitude damping and a noisy classical readout.
pub fn channel_suite() -> Vec<(&'static str, Vec<Matrix>)> {
    let id = m2([[1.0, 0.0], [0.0, 1.0]]);
    let x = m2([[0.0, 1.0], [1.0, 0.0]]);
    let z = m2([[1.0, 0.0], [0.0, -1.0]]);
    let y = Matrix::from_row_slice(2, 2, &[C64::default(), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::default()]);
    let half = C64::new(0.5, 0.0);
    let depolarizing = vec![&id * half, &x * half, &y * half, &z * half];

    let p: f64 = 0.3;
    let dephasing = vec![
        id.kronecker(&id) * C64::new((1.0 - p).sqrt(), 0.0),
        z.kronecker(&z) * C64::new(p.sqrt(), 0.0),
    ];

    let gamma: f64 = 0.35;
    let damping = vec![
        m2([[1.0, 0.0], [0.0, (1.0 - gamma).sqrt()]]),
        m2([[0.0, gamma.sqrt()], [0.0, 0.0]]),
    ];

    let eps: f64 = 0.1;
    let (keep, flip) = ((1.0 - eps).sqrt(), eps.sqrt());
    let readout = vec![
        m2([[keep, 0.0], [0.0, 0.0]]),
        m2([[0.0, 0.0], [0.0, keep]]),
        m2([[0.0, 0.0], [flip, 0.0]]),
        m2([[0.0, flip], [0.0, 0.0]]),
    ];

    vec![
        ("identity", vec![id]),
        ("depolarizing", depolarizing),
        ("dephasing", dephasing),
        ("amplitude damping", damping),
        ("classical readout", readout),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_channel_has_trivial_dilation() {
        let (_, kraus) = &channel_suite()[0];
        let p = purify_channel(kraus).unwrap();
        assert_eq!(p.env_qubits, 0);
        assert_eq!(p.dilation, UnitaryMatrix::identity(1));
        let d = check_purification(kraus, &p, 4, &mut crate::seeded_rng(1)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn suite_recovers_every_channel() {
        let mut rng = crate::seeded_rng(2);
        for (name, kraus) in channel_suite() {
            let p = purify_channel(&kraus).unwrap();
            let d = check_purification(&kraus, &p, 20, &mut rng).unwrap();
            assert!(d <= 1e-9, "{name}: {d}");
        }
    }

    #[test]
    fn wrong_dilation_is_detected() {
        let suite = channel_suite();
        let (_, depolarizing) = &suite[1];
        let (_, readout) = &suite[4];
        let wrong = purify_channel(depolarizing).unwrap();
        assert_eq!(wrong.env_qubits, purify_channel(readout).unwrap().env_qubits);
        let d = check_purification(readout, &wrong, 4, &mut crate::seeded_rng(3)).unwrap();
        assert!(d > 0.1, "{d}");
    }

    #[test]
    fn depolarizing_outputs_maximally_mixed() {
        let (_, kraus) = &channel_suite()[1];
        let p = purify_channel(kraus).unwrap();
        assert_eq!(p.env_qubits, 2);
        for i in 0..2 {
            let out = dilated_output(&p, &DensityMatrix::basis(1, i)).unwrap();
            assert!(out.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-12);
        }
    }

    #[test]
    fn readout_outputs_are_diagonal() {
        let (_, kraus) = &channel_suite()[4];
        let p = purify_channel(kraus).unwrap();
        let plus = StateVector::plus().to_density();
        let out = dilated_output(&p, &plus).unwrap();
        assert!(out.get(0, 1).norm() < 1e-12);
        let out = dilated_output(&p, &DensityMatrix::zero(1)).unwrap();
        assert!((out.get(0, 0).re - 0.9).abs() < 1e-12);
    }

    #[test]
    fn env_zero_columns_stack_kraus() {
        let (_, kraus) = &channel_suite()[3];
        let p = purify_channel(kraus).unwrap();
        let u = p.dilation.matrix();
        for (k, op) in kraus.iter().enumerate() {
            for a in 0..2 {
                for i in 0..2 {
                    assert!((u[(a * 2 + k, i * 2)] - op[(a, i)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let kraus = vec![m2([[1.0, 0.0], [0.0, 0.5]])];
        assert!(matches!(purify_channel(&kraus), Err(Error::NotTracePreserving(_))));
        let big = vec![Matrix::identity(8, 8)];
        assert!(matches!(purify_channel(&big), Err(Error::Unsupported(_))));
    }
}
