use serde::Serialize;

use super::protocol::{ProtocolStep, RegisterLayout};
use super::run::{enumerate_runs, EnumOptions, InitialState};
use super::sparse::SparseDensity;
use crate::Result;

/// Round-indexed source of simulated views.
pub trait Simulator {
    fn rounds(&self) -> usize;
    fn view(&self, round: usize) -> Result<SparseDensity>;
}

/// A simulator that replays precomputed views.
#[derive(Clone, Debug)]
pub struct FixedViews(pub Vec<SparseDensity>);

impl Simulator for FixedViews {
    fn rounds(&self) -> usize {
        self.0.len()
    }

    fn view(&self, round: usize) -> Result<SparseDensity> {
        self.0
            .get(round)
            .cloned()
            .ok_or_else(|| crate::Error::InvalidState(format!("no simulated round {round}")))
    }
}

/// A simulator given as its own protocol: the views are those of an exact
/// run of `steps` from `initial`. Typically the verifier's steps are kept and
/// the prover is replaced by steps that read a pre-sampled transcript from
/// its private register.
#[derive(Clone, Debug)]
pub struct ProtocolSimulator {
    views: Vec<SparseDensity>,
}

impl ProtocolSimulator {
    pub fn new(
        steps: &[ProtocolStep],
        layout: &RegisterLayout,
        initial: &InitialState,
        opts: &EnumOptions,
    ) -> Result<Self> {
        Ok(Self { views: enumerate_runs(steps, layout, initial, opts)?.views()? })
    }
}

impl Simulator for ProtocolSimulator {
    fn rounds(&self) -> usize {
        self.views.len()
    }

    fn view(&self, round: usize) -> Result<SparseDensity> {
        self.views
            .get(round)
            .cloned()
            .ok_or_else(|| crate::Error::InvalidState(format!("no simulated round {round}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundAudit {
    pub round: usize,
    pub distance: Option<f64>,
    /// Why the round could not be compared.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub rounds: Vec<RoundAudit>,
    pub tolerance: f64,
}

impl AuditReport {
    /// Largest distance over the comparable rounds.
    pub fn max_distance(&self) -> f64 {
        self.rounds.iter().filter_map(|r| r.distance).fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.rounds.iter().all(|r| r.distance.is_some_and(|d| d <= self.tolerance))
    }
}

/// Trace distance between each real view and the simulator's output for the
/// same round. A shape mismatch fails that round only.
pub fn zk_audit(real: &[SparseDensity], simulator: &dyn Simulator, tolerance: f64) -> AuditReport {
    let mut rounds = Vec::with_capacity(real.len());
    for (j, rho) in real.iter().enumerate() {
        let result = if j >= simulator.rounds() {
            Err(format!("simulator has only {} rounds", simulator.rounds()))
        } else {
            simulator
                .view(j)
                .and_then(|sigma| rho.trace_distance(&sigma))
                .map_err(|e| e.to_string())
        };
        rounds.push(match result {
            Ok(d) => RoundAudit { round: j, distance: Some(d), error: None },
            Err(e) => RoundAudit { round: j, distance: None, error: Some(e) },
        });
    }
    AuditReport { rounds, tolerance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::DensityMatrix;

    #[test]
    fn identical_and_mixed_views() {
        let mixed = SparseDensity::from_dense(&DensityMatrix::maximally_mixed(2));
        let report = zk_audit(std::slice::from_ref(&mixed), &FixedViews(vec![mixed.clone()]), 1e-9);
        assert!(report.pass());
        assert_eq!(report.max_distance(), 0.0);
    }

    #[test]
    fn mismatches_fail_per_round() {
        let a = SparseDensity::from_dense(&DensityMatrix::zero(1));
        let b = SparseDensity::from_dense(&DensityMatrix::zero(2));
        let report = zk_audit(&[a.clone(), a.clone(), a.clone()], &FixedViews(vec![a.clone(), b]), 1e-9);
        assert_eq!(report.rounds[0].distance, Some(0.0));
        assert!(report.rounds[1].error.is_some());
        assert!(report.rounds[2].error.is_some());
        assert!(!report.pass());
    }
}
