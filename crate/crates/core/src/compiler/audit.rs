//! Zero-knowledge audit for compiled protocols too large to enumerate.
//!
//! Given the prover's hidden bits `r`, the share layers of different hidden
//! bits are independent, and a layer that is never revealed is independent
//! of `r`. The distance between real and simulated views at any boundary is
//! therefore at most the distance between the classical transcript prefixes
//! plus `m` times the largest per-bit distance, where the per-bit distances
//! come from exact runs of a one-bit probe protocol conditioned on `r`.

use std::sync::Arc;

use serde::Serialize;

use super::{
    compile, compile_simulator, compile_with, prefix_marginal, RevealBehavior, total_variation, ClassicalHBProtocol,
    ClassicalSimulator, Round, Transcript,
};
use crate::engine::{zk_audit, EnumOptions, FixedViews};
use crate::Result;

/// Per-bit distances of the probe protocol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub k: usize,
    /// Largest distance over boundaries and `r` for a revealed bit.
    pub revealed: f64,
    /// Same for a bit that is never revealed.
    pub unrevealed: f64,
    pub boundaries: usize,
    /// Acceptance of the one-bit reveal with an honest prover.
    pub honest_acceptance: f64,
    /// Acceptance when the prover opens the opposite value.
    pub lying_acceptance: f64,
}

impl ProbeReport {
    pub fn worst(&self) -> f64 {
        self.revealed.max(self.unrevealed)
    }
}

fn probe(k: usize, reveal: bool) -> ClassicalHBProtocol {
    let mut rounds = vec![Round::Verifier { width: 1, message: Arc::new(|_, _| vec![false]) }];
    if reveal {
        rounds.push(Round::Reveal { count: 1, select: Arc::new(|_| vec![0]) });
    }
    ClassicalHBProtocol {
        name: "probe".into(),
        hidden_bits: 1,
        k,
        verifier_coins: 0,
        prover_choices: 1,
        rounds,
        accept: Arc::new(|_| true),
    }
}

fn probe_distance(k: usize, reveal: bool, opts: &EnumOptions) -> Result<(f64, usize)> {
    let p = probe(k, reveal);
    let real = compile(&p)?;
    let family = real.enumerate(opts)?;
    let mut worst: f64 = 0.0;
    let mut boundaries = 0;
    for r in [false, true] {
        let conditioned = family.filtered(|t| real.hidden_bit(t, 0) == Some(r))?;
        let mut messages = vec![vec![false]];
        if reveal {
            messages.push(vec![r]);
        }
        let transcript = Transcript { coins: vec![], messages };
        let sim = compile_simulator(&ClassicalSimulator::new(move || vec![(1.0, transcript.clone())]), &p)?;
        let sim_views = FixedViews(sim.enumerate(opts)?.views()?);
        let report = zk_audit(&conditioned.views()?, &sim_views, f64::INFINITY);
        if let Some(bad) = report.rounds.iter().find_map(|r| r.error.clone()) {
            return Err(crate::Error::InvalidState(bad));
        }
        worst = worst.max(report.max_distance());
        boundaries = report.rounds.len();
    }
    Ok((worst, boundaries))
}

/// Exact per-bit distances at security parameter `k`.
pub fn hidden_bit_probe(k: usize, opts: &EnumOptions) -> Result<ProbeReport> {
    let (revealed, boundaries) = probe_distance(k, true, opts)?;
    let (unrevealed, _) = probe_distance(k, false, opts)?;
    let p = probe(k, true);
    let honest_acceptance = compile(&p)?.enumerate(opts)?.acceptance();
    let lying_acceptance = compile_with(&p, RevealBehavior::FlipFirstShare)?.enumerate(opts)?.acceptance();
    Ok(ProbeReport { k, revealed, unrevealed, boundaries, honest_acceptance, lying_acceptance })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactoredAudit {
    /// Classical distance of the transcript prefixes after `j` rounds,
    /// `j = 0..=rounds`.
    pub classical: Vec<f64>,
    pub probe: ProbeReport,
    /// `classical[j] + m · probe.worst()`.
    pub bounds: Vec<f64>,
    pub tolerance: f64,
}

impl FactoredAudit {
    pub fn max_bound(&self) -> f64 {
        self.bounds.iter().copied().fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.max_bound() <= self.tolerance
    }
}

/// Compiled acceptance of the honest prover, factored as the classical
/// acceptance times the per-bit reveal acceptance for every revealed bit.
pub fn factored_completeness(p: &ClassicalHBProtocol, probe: &ProbeReport) -> Result<f64> {
    let classical = p.classical_completeness()?;
    let classical = *classical.numer() as f64 / *classical.denom() as f64;
    Ok(classical * probe.honest_acceptance.powi(p.reveal_count() as i32))
}

pub fn factored_audit(
    p: &ClassicalHBProtocol,
    s: &ClassicalSimulator,
    tolerance: f64,
    opts: &EnumOptions,
) -> Result<FactoredAudit> {
    let real = p.transcript_distribution()?;
    let sim = (s.distribution)();
    let classical: Vec<f64> = (0..=p.rounds.len())
        .map(|j| total_variation(&prefix_marginal(&real, j), &prefix_marginal(&sim, j)))
        .collect();
    let probe = hidden_bit_probe(p.k, opts)?;
    let layers = p.hidden_bits as f64 * probe.worst();
    let bounds = classical.iter().map(|c| c + layers).collect();
    Ok(FactoredAudit { classical, probe, bounds, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{echo_protocol, echo_simulator};

    #[test]
    fn probe_is_exactly_hiding() {
        let opts = EnumOptions::default();
        for k in 1..=3 {
            let r = hidden_bit_probe(k, &opts).unwrap();
            assert!(r.worst() <= 1e-12, "{r:?}");
            assert!(r.boundaries >= 5);
            assert!((r.honest_acceptance - 1.0).abs() < 1e-12);
            assert!((r.lying_acceptance - 0.5f64.powi(k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_detects_a_leaky_simulator() {
        // conditioning on r but simulating the opposite value must show up
        let opts = EnumOptions::default();
        let p = probe(1, true);
        let real = compile(&p).unwrap();
        let family = real.enumerate(&opts).unwrap();
        let conditioned = family.filtered(|t| real.hidden_bit(t, 0) == Some(false)).unwrap();
        let wrong = Transcript { coins: vec![], messages: vec![vec![false], vec![true]] };
        let sim = compile_simulator(&ClassicalSimulator::new(move || vec![(1.0, wrong.clone())]), &p).unwrap();
        let report = zk_audit(&conditioned.views().unwrap(), &FixedViews(sim.enumerate(&opts).unwrap().views().unwrap()), 1e-9);
        assert!(!report.pass());
        assert!((report.max_distance() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn factored_bound_matches_direct_audit_on_echo() {
        let opts = EnumOptions::default();
        let p = echo_protocol(1);
        let f = factored_audit(&p, &echo_simulator(), 1e-9, &opts).unwrap();
        assert!(f.pass(), "{f:?}");
        let real = compile(&p).unwrap().enumerate(&opts).unwrap();
        let sim = compile_simulator(&echo_simulator(), &p).unwrap().simulator(&opts).unwrap();
        let direct = zk_audit(&real.views().unwrap(), &sim, 1e-9);
        assert!(direct.pass(), "{direct:?}");
        assert!(direct.max_distance() <= f.max_bound() + 1e-12);
        let direct_acc = compile(&p).unwrap().enumerate(&opts).unwrap().acceptance();
        assert!((factored_completeness(&p, &f.probe).unwrap() - direct_acc).abs() < 1e-12);
    }

    #[test]
    fn factored_audit_sees_classical_leaks() {
        let p = echo_protocol(1);
        // answer always 0: distinguishable at the prover round
        let bad = ClassicalSimulator::new(|| {
            [false, true]
                .into_iter()
                .map(|c| (0.5, Transcript { coins: vec![c], messages: vec![vec![c], vec![false], vec![c]] }))
                .collect()
        });
        let f = factored_audit(&p, &bad, 1e-9, &EnumOptions::default()).unwrap();
        assert!(!f.pass());
        assert!((f.classical[2] - 0.5).abs() < 1e-12);
        assert_eq!(f.classical[1], 0.0);
    }
}
