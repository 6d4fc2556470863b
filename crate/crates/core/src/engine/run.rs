use std::sync::atomic::{AtomicUsize, Ordering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use super::protocol::{validate_protocol, Action, ProtocolStep, RegisterLayout};
use super::sparse::{read_bits, Index, SparseDensity, SparseState};
use crate::par::Exec;
use crate::qmath::{DensityMatrix, Matrix, C64, TOLERANCE, ZERO_PROBABILITY};
use crate::{Error, Result};

pub const DEFAULT_BRANCH_CAP: usize = 1 << 16;

/// Largest coin register expanded into explicit branches.
const MAX_COIN_BRANCH_BITS: usize = 24;

/// Global state before the first step.
#[derive(Clone, Debug)]
pub enum InitialState {
    /// `|0⟩` everywhere except the coin register, which is `𝕀/2^c`.
    CoinModel,
    /// Weighted pure states over the whole layout.
    Ensemble(Vec<(f64, SparseState)>),
    /// Dense global state, split into its eigenvectors.
    Dense(DensityMatrix),
}

impl From<DensityMatrix> for InitialState {
    fn from(rho: DensityMatrix) -> Self {
        InitialState::Dense(rho)
    }
}

impl InitialState {
    /// The state as weighted pure branches.
    pub fn branches(&self, layout: &RegisterLayout) -> Result<Vec<(f64, SparseState)>> {
        let n = layout.total();
        match self {
            InitialState::CoinModel => {
                let c = layout.v_coins;
                if c > MAX_COIN_BRANCH_BITS {
                    return Err(Error::BranchCap { count: 1u128 << c, cap: 1 << MAX_COIN_BRANCH_BITS });
                }
                let w = 1.0 / (1u64 << c) as f64;
                (0..1usize << c)
                    .map(|x| Ok((w, SparseState::basis(n, coin_index(layout, x as Index))?)))
                    .collect()
            }
            InitialState::Ensemble(parts) => {
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                if (total - 1.0).abs() > TOLERANCE || parts.iter().any(|(w, _)| *w < 0.0) {
                    return Err(Error::WeightSum(total));
                }
                if let Some((_, s)) = parts.iter().find(|(_, s)| s.n() != n) {
                    return Err(Error::DimensionMismatch(format!("{}-qubit branch for {n}-qubit layout", s.n())));
                }
                Ok(parts.clone())
            }
            InitialState::Dense(rho) => {
                if rho.n() != n {
                    return Err(Error::DimensionMismatch(format!("{}-qubit state for {n}-qubit layout", rho.n())));
                }
                let eig = nalgebra::SymmetricEigen::new(rho.matrix().clone());
                let mut out = Vec::new();
                for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
                    if lambda <= 1e-13 {
                        continue;
                    }
                    let v = eig.eigenvectors.column(k);
                    let amps = v.iter().enumerate().map(|(i, a)| (i as Index, *a));
                    out.push((lambda, SparseState::from_amplitudes(n, amps)?));
                }
                Ok(out)
            }
        }
    }

    /// Draws one pure branch.
    pub fn sample<R: Rng + ?Sized>(&self, layout: &RegisterLayout, rng: &mut R) -> Result<SparseState> {
        match self {
            InitialState::CoinModel => {
                let bits: Vec<bool> = (0..layout.v_coins).map(|_| rng.random()).collect();
                let coins: Vec<usize> = (0..layout.v_coins).map(|i| layout.coin(i)).collect();
                SparseState::basis(layout.total(), write_coin_bits(layout, &coins, &bits))
            }
            _ => {
                let branches = self.branches(layout)?;
                let dist = WeightedIndex::new(branches.iter().map(|(w, _)| *w))
                    .map_err(|e| Error::InvalidState(e.to_string()))?;
                Ok(branches[dist.sample(rng)].1.clone())
            }
        }
    }
}

fn coin_index(layout: &RegisterLayout, x: Index) -> Index {
    let shift = layout.m + layout.w + layout.p;
    x << shift
}

fn write_coin_bits(layout: &RegisterLayout, coins: &[usize], bits: &[bool]) -> Index {
    super::sparse::write_bits(0, layout.total(), coins, bits)
}

/// `|0⟩⟨0|^{⊗workspace} ⊗ 𝕀/2^{coins}` as a dense matrix, workspace first.
pub fn coin_model_initial_state(workspace_qubits: usize, coin_qubits: usize) -> Result<DensityMatrix> {
    let n = workspace_qubits + coin_qubits;
    crate::qmath::check_cap(n)?;
    let d = 1usize << n;
    let w = 1.0 / (1u64 << coin_qubits) as f64;
    let m = Matrix::from_fn(d, d, |i, j| {
        if i == j && i < 1 << coin_qubits {
            C64::new(w, 0.0)
        } else {
            C64::default()
        }
    });
    DensityMatrix::new(m)
}

fn apply_action(state: &SparseState, action: &Action) -> Result<SparseState> {
    let n = state.n();
    state.map_linear(|i| action.image(n, i))
}

/// Applies a non-measuring action to a view or global state.
pub fn apply_action_to_density(rho: &SparseDensity, action: &Action) -> Result<SparseDensity> {
    let n = rho.n();
    action.validate(n)?;
    rho.conjugate_linear(|i| action.image(n, i))
}

/// A single sampled execution.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    /// `β₀ … β_T`, one per step boundary.
    pub states: Vec<SparseState>,
    /// Coin register value, when the initial branch fixes it.
    pub coins: Option<Vec<bool>>,
    /// Measurement outcomes in execution order.
    pub outcomes: Vec<Vec<bool>>,
    pub accept: bool,
}

pub fn run_protocol<R: Rng + ?Sized>(
    steps: &[ProtocolStep],
    layout: &RegisterLayout,
    initial: &InitialState,
    rng: &mut R,
) -> Result<ProtocolRun> {
    validate_protocol(steps, layout)?;
    let mut state = initial.sample(layout, rng)?;
    let coins = read_coins(&state, layout);
    let mut states = vec![state.clone()];
    let mut outcomes = Vec::new();
    for step in steps {
        for action in &step.actions {
            state = match action {
                Action::Measure { targets } => {
                    let dist = state.outcome_distribution(targets.indices());
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut choice = None;
                    for (&outcome, &p) in &dist {
                        if p <= ZERO_PROBABILITY {
                            continue;
                        }
                        acc += p;
                        choice = Some(outcome);
                        if u < acc {
                            break;
                        }
                    }
                    let outcome = choice.ok_or_else(|| Error::InvalidState("zero state".into()))?;
                    outcomes.push(to_bits(outcome, targets.len()));
                    state.project(targets.indices(), outcome).1
                }
                _ => apply_action(&state, action)?,
            };
        }
        states.push(state.clone());
    }
    let accept = match layout.accept_qubit() {
        Some(q) => rng.random::<f64>() < state.probability_one(q),
        None => false,
    };
    Ok(ProtocolRun { states, coins, outcomes, accept })
}

fn to_bits(value: usize, width: usize) -> Vec<bool> {
    crate::qmath::to_bits(value, width)
}

fn read_coins(state: &SparseState, layout: &RegisterLayout) -> Option<Vec<bool>> {
    let coins: Vec<usize> = layout.coin_qubits().indices().to_vec();
    let mut values = state.amplitudes().map(|(i, _)| read_bits(i, state.n(), &coins));
    let first = values.next()?;
    values.all(|v| v == first).then_some(first)
}

/// The verifier's view `Tr_P β_j` of a sampled run.
pub fn verifier_view(run: &ProtocolRun, j: usize, layout: &RegisterLayout) -> Result<SparseDensity> {
    let state = run.states.get(j).ok_or_else(|| {
        Error::InvalidState(format!("round {j} of a run with {} states", run.states.len()))
    })?;
    Ok(state.reduce_to_prefix(layout.view_width()))
}

/// One branch of the exact expansion.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub weight: f64,
    pub states: Vec<SparseState>,
    pub outcomes: Vec<Vec<bool>>,
}

impl Trajectory {
    pub fn coins(&self, layout: &RegisterLayout) -> Option<Vec<bool>> {
        read_coins(&self.states[0], layout)
    }

    pub fn final_state(&self) -> &SparseState {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn accept_probability(&self, layout: &RegisterLayout) -> f64 {
        layout.accept_qubit().map_or(0.0, |q| self.final_state().probability_one(q))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    pub branch_cap: usize,
    pub exec: Exec,
}

impl Default for EnumOptions {
    fn default() -> Self {
        Self { branch_cap: DEFAULT_BRANCH_CAP, exec: Exec::default() }
    }
}

/// Every branch of a protocol: coins and measurements expanded with their
/// exact probabilities.
#[derive(Clone, Debug)]
pub struct RunFamily {
    pub layout: RegisterLayout,
    pub branches: Vec<Trajectory>,
    exec: Exec,
}

pub fn enumerate_runs(
    steps: &[ProtocolStep],
    layout: &RegisterLayout,
    initial: &InitialState,
    opts: &EnumOptions,
) -> Result<RunFamily> {
    validate_protocol(steps, layout)?;
    let roots = initial.branches(layout)?;
    let cap = opts.branch_cap;
    let count = AtomicUsize::new(roots.len());
    if roots.len() > cap {
        return Err(Error::BranchCap { count: roots.len() as u128, cap: cap as u128 });
    }
    let expanded = opts.exec.map_slice(&roots, |(w, s)| expand(steps, *w, s, &count, cap));
    let mut branches = Vec::new();
    for part in expanded {
        branches.extend(part?);
    }
    Ok(RunFamily { layout: *layout, branches, exec: opts.exec })
}

fn expand(
    steps: &[ProtocolStep],
    weight: f64,
    start: &SparseState,
    count: &AtomicUsize,
    cap: usize,
) -> Result<Vec<Trajectory>> {
    let mut live = vec![Trajectory { weight, states: vec![start.clone()], outcomes: Vec::new() }];
    for step in steps {
        let mut next_live = Vec::with_capacity(live.len());
        for t in live {
            let mut partial = vec![(t.weight, t.final_state().clone(), t.outcomes.clone())];
            for action in &step.actions {
                let mut next = Vec::with_capacity(partial.len());
                for (w, s, rec) in partial {
                    match action {
                        Action::Measure { targets } => {
                            let dist = s.outcome_distribution(targets.indices());
                            let mut forks = 0;
                            for (&outcome, &p) in &dist {
                                if p <= ZERO_PROBABILITY {
                                    continue;
                                }
                                let (_, post) = s.project(targets.indices(), outcome);
                                let mut rec = rec.clone();
                                rec.push(to_bits(outcome, targets.len()));
                                next.push((w * p, post, rec));
                                forks += 1;
                            }
                            if forks > 1 {
                                let total = count.fetch_add(forks - 1, Ordering::Relaxed) + forks - 1;
                                if total > cap {
                                    return Err(Error::BranchCap { count: total as u128, cap: cap as u128 });
                                }
                            }
                        }
                        _ => next.push((w, apply_action(&s, action)?, rec)),
                    }
                }
                partial = next;
            }
            for (w, s, rec) in partial {
                let mut states = t.states.clone();
                states.push(s);
                next_live.push(Trajectory { weight: w, states, outcomes: rec });
            }
        }
        live = next_live;
    }
    Ok(live)
}

impl RunFamily {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Number of recorded step boundaries (`steps + 1`).
    pub fn rounds(&self) -> usize {
        self.branches.first().map_or(0, |t| t.states.len())
    }

    /// `Σ_b w_b Tr_P |ψ_b⟩⟨ψ_b|` at step boundary `j`.
    pub fn view(&self, j: usize) -> Result<SparseDensity> {
        self.reduced(j, self.layout.view_width())
    }

    pub fn views(&self) -> Result<Vec<SparseDensity>> {
        (0..self.rounds()).map(|j| self.view(j)).collect()
    }

    /// The full global state at boundary `j`.
    pub fn global_state(&self, j: usize) -> Result<SparseDensity> {
        self.reduced(j, self.layout.total())
    }

    fn reduced(&self, j: usize, keep: usize) -> Result<SparseDensity> {
        if j >= self.rounds() {
            return Err(Error::InvalidState(format!("round {j} of {}", self.rounds())));
        }
        let parts = self.exec.map_slice(&self.branches, |t| t.states[j].reduce_to_prefix(keep));
        let mut out = SparseDensity::zeros(keep);
        for (t, part) in self.branches.iter().zip(&parts) {
            out.add_scaled(t.weight, part)?;
        }
        out.prune();
        Ok(out)
    }

    /// The branches satisfying `pred`, reweighted to total weight one.
    pub fn filtered<F>(&self, pred: F) -> Result<RunFamily>
    where
        F: Fn(&Trajectory) -> bool,
    {
        let branches: Vec<Trajectory> = self.branches.iter().filter(|t| pred(t)).cloned().collect();
        let total: f64 = branches.iter().map(|t| t.weight).sum();
        if total <= 0.0 {
            return Err(Error::InvalidState("conditioning on an event of probability zero".into()));
        }
        let branches = branches.into_iter().map(|t| Trajectory { weight: t.weight / total, ..t }).collect();
        Ok(RunFamily { layout: self.layout, branches, exec: self.exec })
    }

    /// Exact acceptance probability.
    pub fn acceptance(&self) -> f64 {
        self.branches.iter().map(|t| t.weight * t.accept_probability(&self.layout)).sum()
    }

    /// Total weight of branches whose final state satisfies `pred` on its
    /// (basis) indices; superposed branches count by squared amplitude.
    pub fn probability_where<F>(&self, pred: F) -> f64
    where
        F: Fn(Index) -> bool,
    {
        self.branches
            .iter()
            .map(|t| {
                let mass: f64 = t.final_state().amplitudes().filter(|(i, _)| pred(*i)).map(|(_, a)| a.norm_sqr()).sum();
                t.weight * mass
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcceptanceMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AcceptanceEstimate {
    pub probability: f64,
    /// Lower end of the 95% interval (equal to `probability` when exact).
    pub lower: f64,
    pub upper: f64,
    /// Number of Monte Carlo trials, `None` for exact results.
    pub trials: Option<usize>,
}

pub fn estimate_acceptance(
    steps: &[ProtocolStep],
    layout: &RegisterLayout,
    initial: &InitialState,
    mode: AcceptanceMode,
    opts: &EnumOptions,
) -> Result<AcceptanceEstimate> {
    match mode {
        AcceptanceMode::Exact => {
            let p = enumerate_runs(steps, layout, initial, opts)?.acceptance();
            Ok(AcceptanceEstimate { probability: p, lower: p, upper: p, trials: None })
        }
        AcceptanceMode::MonteCarlo { trials, seed } => {
            validate_protocol(steps, layout)?;
            let results = opts.exec.map(trials, |i| {
                let mut rng = crate::trial_rng(seed, i as u64);
                run_protocol(steps, layout, initial, &mut rng).map(|r| r.accept)
            });
            let mut accepted = 0;
            for r in results {
                accepted += usize::from(r?);
            }
            let (lower, upper) = clopper_pearson(accepted, trials, 0.95);
            Ok(AcceptanceEstimate {
                probability: accepted as f64 / trials.max(1) as f64,
                lower,
                upper,
                trials: Some(trials),
            })
        }
    }
}

/// Exact binomial confidence interval for `successes` out of `trials`.
pub fn clopper_pearson(successes: usize, trials: usize, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - confidence;
    let (x, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).expect("positive shape").inverse_cdf(alpha / 2.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).expect("positive shape").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

/// Reads the coin bits of every basis index carried by a view.
pub fn coin_marginal(view: &SparseDensity, layout: &RegisterLayout) -> Result<SparseDensity> {
    view.reduce(&layout.coin_qubits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::protocol::Actor;
    use crate::qmath::{QubitSet, UnitaryMatrix};

    #[test]
    fn empty_protocol_keeps_initial_state() {
        let layout = RegisterLayout::new(1, 0, 1, 1);
        let initial = InitialState::Dense(DensityMatrix::zero(3));
        let run = run_protocol(&[], &layout, &initial, &mut crate::seeded_rng(0)).unwrap();
        assert_eq!(run.states.len(), 1);
        assert_eq!(run.states[0].as_basis(), Some(0));
        assert!(!run.accept);
    }

    #[test]
    fn verifier_x_accepts() {
        let layout = RegisterLayout::new(1, 0, 0, 0);
        let steps = [ProtocolStep::verifier("flip", vec![Action::unitary(&[1], UnitaryMatrix::x()).unwrap()])];
        let initial = InitialState::Dense(DensityMatrix::zero(1));
        let run = run_protocol(&steps, &layout, &initial, &mut crate::seeded_rng(0)).unwrap();
        assert!(run.accept);
        let est = estimate_acceptance(&steps, &layout, &initial, AcceptanceMode::Exact, &EnumOptions::default()).unwrap();
        assert_eq!(est.probability, 1.0);
    }

    #[test]
    fn coin_model_state_examples() {
        let rho = coin_model_initial_state(1, 1).unwrap();
        let expected = DensityMatrix::diagonal(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(rho.max_abs_diff(&expected) < 1e-15);
        assert!(coin_model_initial_state(0, 1).unwrap().max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-15);
        assert!(coin_model_initial_state(1, 0).unwrap().max_abs_diff(&DensityMatrix::zero(1)) < 1e-15);
        // the sparse coin model agrees with the dense one
        let layout = RegisterLayout::new(1, 2, 0, 0);
        let family = enumerate_runs(&[], &layout, &InitialState::CoinModel, &EnumOptions::default()).unwrap();
        let dense = coin_model_initial_state(1, 2).unwrap();
        assert!(family.global_state(0).unwrap().to_dense().unwrap().max_abs_diff(&dense) < 1e-15);
    }

    #[test]
    fn views_of_product_and_bell_states() {
        let layout = RegisterLayout::new(1, 0, 0, 1);
        let bell = SparseState::from_state_vector(&crate::qmath::StateVector::bell());
        let family = enumerate_runs(&[], &layout, &InitialState::Ensemble(vec![(1.0, bell)]), &EnumOptions::default()).unwrap();
        let view = family.view(0).unwrap().to_dense().unwrap();
        assert!(view.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-15);

        let psi = crate::qmath::StateVector::plus().tensor(&crate::qmath::StateVector::basis(1, 1));
        let run = run_protocol(
            &[],
            &layout,
            &InitialState::Ensemble(vec![(1.0, SparseState::from_state_vector(&psi))]),
            &mut crate::seeded_rng(1),
        )
        .unwrap();
        let view = verifier_view(&run, 0, &layout).unwrap().to_dense().unwrap();
        assert!(view.max_abs_diff(&crate::qmath::StateVector::plus().to_density()) < 1e-15);
    }

    #[test]
    fn measurement_branches_and_sampling_agree() {
        let layout = RegisterLayout::new(1, 0, 1, 1);
        let steps = [
            ProtocolStep::verifier("send", vec![Action::unitary(&[2], UnitaryMatrix::h()).unwrap()]),
            ProtocolStep::prover(
                "measure",
                vec![Action::swap(&[2], &[3]).unwrap(), Action::measure(&[3]).unwrap(), Action::copy(&[3], &[2]).unwrap()],
            ),
            ProtocolStep::verifier("decide", vec![Action::copy(&[2], &[1]).unwrap()]),
        ];
        let initial = InitialState::Dense(DensityMatrix::zero(3));
        let family = enumerate_runs(&steps, &layout, &initial, &EnumOptions::default()).unwrap();
        assert_eq!(family.len(), 2);
        assert!((family.acceptance() - 0.5).abs() < 1e-12);
        let est = estimate_acceptance(
            &steps,
            &layout,
            &initial,
            AcceptanceMode::MonteCarlo { trials: 400, seed: 3 },
            &EnumOptions::default(),
        )
        .unwrap();
        assert!(est.lower <= 0.5 && 0.5 <= est.upper);
        let seq = estimate_acceptance(
            &steps,
            &layout,
            &initial,
            AcceptanceMode::MonteCarlo { trials: 400, seed: 3 },
            &EnumOptions { exec: Exec::Sequential, ..Default::default() },
        )
        .unwrap();
        assert_eq!(est, seq);
    }

    #[test]
    fn branch_cap_is_enforced() {
        let layout = RegisterLayout::new(0, 0, 0, 4);
        let h = UnitaryMatrix::h();
        let all_h = h.kron(&h).kron(&h).kron(&h);
        let steps = [ProtocolStep::prover(
            "spread",
            vec![Action::unitary(&[1, 2, 3, 4], all_h).unwrap(), Action::measure(&[1, 2, 3, 4]).unwrap()],
        )];
        let initial = InitialState::Dense(DensityMatrix::zero(4));
        let opts = EnumOptions { branch_cap: 8, ..Default::default() };
        assert!(matches!(enumerate_runs(&steps, &layout, &initial, &opts), Err(Error::BranchCap { .. })));
        assert_eq!(enumerate_runs(&steps, &layout, &initial, &EnumOptions::default()).unwrap().len(), 16);
    }

    #[test]
    fn view_composition_for_verifier_unitaries() {
        let layout = RegisterLayout::new(1, 1, 1, 1);
        let u = Action::controlled(&[2], &[3], vec![UnitaryMatrix::h(), UnitaryMatrix::y()]).unwrap();
        let steps = [
            ProtocolStep::prover("p", vec![Action::unitary(&[3, 4], UnitaryMatrix::h().kron(&UnitaryMatrix::h())).unwrap()]),
            ProtocolStep::verifier("v", vec![u.clone(), Action::unitary(&[1, 3], UnitaryMatrix::cnot()).unwrap()]),
        ];
        let family = enumerate_runs(&steps, &layout, &InitialState::CoinModel, &EnumOptions::default()).unwrap();
        let mut predicted = family.view(1).unwrap();
        for a in &steps[1].actions {
            predicted = apply_action_to_density(&predicted, a).unwrap();
        }
        assert!(predicted.max_abs_diff(&family.view(2).unwrap()) < 1e-14);
        assert_eq!(steps[1].actor, Actor::Verifier);
    }

    #[test]
    fn coin_persistence() {
        let layout = RegisterLayout::new(1, 2, 1, 1);
        let steps = [
            ProtocolStep::verifier(
                "prep",
                vec![Action::controlled(&[2, 3], &[4], vec![
                    UnitaryMatrix::identity(1),
                    UnitaryMatrix::h(),
                    UnitaryMatrix::x(),
                    UnitaryMatrix::y(),
                ])
                .unwrap()],
            ),
            ProtocolStep::prover("take", vec![Action::swap(&[4], &[5]).unwrap(), Action::measure(&[5]).unwrap()]),
        ];
        let family = enumerate_runs(&steps, &layout, &InitialState::CoinModel, &EnumOptions::default()).unwrap();
        for j in 0..family.rounds() {
            let coins = coin_marginal(&family.view(j).unwrap(), &layout).unwrap().to_dense().unwrap();
            assert!(coins.max_abs_diff(&DensityMatrix::maximally_mixed(2)) < 1e-15);
        }
        for t in &family.branches {
            let coins = t.coins(&layout).unwrap();
            for s in &t.states {
                for (i, _) in s.amplitudes() {
                    let bits: Vec<bool> = layout.coin_qubits().indices().iter().map(|&q| crate::engine::sparse::bit(i, layout.total(), q)).collect();
                    assert_eq!(bits, coins);
                }
            }
        }
        let _ = QubitSet::empty();
    }

    #[test]
    fn unitary_protocols_preserve_spectrum() {
        let layout = RegisterLayout::new(1, 1, 1, 1);
        let mut rng = crate::seeded_rng(8);
        let rho = DensityMatrix::random(4, 3, &mut rng);
        let steps = [
            ProtocolStep::verifier("v", vec![Action::unitary(&[1, 3], UnitaryMatrix::cnot()).unwrap()]),
            ProtocolStep::prover("p", vec![Action::unitary(&[3, 4], UnitaryMatrix::swap()).unwrap()]),
        ];
        let family = enumerate_runs(&steps, &layout, &InitialState::Dense(rho), &EnumOptions::default()).unwrap();
        let mut base = family.global_state(0).unwrap().eigenvalues().unwrap();
        base.retain(|l| *l > 1e-12);
        base.sort_by(f64::total_cmp);
        for j in 1..family.rounds() {
            let mut ev = family.global_state(j).unwrap().eigenvalues().unwrap();
            ev.retain(|l| *l > 1e-12);
            ev.sort_by(f64::total_cmp);
            assert_eq!(ev.len(), base.len());
            for (a, b) in ev.iter().zip(&base) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn clopper_pearson_bounds() {
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.30849).abs() < 1e-4);
        let (lo, hi) = clopper_pearson(5, 10, 0.95);
        assert!((lo - 0.18709).abs() < 1e-4 && (hi - 0.81291).abs() < 1e-4);
    }
}
