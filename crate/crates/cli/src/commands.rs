use num_rational::Rational64;

use coinzk::compiler::coloring::{
    all_lying_strategy, find_coloring, optimal_cheating_strategy, soundness_case_report, three_coloring_hb_protocol,
    three_coloring_simulator, ColoringStrategy, Graph,
};
use coinzk::compiler::{compile, compile_with, factored_audit, factored_completeness, RevealBehavior};
use coinzk::engine::{check_purification, clopper_pearson, purify_channel, AcceptanceMode, EnumOptions};
use coinzk::hiddenbit::{
    binding_attack_value, commitment_hiding_distance, hiding_audit, opening_catch_probability,
    prover_conditional_state, r_marginal_zero, HiddenBitBundle, RevealTarget, MAX_EXHAUSTIVE_K,
};
use coinzk::lcdm::{check_instance, product_strategy_suite, run_lcdm, view_distances, LcdmMode, ProverStrategy};
use coinzk::qmath::{DensityMatrix, Matrix, StateVector};
use coinzk::schema::{LoadedInstance, Promise};

use crate::{Check, CliError, Expect, RunReport};

/// Tolerance for values that are exactly 1 up to floating-point summation.
const UNIT_TOLERANCE: f64 = 1e-12;

fn max_entry_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn pow2_inv(k: usize) -> Rational64 {
    Rational64::new(1, 1 << k)
}

pub fn hiddenbits(r: &mut RunReport, k: usize, exhaustive: bool, trials: usize) -> Result<(), CliError> {
    if k == 0 || k > MAX_EXHAUSTIVE_K {
        return Err(coinzk::Error::Unsupported(format!(
            "hidden-bit analyses are exact and need 1 <= k <= {MAX_EXHAUSTIVE_K}, got k = {k}"
        ))
        .into());
    }
    let rho0 = prover_conditional_state(false);
    let rho1 = prover_conditional_state(true);
    let mixed = DensityMatrix::maximally_mixed(2);
    r.check(Check::at_most("prover_state_b0_vs_b1", max_entry_diff(&rho0, &rho1), 1e-12));
    r.check(Check::at_most(
        "prover_state_vs_maximally_mixed",
        max_entry_diff(&rho0, &mixed).max(max_entry_diff(&rho1, &mixed)),
        1e-12,
    ));
    r.check(Check::exact("hiding_audit", hiding_audit(k)?, Rational64::from_integer(0)));
    r.check(Check::exact("r_marginal_zero", r_marginal_zero(k)?, Rational64::new(1, 2)));
    r.check(Check::exact("commitment_hiding_distance", commitment_hiding_distance(k)?, Rational64::from_integer(0)));

    let mut honest = 0;
    let mut lying = 0;
    for i in 0..trials {
        let mut rng = coinzk::trial_rng(r.seed, i as u64);
        let b = HiddenBitBundle::generate(k, &mut rng)?;
        honest += usize::from(b.verify(&b.honest_reveal()) == Some(b.r));
        lying += usize::from(b.verify(&b.flipped_reveal()) == Some(!b.r));
    }
    let target = 0.5f64.powi(k as i32);
    let (lo, hi) = clopper_pearson(lying, trials, 0.99);
    r.check(Check::at_least("sampled_honest_reveal_rate", honest as f64 / trials.max(1) as f64, 1.0));
    r.measure("sampled_lying_pass_rate", lying as f64 / trials.max(1) as f64);
    r.check(Check::within("binding_target_in_sampled_interval", target, lo, hi));

    if exhaustive {
        r.check(Check::exact("binding_attack_value", binding_attack_value(k, RevealTarget::Flipped)?, pow2_inv(k)));
        r.check(Check::exact(
            "honest_reveal_value",
            binding_attack_value(k, RevealTarget::Honest)?,
            Rational64::from_integer(1),
        ));
        r.check(Check::exact(
            "opening_catch_probability",
            opening_catch_probability(k)?,
            Rational64::from_integer(1) - pow2_inv(k),
        ));
    } else {
        r.note("exhaustive strategy enumeration skipped (pass --exhaustive)");
    }
    Ok(())
}

fn parse_exact(s: &str) -> Rational64 {
    s.parse().expect("report holds a rational")
}

fn soundness_checks(r: &mut RunReport, label: &str, g: &Graph, k: usize, s: &ColoringStrategy) -> Result<(), CliError> {
    let rep = soundness_case_report(g, k, s)?;
    let [honest, lying, total] = rep.exact.each_ref().map(|e| parse_exact(e));
    let classical = coinzk::compiler::coloring::classical_soundness(g);
    let slack = pow2_inv(k);
    r.check(Check::exact_at_most(format!("{label}_case_honest"), honest, classical));
    r.check(Check::exact_at_most(format!("{label}_case_lying"), lying, slack));
    r.check(Check::exact_at_most(
        format!("{label}_total"),
        total,
        (classical + slack).min(Rational64::from_integer(1)),
    ));
    Ok(())
}

pub fn compile_demo(r: &mut RunReport, g: &Graph, k: usize, expect: Option<Expect>, trials: usize) -> Result<(), CliError> {
    let colourable = find_coloring(g).is_some();
    r.note(format!(
        "{} vertices, {} edges, {}",
        g.vertices,
        g.edges.len(),
        if colourable { "3-colourable" } else { "not 3-colourable" }
    ));
    if let Some(e) = expect {
        let ok = (e == Expect::Yes) == colourable;
        r.check(Check::holds("expectation_matches_graph", ok));
        if !ok {
            r.note(format!(
                "mismatch: --expect {} but the graph is {}",
                if e == Expect::Yes { "yes" } else { "no" },
                if colourable { "3-colourable" } else { "not 3-colourable" }
            ));
        }
    }
    let p = three_coloring_hb_protocol(g, k)?;
    let opts = EnumOptions::default();
    let classical = coinzk::compiler::coloring::classical_soundness(g);
    r.measure_exact("classical_soundness", classical);

    if colourable {
        r.check(Check::exact("classical_completeness", p.classical_completeness()?, Rational64::from_integer(1)));
        let audit = factored_audit(&p, &three_coloring_simulator(g), 1e-9, &opts)?;
        r.check(Check::at_least("completeness", factored_completeness(&p, &audit.probe)?, 1.0 - UNIT_TOLERANCE));
        r.check(Check::at_most("zk_audit_max_distance", audit.max_bound(), 1e-9));
        for (j, b) in audit.bounds.iter().enumerate() {
            r.measure(format!("zk_audit_bound_after_round_{j}"), *b);
        }
        r.measure("hidden_bit_probe_revealed", audit.probe.revealed);
        r.measure("hidden_bit_probe_unrevealed", audit.probe.unrevealed);
    } else {
        let (best, value) = optimal_cheating_strategy(g, k)?;
        r.measure_exact("optimal_cheating_acceptance", value);
        soundness_checks(r, "optimal_cheater", g, k, &best)?;
        soundness_checks(r, "all_lying", g, k, &all_lying_strategy(g))?;
    }

    let behavior = if colourable { RevealBehavior::Honest } else { RevealBehavior::FlipFirstShare };
    match compile_with(&p, behavior) {
        Ok(c) => {
            // coin control is a property of the verifier steps, which do not
            // depend on the prover's behaviour
            let honest = compile(&p)?;
            let violations = honest.coin_violations();
            for (label, why) in &violations {
                r.note(format!("coin-control violation in {label}: {why}"));
            }
            r.check(Check::holds("verifier_steps_coin_controlled", violations.is_empty()));
            r.measure("compiled_qubits", c.layout.total() as f64);
            r.measure("compiled_steps", c.steps.len() as f64);
            let est = c.acceptance(AcceptanceMode::MonteCarlo { trials, seed: r.seed }, &opts)?;
            if colourable {
                r.check(Check::at_least("compiled_mc_acceptance", est.probability, 1.0));
            } else {
                r.measure("compiled_lying_mc_acceptance", est.probability);
                r.measure("compiled_lying_mc_lower", est.lower);
                r.measure("compiled_lying_mc_upper", est.upper);
            }
        }
        Err(coinzk::Error::Unsupported(msg)) => {
            r.note(format!("compiled circuit not built ({msg}); coin-control and Monte Carlo checks skipped"));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn lcdm(
    r: &mut RunReport,
    loaded: &LoadedInstance,
    repetitions: usize,
    k_hb: usize,
    mode: LcdmMode,
) -> Result<(), CliError> {
    let inst = &loaded.instance;
    let seed = r.seed;
    r.note(format!(
        "n = {}, t = {}, {} pair{}, acceptance threshold {}",
        inst.n,
        inst.t,
        inst.pairs.len(),
        if inst.pairs.len() == 1 { "" } else { "s" },
        inst.threshold()
    ));
    let yes = loaded.promise == Some(Promise::Yes);

    if let Some(w) = &loaded.witness {
        let worst = check_instance(inst, w)?.into_iter().map(|(_, d)| d).fold(0.0, f64::max);
        if yes {
            r.check(Check::at_most("witness_max_pair_distance", worst, inst.threshold()));
        } else {
            r.measure("witness_max_pair_distance", worst);
        }
        let run = run_lcdm(inst, &ProverStrategy::honest(w.clone()), repetitions, k_hb, seed, mode)?;
        if yes {
            r.check(Check::at_least("honest_acceptance", run.acceptance.probability, 1.0 - UNIT_TOLERANCE));
        } else {
            r.measure("honest_acceptance", run.acceptance.probability);
        }
        if run.acceptance.trials.is_some() {
            r.measure("honest_acceptance_lower", run.acceptance.lower);
            r.measure("honest_acceptance_upper", run.acceptance.upper);
        }
        r.measure("sample_run_accepted", if run.sample_accepted { 1.0 } else { 0.0 });
        let v = view_distances(inst, w)?;
        r.check(Check::at_most("view_distance_first", v.first, 1e-12));
        r.check(Check::at_most("view_distance_second", v.second, 1e-9));
    }

    if loaded.promise == Some(Promise::No) {
        let extras: Vec<StateVector> = loaded.witness.iter().cloned().collect();
        let suite = product_strategy_suite(inst.n, &extras, 16, seed);
        let mut worst: f64 = 0.0;
        for state in &suite {
            let run = run_lcdm(inst, &ProverStrategy::honest(state.clone()), repetitions, k_hb, seed, mode)?;
            worst = worst.max(run.acceptance.probability);
        }
        r.measure("product_provers_tried", suite.len() as f64);
        r.check(Check::at_most("product_prover_max_acceptance", worst, 0.05));
    }

    if loaded.witness.is_none() && loaded.promise != Some(Promise::No) {
        r.note("no witness and no promise: only the binding checks apply");
    }

    let target = pow2_inv(k_hb);
    r.check(Check::exact("binding_attack_value", binding_attack_value(k_hb, RevealTarget::Flipped)?, target));
    let state = loaded.witness.clone().unwrap_or_else(|| StateVector::zero(inst.n));
    let rejection = 1.0 - 0.5f64.powi(k_hb as i32);
    for (slot, name) in ["r_x", "s_x", "r_y", "s_y"].into_iter().enumerate() {
        let liar = ProverStrategy { state: state.clone(), lies: 1 << (3 - slot) };
        let run = run_lcdm(inst, &liar, 1, k_hb, seed, LcdmMode::Exact)?;
        r.check(Check::within(format!("lying_{name}_rejection"), 1.0 - run.reveal_pass, rejection, rejection));
    }
    Ok(())
}

pub fn purify(r: &mut RunReport, kraus: &[Matrix], samples: usize) -> Result<(), CliError> {
    let p = purify_channel(kraus)?;
    let mut rng = coinzk::seeded_rng(r.seed);
    let d = check_purification(kraus, &p, samples, &mut rng)?;
    r.measure("kraus_operators", kraus.len() as f64);
    r.measure("environment_qubits", p.env_qubits as f64);
    r.check(Check::at_most("max_recovery_distance", d, 1e-9));
    Ok(())
}
