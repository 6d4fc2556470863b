//! Local consistency of density matrices under the Pauli one-time pad.
//!
//! Each repetition pads the witness with a key made of `2n` hidden bits, the
//! verifier challenges one pair from `L`, the prover reveals the four key
//! bits of that pair and the verifier decodes the pair and keeps it. The
//! final decision groups the kept states by pair, averages each group and
//! accepts iff every group average is within `1/(2t)` of its target.

use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;

use crate::engine::{clopper_pearson, AcceptanceEstimate};
use crate::hiddenbit::{binding_attack_value, HiddenBitBundle, RevealTarget, SharePair};
use crate::otp::{conjugate_by_key, decrypt_qubits, encrypt, partial_average_encryption, PadKey};
use crate::par::Exec;
use crate::qmath::{
    mixture, partial_trace, permute_qubits, tensor, to_bits, trace_distance, CqState, DensityMatrix,
    QubitSet, StateVector,
};
use crate::{Error, Result};

/// Largest instance the exact view computations accept.
pub const MAX_LCDM_QUBITS: usize = 4;

/// Largest number of challenge sequences `|L|^K` enumerated exactly.
pub const MAX_CHALLENGE_SEQUENCES: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct LCDMInstance {
    pub n: usize,
    pub t: u32,
    /// 1-based qubit pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Target two-qubit state for each pair, in pair order.
    pub matrices: Vec<DensityMatrix>,
}

impl LCDMInstance {
    pub fn new(n: usize, t: u32, pairs: Vec<(usize, usize)>, matrices: Vec<DensityMatrix>) -> Result<Self> {
        let inst = Self { n, t, pairs, matrices };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > MAX_LCDM_QUBITS {
            return Err(Error::InvalidInstance(format!("n = {} (supported: 2..={MAX_LCDM_QUBITS})", self.n)));
        }
        if self.t == 0 {
            return Err(Error::InvalidInstance("precision t must be positive".into()));
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidInstance("no pairs".into()));
        }
        if self.pairs.len() != self.matrices.len() {
            return Err(Error::InvalidInstance(format!(
                "{} pairs but {} matrices",
                self.pairs.len(),
                self.matrices.len()
            )));
        }
        for (i, &(x, y)) in self.pairs.iter().enumerate() {
            if x == 0 || y == 0 || x > self.n || y > self.n || x == y {
                return Err(Error::InvalidInstance(format!("pair ({x}, {y}) is not two distinct qubits of {}", self.n)));
            }
            if self.pairs[..i].contains(&(x, y)) {
                return Err(Error::InvalidInstance(format!("pair ({x}, {y}) listed twice")));
            }
            if self.matrices[i].n() != 2 {
                return Err(Error::InvalidInstance(format!("matrix for ({x}, {y}) is not 4x4")));
            }
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        1.0 / (2.0 * self.t as f64)
    }

    /// `n = 2`, `L = {(1,2)}`, `M = |Φ⁺⟩⟨Φ⁺|`.
    pub fn bell_yes() -> Self {
        Self { n: 2, t: 2, pairs: vec![(1, 2)], matrices: vec![StateVector::bell().to_density()] }
    }

    /// `n = 2`, `L = {(1,2)}`, `M = 𝕀/4`: no pure state matches.
    pub fn mixed_no() -> Self {
        Self { n: 2, t: 2, pairs: vec![(1, 2)], matrices: vec![DensityMatrix::maximally_mixed(2)] }
    }

    /// `n = 3`, `L = {(1,2), (2,3)}`, both targets `|00⟩⟨00|`.
    pub fn zero3_yes() -> Self {
        Self { n: 3, t: 2, pairs: vec![(1, 2), (2, 3)], matrices: vec![DensityMatrix::zero(2); 2] }
    }
}

/// Reduced state on `(x, y)` with `x` as the first qubit.
pub fn reduced_pair(rho: &DensityMatrix, (x, y): (usize, usize)) -> Result<DensityMatrix> {
    let r = partial_trace(rho, &QubitSet::new(vec![x, y])?)?;
    if x < y {
        Ok(r)
    } else {
        permute_qubits(&r, &[2, 1])
    }
}

/// Trace distance between the witness's reduced state and the target, per
/// pair.
pub fn check_instance(inst: &LCDMInstance, w: &StateVector) -> Result<Vec<((usize, usize), f64)>> {
    inst.validate()?;
    if w.n() != inst.n {
        return Err(Error::DimensionMismatch(format!("{}-qubit witness for n = {}", w.n(), inst.n)));
    }
    let rho = w.to_density();
    inst.pairs
        .iter()
        .zip(&inst.matrices)
        .map(|(&pair, m)| Ok((pair, trace_distance(&reduced_pair(&rho, pair)?, m)?)))
        .collect()
}

pub fn prover_message(w: &StateVector, pad: &PadKey) -> Result<StateVector> {
    encrypt(w, pad)
}

/// A product prover: the same pure state in every repetition, plus a mask of
/// revealed key bits it lies about (bit 3 is `r_x`, then `s_x`, `r_y`,
/// `s_y`).
#[derive(Clone, Debug, PartialEq)]
pub struct ProverStrategy {
    pub state: StateVector,
    pub lies: u8,
}

impl ProverStrategy {
    pub fn honest(witness: StateVector) -> Self {
        Self { state: witness, lies: 0 }
    }

    fn lie(&self, slot: usize) -> bool {
        self.lies >> (3 - slot) & 1 == 1
    }
}

#[derive(Clone, Debug)]
pub struct RepetitionRecord {
    /// Full pad key of this repetition.
    pub key: PadKey,
    /// Index into the instance's pairs.
    pub challenge: usize,
    /// `(r_x, s_x, r_y, s_y)` as accepted by the verifier, or `None` when a
    /// reveal failed.
    pub revealed: Option<[bool; 4]>,
    /// Decoded pair state.
    pub z: Option<DensityMatrix>,
}

/// Groups the kept states by challenge, averages each group and accepts iff
/// every non-empty group average is within `1/(2t)` of its target.
pub fn accept_procedure(inst: &LCDMInstance, kept: &[(usize, DensityMatrix)]) -> Result<bool> {
    for (l, target) in inst.matrices.iter().enumerate() {
        let group: Vec<(f64, DensityMatrix)> =
            kept.iter().filter(|(c, _)| *c == l).map(|(_, z)| (1.0, z.clone())).collect();
        if group.is_empty() {
            continue;
        }
        let w = 1.0 / group.len() as f64;
        let avg = mixture(&group.into_iter().map(|(_, z)| (w, z)).collect::<Vec<_>>())?;
        if trace_distance(&avg, target)? > inst.threshold() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LcdmMode {
    Exact,
    MonteCarlo { trials: usize },
}

/// Decoded state of one pair and how far it is from the target.
#[derive(Clone, Debug)]
pub struct PairOutcome {
    pub pair: (usize, usize),
    pub z: DensityMatrix,
    pub distance: f64,
}

#[derive(Clone, Debug)]
pub struct LcdmRun {
    pub acceptance: AcceptanceEstimate,
    /// Probability that one repetition's reveal verifies.
    pub reveal_pass: f64,
    pub pairs: Vec<PairOutcome>,
    /// One sampled run.
    pub sample: Vec<RepetitionRecord>,
    pub sample_accepted: bool,
}

fn check_strategy(inst: &LCDMInstance, s: &ProverStrategy, repetitions: usize) -> Result<()> {
    inst.validate()?;
    if repetitions == 0 {
        return Err(Error::InvalidInstance("at least one repetition is needed".into()));
    }
    if s.state.n() != inst.n {
        return Err(Error::DimensionMismatch(format!("{}-qubit prover state for n = {}", s.state.n(), inst.n)));
    }
    if s.lies > 15 {
        return Err(Error::InvalidInstance("lie mask has four bits".into()));
    }
    Ok(())
}

fn pair_key(key: &PadKey, (x, y): (usize, usize)) -> [bool; 4] {
    let (rx, sx) = key.pair(x);
    let (ry, sy) = key.pair(y);
    [rx, sx, ry, sy]
}

fn decode(rho: &DensityMatrix, pair: (usize, usize), bits: [bool; 4]) -> Result<DensityMatrix> {
    let decrypted = decrypt_qubits(rho, &[(bits[0], bits[1]), (bits[2], bits[3])], &QubitSet::new(vec![pair.0, pair.1])?)?;
    reduced_pair(&decrypted, pair)
}

/// Exact decoded pair state, averaged over every pad key.
fn exact_pair_state(inst: &LCDMInstance, s: &ProverStrategy, l: usize, exec: Exec) -> Result<DensityMatrix> {
    let rho = s.state.to_density();
    let pair = inst.pairs[l];
    let keys = 1usize << (2 * inst.n);
    let parts = exec.map(keys, |i| -> Result<DensityMatrix> {
        let key = PadKey::from_index(inst.n, i);
        let sent = conjugate_by_key(&rho, &key)?;
        let mut bits = pair_key(&key, pair);
        for (slot, b) in bits.iter_mut().enumerate() {
            *b ^= s.lie(slot);
        }
        decode(&sent, pair, bits)
    });
    let w = 1.0 / keys as f64;
    let parts = parts.into_iter().map(|z| z.map(|z| (w, z))).collect::<Result<Vec<_>>>()?;
    mixture(&parts)
}

fn reveal_pass_exact(s: &ProverStrategy, k_hb: usize) -> Result<Rational64> {
    let honest = binding_attack_value(k_hb, RevealTarget::Honest)?;
    let flipped = binding_attack_value(k_hb, RevealTarget::Flipped)?;
    Ok((0..4).map(|slot| if s.lie(slot) { flipped } else { honest }).product())
}

fn sample_run<R: Rng + ?Sized>(
    inst: &LCDMInstance,
    s: &ProverStrategy,
    repetitions: usize,
    k_hb: usize,
    rng: &mut R,
) -> Result<(bool, Vec<RepetitionRecord>)> {
    let mut records = Vec::with_capacity(repetitions);
    let mut kept = Vec::with_capacity(repetitions);
    let mut ok = true;
    for _ in 0..repetitions {
        let bundles = (0..2 * inst.n).map(|_| HiddenBitBundle::generate(k_hb, rng)).collect::<Result<Vec<_>>>()?;
        let key = PadKey::new(inst.n, bundles.iter().map(|b| b.r).collect())?;
        let sent = prover_message(&s.state, &key)?.to_density();
        let challenge = rng.random_range(0..inst.pairs.len());
        let (x, y) = inst.pairs[challenge];
        let slots = [2 * (x - 1), 2 * (x - 1) + 1, 2 * (y - 1), 2 * (y - 1) + 1];
        let mut revealed = [false; 4];
        let mut verified = true;
        for (slot, &h) in slots.iter().enumerate() {
            let shares: Vec<SharePair> =
                if s.lie(slot) { bundles[h].flipped_reveal() } else { bundles[h].honest_reveal() };
            match bundles[h].verify(&shares) {
                Some(v) => revealed[slot] = v,
                None => verified = false,
            }
        }
        if !verified {
            ok = false;
            records.push(RepetitionRecord { key, challenge, revealed: None, z: None });
            continue;
        }
        let z = decode(&sent, (x, y), revealed)?;
        kept.push((challenge, z.clone()));
        records.push(RepetitionRecord { key, challenge, revealed: Some(revealed), z: Some(z) });
    }
    let accepted = ok && accept_procedure(inst, &kept)?;
    Ok((accepted, records))
}

/// Runs `repetitions` repetitions with pad keys built from hidden bits of
/// security parameter `k_hb`.
///
/// Exact mode sums over every pad key and every challenge sequence; a
/// repetition's reveal verifies with probability `binding^lies`. Monte Carlo
/// mode samples the full protocol, hidden bits included, with one
/// independent stream per trial.
pub fn run_lcdm(
    inst: &LCDMInstance,
    s: &ProverStrategy,
    repetitions: usize,
    k_hb: usize,
    seed: u64,
    mode: LcdmMode,
) -> Result<LcdmRun> {
    check_strategy(inst, s, repetitions)?;
    let exec = Exec::default();
    let pass = reveal_pass_exact(s, k_hb)?;
    let reveal_pass = *pass.numer() as f64 / *pass.denom() as f64;
    let pairs = (0..inst.pairs.len())
        .map(|l| {
            let z = exact_pair_state(inst, s, l, exec)?;
            let distance = trace_distance(&z, &inst.matrices[l])?;
            Ok(PairOutcome { pair: inst.pairs[l], z, distance })
        })
        .collect::<Result<Vec<_>>>()?;
    let (sample_accepted, sample) = sample_run(inst, s, repetitions, k_hb, &mut crate::seeded_rng(seed))?;
    let acceptance = match mode {
        LcdmMode::Exact => {
            let p = exact_acceptance(inst, &pairs, repetitions, exec)? * reveal_pass.powi(repetitions as i32);
            AcceptanceEstimate { probability: p, lower: p, upper: p, trials: None }
        }
        LcdmMode::MonteCarlo { trials } => {
            if trials == 0 {
                return Err(Error::InvalidInstance("at least one trial is needed".into()));
            }
            let outcomes = exec.map(trials, |i| {
                sample_run(inst, s, repetitions, k_hb, &mut crate::trial_rng(seed, i as u64)).map(|(a, _)| a)
            });
            let mut accepted = 0;
            for o in outcomes {
                accepted += usize::from(o?);
            }
            let (lower, upper) = clopper_pearson(accepted, trials, 0.99);
            AcceptanceEstimate { probability: accepted as f64 / trials as f64, lower, upper, trials: Some(trials) }
        }
    };
    Ok(LcdmRun { acceptance, reveal_pass, pairs, sample, sample_accepted })
}

/// Acceptance over all `|L|^K` challenge sequences, given that every reveal
/// verified.
fn exact_acceptance(inst: &LCDMInstance, pairs: &[PairOutcome], repetitions: usize, exec: Exec) -> Result<f64> {
    let l = inst.pairs.len();
    let count = (l as u128).checked_pow(repetitions as u32).unwrap_or(u128::MAX);
    if count > MAX_CHALLENGE_SEQUENCES as u128 {
        return Err(Error::Unsupported(format!("{count} challenge sequences")));
    }
    let count = count as usize;
    let verdicts = exec.map(count, |mut seq| -> Result<bool> {
        let mut kept = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let c = seq % l;
            seq /= l;
            kept.push((c, pairs[c].z.clone()));
        }
        accept_procedure(inst, &kept)
    });
    let mut accepted = 0usize;
    for v in verdicts {
        accepted += usize::from(v?);
    }
    Ok(accepted as f64 / count as f64)
}

/// Verifier views of one repetition.
#[derive(Clone, Debug)]
pub struct Views {
    /// After the padded witness arrives.
    pub first: DensityMatrix,
    /// After the reveal: label `(challenge, r_x, s_x, r_y, s_y)` with the
    /// decoded `n`-qubit state.
    pub second: CqState,
}

/// Exact honest views: the pad is averaged over every key, and over the
/// unrevealed keys once the pair's keys are known.
pub fn real_views(inst: &LCDMInstance, w: &StateVector) -> Result<Views> {
    inst.validate()?;
    if w.n() != inst.n {
        return Err(Error::DimensionMismatch(format!("{}-qubit witness for n = {}", w.n(), inst.n)));
    }
    let rho = w.to_density();
    let first = crate::otp::average_encryption(&rho)?;
    let mut second = CqState::new();
    let weight = 1.0 / (inst.pairs.len() * 16) as f64;
    for (l, &(x, y)) in inst.pairs.iter().enumerate() {
        let others: Vec<usize> = (1..=inst.n).filter(|&q| q != x && q != y).collect();
        for a in 0..16 {
            let bits = to_bits(a, 4);
            let mut key_bits = vec![false; 2 * inst.n];
            key_bits[2 * (x - 1)] = bits[0];
            key_bits[2 * (x - 1) + 1] = bits[1];
            key_bits[2 * (y - 1)] = bits[2];
            key_bits[2 * (y - 1) + 1] = bits[3];
            let sent = conjugate_by_key(&rho, &PadKey::new(inst.n, key_bits)?)?;
            let padded = if others.is_empty() { sent } else { partial_average_encryption(&sent, &QubitSet::new(others.clone())?)? };
            let decoded = decrypt_qubits(&padded, &[(bits[0], bits[1]), (bits[2], bits[3])], &QubitSet::new(vec![x, y])?)?;
            second.add(label(l, &bits), weight, &decoded)?;
        }
    }
    Ok(Views { first, second })
}

fn label(l: usize, bits: &[bool]) -> Vec<u8> {
    let mut v = vec![l as u8];
    v.extend(bits.iter().map(|&b| u8::from(b)));
    v
}

/// `M` on the pair and `𝕀` elsewhere.
pub fn alpha_state(inst: &LCDMInstance, l: usize) -> Result<DensityMatrix> {
    let (x, y) = inst.pairs[l];
    let m = &inst.matrices[l];
    if inst.n == 2 {
        return if x < y { Ok(m.clone()) } else { permute_qubits(m, &[2, 1]) };
    }
    let joint = tensor(m, &DensityMatrix::maximally_mixed(inst.n - 2))?;
    let mut positions = vec![x, y];
    positions.extend((1..=inst.n).filter(|&q| q != x && q != y));
    permute_qubits(&joint, &positions)
}

/// Simulated views: `𝕀/2ⁿ`, then a uniformly random challenge and key
/// applied to [`alpha_state`], labelled by the pair's key bits and decoded.
/// Computed exactly by summing over challenges and keys.
pub fn simulate_views(inst: &LCDMInstance) -> Result<Views> {
    inst.validate()?;
    let first = DensityMatrix::maximally_mixed(inst.n);
    let keys = 1usize << (2 * inst.n);
    let weight = 1.0 / (inst.pairs.len() * keys) as f64;
    let mut second = CqState::new();
    for (l, &(x, y)) in inst.pairs.iter().enumerate() {
        let alpha = alpha_state(inst, l)?;
        for i in 0..keys {
            let key = PadKey::from_index(inst.n, i);
            let bits = pair_key(&key, (x, y));
            let sent = conjugate_by_key(&alpha, &key)?;
            let decoded = decrypt_qubits(&sent, &[(bits[0], bits[1]), (bits[2], bits[3])], &QubitSet::new(vec![x, y])?)?;
            second.add(label(l, &bits), weight, &decoded)?;
        }
    }
    Ok(Views { first, second })
}

/// Per-round distances between real and simulated views of one repetition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ViewDistances {
    pub first: f64,
    pub second: f64,
}

pub fn view_distances(inst: &LCDMInstance, w: &StateVector) -> Result<ViewDistances> {
    let real = real_views(inst, w)?;
    let sim = simulate_views(inst)?;
    Ok(ViewDistances { first: trace_distance(&real.first, &sim.first)?, second: real.second.trace_distance(&sim.second)? })
}

/// Pure states tried against an instance: basis states, the given extras and
/// `random` Haar-random states from `seed`.
pub fn product_strategy_suite(n: usize, extras: &[StateVector], random: usize, seed: u64) -> Vec<StateVector> {
    let mut rng = crate::seeded_rng(seed);
    let mut out: Vec<StateVector> = (0..1usize << n).map(|i| StateVector::basis(n, i)).collect();
    out.extend(extras.iter().cloned());
    out.extend((0..random).map(|_| StateVector::random(n, &mut rng)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::C64;

    fn zero3() -> StateVector {
        StateVector::zero(3)
    }

    #[test]
    fn instances_validate() {
        assert!(LCDMInstance::bell_yes().validate().is_ok());
        assert!(LCDMInstance::new(2, 2, vec![(1, 1)], vec![DensityMatrix::zero(2)]).is_err());
        assert!(LCDMInstance::new(2, 2, vec![(1, 3)], vec![DensityMatrix::zero(2)]).is_err());
        assert!(LCDMInstance::new(2, 0, vec![(1, 2)], vec![DensityMatrix::zero(2)]).is_err());
        assert!(LCDMInstance::new(5, 2, vec![(1, 2)], vec![DensityMatrix::zero(2)]).is_err());
        assert!(LCDMInstance::new(2, 2, vec![(1, 2)], vec![DensityMatrix::zero(1)]).is_err());
    }

    #[test]
    fn check_instance_examples() {
        let d = check_instance(&LCDMInstance::bell_yes(), &StateVector::bell()).unwrap();
        assert!(d[0].1 < 1e-12);
        let mut rng = crate::seeded_rng(3);
        for _ in 0..5 {
            let w = StateVector::random(2, &mut rng);
            let d = check_instance(&LCDMInstance::mixed_no(), &w).unwrap();
            assert!((d[0].1 - 0.75).abs() < 1e-9);
        }
        let d = check_instance(&LCDMInstance::zero3_yes(), &zero3()).unwrap();
        assert!(d.iter().all(|(_, x)| *x < 1e-12));
    }

    #[test]
    fn reduced_pair_respects_order() {
        // |01⟩: pair (2,1) reads as |10⟩
        let rho = StateVector::basis(2, 0b01).to_density();
        let r = reduced_pair(&rho, (2, 1)).unwrap();
        assert!((r.get(0b10, 0b10).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn accept_procedure_examples() {
        let inst = LCDMInstance::zero3_yes();
        let kept: Vec<_> = (0..4).map(|i| (i % 2, DensityMatrix::zero(2))).collect();
        assert!(accept_procedure(&inst, &kept).unwrap());
        let far = vec![(0, DensityMatrix::maximally_mixed(2))];
        assert!(!accept_procedure(&inst, &far).unwrap());
        assert!(accept_procedure(&inst, &[]).unwrap());
        let no = LCDMInstance::mixed_no();
        assert!(!accept_procedure(&no, &[(0, StateVector::bell().to_density())]).unwrap());
    }

    #[test]
    fn honest_runs_accept() {
        let bell = LCDMInstance::bell_yes();
        let run = run_lcdm(&bell, &ProverStrategy::honest(StateVector::bell()), 8, 1, 1, LcdmMode::Exact).unwrap();
        assert_eq!(run.acceptance.probability, 1.0);
        assert!(run.sample_accepted);
        assert!(run.pairs[0].distance < 1e-12);
        let z = LCDMInstance::zero3_yes();
        let run = run_lcdm(&z, &ProverStrategy::honest(zero3()), 8, 2, 1, LcdmMode::Exact).unwrap();
        assert_eq!(run.acceptance.probability, 1.0);
        let run = run_lcdm(&z, &ProverStrategy::honest(zero3()), 4, 1, 7, LcdmMode::MonteCarlo { trials: 20 }).unwrap();
        assert_eq!(run.acceptance.probability, 1.0);
    }

    #[test]
    fn lying_reveals_are_caught() {
        let inst = LCDMInstance::bell_yes();
        for k in 1..=3 {
            let liar = ProverStrategy { state: StateVector::bell(), lies: 0b1000 };
            let run = run_lcdm(&inst, &liar, 1, k, 0, LcdmMode::Exact).unwrap();
            assert_eq!(run.reveal_pass, 0.5f64.powi(k as i32));
        }
        // sampled rejection rate at k = 1
        let liar = ProverStrategy { state: StateVector::bell(), lies: 0b0001 };
        let run = run_lcdm(&inst, &liar, 1, 1, 11, LcdmMode::MonteCarlo { trials: 2000 }).unwrap();
        let passed = run.acceptance;
        // a passing liar decodes Z on qubit 2, which is far from the Bell target
        assert_eq!(passed.probability, 0.0);
        assert!((run.pairs[0].distance - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lying_pass_rate_matches_binding() {
        // a lie on s_x decodes with an extra Z on |0⟩, which leaves the pair
        // unchanged, so acceptance is the reveal pass rate
        let inst = LCDMInstance { n: 2, t: 2, pairs: vec![(1, 2)], matrices: vec![DensityMatrix::zero(2)] };
        let liar = ProverStrategy { state: StateVector::zero(2), lies: 0b0100 };
        let run = run_lcdm(&inst, &liar, 1, 1, 4, LcdmMode::MonteCarlo { trials: 4000 }).unwrap();
        assert!(run.acceptance.lower <= 0.5 && 0.5 <= run.acceptance.upper, "{:?}", run.acceptance);
        let exact = run_lcdm(&inst, &liar, 1, 1, 4, LcdmMode::Exact).unwrap();
        assert_eq!(exact.acceptance.probability, 0.5);
    }

    #[test]
    fn no_instance_rejects_product_provers() {
        let inst = LCDMInstance::mixed_no();
        for state in product_strategy_suite(2, &[StateVector::bell()], 10, 5) {
            for lies in [0u8, 0b0001, 0b1111] {
                let run = run_lcdm(&inst, &ProverStrategy { state: state.clone(), lies }, 8, 1, 0, LcdmMode::Exact).unwrap();
                assert!(run.acceptance.probability <= 0.05);
                assert!(run.pairs[0].distance >= 0.75 - 1e-9);
            }
        }
    }

    #[test]
    fn views_are_simulated_exactly() {
        for (inst, w) in [(LCDMInstance::bell_yes(), StateVector::bell()), (LCDMInstance::zero3_yes(), zero3())] {
            let real = real_views(&inst, &w).unwrap();
            assert!(real.first.max_abs_diff(&DensityMatrix::maximally_mixed(inst.n)) < 1e-12);
            let d = view_distances(&inst, &w).unwrap();
            assert!(d.first <= 1e-12, "{d:?}");
            assert!(d.second <= 1e-9, "{d:?}");
        }
    }

    #[test]
    fn second_view_blocks_hold_target_on_pair() {
        let inst = LCDMInstance::zero3_yes();
        let real = real_views(&inst, &zero3()).unwrap();
        let expected = alpha_state(&inst, 1).unwrap();
        let (w, block) = real.second.block(&[1, 0, 1, 1, 0]).unwrap();
        assert!((w - 1.0 / 32.0).abs() < 1e-12);
        assert!(block.max_abs_diff(&expected) < 1e-12);
        // n = 2: the decoded state is M itself
        let bell = LCDMInstance::bell_yes();
        let (_, block) = real_views(&bell, &StateVector::bell()).unwrap().second.block(&[0, 1, 1, 0, 1]).unwrap();
        assert!(block.max_abs_diff(&bell.matrices[0]) < 1e-12);
    }

    #[test]
    fn wrong_witness_views_differ() {
        let inst = LCDMInstance::bell_yes();
        let w = StateVector::new(vec![C64::new(1.0, 0.0), C64::default(), C64::default(), C64::default()]).unwrap();
        let d = view_distances(&inst, &w).unwrap();
        assert!(d.first < 1e-12);
        assert!(d.second > 0.5);
    }
}
