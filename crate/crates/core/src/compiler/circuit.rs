use std::sync::Arc;

use super::{ClassicalHBProtocol, ClassicalSimulator, ProverInput, Round, Transcript};
use crate::engine::{
    coin_control_violation, enumerate_runs, estimate_acceptance, AcceptanceEstimate,
    AcceptanceMode, Action, EnumOptions, Index, InitialState, ProtocolSimulator, ProtocolStep,
    RegisterLayout, RunFamily, SparseState, Trajectory, MAX_SPARSE_QUBITS,
};
use crate::hiddenbit::{share_prep_unitary, verify_reveal, CoinTriple, SharePair};
use crate::qmath::{from_bits, to_bits, UnitaryMatrix, C64};
use crate::{Error, Result};

/// How the compiled prover answers reveal rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RevealBehavior {
    Honest,
    /// Flips the first share of every revealed pair, claiming `r̄`.
    FlipFirstShare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ProverKind {
    Real(RevealBehavior),
    Simulated,
}

/// Where each piece of the compiled protocol lives (global qubit numbers).
#[derive(Clone, Debug, Default)]
pub struct RegisterMap {
    pub accept: usize,
    /// Reject flag per round (reveal rounds only).
    pub flags: Vec<Option<usize>>,
    /// Verifier copies of the alignment bits, pair `(i, j ≥ 1)` at
    /// `i·(k−1) + j − 1`.
    pub align_v: Vec<usize>,
    /// Verifier storage per round (prover messages and revealed shares).
    pub stored: Vec<Vec<usize>>,
    pub orig_coins: Vec<usize>,
    /// `(b, s_b, c)` per share pair, pair `(i, j)` at `i·k + j`.
    pub hb_coins: Vec<[usize; 3]>,
    pub share_m: Vec<[usize; 2]>,
    pub align_m: Vec<usize>,
    pub round_m: Vec<Vec<usize>>,
    pub share_p: Vec<[usize; 2]>,
    pub choice_p: Vec<usize>,
    /// Simulator transcript register (simulated protocols only).
    pub sim: Option<SimRegisters>,
}

#[derive(Clone, Debug, Default)]
pub struct SimRegisters {
    pub hb_coins: Vec<usize>,
    pub align: Vec<usize>,
    /// Prover messages and revealed values per round; empty for verifier
    /// rounds.
    pub rounds: Vec<Vec<usize>>,
}

fn choice_bits(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (n - 1).ilog2() as usize + 1
    }
}

fn m_width(p: &ClassicalHBProtocol, round: &Round) -> usize {
    match round {
        Round::Reveal { count, .. } => count * 2 * p.k,
        r => r.width(),
    }
}

fn stored_width(p: &ClassicalHBProtocol, round: &Round) -> usize {
    match round {
        Round::Verifier { .. } => 0,
        r => m_width(p, r),
    }
}

fn allocate(p: &ClassicalHBProtocol, simulated: bool) -> Result<(RegisterLayout, RegisterMap)> {
    let pairs = p.hidden_bits * p.k;
    let align_n = p.hidden_bits * (p.k - 1);
    let reveal_rounds = p.rounds.iter().filter(|r| matches!(r, Round::Reveal { .. })).count();
    let stored_total: usize = p.rounds.iter().map(|r| stored_width(p, r)).sum();
    let v_work = 1 + reveal_rounds + align_n + stored_total;
    let coins = p.coin_budget();
    let m_a = 2 * pairs;
    let m_b = align_n + p.rounds.iter().map(|r| m_width(p, r)).sum::<usize>();
    let m = m_a.max(m_b);
    let choice = choice_bits(p.prover_choices);
    let sim_n = if simulated {
        3 * pairs + align_n + p.rounds.iter().map(|r| stored_width(p, r).min(r.width())).sum::<usize>()
    } else {
        0
    };
    let p_n = 2 * pairs + choice + sim_n;
    let layout = RegisterLayout::new(v_work, coins, m, p_n);
    if layout.total() > MAX_SPARSE_QUBITS {
        return Err(Error::Unsupported(format!(
            "compiled protocol needs {} qubits (at most {MAX_SPARSE_QUBITS})",
            layout.total()
        )));
    }

    let mut map = RegisterMap { accept: layout.work(0), ..Default::default() };
    let mut w = 1;
    for round in &p.rounds {
        map.flags.push(match round {
            Round::Reveal { .. } => {
                w += 1;
                Some(layout.work(w - 1))
            }
            _ => None,
        });
    }
    map.align_v = (0..align_n).map(|i| layout.work(w + i)).collect();
    w += align_n;
    for round in &p.rounds {
        let n = stored_width(p, round);
        map.stored.push((0..n).map(|i| layout.work(w + i)).collect());
        w += n;
    }

    map.orig_coins = (0..p.verifier_coins).map(|i| layout.coin(i)).collect();
    map.hb_coins = (0..pairs)
        .map(|t| {
            let base = p.verifier_coins + 3 * t;
            [layout.coin(base), layout.coin(base + 1), layout.coin(base + 2)]
        })
        .collect();

    map.share_m = (0..pairs).map(|t| [layout.message(2 * t), layout.message(2 * t + 1)]).collect();
    map.align_m = (0..align_n).map(|i| layout.message(i)).collect();
    let mut off = align_n;
    for round in &p.rounds {
        let n = m_width(p, round);
        map.round_m.push((off..off + n).map(|i| layout.message(i)).collect());
        off += n;
    }

    map.share_p = (0..pairs).map(|t| [layout.prover(2 * t), layout.prover(2 * t + 1)]).collect();
    map.choice_p = (0..choice).map(|i| layout.prover(2 * pairs + i)).collect();
    if simulated {
        let mut off = 2 * pairs + choice;
        let mut take = |n: usize| {
            let v: Vec<usize> = (off..off + n).map(|i| layout.prover(i)).collect();
            off += n;
            v
        };
        let hb_coins = take(3 * pairs);
        let align = take(align_n);
        let rounds = p
            .rounds
            .iter()
            .map(|r| match r {
                Round::Verifier { .. } => Vec::new(),
                r => take(r.width()),
            })
            .collect();
        map.sim = Some(SimRegisters { hb_coins, align, rounds });
    }
    Ok((layout, map))
}

/// Concatenates qubit lists and remembers the lengths for decoding.
#[derive(Default)]
struct Inputs {
    qubits: Vec<usize>,
    lens: Vec<usize>,
}

impl Inputs {
    fn push(&mut self, q: &[usize]) -> &mut Self {
        self.qubits.extend_from_slice(q);
        self.lens.push(q.len());
        self
    }
}

fn split<'a>(bits: &'a [bool], lens: &[usize]) -> Vec<&'a [bool]> {
    let mut out = Vec::with_capacity(lens.len());
    let mut rest = bits;
    for &n in lens {
        let (head, tail) = rest.split_at(n);
        out.push(head);
        rest = tail;
    }
    out
}

/// Transcript as the verifier reconstructs it from its coins and storage.
fn verifier_replay(p: &ClassicalHBProtocol, coins: &[bool], stored: &[Vec<bool>], upto: usize) -> Vec<Vec<bool>> {
    let mut msgs: Vec<Vec<bool>> = Vec::with_capacity(upto);
    for r in 0..upto {
        let entry = match &p.rounds[r] {
            Round::Prover { .. } => stored[r].clone(),
            Round::Verifier { message, .. } => message(coins, &msgs),
            Round::Reveal { count, .. } => {
                (0..*count).map(|t| stored[r][t * 2 * p.k] ^ stored[r][t * 2 * p.k + 1]).collect()
            }
        };
        msgs.push(entry);
    }
    msgs
}

/// Transcript as the honest prover reconstructs it.
fn prover_replay(
    p: &ClassicalHBProtocol,
    hidden: &[bool],
    choice: usize,
    verifier_msgs: &[Vec<bool>],
    upto: usize,
) -> Vec<Vec<bool>> {
    let mut msgs: Vec<Vec<bool>> = Vec::with_capacity(upto);
    for r in 0..upto {
        let entry = match &p.rounds[r] {
            Round::Prover { message, .. } => message(&ProverInput { hidden, choice, messages: &msgs }),
            Round::Verifier { .. } => verifier_msgs[r].clone(),
            Round::Reveal { select, .. } => {
                select(&msgs).into_iter().map(|i| hidden.get(i).copied().unwrap_or(false)).collect()
            }
        };
        msgs.push(entry);
    }
    msgs
}

fn pair_triple(bits: &[bool]) -> CoinTriple {
    CoinTriple::new(bits[0], bits[1], bits[2])
}

struct Builder {
    steps: Vec<ProtocolStep>,
}

impl Builder {
    fn push(&mut self, verifier: bool, label: &str, action: Action) {
        let actor = if verifier { crate::engine::Actor::Verifier } else { crate::engine::Actor::Prover };
        match self.steps.last_mut() {
            Some(step) if step.actor == actor => {
                if !step.label.ends_with(label) {
                    step.label.push_str(" + ");
                    step.label.push_str(label);
                }
                step.actions.push(action);
            }
            _ => self.steps.push(ProtocolStep { actor, label: label.to_string(), actions: vec![action] }),
        }
    }
}

fn uniform_prep(n_qubits: usize, choices: usize) -> Result<UnitaryMatrix> {
    let amp = C64::new(1.0 / (choices as f64).sqrt(), 0.0);
    let col: Vec<C64> = (0..1usize << n_qubits).map(|i| if i < choices { amp } else { C64::default() }).collect();
    UnitaryMatrix::complete(n_qubits, &[col])
}

fn build_steps(
    p: &Arc<ClassicalHBProtocol>,
    layout: &RegisterLayout,
    map: &RegisterMap,
    kind: ProverKind,
) -> Result<Vec<ProtocolStep>> {
    let _ = layout;
    let k = p.k;
    let m = p.hidden_bits;
    let pairs = m * k;
    let mut b = Builder { steps: Vec::new() };

    // phase 1: coin-controlled share states
    let table: Vec<UnitaryMatrix> = CoinTriple::all().map(share_prep_unitary).collect();
    for t in 0..pairs {
        b.push(true, "share preparation", Action::controlled(&map.hb_coins[t], &map.share_m[t], table.clone())?);
    }
    for t in 0..pairs {
        b.push(false, "share measurement", Action::swap(&map.share_m[t], &map.share_p[t])?);
    }
    match kind {
        ProverKind::Real(_) => {
            if pairs > 0 {
                let all: Vec<usize> = map.share_p.iter().flatten().copied().collect();
                b.push(false, "share measurement", Action::measure(&all)?);
            }
            for i in 0..m {
                for j in 1..k {
                    let d = map.align_m[i * (k - 1) + j - 1];
                    let first = map.share_p[i * k];
                    let this = map.share_p[i * k + j];
                    let inputs = [first[0], first[1], this[0], this[1]];
                    b.push(false, "alignment", Action::oracle(&inputs, &[d], |x| vec![x[0] ^ x[1] ^ x[2] ^ x[3]])?);
                    b.push(false, "alignment", Action::copy(&[d], &[this[1]])?);
                }
            }
            if !map.choice_p.is_empty() {
                b.push(false, "prover choice", Action::unitary(&map.choice_p, uniform_prep(map.choice_p.len(), p.prover_choices)?)?);
                b.push(false, "prover choice", Action::measure(&map.choice_p)?);
            }
        }
        ProverKind::Simulated => {
            let sim = map.sim.as_ref().expect("simulated layout");
            if !sim.align.is_empty() {
                b.push(false, "alignment", Action::copy(&sim.align, &map.align_m)?);
            }
        }
    }
    if !map.align_m.is_empty() {
        b.push(true, "store alignment", Action::swap(&map.align_m, &map.align_v)?);
    }

    for (r, round) in p.rounds.iter().enumerate() {
        match round {
            Round::Prover { .. } => {
                b.push(false, "prover message", prover_message_action(p, map, r, kind)?);
                b.push(true, "receive", Action::swap(&map.round_m[r], &map.stored[r])?);
            }
            Round::Verifier { .. } => {
                b.push(true, "verifier message", verifier_message_action(p, map, r)?);
            }
            Round::Reveal { .. } => {
                b.push(false, "reveal", reveal_action(p, map, r, kind)?);
                b.push(true, "receive reveal", Action::swap(&map.round_m[r], &map.stored[r])?);
                b.push(true, "check reveal", check_action(p, map, r)?);
            }
        }
    }
    b.push(true, "decide", accept_action(p, map)?);
    Ok(b.steps)
}

/// Verifier-side inputs: original coins then storage of rounds `< upto`.
fn verifier_inputs(map: &RegisterMap, upto: usize) -> Inputs {
    let mut inp = Inputs::default();
    inp.push(&map.orig_coins);
    for r in 0..upto {
        inp.push(&map.stored[r]);
    }
    inp
}

fn decode_verifier(parts: &[&[bool]], upto: usize, rounds: usize) -> (Vec<bool>, Vec<Vec<bool>>) {
    let coins = parts[0].to_vec();
    let mut stored: Vec<Vec<bool>> = parts[1..=upto].iter().map(|s| s.to_vec()).collect();
    stored.resize(rounds, Vec::new());
    (coins, stored)
}

fn verifier_message_action(p: &Arc<ClassicalHBProtocol>, map: &RegisterMap, r: usize) -> Result<Action> {
    let inp = verifier_inputs(map, r);
    let p = Arc::clone(p);
    let lens = inp.lens.clone();
    Action::oracle(&inp.qubits, &map.round_m[r], move |x| {
        let parts = split(x, &lens);
        let (coins, stored) = decode_verifier(&parts, r, p.rounds.len());
        let msgs = verifier_replay(&p, &coins, &stored, r);
        match &p.rounds[r] {
            Round::Verifier { message, .. } => message(&coins, &msgs),
            _ => unreachable!("verifier round"),
        }
    })
}

fn check_action(p: &Arc<ClassicalHBProtocol>, map: &RegisterMap, r: usize) -> Result<Action> {
    let mut inp = verifier_inputs(map, r);
    let hb: Vec<usize> = map.hb_coins.iter().flatten().copied().collect();
    inp.push(&hb).push(&map.align_v).push(&map.stored[r]);
    let flag = map.flags[r].expect("reveal round has a flag");
    let p = Arc::clone(p);
    let lens = inp.lens.clone();
    Action::oracle(&inp.qubits, &[flag], move |x| {
        let parts = split(x, &lens);
        let (coins, stored) = decode_verifier(&parts, r, p.rounds.len());
        let hb = parts[r + 1];
        let align = parts[r + 2];
        let revealed = parts[r + 3];
        let msgs = verifier_replay(&p, &coins, &stored, r);
        let ok = match &p.rounds[r] {
            Round::Reveal { select, .. } => {
                let indices = select(&msgs);
                indices.iter().enumerate().all(|(t, &i)| {
                    if i >= p.hidden_bits {
                        return false;
                    }
                    let slot = &revealed[t * 2 * p.k..(t + 1) * 2 * p.k];
                    let value = slot[0] ^ slot[1];
                    (0..p.k).all(|j| {
                        let triple = pair_triple(&hb[3 * (i * p.k + j)..]);
                        let d = j > 0 && align[i * (p.k - 1) + j - 1];
                        let eff = CoinTriple { s_b: triple.s_b ^ (triple.b && d), ..triple };
                        let shares = SharePair::new(slot[2 * j], slot[2 * j + 1]);
                        shares.r() == value && verify_reveal(eff, shares)
                    })
                })
            }
            _ => unreachable!("reveal round"),
        };
        vec![!ok]
    })
}

fn accept_action(p: &Arc<ClassicalHBProtocol>, map: &RegisterMap) -> Result<Action> {
    let rounds = p.rounds.len();
    let mut inp = verifier_inputs(map, rounds);
    let flags: Vec<usize> = map.flags.iter().flatten().copied().collect();
    inp.push(&flags);
    let p = Arc::clone(p);
    let lens = inp.lens.clone();
    Action::oracle(&inp.qubits, &[map.accept], move |x| {
        let parts = split(x, &lens);
        let (coins, stored) = decode_verifier(&parts, rounds, rounds);
        let clean = parts[rounds + 1].iter().all(|f| !f);
        let messages = verifier_replay(&p, &coins, &stored, rounds);
        vec![clean && (p.accept)(&Transcript { coins, messages })]
    })
}

/// Prover-side inputs: shares, choice, and the verifier messages in `M`
/// before round `upto`.
fn prover_inputs(p: &ClassicalHBProtocol, map: &RegisterMap, upto: usize) -> Inputs {
    let mut inp = Inputs::default();
    let shares: Vec<usize> = map.share_p.iter().flatten().copied().collect();
    inp.push(&shares).push(&map.choice_p);
    for r in 0..upto {
        if matches!(p.rounds[r], Round::Verifier { .. }) {
            inp.push(&map.round_m[r]);
        } else {
            inp.push(&[]);
        }
    }
    inp
}

struct ProverView {
    shares: Vec<SharePair>,
    hidden: Vec<bool>,
    choice: usize,
    verifier_msgs: Vec<Vec<bool>>,
}

fn decode_prover(p: &ClassicalHBProtocol, parts: &[&[bool]], upto: usize) -> ProverView {
    let shares: Vec<SharePair> = parts[0].chunks(2).map(|c| SharePair::new(c[0], c[1])).collect();
    let hidden = (0..p.hidden_bits).map(|i| shares[i * p.k].r()).collect();
    let choice = if parts[1].is_empty() { 0 } else { from_bits(parts[1]) % p.prover_choices };
    let mut verifier_msgs: Vec<Vec<bool>> = parts[2..2 + upto].iter().map(|s| s.to_vec()).collect();
    verifier_msgs.resize(p.rounds.len(), Vec::new());
    ProverView { shares, hidden, choice, verifier_msgs }
}

/// Simulator-side inputs: its copy of the coins, alignment bits, transcript
/// entries, and verifier messages in `M` before round `upto`.
fn sim_inputs(p: &ClassicalHBProtocol, map: &RegisterMap, upto: usize) -> Inputs {
    let sim = map.sim.as_ref().expect("simulated layout");
    let mut inp = Inputs::default();
    inp.push(&sim.hb_coins).push(&sim.align);
    for r in 0..=upto.min(p.rounds.len() - 1) {
        if matches!(p.rounds[r], Round::Verifier { .. }) {
            inp.push(if r < upto { &map.round_m[r] } else { &[] });
        } else {
            inp.push(&sim.rounds[r]);
        }
    }
    inp
}

fn decode_sim(p: &ClassicalHBProtocol, parts: &[&[bool]], upto: usize) -> (Vec<bool>, Vec<bool>, Vec<Vec<bool>>) {
    let hb = parts[0].to_vec();
    let align = parts[1].to_vec();
    let msgs: Vec<Vec<bool>> = parts[2..].iter().map(|s| s.to_vec()).collect();
    debug_assert_eq!(msgs.len(), upto.min(p.rounds.len() - 1) + 1);
    (hb, align, msgs)
}

fn prover_message_action(p: &Arc<ClassicalHBProtocol>, map: &RegisterMap, r: usize, kind: ProverKind) -> Result<Action> {
    match kind {
        ProverKind::Real(_) => {
            let inp = prover_inputs(p, map, r);
            let p = Arc::clone(p);
            let lens = inp.lens.clone();
            Action::oracle(&inp.qubits, &map.round_m[r], move |x| {
                let parts = split(x, &lens);
                let view = decode_prover(&p, &parts, r);
                let msgs = prover_replay(&p, &view.hidden, view.choice, &view.verifier_msgs, r);
                match &p.rounds[r] {
                    Round::Prover { message, .. } => {
                        message(&ProverInput { hidden: &view.hidden, choice: view.choice, messages: &msgs })
                    }
                    _ => unreachable!("prover round"),
                }
            })
        }
        ProverKind::Simulated => {
            let sim = map.sim.as_ref().expect("simulated layout");
            Action::copy(&sim.rounds[r], &map.round_m[r])
        }
    }
}

fn reveal_action(p: &Arc<ClassicalHBProtocol>, map: &RegisterMap, r: usize, kind: ProverKind) -> Result<Action> {
    match kind {
        ProverKind::Real(behavior) => {
            let inp = prover_inputs(p, map, r);
            let p = Arc::clone(p);
            let lens = inp.lens.clone();
            Action::oracle(&inp.qubits, &map.round_m[r], move |x| {
                let parts = split(x, &lens);
                let view = decode_prover(&p, &parts, r);
                let msgs = prover_replay(&p, &view.hidden, view.choice, &view.verifier_msgs, r);
                let Round::Reveal { select, .. } = &p.rounds[r] else { unreachable!("reveal round") };
                let mut out = Vec::new();
                for i in select(&msgs) {
                    for j in 0..p.k {
                        let s = view.shares.get(i * p.k + j).copied().unwrap_or(SharePair::new(false, false));
                        let flip = behavior == RevealBehavior::FlipFirstShare;
                        out.extend([s.s0 ^ flip, s.s1]);
                    }
                }
                out
            })
        }
        ProverKind::Simulated => {
            let inp = sim_inputs(p, map, r);
            let p = Arc::clone(p);
            let lens = inp.lens.clone();
            Action::oracle(&inp.qubits, &map.round_m[r], move |x| {
                let parts = split(x, &lens);
                let (hb, align, msgs) = decode_sim(&p, &parts, r);
                let Round::Reveal { select, .. } = &p.rounds[r] else { unreachable!("reveal round") };
                let values = &msgs[r];
                let mut out = Vec::new();
                for (t, i) in select(&msgs[..r]).into_iter().enumerate() {
                    for j in 0..p.k {
                        if i >= p.hidden_bits {
                            out.extend([false, false]);
                            continue;
                        }
                        let triple = pair_triple(&hb[3 * (i * p.k + j)..]);
                        let d = j > 0 && align[i * (p.k - 1) + j - 1];
                        let held = triple.s_b ^ (triple.b && d);
                        let other = held ^ values[t];
                        out.extend(if triple.b { [other, held] } else { [held, other] });
                    }
                }
                out
            })
        }
    }
}

/// Compiled protocol with the honest prover.
#[derive(Clone, Debug)]
pub struct CompiledProtocol {
    pub name: String,
    pub steps: Vec<ProtocolStep>,
    pub layout: RegisterLayout,
    pub map: RegisterMap,
    /// Original verifier coins plus three per share pair.
    pub coin_budget: usize,
    protocol: Arc<ClassicalHBProtocol>,
}

pub fn compile(p: &ClassicalHBProtocol) -> Result<CompiledProtocol> {
    compile_with(p, RevealBehavior::Honest)
}

pub fn compile_with(p: &ClassicalHBProtocol, behavior: RevealBehavior) -> Result<CompiledProtocol> {
    p.validate()?;
    // one honest transcript catches width and selection errors early
    p.honest_transcript(&vec![false; p.verifier_coins], 0, &vec![false; p.hidden_bits])?;
    let (layout, map) = allocate(p, false)?;
    let protocol = Arc::new(p.clone());
    let steps = build_steps(&protocol, &layout, &map, ProverKind::Real(behavior))?;
    crate::engine::validate_protocol(&steps, &layout)?;
    Ok(CompiledProtocol { name: p.name.clone(), steps, layout, map, coin_budget: p.coin_budget(), protocol })
}

impl CompiledProtocol {
    /// Coin-control violations of the verifier steps, by step label.
    pub fn coin_violations(&self) -> Vec<(String, String)> {
        let coins = self.layout.coin_qubits();
        self.steps
            .iter()
            .filter_map(|s| coin_control_violation(s, &coins).map(|v| (s.label.clone(), v)))
            .collect()
    }

    pub fn verifier_steps_coin_controlled(&self) -> bool {
        self.coin_violations().is_empty()
    }

    pub fn enumerate(&self, opts: &EnumOptions) -> Result<RunFamily> {
        enumerate_runs(&self.steps, &self.layout, &InitialState::CoinModel, opts)
    }

    pub fn acceptance(&self, mode: AcceptanceMode, opts: &EnumOptions) -> Result<AcceptanceEstimate> {
        estimate_acceptance(&self.steps, &self.layout, &InitialState::CoinModel, mode, opts)
    }

    /// Transcript the verifier reconstructs at the end of a branch whose
    /// final state is a basis state.
    pub fn transcript(&self, t: &Trajectory) -> Option<Transcript> {
        let idx = t.final_state().as_basis()?;
        let n = self.layout.total();
        let coins = crate::engine::read_bits(idx, n, &self.map.orig_coins);
        let stored: Vec<Vec<bool>> = self.map.stored.iter().map(|s| crate::engine::read_bits(idx, n, s)).collect();
        let messages = verifier_replay(&self.protocol, &coins, &stored, self.protocol.rounds.len());
        Some(Transcript { coins, messages })
    }

    /// Hidden bit `i` as held by the prover in a measured branch.
    pub fn hidden_bit(&self, t: &Trajectory, i: usize) -> Option<bool> {
        let idx = t.final_state().as_basis()?;
        let n = self.layout.total();
        let bits = crate::engine::read_bits(idx, n, &self.map.share_p[i * self.protocol.k]);
        Some(bits[0] ^ bits[1])
    }
}

/// The simulator compiled against the same verifier.
#[derive(Clone)]
pub struct CompiledSimulator {
    pub steps: Vec<ProtocolStep>,
    pub layout: RegisterLayout,
    pub map: RegisterMap,
    protocol: Arc<ClassicalHBProtocol>,
    transcripts: Vec<(f64, Transcript)>,
}

/// Builds the simulator protocol: identical verifier steps, with the prover
/// replaced by steps that copy a pre-sampled transcript (and shares rebuilt
/// from the simulator's copy of the coins) out of its private register.
pub fn compile_simulator(s: &ClassicalSimulator, p: &ClassicalHBProtocol) -> Result<CompiledSimulator> {
    p.validate()?;
    let (layout, map) = allocate(p, true)?;
    let protocol = Arc::new(p.clone());
    let steps = build_steps(&protocol, &layout, &map, ProverKind::Simulated)?;
    crate::engine::validate_protocol(&steps, &layout)?;
    let transcripts = (s.distribution)();
    for (_, t) in &transcripts {
        let shape_ok = t.coins.len() == p.verifier_coins
            && t.messages.len() == p.rounds.len()
            && t.messages.iter().zip(&p.rounds).all(|(m, r)| m.len() == r.width());
        if !shape_ok {
            return Err(Error::MalformedProtocol("simulated transcript shape differs from the protocol".into()));
        }
    }
    Ok(CompiledSimulator { steps, layout, map, protocol, transcripts })
}

impl CompiledSimulator {
    /// Number of initial branches: transcripts × coin triples × alignment
    /// bits.
    pub fn branch_count(&self) -> u128 {
        let p = &self.protocol;
        let extra = 3 * p.hidden_bits * p.k + p.hidden_bits * (p.k - 1);
        (self.transcripts.len() as u128) << extra.min(100)
    }

    pub fn initial_state(&self, cap: usize) -> Result<InitialState> {
        let count = self.branch_count();
        if count > cap as u128 {
            return Err(Error::BranchCap { count, cap: cap as u128 });
        }
        let p = &self.protocol;
        let sim = self.map.sim.as_ref().expect("simulated layout");
        let n = self.layout.total();
        let hb_qubits: Vec<usize> = self.map.hb_coins.iter().flatten().copied().collect();
        let hb_n = hb_qubits.len();
        let align_n = sim.align.len();
        let scale = 1.0 / (1u64 << (hb_n + align_n)) as f64;
        let mut parts = Vec::with_capacity(count as usize);
        for (w, t) in &self.transcripts {
            let mut base: Index = crate::engine::write_bits(0, n, &self.map.orig_coins, &t.coins);
            for (r, round) in p.rounds.iter().enumerate() {
                if !matches!(round, Round::Verifier { .. }) {
                    base = crate::engine::write_bits(base, n, &sim.rounds[r], &t.messages[r]);
                }
            }
            for x in 0..1usize << hb_n {
                let xb = to_bits(x, hb_n);
                let with_coins = crate::engine::write_bits(
                    crate::engine::write_bits(base, n, &hb_qubits, &xb),
                    n,
                    &sim.hb_coins,
                    &xb,
                );
                for a in 0..1usize << align_n {
                    let idx = crate::engine::write_bits(with_coins, n, &sim.align, &to_bits(a, align_n));
                    parts.push((w * scale, SparseState::basis(n, idx)?));
                }
            }
        }
        Ok(InitialState::Ensemble(parts))
    }

    pub fn enumerate(&self, opts: &EnumOptions) -> Result<RunFamily> {
        enumerate_runs(&self.steps, &self.layout, &self.initial_state(opts.branch_cap)?, opts)
    }

    /// Exact simulator for [`crate::engine::zk_audit`].
    pub fn simulator(&self, opts: &EnumOptions) -> Result<ProtocolSimulator> {
        ProtocolSimulator::new(&self.steps, &self.layout, &self.initial_state(opts.branch_cap)?, opts)
    }

    /// Revealed value of slot `slot` in round `round`, read from the
    /// simulator's register.
    pub fn simulated_entry(&self, t: &Trajectory, round: usize) -> Option<Vec<bool>> {
        let idx = t.states[0].as_basis()?;
        let sim = self.map.sim.as_ref()?;
        Some(crate::engine::read_bits(idx, self.layout.total(), &sim.rounds[round]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{trivial_reveal_protocol, trivial_reveal_simulator};
    use crate::engine::zk_audit;
    use crate::hiddenbit::enumerate_branches;
    use std::collections::BTreeMap;

    #[test]
    fn trivial_reveal_is_complete_and_binding() {
        let opts = EnumOptions::default();
        for k in 1..=3 {
            let honest = compile(&trivial_reveal_protocol(k)).unwrap();
            assert!(honest.verifier_steps_coin_controlled(), "{:?}", honest.coin_violations());
            assert_eq!(honest.coin_budget, 3 * k);
            let acc = honest.acceptance(AcceptanceMode::Exact, &opts).unwrap();
            assert!((acc.probability - 1.0).abs() < 1e-12);
            let liar = compile_with(&trivial_reveal_protocol(k), RevealBehavior::FlipFirstShare).unwrap();
            let acc = liar.acceptance(AcceptanceMode::Exact, &opts).unwrap();
            assert!((acc.probability - 0.5f64.powi(k as i32)).abs() < 1e-12, "k={k}: {}", acc.probability);
        }
    }

    #[test]
    fn compiled_reveal_matches_hidden_bit_module() {
        // joint distribution of (verifier coins, revealed shares)
        let k = 1;
        let c = compile(&trivial_reveal_protocol(k)).unwrap();
        let family = c.enumerate(&EnumOptions::default()).unwrap();
        let n = c.layout.total();
        let mut engine: BTreeMap<(usize, Vec<bool>), f64> = BTreeMap::new();
        for t in &family.branches {
            let idx = t.final_state().as_basis().unwrap();
            let coins: Vec<bool> = c.map.hb_coins[0].iter().map(|&q| crate::engine::read_bits(idx, n, &[q])[0]).collect();
            let revealed = crate::engine::read_bits(idx, n, &c.map.stored[0]);
            *engine.entry((from_bits(&coins), revealed)).or_default() += t.weight;
        }
        let mut module: BTreeMap<(usize, Vec<bool>), f64> = BTreeMap::new();
        for br in enumerate_branches(k) {
            let s = br.bundle.honest_reveal()[0];
            let w = *br.weight.numer() as f64 / *br.weight.denom() as f64;
            *module.entry((br.raw[0].0.index(), vec![s.s0, s.s1])).or_default() += w;
        }
        assert_eq!(engine.len(), module.len());
        for (key, w) in &module {
            assert!((engine[key] - w).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_reveal_audit_is_exact() {
        let opts = EnumOptions::default();
        for k in 1..=3 {
            let p = trivial_reveal_protocol(k);
            let real = compile(&p).unwrap().enumerate(&opts).unwrap();
            let sim = compile_simulator(&trivial_reveal_simulator(), &p).unwrap();
            let report = zk_audit(&real.views().unwrap(), &sim.simulator(&opts).unwrap(), 1e-9);
            assert!(report.pass(), "k={k}: {report:?}");
            assert_eq!(report.rounds.len(), real.rounds());
        }
    }

    #[test]
    fn honest_transcripts_match_classical_distribution() {
        let p = crate::compiler::echo_protocol(2);
        let c = compile(&p).unwrap();
        let family = c.enumerate(&EnumOptions::default()).unwrap();
        let mut induced: BTreeMap<Transcript, f64> = BTreeMap::new();
        for t in &family.branches {
            *induced.entry(c.transcript(t).unwrap()).or_default() += t.weight;
        }
        let classical = crate::compiler::prefix_marginal(&p.transcript_distribution().unwrap(), p.rounds.len());
        assert!(crate::compiler::total_variation(&induced, &classical) < 1e-12);
        assert!((family.acceptance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sim_register_layout() {
        let p = trivial_reveal_protocol(2);
        let (layout, map) = allocate(&p, true).unwrap();
        let sim = map.sim.unwrap();
        assert_eq!(sim.hb_coins.len(), 6);
        assert_eq!(sim.align.len(), 1);
        assert_eq!(sim.rounds[0].len(), 1);
        assert_eq!(layout.v_coins, 6);
    }
}
