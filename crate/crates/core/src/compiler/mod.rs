//! Compiling classical hidden-bit protocols into coin-model quantum
//! protocols.
//!
//! A [`ClassicalHBProtocol`] is a classical interactive proof in which the
//! prover starts with `m` uniformly random hidden bits and may reveal some of
//! them. [`compile`] turns it into engine steps: the verifier first builds
//! every hidden bit from coin-controlled share states, then replays the
//! classical rounds with reversible classical functions of its coins, checks
//! each reveal against its coins and finally writes the acceptance bit.
//! [`compile_simulator`] does the same for a classical simulator.
//!
//! [`coloring`] instantiates the construction with graph 3-coloring under
//! hidden-bit commitments.

mod audit;
mod circuit;
pub mod coloring;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Rational64;

pub use audit::{factored_audit, factored_completeness, hidden_bit_probe, FactoredAudit, ProbeReport};
pub use circuit::{
    compile, compile_simulator, compile_with, CompiledProtocol, CompiledSimulator, RegisterMap,
    RevealBehavior,
};

use crate::{Error, Result};

/// Classical transcript: verifier coins and one entry per round (the message
/// bits, or the revealed hidden-bit values for a reveal round).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transcript {
    pub coins: Vec<bool>,
    pub messages: Vec<Vec<bool>>,
}

/// What an honest prover sees when computing a message.
pub struct ProverInput<'a> {
    pub hidden: &'a [bool],
    /// Index of the prover's private random choice.
    pub choice: usize,
    /// Transcript entries of the earlier rounds.
    pub messages: &'a [Vec<bool>],
}

pub type ProverMessageFn = Arc<dyn Fn(&ProverInput<'_>) -> Vec<bool> + Send + Sync>;
pub type VerifierMessageFn = Arc<dyn Fn(&[bool], &[Vec<bool>]) -> Vec<bool> + Send + Sync>;
pub type RevealSelectFn = Arc<dyn Fn(&[Vec<bool>]) -> Vec<usize> + Send + Sync>;
pub type AcceptFn = Arc<dyn Fn(&Transcript) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum Round {
    Prover { width: usize, message: ProverMessageFn },
    /// Verifier message computed from its coins and the transcript so far.
    Verifier { width: usize, message: VerifierMessageFn },
    /// The prover reveals `count` hidden bits chosen from the transcript so
    /// far.
    Reveal { count: usize, select: RevealSelectFn },
}

impl Round {
    /// Transcript bits this round contributes.
    pub fn width(&self) -> usize {
        match self {
            Round::Prover { width, .. } | Round::Verifier { width, .. } => *width,
            Round::Reveal { count, .. } => *count,
        }
    }
}

#[derive(Clone)]
pub struct ClassicalHBProtocol {
    pub name: String,
    /// Number of hidden bits `m`.
    pub hidden_bits: usize,
    /// Security parameter: share pairs per hidden bit.
    pub k: usize,
    pub verifier_coins: usize,
    /// The honest prover draws one uniform value in `0..prover_choices`.
    pub prover_choices: usize,
    pub rounds: Vec<Round>,
    pub accept: AcceptFn,
}

impl std::fmt::Debug for ClassicalHBProtocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassicalHBProtocol")
            .field("name", &self.name)
            .field("hidden_bits", &self.hidden_bits)
            .field("k", &self.k)
            .field("verifier_coins", &self.verifier_coins)
            .field("prover_choices", &self.prover_choices)
            .field("rounds", &self.rounds.len())
            .finish()
    }
}

/// Largest classical space `2^coins · choices · 2^m` enumerated exactly.
pub const MAX_CLASSICAL_ENUMERATION: usize = 1 << 22;

impl ClassicalHBProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::MalformedProtocol("security parameter must be at least 1".into()));
        }
        if self.prover_choices == 0 {
            return Err(Error::MalformedProtocol("prover needs at least one choice".into()));
        }
        if self.hidden_bits == 0 && self.rounds.iter().any(|r| matches!(r, Round::Reveal { .. })) {
            return Err(Error::MalformedProtocol("reveal round without hidden bits".into()));
        }
        Ok(())
    }

    /// Coins used by the compiled verifier: its own plus three per share pair.
    pub fn coin_budget(&self) -> usize {
        self.verifier_coins + 3 * self.hidden_bits * self.k
    }

    fn checked_message(&self, round: usize, bits: Vec<bool>) -> Result<Vec<bool>> {
        let width = self.rounds[round].width();
        if bits.len() != width {
            return Err(Error::MalformedProtocol(format!(
                "round {round} produced {} bits, declared {width}",
                bits.len()
            )));
        }
        Ok(bits)
    }

    pub(crate) fn checked_selection(&self, round: usize, messages: &[Vec<bool>]) -> Result<Vec<usize>> {
        let Round::Reveal { count, select } = &self.rounds[round] else {
            return Err(Error::MalformedProtocol(format!("round {round} is not a reveal")));
        };
        let indices = select(messages);
        if indices.len() != *count {
            return Err(Error::MalformedProtocol(format!(
                "reveal round {round} selected {} bits, declared {count}",
                indices.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.hidden_bits) {
            return Err(Error::MalformedProtocol(format!(
                "reveal of hidden bit {bad} (only {} exist)",
                self.hidden_bits
            )));
        }
        Ok(indices)
    }

    /// Honest transcript for fixed coins, prover choice and hidden bits.
    pub fn honest_transcript(&self, coins: &[bool], choice: usize, hidden: &[bool]) -> Result<Transcript> {
        let mut messages: Vec<Vec<bool>> = Vec::with_capacity(self.rounds.len());
        for (r, round) in self.rounds.iter().enumerate() {
            let bits = match round {
                Round::Prover { message, .. } => {
                    message(&ProverInput { hidden, choice, messages: &messages })
                }
                Round::Verifier { message, .. } => message(coins, &messages),
                Round::Reveal { .. } => {
                    self.checked_selection(r, &messages)?.into_iter().map(|i| hidden[i]).collect()
                }
            };
            messages.push(self.checked_message(r, bits)?);
        }
        Ok(Transcript { coins: coins.to_vec(), messages })
    }

    /// Exact distribution of honest transcripts (coins, prover choice and
    /// hidden bits all uniform).
    pub fn transcript_distribution(&self) -> Result<Vec<(f64, Transcript)>> {
        self.validate()?;
        let space = (1usize << self.verifier_coins)
            .saturating_mul(self.prover_choices)
            .saturating_mul(1usize << self.hidden_bits);
        if self.verifier_coins + self.hidden_bits >= 40 || space > MAX_CLASSICAL_ENUMERATION {
            return Err(Error::Unsupported(format!("classical space of size {space}")));
        }
        let w = 1.0 / space as f64;
        let mut out = Vec::with_capacity(space);
        for c in 0..1usize << self.verifier_coins {
            let coins = crate::qmath::to_bits(c, self.verifier_coins);
            for choice in 0..self.prover_choices {
                for h in 0..1usize << self.hidden_bits {
                    let hidden = crate::qmath::to_bits(h, self.hidden_bits);
                    out.push((w, self.honest_transcript(&coins, choice, &hidden)?));
                }
            }
        }
        Ok(out)
    }

    /// Exact honest acceptance probability of the classical protocol.
    pub fn classical_completeness(&self) -> Result<Rational64> {
        let dist = self.transcript_distribution()?;
        let accepted = dist.iter().filter(|(_, t)| (self.accept)(t)).count();
        Ok(Rational64::new(accepted as i64, dist.len() as i64))
    }

    /// Total number of revealed hidden bits.
    pub fn reveal_count(&self) -> usize {
        self.rounds.iter().map(|r| if let Round::Reveal { count, .. } = r { *count } else { 0 }).sum()
    }
}

/// Exact transcript distribution produced by a classical simulator.
#[derive(Clone)]
pub struct ClassicalSimulator {
    pub distribution: Arc<dyn Fn() -> Vec<(f64, Transcript)> + Send + Sync>,
}

impl ClassicalSimulator {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn() -> Vec<(f64, Transcript)> + Send + Sync + 'static,
    {
        Self { distribution: Arc::new(f) }
    }
}

/// Marginal of a transcript distribution on the coins and the first
/// `rounds` entries.
pub fn prefix_marginal(dist: &[(f64, Transcript)], rounds: usize) -> BTreeMap<Transcript, f64> {
    let mut out = BTreeMap::new();
    for (w, t) in dist {
        let key = Transcript { coins: t.coins.clone(), messages: t.messages[..rounds].to_vec() };
        *out.entry(key).or_insert(0.0) += w;
    }
    out
}

/// Total variation distance between two finite distributions.
pub fn total_variation<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut sum = 0.0;
    for (k, p) in a {
        sum += (p - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, q) in b {
        if !a.contains_key(k) {
            sum += q;
        }
    }
    0.5 * sum
}

/// One hidden bit revealed in a single round; the verifier accepts whenever
/// the reveal verifies.
pub fn trivial_reveal_protocol(k: usize) -> ClassicalHBProtocol {
    ClassicalHBProtocol {
        name: "reveal".into(),
        hidden_bits: 1,
        k,
        verifier_coins: 0,
        prover_choices: 1,
        rounds: vec![Round::Reveal { count: 1, select: Arc::new(|_| vec![0]) }],
        accept: Arc::new(|_| true),
    }
}

/// Simulator for [`trivial_reveal_protocol`]: the revealed bit is uniform.
pub fn trivial_reveal_simulator() -> ClassicalSimulator {
    ClassicalSimulator::new(|| {
        [false, true]
            .into_iter()
            .map(|r| (0.5, Transcript { coins: vec![], messages: vec![vec![r]] }))
            .collect()
    })
}

/// The verifier sends a coin, the prover answers with the hidden bit XOR the
/// coin, then reveals the hidden bit; the verifier checks the answer.
pub fn echo_protocol(k: usize) -> ClassicalHBProtocol {
    ClassicalHBProtocol {
        name: "echo".into(),
        hidden_bits: 1,
        k,
        verifier_coins: 1,
        prover_choices: 1,
        rounds: vec![
            Round::Verifier { width: 1, message: Arc::new(|coins, _| vec![coins[0]]) },
            Round::Prover { width: 1, message: Arc::new(|inp| vec![inp.hidden[0] ^ inp.messages[0][0]]) },
            Round::Reveal { count: 1, select: Arc::new(|_| vec![0]) },
        ],
        accept: Arc::new(|t| t.messages[1][0] == t.messages[2][0] ^ t.messages[0][0]),
    }
}

/// Simulator for [`echo_protocol`]: coin and answer uniform, reveal fixed by
/// them.
pub fn echo_simulator() -> ClassicalSimulator {
    ClassicalSimulator::new(|| {
        let mut out = Vec::new();
        for coin in [false, true] {
            for answer in [false, true] {
                let messages = vec![vec![coin], vec![answer], vec![answer ^ coin]];
                out.push((0.25, Transcript { coins: vec![coin], messages }));
            }
        }
        out
    })
}
