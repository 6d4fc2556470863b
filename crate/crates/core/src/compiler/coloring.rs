//! Graph 3-coloring with hidden-bit commitments.
//!
//! Each vertex colour takes two hidden bits (value 3 is invalid). The prover
//! commits to a random relabelling of a colouring with `commit(c, r)`, the
//! verifier picks an edge from its coins (coins modulo the edge count) and
//! the prover opens both endpoints by revealing their hidden bits.

use std::sync::Arc;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{ClassicalHBProtocol, ClassicalSimulator, Round, Transcript};
use crate::hiddenbit::{binding_attack_value, commit, RevealTarget};
use crate::qmath::{from_bits, to_bits};
use crate::{Error, Result};

pub const MAX_VERTICES: usize = 6;

/// The six relabellings of `{0, 1, 2}`.
const PERMUTATIONS: [[u8; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let g = Graph { vertices, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices == 0 || self.vertices > MAX_VERTICES {
            return Err(Error::InvalidInstance(format!(
                "{} vertices (supported: 1..={MAX_VERTICES})",
                self.vertices
            )));
        }
        if self.edges.is_empty() {
            return Err(Error::InvalidInstance("graph has no edges".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v) in &self.edges {
            if u >= self.vertices || v >= self.vertices {
                return Err(Error::InvalidInstance(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidInstance(format!("self-loop at {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidInstance(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(())
    }

    pub fn triangle() -> Self {
        Graph { vertices: 3, edges: vec![(0, 1), (1, 2), (0, 2)] }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph { vertices: n, edges }
    }

    /// Verifier coins needed to address every edge.
    pub fn challenge_coins(&self) -> usize {
        let e = self.edges.len();
        if e <= 1 {
            1
        } else {
            (e - 1).ilog2() as usize + 1
        }
    }

    pub fn challenge(&self, coins: &[bool]) -> usize {
        from_bits(coins) % self.edges.len()
    }

    /// Exact probability of each edge being challenged.
    pub fn challenge_weights(&self) -> Vec<Rational64> {
        let c = self.challenge_coins();
        let mut w = vec![Rational64::from_integer(0); self.edges.len()];
        for x in 0..1usize << c {
            w[x % self.edges.len()] += Rational64::new(1, 1 << c);
        }
        w
    }

    pub fn is_proper(&self, colors: &[u8]) -> bool {
        self.edges.iter().all(|&(u, v)| edge_ok(colors[u], colors[v]))
    }
}

fn edge_ok(a: u8, b: u8) -> bool {
    a < 3 && b < 3 && a != b
}

fn all_colorings(n: usize, values: u8) -> impl Iterator<Item = Vec<u8>> {
    let total = (values as usize).pow(n as u32);
    (0..total).map(move |mut x| {
        (0..n)
            .map(|_| {
                let c = (x % values as usize) as u8;
                x /= values as usize;
                c
            })
            .collect()
    })
}

pub fn find_coloring(g: &Graph) -> Option<Vec<u8>> {
    all_colorings(g.vertices, 3).find(|c| g.is_proper(c))
}

/// Colouring maximizing the challenge weight of properly coloured edges.
pub fn best_effort_coloring(g: &Graph) -> Vec<u8> {
    let w = g.challenge_weights();
    let score = |c: &Vec<u8>| -> Rational64 {
        g.edges.iter().zip(&w).filter(|(&(u, v), _)| edge_ok(c[u], c[v])).map(|(_, w)| *w).sum()
    };
    let mut best = vec![0; g.vertices];
    let mut best_score = score(&best);
    for c in all_colorings(g.vertices, 3) {
        let s = score(&c);
        if s > best_score {
            best = c;
            best_score = s;
        }
    }
    best
}

fn color_bits(c: u8) -> [bool; 2] {
    [c & 2 != 0, c & 1 != 0]
}

fn bits_color(b: &[bool]) -> u8 {
    (u8::from(b[0]) << 1) | u8::from(b[1])
}

fn endpoint_bits(g: &Graph, edge: usize) -> Vec<usize> {
    let (u, v) = g.edges[edge];
    vec![2 * u, 2 * u + 1, 2 * v, 2 * v + 1]
}

/// Rounds: commitment (`2·|V|` bits), edge challenge, reveal of the four
/// endpoint hidden bits. A prover for a graph without a valid colouring
/// commits to [`best_effort_coloring`].
pub fn three_coloring_hb_protocol(g: &Graph, k: usize) -> Result<ClassicalHBProtocol> {
    g.validate()?;
    let coloring = find_coloring(g).unwrap_or_else(|| best_effort_coloring(g));
    let n = g.vertices;
    let vc = g.challenge_coins();
    let commit_round = Round::Prover {
        width: 2 * n,
        message: Arc::new(move |inp| {
            let perm = PERMUTATIONS[inp.choice];
            (0..n)
                .flat_map(|v| color_bits(perm[coloring[v] as usize]))
                .zip(inp.hidden)
                .map(|(c, &r)| commit(c, r))
                .collect()
        }),
    };
    let gc = g.clone();
    let challenge = Round::Verifier { width: vc, message: Arc::new(|coins, _| coins.to_vec()) };
    let reveal = Round::Reveal {
        count: 4,
        select: Arc::new(move |msgs| endpoint_bits(&gc, gc.challenge(&msgs[1]))),
    };
    let ga = g.clone();
    let accept = Arc::new(move |t: &Transcript| {
        let (u, v) = ga.edges[ga.challenge(&t.messages[1])];
        let com = &t.messages[0];
        let r = &t.messages[2];
        let open = |vertex: usize, at: usize| {
            bits_color(&[commit(com[2 * vertex], r[at]), commit(com[2 * vertex + 1], r[at + 1])])
        };
        edge_ok(open(u, 0), open(v, 2))
    });
    Ok(ClassicalHBProtocol {
        name: "3-coloring".into(),
        hidden_bits: 2 * n,
        k,
        verifier_coins: vc,
        prover_choices: PERMUTATIONS.len(),
        rounds: vec![commit_round, challenge, reveal],
        accept,
    })
}

/// Challenge first, two distinct colours for its endpoints, uniform
/// commitment words; the revealed hidden bits are then fixed by the
/// commitment and the colours.
pub fn three_coloring_simulator(g: &Graph) -> ClassicalSimulator {
    let g = g.clone();
    ClassicalSimulator::new(move || {
        let n = g.vertices;
        let vc = g.challenge_coins();
        let pairs: Vec<(u8, u8)> = (0..3u8).flat_map(|a| (0..3u8).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        let w = 1.0 / ((1usize << vc) * pairs.len() * (1usize << (2 * n))) as f64;
        let mut out = Vec::new();
        for c in 0..1usize << vc {
            let coins = to_bits(c, vc);
            let (u, v) = g.edges[g.challenge(&coins)];
            for &(a, b) in &pairs {
                for x in 0..1usize << (2 * n) {
                    let com = to_bits(x, 2 * n);
                    let [a0, a1] = color_bits(a);
                    let [b0, b1] = color_bits(b);
                    let revealed = vec![com[2 * u] ^ a0, com[2 * u + 1] ^ a1, com[2 * v] ^ b0, com[2 * v + 1] ^ b1];
                    out.push((w, Transcript { coins: coins.clone(), messages: vec![com, coins.clone(), revealed] }));
                }
            }
        }
        out
    })
}

/// A cheating prover that commits to `colors` (value 3 allowed) and, when
/// edge `e` is challenged, opens the opposite value of every revealed bit set
/// in `lies[e]` (bit 3 is the first revealed bit).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColoringStrategy {
    pub colors: Vec<u8>,
    pub lies: Vec<u8>,
}

impl ColoringStrategy {
    pub fn honest(colors: Vec<u8>, edges: usize) -> Self {
        Self { colors, lies: vec![0; edges] }
    }

    fn opened(&self, g: &Graph, e: usize) -> (u8, u8) {
        let (u, v) = g.edges[e];
        let mask = self.lies[e];
        (self.colors[u] ^ ((mask >> 2) & 3), self.colors[v] ^ (mask & 3))
    }

    pub fn lies_anywhere(&self) -> bool {
        self.lies.iter().any(|&m| m != 0)
    }
}

fn lie_cost(k: usize) -> Result<Rational64> {
    binding_attack_value(k, RevealTarget::Flipped)
}

/// Exact acceptance of a commit-and-open strategy and its split into edges
/// opened honestly and edges opened with at least one lie.
fn strategy_split(g: &Graph, s: &ColoringStrategy, beta: Rational64) -> (Rational64, Rational64) {
    let mut honest = Rational64::from_integer(0);
    let mut lying = Rational64::from_integer(0);
    for (e, w) in g.challenge_weights().into_iter().enumerate() {
        let (a, b) = s.opened(g, e);
        if !edge_ok(a, b) {
            continue;
        }
        let lies = s.lies[e].count_ones();
        if lies == 0 {
            honest += w;
        } else {
            lying += w * beta.pow(lies as i32);
        }
    }
    (honest, lying)
}

pub fn strategy_acceptance(g: &Graph, k: usize, s: &ColoringStrategy) -> Result<Rational64> {
    let (h, l) = strategy_split(g, s, lie_cost(k)?);
    Ok(h + l)
}

/// Best acceptance with perfectly binding commitments.
pub fn classical_soundness(g: &Graph) -> Rational64 {
    let w = g.challenge_weights();
    all_colorings(g.vertices, 4)
        .map(|c| g.edges.iter().zip(&w).filter(|(&(u, v), _)| edge_ok(c[u], c[v])).map(|(_, w)| *w).sum())
        .max()
        .unwrap_or_else(|| Rational64::from_integer(0))
}

/// Exhaustive search over committed colourings and per-edge lie masks.
pub fn optimal_cheating_strategy(g: &Graph, k: usize) -> Result<(ColoringStrategy, Rational64)> {
    g.validate()?;
    let beta = lie_cost(k)?;
    let w = g.challenge_weights();
    let mut best: Option<(ColoringStrategy, Rational64)> = None;
    for colors in all_colorings(g.vertices, 4) {
        let mut lies = Vec::with_capacity(g.edges.len());
        let mut value = Rational64::from_integer(0);
        for (e, &(u, v)) in g.edges.iter().enumerate() {
            let mut edge_best = (0u8, Rational64::from_integer(0));
            for mask in 0..16u8 {
                if !edge_ok(colors[u] ^ ((mask >> 2) & 3), colors[v] ^ (mask & 3)) {
                    continue;
                }
                let p = beta.pow(mask.count_ones() as i32);
                if p > edge_best.1 {
                    edge_best = (mask, p);
                }
            }
            lies.push(edge_best.0);
            value += w[e] * edge_best.1;
        }
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((ColoringStrategy { colors, lies }, value));
        }
    }
    Ok(best.expect("at least one colouring"))
}

/// Commits to the best classical colouring and lies on every edge, using the
/// fewest flipped bits that make the edge look proper.
pub fn all_lying_strategy(g: &Graph) -> ColoringStrategy {
    let colors = best_effort_coloring(g);
    let lies = g
        .edges
        .iter()
        .map(|&(u, v)| {
            (1..16u8)
                .filter(|m| edge_ok(colors[u] ^ ((m >> 2) & 3), colors[v] ^ (m & 3)))
                .min_by_key(|m| m.count_ones())
                .unwrap_or(1)
        })
        .collect();
    ColoringStrategy { colors, lies }
}

/// Acceptance split into honest openings (bounded by classical soundness)
/// and openings with a lie (bounded by `2^-k`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub k: usize,
    pub case_honest: f64,
    pub case_lying: f64,
    pub total: f64,
    pub classical_soundness: f64,
    pub slack: f64,
    pub lie_cost: f64,
    /// Exact rational forms, for reports.
    pub exact: [String; 3],
    pub honest_within_classical: bool,
    pub lying_within_slack: bool,
    pub total_within_union: bool,
}

impl SoundnessReport {
    pub fn pass(&self) -> bool {
        self.honest_within_classical && self.lying_within_slack && self.total_within_union
    }
}

fn as_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn soundness_case_report(g: &Graph, k: usize, s: &ColoringStrategy) -> Result<SoundnessReport> {
    g.validate()?;
    if s.colors.len() != g.vertices || s.lies.len() != g.edges.len() || s.lies.iter().any(|&m| m > 15) {
        return Err(Error::InvalidInstance("strategy shape does not match the graph".into()));
    }
    let beta = lie_cost(k)?;
    let (honest, lying) = strategy_split(g, s, beta);
    let classical = classical_soundness(g);
    let slack = Rational64::new(1, 1 << k);
    let total = honest + lying;
    Ok(SoundnessReport {
        k,
        case_honest: as_f64(honest),
        case_lying: as_f64(lying),
        total: as_f64(total),
        classical_soundness: as_f64(classical),
        slack: as_f64(slack),
        lie_cost: as_f64(beta),
        exact: [honest.to_string(), lying.to_string(), total.to_string()],
        honest_within_classical: honest <= classical,
        lying_within_slack: lying <= slack,
        total_within_union: total <= (classical + slack).min(Rational64::from_integer(1)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{factored_audit, factored_completeness, prefix_marginal, total_variation};
    use crate::compiler::{compile, compile_with, RevealBehavior};
    use crate::engine::{run_protocol, EnumOptions, InitialState};

    #[test]
    fn graphs_validate() {
        assert!(Graph::new(3, vec![(0, 1), (1, 2)]).is_ok());
        assert!(Graph::new(7, vec![(0, 1)]).is_err());
        assert!(Graph::new(3, vec![(0, 0)]).is_err());
        assert!(Graph::new(3, vec![(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, vec![(0, 3)]).is_err());
        assert!(find_coloring(&Graph::triangle()).is_some());
        assert!(find_coloring(&Graph::complete(4)).is_none());
        assert_eq!(Graph::complete(4).challenge_coins(), 3);
    }

    #[test]
    fn triangle_is_complete_and_simulatable() {
        let g = Graph::triangle();
        let p = three_coloring_hb_protocol(&g, 1).unwrap();
        assert_eq!(p.classical_completeness().unwrap(), Rational64::from_integer(1));
        let real = p.transcript_distribution().unwrap();
        let sim = (three_coloring_simulator(&g).distribution)();
        for j in 0..=3 {
            assert!(total_variation(&prefix_marginal(&real, j), &prefix_marginal(&sim, j)) < 1e-12, "prefix {j}");
        }
        let f = factored_audit(&p, &three_coloring_simulator(&g), 1e-9, &EnumOptions::default()).unwrap();
        assert!(f.pass(), "{f:?}");
        assert!((factored_completeness(&p, &f.probe).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn k4_optimum_matches_hand_count() {
        // one monochrome edge on a weight-1/8 challenge, opened with one lie
        let g = Graph::complete(4);
        assert_eq!(classical_soundness(&g), Rational64::new(7, 8));
        for k in 1..=3 {
            let (s, v) = optimal_cheating_strategy(&g, k).unwrap();
            assert_eq!(v, Rational64::new(7, 8) + Rational64::new(1, 8 << k));
            assert_eq!(strategy_acceptance(&g, k, &s).unwrap(), v);
            let r = soundness_case_report(&g, k, &s).unwrap();
            assert!(r.pass(), "{r:?}");
            assert!(1.0 - r.total >= 1.0 / 6.0 - r.slack);
        }
    }

    #[test]
    fn soundness_cases() {
        let g = Graph::complete(4);
        let honest = ColoringStrategy::honest(best_effort_coloring(&g), g.edges.len());
        let r = soundness_case_report(&g, 2, &honest).unwrap();
        assert_eq!(r.case_lying, 0.0);
        assert!(r.case_honest <= r.classical_soundness);
        let liar = all_lying_strategy(&g);
        assert!(liar.lies.iter().all(|&m| m != 0));
        let r = soundness_case_report(&g, 2, &liar).unwrap();
        assert_eq!(r.case_honest, 0.0);
        assert!(r.case_lying <= 0.25);
        assert!(r.pass());
    }

    #[test]
    fn compiled_triangle_samples_accept() {
        let g = Graph::triangle();
        let p = three_coloring_hb_protocol(&g, 1).unwrap();
        let c = compile(&p).unwrap();
        assert!(c.verifier_steps_coin_controlled());
        let mut rng = crate::seeded_rng(5);
        for _ in 0..10 {
            let run = run_protocol(&c.steps, &c.layout, &InitialState::CoinModel, &mut rng).unwrap();
            assert!(run.accept);
        }
    }

    #[test]
    fn compiled_k4_liar_matches_exact_value() {
        // flipping every revealed bit at k = 1: the opened colours are the
        // committed ones XOR 3 on both ends, each surviving with prob 1/16
        let g = Graph::complete(4);
        let p = three_coloring_hb_protocol(&g, 1).unwrap();
        let c = compile_with(&p, RevealBehavior::FlipFirstShare).unwrap();
        let trials = 400;
        let mut accepted = 0;
        for i in 0..trials {
            let mut rng = crate::trial_rng(9, i);
            if run_protocol(&c.steps, &c.layout, &InitialState::CoinModel, &mut rng).unwrap().accept {
                accepted += 1;
            }
        }
        let colors = best_effort_coloring(&g);
        // under every relabelling the number of proper edges after XOR 3 is
        // the same only on average; bound by the lying slack
        let bound = lie_cost(1).unwrap().pow(4);
        let (lo, _) = crate::engine::clopper_pearson(accepted, trials as usize, 0.999);
        assert!(lo <= as_f64(bound), "{accepted}/{trials} with {colors:?}");
    }
}
