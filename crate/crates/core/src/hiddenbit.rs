//! Hidden bits from verifier coins.
//!
//! For each pair of shares the verifier flips three coins `(b, s_b, c)` and
//! sends the two-qubit state `|s_b⟩|c^×⟩` (for `b = 0`) or `|c^×⟩|s_b⟩`
//! (for `b = 1`). The prover measures both qubits in the computational basis
//! and reads off the shares `(s⁰, s¹)`; the hidden bit is `r = s⁰ ⊕ s¹`.
//!
//! With security parameter `k` a hidden bit uses `k` pairs. Independent pairs
//! produce independent XORs, so after measuring the prover announces one
//! alignment bit `d_j = r_j ⊕ r_1` per extra pair and both sides flip `s¹_j`
//! by it (the verifier updates its share when `b_j = 1`). Every pair then
//! XORs to the same `r`, and `d_j` is a uniform bit independent of the
//! verifier's coins.
//!
//! The exhaustive analyses work with exact rational weights. Outcome
//! probabilities are read from the quantum states through
//! [`measurement_distribution`] and converted to dyadic rationals.

use std::collections::BTreeMap;

use num_rational::Rational64;
use rand::Rng;

use crate::par::Exec;
use crate::qmath::{
    measure_computational, measurement_distribution, mixture, DensityMatrix, QubitSet,
    StateVector, UnitaryMatrix,
};
use crate::{Error, Result};

/// Largest security parameter the exhaustive analyses accept.
pub const MAX_EXHAUSTIVE_K: usize = 3;

/// The verifier's three coins for one pair of shares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoinTriple {
    /// Which share the verifier holds.
    pub b: bool,
    /// Value of the held share.
    pub s_b: bool,
    /// Hadamard-basis value of the other share.
    pub c: bool,
}

impl CoinTriple {
    pub fn new(b: bool, s_b: bool, c: bool) -> Self {
        Self { b, s_b, c }
    }

    /// Triple number `i` (bits `b s_b c`, `b` most significant).
    pub fn from_index(i: usize) -> Self {
        Self::new(i & 4 != 0, i & 2 != 0, i & 1 != 0)
    }

    pub fn all() -> impl Iterator<Item = CoinTriple> {
        (0..8).map(Self::from_index)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(rng.random(), rng.random(), rng.random())
    }

    pub fn index(&self) -> usize {
        usize::from(self.b) << 2 | usize::from(self.s_b) << 1 | usize::from(self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SharePair {
    pub s0: bool,
    pub s1: bool,
}

impl SharePair {
    pub fn new(s0: bool, s1: bool) -> Self {
        Self { s0, s1 }
    }

    pub fn r(&self) -> bool {
        self.s0 ^ self.s1
    }

    /// Share at position `b`.
    pub fn share(&self, b: bool) -> bool {
        if b {
            self.s1
        } else {
            self.s0
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self::new(i & 2 != 0, i & 1 != 0)
    }

    pub fn index(&self) -> usize {
        usize::from(self.s0) << 1 | usize::from(self.s1)
    }
}

/// Two-qubit unitary `U_{b,s_b,c}` taking `|00⟩` to the share state.
pub fn share_prep_unitary(t: CoinTriple) -> UnitaryMatrix {
    let held = if t.s_b { UnitaryMatrix::x() } else { UnitaryMatrix::identity(1) };
    let phase = if t.c { UnitaryMatrix::z() } else { UnitaryMatrix::identity(1) };
    let other = phase.compose(&UnitaryMatrix::h()).expect("single-qubit operators");
    if t.b {
        other.kron(&held)
    } else {
        held.kron(&other)
    }
}

/// `|s_b⟩ ⊗ |c^×⟩` for `b = 0`, `|c^×⟩ ⊗ |s_b⟩` for `b = 1`.
pub fn share_prep_state(t: CoinTriple) -> StateVector {
    StateVector::zero(2)
        .apply(&share_prep_unitary(t))
        .expect("two-qubit unitary on two-qubit state")
}

/// The prover's computational-basis measurement: qubit 1 gives `s⁰`,
/// qubit 2 gives `s¹`.
pub fn prover_measure_shares<R: Rng + ?Sized>(state: &DensityMatrix, rng: &mut R) -> Result<SharePair> {
    if state.n() != 2 {
        return Err(Error::DimensionMismatch(format!("share state on {} qubits", state.n())));
    }
    let m = measure_computational(state, &QubitSet::all(2), rng)?;
    Ok(SharePair::new(m.bits[0], m.bits[1]))
}

/// Exact distribution of the prover's shares for one coin triple.
pub fn share_distribution(t: CoinTriple) -> Vec<(SharePair, Rational64)> {
    let rho = share_prep_state(t).to_density();
    measurement_distribution(&rho, &QubitSet::all(2))
        .expect("two targets on two qubits")
        .into_iter()
        .map(|(bits, p)| (SharePair::new(bits[0], bits[1]), dyadic(p)))
        .collect()
}

/// Accepts iff the revealed share at position `b` equals `s_b`.
pub fn verify_reveal(t: CoinTriple, revealed: SharePair) -> bool {
    revealed.share(t.b) == t.s_b
}

/// Prover's two-qubit state conditioned on the verifier's `b`, averaged over
/// uniform `(s_b, c)`.
pub fn prover_conditional_state(b: bool) -> DensityMatrix {
    let parts: Vec<_> = [(false, false), (false, true), (true, false), (true, true)]
        .into_iter()
        .map(|(s_b, c)| (0.25, share_prep_state(CoinTriple::new(b, s_b, c)).to_density()))
        .collect();
    mixture(&parts).expect("uniform weights")
}

/// Converts a probability that is a multiple of 2⁻³⁰ (up to round-off) to an
/// exact rational.
pub(crate) fn dyadic(p: f64) -> Rational64 {
    const SCALE: i64 = 1 << 30;
    let scaled = (p * SCALE as f64).round();
    debug_assert!((scaled / SCALE as f64 - p).abs() < 1e-12, "{p} is not dyadic");
    Rational64::new(scaled as i64, SCALE)
}

/// One pair of shares after alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairRecord {
    /// Coins as flipped.
    pub coins: CoinTriple,
    /// Alignment bit applied to `s¹` (always false for the first pair).
    pub flip: bool,
    /// Prover's shares after alignment.
    pub shares: SharePair,
}

impl PairRecord {
    /// The verifier's triple with its held share updated by the alignment.
    pub fn verifier_triple(&self) -> CoinTriple {
        CoinTriple { s_b: self.coins.s_b ^ (self.coins.b && self.flip), ..self.coins }
    }
}

/// A hidden bit with security parameter `k`: verifier coins, prover shares
/// and the bit itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiddenBitBundle {
    pub k: usize,
    pub pairs: Vec<PairRecord>,
    pub r: bool,
}

impl HiddenBitBundle {
    /// Runs the quantum construction: coins, share states, prover
    /// measurement, alignment.
    pub fn generate<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(Error::Unsupported("security parameter must be at least 1".into()));
        }
        let mut raw = Vec::with_capacity(k);
        for _ in 0..k {
            let coins = CoinTriple::random(rng);
            let shares = prover_measure_shares(&share_prep_state(coins).to_density(), rng)?;
            raw.push((coins, shares));
        }
        Ok(Self::align(raw))
    }

    /// Aligns raw `(coins, shares)` pairs to the first pair's XOR.
    pub fn align(raw: Vec<(CoinTriple, SharePair)>) -> Self {
        let r = raw[0].1.r();
        let pairs = raw
            .into_iter()
            .map(|(coins, shares)| {
                let flip = shares.r() != r;
                PairRecord { coins, flip, shares: SharePair::new(shares.s0, shares.s1 ^ flip) }
            })
            .collect::<Vec<_>>();
        Self { k: pairs.len(), pairs, r }
    }

    pub fn alignment(&self) -> Vec<bool> {
        self.pairs.iter().map(|p| p.flip).collect()
    }

    /// The shares an honest prover reveals.
    pub fn honest_reveal(&self) -> Vec<SharePair> {
        self.pairs.iter().map(|p| p.shares).collect()
    }

    /// A reveal of `r̄` that flips the first share of every pair.
    pub fn flipped_reveal(&self) -> Vec<SharePair> {
        self.pairs.iter().map(|p| SharePair::new(!p.shares.s0, p.shares.s1)).collect()
    }

    /// Verifier's check of a reveal. Returns the revealed bit when every pair
    /// matches the held share and all pairs agree on the XOR.
    pub fn verify(&self, revealed: &[SharePair]) -> Option<bool> {
        if revealed.len() != self.k {
            return None;
        }
        let value = revealed[0].r();
        let ok = self
            .pairs
            .iter()
            .zip(revealed)
            .all(|(p, &rev)| rev.r() == value && verify_reveal(p.verifier_triple(), rev));
        ok.then_some(value)
    }
}

/// What a prover tries to reveal in the binding analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RevealTarget {
    /// Reveal the true `r`.
    Honest,
    /// Reveal `r̄`.
    Flipped,
}

/// One branch of the exhaustive model: coins and measurement outcomes for all
/// `k` pairs, with its exact probability.
#[derive(Clone, Debug)]
pub(crate) struct Branch {
    pub weight: Rational64,
    pub raw: Vec<(CoinTriple, SharePair)>,
    pub bundle: HiddenBitBundle,
}

pub(crate) fn check_exhaustive(k: usize) -> Result<()> {
    if k == 0 || k > MAX_EXHAUSTIVE_K {
        return Err(Error::Unsupported(format!(
            "exhaustive analysis supports 1 ≤ k ≤ {MAX_EXHAUSTIVE_K}, got k = {k}"
        )));
    }
    Ok(())
}

/// Every branch of the `k`-pair construction.
pub(crate) fn enumerate_branches(k: usize) -> Vec<Branch> {
    let per_triple: Vec<Vec<(SharePair, Rational64)>> =
        CoinTriple::all().map(share_distribution).collect();
    let coin_weight = Rational64::new(1, 8);
    let mut branches = vec![(Rational64::new(1, 1), Vec::new())];
    for _ in 0..k {
        let mut next = Vec::with_capacity(branches.len() * 16);
        for (w, raw) in &branches {
            for t in CoinTriple::all() {
                for &(shares, p) in &per_triple[t.index()] {
                    let mut raw2: Vec<(CoinTriple, SharePair)> = raw.clone();
                    raw2.push((t, shares));
                    next.push((*w * coin_weight * p, raw2));
                }
            }
        }
        branches = next;
    }
    branches
        .into_iter()
        .map(|(weight, raw)| Branch { weight, bundle: HiddenBitBundle::align(raw.clone()), raw })
        .collect()
}

/// Best success probability of a prover revealing `target`, maximised over
/// every deterministic reveal strategy.
///
/// A strategy maps the prover's raw outcomes on all `k` pairs to `k` revealed
/// pairs. Success probability is linear in the strategy, so the maximum is
/// attained by choosing the best reveal separately for every outcome tuple;
/// this is exact over all `(4^k)^(4^k)` strategies.
pub fn binding_attack_value(k: usize, target: RevealTarget) -> Result<Rational64> {
    binding_attack_value_with(k, target, Exec::default())
}

pub fn binding_attack_value_with(k: usize, target: RevealTarget, exec: Exec) -> Result<Rational64> {
    check_exhaustive(k)?;
    let mut by_view: BTreeMap<Vec<SharePair>, Vec<Branch>> = BTreeMap::new();
    for br in enumerate_branches(k) {
        let view = br.raw.iter().map(|(_, s)| *s).collect();
        by_view.entry(view).or_default().push(br);
    }
    let groups: Vec<Vec<Branch>> = by_view.into_values().collect();
    let reveals: Vec<Vec<SharePair>> = (0..1usize << (2 * k))
        .map(|i| (0..k).map(|j| SharePair::from_index(i >> (2 * (k - 1 - j)) & 3)).collect())
        .collect();
    let best = exec.map_slice(&groups, |group| {
        let claimed = match target {
            RevealTarget::Honest => group[0].bundle.r,
            RevealTarget::Flipped => !group[0].bundle.r,
        };
        reveals
            .iter()
            .filter(|rev| rev.iter().all(|p| p.r() == claimed))
            .map(|rev| {
                group
                    .iter()
                    .filter(|br| br.bundle.verify(rev) == Some(claimed))
                    .map(|br| br.weight)
                    .sum::<Rational64>()
            })
            .max()
            .unwrap_or_default()
    });
    Ok(best.into_iter().sum())
}

/// Expected distance of `r` from a uniform bit given everything the verifier
/// holds (coins and alignment bits):
/// `Σ_view Pr[view] · |Pr[r = 0 | view] − ½|`.
pub fn hiding_audit(k: usize) -> Result<Rational64> {
    check_exhaustive(k)?;
    let mut by_view: BTreeMap<(Vec<CoinTriple>, Vec<bool>), (Rational64, Rational64)> =
        BTreeMap::new();
    for br in enumerate_branches(k) {
        let coins = br.raw.iter().map(|(c, _)| *c).collect();
        let entry = by_view.entry((coins, br.bundle.alignment())).or_default();
        entry.0 += br.weight;
        if !br.bundle.r {
            entry.1 += br.weight;
        }
    }
    let half = Rational64::new(1, 2);
    Ok(by_view
        .values()
        .map(|&(total, zero)| {
            let d = zero / total - half;
            total * if d < Rational64::default() { -d } else { d }
        })
        .sum())
}

/// `Pr[r = 0]` over all coins and measurement branches.
pub fn r_marginal_zero(k: usize) -> Result<Rational64> {
    check_exhaustive(k)?;
    Ok(enumerate_branches(k)
        .iter()
        .filter(|br| !br.bundle.r)
        .map(|br| br.weight)
        .sum())
}

/// Commits to `c` with hidden bit `r`.
pub fn commit(c: bool, r: bool) -> bool {
    c ^ r
}

/// Opens a commitment once `r` has been revealed.
pub fn open(commitment: bool, r: bool) -> bool {
    commitment ^ r
}

/// Statistical distance between the verifier's joint view (coins, alignment
/// bits, commitment) for `c = 0` and for `c = 1`.
pub fn commitment_hiding_distance(k: usize) -> Result<Rational64> {
    check_exhaustive(k)?;
    type View = (Vec<CoinTriple>, Vec<bool>, bool);
    let mut dist: [BTreeMap<View, Rational64>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for br in enumerate_branches(k) {
        let coins: Vec<CoinTriple> = br.raw.iter().map(|(c, _)| *c).collect();
        for c in [false, true] {
            let view = (coins.clone(), br.bundle.alignment(), commit(c, br.bundle.r));
            *dist[usize::from(c)].entry(view).or_default() += br.weight;
        }
    }
    let mut total = Rational64::default();
    for (view, p) in &dist[0] {
        let q = dist[1].get(view).copied().unwrap_or_default();
        total += if *p > q { *p - q } else { q - *p };
    }
    for (view, q) in &dist[1] {
        if !dist[0].contains_key(view) {
            total += *q;
        }
    }
    Ok(total / 2)
}

/// Probability that opening the complement of the committed bit is caught:
/// opening `c̄` means revealing `r̄`.
pub fn opening_catch_probability(k: usize) -> Result<Rational64> {
    Ok(Rational64::new(1, 1) - binding_attack_value(k, RevealTarget::Flipped)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::trace_distance;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn share_prep_examples() {
        let s = share_prep_state(CoinTriple::new(false, true, false));
        let expected = StateVector::basis(1, 1).tensor(&StateVector::plus());
        assert!((s.inner(&expected).norm() - 1.0).abs() < 1e-12);
        let s = share_prep_state(CoinTriple::new(true, false, true));
        let expected = StateVector::minus().tensor(&StateVector::zero(1));
        assert!((s.inner(&expected).norm() - 1.0).abs() < 1e-12);
        let s = share_prep_state(CoinTriple::new(false, false, false));
        let expected = StateVector::zero(1).tensor(&StateVector::plus());
        assert!((s.inner(&expected).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prover_measurement_examples() {
        let mut rng = crate::seeded_rng(11);
        let t = CoinTriple::new(false, true, false);
        let rho = share_prep_state(t).to_density();
        let mut seen = [false; 2];
        for _ in 0..64 {
            let s = prover_measure_shares(&rho, &mut rng).unwrap();
            assert!(s.s0);
            seen[usize::from(s.s1)] = true;
        }
        assert_eq!(seen, [true, true]);
        let rho = share_prep_state(CoinTriple::new(false, false, false)).to_density();
        for _ in 0..16 {
            assert!(!prover_measure_shares(&rho, &mut rng).unwrap().s0);
        }
    }

    #[test]
    fn r_is_uniform_and_independent_of_verifier_share() {
        // all 8 coin triples × outcome branches
        let mut joint: BTreeMap<(bool, bool, bool), Rational64> = BTreeMap::new();
        for t in CoinTriple::all() {
            for (shares, p) in share_distribution(t) {
                assert_eq!(shares.share(t.b), t.s_b);
                *joint.entry((t.b, t.s_b, shares.r())).or_default() += p / 8;
            }
        }
        for b in [false, true] {
            for s in [false, true] {
                for rv in [false, true] {
                    assert_eq!(joint[&(b, s, rv)], r(1, 8));
                }
            }
        }
    }

    #[test]
    fn verify_reveal_examples() {
        let t = CoinTriple::new(false, true, false);
        assert!(verify_reveal(t, SharePair::new(true, false)));
        assert!(verify_reveal(t, SharePair::new(true, true)));
        assert!(!verify_reveal(t, SharePair::new(false, true)));
        let honest: Rational64 = CoinTriple::all()
            .flat_map(|t| share_distribution(t).into_iter().map(move |(s, p)| (t, s, p)))
            .filter(|(t, s, _)| verify_reveal(*t, *s))
            .map(|(_, _, p)| p / 8)
            .sum();
        assert_eq!(honest, r(1, 1));
    }

    #[test]
    fn prover_cannot_see_b() {
        let rho0 = prover_conditional_state(false);
        let rho1 = prover_conditional_state(true);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(rho0.max_abs_diff(&mixed) <= 1e-12);
        assert!(rho1.max_abs_diff(&mixed) <= 1e-12);
        assert!(trace_distance(&rho0, &rho1).unwrap() < 1e-12);
    }

    #[test]
    fn binding_values() {
        assert_eq!(binding_attack_value(1, RevealTarget::Flipped).unwrap(), r(1, 2));
        assert_eq!(binding_attack_value(2, RevealTarget::Flipped).unwrap(), r(1, 4));
        assert_eq!(binding_attack_value(3, RevealTarget::Flipped).unwrap(), r(1, 8));
        for k in 1..=3 {
            assert_eq!(binding_attack_value(k, RevealTarget::Honest).unwrap(), r(1, 1));
        }
        assert!(matches!(binding_attack_value(4, RevealTarget::Flipped), Err(Error::Unsupported(_))));
        assert!(binding_attack_value(0, RevealTarget::Flipped).is_err());
    }

    /// Brute force over every function from the prover's raw outcome to a
    /// revealed pair (4 outcomes, 4 reveals: 256 strategies) at k = 1.
    #[test]
    fn binding_brute_force_k1() {
        let branches = enumerate_branches(1);
        let mut best = Rational64::default();
        for strategy in 0..256usize {
            let reveal = |obs: SharePair| SharePair::from_index(strategy >> (2 * obs.index()) & 3);
            let value: Rational64 = branches
                .iter()
                .filter(|br| {
                    let rev = reveal(br.raw[0].1);
                    rev.r() != br.bundle.r && br.bundle.verify(&[rev]) == Some(rev.r())
                })
                .map(|br| br.weight)
                .sum();
            best = best.max(value);
        }
        assert_eq!(best, r(1, 2));
    }

    #[test]
    fn binding_is_multiplicative() {
        let one = binding_attack_value(1, RevealTarget::Flipped).unwrap();
        for k in 2..=3u32 {
            let v = binding_attack_value(k as usize, RevealTarget::Flipped).unwrap();
            assert_eq!(v, one.pow(k as i32));
        }
    }

    #[test]
    fn hiding_and_uniformity() {
        for k in 1..=3 {
            assert_eq!(hiding_audit(k).unwrap(), Rational64::default());
            assert_eq!(r_marginal_zero(k).unwrap(), r(1, 2));
        }
        // the prover, holding both shares, knows r exactly
        for br in enumerate_branches(2) {
            assert!(br.bundle.pairs.iter().all(|p| p.shares.r() == br.bundle.r));
        }
    }

    #[test]
    fn bundle_invariants() {
        let mut rng = crate::seeded_rng(12);
        for k in 1..=4 {
            for _ in 0..20 {
                let hb = HiddenBitBundle::generate(k, &mut rng).unwrap();
                for p in &hb.pairs {
                    assert_eq!(p.shares.r(), hb.r);
                    let t = p.verifier_triple();
                    assert_eq!(p.shares.share(t.b), t.s_b);
                }
                assert!(!hb.pairs[0].flip);
                assert_eq!(hb.verify(&hb.honest_reveal()), Some(hb.r));
            }
        }
    }

    #[test]
    fn commitment_examples() {
        assert!(commit(true, false));
        assert!(open(true, false));
        for c in [false, true] {
            for rv in [false, true] {
                assert_eq!(open(commit(c, rv), rv), c);
            }
        }
        for k in 1..=3 {
            assert_eq!(commitment_hiding_distance(k).unwrap(), Rational64::default());
            assert_eq!(
                opening_catch_probability(k).unwrap(),
                r(1, 1) - r(1, 1i64 << k)
            );
        }
    }

    #[test]
    fn exec_paths_agree() {
        let a = binding_attack_value_with(2, RevealTarget::Flipped, Exec::Sequential).unwrap();
        let b = binding_attack_value_with(2, RevealTarget::Flipped, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
