use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::sparse::{bit, read, read_bits, write, write_bits, Index};
use crate::qmath::{QubitSet, UnitaryMatrix, C64, TOLERANCE};
use crate::{Error, Result};

/// Qubit counts of the registers.
///
/// Global order is `V_work, V_coins, M, W, P`, so the verifier's view
/// `V ⊗ M ⊗ W` is a prefix of the global index and keeps the same qubit
/// numbers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    pub v_work: usize,
    pub v_coins: usize,
    pub m: usize,
    pub w: usize,
    pub p: usize,
}

impl RegisterLayout {
    pub fn new(v_work: usize, v_coins: usize, m: usize, p: usize) -> Self {
        Self { v_work, v_coins, m, w: 0, p }
    }

    pub fn with_aux(mut self, w: usize) -> Self {
        self.w = w;
        self
    }

    pub fn total(&self) -> usize {
        self.v_work + self.v_coins + self.m + self.w + self.p
    }

    /// Qubits kept in the verifier's view.
    pub fn view_width(&self) -> usize {
        self.v_work + self.v_coins + self.m + self.w
    }

    pub fn work_qubits(&self) -> QubitSet {
        QubitSet::range(1, self.v_work)
    }

    pub fn coin_qubits(&self) -> QubitSet {
        QubitSet::range(1 + self.v_work, self.v_coins)
    }

    pub fn message_qubits(&self) -> QubitSet {
        QubitSet::range(1 + self.v_work + self.v_coins, self.m)
    }

    pub fn aux_qubits(&self) -> QubitSet {
        QubitSet::range(1 + self.v_work + self.v_coins + self.m, self.w)
    }

    pub fn prover_qubits(&self) -> QubitSet {
        QubitSet::range(1 + self.view_width(), self.p)
    }

    /// Global index of the `i`-th (0-based) workspace qubit.
    pub fn work(&self, i: usize) -> usize {
        assert!(i < self.v_work, "workspace qubit {i} out of range");
        1 + i
    }

    pub fn coin(&self, i: usize) -> usize {
        assert!(i < self.v_coins, "coin {i} out of range");
        1 + self.v_work + i
    }

    pub fn message(&self, i: usize) -> usize {
        assert!(i < self.m, "message qubit {i} out of range");
        1 + self.v_work + self.v_coins + i
    }

    pub fn aux(&self, i: usize) -> usize {
        assert!(i < self.w, "auxiliary qubit {i} out of range");
        1 + self.v_work + self.v_coins + self.m + i
    }

    pub fn prover(&self, i: usize) -> usize {
        assert!(i < self.p, "prover qubit {i} out of range");
        1 + self.view_width() + i
    }

    /// Acceptance is read from the first workspace qubit.
    pub fn accept_qubit(&self) -> Option<usize> {
        (self.v_work > 0).then_some(1)
    }

    fn verifier_may_touch(&self, q: usize) -> bool {
        q >= 1 && q <= self.view_width()
    }

    fn prover_may_touch(&self, q: usize) -> bool {
        let m_start = self.v_work + self.v_coins;
        (q > m_start && q <= m_start + self.m) || (q > self.view_width() && q <= self.total())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Actor {
    Prover,
    Verifier,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Actor::Prover => "prover",
            Actor::Verifier => "verifier",
        })
    }
}

/// Classical function embedded reversibly by [`Action::Oracle`].
pub type ClassicalFn = Arc<dyn Fn(&[bool]) -> Vec<bool> + Send + Sync>;

#[derive(Clone)]
pub enum Action {
    /// A unitary on `targets` (first target is the unitary's qubit 1).
    Unitary { targets: QubitSet, unitary: UnitaryMatrix },
    /// Applies `table[x]` to `targets`, where `x` is the basis value of
    /// `controls` (first control most significant).
    Controlled { controls: QubitSet, targets: QubitSet, table: Vec<UnitaryMatrix> },
    /// `|x⟩|y⟩ ↦ |x⟩|y ⊕ f(x)⟩`.
    Oracle { inputs: QubitSet, outputs: QubitSet, f: ClassicalFn },
    /// Exchanges `a[i]` and `b[i]` for every `i`.
    Swap { a: QubitSet, b: QubitSet },
    /// Computational-basis measurement; outcomes stay in the measured qubits.
    Measure { targets: QubitSet },
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Unitary { targets, .. } => write!(f, "Unitary{:?}", targets.indices()),
            Action::Controlled { controls, targets, .. } => {
                write!(f, "Controlled{:?}->{:?}", controls.indices(), targets.indices())
            }
            Action::Oracle { inputs, outputs, .. } => {
                write!(f, "Oracle{:?}->{:?}", inputs.indices(), outputs.indices())
            }
            Action::Swap { a, b } => write!(f, "Swap{:?}<->{:?}", a.indices(), b.indices()),
            Action::Measure { targets } => write!(f, "Measure{:?}", targets.indices()),
        }
    }
}

impl Action {
    pub fn unitary(targets: &[usize], unitary: UnitaryMatrix) -> Result<Self> {
        Ok(Action::Unitary { targets: QubitSet::new(targets)?, unitary })
    }

    pub fn controlled(controls: &[usize], targets: &[usize], table: Vec<UnitaryMatrix>) -> Result<Self> {
        Ok(Action::Controlled {
            controls: QubitSet::new(controls)?,
            targets: QubitSet::new(targets)?,
            table,
        })
    }

    pub fn oracle<F>(inputs: &[usize], outputs: &[usize], f: F) -> Result<Self>
    where
        F: Fn(&[bool]) -> Vec<bool> + Send + Sync + 'static,
    {
        Ok(Action::Oracle { inputs: QubitSet::new(inputs)?, outputs: QubitSet::new(outputs)?, f: Arc::new(f) })
    }

    /// `|x⟩|y⟩ ↦ |x⟩|y ⊕ x⟩` over equal-length registers.
    pub fn copy(from: &[usize], to: &[usize]) -> Result<Self> {
        Self::oracle(from, to, |x| x.to_vec())
    }

    pub fn swap(a: &[usize], b: &[usize]) -> Result<Self> {
        Ok(Action::Swap { a: QubitSet::new(a)?, b: QubitSet::new(b)? })
    }

    pub fn measure(targets: &[usize]) -> Result<Self> {
        Ok(Action::Measure { targets: QubitSet::new(targets)? })
    }

    /// Every qubit the action reads or writes.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Action::Unitary { targets, .. } | Action::Measure { targets } => targets.indices().to_vec(),
            Action::Controlled { controls, targets, .. } => {
                controls.indices().iter().chain(targets.indices()).copied().collect()
            }
            Action::Oracle { inputs, outputs, .. } => {
                inputs.indices().iter().chain(outputs.indices()).copied().collect()
            }
            Action::Swap { a, b } => a.indices().iter().chain(b.indices()).copied().collect(),
        }
    }

    /// Shape checks against an `n`-qubit system.
    pub fn validate(&self, n: usize) -> Result<()> {
        let all = QubitSet::new(self.qubits())?;
        all.check(n)?;
        match self {
            Action::Unitary { targets, unitary } => {
                if unitary.n() != targets.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{}-qubit unitary on {} targets",
                        unitary.n(),
                        targets.len()
                    )));
                }
            }
            Action::Controlled { controls, targets, table } => {
                if table.len() != 1 << controls.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} table entries for {} controls",
                        table.len(),
                        controls.len()
                    )));
                }
                if let Some(u) = table.iter().find(|u| u.n() != targets.len()) {
                    return Err(Error::DimensionMismatch(format!(
                        "{}-qubit table entry on {} targets",
                        u.n(),
                        targets.len()
                    )));
                }
            }
            Action::Swap { a, b } if a.len() != b.len() => {
                return Err(Error::DimensionMismatch("swap registers differ in length".into()));
            }
            Action::Measure { targets } if targets.is_empty() => return Err(Error::EmptySelection),
            _ => {}
        }
        Ok(())
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Action::Measure { .. })
    }

    /// Image of basis vector `index` under a non-measuring action.
    pub(crate) fn image(&self, n: usize, index: Index) -> Result<Vec<(Index, C64)>> {
        match self {
            Action::Unitary { targets, unitary } => Ok(apply_small(n, index, targets.indices(), unitary)),
            Action::Controlled { controls, targets, table } => {
                let x = read(index, n, controls.indices());
                Ok(apply_small(n, index, targets.indices(), &table[x]))
            }
            Action::Oracle { inputs, outputs, f } => {
                let x = read_bits(index, n, inputs.indices());
                let fx = f(&x);
                if fx.len() != outputs.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "oracle returned {} bits for {} outputs",
                        fx.len(),
                        outputs.len()
                    )));
                }
                let y = read_bits(index, n, outputs.indices());
                let out: Vec<bool> = y.iter().zip(&fx).map(|(a, b)| a ^ b).collect();
                Ok(vec![(write_bits(index, n, outputs.indices(), &out), C64::new(1.0, 0.0))])
            }
            Action::Swap { a, b } => {
                let va = read_bits(index, n, a.indices());
                let vb = read_bits(index, n, b.indices());
                let moved = write_bits(write_bits(index, n, a.indices(), &vb), n, b.indices(), &va);
                Ok(vec![(moved, C64::new(1.0, 0.0))])
            }
            Action::Measure { .. } => Err(Error::Unsupported("measurement is not linear".into())),
        }
    }
}

fn apply_small(n: usize, index: Index, targets: &[usize], u: &UnitaryMatrix) -> Vec<(Index, C64)> {
    let x = read(index, n, targets);
    let m = u.matrix();
    (0..m.nrows())
        .filter_map(|y| {
            let a = m[(y, x)];
            (a.norm() > super::sparse::PRUNE).then(|| (write(index, n, targets, y), a))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ProtocolStep {
    pub actor: Actor,
    pub label: String,
    pub actions: Vec<Action>,
}

impl ProtocolStep {
    pub fn verifier(label: impl Into<String>, actions: Vec<Action>) -> Self {
        Self { actor: Actor::Verifier, label: label.into(), actions }
    }

    pub fn prover(label: impl Into<String>, actions: Vec<Action>) -> Self {
        Self { actor: Actor::Prover, label: label.into(), actions }
    }
}

/// Shape and register-hygiene checks for a whole protocol: the verifier may
/// touch `V ⊗ M ⊗ W`, the prover only `M ⊗ P`.
pub fn validate_protocol(steps: &[ProtocolStep], layout: &RegisterLayout) -> Result<()> {
    let n = layout.total();
    for (i, step) in steps.iter().enumerate() {
        for action in &step.actions {
            action.validate(n)?;
            let allowed = |q: usize| match step.actor {
                Actor::Verifier => layout.verifier_may_touch(q),
                Actor::Prover => layout.prover_may_touch(q),
            };
            if let Some(q) = action.qubits().into_iter().find(|&q| !allowed(q)) {
                return Err(Error::RegisterViolation(format!(
                    "step {} ({}): {} touches qubit {q}",
                    i + 1,
                    step.label,
                    step.actor
                )));
            }
        }
    }
    Ok(())
}

/// Whether a verifier step uses coins only as controls: nothing measures,
/// swaps or writes a coin, and any unitary acting on coin qubits is block
/// diagonal in their computational basis. Prover steps pass trivially.
pub fn coin_control_check(step: &ProtocolStep, coins: &QubitSet) -> bool {
    coin_control_violation(step, coins).is_none()
}

/// The first reason [`coin_control_check`] fails, if any.
pub fn coin_control_violation(step: &ProtocolStep, coins: &QubitSet) -> Option<String> {
    if step.actor == Actor::Prover {
        return None;
    }
    step.actions.iter().find_map(|action| {
        let touches = |set: &QubitSet| set.indices().iter().find(|&&q| coins.contains(q)).copied();
        match action {
            Action::Measure { targets } => {
                touches(targets).map(|q| format!("measures coin {q}")).or_else(|| {
                    Some("verifier measurement in the coin model".to_string())
                })
            }
            Action::Swap { a, b } => touches(a).or(touches(b)).map(|q| format!("swaps coin {q}")),
            Action::Oracle { outputs, .. } => touches(outputs).map(|q| format!("writes coin {q}")),
            Action::Controlled { targets, .. } => {
                touches(targets).map(|q| format!("controlled unitary targets coin {q}"))
            }
            Action::Unitary { targets, unitary } => {
                let positions: Vec<usize> = targets
                    .indices()
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| coins.contains(**q))
                    .map(|(i, _)| i + 1)
                    .collect();
                if positions.is_empty() {
                    return None;
                }
                let t = targets.len();
                let m = unitary.matrix();
                for x in 0..m.ncols() {
                    for y in 0..m.nrows() {
                        let moved = positions
                            .iter()
                            .any(|&p| bit(x as Index, t, p) != bit(y as Index, t, p));
                        if moved && m[(y, x)].norm() > TOLERANCE {
                            return Some(format!(
                                "unitary on {:?} changes coin values",
                                targets.indices()
                            ));
                        }
                    }
                }
                None
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> RegisterLayout {
        RegisterLayout::new(1, 1, 1, 1)
    }

    #[test]
    fn layout_blocks_are_contiguous() {
        let l = RegisterLayout::new(2, 3, 2, 4).with_aux(1);
        assert_eq!(l.total(), 12);
        assert_eq!(l.coin_qubits().indices(), &[3, 4, 5]);
        assert_eq!(l.message_qubits().indices(), &[6, 7]);
        assert_eq!(l.aux_qubits().indices(), &[8]);
        assert_eq!(l.prover_qubits().indices(), &[9, 10, 11, 12]);
        assert_eq!(l.view_width(), 8);
        assert_eq!(l.prover(0), 9);
    }

    #[test]
    fn hygiene() {
        let l = layout();
        let bad = ProtocolStep::prover("peek", vec![Action::unitary(&[1], UnitaryMatrix::x()).unwrap()]);
        assert!(matches!(validate_protocol(&[bad], &l), Err(Error::RegisterViolation(_))));
        let bad = ProtocolStep::verifier("peek", vec![Action::unitary(&[4], UnitaryMatrix::x()).unwrap()]);
        assert!(matches!(validate_protocol(&[bad], &l), Err(Error::RegisterViolation(_))));
        let ok = ProtocolStep::prover("msg", vec![Action::swap(&[3], &[4]).unwrap()]);
        assert!(validate_protocol(&[ok], &l).is_ok());
        let wide = ProtocolStep::verifier("oob", vec![Action::unitary(&[5], UnitaryMatrix::x()).unwrap()]);
        assert!(matches!(validate_protocol(&[wide], &l), Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn coin_control_examples() {
        let l = layout();
        let coins = l.coin_qubits();
        let cnot = ProtocolStep::verifier("cnot", vec![Action::unitary(&[2, 1], UnitaryMatrix::cnot()).unwrap()]);
        assert!(coin_control_check(&cnot, &coins));
        let controlled = ProtocolStep::verifier(
            "cx",
            vec![Action::controlled(&[2], &[1], vec![UnitaryMatrix::identity(1), UnitaryMatrix::x()]).unwrap()],
        );
        assert!(coin_control_check(&controlled, &coins));
        let x = ProtocolStep::verifier("x", vec![Action::unitary(&[2], UnitaryMatrix::x()).unwrap()]);
        assert!(!coin_control_check(&x, &coins));
        let h = ProtocolStep::verifier("h", vec![Action::unitary(&[2], UnitaryMatrix::h()).unwrap()]);
        assert!(!coin_control_check(&h, &coins));
        let reversed = ProtocolStep::verifier("cnot", vec![Action::unitary(&[1, 2], UnitaryMatrix::cnot()).unwrap()]);
        assert!(!coin_control_check(&reversed, &coins));
        let z = ProtocolStep::verifier("z", vec![Action::unitary(&[2], UnitaryMatrix::z()).unwrap()]);
        assert!(coin_control_check(&z, &coins));
        let oracle = ProtocolStep::verifier("f", vec![Action::copy(&[1], &[2]).unwrap()]);
        assert!(!coin_control_check(&oracle, &coins));
        let measure = ProtocolStep::verifier("m", vec![Action::measure(&[1]).unwrap()]);
        assert!(!coin_control_check(&measure, &coins));
    }

    #[test]
    fn images() {
        let n = 3;
        let swap = Action::swap(&[1], &[3]).unwrap();
        assert_eq!(swap.image(n, 0b100).unwrap(), vec![(0b001, C64::new(1.0, 0.0))]);
        let oracle = Action::oracle(&[1, 2], &[3], |x| vec![x[0] && x[1]]).unwrap();
        assert_eq!(oracle.image(n, 0b110).unwrap()[0].0, 0b111);
        assert_eq!(oracle.image(n, 0b111).unwrap()[0].0, 0b110);
        let h = Action::unitary(&[2], UnitaryMatrix::h()).unwrap();
        assert_eq!(h.image(n, 0b010).unwrap().len(), 2);
    }
}
