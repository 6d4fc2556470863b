//! Interactive protocol execution.
//!
//! A protocol is a list of [`ProtocolStep`]s, each a verifier or prover turn
//! made of [`Action`]s over the registers of a [`RegisterLayout`]. Runs keep
//! the global state as sparse pure branches: classical coins and measurement
//! outcomes are basis values, so the mixed global state is the weighted sum
//! of the branches. [`enumerate_runs`] expands every branch exactly,
//! [`run_protocol`] samples one.
//!
//! The verifier's view at a step boundary is the global state with the
//! prover register traced out; in the coin model it includes the coins.
//! Acceptance is read from the first workspace qubit.

mod audit;
mod protocol;
pub mod purify;
mod run;
mod sparse;

pub use audit::{zk_audit, AuditReport, FixedViews, ProtocolSimulator, RoundAudit, Simulator};
pub use protocol::{
    coin_control_check, coin_control_violation, validate_protocol, Action, Actor, ClassicalFn,
    ProtocolStep, RegisterLayout,
};
pub use purify::{check_purification, purify_channel, Purification};
pub use run::{
    apply_action_to_density, clopper_pearson, coin_marginal, coin_model_initial_state,
    enumerate_runs, estimate_acceptance, run_protocol, verifier_view, AcceptanceEstimate,
    AcceptanceMode, EnumOptions, InitialState, ProtocolRun, RunFamily, Trajectory,
    DEFAULT_BRANCH_CAP,
};
pub(crate) use sparse::{read_bits, write_bits};
pub use sparse::{Index, SparseDensity, SparseState, MAX_SPARSE_QUBITS};
