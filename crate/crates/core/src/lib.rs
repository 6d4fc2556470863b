//! Executable models of coin-model honest-verifier quantum zero knowledge.
//!
//! The crate is organised bottom-up:
//!
//! * [`qmath`]: dense density matrices, unitaries and the handful of
//!   operations everything else is built from (tensor, partial trace,
//!   trace distance, measurement).
//! * [`otp`]: the Pauli one-time pad.
//! * [`hiddenbit`]: hidden bits built from verifier coins, with exhaustive
//!   binding and hiding analyses and the commitment scheme on top.
//! * [`engine`]: interactive protocol execution over verifier, message and
//!   prover registers, view extraction, zero-knowledge audits, acceptance
//!   estimation and channel purification.
//! * [`compiler`]: compiles classical hidden-bit protocols into coin-model
//!   quantum protocols together with their simulators.
//! * [`lcdm`]: the local-consistency protocol run under the one-time pad.
//! * [`schema`]: JSON formats for instances, graphs and channels.
//!
//! Qubit 1 is always the most significant bit of a basis index.

pub mod compiler;
pub mod engine;
mod error;
pub mod hiddenbit;
pub mod lcdm;
pub mod otp;
pub mod par;
pub mod qmath;
pub mod schema;

pub use error::{Error, Result};

/// Seeded generator used for every random choice in the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the generator for `seed`.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}

/// Independent generator for trial `index` derived from a base seed.
pub fn trial_rng(seed: u64, index: u64) -> SeededRng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(index);
    rng
}
