//! Exact simulation and security analysis of the Grover-reflection (2,2)
//! quantum secret-sharing scheme.
//!
//! A dealer encodes a two-bit string `s` into `U_s |psi_i>` for a secret
//! nonce `|psi_i>`, splits the pair between Eve and Bob, and later announces
//! the nonce so the parties can undo the encoding with `U_{|psi_i>}`. The
//! crate provides:
//!
//! * [`linalg`]: one- and two-qubit states, fidelity, purification and the
//!   Uhlmann overlap construction;
//! * [`nonces`]: the builtin nonce sets, reflection operators and share states;
//! * [`protocol`]: the four-stage round state machine, exact outcome
//!   enumeration and seeded Monte Carlo;
//! * [`adversary`]: honest, nonce-guessing and fake-resend strategies plus
//!   attack-plan synthesis;
//! * [`analysis`]: nonce-set certification, optimal forced-recovery
//!   probabilities and detection bounds.

pub mod adversary;
pub mod analysis;
pub mod error;
pub mod linalg;
pub mod nonces;
pub mod protocol;
pub mod sampling;

pub use error::{Error, Result};
