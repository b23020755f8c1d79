//! Simulation laboratory for quantum bit-commitment protocols.
//!
//! The crate is organised bottom-up:
//!
//! * [`qstate`] — dense complex linear algebra for kets, operators and
//!   density operators, plus an analytic frame for coherent-state
//!   superpositions.
//! * [`detect`] — optimal binary (Helstrom) and M-ary state discrimination.
//! * [`cheat`] — the EPR attack engine: purifications, Uhlmann alignment and
//!   cheating-probability evaluation.
//! * [`protocols`] — seeded two-party state machines for the QBC0, QBC01,
//!   QBC1, QBC2 and QBC3 commitment schemes with honest and adversarial
//!   strategies.
//! * [`analysis`] — closed-form combinatorics, security sweeps and the QBC2
//!   parameter planner.
//! * [`verify`] — the invariant suites driven by the `qbc verify` command.

pub mod analysis;
pub mod cheat;
pub mod detect;
pub mod error;
pub mod ground_truth;
pub mod protocols;
pub mod qstate;
pub mod verify;

pub use error::{Error, Result};
