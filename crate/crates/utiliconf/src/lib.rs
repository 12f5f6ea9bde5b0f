// Validation guards are written `!(x > 0.0)` on purpose: the negated form
// rejects NaN, which the clippy-suggested `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Utility-maximizing algorithm configuration from capped runtime samples.
//!
//! Given a set of algorithms whose runtimes are random, a bounded
//! non-increasing utility function over runtime, and a captime policy, this
//! crate finds an (ε, δ)-optimal algorithm while paying only for capped runs.
//! It provides:
//!
//! - parametric utility functions and their inverses ([`utility`]),
//! - analytic runtime distributions with exact expected utilities
//!   ([`distributions`]),
//! - a capped execution layer that charges simulated time and reuses
//!   completed runs across captime increases ([`execution`]),
//! - empirical estimates and confidence bounds from capped samples
//!   ([`stats`]),
//! - the configuration procedures: fixed-captime baseline, doubling
//!   procrastination, and an uncapped-oracle reference ([`procedures`]),
//! - a prover/skeptic audit that certifies a captime choice or produces an
//!   explicit counterexample distribution ([`verification`]),
//! - an experiment harness with sweeps, Monte Carlo checks, and report
//!   emitters ([`harness`]).

pub mod distributions;
pub mod error;
pub mod execution;
pub mod harness;
pub mod procedures;
pub mod stats;
pub mod utility;
pub mod verification;

pub use error::Error;
