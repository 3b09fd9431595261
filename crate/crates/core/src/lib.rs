//! Compiler and Monte Carlo shot simulator for neutral-atom arrays that lose
//! atoms while they run.
//!
//! The crate is organised bottom-up:
//!
//! - [`arch`]: grid geometry, interaction reachability, restriction zones
//! - [`circuits`]: native-gate circuits and the benchmark generators
//! - [`compiler`]: mapping, SWAP routing, scheduling and success estimates
//! - [`loss`]: per-shot environmental and measurement loss
//! - [`mitigation`]: strategies for carrying on after atoms disappear
//! - [`sim`]: the shot loop, per-trial records and cross-trial summaries

// comparisons are negated on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arch;
pub mod circuits;
pub mod compiler;
pub mod error;
pub mod loss;
pub mod mitigation;
pub mod sim;
pub mod timing;

pub use error::{Error, Result};
