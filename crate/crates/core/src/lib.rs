//! Multi-group learning with the Prepend family of decision-list learners.
//!
//! Given a finite family of (possibly overlapping) groups and a finite
//! hypothesis class, the learners in this crate build a single predictor whose
//! conditional empirical loss on every group is close to the best hypothesis
//! for that group. The crate provides:
//!
//!  - [`data`], [`group`], [`hypothesis`], [`loss`]: the sample, the group and
//!    hypothesis families, and bounded losses.
//!  - [`chain`]: the learned predictor, an [`UpdateChain`] of
//!    `f <- f + eta * g * (h - f)` corrections (a decision list when every
//!    step size is one).
//!  - [`risk`]: ERM and (conditional) empirical risk.
//!  - [`dp`]: Laplace noise, the generalized sparse-vector mechanism, a
//!    brute-force sensitivity oracle and a Monte-Carlo privacy audit.
//!  - [`learners`]: Prepend, Group Prepend, Shaky Prepend, their fractional
//!    variants, and a sleeping-experts baseline.
//!  - [`theory`]: closed-form bounds, hyperparameter recipes and run
//!    certificates.
//!
//! The crate is `no_std` (it needs `alloc`). IO, file formats, experiments and
//! the command-line front end live in the `multigroup` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// Parameter checks are written `!(x > 0.0)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod chain;
pub mod data;
pub mod dp;
mod error;
pub mod group;
pub mod hypothesis;
pub mod instance;
pub mod learners;
pub mod loss;
pub(crate) mod math;
pub mod risk;
pub mod theory;
pub mod trace;

pub use chain::{Update, UpdateChain};
pub use data::{Dataset, Record};
pub use error::Error;
pub use group::{Group, GroupFamily, Indicator, Mask};
pub use hypothesis::{Hypothesis, HypothesisClass, HypothesisKind};
pub use instance::Instance;
pub use loss::BoundedLoss;
pub use risk::{conditional_loss, empirical_loss, erm, weighted_gap, Predict};
pub use trace::{Iteration, RunTrace};

pub type Result<T, E = Error> = core::result::Result<T, E>;
