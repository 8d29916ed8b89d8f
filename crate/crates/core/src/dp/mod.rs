//! Differential-privacy machinery: Laplace noise, the generalized sparse-vector
//! mechanism, a brute-force sensitivity oracle and an empirical audit.

pub mod audit;
pub mod laplace;
pub mod sensitivity;
pub mod sparse;

pub use audit::{empirical_privacy_audit, AuditEstimate, PrefixEvent, Proportion};
pub use laplace::{laplace_from_uniform, LaplaceSampler};
pub use sensitivity::query_sensitivity_oracle;
pub use sparse::{sparse_step, Answer, SparseConfig, SparseState, StopContext, StoppingRule};
