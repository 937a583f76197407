//! Fixed-effects estimation of dyadic network formation models with degree
//! heterogeneity and reciprocity.
//!
//! Links form in a directed network through a best-response process whose
//! stationary distribution factorises over dyads. The crate evaluates that
//! likelihood, fits it by maximum likelihood, by a log-determinant penalized
//! likelihood that always has a finite maximiser, and by an analytic bias
//! correction, and computes standard errors and average partial effects.

pub mod error;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod model;
pub mod netgraph;
pub mod penalty;
pub mod simulate;
pub mod solver;

pub use error::{FitError, InputError, ModelError};
pub use model::{
    dyad_indices, dyad_probs, hessian_parts, log_likelihood, score, DyadIndices, DyadModel,
    DyadProbs, HessianParts, ModelSpec, ModelVariant, Params,
};
pub use inference::{ApeKind, ApeResult, ApeTarget};
pub use netgraph::{Covariates, Network};
pub use penalty::{penalty_eta, penalty_grad, penalty_hess_joint, penalty_hess_lambda, PenaltyBlocks};
pub use simulate::{DesignId, McDesign, McOptions, McSummary};
pub use solver::{Estimator, FitOptions, FitResult};
