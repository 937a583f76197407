//! Estimators: fixed-effects MLE, penalized likelihood (PL) and the
//! estimator-level bias correction (EC).

mod fit;
mod hybrid;
mod inner;

pub use fit::{correct_mle, fit, fit_ec, fit_mle, fit_pl, hybrid_information};
pub(crate) use fit::{concentrated_information, penalized_information, solve_information};
pub use hybrid::{hybrid_inverse_apply, HybridInverse};
pub use inner::{inner_newton_lambda, InnerDiagnostics};

use nalgebra::{DMatrix, DVector};

/// Default largest fixed-effect dimension solved by dense factorisation.
pub const DENSE_LIMIT: usize = 1000;

use crate::model::{ModelSpec, Params};
use crate::netgraph::TrimTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Mle,
    Pl,
    Ec,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mle => "MLE",
            Estimator::Pl => "PL",
            Estimator::Ec => "EC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Some(Estimator::Mle),
            "pl" => Some(Estimator::Pl),
            "ec" => Some(Estimator::Ec),
            _ => None,
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step_size: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Existence {
    pub exists: bool,
    /// Nodes whose effects diverged in the unpenalized inner solve.
    pub diverged: Vec<usize>,
    /// Present when the MLE was computed on an iteratively trimmed subnetwork.
    pub trimmed_sample: Option<TrimTrace>,
}

/// Quantities behind the bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct EcParts {
    pub theta_mle: DVector<f64>,
    /// Concentrated information `-(H_tt - H_tl H_ll^{-1} H_lt)` at the MLE, unscaled.
    pub information: DMatrix<f64>,
    /// Profile gradient of the penalty at the MLE.
    pub penalty_gradient: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub estimator: Estimator,
    pub theta_hat: DVector<f64>,
    pub lambda_hat: DVector<f64>,
    pub loglik: f64,
    /// `ell + eta` at the estimate (PL only).
    pub penalized_obj: Option<f64>,
    pub converged: bool,
    pub trace: Vec<IterRecord>,
    pub existence: Existence,
    /// Original ids of the nodes in the fitted network, in order.
    pub nodes: Vec<usize>,
    pub ec: Option<EcParts>,
}

impl FitResult {
    pub fn params(&self) -> Params {
        Params::from_theta(&self.spec, &self.theta_hat, self.lambda_hat.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Outer tolerance on the concentrated gradient, per ordered pair.
    pub tol: f64,
    pub max_iter: usize,
    /// Inner tolerance on the fixed-effect gradient, multiplied by `max(1, n)`.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// `|lambda_k|` above which the unpenalized inner solve declares divergence.
    pub diverge_threshold: f64,
    /// Refit the MLE on the iteratively trimmed subnetwork when it does not exist.
    pub trim: bool,
    /// Largest fixed-effect dimension solved by dense factorisation; above it
    /// the inner step uses conjugate gradients preconditioned by `S`.
    pub dense_limit: usize,
    /// Start each inner solve from the previous outer iterate's effects.
    pub warm_start: bool,
    /// Half-width of the box `|theta_k| <= theta_bound` searched by the outer
    /// loop. The penalty leaves the reference node unpenalized, so on some
    /// degenerate networks the penalized objective only peaks on this box.
    pub theta_bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            inner_tol: 1e-8,
            inner_max_iter: 200,
            diverge_threshold: 30.0,
            trim: false,
            dense_limit: DENSE_LIMIT,
            warm_start: true,
            theta_bound: 30.0,
        }
    }
}
