//! Damped Newton maximisation over the fixed effects at fixed `theta`.

use nalgebra::DVector;

use super::hybrid::HybridInverse;
use super::FitOptions;
use crate::error::{FitError, ModelError};
use crate::linalg::{max_abs, Sym2};
use crate::model::{DyadModel, HessianParts, Kernel, ModelSpec, Params};
use crate::netgraph::{Covariates, Network};
use crate::penalty::{eta_from_blocks, grad_from, hess_lambda_from, inverse_blocks};

/// Newton steps below this size (sup norm) count as negligible.
const STEP_TOL: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Objective pieces at one `(theta, lambda)`.
#[derive(Debug, Clone)]
pub(crate) struct Eval {
    pub kernels: Vec<Kernel>,
    pub loglik: f64,
    /// `eta` and the inverse node blocks, when penalized.
    pub eta: Option<(f64, Vec<Sym2>)>,
}

impl Eval {
    pub fn objective(&self) -> f64 {
        self.loglik + self.eta.as_ref().map_or(0.0, |e| e.0)
    }
}

pub(crate) fn evaluate(
    model: &DyadModel,
    theta: &DVector<f64>,
    lambda: &DVector<f64>,
    penalized: bool,
) -> Result<Eval, ModelError> {
    let kernels = model.kernels(theta.as_slice(), lambda.as_slice())?;
    let loglik = model.log_likelihood_from(theta.as_slice(), lambda.as_slice(), &kernels);
    let eta = if penalized {
        let blocks = model.node_blocks(&kernels);
        let eta = eta_from_blocks(&blocks, model.width())?;
        Some((eta, inverse_blocks(&blocks, model.width())?))
    } else {
        None
    };
    Ok(Eval {
        kernels,
        loglik,
        eta,
    })
}

/// Result of an inner solve.
#[derive(Debug, Clone)]
pub struct InnerDiagnostics {
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct InnerState {
    pub lambda: DVector<f64>,
    pub eval: Eval,
    pub diag: InnerDiagnostics,
}

/// Gradient of the inner objective in `lambda`.
pub(crate) fn lambda_gradient(model: &DyadModel, eval: &Eval) -> DVector<f64> {
    let (_, mut g) = model.score_from(&eval.kernels);
    if let Some((_, inv)) = &eval.eta {
        let (_, ge) = grad_from(model, &eval.kernels, inv);
        g += ge;
    }
    g
}

/// Solves `A x = b` for the inner Newton matrix
/// `A = -H_lambda_lambda - d2 eta` (penalty term only when penalized).
fn newton_step(
    model: &DyadModel,
    eval: &Eval,
    hp: &HessianParts,
    grad: &DVector<f64>,
    opts: &FitOptions,
) -> Result<DVector<f64>, ModelError> {
    let m = grad.len();
    if m > opts.dense_limit {
        // Large problems: conjugate gradients on the information alone.
        let s = HybridInverse::new(hp)?;
        return Ok(pcg(|v| hp.neg_hll_matvec(v), |v| s.apply(v), grad, 1e-10, 4 * m));
    }
    let info = hp.neg_hll_dense();
    if let Some((_, inv)) = &eval.eta {
        let full = &info - hess_lambda_from(model, &eval.kernels, inv);
        if let Some(ch) = full.cholesky() {
            return Ok(ch.solve(grad));
        }
    }
    if let Some(ch) = info.clone().cholesky() {
        return Ok(ch.solve(grad));
    }
    let scale = (0..m).fold(0.0f64, |a, r| a.max(info[(r, r)])).max(1e-300);
    let mut ridge = 1e-10 * scale;
    for _ in 0..20 {
        let mut a = info.clone();
        for r in 0..m {
            a[(r, r)] += ridge;
        }
        if let Some(ch) = a.cholesky() {
            return Ok(ch.solve(grad));
        }
        ridge *= 10.0;
    }
    Err(ModelError::Singular("fixed-effect Newton matrix"))
}

/// Preconditioned conjugate gradients for symmetric positive definite systems.
pub(crate) fn pcg(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    precond: impl Fn(&DVector<f64>) -> DVector<f64>,
    b: &DVector<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> DVector<f64> {
    let mut x = precond(b);
    let mut r = b - apply(&x);
    let bnorm = b.norm().max(1e-300);
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..max_iter {
        if r.norm() <= rel_tol * bnorm {
            break;
        }
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        z = precond(&r);
        let rz_new = r.dot(&z);
        p = &z + (rz_new / rz) * &p;
        rz = rz_new;
    }
    x
}

/// Nodes whose effects exceed `threshold` in absolute value.
fn diverged_nodes(lambda: &DVector<f64>, width: usize, threshold: f64) -> Vec<usize> {
    let mut nodes: Vec<usize> = lambda
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > threshold)
        .map(|(k, _)| k / width)
        .collect();
    nodes.dedup();
    nodes
}

pub(crate) fn solve_inner(
    model: &DyadModel,
    theta: &DVector<f64>,
    lambda0: DVector<f64>,
    penalized: bool,
    opts: &FitOptions,
) -> Result<InnerState, FitError> {
    let n = model.n();
    let tol = opts.inner_tol * (n as f64).max(1.0);
    let mut lambda = lambda0;
    let mut eval = match evaluate(model, theta, &lambda, penalized) {
        Ok(e) => e,
        Err(e) if !lambda.iter().all(|v| *v == 0.0) => {
            // A warm start can sit where the penalty is numerically singular;
            // fall back to the symmetric interior point.
            let _ = e;
            lambda.fill(0.0);
            evaluate(model, theta, &lambda, penalized)?
        }
        Err(e) => return Err(e.into()),
    };
    let mut iterations = 0;
    let mut converged = false;
    let mut grad = lambda_gradient(model, &eval);
    while iterations < opts.inner_max_iter {
        let gnorm = max_abs(&grad);
        let hp = model.hessian_from(&eval.kernels);
        let step = newton_step(model, &eval, &hp, &grad, opts)?;
        let snorm = max_abs(&step);
        if gnorm <= tol && snorm <= STEP_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let f0 = eval.objective();
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &lambda + t * &step;
            if let Ok(e) = evaluate(model, theta, &trial, penalized) {
                let f = e.objective();
                if f.is_finite() && f >= f0 + ARMIJO * t * slope.max(0.0) {
                    accepted = Some((trial, e));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, e)) = accepted else {
            // No ascent possible along the Newton direction: at the optimum to
            // working precision unless the gradient is still large.
            converged = gnorm <= tol.max(1e-6 * (n as f64));
            break;
        };
        lambda = trial;
        eval = e;
        grad = lambda_gradient(model, &eval);
        if !penalized {
            let nodes = diverged_nodes(&lambda, model.width(), opts.diverge_threshold);
            if !nodes.is_empty() {
                return Err(FitError::NonExistence { nodes });
            }
        }
    }
    let objective = eval.objective();
    Ok(InnerState {
        lambda,
        eval,
        diag: InnerDiagnostics {
            iterations,
            grad_norm: max_abs(&grad),
            objective,
            converged,
        },
    })
}

/// Maximises `ell(theta, .)`, or `ell + eta` when `penalized`, over the fixed
/// effects starting from `lambda0`.
pub fn inner_newton_lambda(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    theta: &DVector<f64>,
    lambda0: &DVector<f64>,
    penalized: bool,
    opts: &FitOptions,
) -> Result<(DVector<f64>, InnerDiagnostics), FitError> {
    let model = DyadModel::new(net, cov, *spec)?;
    let params = Params::from_theta(spec, theta, lambda0.clone());
    if params.theta().len() != theta.len() || lambda0.len() != model.dim_lambda() {
        return Err(ModelError::Dimension {
            what: "inner solve parameters",
            got: theta.len() + lambda0.len(),
            expected: spec.dim_theta() + model.dim_lambda(),
        }
        .into());
    }
    let state = solve_inner(&model, theta, lambda0.clone(), penalized, opts)?;
    Ok((state.lambda, state.diag))
}
