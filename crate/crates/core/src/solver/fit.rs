//! Outer quasi-Newton loop on the concentrated objective and the three
//! estimators built on it.

use nalgebra::{DMatrix, DVector};

use super::hybrid::HybridInverse;
use super::inner::{evaluate, pcg, solve_inner, Eval};
use super::{EcParts, Estimator, Existence, FitOptions, FitResult, IterRecord};
use crate::error::{FitError, ModelError};
use crate::linalg::{inverse_spd, max_abs};
use crate::model::{DyadModel, HessianParts, Kernel, ModelSpec, ModelVariant};
use crate::netgraph::{boundary_nodes, trim_iteratively, Covariates, Network};
use crate::penalty::{grad_from, hess_joint_from, inverse_blocks};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

/// Concentrated objective at one `theta`.
struct Point {
    theta: DVector<f64>,
    lambda: DVector<f64>,
    eval: Eval,
    grad: DVector<f64>,
    inner_iterations: usize,
}

impl Point {
    fn objective(&self) -> f64 {
        self.eval.objective()
    }
}

struct Profile<'m, 'a> {
    model: &'m DyadModel<'a>,
    penalized: bool,
    opts: &'m FitOptions,
}

impl Profile<'_, '_> {
    fn at(&self, theta: DVector<f64>, warm: &DVector<f64>) -> Result<Point, FitError> {
        let start = if self.opts.warm_start {
            warm.clone()
        } else {
            DVector::zeros(warm.len())
        };
        let state = solve_inner(self.model, &theta, start, self.penalized, self.opts)?;
        // Envelope property: the inner solve zeroes the lambda-gradient, so the
        // concentrated gradient is the partial theta-gradient.
        let (mut grad, _) = self.model.score_from(&state.eval.kernels);
        if let Some((_, inv)) = &state.eval.eta {
            grad += grad_from(self.model, &state.eval.kernels, inv).0;
        }
        Ok(Point {
            theta,
            lambda: state.lambda,
            eval: state.eval,
            grad,
            inner_iterations: state.diag.iterations,
        })
    }
}

/// `(-H_lambda_lambda)^{-1} B` column by column.
pub(crate) fn solve_information(
    hp: &HessianParts,
    rhs: &DMatrix<f64>,
    dense_limit: usize,
) -> Result<DMatrix<f64>, ModelError> {
    let m = hp.dim_lambda();
    if m <= dense_limit {
        let ch = hp
            .neg_hll_dense()
            .cholesky()
            .ok_or(ModelError::Singular("fixed-effect information"))?;
        return Ok(ch.solve(rhs));
    }
    let s = HybridInverse::new(hp)?;
    let mut out = DMatrix::zeros(m, rhs.ncols());
    for c in 0..rhs.ncols() {
        let b = rhs.column(c).into_owned();
        let x = pcg(|v| hp.neg_hll_matvec(v), |v| s.apply(v), &b, 1e-12, 4 * m);
        out.set_column(c, &x);
    }
    Ok(out)
}

/// Information of the concentrated likelihood,
/// `-H_tt - H_tl (-H_ll)^{-1} H_lt`, by exact solve.
pub(crate) fn concentrated_information(
    hp: &HessianParts,
    dense_limit: usize,
) -> Result<DMatrix<f64>, ModelError> {
    let x = solve_information(hp, &hp.neg_h_tl.transpose(), dense_limit)?;
    Ok(&hp.neg_h_tt - &hp.neg_h_tl * x)
}

/// Curvature of the concentrated penalized objective: the Schur complement
/// of the joint `-(H + d2 eta)` on the fixed effects. Dense in the effects.
pub(crate) fn penalized_information(model: &DyadModel, kernels: &[Kernel]) -> Result<DMatrix<f64>, ModelError> {
    let hp = model.hessian_from(kernels);
    let inv = inverse_blocks(&model.node_blocks(kernels), model.width())?;
    let he = hess_joint_from(model, kernels, &inv);
    let p = model.dim_theta();
    let m = model.dim_lambda();
    let n_tt = &hp.neg_h_tt - he.view((0, 0), (p, p));
    let n_tl = &hp.neg_h_tl - he.view((0, p), (p, m));
    let n_ll = hp.neg_hll_dense() - he.view((p, p), (m, m));
    let ch = n_ll
        .cholesky()
        .ok_or(ModelError::Singular("penalized fixed-effect curvature"))?;
    Ok(&n_tt - &n_tl * ch.solve(&n_tl.transpose()))
}

/// `-(H_tt + H_tl S H_lt)`, the information with `S` in place of the exact inverse.
pub fn hybrid_information(hp: &HessianParts, s: &HybridInverse) -> DMatrix<f64> {
    let p = hp.neg_h_tt.nrows();
    let mut out = hp.neg_h_tt.clone();
    let sl: Vec<DVector<f64>> = (0..p)
        .map(|t| s.apply(&hp.neg_h_tl.row(t).transpose()))
        .collect();
    for a in 0..p {
        for b in 0..p {
            out[(a, b)] -= hp.neg_h_tl.row(a).transpose().dot(&sl[b]);
        }
    }
    out
}

fn initial_inverse(model: &DyadModel, pt: &Point, penalized: bool, opts: &FitOptions) -> DMatrix<f64> {
    let p = pt.theta.len();
    let n = model.n() as f64;
    let curvature = if penalized && model.dim_lambda() <= opts.dense_limit {
        penalized_information(model, &pt.eval.kernels).ok()
    } else {
        None
    };
    curvature
        .or_else(|| concentrated_information(&model.hessian_from(&pt.eval.kernels), opts.dense_limit).ok())
        .and_then(|info| inverse_spd(&info))
        .filter(|m| m.iter().all(|v| v.is_finite()) && (0..p).all(|r| m[(r, r)] > 0.0))
        .unwrap_or_else(|| DMatrix::identity(p, p) / (n * (n - 1.0)).max(1.0))
}

fn nested_fit(
    model: &DyadModel,
    penalized: bool,
    opts: &FitOptions,
    estimator: Estimator,
) -> Result<FitResult, FitError> {
    let n = model.n();
    let p = model.dim_theta();
    let big_n = (n * (n - 1)) as f64;
    let tol = opts.tol * big_n;
    let profile = Profile {
        model,
        penalized,
        opts,
    };
    let mut pt = profile.at(DVector::zeros(p), &DVector::zeros(model.dim_lambda()))?;
    let mut trace = Vec::new();
    let mut hinv = initial_inverse(model, &pt, penalized, opts);
    let mut converged = false;
    let mut reset = false;
    let mut iteration = 0;
    let bound = opts.theta_bound;
    let mut last_held = vec![false; p];
    // The exact concentrated curvature is affordable whenever the effects are
    // solved densely.
    let newton = penalized && model.dim_lambda() <= opts.dense_limit;
    loop {
        // Coordinates held at the box face because the gradient points outward.
        let held: Vec<bool> = (0..p)
            .map(|k| pt.theta[k].abs() >= bound && pt.grad[k] * pt.theta[k] > 0.0)
            .collect();
        if held != last_held {
            hinv = initial_inverse(model, &pt, penalized, opts);
            last_held = held.clone();
        }
        let pgrad = masked(&pt.grad, &held);
        let gnorm = max_abs(&pgrad);
        if gnorm <= tol {
            converged = true;
            break;
        }
        if iteration >= opts.max_iter {
            break;
        }
        iteration += 1;
        let newton_dir = if newton && !reset {
            newton_direction(model, &pt, &pgrad, &held)
        } else {
            None
        };
        let mut dir = newton_dir.unwrap_or_else(|| masked(&(&hinv * &pgrad), &held));
        if !(pgrad.dot(&dir) > 0.0) {
            hinv = initial_inverse(model, &pt, penalized, opts);
            dir = masked(&(&hinv * &pgrad), &held);
        }
        let f0 = pt.objective();
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..MAX_HALVINGS {
            let trial = (&pt.theta + t * &dir).map(|v| v.clamp(-bound, bound));
            let gain = ARMIJO * pt.grad.dot(&(&trial - &pt.theta)).max(0.0);
            match profile.at(trial, &pt.lambda) {
                Ok(cand) if cand.objective() >= f0 + gain => {
                    next = Some(cand);
                    break;
                }
                Ok(_) | Err(FitError::NonExistence { .. }) | Err(FitError::Model(_)) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
        }
        let Some(cand) = next else {
            if reset {
                break;
            }
            // Restart from curvature information once before giving up.
            reset = true;
            hinv = initial_inverse(model, &pt, penalized, opts);
            continue;
        };
        reset = false;
        let s = &cand.theta - &pt.theta;
        // BFGS on the negated objective: y = grad(-f)_new - grad(-f)_old.
        let y = &pt.grad - &cand.grad;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(p, p);
            let a = &eye - rho * &s * y.transpose();
            let b = &eye - rho * &y * s.transpose();
            hinv = &a * &hinv * &b + rho * &s * s.transpose();
        } else if t == 1.0 {
            // Full step taken where the objective curves upward: widen the next step.
            hinv *= 2.0;
        }
        pt = cand;
        trace.push(IterRecord {
            iteration,
            objective: pt.objective(),
            grad_norm: max_abs(&pt.grad),
            step_size: t,
            inner_iterations: pt.inner_iterations,
        });
    }
    let result = FitResult {
        spec: *model.spec(),
        estimator,
        theta_hat: pt.theta.clone(),
        lambda_hat: pt.lambda.clone(),
        loglik: pt.eval.loglik,
        penalized_obj: penalized.then(|| pt.objective()),
        converged,
        trace,
        existence: Existence {
            exists: true,
            diverged: Vec::new(),
            trimmed_sample: None,
        },
        nodes: (0..n).collect(),
        ec: None,
    };
    if converged {
        Ok(result)
    } else {
        Err(FitError::NotConverged {
            iterations: iteration,
            partial: Box::new(result),
        })
    }
}

/// Newton step on the free coordinates of the concentrated penalized
/// objective, with a ridge added until the curvature is positive definite.
fn newton_direction(
    model: &DyadModel,
    pt: &Point,
    pgrad: &DVector<f64>,
    held: &[bool],
) -> Option<DVector<f64>> {
    let k = penalized_information(model, &pt.eval.kernels).ok()?;
    let free: Vec<usize> = (0..held.len()).filter(|&i| !held[i]).collect();
    let kf = DMatrix::from_fn(free.len(), free.len(), |a, b| 0.5 * (k[(free[a], free[b])] + k[(free[b], free[a])]));
    let gf = DVector::from_fn(free.len(), |a, _| pgrad[free[a]]);
    let scale = kf.diagonal().amax().max(1e-12);
    let mut ridge = 0.0;
    for _ in 0..30 {
        let m = &kf + DMatrix::identity(free.len(), free.len()) * ridge;
        if let Some(ch) = m.cholesky() {
            let step = ch.solve(&gf);
            let mut dir = DVector::zeros(held.len());
            for (a, &i) in free.iter().enumerate() {
                dir[i] = step[a];
            }
            return dir.iter().all(|v| v.is_finite()).then_some(dir);
        }
        ridge = if ridge == 0.0 { 1e-10 * scale } else { ridge * 10.0 };
    }
    None
}

fn masked(v: &DVector<f64>, held: &[bool]) -> DVector<f64> {
    DVector::from_fn(v.len(), |k, _| if held[k] { 0.0 } else { v[k] })
}

/// Nodes whose degrees rule out a finite maximiser.
fn boundary_for(net: &Network, spec: &ModelSpec) -> Vec<usize> {
    let net = if spec.variant == ModelVariant::Undirected {
        net.mutual_part()
    } else {
        net.clone()
    };
    let mut nodes: Vec<usize> = boundary_nodes(&net).into_iter().map(|(i, _)| i).collect();
    nodes.dedup();
    nodes
}

fn mle_untrimmed(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let boundary = boundary_for(net, spec);
    if !boundary.is_empty() {
        return Err(FitError::NonExistence { nodes: boundary });
    }
    let model = DyadModel::new(net, cov, *spec)?;
    nested_fit(&model, false, opts, Estimator::Mle)
}

/// Fixed-effects maximum likelihood.
///
/// When the estimate does not exist and `opts.trim` is set, the fit is
/// repeated on the subnetwork left after iteratively removing boundary nodes.
pub fn fit_mle(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    match mle_untrimmed(net, cov, spec, opts) {
        Err(FitError::NonExistence { nodes }) if opts.trim => {
            let base = if spec.variant == ModelVariant::Undirected {
                net.mutual_part()
            } else {
                net.clone()
            };
            let (sub, trace) = trim_iteratively(&base);
            if sub.n() < 3 {
                return Err(FitError::EmptyAfterTrim);
            }
            let sub_cov = cov.subset(&trace.surviving);
            let mut fit = mle_untrimmed(&sub, &sub_cov, spec, opts)?;
            fit.nodes = trace.surviving.clone();
            fit.existence = Existence {
                exists: false,
                diverged: nodes,
                trimmed_sample: Some(trace),
            };
            Ok(fit)
        }
        other => other,
    }
}

/// Penalized likelihood: maximises `ell + eta`, which has a finite maximiser
/// on every observed network.
pub fn fit_pl(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let model = DyadModel::new(net, cov, *spec)?;
    nested_fit(&model, true, opts, Estimator::Pl)
}

/// Bias correction of `theta` at a fitted MLE.
pub(crate) fn ec_parts(
    model: &DyadModel,
    theta: &DVector<f64>,
    lambda: &DVector<f64>,
    dense_limit: usize,
) -> Result<(DVector<f64>, EcParts), ModelError> {
    let eval = evaluate(model, theta, lambda, false)?;
    let hp = model.hessian_from(&eval.kernels);
    let inv = inverse_blocks(&model.node_blocks(&eval.kernels), model.width())?;
    let (eta_t, eta_l) = grad_from(model, &eval.kernels, &inv);
    // Profile gradient of the penalty: d/dtheta eta(theta, lambda_hat(theta)).
    let x = solve_information(&hp, &DMatrix::from_column_slice(eta_l.len(), 1, eta_l.as_slice()), dense_limit)?;
    let profile_grad = &eta_t - &hp.neg_h_tl * x.column(0);
    let information = concentrated_information(&hp, dense_limit)?;
    let shift = crate::linalg::solve_spd(&information, &profile_grad)
        .ok_or(ModelError::Singular("theta information"))?;
    Ok((
        theta + shift,
        EcParts {
            theta_mle: theta.clone(),
            information,
            penalty_gradient: profile_grad,
        },
    ))
}

/// Estimator-level correction: the MLE shifted by its estimated first-order
/// bias. Unavailable whenever the MLE does not exist.
pub fn fit_ec(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let mle = fit_mle(net, cov, spec, opts)?;
    correct_mle(&mle, net, cov, opts)
}

/// Applies the estimator-level correction to an existing MLE fit of `net`.
pub fn correct_mle(
    mle: &FitResult,
    net: &Network,
    cov: &Covariates,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let spec = &mle.spec;
    let (sub_net, sub_cov);
    let (net, cov) = if mle.existence.trimmed_sample.is_some() {
        sub_net = net.subnetwork(&mle.nodes);
        sub_cov = cov.subset(&mle.nodes);
        (&sub_net, &sub_cov)
    } else {
        (net, cov)
    };
    let model = DyadModel::new(net, cov, *spec)?;
    let (theta_ec, parts) = ec_parts(&model, &mle.theta_hat, &mle.lambda_hat, opts.dense_limit)?;
    let (lambda, loglik) = match solve_inner(&model, &theta_ec, mle.lambda_hat.clone(), false, opts) {
        Ok(state) => (state.lambda, state.eval.loglik),
        Err(_) => {
            let e = evaluate(&model, &theta_ec, &mle.lambda_hat, false)?;
            (mle.lambda_hat.clone(), e.loglik)
        }
    };
    Ok(FitResult {
        estimator: Estimator::Ec,
        theta_hat: theta_ec,
        lambda_hat: lambda,
        loglik,
        penalized_obj: None,
        ec: Some(parts),
        ..mle.clone()
    })
}

/// Dispatches on the estimator.
pub fn fit(
    estimator: Estimator,
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    match estimator {
        Estimator::Mle => fit_mle(net, cov, spec, opts),
        Estimator::Pl => fit_pl(net, cov, spec, opts),
        Estimator::Ec => fit_ec(net, cov, spec, opts),
    }
}
