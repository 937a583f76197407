//! Standard errors for `theta` and average partial effects (APEs) of a
//! regressor on link probabilities, with the trace bias correction and the
//! delta-method variance.

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::linalg::inverse_spd;
use crate::model::{DyadModel, Kernel, ModelSpec, ModelVariant, MAX_STATS};
use crate::netgraph::{Covariates, Family, Network};
use crate::solver::{
    concentrated_information, penalized_information, solve_information, Estimator, FitResult, HybridInverse, DENSE_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApeKind {
    /// Derivative of the link probability in the regressor.
    Continuous,
    /// Difference of the link probability between regressor values 1 and 0.
    Binary,
}

impl ApeKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" | "cont" | "c" => Some(ApeKind::Continuous),
            "binary" | "bin" | "b" => Some(ApeKind::Binary),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ApeKind::Continuous => "continuous",
            ApeKind::Binary => "binary",
        }
    }
}

/// Probability whose response is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApeOutcome {
    /// The directed link probability `p_ij`.
    #[default]
    Link,
    /// The probability that both links of the dyad are present (extension).
    Mutual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApeTarget {
    pub regressor: String,
    pub family: Family,
    /// Column within the family's covariates.
    pub column: usize,
    pub kind: ApeKind,
    pub outcome: ApeOutcome,
}

impl ApeTarget {
    /// Looks `name` up among the covariates the model uses. Names may be
    /// qualified as `x.NAME` or `z.NAME`; unqualified names must be unique
    /// across both families.
    pub fn resolve(
        name: &str,
        kind: ApeKind,
        cov: &Covariates,
        spec: &ModelSpec,
    ) -> Result<Self, ModelError> {
        let uses_x = spec.dim_beta > 0;
        let uses_z = spec.dim_rho > 0;
        let (want, bare) = match name.split_once('.') {
            Some((p, rest)) if p.eq_ignore_ascii_case("x") => (Some(Family::X), rest),
            Some((p, rest)) if p.eq_ignore_ascii_case("z") => (Some(Family::Z), rest),
            _ => (None, name),
        };
        let mut hits = Vec::new();
        if uses_x && want != Some(Family::Z) {
            if let Some(c) = cov.x_names().iter().position(|n| n == bare) {
                hits.push((Family::X, c));
            }
        }
        if uses_z && want != Some(Family::X) {
            if let Some(c) = cov.z_names().iter().position(|n| n == bare) {
                hits.push((Family::Z, c));
            }
        }
        match hits.as_slice() {
            [] => Err(ModelError::UnknownRegressor(name.to_string())),
            [(family, column)] => {
                let target = Self {
                    regressor: bare.to_string(),
                    family: *family,
                    column: *column,
                    kind,
                    outcome: ApeOutcome::Link,
                };
                if kind == ApeKind::Binary {
                    target.check_binary(cov)?;
                }
                Ok(target)
            }
            _ => Err(ModelError::AmbiguousRegressor(name.to_string())),
        }
    }

    pub fn with_outcome(mut self, outcome: ApeOutcome) -> Self {
        self.outcome = outcome;
        self
    }

    fn check_binary(&self, cov: &Covariates) -> Result<(), ModelError> {
        let n = cov.n();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = match self.family {
                    Family::X => cov.x(i, j)[self.column],
                    Family::Z => cov.z(i, j)[self.column],
                };
                if v != 0.0 && v != 1.0 {
                    return Err(ModelError::NotBinary(self.regressor.clone()));
                }
            }
        }
        Ok(())
    }

    /// Position of the regressor's coefficient in `theta`.
    pub fn theta_index(&self, spec: &ModelSpec) -> usize {
        match self.family {
            Family::X => self.column,
            Family::Z => spec.dim_beta + self.column,
        }
    }

    pub fn label(&self) -> String {
        format!("{}.{}", self.family.label().to_ascii_lowercase(), self.regressor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApeResult {
    pub delta_plugin: f64,
    /// `tr(d2_lambda Delta . S)`; the corrected APE subtracts half of it.
    pub trace_correction: f64,
    pub delta_corrected: f64,
    pub variance: f64,
    pub std_error: f64,
}

/// APE value and derivatives at one parameter point.
#[derive(Debug, Clone)]
pub struct ApeIntermediates {
    pub delta: f64,
    pub d_theta: DVector<f64>,
    pub d_lambda: DVector<f64>,
    /// `tr(d2_lambda Delta . S)`, present when `S` was supplied.
    pub trace: Option<f64>,
    /// `(i, j, Delta_ij)` for every ordered pair.
    pub dyads: Vec<(usize, usize, f64)>,
}

/// Response of one ordered pair and its derivatives in the dyad's natural parameters.
struct PairResponse {
    value: f64,
    grad: [f64; MAX_STATS],
    hess: [[f64; MAX_STATS]; MAX_STATS],
    /// Derivative in the target coefficient holding `nu` fixed.
    explicit: f64,
}

fn pair_response(
    model: &DyadModel,
    k: &Kernel,
    nu: &[f64; MAX_STATS],
    o: usize,
    e: usize,
    w: f64,
    coef: f64,
    kind: ApeKind,
) -> PairResponse {
    let s = model.stats();
    let mut grad = [0.0; MAX_STATS];
    let mut hess = [[0.0; MAX_STATS]; MAX_STATS];
    match kind {
        ApeKind::Continuous => {
            for f in 0..s {
                grad[f] = coef * k.cum3(o, e, f);
                for g in f..s {
                    let v = coef * k.cum4(o, e, f, g);
                    hess[f][g] = v;
                    hess[g][f] = v;
                }
            }
            PairResponse {
                value: coef * k.cov(o, e),
                grad,
                hess,
                explicit: k.cov(o, e),
            }
        }
        ApeKind::Binary => {
            let mut nu1 = *nu;
            let mut nu0 = *nu;
            nu1[e] += coef * (1.0 - w);
            nu0[e] -= coef * w;
            let k1 = model.kernel_from_nu(&nu1);
            let k0 = model.kernel_from_nu(&nu0);
            for f in 0..s {
                grad[f] = k1.cov(o, f) - k0.cov(o, f);
                for g in f..s {
                    let v = k1.cum3(o, f, g) - k0.cum3(o, f, g);
                    hess[f][g] = v;
                    hess[g][f] = v;
                }
            }
            PairResponse {
                value: k1.mean()[o] - k0.mean()[o],
                grad,
                hess,
                explicit: (1.0 - w) * k1.cov(o, e) + w * k0.cov(o, e),
            }
        }
    }
}

/// APE, its gradients and (with `s`) the trace term, at `(theta, lambda)`.
pub fn ape_intermediates(
    model: &DyadModel,
    theta: &DVector<f64>,
    lambda: &DVector<f64>,
    target: &ApeTarget,
    s: Option<&HybridInverse>,
) -> Result<ApeIntermediates, ModelError> {
    ape_core(model, theta, lambda, target, s, None)
}

/// Dense `d2 Delta / d lambda d lambda'`; meant for small networks and checks.
pub fn ape_lambda_hessian_dense(
    model: &DyadModel,
    theta: &DVector<f64>,
    lambda: &DVector<f64>,
    target: &ApeTarget,
) -> Result<DMatrix<f64>, ModelError> {
    let m = model.dim_lambda();
    let mut h = DMatrix::zeros(m, m);
    ape_core(model, theta, lambda, target, None, Some(&mut h))?;
    let n = model.n();
    Ok(h / (n * (n - 1)) as f64)
}

fn ape_core(
    model: &DyadModel,
    theta: &DVector<f64>,
    lambda: &DVector<f64>,
    target: &ApeTarget,
    s: Option<&HybridInverse>,
    mut dense: Option<&mut DMatrix<f64>>,
) -> Result<ApeIntermediates, ModelError> {
    let spec = model.spec();
    let n = model.n();
    let p = model.dim_theta();
    let st = model.stats();
    let width = model.width();
    let big_n = (n * (n - 1)) as f64;
    let widx = target.theta_index(spec);
    let coef = theta[widx];
    let kernels = model.kernels(theta.as_slice(), lambda.as_slice())?;
    let mut delta = 0.0;
    let mut d_theta = DVector::zeros(p);
    let mut d_lambda = DVector::zeros(model.dim_lambda());
    let mut trace = 0.0;
    let mut dyads = Vec::with_capacity(2 * kernels.len());
    let mut jac = vec![0.0; st * p];
    for (d, k) in kernels.iter().enumerate() {
        let (i, j) = model.pair(d);
        let nu = model.nu(theta.as_slice(), lambda.as_slice(), d);
        model.theta_jacobian(d, &mut jac);
        let mut grad = [0.0; MAX_STATS];
        let mut hess = [[0.0; MAX_STATS]; MAX_STATS];
        for (lower, (a, b)) in [(true, (i, j)), (false, (j, i))] {
            let (o, e, w) = match (spec.variant, target.family) {
                (ModelVariant::Undirected, _) => (0, 0, model.covariates().z(i, j)[target.column]),
                (_, Family::X) => {
                    let stat = if lower { 0 } else { 1 };
                    (stat, stat, model.covariates().x(a, b)[target.column])
                }
                (_, Family::Z) => (if lower { 0 } else { 1 }, 2, model.covariates().z(i, j)[target.column]),
            };
            let o = if target.outcome == ApeOutcome::Mutual && spec.variant.is_directed() {
                2
            } else {
                o
            };
            let r = pair_response(model, k, &nu, o, e, w, coef, target.kind);
            delta += r.value;
            dyads.push((a, b, r.value));
            for f in 0..st {
                grad[f] += r.grad[f];
                for g in 0..st {
                    hess[f][g] += r.hess[f][g];
                }
            }
            d_theta[widx] += r.explicit;
        }
        for t in 0..p {
            for f in 0..st {
                d_theta[t] += jac[f * p + t] * grad[f];
            }
        }
        model.scatter_lambda(d, &grad, &mut d_lambda);
        if s.is_some() || dense.is_some() {
            let mut local: [(usize, usize); 4] = [(0, 0); 4];
            let mut nloc = 0;
            for (node, lower) in [(i, true), (j, false)] {
                let perm = model.perm(lower);
                for kk in 0..width {
                    if let Some(slot) = model.slot(node, kk) {
                        local[nloc] = (slot, perm[kk]);
                        nloc += 1;
                    }
                }
            }
            for &(sa, fa) in &local[..nloc] {
                for &(sb, fb) in &local[..nloc] {
                    if let Some(s) = s {
                        trace += hess[fa][fb] * s.entry(sa, sb);
                    }
                    if let Some(h) = dense.as_deref_mut() {
                        h[(sa, sb)] += hess[fa][fb];
                    }
                }
            }
        }
    }
    Ok(ApeIntermediates {
        delta: delta / big_n,
        d_theta: d_theta / big_n,
        d_lambda: d_lambda / big_n,
        trace: s.map(|_| trace / big_n),
        dyads,
    })
}

/// Network and covariates the fit was computed on (the trimmed sample when
/// trimming was applied).
pub fn fitted_sample(fit: &FitResult, net: &Network, cov: &Covariates) -> (Network, Covariates) {
    if fit.nodes.len() == net.n() {
        (net.clone(), cov.clone())
    } else {
        (net.subnetwork(&fit.nodes), cov.subset(&fit.nodes))
    }
}

/// `Cov(theta_hat)`: inverse of the concentrated information
/// `-(H_tt - H_tl H_ll^{-1} H_lt)` at the fitted parameters, or for a PL fit
/// the inverse curvature of the concentrated penalized objective.
///
/// The fixed-effect solve is exact (dense, or conjugate gradients above
/// `DENSE_LIMIT`). Substituting `S` for `H_ll^{-1}` here is not usable at finite
/// `n`: intercept columns of `H_tl` lie almost along `u+`, where `S` counts the
/// aggregate direction twice, and the resulting matrix is indefinite.
///
/// The two PL forms agree to first order; in sparse networks the penalty's
/// curvature is not negligible and the penalized form tracks the sampling
/// spread of the PL estimates.
pub fn theta_covariance(fit: &FitResult, net: &Network, cov: &Covariates) -> Result<DMatrix<f64>, ModelError> {
    let (net, cov) = fitted_sample(fit, net, cov);
    let model = DyadModel::new(&net, &cov, fit.spec)?;
    let kernels = model.kernels(fit.theta_hat.as_slice(), fit.lambda_hat.as_slice())?;
    let info = if fit.estimator == Estimator::Pl {
        penalized_information(&model, &kernels)?
    } else {
        concentrated_information(&model.hessian_from(&kernels), DENSE_LIMIT)?
    };
    inverse_spd(&info).ok_or(ModelError::Singular("theta information"))
}

/// Plug-in APE and the dyad-level table.
pub fn ape_plugin(
    fit: &FitResult,
    net: &Network,
    cov: &Covariates,
    target: &ApeTarget,
) -> Result<(f64, Vec<(usize, usize, f64)>), ModelError> {
    let (net, cov) = fitted_sample(fit, net, cov);
    let model = DyadModel::new(&net, &cov, fit.spec)?;
    let a = ape_intermediates(&model, &fit.theta_hat, &fit.lambda_hat, target, None)?;
    Ok((a.delta, a.dyads))
}

/// APE evaluated at arbitrary parameters, e.g. the truth in simulations.
pub fn ape_value(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    theta: &DVector<f64>,
    lambda: &DVector<f64>,
    target: &ApeTarget,
) -> Result<f64, ModelError> {
    let model = DyadModel::new(net, cov, *spec)?;
    Ok(ape_intermediates(&model, theta, lambda, target, None)?.delta)
}

/// `V = a' I^{-1} a + N dl' H^{-1} dl` with `a = d_theta + H_tl H^{-1} d_lambda`,
/// `H = -H_ll` and `I` the concentrated information over `N`. Solves against
/// the fixed-effect information are exact, for the reason given at
/// [`theta_covariance`].
pub fn ape_variance(hp: &crate::model::HessianParts, inter: &ApeIntermediates) -> Result<f64, ModelError> {
    let n = hp.n;
    let big_n = (n * (n - 1)) as f64;
    let m = inter.d_lambda.len();
    let sdl = if m == 0 {
        DVector::zeros(0)
    } else {
        let rhs = DMatrix::from_column_slice(m, 1, inter.d_lambda.as_slice());
        solve_information(hp, &rhs, DENSE_LIMIT)?.column(0).into_owned()
    };
    let a = &inter.d_theta - &hp.neg_h_tl * &sdl;
    let info = concentrated_information(hp, DENSE_LIMIT)? / big_n;
    let theta_part = if a.is_empty() {
        0.0
    } else {
        let x = crate::linalg::solve_spd(&info, &a).ok_or(ModelError::Singular("theta information"))?;
        a.dot(&x)
    };
    let lambda_part = big_n * inter.d_lambda.dot(&sdl);
    Ok((theta_part + lambda_part).max(0.0))
}

/// Bias-corrected APE `Delta - 1/2 tr(d2_lambda Delta . S)` with its standard error.
pub fn ape_corrected(
    fit: &FitResult,
    net: &Network,
    cov: &Covariates,
    target: &ApeTarget,
) -> Result<ApeResult, ModelError> {
    let (net, cov) = fitted_sample(fit, net, cov);
    let model = DyadModel::new(&net, &cov, fit.spec)?;
    let kernels = model.kernels(fit.theta_hat.as_slice(), fit.lambda_hat.as_slice())?;
    let hp = model.hessian_from(&kernels);
    let s = HybridInverse::new(&hp)?;
    let inter = ape_intermediates(&model, &fit.theta_hat, &fit.lambda_hat, target, Some(&s))?;
    let trace = inter.trace.unwrap_or(0.0);
    let variance = ape_variance(&hp, &inter)?;
    let big_n = (model.n() * (model.n() - 1)) as f64;
    Ok(ApeResult {
        delta_plugin: inter.delta,
        trace_correction: trace,
        delta_corrected: inter.delta - 0.5 * trace,
        variance,
        std_error: (variance / big_n).sqrt(),
    })
}

/// Plug-in APE with the delta-method standard error but no trace correction.
pub fn ape_uncorrected(
    fit: &FitResult,
    net: &Network,
    cov: &Covariates,
    target: &ApeTarget,
) -> Result<ApeResult, ModelError> {
    let (net, cov) = fitted_sample(fit, net, cov);
    let model = DyadModel::new(&net, &cov, fit.spec)?;
    let kernels = model.kernels(fit.theta_hat.as_slice(), fit.lambda_hat.as_slice())?;
    let hp = model.hessian_from(&kernels);
    let inter = ape_intermediates(&model, &fit.theta_hat, &fit.lambda_hat, target, None)?;
    let variance = ape_variance(&hp, &inter)?;
    let big_n = (model.n() * (model.n() - 1)) as f64;
    Ok(ApeResult {
        delta_plugin: inter.delta,
        trace_correction: 0.0,
        delta_corrected: inter.delta,
        variance,
        std_error: (variance / big_n).sqrt(),
    })
}
