//! Log-determinant penalty `eta = 1/2 sum_i ln det D_i` built from the node
//! blocks of the fixed-effect information, and its derivatives.
//!
//! Each `D_i` is a sum of dyad covariances, so its derivatives are sums of
//! third (gradient) and fourth (Hessian) dyad cumulants. The penalty depends
//! on the parameters only, never on the observed links.

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::linalg::Sym2;
use crate::model::{DyadModel, Kernel, ModelSpec, Params, MAX_STATS};
use crate::netgraph::{Covariates, Network};

/// Below this determinant a node block is treated as singular.
pub const DET_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyBlocks {
    /// Effects per node: 2 for directed variants, 1 for the undirected model.
    pub width: usize,
    pub blocks: Vec<Sym2>,
    pub eta: f64,
}

impl DyadModel<'_> {
    /// Node blocks `D_i` for the nodes with stored effects.
    pub fn node_blocks(&self, kernels: &[Kernel]) -> Vec<Sym2> {
        let w = self.width();
        let mut blocks = vec![Sym2::default(); self.n()];
        for (d, k) in kernels.iter().enumerate() {
            let (i, j) = self.pair(d);
            for (node, lower) in [(i, true), (j, false)] {
                let perm = self.perm(lower);
                for a in 0..w {
                    for b in a..w {
                        blocks[node].add(a, b, k.cov(perm[a], perm[b]));
                    }
                }
            }
        }
        blocks.truncate(self.n() - 1);
        blocks
    }
}

pub(crate) fn eta_from_blocks(blocks: &[Sym2], width: usize) -> Result<f64, ModelError> {
    let mut eta = 0.0;
    for (node, b) in blocks.iter().enumerate() {
        let det = b.det(width);
        if !(det > DET_FLOOR) || !det.is_finite() {
            return Err(ModelError::Boundary { node, det });
        }
        eta += 0.5 * det.ln();
    }
    Ok(eta)
}

pub(crate) fn inverse_blocks(blocks: &[Sym2], width: usize) -> Result<Vec<Sym2>, ModelError> {
    blocks
        .iter()
        .enumerate()
        .map(|(node, b)| {
            b.inverse(width).ok_or(ModelError::Boundary {
                node,
                det: b.det(width),
            })
        })
        .collect()
}

/// Weight on the dyad statistics' covariance induced by `1/2 D_e^{-1}` of
/// both endpoints: `Omega[x][y] = sum_e 1/2 (D_e^{-1})[a][b]` over the effect
/// pairs `(a, b)` of endpoint `e` loading on statistics `(x, y)`.
fn dyad_weight(model: &DyadModel, inv: &[Sym2], d: usize) -> [[f64; MAX_STATS]; MAX_STATS] {
    let w = model.width();
    let (i, j) = model.pair(d);
    let mut omega = [[0.0; MAX_STATS]; MAX_STATS];
    for (node, lower) in [(i, true), (j, false)] {
        if node + 1 >= model.n() {
            continue;
        }
        let perm = model.perm(lower);
        for a in 0..w {
            for b in 0..w {
                omega[perm[a]][perm[b]] += 0.5 * inv[node].get(a, b);
            }
        }
    }
    omega
}

/// Gradient of `eta` given the dyad kernels and the inverse node blocks.
pub(crate) fn grad_from(
    model: &DyadModel,
    kernels: &[Kernel],
    inv: &[Sym2],
) -> (DVector<f64>, DVector<f64>) {
    let p = model.dim_theta();
    let s = model.stats();
    let mut gt = DVector::zeros(p);
    let mut gl = DVector::zeros(model.dim_lambda());
    let mut jac = vec![0.0; s * p];
    for (d, k) in kernels.iter().enumerate() {
        let r = dyad_eta_direction(model, inv, k, d);
        if p > 0 {
            model.theta_jacobian(d, &mut jac);
            for a in 0..s {
                for t in 0..p {
                    gt[t] += jac[a * p + t] * r[a];
                }
            }
        }
        model.scatter_lambda(d, &r, &mut gl);
    }
    (gt, gl)
}

/// Derivative of `eta` with respect to the natural parameters of dyad `d`.
pub(crate) fn dyad_eta_direction(
    model: &DyadModel,
    inv: &[Sym2],
    k: &Kernel,
    d: usize,
) -> [f64; MAX_STATS] {
    let s = model.stats();
    let omega = dyad_weight(model, inv, d);
    let mut r = [0.0; MAX_STATS];
    for x in 0..s {
        for y in 0..s {
            let o = omega[x][y];
            if o == 0.0 {
                continue;
            }
            for (c, rc) in r.iter_mut().enumerate().take(s) {
                *rc += o * k.cum3(x, y, c);
            }
        }
    }
    r
}

/// `d^2 eta / d lambda d lambda'`, dense.
pub(crate) fn hess_lambda_from(model: &DyadModel, kernels: &[Kernel], inv: &[Sym2]) -> DMatrix<f64> {
    hess_from(model, kernels, inv, false)
}

/// Joint Hessian of `eta` in `(theta, lambda)`, theta first.
pub(crate) fn hess_joint_from(model: &DyadModel, kernels: &[Kernel], inv: &[Sym2]) -> DMatrix<f64> {
    hess_from(model, kernels, inv, true)
}

fn hess_from(model: &DyadModel, kernels: &[Kernel], inv: &[Sym2], with_theta: bool) -> DMatrix<f64> {
    let n = model.n();
    let w = model.width();
    let s = model.stats();
    let p = if with_theta { model.dim_theta() } else { 0 };
    let m = p + model.dim_lambda();
    let nb = if w == 2 { 3 } else { 1 };
    let mut h = DMatrix::zeros(m, m);
    // G[r + nb*i, k] = d D_i[r] / d coord_k with entries r = (xx, xy, yy).
    let mut g = DMatrix::zeros(nb * (n - 1), m);
    let entries: &[(usize, usize)] = if w == 2 {
        &[(0, 0), (0, 1), (1, 1)]
    } else {
        &[(0, 0)]
    };
    let mut jac = vec![0.0; s * p];
    let mut local: Vec<(usize, usize, f64)> = Vec::with_capacity(4 + s * p);
    for (d, k) in kernels.iter().enumerate() {
        let (i, j) = model.pair(d);
        // Coordinates that move this dyad: (coordinate, statistic, loading).
        local.clear();
        if p > 0 {
            model.theta_jacobian(d, &mut jac);
            for a in 0..s {
                for t in 0..p {
                    if jac[a * p + t] != 0.0 {
                        local.push((t, a, jac[a * p + t]));
                    }
                }
            }
        }
        for (node, lower) in [(i, true), (j, false)] {
            let perm = model.perm(lower);
            for kk in 0..w {
                if let Some(slot) = model.slot(node, kk) {
                    local.push((p + slot, perm[kk], 1.0));
                }
            }
        }

        // First term: tr(W d2D) through fourth cumulants.
        let omega = dyad_weight(model, inv, d);
        let mut kd = [[0.0; MAX_STATS]; MAX_STATS];
        for c in 0..s {
            for c2 in c..s {
                let mut acc = 0.0;
                for x in 0..s {
                    for y in 0..s {
                        if omega[x][y] != 0.0 {
                            acc += omega[x][y] * k.cum4(x, y, c, c2);
                        }
                    }
                }
                kd[c][c2] = acc;
                kd[c2][c] = acc;
            }
        }
        for &(ua, ca, wa) in &local {
            for &(ub, cb, wb) in &local {
                h[(ua, ub)] += wa * wb * kd[ca][cb];
            }
        }

        // Derivatives of the endpoint blocks for the second term.
        for (node, lower) in [(i, true), (j, false)] {
            if node + 1 >= n {
                continue;
            }
            let perm = model.perm(lower);
            for (r, &(a, b)) in entries.iter().enumerate() {
                let k3 = [0, 1, 2].map(|c| if c < s { k.cum3(perm[a], perm[b], c) } else { 0.0 });
                for &(u, c, wu) in &local {
                    g[(nb * node + r, u)] += wu * k3[c];
                }
            }
        }
    }
    // Second term: -1/2 sum_i tr(E dD E dD) = -1/2 G' blkdiag(M_i) G.
    let mut mg = DMatrix::zeros(nb * (n - 1), m);
    for (node, e) in inv.iter().enumerate() {
        let mi = trace_form(e, w);
        for r in 0..nb {
            for s2 in 0..nb {
                let coef = mi[r][s2];
                if coef == 0.0 {
                    continue;
                }
                for col in 0..m {
                    mg[(nb * node + r, col)] += coef * g[(nb * node + s2, col)];
                }
            }
        }
    }
    h.gemm_tr(-0.5, &g, &mg, 1.0);
    h
}

/// `M[r][s] = tr(E B_r E B_s)` for the symmetric basis
/// `B_0 = e1 e1'`, `B_1 = e1 e2' + e2 e1'`, `B_2 = e2 e2'`.
fn trace_form(e: &Sym2, width: usize) -> [[f64; 3]; 3] {
    if width == 1 {
        let mut m = [[0.0; 3]; 3];
        m[0][0] = e.xx * e.xx;
        return m;
    }
    let (a, b, c) = (e.xx, e.xy, e.yy);
    [
        [a * a, 2.0 * a * b, b * b],
        [2.0 * a * b, 2.0 * (b * b + a * c), 2.0 * b * c],
        [b * b, 2.0 * b * c, c * c],
    ]
}

fn bound<'a>(
    net: &'a Network,
    cov: &'a Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<(DyadModel<'a>, Vec<Kernel>), ModelError> {
    let model = DyadModel::new(net, cov, *spec)?;
    if params.lambda.len() != model.dim_lambda()
        || params.beta.len() != spec.dim_beta
        || params.rho.len() != spec.dim_rho
    {
        return Err(ModelError::Dimension {
            what: "parameters",
            got: params.beta.len() + params.rho.len() + params.lambda.len(),
            expected: spec.dim_theta() + model.dim_lambda(),
        });
    }
    let theta = params.theta();
    let kernels = model.kernels(theta.as_slice(), params.lambda.as_slice())?;
    Ok((model, kernels))
}

pub fn penalty_eta(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<PenaltyBlocks, ModelError> {
    let (model, kernels) = bound(net, cov, spec, params)?;
    let blocks = model.node_blocks(&kernels);
    let eta = eta_from_blocks(&blocks, model.width())?;
    Ok(PenaltyBlocks {
        width: model.width(),
        blocks,
        eta,
    })
}

/// `(d eta / d theta, d eta / d lambda)`.
pub fn penalty_grad(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<(DVector<f64>, DVector<f64>), ModelError> {
    let (model, kernels) = bound(net, cov, spec, params)?;
    let inv = inverse_blocks(&model.node_blocks(&kernels), model.width())?;
    Ok(grad_from(&model, &kernels, &inv))
}

pub fn penalty_hess_lambda(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<DMatrix<f64>, ModelError> {
    let (model, kernels) = bound(net, cov, spec, params)?;
    let inv = inverse_blocks(&model.node_blocks(&kernels), model.width())?;
    Ok(hess_lambda_from(&model, &kernels, &inv))
}

/// Hessian of `eta` in `(theta, lambda)`, theta first.
pub fn penalty_hess_joint(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<DMatrix<f64>, ModelError> {
    let (model, kernels) = bound(net, cov, spec, params)?;
    let inv = inverse_blocks(&model.node_blocks(&kernels), model.width())?;
    Ok(hess_joint_from(&model, &kernels, &inv))
}
