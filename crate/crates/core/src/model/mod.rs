//! Stationary dyadic likelihood, score and Hessian.
//!
//! Every quantity is a sum over unordered dyads `i < j`. Each dyad carries a
//! small vector of natural parameters `nu` (three for directed variants, one
//! for the undirected model) and a matching vector of sufficient statistics.
//! The parameters enter `nu` linearly: `theta = (beta, rho)` through the
//! covariates and the fixed effects through fixed positions, which is all the
//! chain rule needs.

pub mod kernel;

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::linalg::{KahanSum, Sym2};
use crate::netgraph::{pair_count, Covariates, Network};
pub use kernel::{Kernel, MAX_STATS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    /// Directed links with a reciprocity payoff `C_ij = Z_ij' rho`.
    Reciprocal,
    /// Directed links chosen independently (`rho` fixed at zero).
    DirectedNoRecip,
    /// Undirected links formed by mutual consent, one effect per node.
    Undirected,
}

impl ModelVariant {
    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Reciprocal => "reciprocal",
            ModelVariant::DirectedNoRecip => "directed-norecip",
            ModelVariant::Undirected => "undirected",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reciprocal" | "recip" => Some(ModelVariant::Reciprocal),
            "directed-norecip" | "norecip" | "directed" => Some(ModelVariant::DirectedNoRecip),
            "undirected" => Some(ModelVariant::Undirected),
            _ => None,
        }
    }

    pub fn is_directed(self) -> bool {
        self != ModelVariant::Undirected
    }

    /// Number of sufficient statistics per dyad.
    pub fn stats(self) -> usize {
        if self.is_directed() {
            3
        } else {
            1
        }
    }

    /// Number of fixed effects per node.
    pub fn effects_per_node(self) -> usize {
        if self.is_directed() {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub dim_beta: usize,
    pub dim_rho: usize,
}

impl ModelSpec {
    pub fn new(variant: ModelVariant, dim_beta: usize, dim_rho: usize) -> Result<Self, ModelError> {
        match variant {
            ModelVariant::DirectedNoRecip if dim_rho != 0 => Err(ModelError::Spec(
                "the model without reciprocity has no rho parameters".into(),
            )),
            ModelVariant::Undirected if dim_beta != 0 => Err(ModelError::Spec(
                "the undirected model has no beta parameters".into(),
            )),
            _ => Ok(Self {
                variant,
                dim_beta,
                dim_rho,
            }),
        }
    }

    /// The specification that uses every covariate relevant to `variant`:
    /// X for directed variants, Z for the reciprocity term and the undirected model.
    pub fn for_covariates(variant: ModelVariant, cov: &Covariates) -> Self {
        let (dim_beta, dim_rho) = match variant {
            ModelVariant::Reciprocal => (cov.dim_x(), cov.dim_z()),
            ModelVariant::DirectedNoRecip => (cov.dim_x(), 0),
            ModelVariant::Undirected => (0, cov.dim_z()),
        };
        Self {
            variant,
            dim_beta,
            dim_rho,
        }
    }

    pub fn dim_theta(&self) -> usize {
        self.dim_beta + self.dim_rho
    }

    pub fn width(&self) -> usize {
        self.variant.effects_per_node()
    }

    pub fn dim_lambda(&self, n: usize) -> usize {
        self.width() * n.saturating_sub(1)
    }
}

/// Model parameters. Node `n - 1` (zero-based) carries no stored effects;
/// its sender and receiver effects are normalised to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub beta: DVector<f64>,
    pub rho: DVector<f64>,
    /// `(alpha_0, gamma_0, ..., alpha_{n-2}, gamma_{n-2})`, or
    /// `(alpha_0, ..., alpha_{n-2})` for the undirected model.
    pub lambda: DVector<f64>,
}

impl Params {
    pub fn zeros(spec: &ModelSpec, n: usize) -> Self {
        Self {
            beta: DVector::zeros(spec.dim_beta),
            rho: DVector::zeros(spec.dim_rho),
            lambda: DVector::zeros(spec.dim_lambda(n)),
        }
    }

    pub fn from_theta(spec: &ModelSpec, theta: &DVector<f64>, lambda: DVector<f64>) -> Self {
        Self {
            beta: theta.rows(0, spec.dim_beta).into_owned(),
            rho: theta.rows(spec.dim_beta, spec.dim_rho).into_owned(),
            lambda,
        }
    }

    /// `theta = (beta', rho')'`.
    pub fn theta(&self) -> DVector<f64> {
        let mut t = DVector::zeros(self.beta.len() + self.rho.len());
        t.rows_mut(0, self.beta.len()).copy_from(&self.beta);
        t.rows_mut(self.beta.len(), self.rho.len()).copy_from(&self.rho);
        t
    }

    /// Sender effect `alpha_i` including the normalised last node.
    pub fn alpha(&self, spec: &ModelSpec, i: usize) -> f64 {
        self.lambda.get(i * spec.width()).copied().unwrap_or(0.0)
    }

    /// Receiver effect `gamma_i`; equals `alpha_i` in the undirected model.
    pub fn gamma(&self, spec: &ModelSpec, i: usize) -> f64 {
        let w = spec.width();
        self.lambda.get(i * w + w - 1).copied().unwrap_or(0.0)
    }

    fn check(&self, spec: &ModelSpec, n: usize) -> Result<(), ModelError> {
        let dims = [
            ("beta", self.beta.len(), spec.dim_beta),
            ("rho", self.rho.len(), spec.dim_rho),
            ("lambda", self.lambda.len(), spec.dim_lambda(n)),
        ];
        for (what, got, expected) in dims {
            if got != expected {
                return Err(ModelError::Dimension {
                    what,
                    got,
                    expected,
                });
            }
        }
        if self
            .beta
            .iter()
            .chain(self.rho.iter())
            .chain(self.lambda.iter())
            .any(|v| !v.is_finite())
        {
            return Err(ModelError::Spec("parameters must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DyadIndices {
    Directed { b_ij: f64, b_ji: f64, c_ij: f64 },
    Undirected { index: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadProbs {
    pub pi00: f64,
    pub pi10: f64,
    pub pi01: f64,
    pub pi11: f64,
    pub p_ij: f64,
    pub p_ji: f64,
    pub p11: f64,
}

/// Likelihood evaluator bound to one network and covariate set.
///
/// Construction validates dimensions once; evaluations reuse the dyad list
/// and observed states.
#[derive(Debug, Clone)]
pub struct DyadModel<'a> {
    net: &'a Network,
    cov: &'a Covariates,
    spec: ModelSpec,
    n: usize,
    pairs: Vec<(u32, u32)>,
    states: Vec<u8>,
}

impl<'a> DyadModel<'a> {
    pub fn new(net: &'a Network, cov: &'a Covariates, spec: ModelSpec) -> Result<Self, ModelError> {
        let n = net.n();
        if cov.n() != n {
            return Err(ModelError::Dimension {
                what: "covariate nodes",
                got: cov.n(),
                expected: n,
            });
        }
        if n < 2 {
            return Err(ModelError::Spec("a network needs at least two nodes".into()));
        }
        let spec = ModelSpec::new(spec.variant, spec.dim_beta, spec.dim_rho)?;
        if spec.variant.is_directed() && spec.dim_beta != cov.dim_x() {
            return Err(ModelError::Dimension {
                what: "beta versus X covariates",
                got: spec.dim_beta,
                expected: cov.dim_x(),
            });
        }
        if spec.variant != ModelVariant::DirectedNoRecip && spec.dim_rho != cov.dim_z() {
            return Err(ModelError::Dimension {
                what: "rho versus Z covariates",
                got: spec.dim_rho,
                expected: cov.dim_z(),
            });
        }
        let mut pairs = Vec::with_capacity(pair_count(n));
        let mut states = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i as u32, j as u32));
                let (a, b) = (net.get(i, j), net.get(j, i));
                states.push(if spec.variant.is_directed() {
                    a + 2 * b
                } else {
                    a * b
                });
            }
        }
        Ok(Self {
            net,
            cov,
            spec,
            n,
            pairs,
            states,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn covariates(&self) -> &Covariates {
        self.cov
    }

    pub fn stats(&self) -> usize {
        self.spec.variant.stats()
    }

    pub fn width(&self) -> usize {
        self.spec.width()
    }

    pub fn dim_theta(&self) -> usize {
        self.spec.dim_theta()
    }

    pub fn dim_lambda(&self) -> usize {
        self.spec.dim_lambda(self.n)
    }

    pub fn num_dyads(&self) -> usize {
        self.pairs.len()
    }

    /// Nodes `(i, j)` of dyad `d`, with `i < j`.
    #[inline]
    pub fn pair(&self, d: usize) -> (usize, usize) {
        let (i, j) = self.pairs[d];
        (i as usize, j as usize)
    }

    /// Observed state: `g_ij + 2 g_ji` for directed dyads, `g*_ij` otherwise.
    #[inline]
    pub fn state(&self, d: usize) -> usize {
        self.states[d] as usize
    }

    /// Position of node `node`'s `k`-th effect in `lambda`, if stored.
    #[inline]
    pub fn slot(&self, node: usize, k: usize) -> Option<usize> {
        (node + 1 < self.n).then(|| node * self.width() + k)
    }

    /// Which dyad statistic each effect of an endpoint loads on: the lower
    /// node's `alpha` shifts `B_ij` and its `gamma` shifts `B_ji`; the upper
    /// node's roles are swapped.
    #[inline]
    pub fn perm(&self, lower: bool) -> [usize; 2] {
        if !self.spec.variant.is_directed() || lower {
            [0, 1]
        } else {
            [1, 0]
        }
    }

    /// Natural parameters of dyad `d`.
    pub fn nu(&self, theta: &[f64], lambda: &[f64], d: usize) -> [f64; MAX_STATS] {
        let (i, j) = self.pair(d);
        let kb = self.spec.dim_beta;
        let w = self.width();
        let eff = |node: usize, k: usize| -> f64 {
            if node + 1 < self.n {
                lambda[node * w + k]
            } else {
                0.0
            }
        };
        match self.spec.variant {
            ModelVariant::Undirected => {
                let z = self.cov.z(i, j);
                let mut v = eff(i, 0) + eff(j, 0);
                for (k, zk) in z.iter().enumerate() {
                    v += zk * theta[kb + k];
                }
                [v, 0.0, 0.0]
            }
            variant => {
                let xij = self.cov.x(i, j);
                let xji = self.cov.x(j, i);
                let mut b1 = eff(i, 0) + eff(j, 1);
                let mut b2 = eff(j, 0) + eff(i, 1);
                for k in 0..kb {
                    b1 += xij[k] * theta[k];
                    b2 += xji[k] * theta[k];
                }
                let mut c = 0.0;
                if variant == ModelVariant::Reciprocal {
                    for (k, zk) in self.cov.z(i, j).iter().enumerate() {
                        c += zk * theta[kb + k];
                    }
                }
                [b1, b2, c]
            }
        }
    }

    pub fn kernel_from_nu(&self, nu: &[f64; MAX_STATS]) -> Kernel {
        if self.spec.variant.is_directed() {
            Kernel::directed(nu[0], nu[1], nu[2])
        } else {
            Kernel::undirected(nu[0])
        }
    }

    /// Dyad kernels at `(theta, lambda)`, in dyad order.
    pub fn kernels(&self, theta: &[f64], lambda: &[f64]) -> Result<Vec<Kernel>, ModelError> {
        let mut out = Vec::with_capacity(self.pairs.len());
        for d in 0..self.pairs.len() {
            let nu = self.nu(theta, lambda, d);
            if nu.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteIndex);
            }
            out.push(self.kernel_from_nu(&nu));
        }
        Ok(out)
    }

    /// Jacobian of `nu_d` with respect to `theta`, row-major `stats x dim_theta`.
    pub fn theta_jacobian(&self, d: usize, out: &mut [f64]) {
        let p = self.dim_theta();
        let kb = self.spec.dim_beta;
        let (i, j) = self.pair(d);
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.spec.variant {
            ModelVariant::Undirected => {
                out[kb..p].copy_from_slice(self.cov.z(i, j));
            }
            variant => {
                out[..kb].copy_from_slice(self.cov.x(i, j));
                out[p..p + kb].copy_from_slice(self.cov.x(j, i));
                if variant == ModelVariant::Reciprocal {
                    out[2 * p + kb..3 * p].copy_from_slice(self.cov.z(i, j));
                }
            }
        }
    }

    /// Observed-minus-expected statistics of dyad `d`.
    #[inline]
    pub fn residual(&self, k: &Kernel, d: usize) -> [f64; MAX_STATS] {
        let t = k.state_stats(self.state(d));
        let m = k.mean();
        [t[0] - m[0], t[1] - m[1], t[2] - m[2]]
    }

    pub fn log_likelihood_from(&self, theta: &[f64], lambda: &[f64], kernels: &[Kernel]) -> f64 {
        let mut sum = KahanSum::default();
        for (d, k) in kernels.iter().enumerate() {
            let nu = self.nu(theta, lambda, d);
            sum.add(k.log_prob(self.state(d), &nu));
        }
        sum.value()
    }

    pub fn score_from(&self, kernels: &[Kernel]) -> (DVector<f64>, DVector<f64>) {
        let p = self.dim_theta();
        let s = self.stats();
        let mut gt = DVector::zeros(p);
        let mut gl = DVector::zeros(self.dim_lambda());
        let mut jac = vec![0.0; s * p];
        for (d, k) in kernels.iter().enumerate() {
            let r = self.residual(k, d);
            if p > 0 {
                self.theta_jacobian(d, &mut jac);
                for a in 0..s {
                    for t in 0..p {
                        gt[t] += jac[a * p + t] * r[a];
                    }
                }
            }
            self.scatter_lambda(d, &r, &mut gl);
        }
        (gt, gl)
    }

    /// Adds the fixed-effect image of a per-dyad statistic vector `r` into `out`.
    #[inline]
    pub fn scatter_lambda(&self, d: usize, r: &[f64; MAX_STATS], out: &mut DVector<f64>) {
        let (i, j) = self.pair(d);
        for (node, lower) in [(i, true), (j, false)] {
            let perm = self.perm(lower);
            for k in 0..self.width() {
                if let Some(slot) = self.slot(node, k) {
                    out[slot] += r[perm[k]];
                }
            }
        }
    }

    /// Fixed-effect contraction of `v` for dyad `d`: the vector `J_lambda' v`
    /// restricted to the dyad's statistics.
    #[inline]
    pub fn gather_lambda(&self, d: usize, v: &DVector<f64>) -> [f64; MAX_STATS] {
        let (i, j) = self.pair(d);
        let mut out = [0.0; MAX_STATS];
        for (node, lower) in [(i, true), (j, false)] {
            let perm = self.perm(lower);
            for k in 0..self.width() {
                if let Some(slot) = self.slot(node, k) {
                    out[perm[k]] += v[slot];
                }
            }
        }
        out
    }

    pub fn hessian_from(&self, kernels: &[Kernel]) -> HessianParts {
        let p = self.dim_theta();
        let s = self.stats();
        let w = self.width();
        let m = self.dim_lambda();
        let mut neg_tt = DMatrix::zeros(p, p);
        let mut neg_tl = DMatrix::zeros(p, m);
        let mut blocks = vec![Sym2::default(); self.n];
        let mut dyad_cov = Vec::with_capacity(kernels.len());
        let mut jac = vec![0.0; s * p];
        let mut jc = vec![0.0; s * p];
        for (d, k) in kernels.iter().enumerate() {
            let (i, j) = self.pair(d);
            if p > 0 {
                self.theta_jacobian(d, &mut jac);
                // jc = Cov J, then -H_tt += J' Cov J
                for a in 0..s {
                    for t in 0..p {
                        let mut acc = 0.0;
                        for b in 0..s {
                            acc += k.cov(a, b) * jac[b * p + t];
                        }
                        jc[a * p + t] = acc;
                    }
                }
                for t in 0..p {
                    for u in 0..p {
                        let mut acc = 0.0;
                        for a in 0..s {
                            acc += jac[a * p + t] * jc[a * p + u];
                        }
                        neg_tt[(t, u)] += acc;
                    }
                }
                for (node, lower) in [(i, true), (j, false)] {
                    let perm = self.perm(lower);
                    for kk in 0..w {
                        if let Some(slot) = self.slot(node, kk) {
                            for t in 0..p {
                                neg_tl[(t, slot)] += jc[perm[kk] * p + t];
                            }
                        }
                    }
                }
            }
            for (node, lower) in [(i, true), (j, false)] {
                let perm = self.perm(lower);
                for a in 0..w {
                    for b in a..w {
                        blocks[node].add(a, b, k.cov(perm[a], perm[b]));
                    }
                }
            }
            dyad_cov.push(if s == 3 {
                [k.cov(0, 0), k.cov(0, 1), k.cov(1, 1)]
            } else {
                let v = k.cov(0, 0);
                [v, v, v]
            });
        }
        blocks.truncate(self.n - 1);
        HessianParts {
            n: self.n,
            width: w,
            directed: s == 3,
            neg_h_tt: neg_tt,
            neg_h_tl: neg_tl,
            blocks,
            dyad_cov,
        }
    }
}

/// Second derivatives of the log-likelihood, stored as the information
/// (negative Hessian). The fixed-effect block is kept factored: node blocks
/// `D_i` on the diagonal and one 2x2 covariance per dyad for the off-diagonal
/// entries.
#[derive(Debug, Clone)]
pub struct HessianParts {
    pub n: usize,
    pub width: usize,
    pub directed: bool,
    /// `-H_theta_theta`.
    pub neg_h_tt: DMatrix<f64>,
    /// `-H_theta_lambda`.
    pub neg_h_tl: DMatrix<f64>,
    /// `D_i` for the `n - 1` nodes with stored effects.
    pub blocks: Vec<Sym2>,
    /// `[Var g_ij, Cov(g_ij, g_ji), Var g_ji]` per dyad in pair order;
    /// all three equal the link variance in the undirected model.
    pub dyad_cov: Vec<[f64; 3]>,
}

impl HessianParts {
    pub fn h_tt(&self) -> DMatrix<f64> {
        -&self.neg_h_tt
    }

    pub fn h_tl(&self) -> DMatrix<f64> {
        -&self.neg_h_tl
    }

    pub fn dim_lambda(&self) -> usize {
        self.width * (self.n - 1)
    }

    /// Covariance of the dyad statistics `a`, `b` (0 = `g_ij`, 1 = `g_ji`).
    #[inline]
    pub fn cov2(&self, d: usize, a: usize, b: usize) -> f64 {
        let c = &self.dyad_cov[d];
        match (a, b) {
            (0, 0) => c[0],
            (1, 1) => c[2],
            _ => c[1],
        }
    }

    #[inline]
    fn perm(&self, lower: bool) -> [usize; 2] {
        if !self.directed || lower {
            [0, 1]
        } else {
            [1, 0]
        }
    }

    /// Entry of `-H_lambda_lambda` between effect `a` of node `i` and effect
    /// `b` of node `j`, for `i < j`.
    #[inline]
    pub fn cross(&self, d: usize, a: usize, b: usize) -> f64 {
        let pi = self.perm(true);
        let pj = self.perm(false);
        self.cov2(d, pi[a], pj[b])
    }

    /// `(-H_lambda_lambda) f` without forming the matrix.
    pub fn neg_hll_matvec(&self, f: &DVector<f64>) -> DVector<f64> {
        let w = self.width;
        let last = self.n - 1;
        let mut y = DVector::zeros(f.len());
        for (i, blk) in self.blocks.iter().enumerate() {
            for a in 0..w {
                let mut acc = 0.0;
                for b in 0..w {
                    acc += blk.get(a, b) * f[i * w + b];
                }
                y[i * w + a] = acc;
            }
        }
        let mut d = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if j < last {
                    for a in 0..w {
                        for b in 0..w {
                            let c = self.cross(d, a, b);
                            y[i * w + a] += c * f[j * w + b];
                            y[j * w + b] += c * f[i * w + a];
                        }
                    }
                }
                d += 1;
            }
        }
        y
    }

    /// Dense `-H_lambda_lambda`; intended for moderate `n` and test oracles.
    pub fn neg_hll_dense(&self) -> DMatrix<f64> {
        let w = self.width;
        let m = self.dim_lambda();
        let last = self.n - 1;
        let mut h = DMatrix::zeros(m, m);
        for (i, blk) in self.blocks.iter().enumerate() {
            for a in 0..w {
                for b in 0..w {
                    h[(i * w + a, i * w + b)] = blk.get(a, b);
                }
            }
        }
        let mut d = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if j < last {
                    for a in 0..w {
                        for b in 0..w {
                            let c = self.cross(d, a, b);
                            h[(i * w + a, j * w + b)] = c;
                            h[(j * w + b, i * w + a)] = c;
                        }
                    }
                }
                d += 1;
            }
        }
        h
    }

    /// Node block `D_i` recomputed from the per-dyad covariances.
    pub fn block_from_dyads(&self, node: usize) -> Sym2 {
        let mut out = Sym2::default();
        let mut d = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if i == node || j == node {
                    let perm = self.perm(i == node);
                    for a in 0..self.width {
                        for b in a..self.width {
                            out.add(a, b, self.cov2(d, perm[a], perm[b]));
                        }
                    }
                }
                d += 1;
            }
        }
        out
    }
}

fn bound<'a>(
    net: &'a Network,
    cov: &'a Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<DyadModel<'a>, ModelError> {
    let model = DyadModel::new(net, cov, *spec)?;
    params.check(spec, net.n())?;
    Ok(model)
}

/// Indices of dyad `(i, j)`; for the undirected model the single index
/// `Z_ij' rho + alpha_i + alpha_j`.
pub fn dyad_indices(
    params: &Params,
    cov: &Covariates,
    spec: &ModelSpec,
    i: usize,
    j: usize,
) -> Result<DyadIndices, ModelError> {
    let n = cov.n();
    if i == j || i >= n || j >= n {
        return Err(ModelError::BadDyad(i, j));
    }
    params.check(spec, n)?;
    let z_dot = |rho: &DVector<f64>| -> f64 {
        cov.z(i, j)
            .iter()
            .zip(rho.iter())
            .map(|(a, b)| a * b)
            .sum()
    };
    Ok(match spec.variant {
        ModelVariant::Undirected => DyadIndices::Undirected {
            index: z_dot(&params.rho) + params.alpha(spec, i) + params.alpha(spec, j),
        },
        variant => {
            let xb = |a: usize, b: usize| -> f64 {
                cov.x(a, b)
                    .iter()
                    .zip(params.beta.iter())
                    .map(|(x, t)| x * t)
                    .sum()
            };
            DyadIndices::Directed {
                b_ij: xb(i, j) + params.alpha(spec, i) + params.gamma(spec, j),
                b_ji: xb(j, i) + params.alpha(spec, j) + params.gamma(spec, i),
                c_ij: if variant == ModelVariant::Reciprocal {
                    z_dot(&params.rho)
                } else {
                    0.0
                },
            }
        }
    })
}

pub fn dyad_probs(idx: DyadIndices) -> Result<DyadProbs, ModelError> {
    match idx {
        DyadIndices::Directed { b_ij, b_ji, c_ij } => {
            if !(b_ij.is_finite() && b_ji.is_finite() && c_ij.is_finite()) {
                return Err(ModelError::NonFiniteIndex);
            }
            let k = Kernel::directed(b_ij, b_ji, c_ij);
            let [pi00, pi10, pi01, pi11] = k.probs();
            let m = k.mean();
            Ok(DyadProbs {
                pi00,
                pi10,
                pi01,
                pi11,
                p_ij: m[0],
                p_ji: m[1],
                p11: m[2],
            })
        }
        DyadIndices::Undirected { index } => {
            if !index.is_finite() {
                return Err(ModelError::NonFiniteIndex);
            }
            let k = Kernel::undirected(index);
            let [p0, p1, _, _] = k.probs();
            Ok(DyadProbs {
                pi00: p0,
                pi10: 0.0,
                pi01: 0.0,
                pi11: p1,
                p_ij: p1,
                p_ji: p1,
                p11: p1,
            })
        }
    }
}

pub fn log_likelihood(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<f64, ModelError> {
    let model = bound(net, cov, spec, params)?;
    let theta = params.theta();
    let k = model.kernels(theta.as_slice(), params.lambda.as_slice())?;
    Ok(model.log_likelihood_from(theta.as_slice(), params.lambda.as_slice(), &k))
}

/// Score `(d ell / d theta, d ell / d lambda)`.
pub fn score(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<(DVector<f64>, DVector<f64>), ModelError> {
    let model = bound(net, cov, spec, params)?;
    let theta = params.theta();
    let k = model.kernels(theta.as_slice(), params.lambda.as_slice())?;
    Ok(model.score_from(&k))
}

pub fn hessian_parts(
    net: &Network,
    cov: &Covariates,
    spec: &ModelSpec,
    params: &Params,
) -> Result<HessianParts, ModelError> {
    let model = bound(net, cov, spec, params)?;
    let theta = params.theta();
    let k = model.kernels(theta.as_slice(), params.lambda.as_slice())?;
    Ok(model.hessian_from(&k))
}

#[cfg(test)]
pub(crate) mod tests;
