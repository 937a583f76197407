//! Reference implementations written directly from the model definition,
//! sharing no numerical code with the crate: dyad probabilities, the
//! log-likelihood, the log-determinant penalty and a dense maximiser.

#![allow(dead_code)]

use dyadfe::{Covariates, ModelSpec, ModelVariant, Network, Params};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `pi` over `(0,0), (1,0), (0,1), (1,1)` for indices `(B_ij, B_ji, C)`.
pub fn probs4(b_ij: f64, b_ji: f64, c: f64) -> [f64; 4] {
    let w = [0.0, b_ij, b_ji, b_ij + b_ji + c];
    let top = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = w.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = e.iter().sum();
    [e[0] / z, e[1] / z, e[2] / z, e[3] / z]
}

#[derive(Clone)]
pub struct Instance {
    pub net: Network,
    pub cov: Covariates,
    pub spec: ModelSpec,
    pub params: Params,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.net.n()
    }

    pub fn variant(&self) -> ModelVariant {
        self.spec.variant
    }

    /// Packs `(theta, lambda)`.
    pub fn packed(&self) -> DVector<f64> {
        let t = self.params.theta();
        DVector::from_iterator(
            t.len() + self.params.lambda.len(),
            t.iter().chain(self.params.lambda.iter()).copied(),
        )
    }

    pub fn unpack(&self, v: &DVector<f64>) -> Params {
        let p = self.spec.dim_theta();
        let theta = v.rows(0, p).into_owned();
        Params::from_theta(&self.spec, &theta, v.rows(p, v.len() - p).into_owned())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sender and receiver effects of node `i`, zero for the last node.
fn effects(spec: &ModelSpec, p: &Params, n: usize, i: usize) -> (f64, f64) {
    if i + 1 == n {
        return (0.0, 0.0);
    }
    match spec.variant {
        ModelVariant::Undirected => (p.lambda[i], p.lambda[i]),
        _ => (p.lambda[2 * i], p.lambda[2 * i + 1]),
    }
}

/// Per-dyad probabilities of the four joint states, and the observed state.
/// In the undirected model only states `(0,0)` and `(1,1)` are used.
pub fn dyad_states(inst: &Instance, p: &Params) -> Vec<([f64; 4], usize, usize, usize)> {
    let n = inst.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ai, gi) = effects(&inst.spec, p, n, i);
            let (aj, gj) = effects(&inst.spec, p, n, j);
            let gij = inst.net.has_edge(i, j) as usize;
            let gji = inst.net.has_edge(j, i) as usize;
            let pr = match inst.spec.variant {
                ModelVariant::Undirected => {
                    let q = logistic(dot(inst.cov.z(i, j), p.rho.as_slice()) + ai + aj);
                    [1.0 - q, 0.0, 0.0, q]
                }
                v => {
                    let bij = dot(inst.cov.x(i, j), p.beta.as_slice()) + ai + gj;
                    let bji = dot(inst.cov.x(j, i), p.beta.as_slice()) + aj + gi;
                    let c = if v == ModelVariant::Reciprocal {
                        dot(inst.cov.z(i, j), p.rho.as_slice())
                    } else {
                        0.0
                    };
                    probs4(bij, bji, c)
                }
            };
            let state = match inst.spec.variant {
                ModelVariant::Undirected => 3 * (gij * gji),
                _ => gij + 2 * gji,
            };
            out.push((pr, state, i, j));
        }
    }
    out
}

pub fn loglik(inst: &Instance, p: &Params) -> f64 {
    dyad_states(inst, p).iter().map(|(pr, s, _, _)| pr[*s].ln()).sum()
}

/// `1/2 sum_i ln det D_i` over the nodes with free effects, where `D_i`
/// collects the variances of node `i`'s out- and in-links and their
/// within-dyad covariances.
pub fn eta(inst: &Instance, p: &Params) -> f64 {
    let n = inst.n();
    let mut d = vec![[0.0f64; 3]; n];
    for (pr, _, i, j) in dyad_states(inst, p) {
        let p_ij = pr[1] + pr[3];
        let p_ji = pr[2] + pr[3];
        let v_ij = p_ij * (1.0 - p_ij);
        let v_ji = p_ji * (1.0 - p_ji);
        let c = pr[3] - p_ij * p_ji;
        // d[k] = [Var out, Cov, Var in] of node k.
        d[i][0] += v_ij;
        d[i][1] += c;
        d[i][2] += v_ji;
        d[j][0] += v_ji;
        d[j][1] += c;
        d[j][2] += v_ij;
    }
    let mut s = 0.0;
    for b in d.iter().take(n - 1) {
        let det = if inst.spec.variant == ModelVariant::Undirected {
            b[0]
        } else {
            b[0] * b[2] - b[1] * b[1]
        };
        s += det.ln();
    }
    0.5 * s
}

pub fn objective(inst: &Instance, v: &DVector<f64>, penalized: bool) -> f64 {
    let p = inst.unpack(v);
    let l = loglik(inst, &p);
    if penalized {
        l + eta(inst, &p)
    } else {
        l
    }
}

/// Five-point central difference gradient.
pub fn fd_gradient(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for k in 0..x.len() {
        let at = |s: f64| {
            let mut y = x.clone();
            y[k] += s * h;
            f(&y)
        };
        g[k] = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
    }
    g
}

pub struct Maximum {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Damped Newton ascent with finite-difference derivatives.
pub fn maximize(f: &dyn Fn(&DVector<f64>) -> f64, x0: DVector<f64>) -> Maximum {
    let m = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    let mut g = fd_gradient(f, &x, 1e-3);
    let mut it = 0;
    while it < 200 && g.amax() > 1e-9 {
        it += 1;
        let mut h = DMatrix::zeros(m, m);
        for k in 0..m {
            let mut a = x.clone();
            let mut b = x.clone();
            a[k] += 1e-4;
            b[k] -= 1e-4;
            let col = (fd_gradient(f, &a, 1e-3) - fd_gradient(f, &b, 1e-3)) / 2e-4;
            h.set_column(k, &col);
        }
        let neg = -(&h + h.transpose()) / 2.0;
        let mut mu = 0.0;
        let step = loop {
            let mat = &neg + DMatrix::identity(m, m) * mu;
            if let Some(ch) = mat.cholesky() {
                break ch.solve(&g);
            }
            mu = if mu == 0.0 { 1e-6 } else { mu * 10.0 };
        };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let y = &x + &step * t;
            let fy = f(&y);
            if fy.is_finite() && fy >= fx {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        g = fd_gradient(f, &x, 1e-3);
        if !moved {
            break;
        }
    }
    Maximum {
        grad_norm: g.amax(),
        x,
        value: fx,
        iterations: it,
    }
}

/// Random instance with `X = [const, x, xb]` (continuous and binary),
/// `Z = [const, z]` and a Bernoulli(0.4) network.
pub fn random_instance(variant: ModelVariant, n: usize, rng: &mut ChaCha8Rng) -> Instance {
    build_instance(variant, n, rng, false)
}

/// Like [`random_instance`] with fewer columns: `X = [const, x]` and
/// `Z = [z]` (`Z = [const, z]` when undirected), so small networks still
/// admit interior maximisers.
pub fn lean_instance(variant: ModelVariant, n: usize, rng: &mut ChaCha8Rng) -> Instance {
    build_instance(variant, n, rng, true)
}

fn build_instance(variant: ModelVariant, n: usize, rng: &mut ChaCha8Rng, lean: bool) -> Instance {
    let xs: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let xb: Vec<f64> = (0..n * n).map(|_| f64::from(rng.random_bool(0.5))).collect();
    let zs: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (xn, zn): (Vec<String>, Vec<String>) = match variant {
        ModelVariant::Reciprocal => (vec!["const".into(), "x".into(), "xb".into()], vec!["zc".into(), "z".into()]),
        ModelVariant::DirectedNoRecip => (vec!["const".into(), "x".into(), "xb".into()], vec![]),
        ModelVariant::Undirected => (vec![], vec!["zc".into(), "z".into()]),
    };
    let (xn, zn) = match (lean, variant) {
        (false, _) => (xn, zn),
        (true, ModelVariant::Undirected) => (xn, zn),
        (true, _) => (xn[..2].to_vec(), zn.get(1..).unwrap_or_default().to_vec()),
    };
    let (kx, kz) = (xn.len(), zn.len());
    let cov = Covariates::from_fn(
        n,
        xn,
        zn,
        |i, j| vec![1.0, xs[i * n + j], xb[i * n + j]][..kx].to_vec(),
        |i, j| {
            let z = [1.0, zs[i * n + j]];
            z[2 - kz..].to_vec()
        },
    )
    .unwrap();
    let spec = ModelSpec::for_covariates(variant, &cov);
    let mut params = Params::zeros(&spec, n);
    for v in params.beta.iter_mut().chain(params.rho.iter_mut()) {
        *v = rng.random_range(-0.8..0.8);
    }
    for v in params.lambda.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    let mut net = Network::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(0.4) {
                net.set_edge(i, j, true);
            }
        }
    }
    if variant == ModelVariant::Undirected {
        net = net.mutual_part();
    }
    Instance { net, cov, spec, params }
}

/// Redraws the network of `inst` from the model at its parameters.
pub fn resample_network(inst: &mut Instance, rng: &mut ChaCha8Rng) {
    let n = inst.n();
    let mut net = Network::empty(n);
    for (pr, _, i, j) in dyad_states(inst, &inst.params) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut s = 3;
        for (k, q) in pr.iter().enumerate() {
            acc += q;
            if u < acc {
                s = k;
                break;
            }
        }
        net.set_edge(i, j, s == 1 || s == 3);
        net.set_edge(j, i, s == 2 || s == 3);
    }
    inst.net = net;
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `max_k |a_k - b_k| / max_k |b_k|`.
pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}
