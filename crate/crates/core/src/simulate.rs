//! Synthetic networks from the best-response dynamic and the Monte Carlo
//! harness built on them.
//!
//! Each replication owns two ChaCha streams derived from the master seed, one
//! for the covariate and heterogeneity draws and one for the link dynamic, so
//! results do not depend on how replications are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;

use crate::error::{FitError, InputError};
use crate::inference::{ape_corrected, ape_uncorrected, ape_value, theta_covariance, ApeKind, ApeTarget};
use crate::model::{ModelSpec, ModelVariant};
use crate::netgraph::{network_stats, Covariates, Network, NetworkStats};
use crate::solver::{correct_mle, fit_mle, fit_pl, Estimator, FitOptions, FitResult};

/// Normal quantile used for the 95% intervals.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignId {
    A1,
    A2,
    A3,
    B1,
    B2,
    B3,
}

impl DesignId {
    pub const ALL: [DesignId; 6] = [
        DesignId::A1,
        DesignId::A2,
        DesignId::A3,
        DesignId::B1,
        DesignId::B2,
        DesignId::B3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignId::A1 => "A1",
            DesignId::A2 => "A2",
            DesignId::A3 => "A3",
            DesignId::B1 => "B1",
            DesignId::B2 => "B2",
            DesignId::B3 => "B3",
        }
    }

    /// Accepts `A1`, `a1` and `A.1`.
    pub fn parse(s: &str) -> Option<Self> {
        let t: String = s.chars().filter(|c| *c != '.').collect();
        Self::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(&t))
    }

    /// `(rho_l, rho_h, varpi0, varpi1)`.
    pub fn levels(self) -> (f64, f64, f64, f64) {
        match self {
            DesignId::A1 => (-0.5, -0.5, 1.0, 1.0),
            DesignId::A2 => (-1.0, -1.0, 1.0, 1.0),
            DesignId::A3 => (-2.0, -2.0, 1.0, 1.0),
            DesignId::B1 => (-2.0 / 3.0, -1.0 / 6.0, 0.25, 0.75),
            DesignId::B2 => (-7.0 / 6.0, -2.0 / 3.0, 0.25, 0.75),
            DesignId::B3 => (-13.0 / 6.0, -5.0 / 3.0, 0.25, 0.75),
        }
    }
}

impl fmt::Display for DesignId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Order of the two best-response updates within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// `i` then `j`, every round.
    #[default]
    Alternating,
    /// A fair coin picks which side moves first in each round.
    RandomOrder,
}

impl Schedule {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alternating" => Some(Schedule::Alternating),
            "random" | "random-order" | "random_order" => Some(Schedule::RandomOrder),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Schedule::Alternating => "alternating",
            Schedule::RandomOrder => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McDesign {
    /// `None` for a design given by explicit levels.
    pub design_id: Option<DesignId>,
    pub variant: ModelVariant,
    pub n: usize,
    pub rho_l: f64,
    pub rho_h: f64,
    pub varpi0: f64,
    pub varpi1: f64,
    pub beta0: f64,
    pub rho0: f64,
    pub rounds: usize,
    pub seed: u64,
    pub schedule: Schedule,
}

impl McDesign {
    pub fn new(id: DesignId, variant: ModelVariant, n: usize, seed: u64) -> Self {
        let (rho_l, rho_h, varpi0, varpi1) = id.levels();
        Self {
            design_id: Some(id),
            variant,
            n,
            rho_l,
            rho_h,
            varpi0,
            varpi1,
            beta0: 1.0,
            rho0: 1.0,
            rounds: 1000,
            seed,
            schedule: Schedule::Alternating,
        }
    }

    pub fn label(&self) -> String {
        match self.design_id {
            Some(id) => id.name().to_string(),
            None => "custom".to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), InputError> {
        let bad = |m: String| Err(InputError::Parse(m));
        if self.n < 3 {
            return bad(format!("design needs n >= 3, got {}", self.n));
        }
        if !(self.varpi0 > 0.0 && self.varpi1 > 0.0 && self.varpi0.is_finite() && self.varpi1.is_finite()) {
            return bad("Beta shapes varpi0 and varpi1 must be positive".into());
        }
        if !(self.rho_l <= self.rho_h) || !self.rho_l.is_finite() || !self.rho_h.is_finite() {
            return bad("heterogeneity levels need rho_l <= rho_h".into());
        }
        if !self.beta0.is_finite() || !self.rho0.is_finite() {
            return bad("true coefficients must be finite".into());
        }
        if self.variant == ModelVariant::Reciprocal && self.rounds == 0 {
            return bad("the best-response dynamic needs at least one round".into());
        }
        Ok(())
    }

    /// Builds a design from key-value settings.
    ///
    /// `design` names one of the tabulated designs and fills the four levels;
    /// `rho_l`, `rho_h`, `varpi0` and `varpi1` then override individual levels.
    /// Without `design` all four levels are required.
    pub fn from_settings(settings: &BTreeMap<String, String>) -> Result<Self, InputError> {
        let get = |k: &str| settings.get(k).map(|s| s.trim());
        let num = |k: &str| -> Result<Option<f64>, InputError> {
            get(k)
                .map(|v| {
                    parse_ratio(v).ok_or_else(|| InputError::Parse(format!("{k}: cannot parse '{v}' as a number")))
                })
                .transpose()
        };
        let int = |k: &str| -> Result<Option<u64>, InputError> {
            get(k)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| InputError::Parse(format!("{k}: cannot parse '{v}' as an integer")))
                })
                .transpose()
        };
        let variant = match get("variant") {
            Some(v) => ModelVariant::parse(v).ok_or_else(|| InputError::Parse(format!("unknown variant '{v}'")))?,
            None => ModelVariant::Reciprocal,
        };
        let n = int("n")?.unwrap_or(100) as usize;
        let seed = int("seed")?.unwrap_or(0);
        let mut d = match get("design").or_else(|| get("design_id")) {
            Some(name) => {
                let id = DesignId::parse(name).ok_or_else(|| InputError::Parse(format!("unknown design '{name}'")))?;
                McDesign::new(id, variant, n, seed)
            }
            None => {
                let need = |k: &str| -> Result<f64, InputError> {
                    num(k)?.ok_or_else(|| InputError::Parse(format!("custom design needs '{k}'")))
                };
                let mut d = McDesign::new(DesignId::A1, variant, n, seed);
                d.design_id = None;
                d.rho_l = need("rho_l")?;
                d.rho_h = need("rho_h")?;
                d.varpi0 = need("varpi0")?;
                d.varpi1 = need("varpi1")?;
                d
            }
        };
        let levels = [d.rho_l, d.rho_h, d.varpi0, d.varpi1];
        for (k, slot) in [
            ("rho_l", &mut d.rho_l),
            ("rho_h", &mut d.rho_h),
            ("varpi0", &mut d.varpi0),
            ("varpi1", &mut d.varpi1),
            ("beta0", &mut d.beta0),
            ("rho0", &mut d.rho0),
        ] {
            if let Some(v) = num(k)? {
                *slot = v;
            }
        }
        if levels != [d.rho_l, d.rho_h, d.varpi0, d.varpi1] {
            d.design_id = None;
        }
        if let Some(r) = int("rounds")? {
            d.rounds = r as usize;
        }
        if let Some(s) = get("schedule") {
            d.schedule = Schedule::parse(s).ok_or_else(|| InputError::Parse(format!("unknown schedule '{s}'")))?;
        }
        d.validate()?;
        Ok(d)
    }
}

/// Parses `0.5`, `-7/6` and similar.
fn parse_ratio(s: &str) -> Option<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

/// One draw of covariates and heterogeneity.
#[derive(Debug, Clone, PartialEq)]
pub struct Dgp {
    pub n: usize,
    /// Node types `Z~_i` in `{-1, 1}`.
    pub z_tilde: Vec<f64>,
    /// `X_ij` in `{0, 1}`, row-major, zero diagonal.
    pub x: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta0: f64,
    pub rho0: f64,
}

impl Dgp {
    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n + j]
    }

    pub fn z(&self, i: usize, j: usize) -> f64 {
        self.z_tilde[i] * self.z_tilde[j]
    }

    /// Directed utility `X_ij beta0 + alpha_i + gamma_j` (no-recip and reciprocal).
    pub fn directed_utility(&self, i: usize, j: usize) -> f64 {
        self.x(i, j) * self.beta0 + self.alpha[i] + self.gamma[j]
    }

    /// Covariates as seen by the estimator.
    ///
    /// Directed variants carry `X = (const, x)` and, with reciprocity, `Z = (z)`;
    /// the undirected variant carries `Z = (const, z)`. The constant absorbs the
    /// effects of the last node, which the estimator normalises to zero.
    pub fn covariates(&self, variant: ModelVariant) -> Covariates {
        let xn = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let (xs, zs) = match variant {
            ModelVariant::Reciprocal => (xn(&["const", "x"]), xn(&["z"])),
            ModelVariant::DirectedNoRecip => (xn(&["const", "x"]), Vec::new()),
            ModelVariant::Undirected => (Vec::new(), xn(&["const", "z"])),
        };
        let undirected = variant == ModelVariant::Undirected;
        Covariates::from_fn(
            self.n,
            xs,
            zs,
            |i, j| vec![1.0, self.x(i, j)],
            |i, j| {
                if undirected {
                    vec![1.0, self.z(i, j)]
                } else {
                    vec![self.z(i, j)]
                }
            },
        )
        .expect("generated covariates are finite and complete")
    }

    /// True `(theta, lambda)` under the estimator's normalisation.
    pub fn true_params(&self, variant: ModelVariant) -> (ModelSpec, DVector<f64>, DVector<f64>) {
        let n = self.n;
        let last = n - 1;
        match variant {
            ModelVariant::Undirected => {
                let spec = ModelSpec::new(variant, 0, 2).expect("valid spec");
                let theta = DVector::from_vec(vec![2.0 * self.alpha[last], self.rho0]);
                let lambda = DVector::from_iterator(last, (0..last).map(|i| self.alpha[i] - self.alpha[last]));
                (spec, theta, lambda)
            }
            _ => {
                let dim_rho = usize::from(variant == ModelVariant::Reciprocal);
                let spec = ModelSpec::new(variant, 2, dim_rho).expect("valid spec");
                let mut t = vec![self.alpha[last] + self.gamma[last], self.beta0];
                if dim_rho == 1 {
                    t.push(self.rho0);
                }
                let lambda = DVector::from_iterator(
                    2 * last,
                    (0..last).flat_map(|i| [self.alpha[i] - self.alpha[last], self.gamma[i] - self.gamma[last]]),
                );
                (spec, DVector::from_vec(t), lambda)
            }
        }
    }
}

/// Random stream for replication `rep`; `part` 0 feeds the DGP draw and 1 the
/// link dynamic.
pub fn replication_stream(seed: u64, rep: u64, part: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * rep + part);
    rng
}

/// Covariates and heterogeneity of replication `rep`.
pub fn draw_dgp(design: &McDesign, rep: u64) -> Dgp {
    draw_dgp_with(design, &mut replication_stream(design.seed, rep, 0))
}

pub fn draw_dgp_with<R: Rng + ?Sized>(design: &McDesign, rng: &mut R) -> Dgp {
    let n = design.n;
    let beta = Beta::new(design.varpi0, design.varpi1).expect("validated Beta shapes");
    let centre = design.varpi0 / (design.varpi0 + design.varpi1);
    let z_tilde: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let level = |z: f64| if z < 0.0 { design.rho_l } else { design.rho_h };
    let alpha: Vec<f64> = (0..n)
        .map(|i| level(z_tilde[i]) + beta.sample(rng) - centre)
        .collect();
    let gamma: Vec<f64> = (0..n)
        .map(|i| level(z_tilde[i]) + beta.sample(rng) - centre)
        .collect();
    let mut x = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(0.5) {
                x[i * n + j] = 1.0;
            }
        }
    }
    Dgp {
        n,
        z_tilde,
        x,
        alpha,
        gamma,
        beta0: design.beta0,
        rho0: design.rho0,
    }
}

/// Best-response chain of one reciprocal dyad.
///
/// Each update redraws a standard logistic shock, so `i` links with
/// probability `sigma(B_ij + g_ji C)` given the current `g_ji`.
#[derive(Debug, Clone)]
pub struct DyadChain {
    /// `p[0][g_other]` for `i`, `p[1][g_other]` for `j`.
    p: [[f64; 2]; 2],
    pub g_ij: bool,
    pub g_ji: bool,
}

impl DyadChain {
    pub fn new(b_ij: f64, b_ji: f64, c: f64) -> Self {
        Self {
            p: [
                [logistic(b_ij), logistic(b_ij + c)],
                [logistic(b_ji), logistic(b_ji + c)],
            ],
            g_ij: false,
            g_ji: false,
        }
    }

    pub fn update_i<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.g_ij = rng.random::<f64>() < self.p[0][usize::from(self.g_ji)];
    }

    pub fn update_j<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.g_ji = rng.random::<f64>() < self.p[1][usize::from(self.g_ij)];
    }

    /// One round: both sides move once.
    pub fn round<R: Rng + ?Sized>(&mut self, schedule: Schedule, rng: &mut R) {
        if schedule == Schedule::RandomOrder && rng.random_bool(0.5) {
            self.update_j(rng);
            self.update_i(rng);
        } else {
            self.update_i(rng);
            self.update_j(rng);
        }
    }

    /// State index in the order `(0,0), (1,0), (0,1), (1,1)`.
    pub fn state(&self) -> usize {
        usize::from(self.g_ij) + 2 * usize::from(self.g_ji)
    }
}

fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Simulates one network from the DGP.
///
/// Reciprocal dyads run `rounds` rounds of the best-response chain from
/// `g_ij = g_ji = 0`; the no-reciprocity and undirected variants draw each
/// link once.
pub fn simulate_network<R: Rng + ?Sized>(
    dgp: &Dgp,
    variant: ModelVariant,
    rounds: usize,
    schedule: Schedule,
    rng: &mut R,
) -> Network {
    let n = dgp.n;
    let mut net = Network::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            match variant {
                ModelVariant::Reciprocal => {
                    let mut chain = DyadChain::new(
                        dgp.directed_utility(i, j),
                        dgp.directed_utility(j, i),
                        dgp.z(i, j) * dgp.rho0,
                    );
                    for _ in 0..rounds {
                        chain.round(schedule, rng);
                    }
                    net.set_edge(i, j, chain.g_ij);
                    net.set_edge(j, i, chain.g_ji);
                }
                ModelVariant::DirectedNoRecip => {
                    let a = rng.random::<f64>() < logistic(dgp.directed_utility(i, j));
                    let b = rng.random::<f64>() < logistic(dgp.directed_utility(j, i));
                    net.set_edge(i, j, a);
                    net.set_edge(j, i, b);
                }
                ModelVariant::Undirected => {
                    let v = dgp.z(i, j) * dgp.rho0 + dgp.alpha[i] + dgp.alpha[j];
                    let g = rng.random::<f64>() < logistic(v);
                    net.set_edge(i, j, g);
                    net.set_edge(j, i, g);
                }
            }
        }
    }
    net
}

/// Network of replication `rep`, with its DGP.
pub fn replication_network(design: &McDesign, rep: u64) -> (Dgp, Network) {
    let dgp = draw_dgp(design, rep);
    let mut rng = replication_stream(design.seed, rep, 1);
    let net = simulate_network(&dgp, design.variant, design.rounds, design.schedule, &mut rng);
    (dgp, net)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOptions {
    pub reps: usize,
    pub estimators: Vec<Estimator>,
    /// `(regressor name, kind)`, resolved against the design's covariates.
    pub apes: Vec<(String, ApeKind)>,
    pub fit: FitOptions,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl McOptions {
    /// All three estimators with the APEs of `x` (binary) and `z` (continuous).
    pub fn standard(reps: usize) -> Self {
        Self {
            reps,
            estimators: vec![Estimator::Mle, Estimator::Ec, Estimator::Pl],
            apes: vec![("x".into(), ApeKind::Binary), ("z".into(), ApeKind::Continuous)],
            fit: FitOptions::default(),
            threads: None,
        }
    }
}

/// Estimate, standard error and truth of one quantity in one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub estimate: f64,
    pub std_error: f64,
    pub truth: f64,
}

impl Draw {
    pub fn covers(&self) -> bool {
        (self.estimate - self.truth).abs() <= Z95 * self.std_error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RepOutcome {
    Fitted {
        /// One entry per `theta` component.
        coefficients: Vec<Draw>,
        apes: Vec<Draw>,
        converged: bool,
    },
    /// The estimator is unavailable (MLE non-existence), with the reason.
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: u64,
    pub stats: NetworkStats,
    pub mle_exists: Option<bool>,
    pub outcomes: Vec<(Estimator, RepOutcome)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawSummary {
    /// Median of `estimate - truth`.
    pub median_bias: f64,
    /// Sample standard deviation of the estimates; `None` below two draws.
    pub sd: Option<f64>,
    pub coverage: f64,
    /// Mean reported standard error.
    pub mean_se: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: Estimator,
    /// `beta:x`, `rho:z`, or the APE label.
    pub quantity: String,
    /// `None` when the estimator never produced a value.
    pub summary: Option<DrawSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub design: McDesign,
    pub reps: usize,
    pub mean_density: f64,
    pub mean_reciprocity: f64,
    pub mean_transitivity: Option<f64>,
    /// Share of replications with an MLE, when the MLE was attempted.
    pub mle_success_rate: Option<f64>,
    /// `(estimator, share of replications it produced estimates in)`.
    pub success: Vec<(Estimator, f64)>,
    pub coefficients: Vec<SummaryRow>,
    pub apes: Vec<SummaryRow>,
    pub replications: Vec<RepRecord>,
}

impl McSummary {
    pub fn coefficient(&self, estimator: Estimator, quantity: &str) -> Option<&DrawSummary> {
        find_row(&self.coefficients, estimator, quantity)
    }

    pub fn ape(&self, estimator: Estimator, quantity: &str) -> Option<&DrawSummary> {
        find_row(&self.apes, estimator, quantity)
    }
}

fn find_row<'a>(rows: &'a [SummaryRow], estimator: Estimator, quantity: &str) -> Option<&'a DrawSummary> {
    rows.iter()
        .find(|r| r.estimator == estimator && r.quantity == quantity)
        .and_then(|r| r.summary.as_ref())
}

/// Names of the `theta` components for a design, e.g. `beta:const`, `rho:z`.
pub fn coefficient_names(variant: ModelVariant) -> Vec<String> {
    let spec_cov = Dgp {
        n: 2,
        z_tilde: vec![1.0, 1.0],
        x: vec![0.0; 4],
        alpha: vec![0.0; 2],
        gamma: vec![0.0; 2],
        beta0: 1.0,
        rho0: 1.0,
    }
    .covariates(variant);
    spec_cov
        .x_names()
        .iter()
        .map(|s| format!("beta:{s}"))
        .chain(spec_cov.z_names().iter().map(|s| format!("rho:{s}")))
        .collect()
}

fn fit_outcome(
    fit: Result<FitResult, FitError>,
    net: &Network,
    cov: &Covariates,
    truth_theta: &DVector<f64>,
    targets: &[(ApeTarget, f64)],
) -> RepOutcome {
    let fit = match fit {
        Ok(f) => f,
        Err(FitError::NotConverged { partial, .. }) => *partial,
        Err(e) => return RepOutcome::Unavailable(e.to_string()),
    };
    let se: Vec<f64> = match theta_covariance(&fit, net, cov) {
        Ok(c) => (0..c.nrows()).map(|k| c[(k, k)].max(0.0).sqrt()).collect(),
        Err(_) => vec![f64::NAN; fit.theta_hat.len()],
    };
    let coefficients = (0..fit.theta_hat.len())
        .map(|k| Draw {
            estimate: fit.theta_hat[k],
            std_error: se[k],
            truth: truth_theta[k],
        })
        .collect();
    let apes = targets
        .iter()
        .map(|(t, truth)| {
            let r = if fit.estimator == Estimator::Pl {
                ape_corrected(&fit, net, cov, t)
            } else {
                ape_uncorrected(&fit, net, cov, t)
            };
            match r {
                Ok(a) => Draw {
                    estimate: a.delta_corrected,
                    std_error: a.std_error,
                    truth: *truth,
                },
                Err(_) => Draw {
                    estimate: f64::NAN,
                    std_error: f64::NAN,
                    truth: *truth,
                },
            }
        })
        .collect();
    RepOutcome::Fitted {
        coefficients,
        apes,
        converged: fit.converged,
    }
}

/// Simulates and fits one replication.
pub fn run_replication(design: &McDesign, rep: u64, opts: &McOptions) -> RepRecord {
    let (dgp, net) = replication_network(design, rep);
    let stats = network_stats(&net);
    let cov = dgp.covariates(design.variant);
    let (spec, theta0, lambda0) = dgp.true_params(design.variant);
    let targets: Vec<(ApeTarget, f64)> = opts
        .apes
        .iter()
        .filter_map(|(name, kind)| {
            let t = ApeTarget::resolve(name, *kind, &cov, &spec).ok()?;
            let truth = ape_value(&net, &cov, &spec, &theta0, &lambda0, &t).ok()?;
            Some((t, truth))
        })
        .collect();
    let wants = |e: Estimator| opts.estimators.contains(&e);
    let mut fit_opts = opts.fit.clone();
    fit_opts.trim = false;
    let mle = (wants(Estimator::Mle) || wants(Estimator::Ec)).then(|| fit_mle(&net, &cov, &spec, &fit_opts));
    let mle_exists = mle
        .as_ref()
        .map(|m| !matches!(m, Err(FitError::NonExistence { .. })));
    let mut outcomes = Vec::new();
    for &est in &opts.estimators {
        let fit = match est {
            Estimator::Mle => mle.clone().expect("MLE attempted"),
            Estimator::Ec => match mle.as_ref().expect("MLE attempted") {
                Ok(m) => correct_mle(m, &net, &cov, &fit_opts),
                Err(FitError::NotConverged { partial, .. }) => correct_mle(partial, &net, &cov, &fit_opts),
                Err(e) => Err(e.clone()),
            },
            Estimator::Pl => fit_pl(&net, &cov, &spec, &fit_opts),
        };
        outcomes.push((est, fit_outcome(fit, &net, &cov, &theta0, &targets)));
    }
    RepRecord {
        rep,
        stats,
        mle_exists,
        outcomes,
    }
}

/// Runs `opts.reps` replications and aggregates them.
pub fn run_mc(design: &McDesign, opts: &McOptions) -> McSummary {
    let work = || -> Vec<RepRecord> {
        (0..opts.reps as u64)
            .into_par_iter()
            .map(|rep| run_replication(design, rep, opts))
            .collect()
    };
    let records = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map(|pool| pool.install(work))
            .unwrap_or_else(|_| work()),
        None => work(),
    };
    summarize(design, opts, records)
}

/// Aggregates replication records.
pub fn summarize(design: &McDesign, opts: &McOptions, records: Vec<RepRecord>) -> McSummary {
    let reps = records.len();
    let mean = |f: &dyn Fn(&RepRecord) -> f64| records.iter().map(f).sum::<f64>() / reps.max(1) as f64;
    let trans: Vec<f64> = records.iter().filter_map(|r| r.stats.transitivity).collect();
    let mle_tries: Vec<bool> = records.iter().filter_map(|r| r.mle_exists).collect();
    let names = coefficient_names(design.variant);
    let ape_labels: Vec<String> = opts.apes.iter().map(|(n, k)| format!("ape:{n}:{}", k.name())).collect();
    let mut coefficients = Vec::new();
    let mut apes = Vec::new();
    let mut success = Vec::new();
    for &est in &opts.estimators {
        let fitted: Vec<(&Vec<Draw>, &Vec<Draw>)> = records
            .iter()
            .filter_map(|r| {
                r.outcomes.iter().find(|(e, _)| *e == est).and_then(|(_, o)| match o {
                    RepOutcome::Fitted {
                        coefficients, apes, ..
                    } => Some((coefficients, apes)),
                    RepOutcome::Unavailable(_) => None,
                })
            })
            .collect();
        success.push((est, fitted.len() as f64 / reps.max(1) as f64));
        for (k, name) in names.iter().enumerate() {
            let draws: Vec<Draw> = fitted.iter().filter_map(|(c, _)| c.get(k).copied()).collect();
            coefficients.push(SummaryRow {
                estimator: est,
                quantity: name.clone(),
                summary: summarize_draws(&draws),
            });
        }
        for (k, label) in ape_labels.iter().enumerate() {
            let draws: Vec<Draw> = fitted.iter().filter_map(|(_, a)| a.get(k).copied()).collect();
            apes.push(SummaryRow {
                estimator: est,
                quantity: label.clone(),
                summary: summarize_draws(&draws),
            });
        }
    }
    McSummary {
        design: design.clone(),
        reps,
        mean_density: mean(&|r| r.stats.density),
        mean_reciprocity: mean(&|r| r.stats.reciprocity_share),
        mean_transitivity: (!trans.is_empty()).then(|| trans.iter().sum::<f64>() / trans.len() as f64),
        mle_success_rate: (!mle_tries.is_empty())
            .then(|| mle_tries.iter().filter(|&&b| b).count() as f64 / mle_tries.len() as f64),
        success,
        coefficients,
        apes,
        replications: records,
    }
}

/// Median bias, SD and coverage over the finite draws.
pub fn summarize_draws(draws: &[Draw]) -> Option<DrawSummary> {
    let ok: Vec<&Draw> = draws.iter().filter(|d| d.estimate.is_finite()).collect();
    if ok.is_empty() {
        return None;
    }
    let mut errs: Vec<f64> = ok.iter().map(|d| d.estimate - d.truth).collect();
    let median_bias = median(&mut errs);
    let count = ok.len();
    let mean_est = ok.iter().map(|d| d.estimate).sum::<f64>() / count as f64;
    let sd = (count >= 2).then(|| {
        (ok.iter().map(|d| (d.estimate - mean_est).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    });
    let covered = ok.iter().filter(|d| d.std_error.is_finite() && d.covers()).count();
    let ses: Vec<f64> = ok.iter().map(|d| d.std_error).filter(|s| s.is_finite()).collect();
    Some(DrawSummary {
        median_bias,
        sd,
        coverage: covered as f64 / count as f64,
        mean_se: if ses.is_empty() {
            f64::NAN
        } else {
            ses.iter().sum::<f64>() / ses.len() as f64
        },
        count,
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}
