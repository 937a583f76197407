use dyadfe::inference::{ape_corrected, theta_covariance};
use dyadfe::io::{labels_by_id, read_dyad_table, read_edges, read_labels};
use dyadfe::netgraph::{boundary_map, build_network, trim_iteratively, BoundaryReason, DyadTable};
use dyadfe::solver::{fit_ec, fit_mle, fit_pl};
use dyadfe::{ApeTarget, Covariates, Estimator, FitError, FitOptions, FitResult, ModelSpec, ModelVariant, Network};

use crate::config::RunConfig;
use crate::report::{num, opt_num, Report, Table, NA};
use crate::CliError;

/// Network (with labels, when given) and covariates read from the configured files.
pub struct Inputs {
    pub net: Network,
    pub cov: Covariates,
}

/// Node count: `--n`, else the label count, else one past the largest id seen.
fn node_count(cfg: &RunConfig, edges: &[(usize, usize)], labels: Option<&[(usize, String)]>, tables: &[&DyadTable]) -> usize {
    if let Some(n) = cfg.n {
        return n;
    }
    if let Some(l) = labels {
        return l.len();
    }
    let ids = edges
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(tables.iter().flat_map(|t| t.rows.iter().flat_map(|r| [r.0, r.1])));
    ids.max().map_or(0, |m| m + 1)
}

pub fn load(cfg: &RunConfig, with_covariates: bool) -> Result<Inputs, CliError> {
    let edges_path = cfg
        .edges
        .as_ref()
        .ok_or_else(|| CliError::Invalid("--edges is required".into()))?;
    let edges = read_edges(edges_path)?;
    let labels = cfg.labels.as_ref().map(|p| read_labels(p)).transpose()?;
    let (x, z) = if with_covariates {
        let x = cfg.x_cov.as_ref().map(|p| read_dyad_table(p)).transpose()?;
        let z = cfg.z_cov.as_ref().map(|p| read_dyad_table(p)).transpose()?;
        match cfg.variant {
            ModelVariant::Undirected if x.is_some() => {
                return Err(CliError::Invalid("the undirected model takes no X covariates".into()))
            }
            ModelVariant::DirectedNoRecip if z.is_some() => {
                return Err(CliError::Invalid("the model without reciprocity takes no Z covariates".into()))
            }
            ModelVariant::Reciprocal | ModelVariant::Undirected if z.is_none() => {
                return Err(CliError::Invalid(format!(
                    "the {} model needs Z covariates (--z-cov)",
                    cfg.variant.name()
                )))
            }
            _ => {}
        }
        (x.unwrap_or_default(), z.unwrap_or_default())
    } else {
        (DyadTable::default(), DyadTable::default())
    };
    let n = node_count(cfg, &edges, labels.as_deref(), &[&x, &z]);
    if n < 2 {
        return Err(CliError::Invalid("the network needs at least two nodes".into()));
    }
    let (mut net, cov) = build_network(n, &edges, &x, &z)?;
    if let Some(pairs) = labels {
        net = net.with_labels(labels_by_id(n, &pairs)?)?;
    }
    Ok(Inputs { net, cov })
}

pub fn label(net: &Network, i: usize) -> String {
    net.labels().map_or_else(|| i.to_string(), |l| l[i].clone())
}

pub fn reasons(r: &[BoundaryReason]) -> String {
    r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Boundary-node table and the full trim cascade of `net`.
pub fn existence_tables(net: &Network) -> (Table, Table) {
    let mut boundary = Table::new("boundary", "Boundary nodes", &["node", "label", "reasons"]);
    for (i, r) in boundary_map(net) {
        boundary.push(vec![i.to_string(), label(net, i), reasons(&r)]);
    }
    let (_, trace) = trim_iteratively(net);
    let mut trim = Table::new(
        "trim",
        format!(
            "Trim cascade ({} rounds, {} of {} nodes survive)",
            trace.rounds.len(),
            trace.surviving.len(),
            net.n()
        ),
        &["round", "cohort_size", "node", "label", "reasons"],
    );
    for (k, round) in trace.rounds.iter().enumerate() {
        for (i, r) in &round.removed {
            trim.push(vec![
                (k + 1).to_string(),
                round.removed.len().to_string(),
                i.to_string(),
                label(net, *i),
                reasons(r),
            ]);
        }
    }
    (boundary, trim)
}

enum Outcome {
    Fitted { fit: Box<FitResult>, status: &'static str },
    Unavailable { reason: String },
}

fn status_of(fit: &FitResult, opts: &FitOptions) -> &'static str {
    if fit.existence.trimmed_sample.is_some() {
        "trimmed"
    } else if fit.theta_hat.amax() >= opts.theta_bound {
        "theta-at-bound"
    } else {
        "ok"
    }
}

fn run_fit(est: Estimator, inputs: &Inputs, spec: &ModelSpec, cfg: &RunConfig) -> Outcome {
    let mut opts = cfg.fit.clone();
    if est != Estimator::Mle {
        opts.trim = false;
    }
    let r = match est {
        Estimator::Mle => fit_mle(&inputs.net, &inputs.cov, spec, &opts),
        Estimator::Pl => fit_pl(&inputs.net, &inputs.cov, spec, &opts),
        Estimator::Ec => fit_ec(&inputs.net, &inputs.cov, spec, &opts),
    };
    match r {
        Ok(fit) => {
            let status = status_of(&fit, &opts);
            Outcome::Fitted {
                fit: Box::new(fit),
                status,
            }
        }
        Err(FitError::NotConverged { partial, .. }) => Outcome::Fitted {
            fit: partial,
            status: "not-converged",
        },
        Err(FitError::NonExistence { nodes }) => Outcome::Unavailable {
            reason: format!("NonExistence ({} boundary or diverging nodes)", nodes.len()),
        },
        Err(e) => Outcome::Unavailable { reason: e.to_string() },
    }
}

pub fn parameter_names(spec: &ModelSpec, cov: &Covariates) -> Vec<String> {
    let beta = cov.x_names().iter().take(spec.dim_beta).map(|s| format!("beta:{s}"));
    let rho = cov.z_names().iter().take(spec.dim_rho).map(|s| format!("rho:{s}"));
    beta.chain(rho).collect()
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let inputs = load(cfg, true)?;
    let spec = ModelSpec::for_covariates(cfg.variant, &inputs.cov);
    let targets = cfg
        .apes
        .iter()
        .map(|(name, kind)| {
            ApeTarget::resolve(name, *kind, &inputs.cov, &spec).map_err(|e| CliError::Invalid(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let estimators = if cfg.estimators.is_empty() {
        vec![Estimator::Pl]
    } else {
        cfg.estimators.clone()
    };
    let names = parameter_names(&spec, &inputs.cov);

    let mut coef = Table::new(
        "coefficients",
        "Coefficients",
        &["estimator", "parameter", "estimate", "std_error", "z_value", "status"],
    );
    let mut apes = Table::new(
        "apes",
        "Average partial effects",
        &[
            "estimator",
            "regressor",
            "kind",
            "plugin",
            "corrected",
            "trace_correction",
            "std_error",
            "status",
        ],
    );
    let mut diag = Table::new(
        "fit",
        "Fit diagnostics",
        &[
            "estimator",
            "status",
            "converged",
            "iterations",
            "loglik",
            "penalized_objective",
            "nodes_fitted",
            "detail",
        ],
    );

    for &est in &estimators {
        let name = est.name().to_string();
        match run_fit(est, &inputs, &spec, cfg) {
            Outcome::Unavailable { reason } => {
                for p in &names {
                    coef.push(vec![name.clone(), p.clone(), NA.into(), NA.into(), NA.into(), reason.clone()]);
                }
                for t in &targets {
                    let mut row = vec![name.clone(), t.label(), t.kind.name().into()];
                    row.extend([NA, NA, NA, NA].map(String::from));
                    row.push(reason.clone());
                    apes.push(row);
                }
                diag.push(vec![
                    name,
                    NA.into(),
                    "false".into(),
                    NA.into(),
                    NA.into(),
                    NA.into(),
                    NA.into(),
                    reason,
                ]);
            }
            Outcome::Fitted { fit, status } => {
                let (se, cov_note) = match theta_covariance(&fit, &inputs.net, &inputs.cov) {
                    Ok(c) => ((0..c.nrows()).map(|k| Some(c[(k, k)].max(0.0).sqrt())).collect(), None),
                    Err(e) => (vec![None; names.len()], Some(e.to_string())),
                };
                for (k, p) in names.iter().enumerate() {
                    let est_k = fit.theta_hat[k];
                    let z = se[k].filter(|s| *s > 0.0).map(|s| est_k / s);
                    coef.push(vec![
                        name.clone(),
                        p.clone(),
                        num(est_k),
                        opt_num(se[k]),
                        opt_num(z),
                        status.into(),
                    ]);
                }
                for t in &targets {
                    let mut row = vec![name.clone(), t.label(), t.kind.name().into()];
                    match ape_corrected(&fit, &inputs.net, &inputs.cov, t) {
                        Ok(a) => {
                            row.extend([
                                num(a.delta_plugin),
                                num(a.delta_corrected),
                                num(a.trace_correction),
                                num(a.std_error),
                            ]);
                            row.push(status.into());
                        }
                        Err(e) => {
                            row.extend([NA, NA, NA, NA].map(String::from));
                            row.push(e.to_string());
                        }
                    }
                    apes.push(row);
                }
                let mut detail = Vec::new();
                if !fit.existence.diverged.is_empty() {
                    detail.push(format!("MLE on full sample does not exist ({} nodes)", fit.existence.diverged.len()));
                }
                if let Some(note) = cov_note {
                    detail.push(format!("no standard errors: {note}"));
                }
                diag.push(vec![
                    name,
                    status.into(),
                    fit.converged.to_string(),
                    fit.trace.len().to_string(),
                    num(fit.loglik),
                    opt_num(fit.penalized_obj),
                    fit.nodes.len().to_string(),
                    detail.join("; "),
                ]);
            }
        }
    }

    let sample = if cfg.variant == ModelVariant::Undirected {
        inputs.net.mutual_part()
    } else {
        inputs.net.clone()
    };
    let (boundary, trim) = existence_tables(&sample);
    let mut preamble = vec![
        format!("dyadfe estimate variant={}", cfg.variant.name()),
        format!("nodes={} links={}", inputs.net.n(), inputs.net.edge_count()),
        format!(
            "estimators={}",
            estimators.iter().map(|e| e.name()).collect::<Vec<_>>().join(",")
        ),
        format!("tol={} max_iter={} trim={}", cfg.fit.tol, cfg.fit.max_iter, cfg.fit.trim),
    ];
    if cfg.variant == ModelVariant::Undirected && !inputs.net.is_symmetric() {
        preamble.push("undirected model uses the mutual links only".into());
    }
    Ok(Report {
        preamble,
        tables: vec![coef, apes, diag, boundary, trim],
    })
}
