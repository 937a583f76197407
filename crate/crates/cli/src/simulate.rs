use dyadfe::simulate::{run_mc, SummaryRow};
use dyadfe::{Estimator, McDesign, McOptions};

use crate::config::RunConfig;
use crate::report::{num, opt_num, Report, Table, NA};
use crate::CliError;

fn panel(name: &'static str, title: &str, rows: &[SummaryRow]) -> Table {
    let mut t = Table::new(
        name,
        title,
        &["estimator", "quantity", "median_bias", "sd", "coverage", "mean_se", "count"],
    );
    for r in rows {
        let mut row = vec![r.estimator.name().to_string(), r.quantity.clone()];
        match &r.summary {
            Some(s) => row.extend([
                num(s.median_bias),
                opt_num(s.sd),
                num(s.coverage),
                num(s.mean_se),
                s.count.to_string(),
            ]),
            None => {
                row.extend([NA, NA, NA, NA].map(String::from));
                row.push("0".into());
            }
        }
        t.push(row);
    }
    t
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let design = McDesign::from_settings(&cfg.settings)?;
    let mut opts = McOptions::standard(cfg.reps);
    if !cfg.estimators.is_empty() {
        opts.estimators = cfg.estimators.clone();
    }
    if !cfg.apes.is_empty() {
        opts.apes = cfg.apes.clone();
    }
    opts.fit = cfg.fit.clone();
    opts.threads = cfg.threads;
    let s = run_mc(&design, &opts);

    let mut stats = Table::new(
        "network_stats",
        "Network statistics",
        &[
            "design",
            "variant",
            "n",
            "reps",
            "density",
            "reciprocity_share",
            "transitivity",
            "mle_success_rate",
        ],
    );
    stats.push(vec![
        design.label(),
        design.variant.name().into(),
        design.n.to_string(),
        s.reps.to_string(),
        num(s.mean_density),
        num(s.mean_reciprocity),
        opt_num(s.mean_transitivity),
        opt_num(s.mle_success_rate),
    ]);
    let mut success = Table::new("success", "Estimator availability", &["estimator", "success_rate"]);
    for (e, rate) in &s.success {
        success.push(vec![e.name().into(), num(*rate)]);
    }
    let preamble = vec![
        format!("dyadfe simulate design={} variant={}", design.label(), design.variant.name()),
        format!(
            "seed={} n={} reps={} rounds={} schedule={}",
            design.seed,
            design.n,
            s.reps,
            design.rounds,
            design.schedule.name()
        ),
        format!(
            "rho_l={} rho_h={} varpi0={} varpi1={} beta0={} rho0={}",
            num(design.rho_l),
            num(design.rho_h),
            num(design.varpi0),
            num(design.varpi1),
            num(design.beta0),
            num(design.rho0)
        ),
        format!(
            "estimators={}",
            opts.estimators.iter().map(|e: &Estimator| e.name()).collect::<Vec<_>>().join(",")
        ),
    ];
    Ok(Report {
        preamble,
        tables: vec![
            stats,
            success,
            panel("coefficients", "Coefficients: median bias, SD, 95% coverage", &s.coefficients),
            panel("apes", "Average partial effects: median bias, SD, 95% coverage", &s.apes),
        ],
    })
}
