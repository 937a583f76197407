use dyadfe::netgraph::{degrees, network_stats};

use crate::config::RunConfig;
use crate::estimate::{existence_tables, load};
use crate::report::{num, opt_num, Report, Table};
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let net = load(cfg, false)?.net;
    let n = net.n();
    let stats = network_stats(&net);
    let pairs = (n * (n - 1) / 2) as f64;
    let mut mutual = 0usize;
    let mut asym = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            match (net.has_edge(i, j), net.has_edge(j, i)) {
                (true, true) => mutual += 1,
                (false, false) => {}
                _ => asym += 1,
            }
        }
    }
    let null = n * (n - 1) / 2 - mutual - asym;
    // Under independent links a dyad is mutual with probability density^2.
    let benchmark = stats.density * stats.density;

    let mut summary = Table::new("summary", "Network summary", &["statistic", "value"]);
    let mut put = |k: &str, v: String| summary.push(vec![k.to_string(), v]);
    put("nodes", n.to_string());
    put("links", net.edge_count().to_string());
    put("density", num(stats.density));
    put("null_share", num(null as f64 / pairs));
    put("asymmetric_share", num(asym as f64 / pairs));
    put("mutual_share", num(mutual as f64 / pairs));
    put("mutual_share_if_independent", num(benchmark));
    put(
        "reciprocity_ratio",
        opt_num((benchmark > 0.0).then(|| (mutual as f64 / pairs) / benchmark)),
    );
    put("transitivity", opt_num(stats.transitivity));

    let deg = degrees(&net);
    let mut hist = Table::new("degrees", "Degree histogram", &["degree", "out_nodes", "in_nodes"]);
    for d in 0..n {
        let out = deg.out_degree.iter().filter(|&&x| x == d).count();
        let inn = deg.in_degree.iter().filter(|&&x| x == d).count();
        if out + inn > 0 {
            hist.push(vec![d.to_string(), out.to_string(), inn.to_string()]);
        }
    }
    let (boundary, trim) = existence_tables(&net);
    Ok(Report {
        preamble: vec![
            "dyadfe diagnose".into(),
            format!("nodes={} links={}", n, net.edge_count()),
        ],
        tables: vec![summary, hist, boundary, trim],
    })
}
