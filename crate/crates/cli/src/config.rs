//! Run configuration: an optional key-value file merged with command-line
//! flags, flags winning.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Parser;
use dyadfe::io::read_settings;
use dyadfe::{ApeKind, Estimator, FitOptions, ModelVariant};

use crate::CliError;

#[derive(Parser, Debug, Default)]
#[command(name = "dyadfe", version, about = "Fixed-effects estimation of dyadic network formation models")]
pub struct Args {
    /// estimate, simulate or diagnose (same as --command)
    #[arg(value_name = "COMMAND")]
    pub positional: Option<String>,
    #[arg(long)]
    pub command: Option<String>,
    /// Plain-text `key = value` file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// reciprocal, directed-norecip or undirected
    #[arg(long)]
    pub variant: Option<String>,
    /// mle, pl or ec; repeatable
    #[arg(long)]
    pub estimator: Vec<String>,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long = "x-cov")]
    pub x_cov: Option<PathBuf>,
    #[arg(long = "z-cov")]
    pub z_cov: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Average partial effect as NAME:KIND with KIND binary or continuous; repeatable
    #[arg(long)]
    pub ape: Vec<String>,
    /// Simulation design, A1..A3 or B1..B3
    #[arg(long)]
    pub design: Option<String>,
    /// Node count (simulate), or for estimate/diagnose when nodes have no links
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub reps: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub rounds: Option<String>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<String>,
    /// Refit a non-existent MLE on the iteratively trimmed subnetwork
    #[arg(long)]
    pub trim: bool,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<String>,
    #[arg(long = "diverge-threshold")]
    pub diverge_threshold: Option<String>,
    /// Largest |theta_k| searched by the outer loop
    #[arg(long = "theta-bound")]
    pub theta_bound: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Simulate,
    Diagnose,
}

impl Command {
    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "estimate" => Some(Command::Estimate),
            "simulate" => Some(Command::Simulate),
            "diagnose" => Some(Command::Diagnose),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub variant: ModelVariant,
    /// Empty means the command's default set.
    pub estimators: Vec<Estimator>,
    pub edges: Option<PathBuf>,
    pub x_cov: Option<PathBuf>,
    pub z_cov: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub apes: Vec<(String, ApeKind)>,
    pub n: Option<usize>,
    pub reps: usize,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub fit: FitOptions,
    /// Merged settings; the simulation design is read from these.
    pub settings: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "command",
    "variant",
    "estimator",
    "edges",
    "x_cov",
    "z_cov",
    "labels",
    "ape",
    "design",
    "design_id",
    "n",
    "reps",
    "seed",
    "rounds",
    "out_dir",
    "threads",
    "trim",
    "tol",
    "max_iter",
    "diverge_threshold",
    "theta_bound",
    "inner_tol",
    "rho_l",
    "rho_h",
    "varpi0",
    "varpi1",
    "beta0",
    "rho0",
    "schedule",
];

const PATH_KEYS: &[&str] = &["edges", "x_cov", "z_cov", "labels", "out_dir"];

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split([',', ' ']).map(str::trim).filter(|t| !t.is_empty())
}

fn number<T: std::str::FromStr>(settings: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    settings
        .get(key)
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| invalid(format!("{key}: cannot parse '{v}'")))
        })
        .transpose()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(invalid(format!("{key}: expected true or false, found '{v}'"))),
    }
}

/// Reads `--ape` style entries `name:kind`.
pub fn parse_ape(s: &str) -> Result<(String, ApeKind), CliError> {
    let (name, kind) = s
        .rsplit_once(':')
        .ok_or_else(|| invalid(format!("APE '{s}' must be NAME:KIND")))?;
    let kind = ApeKind::parse(kind).ok_or_else(|| invalid(format!("APE '{s}': unknown kind '{kind}'")))?;
    if name.is_empty() {
        return Err(invalid(format!("APE '{s}' has no regressor name")));
    }
    Ok((name.to_string(), kind))
}

impl RunConfig {
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let mut settings = match &args.config {
            Some(path) => {
                let mut s = read_settings(path)?;
                let base = path.parent().unwrap_or(Path::new(""));
                for key in PATH_KEYS {
                    if let Some(v) = s.get_mut(*key) {
                        if Path::new(v.as_str()).is_relative() {
                            *v = base.join(&*v).to_string_lossy().into_owned();
                        }
                    }
                }
                s
            }
            None => BTreeMap::new(),
        };
        if let Some(bad) = settings.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(invalid(format!("unknown configuration key '{bad}'")));
        }
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                settings.insert(k.to_string(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        let joined = |v: &[String]| (!v.is_empty()).then(|| v.join(","));
        if let (Some(a), Some(b)) = (&args.positional, &args.command) {
            if !a.eq_ignore_ascii_case(b) {
                return Err(invalid(format!("conflicting commands '{a}' and '{b}'")));
            }
        }
        set("command", args.command.clone().or_else(|| args.positional.clone()));
        set("variant", args.variant.clone());
        set("estimator", joined(&args.estimator));
        set("edges", path(&args.edges));
        set("x_cov", path(&args.x_cov));
        set("z_cov", path(&args.z_cov));
        set("labels", path(&args.labels));
        set("ape", joined(&args.ape));
        set("design", args.design.clone());
        set("n", args.n.clone());
        set("reps", args.reps.clone());
        set("seed", args.seed.clone());
        set("rounds", args.rounds.clone());
        set("out_dir", path(&args.out_dir));
        set("threads", args.threads.clone());
        set("trim", args.trim.then(|| "true".to_string()));
        set("tol", args.tol.clone());
        set("max_iter", args.max_iter.clone());
        set("diverge_threshold", args.diverge_threshold.clone());
        set("theta_bound", args.theta_bound.clone());
        if settings.contains_key("design") && settings.contains_key("design_id") {
            settings.remove("design_id");
        }
        Self::from_settings(settings)
    }

    pub fn from_settings(settings: BTreeMap<String, String>) -> Result<Self, CliError> {
        let command = match settings.get("command") {
            Some(c) => Command::parse(c).ok_or_else(|| invalid(format!("unknown command '{c}'")))?,
            None => return Err(invalid("no command given (estimate, simulate or diagnose)")),
        };
        let variant = match settings.get("variant") {
            Some(v) => ModelVariant::parse(v).ok_or_else(|| invalid(format!("unknown variant '{v}'")))?,
            None => ModelVariant::Reciprocal,
        };
        let estimators = match settings.get("estimator") {
            Some(s) => {
                let mut out = Vec::new();
                for e in list(s) {
                    let e = Estimator::parse(e).ok_or_else(|| invalid(format!("unknown estimator '{e}'")))?;
                    if !out.contains(&e) {
                        out.push(e);
                    }
                }
                out
            }
            None => Vec::new(),
        };
        let apes = match settings.get("ape") {
            Some(s) => list(s).map(parse_ape).collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let mut fit = FitOptions::default();
        if let Some(t) = number::<f64>(&settings, "tol")? {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("tol must be positive"));
            }
            fit.tol = t;
        }
        if let Some(t) = number::<f64>(&settings, "inner_tol")? {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("inner_tol must be positive"));
            }
            fit.inner_tol = t;
        }
        if let Some(m) = number::<usize>(&settings, "max_iter")? {
            fit.max_iter = m;
        }
        if let Some(d) = number::<f64>(&settings, "diverge_threshold")? {
            if !(d > 0.0) {
                return Err(invalid("diverge_threshold must be positive"));
            }
            fit.diverge_threshold = d;
        }
        if let Some(b) = number::<f64>(&settings, "theta_bound")? {
            if !(b > 0.0) {
                return Err(invalid("theta_bound must be positive"));
            }
            fit.theta_bound = b;
        }
        if let Some(v) = settings.get("trim") {
            fit.trim = parse_bool("trim", v)?;
        }
        let reps = number::<usize>(&settings, "reps")?.unwrap_or(1000);
        if reps == 0 {
            return Err(invalid("reps must be at least 1"));
        }
        let threads = number::<usize>(&settings, "threads")?;
        if threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        let get_path = |k: &str| settings.get(k).map(PathBuf::from);
        Ok(Self {
            command,
            variant,
            estimators,
            edges: get_path("edges"),
            x_cov: get_path("x_cov"),
            z_cov: get_path("z_cov"),
            labels: get_path("labels"),
            apes,
            n: number::<usize>(&settings, "n")?,
            reps,
            out_dir: get_path("out_dir"),
            threads,
            fit,
            settings,
        })
    }
}
