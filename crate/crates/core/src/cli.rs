//! Command-line front end: configuration, sweeps and CSV output.
//!
//! Parameters come from three layers, highest priority first: command-line
//! flags, the `LATCF_SEED` environment variable (seed only), and a flat
//! `key = value` config file. Every layer is merged as text and validated in
//! one pass so all violations are reported together.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::error::{CodecError, RateError};
use crate::lattice::LatticeKind;
use crate::rates::RateParams;
use crate::relay::{simulate_cf, CfConfig, PropagationMode};
use crate::wyner_ziv::{wz_simulate, WzConfig};

pub const SEED_ENV: &str = "LATCF_SEED";
pub const DEFAULT_SEED: u64 = 42;

pub const RATES_HEADER: &str = "param,value,wz_rd,wz_rd_a1,wz_rd_a2,cf_rate,Rprime,D_star";
pub const RD_CURVE_HEADER: &str =
    "P,N1,N2,D,n,k,gamma,trials,seed,wz_rd,wz_rd_a1,wz_rd_a2,rate_bits,wrap_rate,distortion,distortion_no_wrap";
pub const WZ_HEADER: &str =
    "P,N1,N2,D,n,k,gamma,trials,seed,rate_bits,wrap_rate,distortion,distortion_no_wrap,identity_pass_rate";
pub const CF_HEADER: &str = "P1,P2,N2,N3,D,n,k1,k2,kq,B,mode,seed,R_eff,t2_err,wrap_rate,msg_err,power1,power2";

#[derive(Parser, Debug)]
#[command(
    name = "latcf",
    version,
    about = "Nested lattice Wyner-Ziv and compress-and-forward simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Closed-form rates, optionally swept over one parameter.
    Rates(Flags),
    /// Simulated Wyner-Ziv rate and distortion against the closed forms, swept over D.
    RdCurve(Flags),
    /// Wyner-Ziv codec Monte Carlo.
    WzSim(Flags),
    /// Block-Markov compress-and-forward Monte Carlo.
    CfSim(Flags),
}

#[derive(Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<String>,
    /// Monte Carlo trials (wz-sim, rd-curve) or independent runs (cf-sim).
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// `NAME:START:STOP:STEPS`.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long = "P")]
    p: Option<String>,
    #[arg(long = "N1")]
    n1: Option<String>,
    #[arg(long = "N2")]
    n2: Option<String>,
    #[arg(long = "N3")]
    n3: Option<String>,
    #[arg(long = "P1")]
    p1: Option<String>,
    #[arg(long = "P2")]
    p2: Option<String>,
    #[arg(long = "D")]
    d: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Wyner-Ziv nesting factor; derived from gamma when absent.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    k1: Option<String>,
    #[arg(long)]
    k2: Option<String>,
    #[arg(long)]
    kq: Option<String>,
    #[arg(long = "B")]
    b: Option<String>,
    /// chained or genie.
    #[arg(long)]
    mode: Option<String>,
    /// cubic, d4 or e8.
    #[arg(long)]
    lattice: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("trials", &self.trials),
            ("n", &self.n),
            ("sweep", &self.sweep),
            ("P", &self.p),
            ("N1", &self.n1),
            ("N2", &self.n2),
            ("N3", &self.n3),
            ("P1", &self.p1),
            ("P2", &self.p2),
            ("D", &self.d),
            ("gamma", &self.gamma),
            ("k", &self.k),
            ("k1", &self.k1),
            ("k2", &self.k2),
            ("kq", &self.kq),
            ("B", &self.b),
            ("mode", &self.mode),
            ("lattice", &self.lattice),
        ]
    }
}

/// Keys accepted in a config file.
pub const KEYS: &[&str] = &[
    "seed", "workers", "trials", "n", "sweep", "out", "P", "N1", "N2", "N3", "P1", "P2", "D", "gamma", "k", "k1", "k2",
    "kq", "B", "mode", "lattice",
];

const FLOAT_KEYS: &[&str] = &["P", "N1", "N2", "N3", "P1", "P2", "D", "gamma"];
const INT_SWEEP_KEYS: &[&str] = &["k", "k1", "k2", "kq", "B", "n"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Rates,
    RdCurve,
    WzSim,
    CfSim,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rates => "rates",
            Command::RdCurve => "rd-curve",
            Command::WzSim => "wz-sim",
            Command::CfSim => "cf-sim",
        }
    }
}

/// One parameter varied linearly over `steps` points.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + h * i as f64
                }
            })
            .collect()
    }
}

/// Model and design parameters shared by every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub p: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub p1: f64,
    pub p2: f64,
    pub d: f64,
    pub gamma: f64,
    pub k: Option<u64>,
    pub k1: u64,
    pub k2: u64,
    pub kq: u64,
    pub blocks: usize,
    pub n: usize,
    pub mode: PropagationMode,
    pub lattice: LatticeKind,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            p: 1.0,
            n1: 1.0,
            n2: 1.0,
            n3: 1.0,
            p1: 1.0,
            p2: 1.0,
            d: 0.5,
            gamma: 2.0,
            k: None,
            k1: 2,
            k2: 2,
            kq: 2,
            blocks: 50,
            n: 8,
            mode: PropagationMode::Chained,
            lattice: LatticeKind::Cubic,
        }
    }
}

impl Params {
    fn get(&self, key: &str) -> f64 {
        match key {
            "P" => self.p,
            "N1" => self.n1,
            "N2" => self.n2,
            "N3" => self.n3,
            "P1" => self.p1,
            "P2" => self.p2,
            "D" => self.d,
            "gamma" => self.gamma,
            "k" => self.k.map_or(f64::NAN, |k| k as f64),
            "k1" => self.k1 as f64,
            "k2" => self.k2 as f64,
            "kq" => self.kq as f64,
            "B" => self.blocks as f64,
            "n" => self.n as f64,
            _ => f64::NAN,
        }
    }

    fn set(&mut self, key: &str, v: f64) {
        match key {
            "P" => self.p = v,
            "N1" => self.n1 = v,
            "N2" => self.n2 = v,
            "N3" => self.n3 = v,
            "P1" => self.p1 = v,
            "P2" => self.p2 = v,
            "D" => self.d = v,
            "gamma" => self.gamma = v,
            "k" => self.k = Some(v as u64),
            "k1" => self.k1 = v as u64,
            "k2" => self.k2 = v as u64,
            "kq" => self.kq = v as u64,
            "B" => self.blocks = v as usize,
            "n" => self.n = v as usize,
            _ => {}
        }
    }

    fn residual_variance(&self) -> f64 {
        self.n1 + self.p * self.n2 / (self.p + self.n2)
    }

    fn wz_config(&self) -> Result<WzConfig, CodecError> {
        let cfg = WzConfig::new(self.p, self.n1, self.n2, self.d, self.n)?
            .with_margin(self.gamma)?
            .with_lattice(self.lattice);
        Ok(match self.k {
            Some(k) => cfg.with_nesting(k),
            None => cfg,
        })
    }

    fn cf_config(&self, seed: u64) -> CfConfig {
        CfConfig {
            p1: self.p1,
            p2: self.p2,
            n2: self.n2,
            n3: self.n3,
            d: self.d,
            dim: self.n,
            blocks: self.blocks,
            k1: self.k1,
            k2: self.k2,
            kq: self.kq,
            seed,
            mode: self.mode,
            lattice: self.lattice,
        }
    }

    fn rate_params(&self) -> RateParams {
        RateParams {
            p: self.p,
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            p1: self.p1,
            p2: self.p2,
            d: self.d,
        }
    }
}

/// Validated configuration of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub params: Params,
    pub sweep: Option<Sweep>,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// One configuration violation, tied to the key that caused it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", .0.render().to_string().trim_end())]
    Usage(#[from] clap::Error),
    #[error("invalid configuration:\n{}", join_issues(.0))]
    Config(Vec<ConfigIssue>),
    #[error("{0}")]
    Codec(#[from] CodecError),
    #[error("{0}")]
    Rate(#[from] RateError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn join_issues(v: &[ConfigIssue]) -> String {
    v.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    /// 2 for configuration problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => 0,
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}

/// Parse a flat `key = value` file; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, Vec<ConfigIssue>> {
    let mut map = BTreeMap::new();
    let mut issues = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            issues.push(ConfigIssue {
                key: format!("line {}", lineno + 1),
                message: format!("expected `key = value`, got '{line}'"),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            issues.push(ConfigIssue {
                key: k.to_string(),
                message: "unknown key".into(),
            });
            continue;
        }
        map.insert(k.to_string(), v.to_string());
    }
    if issues.is_empty() {
        Ok(map)
    } else {
        Err(issues)
    }
}

/// Parse command-line arguments (including the program name) into a
/// validated configuration. `env_seed` is the value of [`SEED_ENV`].
pub fn parse_config<I, S>(args: I, env_seed: Option<String>) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (command, flags) = match &cli.command {
        Cmd::Rates(f) => (Command::Rates, f),
        Cmd::RdCurve(f) => (Command::RdCurve, f),
        Cmd::WzSim(f) => (Command::WzSim, f),
        Cmd::CfSim(f) => (Command::CfSim, f),
    };
    let mut raw = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config_text(&text).map_err(CliError::Config)?
        }
        None => BTreeMap::new(),
    };
    if let Some(s) = env_seed {
        raw.insert("seed".into(), s);
    }
    for (k, v) in flags.pairs() {
        if let Some(v) = v {
            raw.insert(k.to_string(), v.clone());
        }
    }
    if let Some(out) = &flags.out {
        raw.insert("out".into(), out.display().to_string());
    }
    build_config(command, &raw).map_err(CliError::Config)
}

fn parse_num<T: std::str::FromStr>(
    raw: &BTreeMap<String, String>,
    key: &str,
    issues: &mut Vec<ConfigIssue>,
) -> Option<T> {
    let v = raw.get(key)?;
    match v.parse::<T>() {
        Ok(x) => Some(x),
        Err(_) => {
            issues.push(ConfigIssue {
                key: key.into(),
                message: format!("cannot parse '{v}' as {}", std::any::type_name::<T>()),
            });
            None
        }
    }
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("expected NAME:START:STOP:STEPS, got '{s}'"));
    }
    let name = parts[0].trim().to_string();
    if !FLOAT_KEYS.contains(&name.as_str()) && !INT_SWEEP_KEYS.contains(&name.as_str()) {
        return Err(format!("cannot sweep '{name}'"));
    }
    let start: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad start '{}'", parts[1]))?;
    let stop: f64 = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad stop '{}'", parts[2]))?;
    let steps: usize = parts[3]
        .trim()
        .parse()
        .map_err(|_| format!("bad steps '{}'", parts[3]))?;
    if !start.is_finite() || !stop.is_finite() {
        return Err("sweep bounds must be finite".into());
    }
    if steps == 0 {
        return Err("steps must be at least 1".into());
    }
    let sw = Sweep {
        name,
        start,
        stop,
        steps,
    };
    if INT_SWEEP_KEYS.contains(&sw.name.as_str()) && sw.values().iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return Err(format!(
            "sweep over integer parameter '{}' must hit non-negative integers",
            sw.name
        ));
    }
    Ok(sw)
}

fn check_params(cmd: Command, p: &Params, issues: &mut Vec<ConfigIssue>) {
    let mut bad = |key: &str, message: String| {
        issues.push(ConfigIssue {
            key: key.into(),
            message,
        })
    };
    // The closed forms accept zero variances; the simulators need them positive.
    let strict = cmd != Command::Rates;
    let used: &[&str] = match cmd {
        Command::Rates => &["P", "N1", "N2", "N3", "P1", "P2"],
        Command::RdCurve | Command::WzSim => &["P", "N1", "N2"],
        Command::CfSim => &["P1", "P2", "N2", "N3"],
    };
    for &key in used {
        let v = p.get(key);
        if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
            let bound = if strict { "> 0" } else { ">= 0" };
            bad(key, format!("must be finite and {bound}, got {v}"));
        }
    }
    if !(p.d > 0.0 && p.d.is_finite()) {
        bad("D", format!("must be finite and > 0, got {}", p.d));
    }
    if p.n == 0 {
        bad("n", "must be at least 1".into());
    }
    match cmd {
        Command::Rates => {}
        Command::RdCurve | Command::WzSim => {
            if !(p.gamma >= 1.0 && p.gamma.is_finite()) {
                bad("gamma", format!("must be >= 1, got {}", p.gamma));
            }
            if let Some(k) = p.k {
                if k < 2 {
                    bad("k", format!("must be at least 2, got {k}"));
                }
            }
            let resid = p.residual_variance();
            if cmd == Command::WzSim && p.d > resid {
                bad("D", format!("must not exceed N1 + P*N2/(P+N2) = {resid}, got {}", p.d));
            }
        }
        Command::CfSim => {
            for (key, k) in [("k1", p.k1), ("k2", p.k2), ("kq", p.kq)] {
                if k < 2 {
                    bad(key, format!("must be at least 2, got {k}"));
                }
            }
            if p.kq > p.k2 {
                bad(
                    "kq",
                    format!(
                        "kq = {} > k2 = {}: compression rate log2(kq) must not exceed relay rate log2(k2) (requires R_hat <= R')",
                        p.kq, p.k2
                    ),
                );
            }
            if p.blocks < 2 {
                bad("B", format!("must be at least 2, got {}", p.blocks));
            }
        }
    }
    let lattice_dim = match p.lattice {
        LatticeKind::Cubic => None,
        LatticeKind::D4 => Some(4),
        LatticeKind::E8 => Some(8),
    };
    if let Some(req) = lattice_dim {
        if cmd != Command::Rates && p.n != req {
            bad(
                "lattice",
                format!("{} requires n = {req}, got {}", p.lattice.name(), p.n),
            );
        }
    }
}

fn build_config(command: Command, raw: &BTreeMap<String, String>) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let mut issues = Vec::new();
    let mut params = Params::default();
    for &key in FLOAT_KEYS {
        if let Some(v) = parse_num::<f64>(raw, key, &mut issues) {
            params.set(key, v);
        }
    }
    if let Some(v) = parse_num::<u64>(raw, "k", &mut issues) {
        params.k = Some(v);
    }
    for key in ["k1", "k2", "kq"] {
        if let Some(v) = parse_num::<u64>(raw, key, &mut issues) {
            params.set(key, v as f64);
        }
    }
    if let Some(v) = parse_num::<usize>(raw, "B", &mut issues) {
        params.blocks = v;
    }
    if let Some(v) = parse_num::<usize>(raw, "n", &mut issues) {
        params.n = v;
    }
    if let Some(m) = raw.get("mode") {
        match m.parse() {
            Ok(mode) => params.mode = mode,
            Err(e) => issues.push(ConfigIssue {
                key: "mode".into(),
                message: e,
            }),
        }
    }
    if let Some(l) = raw.get("lattice") {
        match l.parse() {
            Ok(kind) => params.lattice = kind,
            Err(e) => issues.push(ConfigIssue {
                key: "lattice".into(),
                message: e,
            }),
        }
    }
    let seed = parse_num::<u64>(raw, "seed", &mut issues).unwrap_or(DEFAULT_SEED);
    let default_trials = match command {
        Command::CfSim => 20,
        _ => 10_000,
    };
    let trials = parse_num::<u64>(raw, "trials", &mut issues).unwrap_or(default_trials);
    if trials == 0 {
        issues.push(ConfigIssue {
            key: "trials".into(),
            message: "must be at least 1".into(),
        });
    }
    let workers = parse_num::<usize>(raw, "workers", &mut issues);
    if workers == Some(0) {
        issues.push(ConfigIssue {
            key: "workers".into(),
            message: "must be at least 1".into(),
        });
    }
    let sweep = match raw.get("sweep") {
        Some(s) => match parse_sweep(s) {
            Ok(sw) => Some(sw),
            Err(message) => {
                issues.push(ConfigIssue {
                    key: "sweep".into(),
                    message,
                });
                None
            }
        },
        None => None,
    };
    if command == Command::RdCurve {
        if let Some(sw) = &sweep {
            if sw.name != "D" {
                issues.push(ConfigIssue {
                    key: "sweep".into(),
                    message: format!("rd-curve sweeps D only, got '{}'", sw.name),
                });
            }
        }
    }

    let mut point_issues = Vec::new();
    check_params(command, &params, &mut point_issues);
    if point_issues.is_empty() {
        if let Some(sw) = &sweep {
            for v in sw.values() {
                let mut q = params.clone();
                q.set(&sw.name, v);
                let mut sub = Vec::new();
                check_params(command, &q, &mut sub);
                if let Some(first) = sub.into_iter().next() {
                    point_issues.push(ConfigIssue {
                        key: "sweep".into(),
                        message: format!("at {} = {v}: {first}", sw.name),
                    });
                    break;
                }
            }
        }
    }
    issues.extend(point_issues);

    if !issues.is_empty() {
        return Err(issues);
    }
    Ok(ExperimentConfig {
        command,
        params,
        sweep,
        trials,
        seed,
        out: raw.get("out").map(PathBuf::from),
        workers,
    })
}

/// Rendered experiment: CSV text and human-readable summary lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub csv: String,
    pub summary: Vec<String>,
}

fn points(cfg: &ExperimentConfig) -> Vec<(Option<(String, f64)>, Params)> {
    let sweep = match (&cfg.sweep, cfg.command) {
        (Some(sw), _) => Some(sw.clone()),
        (None, Command::RdCurve) => {
            let r = cfg.params.residual_variance();
            Some(Sweep {
                name: "D".into(),
                start: 0.05 * r,
                stop: 0.95 * r,
                steps: 10,
            })
        }
        (None, _) => None,
    };
    match sweep {
        Some(sw) => sw
            .values()
            .into_iter()
            .map(|v| {
                let mut p = cfg.params.clone();
                p.set(&sw.name, v);
                (Some((sw.name.clone(), v)), p)
            })
            .collect(),
        None => vec![(None, cfg.params.clone())],
    }
}

// Closed forms one by one; an expression that is unbounded at this point
// (e.g. D* with P2 = 0) leaves its field empty.
fn rate_fields(r: &RateParams) -> Vec<String> {
    use crate::rates::*;
    let cell = |v: Result<f64, RateError>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        cell(wz_rd(r.p, r.n1, r.n2, r.d)),
        cell(wz_rd_alpha1_fixed(r.p, r.n1, r.n2, r.d)),
        cell(wz_rd_alpha2_fixed(r.n1, r.n2, r.d)),
        cell(cf_rate(r.p1, r.p2, r.n2, r.n3)),
        cell(relay_rate_rprime(r.p1, r.p2, r.n3)),
        cell(compression_d_star(r.p1, r.p2, r.n2, r.n3)),
    ]
}

/// Compute the CSV for a validated configuration. Sweep points run in
/// order; parallelism is inside each point, so rows never reorder.
pub fn render(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let mut csv = String::new();
    let mut summary = Vec::new();
    let header = match cfg.command {
        Command::Rates => RATES_HEADER,
        Command::RdCurve => RD_CURVE_HEADER,
        Command::WzSim => WZ_HEADER,
        Command::CfSim => CF_HEADER,
    };
    csv.push_str(header);
    csv.push('\n');
    for (label, p) in points(cfg) {
        match cfg.command {
            Command::Rates => {
                let (name, value) = label.unwrap_or(("D".into(), p.d));
                let _ = writeln!(csv, "{name},{value},{}", rate_fields(&p.rate_params()).join(","));
            }
            Command::RdCurve => {
                let wz = p.wz_config()?;
                let rep = wz_simulate::<f64>(&wz, cfg.trials, cfg.seed, cfg.workers)?;
                let wz_rd = crate::rates::wz_rd(p.p, p.n1, p.n2, p.d)?;
                let wz_rd_a1 = crate::rates::wz_rd_alpha1_fixed(p.p, p.n1, p.n2, p.d)?;
                let wz_rd_a2 = crate::rates::wz_rd_alpha2_fixed(p.n1, p.n2, p.d)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    p.p,
                    p.n1,
                    p.n2,
                    p.d,
                    p.n,
                    wz.nesting_factor(),
                    p.gamma,
                    cfg.trials,
                    cfg.seed,
                    wz_rd,
                    wz_rd_a1,
                    wz_rd_a2,
                    rep.rate_bits,
                    rep.wrap_rate,
                    rep.distortion,
                    rep.distortion_no_wrap
                );
                summary.push(format!(
                    "D={} rate={:.4} (ideal {:.4}) distortion={:.5} wraps={}",
                    p.d, rep.rate_bits, wz_rd, rep.distortion, rep.wraps
                ));
            }
            Command::WzSim => {
                let wz = p.wz_config()?;
                let rep = wz_simulate::<f64>(&wz, cfg.trials, cfg.seed, cfg.workers)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    p.p,
                    p.n1,
                    p.n2,
                    p.d,
                    p.n,
                    wz.nesting_factor(),
                    p.gamma,
                    cfg.trials,
                    cfg.seed,
                    rep.rate_bits,
                    rep.wrap_rate,
                    rep.distortion,
                    rep.distortion_no_wrap,
                    rep.identity_pass_rate
                );
                summary.push(format!(
                    "k={} rate={:.4} bits (ideal {:.4}) wrap_rate={} distortion={:.5} identity_pass={}",
                    wz.nesting_factor(),
                    rep.rate_bits,
                    rep.ideal_rate,
                    rep.wrap_rate,
                    rep.distortion,
                    rep.identity_pass_rate
                ));
            }
            Command::CfSim => {
                let cf = p.cf_config(cfg.seed);
                let rep = simulate_cf::<f64>(&cf, cfg.trials, cfg.workers)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    p.p1,
                    p.p2,
                    p.n2,
                    p.n3,
                    p.d,
                    p.n,
                    p.k1,
                    p.k2,
                    p.kq,
                    p.blocks,
                    p.mode.name(),
                    cfg.seed,
                    rep.r_eff,
                    rep.t2_err,
                    rep.wrap_rate,
                    rep.msg_err,
                    rep.power1,
                    rep.power2
                );
                let mut line = format!(
                    "R_eff={:.4} msg_err={} t2_err={} wrap_rate={} hash={}",
                    rep.r_eff, rep.msg_err, rep.t2_err, rep.wrap_rate, rep.hash
                );
                if rep.validation.ideal_rate_infeasible {
                    line.push_str(" (warning: ideal compression rate exceeds relay-link rate)");
                }
                summary.push(line);
            }
        }
    }
    Ok(Output { csv, summary })
}

/// Render and, when `out` is set, write the CSV file.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let out = render(cfg)?;
    if let Some(path) = &cfg.out {
        std::fs::write(path, &out.csv).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(out)
}

/// Full CLI entry point; returns the process exit code.
pub fn main_with_args<I, S>(args: I, env_seed: Option<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let result = parse_config(args, env_seed).and_then(|cfg| run_experiment(&cfg).map(|o| (cfg, o)));
    match result {
        Ok((cfg, out)) => {
            let wrote = match &cfg.out {
                Some(path) => {
                    let mut r = writeln!(stdout, "{} -> {}", cfg.command.name(), path.display());
                    for line in &out.summary {
                        r = r.and(writeln!(stdout, "{line}"));
                    }
                    r
                }
                None => {
                    for line in &out.summary {
                        let _ = writeln!(stderr, "{line}");
                    }
                    stdout.write_all(out.csv.as_bytes())
                }
            };
            if wrote.is_err() {
                return 1;
            }
            0
        }
        Err(CliError::Usage(e)) if !e.use_stderr() => {
            let _ = write!(stdout, "{}", e.render());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
