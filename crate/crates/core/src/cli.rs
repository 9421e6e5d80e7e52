//! Command-line front end: argument and config handling, table assembly
//! and CSV output.
//!
//! Every option may also come from a `--config` file of `key=value` lines
//! whose keys are the long flag names; flags given on the command line win.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::approx::{mixture_exact_ruin, pkdv_approx, psi_4me, relative_error, renyi_approx, two_point_pade};
use crate::bounds::{panjer_bounds_with, BoundTarget};
use crate::claims::ClaimDistribution;
use crate::coefficients::{adjustment_coefficient, renyi_coefficient};
use crate::error::{Result, RuinError};
use crate::exact::{decompose_ruin, exact_ruin_with, Inversion};
use crate::model::{ModelSpec, PerturbedModel};
use crate::montecarlo::{simulate_ruin, SimConfig};

pub const DEFAULT_PRECISION: usize = 6;
pub const DEFAULT_LATTICE: f64 = 0.1;
pub const DEFAULT_METHODS: &str = "exact,dg,4me,ren2,pkdv3,pkdv4,2pp,lundberg";
pub const DEFAULT_GRID: &str = "0.1,0.2,0.5,1,1.5,2,3,5,10,25,50";

/// Missing-value marker in CSV output.
pub const NA: &str = "NA";

#[derive(Debug, Parser)]
#[command(name = "ruinkit", version, about = "Ruin probabilities for the perturbed compound-Poisson risk model")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Model spec, e.g. "lambda=1,theta=0.01,sigma=1,claims=exp:rate=1"
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub lambda: Option<String>,
    #[arg(long, global = true, conflicts_with = "premium_rate")]
    pub theta: Option<String>,
    #[arg(long = "premium-rate", global = true)]
    pub premium_rate: Option<String>,
    #[arg(long, global = true)]
    pub sigma: Option<String>,
    /// Claims spec: exp:rate=1, gamma:shape=2,rate=2 or mexp:w=..;b=..
    #[arg(long, global = true)]
    pub claims: Option<String>,
    /// Write CSV here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Decimal places in CSV output
    #[arg(long, global = true)]
    pub precision: Option<String>,
    /// File of key=value defaults
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Ruin probabilities for several methods side by side
    Table(TableArgs),
    /// Relative errors |1 - approx/exact| per method
    Errors(TableArgs),
    /// Ruin probability by Laplace inversion
    Exact(ExactArgs),
    /// One closed-form approximation
    Approx(ApproxArgs),
    /// Lower and upper lattice bounds
    Bounds(BoundsArgs),
    /// Adjustment and Renyi coefficients
    Coef,
    /// Split into ruin by oscillation and ruin by claim
    Decompose(DecomposeArgs),
    /// Monte Carlo finite-horizon ruin frequency
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long)]
    pub u: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub u: Option<String>,
    /// talbot or euler
    #[arg(long)]
    pub inversion: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ApproxArgs {
    /// 4me, ren2, pkdv3, pkdv4, pkdv5, 2pp, lundberg or mix
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub u: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long)]
    pub u: Option<String>,
    /// ruin (default) or ladder
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub umax: Option<String>,
    #[arg(long)]
    pub step: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long)]
    pub paths: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Table,
    Errors,
    Exact,
    Approx,
    Bounds,
    Coef,
    Decompose,
    Simulate,
}

/// A column source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Dg,
    DgLadder,
    FourMe,
    Ren2,
    Pkdv3,
    Pkdv4,
    Pkdv5,
    TwoPointPade,
    Lundberg,
    Mixture,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Dg => "dg",
            Method::DgLadder => "dg-ladder",
            Method::FourMe => "4me",
            Method::Ren2 => "ren2",
            Method::Pkdv3 => "pkdv3",
            Method::Pkdv4 => "pkdv4",
            Method::Pkdv5 => "pkdv5",
            Method::TwoPointPade => "2pp",
            Method::Lundberg => "lundberg",
            Method::Mixture => "mix",
        }
    }

    pub fn columns(self) -> Vec<String> {
        match self {
            Method::Dg => vec!["dg_lower".into(), "dg_upper".into()],
            Method::DgLadder => vec!["dg_ladder_lower".into(), "dg_ladder_upper".into()],
            other => vec![other.name().to_string()],
        }
    }
}

impl FromStr for Method {
    type Err = RuinError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Method::Exact,
            "dg" => Method::Dg,
            "dg-ladder" => Method::DgLadder,
            "4me" => Method::FourMe,
            "ren2" => Method::Ren2,
            "pkdv3" => Method::Pkdv3,
            "pkdv4" => Method::Pkdv4,
            "pkdv5" => Method::Pkdv5,
            "2pp" => Method::TwoPointPade,
            "lundberg" => Method::Lundberg,
            "mix" => Method::Mixture,
            other => return Err(RuinError::UnknownMethod(other.to_string())),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a command needs, after merging the config file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub model: PerturbedModel,
    pub methods: Vec<Method>,
    pub u_grid: Vec<f64>,
    pub lattice: f64,
    pub out: Option<PathBuf>,
    pub precision: usize,
    pub inversion: Inversion,
    pub bound_target: BoundTarget,
    pub umax: f64,
    pub step: f64,
    pub horizon: Option<f64>,
    pub paths: u64,
    pub seed: u64,
}

const CONFIG_KEYS: &[&str] = &[
    "model",
    "lambda",
    "theta",
    "premium-rate",
    "sigma",
    "claims",
    "out",
    "precision",
    "methods",
    "method",
    "lattice",
    "u",
    "inversion",
    "target",
    "umax",
    "step",
    "horizon",
    "paths",
    "seed",
];

/// Reads `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| RuinError::Parse(format!("config line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(RuinError::Parse(format!("config line {}: unknown key `{key}`", lineno + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn number<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| RuinError::Parse(format!("--{key}: cannot parse `{raw}`")))
}

/// Parses a strictly increasing list of nonnegative numbers.
pub fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    let grid = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| number::<f64>("u", s))
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        return Err(RuinError::Parse("--u: empty grid".into()));
    }
    if grid.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
        return Err(RuinError::Parse("--u: values must be finite and nonnegative".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(RuinError::Parse("--u: grid must be strictly increasing".into()));
    }
    Ok(grid)
}

pub fn parse_methods(raw: &str) -> Result<Vec<Method>> {
    let methods = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Method>>>()?;
    if methods.is_empty() {
        return Err(RuinError::Parse("--methods: empty list".into()));
    }
    Ok(methods)
}

impl RunConfig {
    /// Merges parsed flags over the config file named by `--config`, if any.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let mut settings = match &cli.global.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| RuinError::Parse(format!("cannot read config {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut set = |key: &str, value: &Option<String>| {
            if let Some(v) = value {
                settings.insert(key.to_string(), v.clone());
            }
        };
        let g = &cli.global;
        set("model", &g.model);
        set("lambda", &g.lambda);
        set("theta", &g.theta);
        set("premium-rate", &g.premium_rate);
        set("sigma", &g.sigma);
        set("claims", &g.claims);
        set("out", &g.out);
        set("precision", &g.precision);
        let kind = match &cli.command {
            Command::Table(a) | Command::Errors(a) => {
                set("methods", &a.methods);
                set("lattice", &a.lattice);
                set("u", &a.u);
                if matches!(cli.command, Command::Table(_)) {
                    CommandKind::Table
                } else {
                    CommandKind::Errors
                }
            }
            Command::Exact(a) => {
                set("u", &a.u);
                set("inversion", &a.inversion);
                CommandKind::Exact
            }
            Command::Approx(a) => {
                set("method", &a.method);
                set("u", &a.u);
                CommandKind::Approx
            }
            Command::Bounds(a) => {
                set("lattice", &a.lattice);
                set("u", &a.u);
                set("target", &a.target);
                CommandKind::Bounds
            }
            Command::Coef => CommandKind::Coef,
            Command::Decompose(a) => {
                set("umax", &a.umax);
                set("step", &a.step);
                CommandKind::Decompose
            }
            Command::Simulate(a) => {
                set("u", &a.u);
                set("horizon", &a.horizon);
                set("paths", &a.paths);
                set("seed", &a.seed);
                CommandKind::Simulate
            }
        };
        Self::from_settings(kind, &settings)
    }

    pub fn from_settings(command: CommandKind, s: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| s.get(k).map(String::as_str);
        let flag_model = ModelSpec {
            lambda: get("lambda").map(|v| number("lambda", v)).transpose()?,
            theta: get("theta").map(|v| number("theta", v)).transpose()?,
            premium: get("premium-rate").map(|v| number("premium-rate", v)).transpose()?,
            sigma: get("sigma").map(|v| number("sigma", v)).transpose()?,
            claims: get("claims").map(str::to_string),
        };
        let spec = match get("model") {
            Some(m) => {
                let parsed = ModelSpec::parse(m)?;
                // A loading flag replaces whichever loading the spec carried.
                let parsed = if flag_model.theta.is_some() || flag_model.premium.is_some() {
                    ModelSpec { theta: None, premium: None, ..parsed }
                } else {
                    parsed
                };
                flag_model.or(parsed)
            }
            None => flag_model,
        };
        let model = spec.build()?;

        let default_methods = if command == CommandKind::Approx { "4me" } else { DEFAULT_METHODS };
        let methods = match command {
            CommandKind::Approx => parse_methods(get("method").unwrap_or(default_methods))?,
            _ => parse_methods(get("methods").unwrap_or(default_methods))?,
        };
        if command == CommandKind::Approx && methods.len() != 1 {
            return Err(RuinError::Parse("--method takes a single method".into()));
        }
        let default_grid = match command {
            CommandKind::Simulate => "1",
            _ => DEFAULT_GRID,
        };
        let u_grid = parse_grid(get("u").unwrap_or(default_grid))?;
        let lattice: f64 = get("lattice").map(|v| number("lattice", v)).transpose()?.unwrap_or(DEFAULT_LATTICE);
        if !(lattice.is_finite() && lattice > 0.0) {
            return Err(RuinError::Parse("--lattice must be positive".into()));
        }
        let precision = get("precision").map(|v| number("precision", v)).transpose()?.unwrap_or(DEFAULT_PRECISION);
        if precision > 17 {
            return Err(RuinError::Parse("--precision must be at most 17".into()));
        }
        let inversion = match get("inversion").unwrap_or("talbot") {
            "talbot" => Inversion::Talbot,
            "euler" => Inversion::Euler,
            other => return Err(RuinError::Parse(format!("--inversion: unknown `{other}`"))),
        };
        let bound_target = match get("target").unwrap_or("ruin") {
            "ruin" => BoundTarget::Ruin,
            "ladder" => BoundTarget::Ladder,
            other => return Err(RuinError::Parse(format!("--target: unknown `{other}`"))),
        };
        Ok(RunConfig {
            command,
            model,
            methods,
            u_grid,
            lattice,
            out: get("out").map(PathBuf::from),
            precision,
            inversion,
            bound_target,
            umax: get("umax").map(|v| number("umax", v)).transpose()?.unwrap_or(20.0),
            step: get("step").map(|v| number("step", v)).transpose()?.unwrap_or(0.01),
            horizon: get("horizon").map(|v| number("horizon", v)).transpose()?,
            paths: get("paths").map(|v| number("paths", v)).transpose()?.unwrap_or(100_000),
            seed: get("seed").map(|v| number("seed", v)).transpose()?.unwrap_or(42),
        })
    }
}

/// A headered numeric table, one row per `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<Option<f64>>)>,
    pub precision: usize,
    /// Problems that turned cells into `NA`.
    pub warnings: Vec<String>,
}

fn format_value(v: f64, precision: usize) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.precision$}")
}

impl TableReport {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.1[idx]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["u".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (u, cells) in &self.rows {
            let mut record = vec![format_value(*u, self.precision)];
            record.extend(cells.iter().map(|c| match c {
                Some(v) => format_value(*v, self.precision),
                None => NA.to_string(),
            }));
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    /// Reads a table written by [`TableReport::to_csv`]. The precision is
    /// taken from the first numeric cell.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| RuinError::Parse(e.to_string()))?.clone();
        if header.get(0) != Some("u") {
            return Err(RuinError::Parse("first column must be `u`".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut precision = None;
        for record in reader.records() {
            let record = record.map_err(|e| RuinError::Parse(e.to_string()))?;
            let mut cells = record.iter();
            let u_raw = cells.next().ok_or_else(|| RuinError::Parse("empty row".into()))?;
            precision.get_or_insert_with(|| u_raw.split_once('.').map_or(0, |(_, f)| f.len()));
            let u = number("u", u_raw)?;
            let values = cells
                .map(|c| if c == NA { Ok(None) } else { number::<f64>("cell", c).map(Some) })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != columns.len() {
                return Err(RuinError::Parse("ragged row".into()));
            }
            rows.push((u, values));
        }
        Ok(TableReport { columns, rows, precision: precision.unwrap_or(DEFAULT_PRECISION), warnings: Vec::new() })
    }
}

/// Values of one method on the grid, one vector per output column.
fn method_columns(cfg: &RunConfig, method: Method) -> Vec<Vec<Result<f64>>> {
    let model = &cfg.model;
    let grid = &cfg.u_grid;
    let each = |f: &(dyn Fn(f64) -> Result<f64> + Sync)| -> Vec<Vec<Result<f64>>> {
        vec![grid.par_iter().map(|&u| f(u)).collect()]
    };
    match method {
        Method::Exact => each(&|u| exact_ruin_with(model, u, cfg.inversion)),
        Method::Dg | Method::DgLadder => {
            let target = if method == Method::Dg { BoundTarget::Ruin } else { BoundTarget::Ladder };
            match panjer_bounds_with(model, cfg.lattice, grid, target, None) {
                Ok(b) => vec![b.lower.values().map(Ok).collect(), b.upper.values().map(Ok).collect()],
                Err(e) => vec![vec![Err(e.clone()); grid.len()], vec![Err(e); grid.len()]],
            }
        }
        Method::FourMe => each(&|u| psi_4me(model, u)),
        Method::Ren2 => each(&|u| Ok(renyi_approx(model, u))),
        Method::Pkdv3 => each(&|u| pkdv_approx(model, 3, u)),
        Method::Pkdv4 => each(&|u| pkdv_approx(model, 4, u)),
        Method::Pkdv5 => each(&|u| pkdv_approx(model, 5, u)),
        Method::TwoPointPade => each(&|u| two_point_pade(model, u)),
        Method::Lundberg => match adjustment_coefficient(model) {
            Ok(a) => vec![grid.iter().map(|&u| Ok((-a.r * u).exp())).collect()],
            Err(e) => vec![vec![Err(e); grid.len()]],
        },
        Method::Mixture => each(&|u| mixture_exact_ruin(model, u)),
    }
}

fn collect_table(cfg: &RunConfig, named: Vec<(String, Vec<Result<f64>>)>) -> TableReport {
    let mut warnings = Vec::new();
    let mut columns = Vec::new();
    let mut data: Vec<Vec<Option<f64>>> = Vec::new();
    for (name, values) in named {
        let mut first_error = None;
        let cells = values
            .into_iter()
            .map(|v| match v {
                Ok(x) if x.is_finite() => Some(x),
                Ok(x) => {
                    first_error.get_or_insert_with(|| format!("non-finite value {x}"));
                    None
                }
                Err(e) => {
                    first_error.get_or_insert_with(|| e.to_string());
                    None
                }
            })
            .collect();
        if let Some(e) = first_error {
            warnings.push(format!("{name}: {e}"));
        }
        columns.push(name);
        data.push(cells);
    }
    let rows = cfg
        .u_grid
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, data.iter().map(|c| c[i]).collect()))
        .collect();
    TableReport { columns, rows, precision: cfg.precision, warnings }
}

/// One column (two for lattice bounds) per requested method.
pub fn run_table(cfg: &RunConfig) -> TableReport {
    let named: Vec<(String, Vec<Result<f64>>)> = cfg
        .methods
        .par_iter()
        .map(|&m| m.columns().into_iter().zip(method_columns(cfg, m)).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let mut report = collect_table(cfg, named);
    if cfg.methods.contains(&Method::Lundberg) {
        if let Ok(a) = adjustment_coefficient(&cfg.model) {
            report.warnings.push(format!(
                "note: lundberg uses R = {:.7e}, the root of the adjustment equation in (0, {})",
                a.r,
                cfg.model.claims().mgf_sup()
            ));
        }
    }
    report
}

/// Relative error of every requested column against the inversion value.
pub fn run_errors(cfg: &RunConfig) -> TableReport {
    let exact: Vec<Result<f64>> = cfg.u_grid.par_iter().map(|&u| exact_ruin_with(&cfg.model, u, cfg.inversion)).collect();
    let named = cfg
        .methods
        .par_iter()
        .map(|&m| {
            m.columns()
                .into_iter()
                .zip(method_columns(cfg, m))
                .map(|(name, values)| {
                    let eps = values
                        .into_iter()
                        .zip(&exact)
                        .map(|(a, e)| relative_error(a?, e.clone()?))
                        .collect();
                    (format!("eps_{name}"), eps)
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    collect_table(cfg, named)
}

fn single_row(header: &[&str], values: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    w.write_record(values).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Output of a command: CSV text plus notes for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub csv: String,
    pub notes: Vec<String>,
}

/// Runs a command. Table-like commands degrade failing cells to `NA`;
/// single-result commands propagate numerical errors.
pub fn execute(cfg: &RunConfig) -> Result<CommandOutput> {
    let p = cfg.precision;
    let table = |report: TableReport| CommandOutput { csv: report.to_csv(), notes: report.warnings };
    match cfg.command {
        CommandKind::Table => Ok(table(run_table(cfg))),
        CommandKind::Errors => Ok(table(run_errors(cfg))),
        CommandKind::Exact => {
            let values = cfg
                .u_grid
                .par_iter()
                .map(|&u| exact_ruin_with(&cfg.model, u, cfg.inversion))
                .collect::<Result<Vec<f64>>>()?;
            let report = TableReport {
                columns: vec!["psi".into()],
                rows: cfg.u_grid.iter().zip(values).map(|(&u, v)| (u, vec![Some(v)])).collect(),
                precision: p,
                warnings: Vec::new(),
            };
            Ok(table(report))
        }
        CommandKind::Approx => {
            let mut report = run_table(cfg);
            report.columns = vec!["value".into()];
            Ok(table(report))
        }
        CommandKind::Bounds => {
            let b = panjer_bounds_with(&cfg.model, cfg.lattice, &cfg.u_grid, cfg.bound_target, None)?;
            let rows = b
                .lower
                .points()
                .iter()
                .zip(b.upper.points())
                .map(|(l, u)| (l.0, vec![Some(l.1), Some(u.1), Some(u.1 - l.1)]))
                .collect();
            let mut notes = Vec::new();
            if b.mass_deficit > 1e-6 {
                notes.push(format!("warning: truncated lattice leaves mass {:.3e} unaccounted", b.mass_deficit));
            }
            let report = TableReport {
                columns: vec!["lower".into(), "upper".into(), "width".into()],
                rows,
                precision: p,
                warnings: notes,
            };
            Ok(table(report))
        }
        CommandKind::Coef => {
            let a = adjustment_coefficient(&cfg.model)?;
            let r0 = renyi_coefficient(&cfg.model);
            let csv = single_row(
                &["R", "R0", "bracket_lo", "bracket_hi", "residual", "iterations"],
                &[
                    format!("{:.*e}", p, a.r),
                    format!("{:.*e}", p, r0),
                    format!("{:.*e}", p, a.bracket.0),
                    format!("{:.*e}", p, a.bracket.1),
                    format!("{:.*e}", p, a.residual),
                    a.iterations.to_string(),
                ],
            );
            Ok(CommandOutput { csv, notes: Vec::new() })
        }
        CommandKind::Decompose => {
            let d = decompose_ruin(&cfg.model, cfg.umax, cfg.step)?;
            let rows = d
                .psi1
                .points()
                .iter()
                .zip(d.psi2.points())
                .map(|(a, b)| (a.0, vec![Some(a.1), Some(b.1), Some(a.1 + b.1)]))
                .collect();
            let report = TableReport {
                columns: vec!["psi1".into(), "psi2".into(), "sum".into()],
                rows,
                precision: p,
                warnings: Vec::new(),
            };
            Ok(table(report))
        }
        CommandKind::Simulate => {
            let u = cfg.u_grid[0];
            let sim = SimConfig::new(cfg.model.clone(), u, cfg.horizon, cfg.paths, cfg.seed)?;
            let est = simulate_ruin(&sim);
            let csv = single_row(
                &["ruin_freq", "std_err", "by_claim", "by_oscillation"],
                &[
                    format_value(est.ruin_freq, p),
                    format_value(est.std_err, p),
                    est.n_ruined_by_claim.to_string(),
                    est.n_ruined_by_oscillation.to_string(),
                ],
            );
            let note = format!(
                "note: finite horizon T = {} with {} paths (seed {}); the estimate is biased low for ultimate ruin",
                est.horizon, est.n_paths, est.seed
            );
            Ok(CommandOutput { csv, notes: vec![note] })
        }
    }
}

/// Exit code for an error: 1 for bad input, 2 for numerical failure.
pub fn exit_code(err: &RuinError) -> i32 {
    match err {
        RuinError::Parse(_)
        | RuinError::InvalidParameter(_)
        | RuinError::UnknownMethod(_)
        | RuinError::UnsupportedOrder(_)
        | RuinError::NetProfit { .. }
        | RuinError::NoDiffusion(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// the CSV to `--out` or `stdout`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let cfg = match RunConfig::from_cli(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    match execute(&cfg) {
        Ok(out) => {
            for note in &out.notes {
                let _ = writeln!(stderr, "{note}");
            }
            let written = match &cfg.out {
                Some(path) => fs::write(path, &out.csv).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(out.csv.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    1
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> Result<RunConfig> {
        let mut full = vec!["ruinkit"];
        full.extend_from_slice(args);
        RunConfig::from_cli(&Cli::try_parse_from(full).unwrap())
    }

    const EXP: &str = "lambda=1,theta=0.01,sigma=1,claims=exp:rate=1";

    #[test]
    fn grids_and_methods() {
        assert_eq!(parse_grid("0.1, 1,2").unwrap(), vec![0.1, 1.0, 2.0]);
        assert!(parse_grid("1,1").is_err());
        assert!(parse_grid("2,1").is_err());
        assert!(parse_grid("-1").is_err());
        assert_eq!(parse_methods("exact,2pp").unwrap(), vec![Method::Exact, Method::TwoPointPade]);
        assert_eq!(parse_methods("foo"), Err(RuinError::UnknownMethod("foo".into())));
    }

    #[test]
    fn flags_build_model() {
        let c = cfg(&["exact", "--lambda", "1", "--theta", "0.01", "--sigma", "1", "--claims", "exp:rate=1"]).unwrap();
        let m: PerturbedModel = EXP.parse().unwrap();
        assert_eq!(c.model, m);
        let c = cfg(&["coef", "--model", EXP, "--premium-rate", "2"]).unwrap();
        assert_eq!(c.model.premium(), 2.0);
        assert!(cfg(&["coef", "--lambda", "1"]).is_err());
    }

    #[test]
    fn config_file_and_override() {
        let text = "# defaults\nmodel = lambda=1,theta=0.01,sigma=1,claims=exp:rate=1\nprecision=4\nu=1,2\n";
        let map = parse_config(text).unwrap();
        assert_eq!(map["precision"], "4");
        assert!(parse_config("bogus=1").is_err());
        assert!(parse_config("novalue").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, text).unwrap();
        let c = cfg(&["exact", "--config", path.to_str().unwrap(), "--precision", "3"]).unwrap();
        assert_eq!(c.precision, 3);
        assert_eq!(c.u_grid, vec![1.0, 2.0]);
    }

    #[test]
    fn csv_round_trip() {
        let c = cfg(&["table", "--model", EXP, "--methods", "exact,ren2,2pp", "--u", "0,1,5"]).unwrap();
        let report = run_table(&c);
        let text = report.to_csv();
        assert!(text.starts_with("u,exact,ren2,2pp\n0.000000,1.000000,0.990099,0.990099\n"));
        let parsed = TableReport::from_csv(&text).unwrap();
        assert_eq!(parsed.to_csv(), text);
    }

    #[test]
    fn na_for_infeasible_cells() {
        let c = cfg(&["table", "--model", "lambda=1,theta=0.01,sigma=0,claims=exp:rate=1", "--methods", "4me,ren2", "--u", "1"])
            .unwrap();
        let report = run_table(&c);
        assert_eq!(report.column("4me").unwrap(), vec![None]);
        assert!(report.to_csv().contains("NA"));
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn errors_against_self_are_zero() {
        let c = cfg(&["errors", "--model", EXP, "--methods", "exact,4me", "--u", "0.5,5"]).unwrap();
        let report = run_errors(&c);
        assert_eq!(report.columns, vec!["eps_exact", "eps_4me"]);
        for row in &report.rows {
            assert_eq!(row.1[0], Some(0.0));
            assert!(row.1[1].unwrap() < 1e-6);
        }
    }

    #[test]
    fn exit_codes() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["ruinkit", "coef", "--model", EXP], &mut out, &mut err), 0);
        assert_eq!(run(["ruinkit", "coef"], &mut out, &mut err), 1);
        assert_eq!(run(["ruinkit", "frobnicate"], &mut out, &mut err), 1);
        assert_eq!(run(["ruinkit", "table", "--model", EXP, "--methods", "nope"], &mut out, &mut err), 1);
        assert_eq!(
            run(["ruinkit", "decompose", "--model", "lambda=1,theta=0.01,sigma=0.1,claims=exp:rate=1", "--step", "0.5"], &mut out, &mut err),
            1
        );
        assert_eq!(run(["ruinkit", "--help"], &mut out, &mut err), 0);
    }
}
