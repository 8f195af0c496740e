//! `esos`: evaluate theta functions and partition functions, and run the
//! verification suite.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 numerical-domain error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use esos_core::detrep::{sixv_z_det, z_det, OmegaVariant, SixVertexVariant};
use esos_core::funceq::SixVertexKind;
use esos_core::harness::{ParamsTemplate, Sampler};
use esos_core::monodromy::{partition_function, sixv_partition_function};
use esos_core::numerics::{format_scalar, parse_scalar};
use esos_core::report::{CheckRecord, Report};
use esos_core::{run_suite, ModelParams, SamplePolicy, Scalar, SpectralConfig, SuiteConfig, SuiteLevel, ThetaContext};
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] esos_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_numerical_domain() => 3,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "esos", version, about = "Elliptic SOS partition functions and their determinant formulas")]
#[command(args_override_self = true)]
struct Cli {
    /// Flat `key = value` file whose keys mirror the long flags; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of lattice sites L.
    #[arg(short = 'L', long = "sites", global = true, default_value_t = 2)]
    sites: usize,
    /// Elliptic nome p in (0,1).
    #[arg(long = "p", global = true, default_value_t = 0.2)]
    nome: f64,
    /// Crossing parameter as a+bi, or "random".
    #[arg(long, global = true, default_value = "random")]
    gamma: String,
    /// Dynamical parameter as a+bi, or "random".
    #[arg(long, global = true, default_value = "random")]
    tau: String,
    /// Comma-separated inhomogeneities, or "random".
    #[arg(long, global = true, default_value = "random")]
    mu: String,
    /// Comma-separated spectral parameters, or "random".
    #[arg(long, global = true, default_value = "random")]
    x: String,
    /// Auxiliary point x0, or "random".
    #[arg(long, global = true, default_value = "random")]
    x0: String,
    /// Auxiliary point x0bar, or "random".
    #[arg(long, global = true, default_value = "random")]
    x0bar: String,
    /// Seed for every random draw.
    #[arg(long, global = true, env = "ESOS_SEED", default_value_t = 24301)]
    seed: u64,
    /// Tolerance for comparisons printed by `theta-eval`, `z`, `z-det` and `z-6v`.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Worker threads for `verify` (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Corrupts the named functional-equation check (testing hook).
    #[arg(long, global = true, hide = true)]
    inject_fault: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Oracle,
    Det,
    SixvOracle,
    SixvA,
    SixvD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    A,
    D,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate theta1 at each argument.
    ThetaEval {
        /// Arguments as a+bi. Put complex values with a leading minus after `--`.
        #[arg(required = true, allow_negative_numbers = true)]
        values: Vec<String>,
        /// Also compare -i p^(-1/4) theta1(x) with sinh(x).
        #[arg(long)]
        limit: bool,
    },
    /// Partition function by one or more methods; with two or more, their agreement is checked.
    Z {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "oracle,det")]
        method: Vec<Method>,
    },
    /// Determinant formula for one variant, compared with the monodromy oracle.
    ZDet {
        /// base, zero:i, zerobar:i or pair:i,j.
        #[arg(long, default_value = "base")]
        variant: String,
    },
    /// Six-vertex determinant formulas compared with the six-vertex oracle.
    #[command(name = "z-6v")]
    Z6v {
        #[arg(long, value_enum, default_value = "both")]
        kind: Kind,
        /// Replace column i (represents x_i -> x0).
        #[arg(long)]
        column: Option<usize>,
    },
    /// Run the verification suite.
    Verify {
        #[arg(value_parser = ["quick", "full"], default_value = "quick")]
        level: String,
    },
}

fn parse_list(text: &str, what: &str, sites: usize) -> Result<Option<Vec<Scalar>>, CliError> {
    if text == "random" {
        return Ok(None);
    }
    let values = text.split(',').map(parse_scalar).collect::<Result<Vec<_>, _>>()?;
    if values.len() != sites {
        return Err(CliError::Usage(format!("--{what} has {} entries but L = {sites}", values.len())));
    }
    Ok(Some(values))
}

fn parse_one(text: &str) -> Result<Option<Scalar>, CliError> {
    if text == "random" {
        Ok(None)
    } else {
        Ok(Some(parse_scalar(text)?))
    }
}

impl Cli {
    fn policy(&self) -> Result<SamplePolicy, CliError> {
        let mut p = SamplePolicy::new(self.seed);
        p.nome = self.nome;
        p.min_theta_floor = 1e-6 * self.nome.powf(0.25);
        p.validate()?;
        Ok(p)
    }

    fn template(&self) -> Result<ParamsTemplate, CliError> {
        if self.sites == 0 {
            return Err(CliError::Usage("L must be at least 1".into()));
        }
        Ok(ParamsTemplate {
            sites: self.sites,
            gamma: parse_one(&self.gamma)?,
            tau: parse_one(&self.tau)?,
            mu: parse_list(&self.mu, "mu", self.sites)?,
            x: parse_list(&self.x, "x", self.sites)?,
            x0: parse_one(&self.x0)?,
            x0bar: parse_one(&self.x0bar)?,
        })
    }

    /// Parameters with every "random" field drawn generically from the seed.
    fn draw(&self) -> Result<(ModelParams, SpectralConfig), CliError> {
        Ok(Sampler::new(self.policy()?)?.draw_generic(&self.template()?)?)
    }
}

fn param_map(p: &ModelParams, cfg: &SpectralConfig, seed: u64) -> Map<String, Value> {
    let list = |v: &[Scalar]| Value::from(v.iter().map(|&z| format_scalar(z)).collect::<Vec<_>>());
    let mut m = Map::new();
    m.insert("sites".into(), Value::from(p.sites()));
    m.insert("p".into(), Value::from(p.theta.nome()));
    m.insert("seed".into(), Value::from(seed));
    m.insert("gamma".into(), Value::from(format_scalar(p.gamma)));
    m.insert("tau".into(), Value::from(format_scalar(p.tau)));
    m.insert("mu".into(), list(&p.mu));
    m.insert("x".into(), list(&cfg.x));
    m.insert("x0".into(), Value::from(format_scalar(cfg.x0)));
    m.insert("x0bar".into(), Value::from(format_scalar(cfg.x0bar)));
    m
}

fn record(id: &str, anchors: &[&str], residual: f64, tolerance: f64) -> CheckRecord {
    CheckRecord { id: id.into(), residual, tolerance, pass: residual < tolerance, anchors: anchors.iter().map(|s| s.to_string()).collect() }
}

fn rel(a: Scalar, b: Scalar) -> f64 {
    (a - b).norm() / b.norm()
}

/// Records pairwise agreement of named values against the first one.
fn agreement(values: &[(String, Scalar)], id: &str, anchors: &[&str], tol: f64) -> Vec<CheckRecord> {
    values.iter().skip(1).map(|(name, v)| record(&format!("{id}-{}-vs-{name}", values[0].0), anchors, rel(*v, values[0].1), tol)).collect()
}

fn insert_values(m: &mut Map<String, Value>, values: &[(String, Scalar)]) {
    let mut out = Map::new();
    for (k, v) in values {
        out.insert(k.clone(), Value::from(format_scalar(*v)));
    }
    m.insert("values".into(), Value::Object(out));
}

fn parse_variant(text: &str) -> Result<OmegaVariant, CliError> {
    let bad = || CliError::Usage(format!("variant {text:?} is not base, zero:i, zerobar:i or pair:i,j"));
    let idx = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match text.split_once(':') {
        None if text == "base" => Ok(OmegaVariant::Base),
        Some(("zero", i)) => Ok(OmegaVariant::Zero(idx(i)?)),
        Some(("zerobar", i)) => Ok(OmegaVariant::ZeroBar(idx(i)?)),
        Some(("pair", ij)) => {
            let (i, j) = ij.split_once(',').ok_or_else(bad)?;
            Ok(OmegaVariant::Pair(idx(i)?, idx(j)?))
        }
        _ => Err(bad()),
    }
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let start = Instant::now();
    let report = match &cli.command {
        Command::ThetaEval { values, limit } => {
            let ctx = ThetaContext::new(cli.nome)?;
            let mut params = Map::new();
            params.insert("p".into(), Value::from(cli.nome));
            let mut rows = Vec::new();
            let mut checks = Vec::new();
            for text in values {
                let x = parse_scalar(text)?;
                let t = ctx.theta1(x)?;
                let mut row = Map::new();
                row.insert("x".into(), Value::from(format_scalar(x)));
                row.insert("theta1".into(), Value::from(format_scalar(t)));
                if *limit {
                    let scaled = Scalar::new(0.0, -1.0) * cli.nome.powf(-0.25) * t;
                    row.insert("scaled".into(), Value::from(format_scalar(scaled)));
                    row.insert("sinh".into(), Value::from(format_scalar(x.sinh())));
                    checks.push(record(&format!("theta-limit-{text}"), &["theta", "bw6v"], (scaled - x.sinh()).norm(), cli.tol));
                }
                rows.push(Value::Object(row));
            }
            params.insert("values".into(), Value::from(rows));
            Report::new(params, checks, 0.0)
        }
        Command::Z { method } => {
            let (p, cfg) = cli.draw()?;
            let mut values = Vec::new();
            for m in method {
                let (name, v) = match m {
                    Method::Oracle => ("oracle", partition_function(&cfg.x, &p)?),
                    Method::Det => ("det", z_det(OmegaVariant::Base, &cfg, &p)?),
                    Method::SixvOracle => ("sixv-oracle", sixv_partition_function(&cfg.x, p.gamma, &p.mu)?),
                    Method::SixvA => ("sixv-a", sixv_z_det(SixVertexKind::A, SixVertexVariant::Base, cfg.x0, &cfg.x, p.gamma, &p.mu)?),
                    Method::SixvD => ("sixv-d", sixv_z_det(SixVertexKind::D, SixVertexVariant::Base, cfg.x0, &cfg.x, p.gamma, &p.mu)?),
                };
                values.push((name.to_string(), v));
            }
            let mut params = param_map(&p, &cfg, cli.seed);
            insert_values(&mut params, &values);
            Report::new(params, agreement(&values, "pf", &["pf", "Z", "det6vA"], cli.tol), 0.0)
        }
        Command::ZDet { variant } => {
            let (p, cfg) = cli.draw()?;
            let v = parse_variant(variant)?;
            let values =
                vec![("oracle".to_string(), partition_function(&v.spectral_set(&cfg)?, &p)?), ("det".to_string(), z_det(v, &cfg, &p)?)];
            let mut params = param_map(&p, &cfg, cli.seed);
            params.insert("variant".into(), Value::from(v.to_string()));
            insert_values(&mut params, &values);
            Report::new(params, agreement(&values, "thmZ", &["Z", "Z0I", "Zb0I", "Z0b0IJ"], cli.tol), 0.0)
        }
        Command::Z6v { kind, column } => {
            let (p, cfg) = cli.draw()?;
            let (variant, set) = match column {
                None => (SixVertexVariant::Base, cfg.x.clone()),
                Some(i) => (SixVertexVariant::Column(*i), cfg.with_x0_at(*i)?),
            };
            let mut values = vec![("sixv-oracle".to_string(), sixv_partition_function(&set, p.gamma, &p.mu)?)];
            if matches!(kind, Kind::A | Kind::Both) {
                values.push(("det6vA".into(), sixv_z_det(SixVertexKind::A, variant, cfg.x0, &cfg.x, p.gamma, &p.mu)?));
            }
            if matches!(kind, Kind::D | Kind::Both) {
                values.push(("det6vD".into(), sixv_z_det(SixVertexKind::D, variant, cfg.x0, &cfg.x, p.gamma, &p.mu)?));
            }
            let mut params = param_map(&p, &cfg, cli.seed);
            insert_values(&mut params, &values);
            Report::new(params, agreement(&values, "det6v", &["det6vA", "det6vD", "bw6v"], cli.tol), 0.0)
        }
        Command::Verify { level } => {
            let level: SuiteLevel = level.parse()?;
            let mut cfg = SuiteConfig::new(level, cli.policy()?);
            cfg.workers = cli.workers;
            cfg.inject_fault = cli.inject_fault.clone();
            let result = run_suite(&cfg).map_err(|e| match e {
                esos_core::Error::InvalidParameter(m) => CliError::Usage(m),
                other => CliError::Core(other),
            })?;
            for c in result.checks.iter().filter(|c| c.error.is_some()) {
                eprintln!("error in {}: {}", c.record.id, c.error.as_deref().unwrap_or_default());
            }
            return Ok(result.to_report());
        }
    };
    let mut report = report;
    report.summary.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    }
}

/// Flags from a `key = value` file, placed before the command-line flags.
fn config_args(path: &std::path::Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        let key = k.trim();
        if key == "config" {
            return Err(CliError::Usage("config files cannot include other config files".into()));
        }
        out.push(format!("--{key}={}", v.trim()));
    }
    Ok(out)
}

fn with_config(raw: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    for (k, a) in raw.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if a == "--config" {
            path = raw.get(k + 1).map(PathBuf::from);
        }
    }
    let Some(path) = path else { return Ok(raw) };
    let mut args = vec![raw[0].clone()];
    args.extend(config_args(&path)?);
    args.extend(raw.into_iter().skip(1));
    Ok(args)
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let args = match with_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("esos: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("esos: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let text = render(&report, cli.format);
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("esos: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if report.summary.pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing checks: {}", report.failing_ids().join(", "));
        ExitCode::from(1)
    }
}
