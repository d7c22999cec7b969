//! The `eqlab` command line.
//!
//! Exit codes: 0 on success, 1 when a model or computation fails, 2 on
//! usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::Pow;
use serde::Serialize;

use crate::correspondence::{model_metric, square_grid, wcp_numeric, PhasePoint, WcpOptions, DEFAULT_STEP};
use crate::dsl::{parse_model, validate, CheckedModel, ModelSpec};
use crate::dynamics::{evolve_model, TimeGrid};
use crate::ordering::{normal_order, normal_product};
use crate::rotsym::{verify_match, MatchOptions, RotsymParams};
use crate::scalar::Rational;

/// Default per-mode truncation for models that do not declare one.
pub const TRUNCATION_ENV: &str = "EQLAB_TRUNCATION";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "eqlab", version, about = "Coherent-state quantization laboratory")]
pub struct Cli {
    /// Output format of the result; JSON unless stated otherwise.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file (.eqm).
    #[arg(long)]
    pub model: PathBuf,
    /// Override `hbar`, as `a/b`, an integer or a decimal.
    #[arg(long, value_parser = parse_rational)]
    pub hbar: Option<Rational>,
    /// Override a declared parameter: `name=value`.
    #[arg(long = "set", value_parser = parse_assignment)]
    pub set: Vec<(String, Rational)>,
    /// Per-mode truncation dimension.
    #[arg(long)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Momenta, one per shifted mode, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0")]
    pub p: Vec<f64>,
    /// Positions, one per shifted mode.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0")]
    pub q: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a model file.
    Parse { file: PathBuf },
    /// Print the normal-ordered form of an operator expression.
    NormalOrder {
        #[command(flatten)]
        model: ModelArgs,
        /// Frame to order against; the fiducial one by default.
        #[arg(long)]
        frame: Option<String>,
        /// Drop contractions (the normal product `:e:`).
        #[arg(long)]
        product: bool,
        expr: String,
    },
    /// H(p,q) numerically and symbolically over a square grid.
    Wcp {
        #[command(flatten)]
        model: ModelArgs,
        /// Points per axis.
        #[arg(long, default_value_t = 3)]
        grid: usize,
        /// Half width of the grid.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Fubini–Study metric at a phase-space point.
    Metric {
        #[command(flatten)]
        model: ModelArgs,
        /// Shortcut for `--set omega=...`.
        #[arg(long, value_parser = parse_rational)]
        omega: Option<Rational>,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
    },
    /// Full quantum and reduced classical trajectories from one point.
    Evolve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 1e-2)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
    },
    /// Check the reducible rotationally symmetric model against its target.
    Rotsym {
        #[arg(long = "N", default_value_t = 1)]
        n: u32,
        #[arg(long, value_parser = parse_rational, default_value = "1")]
        m: Rational,
        #[arg(long, value_parser = parse_rational, default_value = "1/2")]
        zeta: Rational,
        #[arg(long, value_parser = parse_rational, default_value = "1")]
        v: Rational,
        /// Skip the numeric comparison.
        #[arg(long)]
        symbolic_only: bool,
        #[arg(long)]
        truncation: Option<usize>,
    },
}

/// `a/b`, an integer, or a decimal such as `-0.125`, kept exact.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if let Ok(r) = Rational::from_str(s) {
        return Ok(r);
    }
    let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
    let (int, frac) = body.split_once('.').ok_or_else(|| format!("`{s}` is not a rational number"))?;
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("`{s}` is not a rational number"));
    }
    let digits: BigInt = format!("0{int}{frac}").parse().unwrap();
    let r = Rational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -r } else { r })
}

fn parse_assignment(s: &str) -> Result<(String, Rational), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    Ok((k.trim().to_string(), parse_rational(v)?))
}

enum Failure {
    Usage(String),
    Model(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Model(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Model(m) => m,
        }
    }
}

fn model_err(e: impl std::fmt::Display) -> Failure {
    Failure::Model(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_file(path: &Path) -> Result<ModelSpec, Failure> {
    let text = read(path)?;
    let name = path.display().to_string();
    parse_model(&text).map_err(|d| Failure::Model(d.iter().map(|x| x.render(&name)).collect::<Vec<_>>().join("\n")))
}

fn env_truncation() -> Result<Option<usize>, Failure> {
    match std::env::var(TRUNCATION_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{TRUNCATION_ENV}=`{v}` is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Loads and validates a model with overrides applied, and picks the
/// truncation: the flag, else the model's own, else the environment.
fn load(args: &ModelArgs, extra: &[(String, Rational)]) -> Result<(CheckedModel, Option<usize>), Failure> {
    let mut spec = parse_file(&args.model)?;
    if let Some(h) = &args.hbar {
        spec.set_param("hbar", h.clone());
    }
    for (k, v) in args.set.iter().chain(extra) {
        if !spec.params.contains_key(k) {
            return Err(Failure::Usage(format!("unknown parameter `{k}` in {}", args.model.display())));
        }
        spec.set_param(k, v.clone());
    }
    let dim = match args.truncation {
        Some(d) => Some(d),
        None if spec.truncation.is_none() => env_truncation()?,
        None => None,
    };
    if let Some(d) = dim {
        if d < 4 {
            return Err(Failure::Usage(format!("truncation {d} is below the minimum of 4")));
        }
    }
    Ok((validate(&spec).map_err(model_err)?, dim))
}

fn point(model: &CheckedModel, a: &PointArgs) -> Result<PhasePoint, Failure> {
    let n = model.shifted_positions().len();
    let widen = |v: &[f64], what: &str| -> Result<Vec<f64>, Failure> {
        match v.len() {
            len if len == n => Ok(v.to_vec()),
            1 if v[0] == 0.0 => Ok(vec![0.0; n]),
            len => Err(Failure::Usage(format!("--{what} has {len} values, the model has {n} shifted modes"))),
        }
    };
    Ok(PhasePoint::new(widen(&a.p, "p")?, widen(&a.q, "q")?))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).unwrap() + "\n"
}

fn csv_rows(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(&r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn dispatch(cli: &Cli) -> Result<String, Failure> {
    let fmt = cli.format;
    let table = fmt == Some(Format::Csv);
    match &cli.command {
        Command::Parse { file } => {
            let m = validate(&parse_file(file)?).map_err(model_err)?;
            let n = m.total_modes();
            Ok(match fmt {
                None => format!("ok: {n} mode{}, hermitian\n", if n == 1 { "" } else { "s" }),
                Some(Format::Json) => json(&serde_json::json!({ "ok": true, "modes": n, "hermitian": true })),
                Some(Format::Csv) => format!("ok,modes,hermitian\ntrue,{n},true\n"),
            })
        }
        Command::NormalOrder { model, frame, product, expr } => {
            let (m, _) = load(model, &[])?;
            let f = match frame {
                Some(name) => m.frame(name).ok_or_else(|| Failure::Usage(format!("unknown frame `{name}`")))?,
                None => &m.fiducial,
            };
            let e = m
                .operator(expr)
                .map_err(|d| Failure::Usage(d.iter().map(|x| x.render("<expr>")).collect::<Vec<_>>().join("\n")))?;
            let out = if *product { normal_product(&e, f) } else { normal_order(&e, f) }.map_err(model_err)?;
            Ok(if table {
                csv_rows(&["frame".into(), "normal_ordered".into()], [vec![f.name().to_string(), out.render()]])
            } else {
                json(&serde_json::json!({ "frame": f.name(), "input": expr, "normal_ordered": out.render() }))
            })
        }
        Command::Wcp { model, grid, radius } => {
            let (m, dim) = load(model, &[])?;
            if *grid == 0 || !radius.is_finite() {
                return Err(Failure::Usage("grid needs at least one point per axis and a finite radius".into()));
            }
            let pts = square_grid(m.shifted_positions().len(), *grid, *radius);
            let name = model.model.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
            let r = wcp_numeric(&m, &name, &pts, &WcpOptions { dim, ..WcpOptions::default() }).map_err(model_err)?;
            Ok(if table { r.to_csv() } else { r.to_json() })
        }
        Command::Metric { model, omega, point: pa, step } => {
            let extra: Vec<(String, Rational)> = omega.iter().map(|w| ("omega".to_string(), w.clone())).collect();
            let (m, dim) = load(model, &extra)?;
            let pt = point(&m, pa)?;
            let g = model_metric(&m, &pt, *step, dim).map_err(model_err)?;
            Ok(if table { g.to_csv() } else { g.to_json() })
        }
        Command::Evolve { model, point: pa, dt, horizon } => {
            let (m, dim) = load(model, &[])?;
            let pt = point(&m, pa)?;
            let grid = TimeGrid::new(*dt, *horizon).map_err(|e| Failure::Usage(e.to_string()))?;
            let run = evolve_model(&m, &pt, &grid, dim).map_err(model_err)?;
            let name = model.model.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
            Ok(if table { run.to_csv() } else { json(&run.summary(&name, &pt)) })
        }
        Command::Rotsym { n, m, zeta, v, symbolic_only, truncation } => {
            let params = RotsymParams::new(*n, m.clone(), zeta.clone(), v.clone()).map_err(model_err)?;
            let dim = match truncation {
                Some(d) => Some(*d),
                None => env_truncation()?,
            };
            let mut opts = MatchOptions::for_params(&params);
            opts.dim = dim;
            if *symbolic_only {
                opts.numeric = false;
            }
            let r = verify_match(&params, &opts).map_err(model_err)?;
            Ok(match table {
                false => r.to_json(),
                true => {
                    let k = *n as usize;
                    let mut header: Vec<String> = (0..k).map(|i| format!("p{i}")).collect();
                    header.extend((0..k).map(|i| format!("q{i}")));
                    header.extend(["H_num", "H_sym", "abs_dev"].map(String::from));
                    let fmt_opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
                    csv_rows(
                        &header,
                        r.numeric_points.iter().map(|pr| {
                            let mut row: Vec<String> = pr.p.iter().chain(&pr.q).map(|x| x.to_string()).collect();
                            row.extend([fmt_opt(pr.numeric), pr.symbolic.to_string(), fmt_opt(pr.abs_dev)]);
                            row
                        }),
                    )
                }
            })
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Runs the command line with explicit output streams; returns the exit
/// code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = dispatch(&cli).and_then(|text| match &cli.output {
        Some(path) => write_atomic(path, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Usage(e.to_string())),
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests;
