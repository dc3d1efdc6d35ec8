use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hankel_spectra::discretize::{discretize, DiscretizationConfig, DEFAULT_EXP_FLOOR};
use hankel_spectra::eigensolve::Method;
use hankel_spectra::lyapunov::{gramian_quadrature, lyapunov_residual, residual_scale, solve_lyapunov, DiagonalSystem};
use hankel_spectra::measures::{AtomicMeasure, Measure};
use hankel_spectra::reference::{cdf_table, compare, ReferenceSpectrum};
use hankel_spectra::spectral_map::{
    compare_atoms, hankel_cross_check, identity_report_with, omega, omega_sharp, HankelGrid, IdentityReport,
};
use rayon::prelude::*;
use serde::Serialize;

const THREADS_VAR: &str = "HANKEL_SPECTRA_THREADS";

#[derive(Parser)]
#[command(name = "hankel-spectra", version, about = "Spectral map of positive Hankel operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write Ω(μ) as CSV rows `lambda,mass`.
    Map(MapArgs),
    /// Write Ω(μ#) as CSV rows `lambda,mass`.
    SharpMap(MapArgs),
    /// Write the class memberships of μ as JSON.
    Classify(IoArgs),
    /// Run an identity suite on one measure or a JSON array of measures.
    Check(CheckArgs),
    /// Write the atoms of a discretized density as CSV rows `x,weight`.
    Discretize(DiscretizeArgs),
    /// Run a reference pipeline and write `lambda,empirical_cdf,reference_cdf`.
    Reference(ReferenceArgs),
    /// Solve the Lyapunov equation of the balanced realization of μ.
    Lyapunov(LyapunovArgs),
}

#[derive(Args)]
struct IoArgs {
    /// Measure JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
struct GridArgs {
    /// Quadrature nodes used for density inputs.
    #[arg(long, default_value_t = 200)]
    nodes: usize,
    /// Upper truncation point for density inputs.
    #[arg(long)]
    truncate: Option<f64>,
    /// Lower truncation point; defaults to the support's lower end, or 1e-8 when that is 0.
    #[arg(long)]
    truncate_lo: Option<f64>,
    /// One Gauss–Legendre panel instead of the graded composite rule.
    #[arg(long)]
    single_panel: bool,
}

impl GridArgs {
    fn atomic(&self, mu: &Measure) -> Result<AtomicMeasure, CliError> {
        let d = match mu {
            Measure::Atomic(a) => return Ok(a.clone()),
            Measure::Density(d) => d,
        };
        let mut cfg = DiscretizationConfig::new(self.nodes);
        if self.truncate.is_some() || self.truncate_lo.is_some() {
            let s = d.support();
            let lo = self.truncate_lo.unwrap_or(if s.lo > 0.0 { s.lo } else { DEFAULT_EXP_FLOOR });
            let hi = self.truncate.unwrap_or(s.hi);
            cfg = cfg.truncated(lo, hi)?;
        }
        if self.single_panel {
            cfg = cfg.single_panel();
        }
        Ok(discretize(d, &cfg)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Accurate,
    Baseline,
}

impl From<Solver> for Method {
    fn from(s: Solver) -> Method {
        match s {
            Solver::Accurate => Method::Accurate,
            Solver::Baseline => Method::Baseline,
        }
    }
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    io: IoArgs,
    #[arg(long, value_enum, default_value_t = Solver::Accurate)]
    solver: Solver,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    /// Ω∘Ω = id, relative atom error.
    Involution,
    /// Total mass preserved.
    Mass,
    /// Σλ and Σλ² against their closed forms.
    Trace,
    /// #∘Ω∘Ω^# = id.
    Duality,
    /// Leading spectrum of a discretized Hankel integral operator.
    Hankel,
    /// Every identity of the report at once.
    All,
}

impl Suite {
    fn default_tolerance(self) -> f64 {
        match self {
            Suite::Involution | Suite::Duality | Suite::Hankel | Suite::All => 1e-6,
            Suite::Mass => 1e-12,
            Suite::Trace => 1e-11,
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[command(flatten)]
    io: IoArgs,
    /// Tolerance override for the suite's gating quantity.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Solver::Accurate)]
    solver: Solver,
    #[command(flatten)]
    grid: GridArgs,
    /// Hankel suite: Gauss–Legendre points on [0, t_max].
    #[arg(long, default_value_t = 400)]
    hankel_points: usize,
    #[arg(long, default_value_t = 40.0)]
    t_max: f64,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Spectrum {
    Mehler,
    Rosenblum,
}

#[derive(Args)]
struct ReferenceArgs {
    #[arg(value_enum)]
    spectrum: Spectrum,
    #[arg(long, default_value_t = 400)]
    nodes: usize,
    /// Upper truncation point (the Mehler source needs one; default 30).
    #[arg(long)]
    truncate: Option<f64>,
    #[arg(long)]
    truncate_lo: Option<f64>,
    #[arg(long)]
    single_panel: bool,
    /// Largest accepted Kolmogorov distance.
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LyapunovArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    /// Horizon of the Gramian time integral.
    #[arg(long, default_value_t = 40.0)]
    horizon: f64,
    /// Simpson panels for the Gramian time integral.
    #[arg(long, default_value_t = 4000)]
    steps: usize,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Numeric(#[from] hankel_spectra::Error),
    #[error("tolerance exceeded: {0}")]
    Tolerance(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Tolerance(_) => 1,
            CliError::Io { .. } | CliError::Parse(_) => 2,
            CliError::Numeric(e) if e.is_numerical() => 3,
            CliError::Numeric(_) => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Measure, CliError> {
    Ok(Measure::from_json(&read(path)?)?)
}

/// A single measure object or an array of them.
fn load_batch(path: &Path) -> Result<Vec<Measure>, CliError> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    match value {
        serde_json::Value::Array(items) => items
            .iter()
            .map(|v| Ok(Measure::from_json(&v.to_string())?))
            .collect(),
        _ => Ok(vec![Measure::from_json(&text)?]),
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn atoms_csv(header: &str, mu: &AtomicMeasure) -> String {
    csv(header, mu.atoms().iter().map(|a| vec![a.x, a.w]))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn run_map(args: &MapArgs, sharp: bool) -> Result<(), CliError> {
    let mu = args.grid.atomic(&load(&args.io.input)?)?;
    let sigma = if sharp { omega_sharp(&mu, args.solver.into())? } else { omega(&mu, args.solver.into())? };
    emit(args.io.output.as_deref(), &atoms_csv("lambda,mass", &sigma))
}

#[derive(Serialize)]
struct CheckOutcome {
    passed: bool,
    /// The quantity compared against the tolerance.
    error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<IdentityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hankel: Option<hankel_spectra::spectral_map::HankelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

#[derive(Serialize)]
struct CheckSummary {
    suite: Suite,
    solver: String,
    tolerance: f64,
    passed: bool,
    results: Vec<CheckOutcome>,
}

fn check_one(mu: &Measure, args: &CheckArgs, tol: f64) -> Result<CheckOutcome, hankel_spectra::Error> {
    let mu = args.grid.atomic(mu).map_err(|e| match e {
        CliError::Numeric(e) => e,
        other => hankel_spectra::Error::InvalidConfig(other.to_string()),
    })?;
    let method: Method = args.solver.into();
    let outcome = |error: f64, report, hankel| CheckOutcome { passed: error <= tol, error, report, hankel, failure: None };
    match args.suite {
        Suite::Hankel => {
            let grid = HankelGrid { n_t: args.hankel_points, t_max: args.t_max, tolerance: tol };
            let h = hankel_cross_check(&mu, &grid)?;
            Ok(outcome(h.max_relative_deviation, None, Some(h)))
        }
        Suite::Duality => {
            let back = omega(&omega_sharp(&mu, method)?, method)?.sharp();
            let d = compare_atoms(&mu, &back)?;
            Ok(outcome(d.node_error.max(d.weight_error), None, None))
        }
        suite => {
            let r = identity_report_with(&mu, method)?;
            let error = match suite {
                Suite::Involution => r.roundtrip_node_error.max(r.roundtrip_weight_error),
                Suite::Mass => r.mass_error,
                Suite::Trace => r.trace_error.max(r.hs_error),
                _ => r.max_error(),
            };
            Ok(outcome(error, Some(r), None))
        }
    }
}

fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Parse(format!("{THREADS_VAR} must be a count, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn run_check(args: &CheckArgs) -> Result<(), CliError> {
    let measures = load_batch(&args.io.input)?;
    let tol = args.tol.unwrap_or(args.suite.default_tolerance());
    let single = measures.len() == 1;
    let work = |mu: &Measure| check_one(mu, args, tol);
    let threads = thread_count()?;
    let raw: Vec<_> = if threads == 0 {
        measures.iter().map(work).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Parse(e.to_string()))?
            .install(|| measures.par_iter().map(work).collect())
    };
    let mut results = Vec::with_capacity(raw.len());
    for r in raw {
        match r {
            Ok(o) => results.push(o),
            Err(e) if single => return Err(e.into()),
            Err(e) => results.push(CheckOutcome {
                passed: false,
                error: f64::NAN,
                report: None,
                hankel: None,
                failure: Some(e.to_string()),
            }),
        }
    }
    let passed = results.iter().all(|o| o.passed);
    let summary = CheckSummary { suite: args.suite, solver: Method::from(args.solver).to_string(), tolerance: tol, passed, results };
    emit(args.io.output.as_deref(), &json(&summary))?;
    if passed {
        Ok(())
    } else {
        let failed = summary.results.iter().filter(|o| !o.passed).count();
        Err(CliError::Tolerance(format!("{failed} of {} measures above {tol:e}", summary.results.len())))
    }
}

fn run_classify(args: &IoArgs) -> Result<(), CliError> {
    emit(args.output.as_deref(), &json(&load(&args.input)?.classify()))
}

fn run_discretize(args: &DiscretizeArgs) -> Result<(), CliError> {
    let mu = args.grid.atomic(&load(&args.io.input)?)?;
    emit(args.io.output.as_deref(), &atoms_csv("x,weight", &mu))
}

fn run_reference(args: &ReferenceArgs) -> Result<(), CliError> {
    let spectrum = match args.spectrum {
        Spectrum::Mehler => ReferenceSpectrum::MehlerSigma,
        Spectrum::Rosenblum => ReferenceSpectrum::RosenblumRho,
    };
    let truncate = match args.spectrum {
        Spectrum::Mehler => Some(args.truncate.unwrap_or(30.0)),
        Spectrum::Rosenblum => args.truncate,
    };
    let grid = GridArgs { nodes: args.nodes, truncate, truncate_lo: args.truncate_lo, single_panel: args.single_panel };
    let mu = grid.atomic(&Measure::Density(spectrum.source_measure()))?;
    let sigma = omega(&mu, Method::Accurate)?;
    let distance = compare(&sigma, spectrum)?;
    let rows = cdf_table(&sigma, spectrum).into_iter().map(|r| r.to_vec());
    let table = csv("lambda,empirical_cdf,reference_cdf", rows);
    emit(args.output.as_deref(), &table)?;
    let line = format!("kolmogorov_distance {distance:?}");
    if args.output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    if distance <= args.tol {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!("Kolmogorov distance {distance:e} above {:e}", args.tol)))
    }
}

#[derive(Serialize)]
struct LyapunovReport {
    dimension: usize,
    residual: f64,
    residual_scale: f64,
    relative_residual: f64,
    horizon: f64,
    steps: usize,
    gramian_error: f64,
    gramian_tail_bound: f64,
    gramian_tail_flagged: bool,
    passed: bool,
}

fn run_lyapunov(args: &LyapunovArgs) -> Result<(), CliError> {
    let mu = args.grid.atomic(&load(&args.io.input)?)?;
    let sys = DiagonalSystem::from(&mu);
    let w = solve_lyapunov(&sys);
    let residual = lyapunov_residual(&sys, &w);
    let scale = residual_scale(&sys);
    let g = gramian_quadrature(&sys, args.horizon, args.steps)?;
    let report = LyapunovReport {
        dimension: sys.dim(),
        residual,
        residual_scale: scale,
        relative_residual: residual / scale,
        horizon: args.horizon,
        steps: args.steps,
        gramian_error: g.matrix.max_abs_diff(&w),
        gramian_tail_bound: g.tail_bound,
        gramian_tail_flagged: g.tail_flagged,
        passed: residual <= args.tol * scale,
    };
    emit(args.io.output.as_deref(), &json(&report))?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!("relative residual {:e} above {:e}", report.relative_residual, args.tol)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Map(a) => run_map(a, false),
        Command::SharpMap(a) => run_map(a, true),
        Command::Classify(a) => run_classify(a),
        Command::Check(a) => run_check(a),
        Command::Discretize(a) => run_discretize(a),
        Command::Reference(a) => run_reference(a),
        Command::Lyapunov(a) => run_lyapunov(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
