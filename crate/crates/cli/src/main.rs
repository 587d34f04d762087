//! Command-line front end: analyze | simulate | verify | transform.
//!
//! Configs are JSON ({"field": ..., "sim": ..., "grid": ...}), reports are
//! JSON, tables are CSV. Exit codes: 0 success, 1 field-validation or run
//! failure, 2 usage/parse errors. All floating-point output uses shortest
//! round-trip formatting, so reruns with the same seed produce byte-equal
//! artifacts.

use clap::{Args, Parser, Subcommand};
use refdiff_core::{
    fold_extend, fold_extend_periodic, run_ensemble, simulate_one_sided, simulate_two_sided,
    simulate_unreflected, symmetrize, verify_stationarity, AnalyticProfile, CoefficientField,
    DomainSpec, ExtendedField, PathSample, Recurrence, SimConfig, Start, ValidationReport,
};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "refdiff",
    about = "Reflected state-dependent diffusions: stationary analysis and Monte Carlo verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form analysis: recurrence, stationary density, constants.
    Analyze(AnalyzeArgs),
    /// Simulate reflected paths and dump endpoint/trajectory tables.
    Simulate(SimulateArgs),
    /// Statistical verification of the simulated stationary law.
    Verify(VerifyArgs),
    /// Dump extended (symmetrized/folded) coefficients on a grid.
    Transform(TransformArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// JSON run config with the coefficient field.
    #[arg(long)]
    config: PathBuf,
    /// Evaluation grid min:max:count for the CSV table.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Write the JSON report here (stdout if omitted).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the (x, beta, eta, h, cdf) table here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed start state (default 0; ignored with --stationary).
    #[arg(long)]
    x0: Option<f64>,
    /// Draw the start state from the stationary distribution.
    #[arg(long)]
    stationary: bool,
    /// Per-path endpoint CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full (time, z, y_net) dump of one trajectory.
    #[arg(long)]
    traj: Option<PathBuf>,
    /// Which path index to dump with --traj.
    #[arg(long, default_value_t = 0)]
    traj_path: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.02)]
    ks_threshold: f64,
    /// Write the verification report JSON here (stdout if omitted).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Histogram-vs-analytic-density CSV.
    #[arg(long)]
    hist: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    config: PathBuf,
    /// sym (half line), fold (interval, band-local), or periodic (interval).
    #[arg(long)]
    mode: String,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Write the (x, b, sigma) table here (stdout if omitted).
    #[arg(long)]
    dump: Option<PathBuf>,
}

enum CliError {
    /// Exit 2: malformed inputs or I/O trouble.
    Usage(String),
    /// Exit 1: the field violates the structural conditions.
    Validation(ValidationReport),
    /// Exit 1: a well-formed run that cannot proceed.
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }

    fn report(&self) {
        match self {
            CliError::Usage(m) => eprintln!("error: {m}"),
            CliError::Run(m) => eprintln!("error: {m}"),
            CliError::Validation(r) => {
                eprintln!("field validation failed:");
                for v in &r.violations {
                    eprintln!("  - {v}");
                }
            }
        }
    }
}

#[derive(Deserialize, Clone, Copy)]
struct GridSpec {
    min: f64,
    max: f64,
    count: usize,
}

/// Artifact paths embedded in the config; command-line flags take priority.
#[derive(Deserialize, Default)]
struct OutputSpec {
    report: Option<PathBuf>,
    csv: Option<PathBuf>,
    out: Option<PathBuf>,
    hist: Option<PathBuf>,
    dump: Option<PathBuf>,
    traj: Option<PathBuf>,
}

#[derive(Deserialize)]
struct RunConfig {
    field: CoefficientField,
    #[serde(default)]
    sim: SimConfig,
    grid: Option<GridSpec>,
    #[serde(default)]
    outputs: OutputSpec,
}

fn pick<'a>(flag: &'a Option<PathBuf>, cfg: &'a Option<PathBuf>) -> Option<&'a Path> {
    flag.as_deref().or(cfg.as_deref())
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!(
            "{}: {e} (line {}, column {})",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn validated(field: &CoefficientField) -> Result<(), CliError> {
    let report = field.validate();
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::Validation(report))
    }
}

fn parse_grid(flag: Option<&str>, cfg: Option<GridSpec>) -> Result<Option<GridSpec>, CliError> {
    let spec = match flag {
        Some(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::Usage(format!(
                    "grid must be min:max:count, got \"{s}\""
                )));
            }
            let min: f64 = parts[0]
                .parse()
                .map_err(|_| CliError::Usage(format!("bad grid min \"{}\"", parts[0])))?;
            let max: f64 = parts[1]
                .parse()
                .map_err(|_| CliError::Usage(format!("bad grid max \"{}\"", parts[1])))?;
            let count: usize = parts[2]
                .parse()
                .map_err(|_| CliError::Usage(format!("bad grid count \"{}\"", parts[2])))?;
            Some(GridSpec { min, max, count })
        }
        None => cfg,
    };
    if let Some(g) = spec {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN bounds
        if g.count < 2 || !(g.min < g.max) {
            return Err(CliError::Usage(
                "grid needs min < max and count >= 2".to_string(),
            ));
        }
    }
    Ok(spec)
}

fn grid_points(g: GridSpec) -> Vec<f64> {
    (0..g.count)
        .map(|i| g.min + (g.max - g.min) * i as f64 / (g.count - 1) as f64)
        .collect()
}

fn write_artifact(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, contents)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    validated(&cfg.field)?;
    let domain = cfg.field.domain;
    let profile =
        AnalyticProfile::new(cfg.field.clone()).map_err(|e| CliError::Run(e.to_string()))?;

    let mut report = serde_json::Map::new();
    let recurrent = profile.classify_recurrence() == Recurrence::Recurrent;
    report.insert(
        "recurrence".into(),
        serde_json::Value::String(if recurrent { "recurrent" } else { "transient" }.into()),
    );
    if recurrent {
        let c = profile
            .normalizing_constant()
            .map_err(|e| CliError::Run(e.to_string()))?;
        if c.is_finite() {
            report.insert("C".into(), serde_json::json!(c));
            let reg = profile
                .regulator_expectations()
                .map_err(|e| CliError::Run(e.to_string()))?;
            if domain != DomainSpec::FullLine {
                report.insert("ey0".into(), serde_json::json!(reg.ey0));
                if let Some(eya) = reg.eya {
                    report.insert("eya".into(), serde_json::json!(eya));
                }
            }
        } else {
            report.insert("C".into(), serde_json::Value::String("inf".into()));
        }
    }
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(report))
        .expect("report serializes");
    text.push('\n');
    write_artifact(pick(&args.report, &cfg.outputs.report), &text)?;

    let grid = parse_grid(args.grid.as_deref(), cfg.grid)?;
    let csv_path = pick(&args.csv, &cfg.outputs.csv).map(Path::to_path_buf);
    if let Some(g) = grid {
        if csv_path.is_some() {
            let positive = profile.positive_recurrent();
            let mut out = String::from("x,beta,eta,h,cdf\n");
            for x in grid_points(g) {
                if !domain.contains(x) {
                    continue;
                }
                let beta = cfg.field.eval_beta(x).expect("grid point in domain");
                let eta = profile.scale_function(x).expect("grid point in domain");
                let h = if recurrent {
                    profile
                        .stationary_density(x)
                        .map(|v| v.to_string())
                        .unwrap_or_default()
                } else {
                    String::new()
                };
                let cdf = if positive {
                    profile
                        .stationary_cdf(x)
                        .map(|v| v.to_string())
                        .unwrap_or_default()
                } else {
                    String::new()
                };
                let _ = writeln!(out, "{x},{beta},{eta},{h},{cdf}");
            }
            write_artifact(csv_path.as_deref(), &out)?;
        }
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    validated(&cfg.field)?;
    let mut sim = cfg.sim;
    if let Some(p) = args.paths {
        sim.path_count = p;
    }
    if let Some(dt) = args.dt {
        sim.dt = dt;
    }
    if let Some(h) = args.horizon {
        sim.horizon = h;
    }
    if let Some(s) = args.seed {
        sim.seed = s;
    }

    let start = if args.stationary {
        Start::Stationary
    } else {
        Start::Fixed(args.x0.unwrap_or(0.0))
    };

    let mut out = String::from("path,endpoint_z,endpoint_x_raw,y_net,exploded\n");
    match cfg.field.domain {
        DomainSpec::FullLine => {
            let x0 = match start {
                Start::Fixed(v) => v,
                Start::Stationary => {
                    return Err(CliError::Run(
                        "stationary start is for reflected domains".to_string(),
                    ))
                }
            };
            for i in 0..sim.path_count {
                let p = simulate_unreflected(&cfg.field, &sim, x0, i as u64)
                    .map_err(|e| CliError::Run(e.to_string()))?;
                let _ = writeln!(
                    out,
                    "{i},{},{},0,{}",
                    p.z.last().unwrap(),
                    p.x_raw.last().unwrap(),
                    p.exploded.is_some()
                );
            }
        }
        _ => {
            let ens = run_ensemble(&cfg.field, &sim, start, None)
                .map_err(|e| CliError::Run(e.to_string()))?;
            for (i, s) in ens.stats.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{i},{},{},{},{}",
                    s.endpoint_z, s.endpoint_x_raw, s.y_horizon, s.exploded
                );
            }
        }
    }
    write_artifact(pick(&args.out, &cfg.outputs.out), &out)?;

    if let Some(traj_path) = pick(&args.traj, &cfg.outputs.traj).map(Path::to_path_buf) {
        let x0 = match start {
            Start::Fixed(v) => v,
            Start::Stationary => {
                return Err(CliError::Run(
                    "trajectory dumps need a fixed --x0".to_string(),
                ))
            }
        };
        let sample: PathSample = match cfg.field.domain {
            DomainSpec::HalfLine => simulate_one_sided(&cfg.field, &sim, x0, args.traj_path),
            DomainSpec::Interval { .. } => simulate_two_sided(&cfg.field, &sim, x0, args.traj_path),
            DomainSpec::FullLine => simulate_unreflected(&cfg.field, &sim, x0, args.traj_path),
        }
        .map_err(|e| CliError::Run(e.to_string()))?;
        let mut out = String::from("time,z,y_net\n");
        for k in 0..sample.times.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                sample.times[k], sample.z[k], sample.y_net[k]
            );
        }
        write_artifact(Some(&traj_path), &out)?;
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    validated(&cfg.field)?;
    let mut sim = cfg.sim;
    if let Some(p) = args.paths {
        sim.path_count = p;
    }
    if let Some(dt) = args.dt {
        sim.dt = dt;
    }
    if let Some(h) = args.horizon {
        sim.horizon = h;
    }
    if let Some(b) = args.burn_in {
        sim.burn_in = b;
    }
    if let Some(s) = args.seed {
        sim.seed = s;
    }

    let report = verify_stationarity(&cfg.field, &sim, args.ks_threshold)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_artifact(pick(&args.report, &cfg.outputs.report), &text)?;
    eprintln!(
        "verify: passed={} ks={} (threshold {})",
        report.passed, report.ks_distance, report.ks_threshold
    );

    if let Some(hist_path) = pick(&args.hist, &cfg.outputs.hist).map(Path::to_path_buf) {
        let profile =
            AnalyticProfile::new(cfg.field.clone()).map_err(|e| CliError::Run(e.to_string()))?;
        let hist_spec = match cfg.field.domain {
            DomainSpec::Interval { a } => refdiff_core::HistogramSpec {
                lo: 0.0,
                hi: a,
                bins: 200,
            },
            _ => refdiff_core::HistogramSpec {
                lo: 0.0,
                hi: profile
                    .sample_stationary(0.999)
                    .map_err(|e| CliError::Run(e.to_string()))?,
                bins: 200,
            },
        };
        let ens = run_ensemble(&cfg.field, &sim, Start::Stationary, Some(hist_spec))
            .map_err(|e| CliError::Run(e.to_string()))?;
        let counts = ens.merged_hist().expect("histogram was requested");
        let total: u64 = counts.iter().sum();
        let width = (hist_spec.hi - hist_spec.lo) / hist_spec.bins as f64;
        let c = profile
            .normalizing_constant()
            .map_err(|e| CliError::Run(e.to_string()))?;
        let mut out = String::from("bin_lo,bin_hi,simulated_density,analytic_density\n");
        for (i, &n) in counts.iter().enumerate() {
            let lo = hist_spec.lo + width * i as f64;
            let hi = lo + width;
            let sim_density = n as f64 / (total as f64 * width);
            let mid = 0.5 * (lo + hi);
            let analytic = profile
                .stationary_density(mid)
                .map(|h| h / c)
                .unwrap_or(f64::NAN);
            let _ = writeln!(out, "{lo},{hi},{sim_density},{analytic}");
        }
        write_artifact(Some(&hist_path), &out)?;
    }
    Ok(())
}

fn transform(args: &TransformArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    validated(&cfg.field)?;
    let ext: ExtendedField = match args.mode.as_str() {
        "sym" => symmetrize(&cfg.field),
        "fold" => fold_extend(&cfg.field),
        "periodic" => fold_extend_periodic(&cfg.field),
        other => {
            return Err(CliError::Usage(format!(
                "mode must be sym, fold, or periodic, got \"{other}\""
            )))
        }
    }
    .map_err(|e| CliError::Run(e.to_string()))?;

    let default_grid = match cfg.field.domain {
        DomainSpec::Interval { a } => GridSpec {
            min: -a,
            max: 3.0 * a,
            count: 201,
        },
        _ => GridSpec {
            min: -5.0,
            max: 5.0,
            count: 201,
        },
    };
    let grid = parse_grid(args.grid.as_deref(), cfg.grid)?.unwrap_or(default_grid);
    let mut out = String::from("x,b,sigma\n");
    for x in grid_points(grid) {
        let _ = writeln!(out, "{x},{},{}", ext.eval_b(x), ext.eval_sigma(x));
    }
    write_artifact(pick(&args.dump, &cfg.outputs.dump), &out)
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("REFDIFF_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Simulate(args) => simulate(args),
        Command::Verify(args) => verify(args),
        Command::Transform(args) => transform(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            e.exit_code()
        }
    }
}
