//! Command-line driver for the compressive streaming eigenvector toolkit.
//!
//! Four subcommands cover the workflow end to end:
//!
//! * `bound` prints the convergence constants, the two-phase schedule
//!   parameters, and (with `--velocity`) the drift-tracking plan.
//! * `converge` runs a multi-trial convergence experiment and exports the
//!   aggregate error series.
//! * `track` runs a drifting-target experiment at a constant normalized
//!   step and compares the steady state against the plan.
//! * `diagnose` estimates the projection moments behind the one-step
//!   analysis and checks them against their analytic envelopes.
//!
//! Experiment series go to the `--out` path (a `.json` extension selects
//! JSON, anything else CSV); a one-line JSON summary goes to stdout.
//! Stdout is bitwise-deterministic for fixed flags: wall-clock timing is
//! reported on stderr only. Relative `--out` paths are joined onto the
//! directory named by `COJA_OUT_DIR` when that variable is set.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
//! I/O failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use coja_core::{
    harness::{self, ExperimentConfig, ExportFormat, ScheduleSpec},
    model::{self, Orientation, SpectralCovariance, TailSpec, UnitVector},
    rng,
    theory::{self, BoundParams, ProblemParams},
    tracker::Algorithm,
    Error,
};

/// Environment variable naming a directory that relative `--out` paths
/// are joined onto.
const OUT_DIR_ENV: &str = "COJA_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "coja",
    version,
    about = "Streaming leading-eigenvector estimation from two scalar projections per sample",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the convergence constants and, with --velocity, the tracking plan
    Bound(BoundArgs),
    /// Run a multi-trial convergence experiment and export the error series
    Converge(ConvergeArgs),
    /// Run a drifting-target experiment at a constant normalized step
    Track(TrackArgs),
    /// Estimate the projection moments and check their analytic envelopes
    Diagnose(DiagnoseArgs),
}

/// Spectrum flags shared by every subcommand.
#[derive(Args)]
struct SpectrumArgs {
    /// Ambient dimension (at least 2)
    #[arg(long, default_value_t = 10)]
    d: usize,

    /// Leading eigenvalue
    #[arg(long, default_value_t = 2.0)]
    lambda1: f64,

    /// Second eigenvalue; the tail repeats it
    #[arg(long, default_value_t = 1.0)]
    lambda2: f64,
}

impl SpectrumArgs {
    fn problem(&self) -> coja_core::Result<ProblemParams> {
        ProblemParams::new(self.d, self.lambda1, self.lambda2)
    }
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    spectrum: SpectrumArgs,

    /// Per-step squared drift; adds the tracking plan to the output
    #[arg(long)]
    velocity: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AlgoArg {
    /// Two-projection update that never sees the full sample
    Adaptive,
    /// Classical full-vector update, as a baseline
    Full,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Adaptive => Algorithm::Adaptive,
            AlgoArg::Full => Algorithm::Full,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ScheduleArg {
    /// Warmup-constant step, then the decaying local step
    Theorem,
    /// Warmup-constant step throughout
    WarmupConst,
    /// Fixed normalized step (see --eta-hat)
    Constant,
    /// Normalized step scale/t, as a baseline
    InverseT,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    spectrum: SpectrumArgs,

    /// Update rule
    #[arg(long, value_enum, default_value = "adaptive")]
    algo: AlgoArg,

    /// Step-size schedule
    #[arg(long, value_enum, default_value = "theorem")]
    schedule: ScheduleArg,

    /// Normalized step for the constant schedule (default 1/(2S))
    #[arg(long)]
    eta_hat: Option<f64>,

    /// Scale for the inverse-t schedule (default 1)
    #[arg(long)]
    scale: Option<f64>,

    /// Iterations per trial
    #[arg(long, default_value_t = 200_000)]
    iters: u64,

    /// Number of independent trials
    #[arg(long, default_value_t = 20)]
    trials: u64,

    /// Base seed for the per-trial streams
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Checkpoint stride; 0 picks iters/1000
    #[arg(long, default_value_t = 0)]
    stride: u64,

    /// Output path; .json selects JSON, anything else CSV
    #[arg(long, default_value = "converge.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    spectrum: SpectrumArgs,

    /// Per-step squared drift of the leading eigenvector, in (0, 1)
    #[arg(long)]
    velocity: f64,

    /// Constant normalized step (default: the balanced step sqrt(V/S))
    #[arg(long)]
    eta_hat: Option<f64>,

    /// Iterations per trial
    #[arg(long, default_value_t = 50_000)]
    iters: u64,

    /// Number of independent trials
    #[arg(long, default_value_t = 20)]
    trials: u64,

    /// Base seed for the per-trial streams
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Checkpoint stride; 0 picks iters/1000
    #[arg(long, default_value_t = 0)]
    stride: u64,

    /// Output path; .json selects JSON, anything else CSV
    #[arg(long, default_value = "track.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    spectrum: SpectrumArgs,

    /// Squared alignment of the probed estimate with the leading eigenvector
    #[arg(long, default_value_t = 0.5)]
    c2: f64,

    /// Raw step for the update-coefficient moments (default: the warmup step)
    #[arg(long)]
    eta: Option<f64>,

    /// Number of (sample, probe) draws, at least 10000
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,

    /// Seed for the measurement stream
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bound(args) => cmd_bound(args),
        Command::Converge(args) => cmd_converge(args),
        Command::Track(args) => cmd_track(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Maps library failures onto exit codes: I/O and serialization problems
/// exit 3, everything else is a configuration error and exits 2.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Json(_) | Error::Format { .. } => 3,
        _ => 2,
    }
}

/// Resolves an output path: absolute paths pass through, relative ones
/// are joined onto `COJA_OUT_DIR` when it is set and non-empty.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Picks the export format from the output path's extension.
fn format_for(path: &Path) -> ExportFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => ExportFormat::Json,
        _ => ExportFormat::Csv,
    }
}

fn estimate_json(e: &harness::Estimate) -> serde_json::Value {
    json!({ "value": e.value, "std_error": e.std_error })
}

fn cmd_bound(args: BoundArgs) -> coja_core::Result<()> {
    let p = args.spectrum.problem()?;
    let b = BoundParams::new(&p);
    let mut out = json!({
        "d": p.d(),
        "lambda1": p.lambda1(),
        "lambda2": p.lambda2(),
        "delta": p.gap(),
        "S": p.s(),
        "eta0": p.eta0(),
        "t0": b.t0(),
        "C1": b.c1(),
        "C2": b.c2(),
        "epsilon": b.epsilon(),
    });
    if let Some(velocity) = args.velocity {
        let plan = theory::tracking_plan(&p, velocity)?;
        let fields = out.as_object_mut().expect("bound output is an object");
        fields.insert("velocity".into(), json!(plan.velocity()));
        fields.insert("eta_hat_star".into(), json!(plan.eta_hat_star()));
        fields.insert("s_tilde".into(), json!(plan.s_tilde()));
        fields.insert("x_star".into(), json!(plan.x_star()));
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn cmd_converge(args: ConvergeArgs) -> coja_core::Result<()> {
    if args.eta_hat.is_some() && args.schedule != ScheduleArg::Constant {
        return Err(Error::InvalidConfig(
            "--eta-hat applies to the constant schedule only".into(),
        ));
    }
    if args.scale.is_some() && args.schedule != ScheduleArg::InverseT {
        return Err(Error::InvalidConfig(
            "--scale applies to the inverse-t schedule only".into(),
        ));
    }
    let p = args.spectrum.problem()?;
    let schedule = match args.schedule {
        ScheduleArg::Theorem => ScheduleSpec::Theorem,
        ScheduleArg::WarmupConst => ScheduleSpec::WarmupConst,
        ScheduleArg::Constant => ScheduleSpec::Constant {
            eta_hat: args.eta_hat.unwrap_or(0.5 / p.s()),
        },
        ScheduleArg::InverseT => ScheduleSpec::InverseT {
            scale: args.scale.unwrap_or(1.0),
        },
    };
    let cfg = ExperimentConfig {
        d: args.spectrum.d,
        lambda1: args.spectrum.lambda1,
        lambda2: args.spectrum.lambda2,
        algo: args.algo.into(),
        schedule,
        iters: args.iters,
        trials: args.trials,
        base_seed: args.seed,
        stride: args.stride,
        ..ExperimentConfig::default()
    };

    let started = Instant::now();
    let series = harness::run_trials(&cfg)?;
    let elapsed = started.elapsed();

    let out = resolve_out(&args.out);
    harness::export(&series, format_for(&out), &out)?;

    let last = series.rows.last().expect("aggregation yields rows");
    let bound_cover = if cfg.carries_bound() {
        let covered = series
            .rows
            .iter()
            .filter(|r| r.mean_sin2 <= r.bound_sin2)
            .count();
        json!(covered as f64 / series.rows.len() as f64)
    } else {
        serde_json::Value::Null
    };
    let summary = json!({
        "command": "converge",
        "config": series.digest,
        "checkpoints": series.rows.len(),
        "final_t": last.t,
        "final_mean_sin2": last.mean_sin2,
        "bound_cover": bound_cover,
        "out": out.display().to_string(),
    });
    println!("{summary}");
    eprintln!("wall_time_s={:.3}", elapsed.as_secs_f64());
    Ok(())
}

fn cmd_track(args: TrackArgs) -> coja_core::Result<()> {
    if args.velocity == 0.0 {
        return Err(Error::InvalidConfig(
            "tracking needs a positive --velocity; use `converge` for a static target".into(),
        ));
    }
    let p = args.spectrum.problem()?;
    let plan = theory::tracking_plan(&p, args.velocity)?;
    let eta_hat = args.eta_hat.unwrap_or_else(|| plan.eta_hat_star());
    let cfg = ExperimentConfig {
        d: args.spectrum.d,
        lambda1: args.spectrum.lambda1,
        lambda2: args.spectrum.lambda2,
        algo: Algorithm::Adaptive,
        schedule: ScheduleSpec::Constant { eta_hat },
        iters: args.iters,
        trials: args.trials,
        base_seed: args.seed,
        stride: args.stride,
        drift_velocity: Some(args.velocity),
        ..ExperimentConfig::default()
    };

    let started = Instant::now();
    let series = harness::run_trials(&cfg)?;
    let elapsed = started.elapsed();

    let out = resolve_out(&args.out);
    harness::export(&series, format_for(&out), &out)?;

    let steady = harness::steady_state(&series, 0.2)?;
    let last = series.rows.last().expect("aggregation yields rows");
    let summary = json!({
        "command": "track",
        "config": series.digest,
        "velocity": args.velocity,
        "eta_hat": eta_hat,
        "eta_hat_star": plan.eta_hat_star(),
        "s_tilde": plan.s_tilde(),
        "x_star": plan.x_star(),
        "steady_state_sin2": steady,
        "final_mean_sin2": last.mean_sin2,
        "out": out.display().to_string(),
    });
    println!("{summary}");
    eprintln!("wall_time_s={:.3}", elapsed.as_secs_f64());
    Ok(())
}

/// Unit estimate at squared alignment `c2` with the leading eigenvector,
/// taken in the plane of the top two eigenvectors.
fn estimate_at(cov: &SpectralCovariance, c2: f64) -> coja_core::Result<UnitVector> {
    let a = c2.sqrt();
    let b = (1.0 - c2).sqrt();
    let coords: Vec<f64> = cov
        .basis_column(0)
        .iter()
        .zip(cov.basis_column(1))
        .map(|(x, y)| a * x + b * y)
        .collect();
    model::normalize(&coords)
}

fn cmd_diagnose(args: DiagnoseArgs) -> coja_core::Result<()> {
    if !(0.0..=1.0).contains(&args.c2) {
        return Err(Error::InvalidConfig(format!(
            "--c2 must lie in [0, 1], got {}",
            args.c2
        )));
    }
    if args.samples < 10_000 {
        return Err(Error::InvalidConfig(format!(
            "--samples must be at least 10000 for usable standard errors, got {}",
            args.samples
        )));
    }
    let p = args.spectrum.problem()?;
    let eta = args.eta.unwrap_or_else(|| p.eta0());
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "--eta must be a positive finite step, got {eta}"
        )));
    }
    let cov = SpectralCovariance::new(
        args.spectrum.d,
        args.spectrum.lambda1,
        args.spectrum.lambda2,
        TailSpec::Flat,
        Orientation::Identity,
    )?;
    let u = estimate_at(&cov, args.c2)?;
    let mut stream = rng::stream(args.seed);

    let started = Instant::now();
    let report = harness::moment_diagnostics(&u, &cov, eta, args.samples, &mut stream)?;
    let elapsed = started.elapsed();

    // Two-sided moments get a four-standard-error band; the probe second
    // moment gets the reference ceiling rescaled from a million draws.
    let band = 4.0;
    let czgh_floor = p.gap() * report.c2 * (1.0 - report.c2) / (p.d() - 1) as f64;
    let probe_threshold = 5e-3 * (1_000_000.0 / args.samples as f64).sqrt();
    let g2_pass = report.g2.value <= report.envelope.a2 + band * report.g2.std_error;
    let h2_pass = report.h2.value <= report.envelope.b2 + band * report.h2.std_error;
    let gh_pass = report.gh.value.abs() <= band * report.gh.std_error;
    let czgh_pass = report.czgh.value >= czgh_floor - band * report.czgh.std_error;
    let probe_pass = report.probe_max_dev <= probe_threshold;

    let summary = json!({
        "d": p.d(),
        "lambda1": p.lambda1(),
        "lambda2": p.lambda2(),
        "c2": report.c2,
        "eta": report.eta,
        "samples": report.samples,
        "seed": args.seed,
        "estimates": {
            "g2": estimate_json(&report.g2),
            "h2": estimate_json(&report.h2),
            "gh": estimate_json(&report.gh),
            "czgh": estimate_json(&report.czgh),
            "x_mean": estimate_json(&report.x_mean),
            "y2_mean": estimate_json(&report.y2_mean),
        },
        "envelopes": {
            "a2": report.envelope.a2,
            "b2": report.envelope.b2,
            "czgh_floor": czgh_floor,
        },
        "probe": {
            "max_dev": report.probe_max_dev,
            "threshold": probe_threshold,
        },
        "checks": {
            "g2_within_envelope": g2_pass,
            "h2_within_envelope": h2_pass,
            "gh_centered": gh_pass,
            "czgh_above_floor": czgh_pass,
            "probe_isotropic": probe_pass,
        },
        "all_pass": g2_pass && h2_pass && gh_pass && czgh_pass && probe_pass,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    eprintln!("wall_time_s={:.3}", elapsed.as_secs_f64());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    // ──────────────────────── flag definition ───────────────────────────

    #[test]
    fn the_flag_surface_is_internally_consistent() {
        Cli::command().debug_assert();
    }

    // ────────────────────────── small helpers ───────────────────────────

    #[test]
    fn output_extensions_pick_the_format() {
        assert_eq!(format_for(Path::new("a/series.csv")), ExportFormat::Csv);
        assert_eq!(format_for(Path::new("series.json")), ExportFormat::Json);
        assert_eq!(format_for(Path::new("series.JSON")), ExportFormat::Json);
        assert_eq!(format_for(Path::new("series")), ExportFormat::Csv);
    }

    #[test]
    fn io_failures_exit_three_and_config_failures_two() {
        let io = Error::Io {
            path: PathBuf::from("x"),
            source: std::io::Error::other("boom"),
        };
        assert_eq!(exit_code(&io), 3);
        let json = Error::Json(serde_json::from_str::<serde_json::Value>("{").unwrap_err());
        assert_eq!(exit_code(&json), 3);
        assert_eq!(
            exit_code(&Error::Format {
                line: 1,
                reason: "bad".into()
            }),
            3
        );
        assert_eq!(exit_code(&Error::InvalidConfig("bad".into())), 2);
        assert_eq!(exit_code(&Error::DimensionTooSmall { got: 1 }), 2);
    }

    #[test]
    fn plane_estimates_sit_at_the_requested_alignment() {
        let cov = SpectralCovariance::new(8, 2.0, 1.0, TailSpec::Flat, Orientation::Seeded(5))
            .expect("covariance is valid");
        for c2 in [0.0, 0.3, 1.0] {
            let u = estimate_at(&cov, c2).expect("estimate builds");
            let (cos2, _) = model::alignment(&u, &cov.leading()).expect("alignment is defined");
            assert!(
                (cos2 - c2).abs() < 1e-12,
                "requested {c2}, landed at {cos2}"
            );
        }
    }
}
