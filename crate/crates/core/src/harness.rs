//! Monte Carlo experiment harness.
//!
//! [`run_trials`] executes many independent trajectories of the same
//! configuration, one random stream per trial derived from a single base
//! seed, and aggregates them into per-checkpoint mean and 20th/80th
//! percentile series with the matching theory envelope attached. Results
//! export to CSV or JSON with full float fidelity and can be re-imported
//! bit for bit.
//!
//! Trials may run in parallel: each trial's stream depends only on
//! `(base_seed, trial_index)` and aggregation walks trials in index order,
//! so the output is identical to serial execution.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::error::Error;
use crate::model::{
    sample_orthogonal, DriftParams, Orientation, SpectralCovariance, TailSpec, UnitVector,
};
use crate::rng::trial_stream;
use crate::theory::{bound_curve, moment_envelopes, BoundParams, MomentEnvelope, ProblemParams};
use crate::tracker::{run, Algorithm, StepSchedule, Trajectory};
use crate::Result;

/// Serializable description of a step-size schedule, resolved against the
/// problem parameters when an experiment starts.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    /// Two-phase rule: warmup constant, then the decaying local rule.
    Theorem,
    /// The warmup constant forever.
    WarmupConst,
    /// A constant normalized step.
    Constant { eta_hat: f64 },
    /// The classical `scale / t` decay.
    InverseT { scale: f64 },
}

impl ScheduleSpec {
    fn build(&self, p: &ProblemParams) -> Result<StepSchedule> {
        match self {
            ScheduleSpec::Theorem => Ok(StepSchedule::theorem(p)),
            ScheduleSpec::WarmupConst => Ok(StepSchedule::warmup_constant(p)),
            ScheduleSpec::Constant { eta_hat } => StepSchedule::constant_hat(p, *eta_hat),
            ScheduleSpec::InverseT { scale } => StepSchedule::inverse_t(*scale),
        }
    }
}

impl std::fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleSpec::Theorem => f.write_str("theorem"),
            ScheduleSpec::WarmupConst => f.write_str("warmup-const"),
            ScheduleSpec::Constant { eta_hat } => write!(f, "constant(eta_hat={eta_hat})"),
            ScheduleSpec::InverseT { scale } => write!(f, "inverse-t(scale={scale})"),
        }
    }
}

/// Full description of one multi-trial experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Ambient dimension, at least 2.
    pub d: usize,
    /// Largest eigenvalue.
    pub lambda1: f64,
    /// Second eigenvalue.
    pub lambda2: f64,
    /// Eigenvalues below the top two.
    pub tail: TailSpec,
    /// Orientation of the eigenbasis.
    pub orientation: Orientation,
    /// Which update rule to run.
    pub algo: Algorithm,
    /// Step-size schedule.
    pub schedule: ScheduleSpec,
    /// Iterations per trial.
    pub iters: u64,
    /// Number of independent trials.
    pub trials: u64,
    /// Base seed; trial `i` runs on the stream derived from `(base_seed, i)`.
    pub base_seed: u64,
    /// Checkpoint stride; 0 picks `max(iters / 1000, 1)`.
    pub stride: u64,
    /// Per-step squared drift of the leading eigenvector, if any.
    pub drift_velocity: Option<f64>,
}

impl Default for ExperimentConfig {
    /// The desk-scale reference experiment: `d = 10`, eigenvalues `2` and
    /// `1` with a flat tail, adaptive updates on the two-phase schedule,
    /// 20 trials of 200k iterations, seed 42, automatic stride.
    fn default() -> Self {
        Self {
            d: 10,
            lambda1: 2.0,
            lambda2: 1.0,
            tail: TailSpec::Flat,
            orientation: Orientation::Identity,
            algo: Algorithm::Adaptive,
            schedule: ScheduleSpec::Theorem,
            iters: 200_000,
            trials: 20,
            base_seed: 42,
            stride: 0,
            drift_velocity: None,
        }
    }
}

impl ExperimentConfig {
    /// The checkpoint stride this configuration resolves to.
    pub fn effective_stride(&self) -> u64 {
        if self.stride == 0 {
            (self.iters / 1000).max(1)
        } else {
            self.stride
        }
    }

    /// Whether the aggregate carries the theory envelope (adaptive updates
    /// on the two-phase schedule) or a zero placeholder column.
    pub fn carries_bound(&self) -> bool {
        self.algo == Algorithm::Adaptive && self.schedule == ScheduleSpec::Theorem
    }

    /// One-line fingerprint of everything that determines the output.
    pub fn digest(&self) -> String {
        let tail = match &self.tail {
            TailSpec::Flat => "flat".to_string(),
            TailSpec::Explicit(v) => format!(
                "explicit[{}]",
                v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
            ),
        };
        let orientation = match self.orientation {
            Orientation::Identity => "identity".to_string(),
            Orientation::Seeded(seed) => format!("seeded({seed})"),
        };
        let drift = match self.drift_velocity {
            None => "none".to_string(),
            Some(v) => v.to_string(),
        };
        format!(
            "d={} lambda1={} lambda2={} tail={} orientation={} algo={} schedule={} \
             iters={} trials={} seed={} stride={} drift={} bound={}",
            self.d,
            self.lambda1,
            self.lambda2,
            tail,
            orientation,
            self.algo,
            self.schedule,
            self.iters,
            self.trials,
            self.base_seed,
            self.effective_stride(),
            drift,
            if self.carries_bound() {
                "theorem"
            } else {
                "zero"
            },
        )
    }

    fn prepare(
        &self,
    ) -> Result<(
        ProblemParams,
        SpectralCovariance,
        StepSchedule,
        Option<DriftParams>,
    )> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.iters == 0 {
            return Err(Error::InvalidConfig("iters must be at least 1".into()));
        }
        let params = ProblemParams::new(self.d, self.lambda1, self.lambda2)?;
        let cov = SpectralCovariance::new(
            self.d,
            self.lambda1,
            self.lambda2,
            self.tail.clone(),
            self.orientation,
        )?;
        let schedule = self.schedule.build(&params)?;
        let drift = self.drift_velocity.map(DriftParams::new).transpose()?;
        Ok((params, cov, schedule, drift))
    }
}

/// One aggregated checkpoint across all trials of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Iteration count.
    pub t: u64,
    /// Mean squared misalignment across trials.
    pub mean_sin2: f64,
    /// 20th percentile across trials (linear interpolation, inclusive).
    pub p20: f64,
    /// 80th percentile across trials.
    pub p80: f64,
    /// Theory envelope at `t`, or 0 when the run does not carry one.
    pub bound_sin2: f64,
}

/// Aggregated output of a multi-trial experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSeries {
    /// Fingerprint of the generating configuration. Empty after a CSV
    /// import, which stores rows only.
    #[serde(rename = "config")]
    pub digest: String,
    /// One row per checkpoint, ascending in `t`.
    pub rows: Vec<Row>,
}

/// Linear-interpolation percentile on sorted data (the inclusive
/// convention): rank `q (n - 1)` interpolated between the neighboring
/// order statistics. With 20 trials, `q = 0.2` lands between the 4th and
/// 5th smallest values at weight 0.8.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    assert!((0.0..=1.0).contains(&q), "quantile {q} outside [0, 1]");
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Runs every trial of the experiment and aggregates the trajectories.
///
/// Trials execute in parallel; determinism is anchored by per-trial
/// streams and index-ordered aggregation, so repeated calls (and serial
/// re-runs) produce bitwise-identical output.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<AggregateSeries> {
    let (params, cov, schedule, drift) = cfg.prepare()?;
    let stride = cfg.effective_stride();
    let trajectories: Vec<Trajectory> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_stream(cfg.base_seed, trial);
            run(
                &cov,
                drift.as_ref(),
                &schedule,
                cfg.algo,
                cfg.iters,
                stride,
                None,
                &mut rng,
            )
            .map_err(|e| Error::Trial {
                trial,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let bound = cfg.carries_bound().then(|| BoundParams::new(&params));
    let grid = &trajectories[0].checkpoints;
    let mut rows = Vec::with_capacity(grid.len());
    let mut values = vec![0.0f64; trajectories.len()];
    for (idx, head) in grid.iter().enumerate() {
        for (slot, traj) in values.iter_mut().zip(&trajectories) {
            let c = &traj.checkpoints[idx];
            assert_eq!(c.t, head.t, "trials disagree on the checkpoint grid");
            *slot = c.sin2;
        }
        let mean_sin2 = values.iter().sum::<f64>() / values.len() as f64;
        let mut sorted = values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        rows.push(Row {
            t: head.t,
            mean_sin2,
            p20: percentile(&sorted, 0.2),
            p80: percentile(&sorted, 0.8),
            bound_sin2: bound
                .as_ref()
                .map_or(0.0, |b| bound_curve(&params, b, head.t)),
        });
    }
    Ok(AggregateSeries {
        digest: cfg.digest(),
        rows,
    })
}

/// Mean of `mean_sin2` over the trailing fraction of checkpoints.
///
/// `tail_frac` must lie in `(0, 1]`; the window always contains at least
/// one row.
pub fn steady_state(series: &AggregateSeries, tail_frac: f64) -> Result<f64> {
    if series.rows.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !tail_frac.is_finite() || tail_frac <= 0.0 || tail_frac > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "tail fraction {tail_frac} must lie in (0, 1]"
        )));
    }
    let n = series.rows.len();
    let k = ((tail_frac * n as f64).ceil() as usize).clamp(1, n);
    let tail = &series.rows[n - k..];
    Ok(tail.iter().map(|r| r.mean_sin2).sum::<f64>() / k as f64)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

struct Accumulator {
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            sum: 0.0,
            sum_sq: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn estimate(&self, n: u64) -> Estimate {
        let n = n as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Measured projection moments at a fixed estimate, against their analytic
/// envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// Number of `(sample, probe)` draws.
    pub samples: u64,
    /// Squared alignment of the fixed estimate with the leading eigenvector.
    pub c2: f64,
    /// Raw step used for the update-coefficient moments.
    pub eta: f64,
    /// Estimate-projection second moment `E[g^2]`.
    pub g2: Estimate,
    /// Probe-projection second moment `E[h^2]`.
    pub h2: Estimate,
    /// Cross moment `E[g h]`, zero by probe symmetry.
    pub gh: Estimate,
    /// Signal cross moment `E[c z g h]`, at least `gap c^2 (1 - c^2)/(d-1)`.
    pub czgh: Estimate,
    /// Largest entrywise deviation of the probe second moment from
    /// `(I - u u^T)/(d - 1)`.
    pub probe_max_dev: f64,
    /// Analytic envelopes: `a2` at the estimate's alignment, `b2` at the
    /// average probe overlap `(1 - c^2)/(d - 1)`.
    pub envelope: MomentEnvelope,
    /// Mean update coefficient along the estimate, `E[1 + eta g^2]`.
    pub x_mean: Estimate,
    /// Mean squared update coefficient along the probe, `E[(eta g h)^2]`.
    pub y2_mean: Estimate,
}

/// Estimates the projection moments that the one-step analysis relies on.
///
/// Holds `u` fixed and, for each of `n` rounds, draws a fresh probe and a
/// fresh sample, accumulating the moments of `g = <u, v>`, `h = <b, v>`,
/// and the probe overlap `z = <w1, b>` with the leading eigenvector.
pub fn moment_diagnostics<R: Rng + ?Sized>(
    u: &UnitVector,
    cov: &SpectralCovariance,
    eta: f64,
    n: u64,
    rng: &mut R,
) -> Result<MomentReport> {
    if u.dim() != cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            got: u.dim(),
        });
    }
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidStepSize {
            value: eta,
            reason: "diagnostic step must be positive and finite",
        });
    }
    if n < 2 {
        return Err(Error::InvalidConfig(
            "moment diagnostics need at least 2 samples".into(),
        ));
    }
    let d = cov.dim();
    let params = ProblemParams::new(d, cov.eigenvalues()[0], cov.eigenvalues()[1])?;
    let leading = cov.leading();
    let c = leading.dot(u.as_slice());
    let c2 = (c * c).clamp(0.0, 1.0);

    let mut g2 = Accumulator::new();
    let mut h2 = Accumulator::new();
    let mut gh = Accumulator::new();
    let mut czgh = Accumulator::new();
    let mut x_mean = Accumulator::new();
    let mut y2_mean = Accumulator::new();
    let mut probe_sq = vec![vec![0.0f64; d]; d];

    for _ in 0..n {
        let b = sample_orthogonal(u, rng)?;
        let v = cov.sample_data(rng);
        let g = u.dot(&v);
        let h = b.dot(&v);
        let z = leading.dot(b.as_slice());
        g2.push(g * g);
        h2.push(h * h);
        gh.push(g * h);
        czgh.push(c * z * g * h);
        x_mean.push(1.0 + eta * g * g);
        y2_mean.push(eta * g * h * eta * g * h);
        for (i, bi) in b.as_slice().iter().enumerate() {
            for (j, bj) in b.as_slice().iter().enumerate() {
                probe_sq[i][j] += bi * bj;
            }
        }
    }

    // E[b b^T] should match the isotropic projector (I - u u^T)/(d - 1).
    let mut probe_max_dev = 0.0f64;
    let scale = 1.0 / (d as f64 - 1.0);
    for (i, row) in probe_sq.iter().enumerate() {
        for (j, sum) in row.iter().enumerate() {
            let target = scale * ((i == j) as u8 as f64 - u.as_slice()[i] * u.as_slice()[j]);
            probe_max_dev = probe_max_dev.max((sum / n as f64 - target).abs());
        }
    }

    let z2_avg = (1.0 - c2) / (d as f64 - 1.0);
    Ok(MomentReport {
        samples: n,
        c2,
        eta,
        g2: g2.estimate(n),
        h2: h2.estimate(n),
        gh: gh.estimate(n),
        czgh: czgh.estimate(n),
        probe_max_dev,
        envelope: moment_envelopes(c2, z2_avg, &params),
        x_mean: x_mean.estimate(n),
        y2_mean: y2_mean.estimate(n),
    })
}

/// On-disk formats for aggregate series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// Header `t,mean_sin2,p20,p80,bound_sin2`, one row per checkpoint,
    /// floats at 17 significant digits, `\n` line endings.
    Csv,
    /// `{"config": ..., "rows": [...]}` with full float fidelity.
    Json,
}

const CSV_HEADER: &str = "t,mean_sin2,p20,p80,bound_sin2";

/// Writes a non-empty series to disk in the chosen format.
pub fn export(series: &AggregateSeries, format: ExportFormat, path: &Path) -> Result<()> {
    if series.rows.is_empty() {
        return Err(Error::EmptySeries);
    }
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out: Vec<u8> = Vec::new();
    match format {
        ExportFormat::Csv => {
            out.extend_from_slice(CSV_HEADER.as_bytes());
            out.push(b'\n');
            for r in &series.rows {
                // 16 digits after the point in scientific notation: 17
                // significant digits, enough to reproduce any f64 exactly.
                writeln!(
                    out,
                    "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                    r.t, r.mean_sin2, r.p20, r.p80, r.bound_sin2
                )
                .expect("writing to a Vec cannot fail");
            }
        }
        ExportFormat::Json => {
            out = serde_json::to_vec_pretty(series)?;
            out.push(b'\n');
        }
    }
    fs::write(path, out).map_err(io_err)
}

/// Reads back a CSV export. The digest is not stored in CSV and comes back
/// empty; row values are reproduced exactly.
pub fn import_csv(path: &Path) -> Result<AggregateSeries> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => {
            return Err(Error::Format {
                line: 1,
                reason: format!(
                    "expected header {CSV_HEADER:?}, found {:?}",
                    other.unwrap_or("")
                ),
            });
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format {
                line: line_no,
                reason: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let bad = |what: &str| Error::Format {
            line: line_no,
            reason: format!("unparseable {what}"),
        };
        rows.push(Row {
            t: fields[0].parse().map_err(|_| bad("t"))?,
            mean_sin2: fields[1].parse().map_err(|_| bad("mean_sin2"))?,
            p20: fields[2].parse().map_err(|_| bad("p20"))?,
            p80: fields[3].parse().map_err(|_| bad("p80"))?,
            bound_sin2: fields[4].parse().map_err(|_| bad("bound_sin2"))?,
        });
    }
    Ok(AggregateSeries {
        digest: String::new(),
        rows,
    })
}

/// Reads back a JSON export, config digest included.
pub fn import_json(path: &Path) -> Result<AggregateSeries> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
