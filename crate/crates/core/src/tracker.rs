//! Per-sample update rules and step-size schedules.
//!
//! The estimator never sees a data sample directly. Each iteration observes
//! the two projections `(g, h)` of a hidden sample onto the current estimate
//! `u` and a random orthogonal probe `b`, then moves the estimate inside the
//! plane those two directions span:
//!
//! ```text
//! u' = normalize( u * (1 + eta g^2) + b * (eta g h) )
//! ```
//!
//! [`adaptive_step`] consumes only `(g, h, b)`; [`full_step`] is the
//! classical update `u' = normalize(u + eta v <v, u>)` for a fully observed
//! sample. Feeding `full_step` the rank-two reconstruction of a measured
//! sample reproduces `adaptive_step` exactly up to rounding, which the test
//! suite checks, so the compressive update is the full update restricted to
//! the measured plane.
//!
//! [`run`] drives either rule over a (possibly drifting) covariance and
//! records the alignment trajectory on a fixed checkpoint grid.

use rand::Rng;

use crate::error::Error;
use crate::model::{
    alignment, compress, normalize, sample_orthogonal, sample_sphere, DriftParams, Measurement,
    SpectralCovariance, UnitVector,
};
use crate::theory::{BoundParams, ProblemParams};
use crate::Result;

/// Which update rule a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Two-projection update from compressive measurements.
    Adaptive,
    /// Classical update from fully observed samples.
    Full,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Adaptive => "adaptive",
            Algorithm::Full => "full",
        })
    }
}

/// Converts a normalized step `eta_hat` into the raw step
/// `eta = eta_hat (d - 1) / gap`.
///
/// The theory quotes every admissible-range statement in terms of
/// `eta_hat`; update rules consume raw steps.
pub fn eta_hat_to_eta(eta_hat: f64, d: usize, gap: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { got: d });
    }
    if !gap.is_finite() || gap <= 0.0 {
        return Err(Error::InvalidSpectrum {
            lambda1: gap,
            lambda2: 0.0,
        });
    }
    if !eta_hat.is_finite() || eta_hat < 0.0 {
        return Err(Error::InvalidStepSize {
            value: eta_hat,
            reason: "normalized step must be finite and nonnegative",
        });
    }
    Ok(eta_hat * (d as f64 - 1.0) / gap)
}

/// Step-size schedule: a map from the iteration counter to the raw step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    /// The warmup constant `eta0 = (d - 1)/(2 S gap)` at every iteration.
    WarmupConstant { eta0: f64 },
    /// The decaying local-phase rule `2 (d - 1) / (gap (4S + (t - t0)))`,
    /// defined only for `t >= t0`.
    TheoremLocal { d: usize, gap: f64, s: f64, t0: u64 },
    /// The full two-phase rule: warmup constant before `t0`, the decaying
    /// local rule from `t0` on. At the hand-over both phases agree at the
    /// normalized cap `1/(2S)`.
    TheoremFull {
        d: usize,
        gap: f64,
        s: f64,
        t0: u64,
        eta0: f64,
    },
    /// A caller-chosen constant, stored in both normalized and raw form.
    ConstantHat { eta_hat: f64, eta: f64 },
    /// The classical decay `scale / t`, defined for `t >= 1`.
    InverseT { scale: f64 },
}

impl StepSchedule {
    /// Warmup constant schedule for the given problem.
    pub fn warmup_constant(p: &ProblemParams) -> Self {
        StepSchedule::WarmupConstant { eta0: p.eta0() }
    }

    /// Local-phase-only schedule for the given problem.
    pub fn theorem_local(p: &ProblemParams) -> Self {
        StepSchedule::TheoremLocal {
            d: p.d(),
            gap: p.gap(),
            s: p.s(),
            t0: BoundParams::new(p).t0(),
        }
    }

    /// Full two-phase schedule for the given problem.
    pub fn theorem(p: &ProblemParams) -> Self {
        StepSchedule::TheoremFull {
            d: p.d(),
            gap: p.gap(),
            s: p.s(),
            t0: BoundParams::new(p).t0(),
            eta0: p.eta0(),
        }
    }

    /// Constant schedule at normalized step `eta_hat`.
    pub fn constant_hat(p: &ProblemParams, eta_hat: f64) -> Result<Self> {
        if !eta_hat.is_finite() || eta_hat <= 0.0 {
            return Err(Error::InvalidStepSize {
                value: eta_hat,
                reason: "constant normalized step must be positive",
            });
        }
        Ok(StepSchedule::ConstantHat {
            eta_hat,
            eta: eta_hat_to_eta(eta_hat, p.d(), p.gap())?,
        })
    }

    /// Classical `scale / t` schedule.
    pub fn inverse_t(scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidStepSize {
                value: scale,
                reason: "inverse-t scale must be positive",
            });
        }
        Ok(StepSchedule::InverseT { scale })
    }

    /// Raw step size at iteration `t`.
    ///
    /// `TheoremLocal` rejects `t < t0` and `InverseT` rejects `t = 0`; the
    /// other variants are total.
    pub fn eta(&self, t: u64) -> Result<f64> {
        match *self {
            StepSchedule::WarmupConstant { eta0 } => Ok(eta0),
            StepSchedule::TheoremLocal { d, gap, s, t0 } => {
                if t < t0 {
                    return Err(Error::PhaseRange {
                        t,
                        t0,
                        phase: "local",
                    });
                }
                Ok(2.0 * (d as f64 - 1.0) / (gap * (4.0 * s + (t - t0) as f64)))
            }
            StepSchedule::TheoremFull {
                d,
                gap,
                s,
                t0,
                eta0,
            } => {
                if t < t0 {
                    Ok(eta0)
                } else {
                    Ok(2.0 * (d as f64 - 1.0) / (gap * (4.0 * s + (t - t0) as f64)))
                }
            }
            StepSchedule::ConstantHat { eta, .. } => Ok(eta),
            StepSchedule::InverseT { scale } => {
                if t == 0 {
                    return Err(Error::PhaseRange {
                        t,
                        t0: 1,
                        phase: "inverse-t",
                    });
                }
                Ok(scale / t as f64)
            }
        }
    }

    /// Raw step for the update that advances `completed` iterations to
    /// `completed + 1`. The classical decay counts updates from 1, the
    /// other schedules from 0.
    fn eta_for_update(&self, completed: u64) -> Result<f64> {
        match self {
            StepSchedule::InverseT { .. } => self.eta(completed + 1),
            _ => self.eta(completed),
        }
    }

    /// Short stable name used in config digests.
    pub fn name(&self) -> &'static str {
        match self {
            StepSchedule::WarmupConstant { .. } => "warmup-const",
            StepSchedule::TheoremLocal { .. } => "theorem-local",
            StepSchedule::TheoremFull { .. } => "theorem",
            StepSchedule::ConstantHat { .. } => "constant",
            StepSchedule::InverseT { .. } => "inverse-t",
        }
    }
}

/// The estimator state: the current direction and how many updates built it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    /// Current estimate of the leading eigenvector.
    pub estimate: UnitVector,
    /// Number of updates applied so far.
    pub iteration: u64,
}

impl TrackerState {
    /// Starts a tracker at the given direction.
    pub fn new(estimate: UnitVector) -> Self {
        Self {
            estimate,
            iteration: 0,
        }
    }
}

fn check_step(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidStepSize {
            value: eta,
            reason: "update step must be positive and finite",
        });
    }
    Ok(())
}

/// Applies the two-projection update.
///
/// Only the measured scalars `(g, h)` and the probe direction enter; the
/// hidden sample does not. The pre-normalization iterate
/// `u (1 + eta g^2) + b (eta g h)` keeps a coefficient of at least 1 on
/// `u`, so normalization never degenerates. When `g = 0` the estimate is
/// returned unchanged.
pub fn adaptive_step(state: &TrackerState, m: &Measurement, eta: f64) -> Result<TrackerState> {
    check_step(eta)?;
    let u = &state.estimate;
    if m.probe.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: m.probe.dim(),
        });
    }
    let overlap = u.dot(m.probe.as_slice());
    if overlap.abs() > 1e-9 {
        return Err(Error::NonOrthogonalProbe { dot: overlap });
    }
    let along_u = 1.0 + eta * m.g * m.g;
    let along_b = eta * m.g * m.h;
    let raw: Vec<f64> = u
        .as_slice()
        .iter()
        .zip(m.probe.as_slice())
        .map(|(ui, bi)| along_u * ui + along_b * bi)
        .collect();
    let estimate = normalize(&raw).expect("pre-normalization iterate has norm >= 1");
    Ok(TrackerState {
        estimate,
        iteration: state.iteration + 1,
    })
}

/// Applies the classical fully observed update
/// `u' = normalize(u + eta v <v, u>)`.
///
/// The pre-normalization iterate is `(I + eta v v^T) u`, whose norm is at
/// least 1, so normalization never degenerates here either.
pub fn full_step(state: &TrackerState, v: &[f64], eta: f64) -> Result<TrackerState> {
    check_step(eta)?;
    let u = &state.estimate;
    if v.len() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.len(),
        });
    }
    let w = u.dot(v);
    let raw: Vec<f64> = u
        .as_slice()
        .iter()
        .zip(v)
        .map(|(ui, vi)| ui + eta * vi * w)
        .collect();
    let estimate = normalize(&raw).expect("pre-normalization iterate has norm >= 1");
    Ok(TrackerState {
        estimate,
        iteration: state.iteration + 1,
    })
}

/// One aligned point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    /// Iteration count at which the alignment was read.
    pub t: u64,
    /// Squared misalignment against the covariance's leading eigenvector.
    pub sin2: f64,
    /// Squared alignment; `sin2 + cos2 = 1`.
    pub cos2: f64,
}

/// Alignment history of a single run plus where the estimate ended up.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Checkpoints at `t = 0`, every `stride` iterations, and `t = iters`.
    pub checkpoints: Vec<Checkpoint>,
    /// The estimate after the last iteration.
    pub final_estimate: UnitVector,
}

/// Runs one trajectory.
///
/// Per iteration: the covariance drifts (when `drift` is present), one
/// sample is drawn from it, the chosen rule updates the estimate with the
/// scheduled step, and the alignment against the covariance's current
/// leading eigenvector is recorded whenever the counter lands on the
/// checkpoint grid. The adaptive rule draws its probe uniformly from the
/// complement of the current estimate; the full rule consumes the raw
/// sample. When `u0` is `None` the start is uniform on the sphere.
///
/// All randomness flows through `rng` in a fixed order (start, then per
/// iteration: drift, sample, probe), so a given generator state fully
/// determines the trajectory.
#[allow(clippy::too_many_arguments)]
pub fn run<R: Rng + ?Sized>(
    cov: &SpectralCovariance,
    drift: Option<&DriftParams>,
    schedule: &StepSchedule,
    algo: Algorithm,
    iters: u64,
    stride: u64,
    u0: Option<UnitVector>,
    rng: &mut R,
) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be at least 1".into()));
    }
    let d = cov.dim();
    let start = match u0 {
        Some(u) => {
            if u.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: u.dim(),
                });
            }
            u
        }
        None => sample_sphere(d, rng)?,
    };
    let mut cov_t = cov.clone();
    let mut state = TrackerState::new(start);
    let mut checkpoints = Vec::with_capacity((iters / stride + 2) as usize);
    let record = |checkpoints: &mut Vec<Checkpoint>,
                  state: &TrackerState,
                  cov_t: &SpectralCovariance|
     -> Result<()> {
        let (cos2, sin2) = alignment(&state.estimate, &cov_t.leading())?;
        checkpoints.push(Checkpoint {
            t: state.iteration,
            sin2,
            cos2,
        });
        Ok(())
    };
    record(&mut checkpoints, &state, &cov_t)?;
    for _ in 0..iters {
        if let Some(drift) = drift {
            cov_t = cov_t.drift_step(drift, rng)?;
        }
        let v = cov_t.sample_data(rng);
        let eta = schedule.eta_for_update(state.iteration)?;
        state = match algo {
            Algorithm::Adaptive => {
                let b = sample_orthogonal(&state.estimate, rng)?;
                let m = compress(&state.estimate, &b, &v)?;
                adaptive_step(&state, &m, eta)?
            }
            Algorithm::Full => full_step(&state, &v, eta)?,
        };
        if state.iteration.is_multiple_of(stride) || state.iteration == iters {
            record(&mut checkpoints, &state, &cov_t)?;
        }
    }
    Ok(Trajectory {
        final_estimate: state.estimate,
        checkpoints,
    })
}
