//! Streaming estimation of the leading eigenvector of a covariance matrix
//! when each incoming sample is observed only through two scalar projections:
//! one along the current estimate and one along a random orthogonal probe.
//!
//! The crate is organized in four layers:
//!
//! - [`model`]: the data model (unit vectors, spectrally parameterized
//!   covariances, compressive measurements, imputation, covariance drift).
//! - [`theory`]: closed-form constants, step-size rules, and the finite-sample
//!   error bound that the experiments are checked against.
//! - [`tracker`]: the per-sample update rules and step-size schedules, plus a
//!   single-trajectory runner.
//! - [`harness`]: seeded multi-trial Monte Carlo experiments, aggregation into
//!   mean/percentile series, moment diagnostics, and CSV/JSON export.
//!
//! Everything that consumes randomness takes an explicit generator, and the
//! harness derives one independent stream per trial from a single base seed,
//! so every result in this crate is reproducible bit for bit.
//!
//! # Example
//!
//! ```
//! use coja_core::{
//!     model::{Orientation, SpectralCovariance, TailSpec},
//!     theory::ProblemParams,
//!     tracker::{run, Algorithm, StepSchedule},
//! };
//!
//! let params = ProblemParams::new(10, 2.0, 1.0).unwrap();
//! let cov = SpectralCovariance::new(
//!     10, 2.0, 1.0, TailSpec::Flat, Orientation::Identity,
//! ).unwrap();
//! let schedule = StepSchedule::theorem(&params);
//! let mut rng = coja_core::rng::stream(7);
//! let traj = run(&cov, None, &schedule, Algorithm::Adaptive, 5_000, 500, None, &mut rng)
//!     .unwrap();
//! let last = traj.checkpoints.last().unwrap();
//! assert!(last.sin2 < 0.9);
//! ```

pub mod error;
pub mod harness;
pub mod model;
pub mod rng;
pub mod theory;
pub mod tracker;

pub use error::Error;
pub use harness::{
    AggregateSeries, Estimate, ExperimentConfig, ExportFormat, MomentReport, Row, ScheduleSpec,
};
pub use model::{
    DriftParams, ImputedSample, Measurement, Orientation, SpectralCovariance, TailSpec, UnitVector,
};
pub use theory::{BoundParams, MomentEnvelope, ProblemParams, TrackingPlan};
pub use tracker::{Algorithm, Checkpoint, StepSchedule, TrackerState, Trajectory};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
