//! Closed-form constants, step-size rules, and finite-sample error bounds
//! for the two-projection streaming estimator.
//!
//! Everything here is deterministic arithmetic on problem parameters
//! `(d, lambda1, lambda2)`. The central quantity is the noise constant
//!
//! ```text
//! S = lambda1 * lambda2 * d^2 / gap^2 + 13 * lambda1 * d / gap
//! ```
//!
//! which controls the warmup length, the admissible step sizes, and both
//! pieces of the expected-error envelope that the Monte Carlo harness plots
//! against measured trajectories. Steps are expressed in normalized form
//! `eta_hat = gap * eta / (d - 1)`; the guarantees hold for
//! `eta_hat <= 1/(2S)` and steady states exist for `eta_hat <= 1/S`.

use crate::error::Error;
use crate::Result;

/// Problem-level constants derived from the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    d: usize,
    lambda1: f64,
    lambda2: f64,
    gap: f64,
    s: f64,
}

impl ProblemParams {
    /// Derives the gap and the noise constant from the top two eigenvalues.
    ///
    /// Requires `d >= 2` and `lambda1 > lambda2 >= 0`. The resulting noise
    /// constant always satisfies `S >= 26` because `lambda1 * d / gap >= 2`.
    pub fn new(d: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall { got: d });
        }
        if !(lambda1.is_finite() && lambda2.is_finite()) || lambda1 <= lambda2 || lambda2 < 0.0 {
            return Err(Error::InvalidSpectrum { lambda1, lambda2 });
        }
        let gap = lambda1 - lambda2;
        let dd = d as f64;
        let s = lambda1 * lambda2 * dd * dd / (gap * gap) + 13.0 * lambda1 * dd / gap;
        assert!(s >= 2.0, "noise constant S = {s} fell below its floor");
        Ok(Self {
            d,
            lambda1,
            lambda2,
            gap,
            s,
        })
    }

    /// Ambient dimension.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Largest eigenvalue.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Second eigenvalue.
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Spectral gap `lambda1 - lambda2`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Noise constant `S`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Warmup step size `eta0 = (d - 1) / (2 S gap)`, the raw step whose
    /// normalized form is `1/(2S)`.
    pub fn eta0(&self) -> f64 {
        (self.d as f64 - 1.0) / (2.0 * self.s * self.gap)
    }
}

/// Constants of the two-phase expected-error envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    t0: u64,
    c1: f64,
    c2: f64,
    epsilon: f64,
}

impl BoundParams {
    /// Derives the warmup length and the local-phase constants.
    ///
    /// `t0 = ceil((4S + 1) ln(d/2))`, which is 0 at `d = 2` where the
    /// initial alignment already sits at the warmup target.
    pub fn new(p: &ProblemParams) -> Self {
        let s = p.s();
        let raw = (4.0 * s + 1.0) * (p.d() as f64 / 2.0).ln();
        let t0 = raw.ceil() as u64;
        Self {
            t0,
            c1: 4.0 * s + 2.0,
            c2: (4.0 * s + 1.0) * (4.0 * s + 1.0) / 2.0,
            epsilon: 1.0 / p.d() as f64,
        }
    }

    /// Number of warmup iterations before the local phase begins.
    pub fn t0(&self) -> u64 {
        self.t0
    }

    /// First-order coefficient of the local-phase envelope.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// Second-order coefficient of the local-phase envelope.
    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Expected initial squared alignment `1/d` of a uniform start.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Warmup-phase envelope on the expected squared misalignment:
/// `1 - epsilon (1 + 1/(4S))^t`, floored at 0.
///
/// Defined for `0 <= t <= t0`; querying past the warmup boundary is an
/// error.
pub fn warmup_bound(p: &ProblemParams, b: &BoundParams, t: u64) -> Result<f64> {
    if t > b.t0 {
        return Err(Error::PhaseRange {
            t,
            t0: b.t0,
            phase: "warmup",
        });
    }
    let growth = (1.0 + 1.0 / (4.0 * p.s())).powf(t as f64);
    Ok((1.0 - b.epsilon * growth).max(0.0))
}

/// Local-phase envelope `C1/D + C2/D^2` with `D = 4S + (t - t0)`, clipped
/// at 0.5 (the alignment level the warmup hands over).
///
/// Defined for `t >= t0`; querying inside the warmup is an error.
pub fn local_bound(b: &BoundParams, s: f64, t: u64) -> Result<f64> {
    if t < b.t0 {
        return Err(Error::PhaseRange {
            t,
            t0: b.t0,
            phase: "local",
        });
    }
    let d_t = 4.0 * s + (t - b.t0) as f64;
    Ok((b.c1 / d_t + b.c2 / (d_t * d_t)).min(0.5))
}

/// The full two-phase envelope: warmup piece (kept at or above 0.5, its
/// hand-over level) before `t0`, local piece from `t0` on. Non-increasing
/// in `t` and valued in `[0, 1]`.
pub fn bound_curve(p: &ProblemParams, b: &BoundParams, t: u64) -> f64 {
    if t < b.t0 {
        warmup_bound(p, b, t)
            .expect("t < t0 is inside the warmup phase")
            .max(0.5)
    } else {
        local_bound(b, p.s(), t).expect("t >= t0 is inside the local phase")
    }
}

/// Stationary point `x = S eta_hat / 2` of the one-step error recursion
/// under a constant normalized step.
///
/// Requires `0 < eta_hat <= 1/S`, the range on which the stationary point
/// is stable.
pub fn fixed_point(s: f64, eta_hat: f64) -> Result<f64> {
    assert!(s > 0.0, "noise constant must be positive, got {s}");
    if !eta_hat.is_finite() || eta_hat <= 0.0 || eta_hat > 1.0 / s {
        return Err(Error::InvalidStepSize {
            value: eta_hat,
            reason: "constant normalized step must lie in (0, 1/S]",
        });
    }
    Ok(s * eta_hat / 2.0)
}

/// Drift-aware steady-state plan: the normalized step that balances
/// tracking lag against sampling noise, and the error it settles at.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingPlan {
    velocity: f64,
    eta_hat_star: f64,
    s_tilde: f64,
    x_star: f64,
}

impl TrackingPlan {
    /// Squared per-step drift `V` the plan was built for.
    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    /// Optimal constant normalized step `sqrt(V/S)`.
    pub fn eta_hat_star(&self) -> f64 {
        self.eta_hat_star
    }

    /// Drift-inflated noise constant `S + V/eta_hat^2 + 2V/eta_hat` at the
    /// optimal step.
    pub fn s_tilde(&self) -> f64 {
        self.s_tilde
    }

    /// Predicted steady-state misalignment `V + sqrt(V S)`.
    pub fn x_star(&self) -> f64 {
        self.x_star
    }
}

/// Builds the steady-state plan for tracking a leading eigenvector that
/// moves by squared displacement `velocity` per step.
///
/// At `velocity = 0` the plan degenerates to the stationary case: zero
/// step, zero predicted error, and the noise constant uninflated.
pub fn tracking_plan(p: &ProblemParams, velocity: f64) -> Result<TrackingPlan> {
    if !velocity.is_finite() || !(0.0..1.0).contains(&velocity) {
        return Err(Error::InvalidVelocity { velocity });
    }
    let s = p.s();
    if velocity == 0.0 {
        return Ok(TrackingPlan {
            velocity,
            eta_hat_star: 0.0,
            s_tilde: s,
            x_star: 0.0,
        });
    }
    let eta_hat_star = (velocity / s).sqrt();
    let s_tilde = s + velocity / (eta_hat_star * eta_hat_star) + 2.0 * velocity / eta_hat_star;
    let x_star = velocity + (velocity * s).sqrt();
    Ok(TrackingPlan {
        velocity,
        eta_hat_star,
        s_tilde,
        x_star,
    })
}

/// Second-moment envelopes for the two projections at a given geometry:
/// `a2` bounds `E[g^2]` at squared alignment `c2`, `b2` bounds `E[h^2]` at
/// squared probe overlap `z2`. Both are tight when the spectrum has a flat
/// tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEnvelope {
    /// `gap * c2 + lambda2`.
    pub a2: f64,
    /// `gap * z2 + lambda2`.
    pub b2: f64,
}

/// Evaluates the projection second-moment envelopes.
///
/// # Panics
///
/// Panics when `c2` or `z2` leaves `[0, 1]`.
pub fn moment_envelopes(c2: f64, z2: f64, p: &ProblemParams) -> MomentEnvelope {
    assert!((0.0..=1.0).contains(&c2), "c2 = {c2} must lie in [0, 1]");
    assert!((0.0..=1.0).contains(&z2), "z2 = {z2} must lie in [0, 1]");
    MomentEnvelope {
        a2: p.gap() * c2 + p.lambda2(),
        b2: p.gap() * z2 + p.lambda2(),
    }
}

/// One-step lower bound on the expected squared alignment after an update
/// at normalized step `eta_hat` from squared alignment `c2`:
/// `c2 + 2 eta_hat c2 (1 - c2) - S c2 eta_hat^2`.
///
/// # Panics
///
/// Panics when `c2` leaves `[0, 1]` or the step or noise constant is not
/// positive.
pub fn one_step_bound(c2: f64, eta_hat: f64, s: f64) -> f64 {
    assert!((0.0..=1.0).contains(&c2), "c2 = {c2} must lie in [0, 1]");
    assert!(
        eta_hat > 0.0,
        "normalized step must be positive, got {eta_hat}"
    );
    assert!(s > 0.0, "noise constant must be positive, got {s}");
    c2 + 2.0 * eta_hat * c2 * (1.0 - c2) - s * c2 * eta_hat * eta_hat
}
