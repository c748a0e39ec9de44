//! Property tests for the geometric and analytic invariants that hold for
//! every admissible input, not just the hand-checked examples.

use proptest::prelude::*;

use coja_core::model::{alignment, compress, impute, normalize, UnitVector};
use coja_core::theory::{bound_curve, fixed_point, one_step_bound, BoundParams, ProblemParams};
use coja_core::tracker::{adaptive_step, full_step, StepSchedule, TrackerState};

fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, d)
}

/// A dimension plus three independent coordinate vectors of that length.
fn dim_and_vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=40).prop_flat_map(|d| (coords(d), coords(d), coords(d)))
}

/// Builds an estimate/probe pair from two raw vectors, skipping degenerate
/// draws (zero vectors or parallel pairs).
fn estimate_and_probe(raw_u: &[f64], raw_b: &[f64]) -> Option<(UnitVector, UnitVector)> {
    let u = normalize(raw_u).ok()?;
    let along: f64 = u.dot(raw_b);
    let complement: Vec<f64> = raw_b
        .iter()
        .zip(u.as_slice())
        .map(|(bi, ui)| bi - along * ui)
        .collect();
    let b = normalize(&complement).ok()?;
    // Re-project once: the subtraction above can leave a residual overlap
    // of order eps * |raw_b| / |complement|, which the probe contract caps.
    let overlap = u.dot(b.as_slice());
    let cleaned: Vec<f64> = b
        .as_slice()
        .iter()
        .zip(u.as_slice())
        .map(|(bi, ui)| bi - overlap * ui)
        .collect();
    let b = normalize(&cleaned).ok()?;
    Some((u, b))
}

/// Admissible problem parameters over a broad range.
fn problems() -> impl Strategy<Value = ProblemParams> {
    (2usize..=100, 0.0f64..10.0, 0.01f64..10.0)
        .prop_map(|(d, lambda2, gap)| ProblemParams::new(d, lambda2 + gap, lambda2).unwrap())
}

proptest! {
    #[test]
    fn normalization_preserves_direction((v, _, _) in dim_and_vectors()) {
        prop_assume!(coja_core::model::normalize(&v).is_ok());
        let u = normalize(&v).unwrap();
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let back: f64 = u.dot(&v);
        prop_assert!((back - n).abs() <= 1e-9 * n.max(1.0));
        let unit: f64 = u.dot(u.as_slice());
        prop_assert!((unit - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn alignment_is_a_symmetric_partition((a, b, _) in dim_and_vectors()) {
        prop_assume!(normalize(&a).is_ok() && normalize(&b).is_ok());
        let u = normalize(&a).unwrap();
        let r = normalize(&b).unwrap();
        let (cos2, sin2) = alignment(&u, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&cos2));
        prop_assert!((0.0..=1.0).contains(&sin2));
        prop_assert_eq!(cos2 + sin2, 1.0);
        prop_assert_eq!(alignment(&r, &u).unwrap(), (cos2, sin2));
    }

    #[test]
    fn imputation_matches_the_plane_projection((raw_u, raw_b, v) in dim_and_vectors()) {
        let Some((u, b)) = estimate_and_probe(&raw_u, &raw_b) else {
            return Ok(());
        };
        let m = compress(&u, &b, &v).unwrap();
        let s = impute(&u, &b, &v).unwrap();
        let scale = m.g.abs().max(m.h.abs()).max(1.0);
        for i in 0..v.len() {
            let direct = m.g * u.as_slice()[i] + m.h * b.as_slice()[i];
            prop_assert!((s.imputed[i] - direct).abs() <= 1e-12 * scale);
        }
        prop_assert!(u.dot(&s.residual).abs() <= 1e-9 * scale);
    }

    #[test]
    fn compressive_update_is_the_full_update_on_the_imputed_sample(
        (raw_u, raw_b, v) in dim_and_vectors(),
        eta in 1e-3f64..0.5,
    ) {
        let Some((u, b)) = estimate_and_probe(&raw_u, &raw_b) else {
            return Ok(());
        };
        let state = TrackerState::new(u.clone());
        let m = compress(&u, &b, &v).unwrap();
        let s = impute(&u, &b, &v).unwrap();
        let via_adaptive = adaptive_step(&state, &m, eta).unwrap();
        let via_full = full_step(&state, &s.imputed, eta).unwrap();
        for (a, f) in via_adaptive
            .estimate
            .as_slice()
            .iter()
            .zip(via_full.estimate.as_slice())
        {
            prop_assert!((a - f).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_step_fixed_point_is_stationary(
        p in problems(),
        frac in 0.01f64..=1.0,
    ) {
        let eta_hat = frac / p.s();
        let x = fixed_point(p.s(), eta_hat).unwrap();
        let c2 = 1.0 - x;
        let next = one_step_bound(c2, eta_hat, p.s());
        prop_assert!((next - c2).abs() <= 1e-12);
    }

    #[test]
    fn error_envelope_is_monotone_and_bounded(
        p in problems(),
        t1 in 0u64..1_000_000,
        dt in 0u64..1_000_000,
    ) {
        let b = BoundParams::new(&p);
        let lo = bound_curve(&p, &b, t1);
        let hi = bound_curve(&p, &b, t1 + dt);
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(hi <= lo + 1e-15);
    }

    #[test]
    fn two_phase_schedule_is_continuous_at_the_boundary(p in problems()) {
        let sched = StepSchedule::theorem(&p);
        let t0 = BoundParams::new(&p).t0();
        let warmup_side = if t0 > 0 { sched.eta(t0 - 1).unwrap() } else { p.eta0() };
        let local_side = sched.eta(t0).unwrap();
        prop_assert!((warmup_side - local_side).abs() <= 1e-12 * warmup_side);
        // Both sit at the normalized cap 1/(2S).
        let cap = local_side * p.gap() / (p.d() as f64 - 1.0);
        prop_assert!((cap - 1.0 / (2.0 * p.s())).abs() <= 1e-15);
    }
}
