//! Data model for compressive eigenvector estimation.
//!
//! A data sample `v` living in `R^d` is never observed directly. At each step
//! the sensor projects it onto two directions: the current estimate `u` and a
//! random probe `b` drawn uniformly from the unit sphere of the orthogonal
//! complement of `u`. This module owns:
//!
//! - [`UnitVector`], the carrier for estimates, probes, and eigenvectors;
//! - [`SpectralCovariance`], a covariance stored as eigenvalues plus an
//!   orthonormal basis (never densified outside of tests);
//! - [`compress`] / [`impute`], the two-projection measurement and the
//!   rank-two reconstruction it supports;
//! - [`SpectralCovariance::drift_step`], a norm-preserving rotation of the
//!   whole eigenbasis used to model a slowly moving leading eigenvector.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::Result;

/// Tolerance for unit-norm and orthogonality checks on inputs.
const UNIT_TOL: f64 = 1e-9;
/// Norms at or below this are treated as zero.
const MIN_NORM: f64 = 1e-12;
/// Basis deviation that triggers re-orthonormalization during drift.
const REORTH_TRIGGER: f64 = 1e-8;
/// Rejection-sampling attempts before giving up on a direction.
const MAX_DRAWS: usize = 64;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// A vector on the unit sphere of `R^d`, `d >= 2`.
///
/// Construction enforces the norm within `1e-9`; all operations that produce
/// unit vectors renormalize, so downstream consumers can rely on the
/// invariant without rechecking it.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Wraps coordinates that are already unit length.
    ///
    /// Errors with [`Error::DimensionTooSmall`] for `d < 2` and
    /// [`Error::NotUnit`] when the norm deviates from 1 by more than `1e-9`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionTooSmall { got: coords.len() });
        }
        let n = norm(&coords);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm: n });
        }
        Ok(Self { coords })
    }

    /// The `i`-th standard basis vector of `R^d`.
    pub fn axis(d: usize, i: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall { got: d });
        }
        assert!(i < d, "axis index {i} out of range for dimension {d}");
        let mut coords = vec![0.0; d];
        coords[i] = 1.0;
        Ok(Self { coords })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinates as a slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    /// Inner product with an arbitrary vector of the same dimension.
    pub fn dot(&self, other: &[f64]) -> f64 {
        assert_eq!(self.dim(), other.len(), "dimension mismatch in dot product");
        dot(&self.coords, other)
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Scales a nonzero vector to unit length.
///
/// Errors with [`Error::DegenerateInput`] when the norm is at or below
/// `1e-12`, and [`Error::DimensionTooSmall`] for `d < 2`.
pub fn normalize(v: &[f64]) -> Result<UnitVector> {
    if v.len() < 2 {
        return Err(Error::DimensionTooSmall { got: v.len() });
    }
    let n = norm(v);
    if !n.is_finite() || n <= MIN_NORM {
        return Err(Error::DegenerateInput { norm: n });
    }
    Ok(UnitVector {
        coords: v.iter().map(|x| x / n).collect(),
    })
}

/// Squared alignment of an estimate against a reference direction.
///
/// Returns `(cos2, sin2)` where `cos2 = <u, reference>^2` clamped to `[0, 1]`
/// and `sin2 = 1 - cos2`, so the two always sum to 1 exactly. Both are
/// invariant under sign flips of either argument.
pub fn alignment(u: &UnitVector, reference: &UnitVector) -> Result<(f64, f64)> {
    if u.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: u.dim(),
        });
    }
    let c = dot(u.as_slice(), reference.as_slice());
    let cos2 = (c * c).clamp(0.0, 1.0);
    Ok((cos2, 1.0 - cos2))
}

/// Eigenvalues below the top two of a covariance spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum TailSpec {
    /// All `d - 2` remaining eigenvalues equal `lambda2` (flat tail).
    Flat,
    /// Explicit eigenvalues `lambda_3 >= ... >= lambda_d`, each in
    /// `[0, lambda2]`. Must have length `d - 2`.
    Explicit(Vec<f64>),
}

/// How the eigenbasis of a covariance is oriented in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Eigenvectors are the standard basis axes.
    Identity,
    /// A uniformly random orthonormal basis drawn from the stream with this
    /// seed (Gram-Schmidt factorization of a square Gaussian matrix, which
    /// leaves the sign convention positive and the distribution uniform).
    Seeded(u64),
}

/// A covariance matrix in spectral form: eigenvalues in descending order and
/// the matching orthonormal eigenbasis.
///
/// The dense matrix is never materialized here; sampling, projection, and
/// drift all work column by column. Tests that need the dense form rebuild
/// it from the spectral data.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCovariance {
    eigenvalues: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl SpectralCovariance {
    /// Builds a covariance from its top two eigenvalues, a tail
    /// specification, and a basis orientation.
    ///
    /// Requires `d >= 2` and `lambda1 > lambda2 >= 0`; the tail must descend
    /// from `lambda2` and stay nonnegative.
    pub fn new(
        d: usize,
        lambda1: f64,
        lambda2: f64,
        tail: TailSpec,
        orientation: Orientation,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall { got: d });
        }
        if !(lambda1.is_finite() && lambda2.is_finite()) || lambda1 <= lambda2 || lambda2 < 0.0 {
            return Err(Error::InvalidSpectrum { lambda1, lambda2 });
        }
        let mut eigenvalues = Vec::with_capacity(d);
        eigenvalues.push(lambda1);
        eigenvalues.push(lambda2);
        match tail {
            TailSpec::Flat => eigenvalues.resize(d, lambda2),
            TailSpec::Explicit(tail) => {
                if tail.len() != d - 2 {
                    return Err(Error::DimensionMismatch {
                        expected: d - 2,
                        got: tail.len(),
                    });
                }
                let mut prev = lambda2;
                for (i, &value) in tail.iter().enumerate() {
                    if !value.is_finite() || value < 0.0 || value > prev {
                        return Err(Error::InvalidTail { index: i, value });
                    }
                    prev = value;
                    eigenvalues.push(value);
                }
            }
        }
        let basis = match orientation {
            Orientation::Identity => (0..d)
                .map(|i| {
                    let mut col = vec![0.0; d];
                    col[i] = 1.0;
                    col
                })
                .collect(),
            Orientation::Seeded(seed) => haar_basis(d, &mut crate::rng::stream(seed)),
        };
        let deviation = max_gram_deviation(&basis);
        assert!(
            deviation <= UNIT_TOL,
            "constructed basis deviates from orthonormal by {deviation:e}"
        );
        Ok(Self { eigenvalues, basis })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The `i`-th eigenvector.
    pub fn basis_column(&self, i: usize) -> &[f64] {
        &self.basis[i]
    }

    /// The eigenvector attached to the largest eigenvalue.
    pub fn leading(&self) -> UnitVector {
        UnitVector {
            coords: self.basis[0].clone(),
        }
    }

    /// Spectral gap `lambda1 - lambda2`.
    pub fn gap(&self) -> f64 {
        self.eigenvalues[0] - self.eigenvalues[1]
    }

    /// Draws one sample `v = sum_i sqrt(lambda_i) z_i w_i` with `z_i` i.i.d.
    /// standard normal. Exactly `d` normal variates are consumed per call,
    /// independent of the spectrum.
    pub fn sample_data<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let mut v = vec![0.0; d];
        for (lambda, col) in self.eigenvalues.iter().zip(&self.basis) {
            let scale = lambda.sqrt() * rng.sample::<f64, _>(StandardNormal);
            for (vi, wi) in v.iter_mut().zip(col) {
                *vi += scale * wi;
            }
        }
        v
    }

    /// Rotates the whole eigenbasis so the leading eigenvector moves to a
    /// uniformly random direction at squared overlap `1 - velocity` with its
    /// previous position. Eigenvalues are untouched; with `velocity = 0` the
    /// covariance is returned unchanged, bit for bit.
    ///
    /// The rotation acts only in the plane spanned by the old leading vector
    /// and a random orthogonal direction, so orthonormality is preserved up
    /// to rounding; accumulated deviation beyond `1e-8` triggers a
    /// Gram-Schmidt re-orthonormalization pass.
    pub fn drift_step<R: Rng + ?Sized>(
        &self,
        drift: &DriftParams,
        rng: &mut R,
    ) -> Result<SpectralCovariance> {
        let v = drift.velocity();
        if v == 0.0 {
            return Ok(self.clone());
        }
        let ubar = self.leading();
        let q = sample_orthogonal(&ubar, rng)?;
        let (cos_t, sin_t) = ((1.0 - v).sqrt(), v.sqrt());
        let mut basis: Vec<Vec<f64>> = self
            .basis
            .iter()
            .map(|w| {
                let a = dot(w, ubar.as_slice());
                let b = dot(w, q.as_slice());
                // w + (cos-1)(a*ubar + b*q) + sin(a*q - b*ubar): the plane
                // rotation carrying ubar onto cos*ubar + sin*q.
                w.iter()
                    .zip(ubar.as_slice().iter().zip(q.as_slice()))
                    .map(|(wi, (ui, qi))| {
                        wi + (cos_t - 1.0) * (a * ui + b * qi) + sin_t * (a * qi - b * ui)
                    })
                    .collect()
            })
            .collect();
        if max_gram_deviation(&basis) > REORTH_TRIGGER {
            gram_schmidt(&mut basis);
        }
        Ok(SpectralCovariance {
            eigenvalues: self.eigenvalues.clone(),
            basis,
        })
    }
}

/// Per-step drift intensity for a moving covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    velocity: f64,
}

impl DriftParams {
    /// Validates `0 <= velocity < 1`: the squared per-step displacement of
    /// the leading eigenvector.
    pub fn new(velocity: f64) -> Result<Self> {
        if !velocity.is_finite() || !(0.0..1.0).contains(&velocity) {
            return Err(Error::InvalidVelocity { velocity });
        }
        Ok(Self { velocity })
    }

    /// The squared per-step displacement `V`.
    pub fn velocity(&self) -> f64 {
        self.velocity
    }
}

/// One two-dimensional compressive observation of a hidden sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Projection onto the estimate, `g = <u, v>`.
    pub g: f64,
    /// Projection onto the probe, `h = <b, v>`.
    pub h: f64,
    /// The probe direction the sample was measured against.
    pub probe: UnitVector,
}

/// The rank-two reconstruction of a sample from its two projections.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedSample {
    /// Least-squares weight of the sample on the estimate direction.
    pub weight: f64,
    /// `weight * u`: the component explained by the estimate.
    pub projection: Vec<f64>,
    /// Back-projected measurement residual, orthogonal to the estimate.
    pub residual: Vec<f64>,
    /// `projection + residual`, equal to `(u u^T + b b^T) v` up to rounding.
    pub imputed: Vec<f64>,
}

/// Draws a direction uniformly from the unit sphere of `R^d`.
pub fn sample_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitVector> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { got: d });
    }
    for _ in 0..MAX_DRAWS {
        if let Ok(u) = normalize(&gaussian_vector(d, rng)) {
            return Ok(u);
        }
    }
    Err(Error::SamplingFailed {
        attempts: MAX_DRAWS,
    })
}

/// Draws a probe uniformly from the unit sphere of the orthogonal complement
/// of `u`. For `d = 2` the complement is one-dimensional and the result is
/// one of the two antipodal directions with equal probability.
pub fn sample_orthogonal<R: Rng + ?Sized>(u: &UnitVector, rng: &mut R) -> Result<UnitVector> {
    for _ in 0..MAX_DRAWS {
        let mut g = gaussian_vector(u.dim(), rng);
        let a = dot(&g, u.as_slice());
        for (gi, ui) in g.iter_mut().zip(u.as_slice()) {
            *gi -= a * ui;
        }
        if let Ok(b) = normalize(&g) {
            return Ok(b);
        }
    }
    Err(Error::SamplingFailed {
        attempts: MAX_DRAWS,
    })
}

fn check_probe_pair(u: &UnitVector, b: &UnitVector, v: &[f64]) -> Result<()> {
    if b.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: b.dim(),
        });
    }
    if v.len() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.len(),
        });
    }
    let d = dot(u.as_slice(), b.as_slice());
    if d.abs() > UNIT_TOL {
        return Err(Error::NonOrthogonalProbe { dot: d });
    }
    Ok(())
}

/// Projects a hidden sample onto the estimate and the probe.
///
/// This is the only place the algorithm touches `v`; everything downstream
/// sees the two scalars and the probe direction.
pub fn compress(u: &UnitVector, b: &UnitVector, v: &[f64]) -> Result<Measurement> {
    check_probe_pair(u, b, v)?;
    Ok(Measurement {
        g: dot(u.as_slice(), v),
        h: dot(b.as_slice(), v),
        probe: b.clone(),
    })
}

/// Reconstructs the part of a sample visible through the measurement pair.
///
/// With the two-row operator `A = [u^T; b^T]`, the reconstruction is the
/// standard decompose-then-backproject chain: the least-squares weight of
/// `v` on the measured image of `u`, the projection it explains, and the
/// back-projected residual `A^T (A v - A u w)`. The chain collapses to
/// `(u u^T + b b^T) v` up to rounding, which tests verify numerically.
pub fn impute(u: &UnitVector, b: &UnitVector, v: &[f64]) -> Result<ImputedSample> {
    check_probe_pair(u, b, v)?;
    // Images under A of the estimate and the sample.
    let au = [
        dot(u.as_slice(), u.as_slice()),
        dot(b.as_slice(), u.as_slice()),
    ];
    let av = [dot(u.as_slice(), v), dot(b.as_slice(), v)];
    // Pseudoinverse of the single nonzero column au applied to av.
    let weight = (au[0] * av[0] + au[1] * av[1]) / (au[0] * au[0] + au[1] * au[1]);
    let projection: Vec<f64> = u.as_slice().iter().map(|ui| weight * ui).collect();
    // Residual in measurement space, then back through A^T.
    let res = [av[0] - weight * au[0], av[1] - weight * au[1]];
    let residual: Vec<f64> = u
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(ui, bi)| res[0] * ui + res[1] * bi)
        .collect();
    let imputed = projection
        .iter()
        .zip(&residual)
        .map(|(p, r)| p + r)
        .collect();
    Ok(ImputedSample {
        weight,
        projection,
        residual,
        imputed,
    })
}

/// Uniformly random orthonormal basis: Gram-Schmidt applied to a square
/// matrix of i.i.d. standard normals. The positive-diagonal convention of
/// Gram-Schmidt makes the result exactly uniform over orthonormal bases.
fn haar_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut col = gaussian_vector(d, rng);
        for prev in &basis {
            let a = dot(&col, prev);
            for (ci, pi) in col.iter_mut().zip(prev) {
                *ci -= a * pi;
            }
        }
        // Degenerate residuals have probability zero; redraw if one occurs.
        if let Ok(q) = normalize(&col) {
            basis.push(q.coords);
        }
    }
    basis
}

/// Modified Gram-Schmidt, in place. Column directions are preserved up to
/// the orthogonalization order; norms are reset to 1.
fn gram_schmidt(basis: &mut [Vec<f64>]) {
    for j in 0..basis.len() {
        let (done, rest) = basis.split_at_mut(j);
        let col = &mut rest[0];
        for prev in done.iter() {
            let a = dot(col, prev);
            for (ci, pi) in col.iter_mut().zip(prev) {
                *ci -= a * pi;
            }
        }
        let n = norm(col);
        assert!(
            n > MIN_NORM,
            "basis column collapsed during re-orthonormalization"
        );
        for ci in col.iter_mut() {
            *ci /= n;
        }
    }
}

/// Largest entrywise deviation of the Gram matrix from the identity.
fn max_gram_deviation(basis: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, wi) in basis.iter().enumerate() {
        for (j, wj) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(wi, wj) - target).abs());
        }
    }
    worst
}
