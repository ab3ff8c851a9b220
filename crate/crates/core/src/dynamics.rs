//! The symplectic billiard map in the tangent-angle parametrization.
//!
//! Three consecutive boundary points `gamma(t1), gamma(t2), gamma(t3)` form an
//! orbit segment when the tangent at the middle point is parallel to the chord
//! joining its neighbours:
//!
//! ```text
//! det(e_{t2}, gamma(t3) - gamma(t1)) = 0,    t3 in (t2, t2 + pi).
//! ```
//!
//! Along `s in (t2, t2 + pi)` the left-hand side has derivative
//! `rho(s) sin(s - t2) > 0`, so the root is unique and bracketed.
//! All parameters are stored lifted to the real line.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::SupportCurve;
use crate::error::{Error, Result};
use crate::geometry::{lift_near, tangent_angle_of, AffineMap, PlanePoint};

/// Phase points closer than this to either boundary of the phase space are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
pub const DEFAULT_MAP_TOL: f64 = 1e-12;
pub const DEFAULT_CONJUGATE_TOL: f64 = 1e-12;

const BISECTION_WIDTH: f64 = 1e-3;
const MAX_ROOT_ITER: usize = 200;

/// A pair of lifted tangent angles `(t1, t2)` with `0 < t2 - t1 < pi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t1: f64,
    pub t2: f64,
}

impl PhasePoint {
    /// Checked constructor; rejects points within [`BOUNDARY_MARGIN`] of the
    /// boundaries `t2 = t1` and `t2 = t1 + pi`.
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        let pp = Self { t1, t2 };
        pp.check()?;
        Ok(pp)
    }

    pub fn gap(&self) -> f64 {
        self.t2 - self.t1
    }

    pub fn check(&self) -> Result<()> {
        let gap = self.gap();
        if !(self.t1.is_finite() && self.t2.is_finite())
            || !(gap > BOUNDARY_MARGIN && gap < PI - BOUNDARY_MARGIN)
        {
            return Err(Error::DegeneratePhasePoint {
                t1: self.t1,
                t2: self.t2,
                margin: BOUNDARY_MARGIN,
            });
        }
        Ok(())
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self {
            t1: self.t1 + by,
            t2: self.t2 + by,
        }
    }
}

/// Root of an increasing function on `[lo, hi]` with a sign change.
///
/// `g` returns `(value, derivative)`. Bisection narrows the bracket to
/// [`BISECTION_WIDTH`], then Newton steps run inside the bracket, falling
/// back to bisection whenever a step would leave it.
fn solve_increasing<G: Fn(f64) -> (f64, f64)>(
    g: G,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let (g_lo, _) = g(lo);
    let (g_hi, _) = g(hi);
    if !(g_lo < 0.0) {
        return Err(Error::BracketFailure { far_value: g_lo });
    }
    if !(g_hi > 0.0) {
        return Err(Error::BracketFailure { far_value: g_hi });
    }

    let mut iterations = 0;
    while hi - lo > BISECTION_WIDTH && iterations < MAX_ROOT_ITER {
        let mid = 0.5 * (lo + hi);
        let (v, _) = g(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    let mut x = 0.5 * (lo + hi);
    let mut last = f64::INFINITY;
    while iterations < MAX_ROOT_ITER {
        iterations += 1;
        let (v, dv) = g(x);
        last = v;
        if v == 0.0 {
            return Ok(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / dv;
        let next = if dv > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.abs().max(1.0)
            || hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0)
        {
            let (v, _) = g(x);
            if v.abs() < tol {
                return Ok(x);
            }
            last = v;
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations,
        residual: last.abs(),
    })
}

/// Chord-condition residual `det(e_{t_mid}, gamma(t_next) - gamma(t_prev))`.
pub fn chord_residual(curve: &SupportCurve, t_prev: f64, t_mid: f64, t_next: f64) -> f64 {
    let k = turns(t_mid);
    let (t_prev, t_mid, t_next) = (t_prev - k, t_mid - k, t_next - k);
    PlanePoint::tangent_dir(t_mid).det(curve.eval_point(t_next) - curve.eval_point(t_prev))
}

/// Whole turns in `t`, subtracted before evaluating so that long lifted
/// orbits keep full precision in the trigonometric terms.
fn turns(t: f64) -> f64 {
    TAU * (t / TAU).floor()
}

/// One step `(t1, t2) -> (t2, t3)` of the billiard map.
pub fn billiard_map(curve: &SupportCurve, pp: PhasePoint, tol: f64) -> Result<PhasePoint> {
    pp.check()?;
    let k = turns(pp.t2);
    let next = reduced_map(curve, pp.shifted(-k), tol)?;
    Ok(PhasePoint {
        t1: pp.t2,
        t2: next + k,
    })
}

fn reduced_map(curve: &SupportCurve, pp: PhasePoint, tol: f64) -> Result<f64> {
    let start = curve.eval_point(pp.t1);
    let e = PlanePoint::tangent_dir(pp.t2);
    let t3 = solve_increasing(
        |s| {
            let jet = curve.eval_jet(s);
            (e.det(jet.point - start), jet.rho * (s - pp.t2).sin())
        },
        pp.t2,
        pp.t2 + PI,
        tol,
    )?;
    Ok(t3)
}

/// Inverse step `(t1, t2) -> (t0, t1)` with `t0 in (t1 - pi, t1)`.
pub fn billiard_map_inverse(curve: &SupportCurve, pp: PhasePoint, tol: f64) -> Result<PhasePoint> {
    pp.check()?;
    let k = turns(pp.t1);
    let prev = reduced_inverse(curve, pp.shifted(-k), tol)?;
    Ok(PhasePoint {
        t1: prev + k,
        t2: pp.t1,
    })
}

fn reduced_inverse(curve: &SupportCurve, pp: PhasePoint, tol: f64) -> Result<f64> {
    let end = curve.eval_point(pp.t2);
    let e = PlanePoint::tangent_dir(pp.t1);
    let t0 = solve_increasing(
        |s| {
            let jet = curve.eval_jet(s);
            (e.det(end - jet.point), -jet.rho * (s - pp.t1).sin())
        },
        pp.t1 - PI,
        pp.t1,
        tol,
    )?;
    Ok(t0)
}

/// A forward orbit as a lifted parameter sequence `t_0 < t_1 < ... < t_{N+1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Orbit {
    pub samples: Vec<f64>,
    /// `residuals[k]` is the chord residual of the triple `(t_k, t_{k+1}, t_{k+2})`.
    pub residuals: Vec<f64>,
}

impl Orbit {
    pub fn points(&self, curve: &SupportCurve) -> Vec<PlanePoint> {
        self.samples.iter().map(|&t| curve.eval_point(t)).collect()
    }

    /// Consecutive pairs as phase points.
    pub fn phase_points(&self) -> impl Iterator<Item = PhasePoint> + '_ {
        self.samples
            .windows(2)
            .map(|w| PhasePoint { t1: w[0], t2: w[1] })
    }
}

/// `n` applications of the map starting at `pp`.
pub fn iterate(curve: &SupportCurve, pp: PhasePoint, n: usize, tol: f64) -> Result<Orbit> {
    pp.check()?;
    let mut samples = Vec::with_capacity(n + 2);
    let mut residuals = Vec::with_capacity(n);
    samples.push(pp.t1);
    samples.push(pp.t2);
    let mut cur = pp;
    for step in 0..n {
        let next = billiard_map(curve, cur, tol).map_err(|e| Error::OrbitStep {
            step,
            source: Box::new(e),
        })?;
        residuals.push(chord_residual(curve, cur.t1, cur.t2, next.t2).abs());
        samples.push(next.t2);
        cur = next;
    }
    Ok(Orbit { samples, residuals })
}

/// Birkhoff quotient `(t_N - t_0) / (2 pi N)` with its `1/N` bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub iterations: usize,
}

pub fn rotation_number(
    curve: &SupportCurve,
    pp: PhasePoint,
    n: usize,
    tol: f64,
) -> Result<RotationEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "rotation number needs at least one iteration".into(),
        ));
    }
    // t_N is reached after N - 1 map steps.
    let orbit = iterate(curve, pp, n - 1, tol)?;
    Ok(rotation_from_samples(&orbit.samples, n))
}

pub(crate) fn rotation_from_samples(samples: &[f64], n: usize) -> RotationEstimate {
    RotationEstimate {
        value: (samples[n] - samples[0]) / (TAU * n as f64),
        error_bound: 1.0 / n as f64,
        iterations: n,
    }
}

/// Conjugate direction `Phi(alpha)`: the unique `beta in (alpha, alpha + pi)`
/// with `e_beta` parallel to the position vector `gamma(alpha)`.
///
/// `det(e_beta, gamma) = -|gamma| cos(beta - theta)` where `theta` is the polar
/// angle of `gamma(alpha)`; it increases through zero at `beta = theta + pi/2`,
/// which is therefore the root once reduced into the open interval.
pub fn conjugate_map(curve: &SupportCurve, alpha: f64, tol: f64) -> Result<f64> {
    let g = curve.eval_point(alpha);
    let theta = g.y.atan2(g.x);
    let beta = alpha + (theta + 0.5 * PI - alpha).rem_euclid(TAU);
    let residual = PlanePoint::tangent_dir(beta).det(g);
    if !(beta > alpha && beta < alpha + PI) || !(residual.abs() < tol) {
        return Err(Error::NoConvergence {
            iterations: 1,
            residual: residual.abs(),
        });
    }
    Ok(beta)
}

/// Samples `(alpha, Phi(alpha))` of the conjugate-direction map on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugateMapSamples {
    pub grid: Vec<(f64, f64)>,
    /// `max |Phi(alpha + pi) - Phi(alpha) - pi|` over the grid (even grids only).
    pub half_period_error: f64,
}

pub fn delta_curve(curve: &SupportCurve, grid_n: usize, tol: f64) -> Result<ConjugateMapSamples> {
    if grid_n < 2 {
        return Err(Error::InvalidInput(
            "delta curve needs at least two grid nodes".into(),
        ));
    }
    let h = TAU / grid_n as f64;
    let grid: Vec<(f64, f64)> = (0..grid_n)
        .into_par_iter()
        .map(|j| {
            let a = h * j as f64;
            conjugate_map(curve, a, tol).map(|b| (a, b))
        })
        .collect::<Result<_>>()?;

    for w in grid.windows(2) {
        if !(w[1].1 > w[0].1) {
            return Err(Error::MonotonicityViolation { alpha: w[1].0 });
        }
    }
    let (first, last) = (grid[0], grid[grid_n - 1]);
    if !(first.1 + TAU > last.1) {
        return Err(Error::MonotonicityViolation {
            alpha: first.0 + TAU,
        });
    }

    let mut half_period_error = 0.0f64;
    if grid_n % 2 == 0 {
        let half = grid_n / 2;
        for j in 0..half {
            half_period_error = half_period_error.max((grid[j + half].1 - grid[j].1 - PI).abs());
        }
        if half_period_error > 2.0 * tol.max(1e-12) {
            return Err(Error::InvalidCurve(format!(
                "conjugate map fails the half-period shift by {half_period_error:e}"
            )));
        }
    }
    Ok(ConjugateMapSamples {
        grid,
        half_period_error,
    })
}

/// One row of the Radon profile: `|det(e_alpha, gamma(Phi(alpha)))| / |gamma(Phi(alpha))|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadonSample {
    pub alpha: f64,
    pub phi: f64,
    pub defect: f64,
}

pub fn radon_profile(curve: &SupportCurve, grid_n: usize, tol: f64) -> Result<Vec<RadonSample>> {
    let h = TAU / grid_n.max(1) as f64;
    (0..grid_n.max(1))
        .into_par_iter()
        .map(|j| {
            let alpha = h * j as f64;
            let phi = conjugate_map(curve, alpha, tol)?;
            let g = curve.eval_point(phi);
            let defect = PlanePoint::tangent_dir(alpha).det(g).abs() / g.norm();
            Ok(RadonSample { alpha, phi, defect })
        })
        .collect()
}

/// Scale-invariant Radon defect: zero exactly when `Phi(Phi(alpha)) = alpha + pi`
/// on the grid, i.e. when every inscribed parallelogram through the
/// conjugate directions is a 4-periodic orbit.
pub fn radon_defect(curve: &SupportCurve, grid_n: usize, tol: f64) -> Result<f64> {
    Ok(radon_profile(curve, grid_n, tol)?
        .iter()
        .map(|s| s.defect)
        .fold(0.0, f64::max))
}

/// Residuals of four map steps started on the conjugate-direction graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourPeriodicReport {
    pub alpha: f64,
    /// `t_0 .. t_5`.
    pub lifts: Vec<f64>,
    /// `|t_4 - t_0 - 2 pi|`
    pub lift_residual_0: f64,
    /// `|t_5 - t_1 - 2 pi|`
    pub lift_residual_1: f64,
    /// `|gamma(t_2) + gamma(t_0)|`
    pub vertex_residual_0: f64,
    /// `|gamma(t_3) + gamma(t_1)|`
    pub vertex_residual_1: f64,
}

impl FourPeriodicReport {
    pub fn max_residual(&self) -> f64 {
        self.lift_residual_0
            .max(self.lift_residual_1)
            .max(self.vertex_residual_0)
            .max(self.vertex_residual_1)
    }
}

/// Starts at `(alpha, Phi(alpha))` and applies the map four times. Residuals
/// are small only when the table is Radon near this orbit.
pub fn verify_four_periodic(
    curve: &SupportCurve,
    alpha: f64,
    tol: f64,
) -> Result<FourPeriodicReport> {
    let phi = conjugate_map(curve, alpha, tol.max(DEFAULT_CONJUGATE_TOL))?;
    let orbit = iterate(curve, PhasePoint::new(alpha, phi)?, 4, tol)?;
    let t = &orbit.samples;
    let g = |k: usize| curve.eval_point(t[k]);
    Ok(FourPeriodicReport {
        alpha,
        lift_residual_0: (t[4] - t[0] - TAU).abs(),
        lift_residual_1: (t[5] - t[1] - TAU).abs(),
        vertex_residual_0: (g(2) + g(0)).norm(),
        vertex_residual_1: (g(3) + g(1)).norm(),
        lifts: orbit.samples,
    })
}

/// Tangent angles on `map(source)` of the images of the points of `source`
/// at the lifted angles `angles`. The map must preserve orientation.
/// Consecutive angles are assumed to differ by less than pi, as along an orbit.
pub fn push_forward_angles(map: &AffineMap, source: &SupportCurve, angles: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    for (k, &theta) in angles.iter().enumerate() {
        let dir = map.apply(source.eval_tangent(theta));
        let reference = match k {
            0 => theta,
            _ => out[k - 1] + (theta - angles[k - 1]),
        };
        out.push(tangent_angle_of(dir, reference));
    }
    out
}

/// Representative of `angle` modulo 2π in `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    lift_near(angle, PI).rem_euclid(TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{ellipse_curve, Projection};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    const TOL: f64 = DEFAULT_MAP_TOL;

    fn ellipse21() -> SupportCurve {
        ellipse_curve(2.0, 1.0, 0.0, &Projection::default()).unwrap()
    }

    fn bumpy() -> SupportCurve {
        SupportCurve::from_harmonics(1.0, &[(4, 0.05, 0.0)], true).unwrap()
    }

    /// Brute-force sign scan of the chord condition on a fine grid.
    fn scan_root(curve: &SupportCurve, t1: f64, t2: f64) -> f64 {
        let n = 200_000;
        let f = |s: f64| chord_residual(curve, t1, t2, s);
        let h = PI / n as f64;
        let mut prev = f(t2 + h);
        for j in 2..n {
            let s = t2 + h * j as f64;
            let v = f(s);
            if prev < 0.0 && v >= 0.0 {
                return s - h * v / (v - prev);
            }
            prev = v;
        }
        panic!("no sign change");
    }

    #[test]
    fn circle_map_examples() {
        let c = SupportCurve::circle(1.0);
        let out = billiard_map(&c, PhasePoint::new(0.0, FRAC_PI_3).unwrap(), TOL).unwrap();
        assert!((out.t1 - FRAC_PI_3).abs() < 1e-15);
        assert!((out.t2 - 2.0 * FRAC_PI_3).abs() < 1e-12);
        assert!((scan_root(&c, 0.0, FRAC_PI_3) - 2.0 * FRAC_PI_3).abs() < 1e-6);
        let out = billiard_map(&c, PhasePoint::new(0.0, FRAC_PI_2).unwrap(), TOL).unwrap();
        assert!((out.t2 - PI).abs() < 1e-12);
    }

    #[test]
    fn ellipse_map_example_in_the_plane() {
        let e = ellipse21();
        let m = AffineMap::diag(2.0, 1.0);
        let circle = SupportCurve::circle(1.0);
        let seed = push_forward_angles(&m, &circle, &[0.0, FRAC_PI_3]);
        let out = billiard_map(&e, PhasePoint::new(seed[0], seed[1]).unwrap(), TOL).unwrap();
        let p0 = e.eval_point(seed[0]);
        let p1 = e.eval_point(seed[1]);
        let p2 = e.eval_point(out.t2);
        assert!((p0 - PlanePoint::new(2.0, 0.0)).norm() < 1e-12);
        assert!((p1 - PlanePoint::new(1.0, 3f64.sqrt() / 2.0)).norm() < 1e-12);
        assert!(
            (p2 - PlanePoint::new(-1.0, 3f64.sqrt() / 2.0)).norm() < 1e-10,
            "{p2:?}"
        );
        // chord (2,0) -> (-1, sqrt3/2) is (-3, sqrt3/2), parallel to the middle tangent
        let tangent = e.eval_tangent(seed[1]);
        assert!(tangent.det(p2 - p0).abs() < 1e-10);
    }

    #[test]
    fn inverse_examples() {
        let c = SupportCurve::circle(1.0);
        let back = billiard_map_inverse(
            &c,
            PhasePoint::new(FRAC_PI_3, 2.0 * FRAC_PI_3).unwrap(),
            TOL,
        )
        .unwrap();
        assert!(back.t1.abs() < 1e-12 && (back.t2 - FRAC_PI_3).abs() < 1e-15);
        let back = billiard_map_inverse(&c, PhasePoint::new(FRAC_PI_2, PI).unwrap(), TOL).unwrap();
        assert!(back.t1.abs() < 1e-12);
        for curve in [ellipse21(), bumpy()] {
            let pp = PhasePoint::new(0.4, 1.9).unwrap();
            let there = billiard_map(&curve, pp, TOL).unwrap();
            let again = billiard_map_inverse(&curve, there, TOL).unwrap();
            assert!((again.t1 - pp.t1).abs() < 1e-10 && (again.t2 - pp.t2).abs() < 1e-15);
        }
    }

    #[test]
    fn iterate_circle_progressions() {
        let c = SupportCurve::circle(1.0);
        let orbit = iterate(&c, PhasePoint::new(0.0, FRAC_PI_2).unwrap(), 3, TOL).unwrap();
        for (k, t) in orbit.samples.iter().enumerate() {
            assert!((t - k as f64 * FRAC_PI_2).abs() < 1e-11);
        }
        let orbit = iterate(&c, PhasePoint::new(0.0, FRAC_PI_3).unwrap(), 5, TOL).unwrap();
        assert_eq!(orbit.samples.len(), 7);
        for (k, t) in orbit.samples.iter().enumerate() {
            assert!((t - k as f64 * FRAC_PI_3).abs() < 1e-11);
        }
        assert!(orbit.residuals.iter().all(|r| *r < TOL));
    }

    #[test]
    fn rotation_number_examples() {
        let c = SupportCurve::circle(1.0);
        let r = rotation_number(&c, PhasePoint::new(0.0, FRAC_PI_2).unwrap(), 40, TOL).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12);
        assert_eq!(r.error_bound, 1.0 / 40.0);
        let r = rotation_number(&c, PhasePoint::new(0.0, FRAC_PI_3).unwrap(), 60, TOL).unwrap();
        assert!((r.value - 1.0 / 6.0).abs() < 1e-12);

        let m = AffineMap::diag(2.0, 1.0);
        let seed = push_forward_angles(&m, &c, &[0.0, FRAC_PI_2]);
        let r = rotation_number(
            &ellipse21(),
            PhasePoint::new(seed[0], seed[1]).unwrap(),
            100,
            TOL,
        )
        .unwrap();
        assert!((r.value - 0.25).abs() < 1e-10);
    }

    #[test]
    fn conjugate_map_examples() {
        let c = SupportCurve::circle(1.0);
        for a in [0.0, 0.3, 2.0, 5.9] {
            assert!((conjugate_map(&c, a, TOL).unwrap() - a - FRAC_PI_2).abs() < 1e-14);
        }
        assert!((conjugate_map(&ellipse21(), 0.0, TOL).unwrap() - FRAC_PI_2).abs() < 1e-13);
        let b = bumpy();
        for a in [0.1, 0.7, 2.2] {
            let shifted = conjugate_map(&b, a + PI, TOL).unwrap();
            assert!((shifted - conjugate_map(&b, a, TOL).unwrap() - PI).abs() < 2.0 * TOL);
        }
    }

    #[test]
    fn delta_curve_examples() {
        let s = delta_curve(&SupportCurve::circle(1.0), 8, TOL).unwrap();
        for (k, &(a, phi)) in s.grid.iter().enumerate() {
            assert!((a - k as f64 * PI / 4.0).abs() < 1e-15);
            assert!((phi - a - FRAC_PI_2).abs() < 1e-14);
        }
        let e = ellipse21();
        let s = delta_curve(&e, 64, TOL).unwrap();
        for &(a, phi) in &s.grid {
            let phi2 = conjugate_map(&e, phi, TOL).unwrap();
            assert!((phi2 - a - PI).abs() < 2e-12);
            let phi4 = conjugate_map(&e, conjugate_map(&e, phi2, TOL).unwrap(), TOL).unwrap();
            assert!((phi4 - a - TAU).abs() < 4e-12);
        }
    }

    #[test]
    fn radon_defect_examples() {
        assert!(radon_defect(&SupportCurve::circle(1.0), 256, TOL).unwrap() < 1e-14);
        assert!(radon_defect(&ellipse21(), 256, TOL).unwrap() < 1e-8);
        let d = radon_defect(&bumpy(), 256, TOL).unwrap();
        assert!(d > 1e-4, "{d}");
    }

    #[test]
    fn four_periodic_examples() {
        let r = verify_four_periodic(&SupportCurve::circle(1.0), 0.0, TOL).unwrap();
        assert!(r.max_residual() < 1e-12);
        let e = ellipse21();
        assert!(verify_four_periodic(&e, 0.0, TOL).unwrap().max_residual() < 1e-8);
        for j in 0..16 {
            let a = 0.37 * j as f64 + 0.05;
            assert!(verify_four_periodic(&e, a, TOL).unwrap().max_residual() < 1e-8);
        }
        assert!(
            verify_four_periodic(&bumpy(), 0.3, TOL)
                .unwrap()
                .max_residual()
                > 1e-4
        );
    }

    #[test]
    fn degenerate_phase_points_rejected() {
        let c = SupportCurve::circle(1.0);
        for pp in [
            PhasePoint { t1: 0.0, t2: 1e-10 },
            PhasePoint {
                t1: 0.0,
                t2: PI - 1e-10,
            },
            PhasePoint { t1: 1.0, t2: 0.5 },
        ] {
            assert!(matches!(
                billiard_map(&c, pp, TOL),
                Err(Error::DegeneratePhasePoint { .. })
            ));
        }
    }

    #[test]
    fn orbit_step_errors_carry_index() {
        let c = SupportCurve::circle(1.0);
        // zero tolerance cannot be met, so the first step fails
        let err = iterate(&c, PhasePoint::new(0.0, 0.5).unwrap(), 3, 0.0).unwrap_err();
        assert!(matches!(err, Error::OrbitStep { step: 0, .. }));
    }
}
