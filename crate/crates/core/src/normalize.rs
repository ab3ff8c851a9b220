//! Affine normalization: the unimodular map `phi_{a, sigma}` (rotate by
//! `-sigma`, then `(x, y) -> (a x, y / a)`) whose image has a support function
//! with vanishing second harmonics, and the isoperimetric deficit.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::curve::{apply_affine, apply_affine_unchecked, Projection, SupportCurve};
use crate::error::{Error, Result};
use crate::geometry::AffineMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalizeSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
    pub projection_k_max: Option<usize>,
}

impl Default for NormalizeSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            fd_step: 1e-6,
            projection_k_max: None,
        }
    }
}

impl NormalizeSettings {
    fn projection(&self, curve: &SupportCurve) -> Projection {
        Projection::with_k_max(
            self.projection_k_max
                .unwrap_or(curve.k_max().max(crate::curve::DEFAULT_K_MAX)),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalizationResult {
    pub a: f64,
    pub sigma: f64,
    /// `∫ p_{a,sigma}(psi) cos(2 psi) dpsi`
    pub residual_c2: f64,
    /// `∫ p_{a,sigma}(psi) sin(2 psi) dpsi`
    pub residual_s2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NormalizationResult {
    pub fn map(&self) -> AffineMap {
        AffineMap::normalizer(self.a, self.sigma)
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_c2.abs().max(self.residual_s2.abs())
    }
}

/// `(∫ p cos 2psi, ∫ p sin 2psi)` of a support series: `pi` times its k = 2 coefficients.
fn second_harmonic_integrals(curve: &SupportCurve) -> (f64, f64) {
    let (c, s) = curve.coefficient(2);
    (PI * c, PI * s)
}

fn residuals_at(curve: &SupportCurve, log_a: f64, sigma: f64, proj: &Projection) -> (f64, f64) {
    let image =
        apply_affine_unchecked(curve, &AffineMap::normalizer(log_a.exp(), sigma), proj).curve;
    second_harmonic_integrals(&image)
}

/// Canonical representative in `(0, inf) x [0, pi/2)`.
///
/// `phi_{a, sigma + pi}` differs from `phi_{a, sigma}` by the central
/// reflection, and `phi_{1/a, sigma - pi/2}` by a quarter turn of the image;
/// neither changes whether the second harmonics vanish.
fn canonical(a: f64, sigma: f64) -> (f64, f64) {
    let mut s = sigma.rem_euclid(PI);
    let mut a = a;
    if s >= FRAC_PI_2 {
        s -= FRAC_PI_2;
        a = 1.0 / a;
    }
    // within roundoff of the seam the representative on the sigma = 0 side is used
    if FRAC_PI_2 - s < 1e-9 {
        s = 0.0;
        a = 1.0 / a;
    }
    (a, s)
}

/// Damped Newton solve for `(a, sigma)` with a finite-difference Jacobian.
///
/// Unknowns are `(ln a, sigma)`. The initial guess reads the table's own
/// second harmonic: its phase gives the long-axis direction and its amplitude
/// relative to `a0` the aspect ratio. A table whose second harmonics already
/// vanish returns `(1, 0)`.
pub fn normalize(
    curve: &SupportCurve,
    settings: &NormalizeSettings,
) -> Result<NormalizationResult> {
    curve.ensure_symmetric()?;
    let proj = settings.projection(curve);

    let (c0, s0) = second_harmonic_integrals(curve);
    if c0.abs().max(s0.abs()) < settings.tol {
        return Ok(NormalizationResult {
            a: 1.0,
            sigma: 0.0,
            residual_c2: c0,
            residual_s2: s0,
            iterations: 0,
            converged: true,
        });
    }

    let (c2, s2) = curve.coefficient(2);
    let amp = c2.hypot(s2);
    let ratio = ((curve.a0() - amp) / (curve.a0() + amp)).max(1e-6);
    let mut x = [0.5 * ratio.ln(), 0.5 * s2.atan2(c2)];

    let mut r = residuals_at(curve, x[0], x[1], &proj);
    let mut iterations = 0;
    while iterations < settings.max_iter && r.0.abs().max(r.1.abs()) >= settings.tol {
        iterations += 1;
        let h0 = settings.fd_step * x[0].abs().max(1.0);
        let h1 = settings.fd_step * x[1].abs().max(1.0);
        let ra = residuals_at(curve, x[0] + h0, x[1], &proj);
        let rs = residuals_at(curve, x[0], x[1] + h1, &proj);
        let j = [
            [(ra.0 - r.0) / h0, (rs.0 - r.0) / h1],
            [(ra.1 - r.1) / h0, (rs.1 - r.1) / h1],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            break;
        }
        let dx = [
            -(j[1][1] * r.0 - j[0][1] * r.1) / det,
            -(-j[1][0] * r.0 + j[0][0] * r.1) / det,
        ];
        let norm = r.0.hypot(r.1);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = [x[0] + step * dx[0], x[1] + step * dx[1]];
            let rc = residuals_at(curve, cand[0], cand[1], &proj);
            if rc.0.hypot(rc.1) < norm {
                accepted = Some((cand, rc));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, rc)) => {
                x = cand;
                r = rc;
            }
            None => break,
        }
    }

    let (a, sigma) = canonical(x[0].exp(), x[1]);
    let (rc, rs) = residuals_at(curve, a.ln(), sigma, &proj);
    let converged = rc.abs().max(rs.abs()) < settings.tol;
    if !converged {
        return Err(Error::NormalizationFailed {
            iterations,
            residual_c2: rc,
            residual_s2: rs,
        });
    }
    Ok(NormalizationResult {
        a,
        sigma,
        residual_c2: rc,
        residual_s2: rs,
        iterations,
        converged,
    })
}

/// The image `phi_{a,sigma}(D)` as a support curve.
pub fn normalized_curve(
    curve: &SupportCurve,
    result: &NormalizationResult,
    settings: &NormalizeSettings,
) -> Result<SupportCurve> {
    if !result.converged {
        return Err(Error::InvalidInput(
            "normalization result did not converge".into(),
        ));
    }
    if result.a == 1.0 && result.sigma == 0.0 {
        return Ok(curve.clone());
    }
    apply_affine(curve, &result.map(), &settings.projection(curve))
}

/// `L^2 - 4 pi A`, non-negative with equality only for circles.
pub fn isoperimetric_deficit(curve: &SupportCurve) -> Result<f64> {
    curve.ensure_valid()?;
    let l = curve.perimeter();
    Ok(l * l - 2.0 * TAU * curve.area())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ellipse_curve;
    use std::f64::consts::FRAC_PI_6;

    fn ellipse(a: f64, b: f64, rot: f64) -> SupportCurve {
        ellipse_curve(a, b, rot, &Projection::default()).unwrap()
    }

    #[test]
    fn circle_is_already_normalized() {
        let r = normalize(&SupportCurve::circle(1.0), &NormalizeSettings::default()).unwrap();
        assert_eq!((r.a, r.sigma, r.iterations), (1.0, 0.0, 0));
        assert_eq!((r.residual_c2, r.residual_s2), (0.0, 0.0));
    }

    #[test]
    fn axis_aligned_ellipse() {
        let r = normalize(&ellipse(2.0, 1.0, 0.0), &NormalizeSettings::default()).unwrap();
        assert!((r.a - 0.5f64.sqrt()).abs() < 1e-8, "{r:?}");
        assert!(r.sigma.abs() < 1e-8);
        assert!(r.max_residual() < 1e-10);
    }

    #[test]
    fn rotated_ellipse() {
        let r = normalize(&ellipse(2.0, 1.0, FRAC_PI_6), &NormalizeSettings::default()).unwrap();
        assert!((r.a - 0.5f64.sqrt()).abs() < 1e-8, "{r:?}");
        assert!((r.sigma - FRAC_PI_6).abs() < 1e-8);
    }

    #[test]
    fn ellipse_normalizes_to_circle() {
        let s = NormalizeSettings::default();
        let e = ellipse(2.0, 1.0, 0.0);
        let r = normalize(&e, &s).unwrap();
        let n = normalized_curve(&e, &r, &s).unwrap();
        let worst = (0..2000)
            .map(|j| (n.radius_of_curvature(TAU * j as f64 / 2000.0) - 2f64.sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6);
        assert!((n.area() - e.area()).abs() < 1e-10);
        assert!(isoperimetric_deficit(&n).unwrap() < 1e-8);
        assert!(isoperimetric_deficit(&e).unwrap() > 0.0);
    }

    #[test]
    fn bumpy_table_needs_no_map() {
        let s = NormalizeSettings::default();
        let b = SupportCurve::from_harmonics(1.0, &[(4, 0.05, 0.0)], true).unwrap();
        let r = normalize(&b, &s).unwrap();
        assert_eq!((r.a, r.sigma), (1.0, 0.0));
        let n = normalized_curve(&b, &r, &s).unwrap();
        let (c, sn) = n.coefficient(2);
        assert!(c.abs().max(sn.abs()) * PI < s.tol);
    }

    #[test]
    fn deficit_values() {
        assert!(
            isoperimetric_deficit(&SupportCurve::circle(2.5))
                .unwrap()
                .abs()
                < 1e-12
        );
        let eps: f64 = 0.05;
        let b = SupportCurve::from_harmonics(1.0, &[(4, eps, 0.0)], true).unwrap();
        let want = 30.0 * eps * eps * PI * PI;
        assert!((isoperimetric_deficit(&b).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn canonical_cell() {
        let (a, s) = canonical(2.0, FRAC_PI_2 + 0.1);
        assert!((a - 0.5).abs() < 1e-15 && (s - 0.1).abs() < 1e-15);
        let (a, s) = canonical(2.0, -1e-13);
        assert!((a - 2.0).abs() < 1e-15 && s == 0.0);
        let (a, s) = canonical(0.5, PI + 0.2);
        assert!((a - 0.5).abs() < 1e-15 && (s - 0.2).abs() < 1e-12);
    }
}
