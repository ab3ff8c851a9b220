//! Strongly convex tables encoded by the Fourier series of their support
//! function in the tangent-angle parametrization.
//!
//! For a tangent angle `a` the boundary point, tangent and second derivative
//! are
//!
//! ```text
//! gamma(a)   = p'(a) e_a - p(a) J e_a
//! gamma'(a)  = (p''(a) + p(a)) e_a
//! gamma''(a) = (p'''(a) + p'(a)) e_a + (p''(a) + p(a)) J e_a
//! ```
//!
//! with `e_a = (-sin a, cos a)` and `J` the rotation by +pi/2. The outward
//! normal at `gamma(a)` is `(cos a, sin a)`, so `p(a)` is the support value in
//! that direction. Harmonics are stored for `k >= 2` only: a `k = 1` term
//! translates the table, and tables are centred at the origin.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, PlanePoint};
use crate::quadrature::periodic_trapezoid;

pub const DEFAULT_K_MAX: usize = 64;
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_VALIDATION_GRID: usize = 4096;

/// `p` and its first three derivatives at one angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportValues {
    pub p: f64,
    pub dp: f64,
    pub d2p: f64,
    pub d3p: f64,
}

impl SupportValues {
    /// Radius of curvature `p'' + p`.
    pub fn rho(&self) -> f64 {
        self.d2p + self.p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCurve {
    a0: f64,
    /// `cos_coeffs[i]` multiplies `cos((i + 2) a)`.
    cos_coeffs: Vec<f64>,
    sin_coeffs: Vec<f64>,
    symmetric: bool,
}

impl SupportCurve {
    /// Coefficient vectors are indexed from `k = 2`; the shorter one is
    /// zero-padded.
    pub fn new(
        a0: f64,
        mut cos_coeffs: Vec<f64>,
        mut sin_coeffs: Vec<f64>,
        symmetric: bool,
    ) -> Self {
        let n = cos_coeffs.len().max(sin_coeffs.len());
        cos_coeffs.resize(n, 0.0);
        sin_coeffs.resize(n, 0.0);
        Self {
            a0,
            cos_coeffs,
            sin_coeffs,
            symmetric,
        }
    }

    pub fn circle(radius: f64) -> Self {
        Self::new(radius, Vec::new(), Vec::new(), true)
    }

    /// Builds a curve from sparse `(k, cos, sin)` harmonics.
    pub fn from_harmonics(
        a0: f64,
        harmonics: &[(usize, f64, f64)],
        symmetric: bool,
    ) -> Result<Self> {
        let k_max = harmonics.iter().map(|h| h.0).max().unwrap_or(1).max(1);
        let mut c = vec![0.0; k_max.saturating_sub(1)];
        let mut s = vec![0.0; k_max.saturating_sub(1)];
        for &(k, ck, sk) in harmonics {
            if k < 2 {
                return Err(Error::InvalidInput(format!(
                    "harmonic k = {k} is not allowed (k = 0 is a0, k = 1 would translate the table)"
                )));
            }
            c[k - 2] += ck;
            s[k - 2] += sk;
        }
        Ok(Self::new(a0, c, s, symmetric))
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Highest stored harmonic (1 when only `a0` is present).
    pub fn k_max(&self) -> usize {
        self.cos_coeffs.len() + 1
    }

    /// `(cos, sin)` coefficient of harmonic `k`; zero outside the stored range.
    pub fn coefficient(&self, k: usize) -> (f64, f64) {
        if k < 2 || k > self.k_max() {
            return (0.0, 0.0);
        }
        (self.cos_coeffs[k - 2], self.sin_coeffs[k - 2])
    }

    pub fn harmonics(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.cos_coeffs
            .iter()
            .zip(&self.sin_coeffs)
            .enumerate()
            .map(|(i, (&c, &s))| (i + 2, c, s))
    }

    /// `p, p', p'', p'''` by termwise differentiation.
    pub fn eval_support(&self, a: f64) -> SupportValues {
        let (s1, c1) = a.sin_cos();
        let mut v = SupportValues {
            p: self.a0,
            dp: 0.0,
            d2p: 0.0,
            d3p: 0.0,
        };
        // cos(k a), sin(k a) by rotation, re-anchored periodically against drift.
        let (mut ck, mut sk) = (c1, s1);
        for (i, (&c, &s)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            let k = i + 2;
            if k % 32 == 0 {
                let (s, c) = (k as f64 * a).sin_cos();
                ck = c;
                sk = s;
            } else {
                let next_c = ck * c1 - sk * s1;
                sk = sk * c1 + ck * s1;
                ck = next_c;
            }
            if c == 0.0 && s == 0.0 {
                continue;
            }
            let kf = k as f64;
            let even = c * ck + s * sk;
            let odd = s * ck - c * sk;
            v.p += even;
            v.dp += kf * odd;
            v.d2p -= kf * kf * even;
            v.d3p -= kf * kf * kf * odd;
        }
        v
    }

    pub fn radius_of_curvature(&self, a: f64) -> f64 {
        self.eval_support(a).rho()
    }

    /// Boundary point with tangent direction `e_a`.
    pub fn eval_point(&self, a: f64) -> PlanePoint {
        let v = self.eval_support(a);
        point_from(a, &v)
    }

    pub fn eval_tangent(&self, a: f64) -> PlanePoint {
        v_rho(a, self.radius_of_curvature(a))
    }

    pub fn eval_second(&self, a: f64) -> PlanePoint {
        let v = self.eval_support(a);
        second_from(a, &v)
    }

    /// `(gamma, gamma', gamma'')` from a single series evaluation.
    pub fn eval_jet(&self, a: f64) -> CurveJet {
        let v = self.eval_support(a);
        CurveJet {
            point: point_from(a, &v),
            tangent: v_rho(a, v.rho()),
            second: second_from(a, &v),
            rho: v.rho(),
        }
    }

    /// Nodes used by the exact periodic quadratures below: enough to integrate
    /// products of two truncated series without aliasing.
    pub fn quadrature_nodes(&self) -> usize {
        (4 * (self.k_max() + 2)).max(256)
    }

    /// Enclosed area `1/2 ∫ (p^2 - p'^2) da`.
    pub fn area(&self) -> f64 {
        0.5 * periodic_trapezoid(0.0, TAU, self.quadrature_nodes(), |a| {
            let v = self.eval_support(a);
            v.p * v.p - v.dp * v.dp
        })
    }

    /// Perimeter `∫ p da` (equal to `∫ rho da`).
    pub fn perimeter(&self) -> f64 {
        periodic_trapezoid(0.0, TAU, self.quadrature_nodes(), |a| {
            self.eval_support(a).p
        })
    }

    /// Checks positivity of `p` and `rho` and the declared symmetry.
    pub fn validate(&self, grid_n: usize) -> Validation {
        let grid_n = grid_n.max(8);
        let h = TAU / grid_n as f64;
        let values: Vec<SupportValues> = (0..grid_n)
            .map(|j| self.eval_support(h * j as f64))
            .collect();

        let mut failures = Vec::new();

        let all_finite = self.a0.is_finite()
            && self
                .cos_coeffs
                .iter()
                .chain(&self.sin_coeffs)
                .all(|c| c.is_finite());
        if !all_finite {
            failures.push(ValidationFailure::NonFinite);
        }

        let (p_idx, min_p) = argmin(values.iter().map(|v| v.p));
        let (r_idx, min_rho) = argmin(values.iter().map(|v| v.rho()));

        let (lip_p, lip_rho) = self.lipschitz_bounds();
        let p_certified = certify_min(
            &|a| self.eval_support(a).p,
            values.iter().map(|v| v.p),
            h,
            lip_p,
        );
        let rho_certified = certify_min(
            &|a| self.radius_of_curvature(a),
            values.iter().map(|v| v.rho()),
            h,
            lip_rho,
        );

        if !(min_p > 0.0) || !(p_certified > 0.0) {
            failures.push(ValidationFailure::NonPositiveSupport {
                alpha: h * p_idx as f64,
                value: min_p,
            });
        }
        if !(min_rho > 0.0) || !(rho_certified > 0.0) {
            failures.push(ValidationFailure::NotStronglyConvex {
                alpha: h * r_idx as f64,
                value: min_rho,
            });
        }
        if self.symmetric {
            if let Some((k, c, s)) = self
                .harmonics()
                .find(|&(k, c, s)| k % 2 == 1 && (c != 0.0 || s != 0.0))
            {
                failures.push(ValidationFailure::Asymmetric {
                    k,
                    magnitude: c.hypot(s),
                });
            }
        }

        Validation {
            grid_n,
            min_p,
            min_p_at: h * p_idx as f64,
            min_rho,
            min_rho_at: h * r_idx as f64,
            certified_min_p: p_certified,
            certified_min_rho: rho_certified,
            failures,
        }
    }

    /// Validation on the default grid, as a `Result`.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate(DEFAULT_VALIDATION_GRID);
        if v.passes() {
            Ok(())
        } else {
            Err(Error::InvalidCurve(v.describe_failures()))
        }
    }

    /// As [`ensure_valid`](Self::ensure_valid), additionally requiring central symmetry.
    pub fn ensure_symmetric(&self) -> Result<()> {
        self.ensure_valid()?;
        if !self.symmetric {
            return Err(Error::InvalidCurve(
                "table is not declared centrally symmetric".into(),
            ));
        }
        Ok(())
    }

    fn lipschitz_bounds(&self) -> (f64, f64) {
        let mut lp = 0.0;
        let mut lr = 0.0;
        for (k, c, s) in self.harmonics() {
            let amp = c.hypot(s);
            let kf = k as f64;
            lp += kf * amp;
            lr += kf * (kf * kf - 1.0) * amp;
        }
        (lp, lr)
    }

    /// Copy with all harmonics below `threshold` in magnitude zeroed and the
    /// trailing zeros trimmed.
    pub fn trimmed(&self, threshold: f64) -> Self {
        let mut c = self.cos_coeffs.clone();
        let mut s = self.sin_coeffs.clone();
        for (ci, si) in c.iter_mut().zip(s.iter_mut()) {
            if ci.hypot(*si) < threshold {
                *ci = 0.0;
                *si = 0.0;
            }
        }
        while c.last() == Some(&0.0) && s.last() == Some(&0.0) {
            c.pop();
            s.pop();
        }
        Self::new(self.a0, c, s, self.symmetric)
    }
}

/// Point, first and second derivative, and curvature radius at one angle.
#[derive(Clone, Copy, Debug)]
pub struct CurveJet {
    pub point: PlanePoint,
    pub tangent: PlanePoint,
    pub second: PlanePoint,
    pub rho: f64,
}

fn point_from(a: f64, v: &SupportValues) -> PlanePoint {
    let e = PlanePoint::tangent_dir(a);
    v.dp * e - v.p * e.perp()
}

fn v_rho(a: f64, rho: f64) -> PlanePoint {
    rho * PlanePoint::tangent_dir(a)
}

fn second_from(a: f64, v: &SupportValues) -> PlanePoint {
    let e = PlanePoint::tangent_dir(a);
    (v.d3p + v.dp) * e + v.rho() * e.perp()
}

fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| {
            if v < bv || v.is_nan() {
                (i, v)
            } else {
                (bi, bv)
            }
        })
}

/// Lower bound for a periodic function from grid values and a Lipschitz
/// constant. Intervals whose bound is not positive are bisected (down to a
/// floor width) so the margin only tightens where the function is small.
fn certify_min(f: &dyn Fn(f64) -> f64, grid: impl Iterator<Item = f64>, h: f64, lip: f64) -> f64 {
    let values: Vec<f64> = grid.collect();
    let n = values.len();
    let mut bound = f64::INFINITY;
    for j in 0..n {
        let lo = values[j];
        let hi = values[(j + 1) % n];
        let a = h * j as f64;
        bound = bound.min(certify_interval(f, a, h, lo, hi, lip, 0));
    }
    bound
}

fn certify_interval(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    h: f64,
    fa: f64,
    fb: f64,
    lip: f64,
    depth: u32,
) -> f64 {
    let simple = fa.min(fb) - 0.5 * lip * h;
    if simple > 0.0 || depth >= 24 || fa.min(fb) <= 0.0 {
        return simple;
    }
    let mid = a + 0.5 * h;
    let fm = f(mid);
    certify_interval(f, a, 0.5 * h, fa, fm, lip, depth + 1).min(certify_interval(
        f,
        mid,
        0.5 * h,
        fm,
        fb,
        lip,
        depth + 1,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationFailure {
    NonFinite,
    NonPositiveSupport { alpha: f64, value: f64 },
    NotStronglyConvex { alpha: f64, value: f64 },
    Asymmetric { k: usize, magnitude: f64 },
}

/// Diagnostics from [`SupportCurve::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Validation {
    pub grid_n: usize,
    pub min_p: f64,
    pub min_p_at: f64,
    pub min_rho: f64,
    pub min_rho_at: f64,
    /// Lower bounds between grid nodes from the Lipschitz margin.
    pub certified_min_p: f64,
    pub certified_min_rho: f64,
    pub failures: Vec<ValidationFailure>,
}

impl Validation {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn describe_failures(&self) -> String {
        self.failures
            .iter()
            .map(|f| match f {
                ValidationFailure::NonFinite => "non-finite coefficient".to_string(),
                ValidationFailure::NonPositiveSupport { alpha, value } => {
                    format!("support not positive (p = {value:e} at alpha = {alpha})")
                }
                ValidationFailure::NotStronglyConvex { alpha, value } => {
                    format!("not strongly convex (rho = {value:e} at alpha = {alpha})")
                }
                ValidationFailure::Asymmetric { k, magnitude } => {
                    format!("declared symmetric but harmonic k = {k} has magnitude {magnitude:e}")
                }
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Settings for projecting sampled support values onto the Fourier basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub k_max: usize,
    pub tail_tol: f64,
}

impl Default for Projection {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_K_MAX,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl Projection {
    pub fn with_k_max(k_max: usize) -> Self {
        Self {
            k_max,
            ..Self::default()
        }
    }

    pub fn sample_count(&self) -> usize {
        8 * self.k_max.max(2)
    }
}

/// Result of a discrete Fourier projection.
#[derive(Clone, Debug)]
pub struct Projected {
    pub curve: SupportCurve,
    /// Sum of harmonic magnitudes above `k_max` that the truncation drops.
    pub tail: f64,
    /// Magnitude of the discarded `k = 1` harmonic.
    pub first_harmonic: f64,
}

impl Projected {
    pub fn into_checked(self, proj: &Projection) -> Result<SupportCurve> {
        let worst = self.tail.max(self.first_harmonic);
        if !(worst <= proj.tail_tol) {
            return Err(Error::ProjectionTail {
                tail: worst,
                tol: proj.tail_tol,
                k_max: proj.k_max,
            });
        }
        Ok(self.curve)
    }
}

/// Discrete Fourier projection of a support function sampled at
/// `8 * k_max` uniform nodes. Odd harmonics are dropped for symmetric tables.
pub fn project_support<F: Fn(f64) -> f64>(
    support: F,
    symmetric: bool,
    proj: &Projection,
) -> Projected {
    let n = proj.sample_count();
    let h = TAU / n as f64;
    let samples: Vec<f64> = (0..n).map(|j| support(h * j as f64)).collect();
    let table: Vec<(f64, f64)> = (0..n).map(|m| (h * m as f64).sin_cos()).collect();

    let coeff = |k: usize| -> (f64, f64) {
        let mut c = 0.0;
        let mut s = 0.0;
        for (j, &v) in samples.iter().enumerate() {
            let (sn, cs) = table[(k * j) % n];
            c += v * cs;
            s += v * sn;
        }
        (2.0 * c / n as f64, 2.0 * s / n as f64)
    };

    let a0 = samples.iter().sum::<f64>() / n as f64;
    let (c1, s1) = coeff(1);
    let mut cos_coeffs = Vec::with_capacity(proj.k_max.saturating_sub(1));
    let mut sin_coeffs = Vec::with_capacity(proj.k_max.saturating_sub(1));
    for k in 2..=proj.k_max {
        let (c, s) = if symmetric && k % 2 == 1 {
            (0.0, 0.0)
        } else {
            coeff(k)
        };
        cos_coeffs.push(c);
        sin_coeffs.push(s);
    }
    let tail: f64 = (proj.k_max + 1..n / 2)
        .filter(|k| !(symmetric && k % 2 == 1))
        .map(|k| {
            let (c, s) = coeff(k);
            c.hypot(s)
        })
        .sum();
    Projected {
        curve: SupportCurve::new(a0, cos_coeffs, sin_coeffs, symmetric),
        tail,
        first_harmonic: if symmetric { 0.0 } else { c1.hypot(s1) },
    }
}

/// Support function of the ellipse with semi-axes `a` (along direction
/// `rotation`) and `b`, projected onto the Fourier basis.
pub fn ellipse_curve(a: f64, b: f64, rotation: f64, proj: &Projection) -> Result<SupportCurve> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && rotation.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "ellipse semi-axes must be positive (got {a}, {b})"
        )));
    }
    if a == b {
        return Ok(SupportCurve::circle(a));
    }
    project_support(
        |t| {
            let (s, c) = (t - rotation).sin_cos();
            (a * a * c * c + b * b * s * s).sqrt()
        },
        true,
        proj,
    )
    .into_checked(proj)
}

/// Support value of the table in an arbitrary direction `u` (not necessarily unit).
pub fn support_in_direction(curve: &SupportCurve, u: PlanePoint) -> f64 {
    let r = u.norm();
    if r == 0.0 {
        return 0.0;
    }
    r * curve.eval_support(u.y.atan2(u.x)).p
}

/// Fourier projection of the support function of `map(curve)`, without
/// checking the tail.
pub fn apply_affine_unchecked(
    curve: &SupportCurve,
    map: &AffineMap,
    proj: &Projection,
) -> Projected {
    project_support(
        |t| support_in_direction(curve, map.apply_transpose(PlanePoint::polar(t))),
        curve.is_symmetric(),
        proj,
    )
}

/// Support curve of the image table `map(curve)`.
///
/// Uses `h_{M D}(u) = |M^T u| p(angle of M^T u)` on the sampling grid and
/// reprojects.
pub fn apply_affine(
    curve: &SupportCurve,
    map: &AffineMap,
    proj: &Projection,
) -> Result<SupportCurve> {
    map.ensure_invertible()?;
    let image = apply_affine_unchecked(curve, map, proj).into_checked(proj)?;
    image.ensure_valid()?;
    Ok(image)
}
