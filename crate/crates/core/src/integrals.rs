//! The generating function `L(t1, t2) = det(gamma(t1), gamma(t2))`, its second
//! partials, and the rigidity functional
//!
//! ```text
//! F(t1, t2) = [L11 + 2 L12 + L22] L12
//! ```
//!
//! integrated over the three regions of the phase space: between the
//! diagonal and the conjugate-direction graph, between that graph and the
//! parallel-tangent boundary, and the square `[0, pi]^2`. Alongside the
//! quadratures sit the closed forms in terms of `rho = p'' + p` and the area.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{CurveJet, SupportCurve};
use crate::dynamics::{conjugate_map, radon_defect, DEFAULT_CONJUGATE_TOL};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// `L11 = det(gamma''(t1), gamma(t2))`, `L12 = det(gamma'(t1), gamma'(t2))`,
/// `L22 = det(gamma(t1), gamma''(t2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Partials {
    pub l11: f64,
    pub l12: f64,
    pub l22: f64,
}

impl Partials {
    pub fn from_jets(a: &CurveJet, b: &CurveJet) -> Self {
        Self {
            l11: a.second.det(b.point),
            l12: a.tangent.det(b.tangent),
            l22: a.point.det(b.second),
        }
    }

    /// `[L11 + 2 L12 + L22] L12`
    pub fn integrand(&self) -> f64 {
        (self.l11 + 2.0 * self.l12 + self.l22) * self.l12
    }
}

pub fn generating_function(curve: &SupportCurve, t1: f64, t2: f64) -> f64 {
    curve.eval_point(t1).det(curve.eval_point(t2))
}

pub fn l_partials(curve: &SupportCurve, t1: f64, t2: f64) -> Partials {
    Partials::from_jets(&curve.eval_jet(t1), &curve.eval_jet(t2))
}

pub fn integrand(curve: &SupportCurve, t1: f64, t2: f64) -> f64 {
    l_partials(curve, t1, t2).integrand()
}

/// `rho(t1) rho(t2) sin(t2 - t1)`; equals `L12` in the tangent-angle parametrization.
pub fn twist_closed_form(curve: &SupportCurve, t1: f64, t2: f64) -> f64 {
    curve.radius_of_curvature(t1) * curve.radius_of_curvature(t2) * (t2 - t1).sin()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// `{(t, s) : t <= s <= Phi(t)}`
    GammaDelta,
    /// `{(t, s) : Phi(t) <= s <= t + pi}`
    DeltaGammaStar,
    /// `[0, pi]^2`
    HalfSquare,
}

impl Region {
    pub const ALL: [Region; 3] = [
        Region::GammaDelta,
        Region::DeltaGammaStar,
        Region::HalfSquare,
    ];

    pub fn needs_conjugate_graph(self) -> bool {
        !matches!(self, Region::HalfSquare)
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::GammaDelta => "gamma-delta",
            Region::DeltaGammaStar => "delta-gamma-star",
            Region::HalfSquare => "half-square",
        }
    }
}

impl std::str::FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Region::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown region '{s}'")))
    }
}

/// Resolution and tolerances for the region quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureSettings {
    /// Trapezoid nodes per direction on `[0, pi]`; the outer rule of the
    /// graph-bounded regions uses twice as many on `[0, 2 pi]`.
    pub nodes: usize,
    /// Gauss–Legendre nodes per panel for the inner integrals.
    pub inner_nodes: usize,
    pub conjugate_tol: f64,
    /// Largest change allowed when the resolution is doubled.
    pub convergence_tol: f64,
    pub radon_tol: f64,
    pub radon_grid: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            nodes: 128,
            inner_nodes: 64,
            conjugate_tol: DEFAULT_CONJUGATE_TOL,
            convergence_tol: 1e-8,
            radon_tol: 1e-8,
            radon_grid: 256,
        }
    }
}

/// Value of one region integral with its resolution-doubling check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionIntegral {
    pub region: Region,
    pub value: f64,
    pub doubled_value: f64,
    pub change: f64,
    pub outer_nodes: usize,
    pub inner_nodes: usize,
}

/// Checks the Radon precondition of the graph-bounded regions; returns the defect.
pub fn require_radon(curve: &SupportCurve, settings: &QuadratureSettings) -> Result<f64> {
    let defect = radon_defect(curve, settings.radon_grid, settings.conjugate_tol)?;
    if !(defect < settings.radon_tol) {
        return Err(Error::RadonHypothesisFailed {
            defect,
            tol: settings.radon_tol,
        });
    }
    Ok(defect)
}

pub fn integral_region(
    curve: &SupportCurve,
    region: Region,
    settings: &QuadratureSettings,
) -> Result<RegionIntegral> {
    curve.ensure_symmetric()?;
    if region.needs_conjugate_graph() {
        require_radon(curve, settings)?;
    }
    let base = region_value(
        curve,
        region,
        settings.nodes,
        settings.inner_nodes,
        1,
        settings.conjugate_tol,
    )?;
    let doubled = region_value(
        curve,
        region,
        2 * settings.nodes,
        settings.inner_nodes,
        2,
        settings.conjugate_tol,
    )?;
    let change = (doubled - base).abs();
    if !(change <= settings.convergence_tol) {
        return Err(Error::NonConvergedQuadrature {
            change,
            tol: settings.convergence_tol,
        });
    }
    let (outer_nodes, inner_nodes) = match region {
        Region::HalfSquare => (settings.nodes, settings.nodes),
        _ => (2 * settings.nodes, settings.inner_nodes),
    };
    Ok(RegionIntegral {
        region,
        value: base,
        doubled_value: doubled,
        change,
        outer_nodes,
        inner_nodes,
    })
}

/// [`integral_region`], doubling both resolutions after each failed
/// convergence check, at most `max_refinements` times.
pub fn integral_region_refined(
    curve: &SupportCurve,
    region: Region,
    settings: &QuadratureSettings,
    max_refinements: usize,
) -> Result<RegionIntegral> {
    let mut s = *settings;
    let mut round = 0;
    loop {
        match integral_region(curve, region, &s) {
            Err(Error::NonConvergedQuadrature { .. }) if round < max_refinements => {
                s.nodes *= 2;
                s.inner_nodes *= 2;
                round += 1;
            }
            other => return other,
        }
    }
}

fn region_value(
    curve: &SupportCurve,
    region: Region,
    nodes: usize,
    inner: usize,
    panels: usize,
    conj_tol: f64,
) -> Result<f64> {
    match region {
        Region::HalfSquare => Ok(square_sum(curve, nodes, |p| p.integrand())),
        Region::GammaDelta | Region::DeltaGammaStar => {
            let gl = GaussLegendre::new(inner);
            let outer = 2 * nodes;
            let h = TAU / outer as f64;
            let rows: Vec<f64> = (0..outer)
                .into_par_iter()
                .map(|i| {
                    let t = h * i as f64;
                    let phi = conjugate_map(curve, t, conj_tol)?;
                    let (lo, hi) = match region {
                        Region::GammaDelta => (t, phi),
                        _ => (phi, t + PI),
                    };
                    let jt = curve.eval_jet(t);
                    Ok(gl.integrate(lo, hi, panels, |s| {
                        Partials::from_jets(&jt, &curve.eval_jet(s)).integrand()
                    }))
                })
                .collect::<Result<_>>()?;
            Ok(h * rows.iter().sum::<f64>())
        }
    }
}

/// Trapezoid rule over `[0, pi]^2` for an integrand built from the partials.
/// Valid for symmetric tables, where every product of two partials is
/// pi-periodic in each variable.
fn square_sum<F: Fn(&Partials) -> f64 + Sync>(curve: &SupportCurve, n: usize, f: F) -> f64 {
    let h = PI / n as f64;
    let jets: Vec<CurveJet> = (0..n).map(|j| curve.eval_jet(h * j as f64)).collect();
    let rows: Vec<f64> = jets
        .par_iter()
        .map(|a| {
            jets.iter()
                .map(|b| f(&Partials::from_jets(a, b)))
                .sum::<f64>()
        })
        .collect();
    h * h * rows.iter().sum::<f64>()
}

/// Minimum of `L12` on a `grid_n x grid_n` grid of the phase space, kept
/// 0.05 rad away from both boundaries.
pub fn twist_min(curve: &SupportCurve, grid_n: usize) -> Result<f64> {
    curve.ensure_valid()?;
    const MARGIN: f64 = 0.05;
    let n = grid_n.max(2);
    let mins: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t1 = TAU * i as f64 / n as f64;
            let j1 = curve.eval_jet(t1);
            (0..n)
                .map(|j| {
                    let gap = MARGIN + (PI - 2.0 * MARGIN) * j as f64 / (n - 1) as f64;
                    j1.tangent.det(curve.eval_tangent(t1 + gap))
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(mins.into_iter().fold(f64::INFINITY, f64::min))
}

/// Moments of `rho^2` over a range: `(∫ rho^2, ∫ rho^2 cos 2a, ∫ rho^2 sin 2a)`.
fn rho_moments(curve: &SupportCurve, period: f64) -> (f64, f64, f64) {
    let n = curve.quadrature_nodes();
    let h = period / n as f64;
    let mut m = (0.0, 0.0, 0.0);
    for j in 0..n {
        let a = h * j as f64;
        let r2 = curve.radius_of_curvature(a).powi(2);
        let (s2, c2) = (2.0 * a).sin_cos();
        m.0 += r2;
        m.1 += r2 * c2;
        m.2 += r2 * s2;
    }
    (m.0 * h, m.1 * h, m.2 * h)
}

/// `-2 A ∫rho^2 + (∫rho^2)^2 - (∫rho^2 cos 2a)^2 - (∫rho^2 sin 2a)^2` over a
/// full period. For symmetric tables this equals four times the square integral.
pub fn closed_form_f(curve: &SupportCurve) -> Result<f64> {
    curve.ensure_symmetric()?;
    let (x, c, s) = rho_moments(curve, TAU);
    Ok(-2.0 * curve.area() * x + x * x - c * c - s * s)
}

/// Both sides of an integral identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `residual / max(|lhs|, |rhs|, 1)`.
    pub relative_residual: f64,
    pub quadrature_change: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64, quadrature_change: f64) -> Self {
        let residual = (lhs - rhs).abs();
        Self {
            lhs,
            rhs,
            residual,
            relative_residual: residual / lhs.abs().max(rhs.abs()).max(1.0),
            quadrature_change,
        }
    }
}

fn converged_square<F: Fn(&Partials) -> f64 + Sync + Copy>(
    curve: &SupportCurve,
    settings: &QuadratureSettings,
    f: F,
) -> Result<(f64, f64)> {
    let base = square_sum(curve, settings.nodes, f);
    let doubled = square_sum(curve, 2 * settings.nodes, f);
    let change = (doubled - base).abs();
    if !(change <= settings.convergence_tol) {
        return Err(Error::NonConvergedQuadrature {
            change,
            tol: settings.convergence_tol,
        });
    }
    Ok((base, change))
}

/// `∬_{[0,pi]^2} (L11 + L22) L12  =  -A ∫_0^pi rho^2`.
pub fn int_a_check(curve: &SupportCurve, settings: &QuadratureSettings) -> Result<IdentityCheck> {
    curve.ensure_symmetric()?;
    let (lhs, change) = converged_square(curve, settings, |p| (p.l11 + p.l22) * p.l12)?;
    let (x, _, _) = rho_moments(curve, PI);
    Ok(IdentityCheck::new(lhs, -curve.area() * x, change))
}

/// `2 ∬_{[0,pi]^2} L12^2  =  (∫_0^pi rho^2)^2 - (∫_0^pi rho^2 cos 2a)^2 - (∫_0^pi rho^2 sin 2a)^2`.
pub fn int_b_check(curve: &SupportCurve, settings: &QuadratureSettings) -> Result<IdentityCheck> {
    curve.ensure_symmetric()?;
    let (sq, change) = converged_square(curve, settings, |p| p.l12 * p.l12)?;
    let (x, c, s) = rho_moments(curve, PI);
    Ok(IdentityCheck::new(
        2.0 * sq,
        x * x - c * c - s * s,
        2.0 * change,
    ))
}

/// The three region integrals and their pairwise differences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionAgreement {
    pub gamma_delta: f64,
    pub delta_gamma_star: f64,
    pub half_square: f64,
    pub max_pairwise_difference: f64,
}

pub fn region_agreement_check(
    curve: &SupportCurve,
    settings: &QuadratureSettings,
) -> Result<RegionAgreement> {
    curve.ensure_symmetric()?;
    require_radon(curve, settings)?;
    let gd = integral_region(curve, Region::GammaDelta, settings)?.value;
    let dg = integral_region(curve, Region::DeltaGammaStar, settings)?.value;
    let sq = integral_region(curve, Region::HalfSquare, settings)?.value;
    let max_pairwise_difference = (gd - dg).abs().max((gd - sq).abs()).max((dg - sq).abs());
    Ok(RegionAgreement {
        gamma_delta: gd,
        delta_gamma_star: dg,
        half_square: sq,
        max_pairwise_difference,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralResiduals {
    pub int_a: f64,
    pub int_b: f64,
    /// `|4 I_square - F_closed|`
    pub square_vs_closed_form: f64,
    /// Largest pairwise difference of the three region integrals, when all exist.
    pub region_agreement: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureNodes {
    pub square_nodes_per_axis: usize,
    pub outer_nodes: usize,
    pub inner_nodes: usize,
}

/// Quadrature values of the rigidity functional plus closed-form counterparts.
///
/// The graph-bounded regions are `None` when the Radon hypothesis fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralReport {
    #[serde(rename = "I_gamma_delta")]
    pub i_gamma_delta: Option<f64>,
    #[serde(rename = "I_delta_gammastar")]
    pub i_delta_gammastar: Option<f64>,
    #[serde(rename = "I_square")]
    pub i_square: f64,
    #[serde(rename = "F_closed")]
    pub f_closed: f64,
    #[serde(rename = "intA_lhs")]
    pub int_a_lhs: f64,
    #[serde(rename = "intA_rhs")]
    pub int_a_rhs: f64,
    #[serde(rename = "intB_lhs")]
    pub int_b_lhs: f64,
    #[serde(rename = "intB_rhs")]
    pub int_b_rhs: f64,
    pub radon_defect: f64,
    pub residuals: IntegralResiduals,
    /// Largest change observed when doubling every quadrature resolution.
    pub max_quadrature_change: f64,
    pub quadrature_nodes: QuadratureNodes,
    pub settings: QuadratureSettings,
}

impl IntegralReport {
    pub fn radon_hypothesis_holds(&self) -> bool {
        self.i_gamma_delta.is_some()
    }
}

pub fn integral_report(
    curve: &SupportCurve,
    settings: &QuadratureSettings,
) -> Result<IntegralReport> {
    curve.ensure_symmetric()?;
    let defect = radon_defect(curve, settings.radon_grid, settings.conjugate_tol)?;
    let radon_ok = defect < settings.radon_tol;

    let square = integral_region(curve, Region::HalfSquare, settings)?;
    let mut changes = vec![square.change];
    let mut graph_region = |r: Region| -> Result<Option<f64>> {
        if !radon_ok {
            return Ok(None);
        }
        let v = integral_region(curve, r, settings)?;
        changes.push(v.change);
        Ok(Some(v.value))
    };
    let gd = graph_region(Region::GammaDelta)?;
    let dg = graph_region(Region::DeltaGammaStar)?;

    let f_closed = closed_form_f(curve)?;
    let a = int_a_check(curve, settings)?;
    let b = int_b_check(curve, settings)?;
    changes.push(a.quadrature_change);
    changes.push(b.quadrature_change);

    let region_agreement = match (gd, dg) {
        (Some(x), Some(y)) => Some(
            (x - y)
                .abs()
                .max((x - square.value).abs())
                .max((y - square.value).abs()),
        ),
        _ => None,
    };

    Ok(IntegralReport {
        i_gamma_delta: gd,
        i_delta_gammastar: dg,
        i_square: square.value,
        f_closed,
        int_a_lhs: a.lhs,
        int_a_rhs: a.rhs,
        int_b_lhs: b.lhs,
        int_b_rhs: b.rhs,
        radon_defect: defect,
        residuals: IntegralResiduals {
            int_a: a.residual,
            int_b: b.residual,
            square_vs_closed_form: (4.0 * square.value - f_closed).abs(),
            region_agreement,
        },
        max_quadrature_change: changes.into_iter().fold(0.0, f64::max),
        quadrature_nodes: QuadratureNodes {
            square_nodes_per_axis: settings.nodes,
            outer_nodes: 2 * settings.nodes,
            inner_nodes: settings.inner_nodes,
        },
        settings: *settings,
    })
}
