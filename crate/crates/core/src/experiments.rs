//! Rigidity reports, foliation probes and phase-portrait datasets.
//!
//! None of these certify the foliation hypothesis. A report only says whether
//! the numbers are consistent with the table being an ellipse.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{SupportCurve, DEFAULT_VALIDATION_GRID};
use crate::dynamics::{
    delta_curve, iterate, radon_defect, rotation_from_samples, PhasePoint, RotationEstimate,
};
use crate::error::{Error, Result};
use crate::integrals::{
    closed_form_f, integral_region_refined, QuadratureSettings, Region, RegionIntegral,
};
use crate::normalize::{
    isoperimetric_deficit, normalize, normalized_curve, NormalizationResult, NormalizeSettings,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReportConfig {
    pub quadrature: QuadratureSettings,
    pub normalize: NormalizeSettings,
    /// Absolute tolerance for the verdict tests on `F` and on the deficit.
    pub verdict_tol: f64,
    pub validation_grid: usize,
    /// Resolution doublings allowed per region integral.
    pub max_refinements: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSettings::default(),
            normalize: NormalizeSettings::default(),
            verdict_tol: 1e-8,
            validation_grid: DEFAULT_VALIDATION_GRID,
            max_refinements: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithEllipse,
    HypothesesFail,
    InequalityViolated,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::ConsistentWithEllipse => "consistent_with_ellipse",
            Verdict::HypothesesFail => "hypotheses_fail",
            Verdict::InequalityViolated => "inequality_violated",
        }
    }
}

/// Region integrals; the graph-bounded ones are absent when the Radon test fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RegionIntegrals {
    pub gamma_delta: Option<f64>,
    pub delta_gamma_star: Option<f64>,
    pub half_square: Option<f64>,
}

impl RegionIntegrals {
    fn values(&self) -> impl Iterator<Item = f64> {
        [self.gamma_delta, self.delta_gamma_star, self.half_square]
            .into_iter()
            .flatten()
    }
}

/// A step of the report that could not be completed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub stage: &'static str,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn new(stage: &'static str, err: &Error) -> Self {
        Self {
            stage,
            kind: err.kind(),
            message: err.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityReport {
    pub area: f64,
    pub perimeter: f64,
    pub isoperimetric_deficit: f64,
    pub radon_defect: Option<f64>,
    #[serde(rename = "F_closed")]
    pub f_closed: Option<f64>,
    pub region_integrals: RegionIntegrals,
    /// Resolution actually used for each computed region.
    pub region_details: Vec<RegionIntegral>,
    pub normalization: Option<NormalizationResult>,
    #[serde(rename = "F_normalized")]
    pub f_normalized: Option<f64>,
    pub normalized_deficit: Option<f64>,
    pub verdict: Verdict,
    pub failures: Vec<Failure>,
    pub config: ReportConfig,
}

fn record<T>(failures: &mut Vec<Failure>, stage: &'static str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            failures.push(Failure::new(stage, &e));
            None
        }
    }
}

/// Runs the full diagnostic chain and assigns a verdict.
///
/// Stages that fail are annotated in `failures` and leave their fields empty.
/// A failed hypothesis (validation, Radon test, normalization) gives
/// `hypotheses_fail`; otherwise any positive `F`, a non-zero `F` after
/// normalization or a non-zero normalized deficit gives `inequality_violated`.
pub fn rigidity_report(curve: &SupportCurve, config: &ReportConfig) -> RigidityReport {
    let tol = config.verdict_tol;
    let q = &config.quadrature;
    let mut failures = Vec::new();
    let mut hypotheses_ok = true;

    let validation = curve.validate(config.validation_grid);
    if !validation.passes() {
        hypotheses_ok = false;
        failures.push(Failure {
            stage: "validate",
            kind: "invalid_curve",
            message: validation.describe_failures(),
        });
    }
    let l = curve.perimeter();
    let area = curve.area();
    let deficit = l * l - 2.0 * TAU * area;

    let mut defect = None;
    let mut f_closed = None;
    let mut regions = RegionIntegrals::default();
    let mut details = Vec::new();
    let mut normalization = None;
    let mut f_normalized = None;
    let mut normalized_deficit = None;

    if hypotheses_ok {
        defect = record(
            &mut failures,
            "radon_defect",
            radon_defect(curve, q.radon_grid, q.conjugate_tol),
        );
        let radon_ok = defect.is_some_and(|d| d < q.radon_tol);
        if defect.is_some() && !radon_ok {
            hypotheses_ok = false;
            let err = Error::RadonHypothesisFailed {
                defect: defect.unwrap_or(f64::NAN),
                tol: q.radon_tol,
            };
            failures.push(Failure::new("radon_defect", &err));
        }

        let wanted: Vec<Region> = Region::ALL
            .into_iter()
            .filter(|r| radon_ok || !r.needs_conjugate_graph())
            .collect();
        let values: Vec<Result<RegionIntegral>> = wanted
            .par_iter()
            .map(|&r| integral_region_refined(curve, r, q, config.max_refinements))
            .collect();
        for (r, v) in wanted.into_iter().zip(values) {
            let v = record(&mut failures, r.name(), v).map(|d| {
                details.push(d);
                d.value
            });
            match r {
                Region::GammaDelta => regions.gamma_delta = v,
                Region::DeltaGammaStar => regions.delta_gamma_star = v,
                Region::HalfSquare => regions.half_square = v,
            }
        }

        f_closed = record(&mut failures, "closed_form_f", closed_form_f(curve));

        normalization = record(
            &mut failures,
            "normalize",
            normalize(curve, &config.normalize),
        );
        match normalization {
            None => hypotheses_ok = false,
            Some(n) => {
                if let Some(image) = record(
                    &mut failures,
                    "normalized_curve",
                    normalized_curve(curve, &n, &config.normalize),
                ) {
                    f_normalized = record(
                        &mut failures,
                        "closed_form_f_normalized",
                        closed_form_f(&image),
                    );
                    normalized_deficit = record(
                        &mut failures,
                        "normalized_deficit",
                        isoperimetric_deficit(&image),
                    );
                }
            }
        }
    }

    let verdict = if !hypotheses_ok {
        Verdict::HypothesesFail
    } else {
        let sign_ok = f_closed.is_some_and(|f| f <= tol) && regions.values().all(|v| v <= tol);
        let flat_ok = f_normalized.is_some_and(|f| f.abs() <= tol);
        let round_ok = normalized_deficit.is_some_and(|d| d < tol);
        if sign_ok && flat_ok && round_ok && failures.is_empty() {
            Verdict::ConsistentWithEllipse
        } else {
            Verdict::InequalityViolated
        }
    };

    RigidityReport {
        area,
        perimeter: l,
        isoperimetric_deficit: deficit,
        radon_defect: defect,
        f_closed,
        region_integrals: regions,
        region_details: details,
        normalization,
        f_normalized,
        normalized_deficit,
        verdict,
        failures,
        config: *config,
    }
}

/// Rotation estimates along the transversal `{t = t0}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoliationProbe {
    pub t0: f64,
    pub seeds: Vec<PhasePoint>,
    pub rotation_values: Vec<RotationEstimate>,
    /// Largest sliding-window deviation per seed.
    pub seed_dispersion: Vec<f64>,
    pub monotone: bool,
    pub dispersion: f64,
}

/// Default transversal: 33 seeds with `s - t` spanning `[0.1, pi - 0.1]`.
pub const DEFAULT_PROBE_SEEDS: usize = 33;
pub const DEFAULT_PROBE_RANGE: (f64, f64) = (0.1, PI - 0.1);

/// Max deviation of the windowed quotient `(t_{k+w} - t_k) / (2 pi w)` from
/// the whole-orbit quotient, for windows of a quarter of the orbit.
pub fn window_dispersion(samples: &[f64], n: usize) -> f64 {
    let overall = (samples[n] - samples[0]) / (TAU * n as f64);
    let w = (n / 4).max(1);
    (0..=n - w)
        .map(|k| ((samples[k + w] - samples[k]) / (TAU * w as f64) - overall).abs())
        .fold(0.0, f64::max)
}

pub fn foliation_probe(
    curve: &SupportCurve,
    t0: f64,
    s_range: (f64, f64),
    n_seeds: usize,
    n: usize,
    tol: f64,
) -> Result<FoliationProbe> {
    curve.ensure_valid()?;
    let (lo, hi) = s_range;
    if n_seeds == 0 || n == 0 {
        return Err(Error::InvalidInput(
            "probe needs at least one seed and one iteration".into(),
        ));
    }
    if !(lo > 0.0 && hi < PI && (lo < hi || (n_seeds == 1 && lo <= hi))) {
        return Err(Error::InvalidInput(format!(
            "seed range ({lo}, {hi}) must satisfy 0 < s_min < s_max < pi"
        )));
    }
    let seeds: Vec<PhasePoint> = (0..n_seeds)
        .map(|i| {
            let f = if n_seeds == 1 {
                0.0
            } else {
                i as f64 / (n_seeds - 1) as f64
            };
            PhasePoint::new(t0, t0 + lo + (hi - lo) * f)
        })
        .collect::<Result<_>>()?;

    let per_seed: Vec<(RotationEstimate, f64)> = seeds
        .par_iter()
        .map(|&pp| {
            let orbit = iterate(curve, pp, n - 1, tol)?;
            Ok((
                rotation_from_samples(&orbit.samples, n),
                window_dispersion(&orbit.samples, n),
            ))
        })
        .collect::<Result<_>>()?;
    let (rotation_values, seed_dispersion): (Vec<_>, Vec<_>) = per_seed.into_iter().unzip();

    let monotone = rotation_values
        .windows(2)
        .all(|w| w[1].value >= w[0].value - (w[0].error_bound + w[1].error_bound));
    let dispersion = seed_dispersion.iter().copied().fold(0.0, f64::max);
    Ok(FoliationProbe {
        t0,
        seeds,
        rotation_values,
        seed_dispersion,
        monotone,
        dispersion,
    })
}

/// One orbit point in the `(t mod 2 pi, s - t)` chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PortraitPoint {
    pub seed: usize,
    pub step: usize,
    pub t: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhasePortrait {
    pub points: Vec<PortraitPoint>,
    pub radon_defect: f64,
    /// `(alpha, Phi(alpha) - alpha)` when the Radon test passes.
    pub delta: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortraitSettings {
    pub map_tol: f64,
    pub conjugate_tol: f64,
    pub radon_tol: f64,
    pub radon_grid: usize,
    pub delta_grid: usize,
}

impl Default for PortraitSettings {
    fn default() -> Self {
        let q = QuadratureSettings::default();
        Self {
            map_tol: crate::dynamics::DEFAULT_MAP_TOL,
            conjugate_tol: q.conjugate_tol,
            radon_tol: q.radon_tol,
            radon_grid: q.radon_grid,
            delta_grid: 512,
        }
    }
}

/// Point clouds of `n` map steps from each seed, plus the graph of `Phi`.
pub fn phase_portrait(
    curve: &SupportCurve,
    seeds: &[PhasePoint],
    n: usize,
    settings: &PortraitSettings,
) -> Result<PhasePortrait> {
    curve.ensure_valid()?;
    let orbits: Vec<Vec<PortraitPoint>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &pp)| {
            let orbit = iterate(curve, pp, n, settings.map_tol)?;
            Ok(orbit
                .phase_points()
                .enumerate()
                .map(|(step, q)| PortraitPoint {
                    seed: i,
                    step,
                    t: q.t1.rem_euclid(TAU),
                    gap: q.gap(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let defect = radon_defect(curve, settings.radon_grid, settings.conjugate_tol)?;
    let delta = if defect < settings.radon_tol {
        let samples = delta_curve(curve, settings.delta_grid, settings.conjugate_tol)?;
        Some(samples.grid.into_iter().map(|(a, b)| (a, b - a)).collect())
    } else {
        None
    };
    Ok(PhasePortrait {
        points: orbits.into_iter().flatten().collect(),
        radon_defect: defect,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{ellipse_curve, Projection};
    use std::f64::consts::FRAC_PI_6;

    fn bumpy(eps: f64) -> SupportCurve {
        SupportCurve::from_harmonics(1.0, &[(4, eps, 0.0)], true).unwrap()
    }

    #[test]
    fn circle_report() {
        let r = rigidity_report(&SupportCurve::circle(1.0), &ReportConfig::default());
        assert_eq!(
            r.verdict,
            Verdict::ConsistentWithEllipse,
            "{:?}",
            r.failures
        );
        assert!(r.f_closed.unwrap().abs() < 1e-10);
        assert!(r.region_integrals.values().all(|v| v.abs() < 1e-10));
        assert!(r.isoperimetric_deficit.abs() < 1e-10);
    }

    #[test]
    fn ellipse_report() {
        let e = ellipse_curve(2.0, 1.0, FRAC_PI_6, &Projection::default()).unwrap();
        let r = rigidity_report(&e, &ReportConfig::default());
        assert_eq!(
            r.verdict,
            Verdict::ConsistentWithEllipse,
            "{:?}",
            r.failures
        );
        assert!(r.f_normalized.unwrap().abs() < 1e-8);
        assert!(r.isoperimetric_deficit > 0.1);
    }

    #[test]
    fn bumpy_report() {
        let r = rigidity_report(&bumpy(0.05), &ReportConfig::default());
        assert_eq!(r.verdict, Verdict::HypothesesFail);
        assert!(r.region_integrals.gamma_delta.is_none());
        assert!(r.radon_defect.unwrap() > 1e-4);
        let want = 1.5375 * PI * PI;
        assert!((r.f_closed.unwrap() - want).abs() < 1e-6 * want);
        assert!(r
            .failures
            .iter()
            .any(|f| f.kind == "radon_hypothesis_failed"));
    }

    #[test]
    fn invalid_table_report() {
        let c = SupportCurve::from_harmonics(1.0, &[(2, 0.5, 0.0)], true).unwrap();
        let r = rigidity_report(&c, &ReportConfig::default());
        assert_eq!(r.verdict, Verdict::HypothesesFail);
        assert!(r.radon_defect.is_none());
        assert_eq!(r.failures[0].stage, "validate");
    }

    #[test]
    fn circle_probe_is_linear() {
        let p = foliation_probe(
            &SupportCurve::circle(1.0),
            0.0,
            DEFAULT_PROBE_RANGE,
            DEFAULT_PROBE_SEEDS,
            400,
            1e-12,
        )
        .unwrap();
        assert!(p.monotone);
        assert!(p.dispersion < 1e-12);
        for (s, r) in p.seeds.iter().zip(&p.rotation_values) {
            assert!((r.value - s.gap() / TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_probe_is_monotone() {
        let e = ellipse_curve(2.0, 1.0, 0.0, &Projection::default()).unwrap();
        let p = foliation_probe(&e, 0.0, DEFAULT_PROBE_RANGE, 9, 300, 1e-12).unwrap();
        assert!(p.monotone);
        assert!(p.seeds.windows(2).all(|w| w[1].t2 > w[0].t2));
    }

    #[test]
    fn probe_rejects_bad_range() {
        let c = SupportCurve::circle(1.0);
        assert!(foliation_probe(&c, 0.0, (0.0, 1.0), 5, 10, 1e-12).is_err());
        assert!(foliation_probe(&c, 0.0, (1.0, 0.5), 5, 10, 1e-12).is_err());
    }

    #[test]
    fn circle_portrait_is_horizontal() {
        let seeds = [
            PhasePoint::new(0.0, 0.7).unwrap(),
            PhasePoint::new(1.0, 2.5).unwrap(),
        ];
        let p = phase_portrait(
            &SupportCurve::circle(1.0),
            &seeds,
            50,
            &PortraitSettings::default(),
        )
        .unwrap();
        assert_eq!(p.points.len(), 2 * 51);
        for q in &p.points {
            let want = if q.seed == 0 { 0.7 } else { 1.5 };
            assert!((q.gap - want).abs() < 1e-10);
        }
        let delta = p.delta.unwrap();
        assert!(delta.iter().all(|&(_, g)| (g - PI / 2.0).abs() < 1e-12));
    }

    #[test]
    fn portrait_stays_in_phase_space() {
        let seeds = [
            PhasePoint::new(0.3, 0.5).unwrap(),
            PhasePoint::new(0.0, 3.0).unwrap(),
        ];
        let p = phase_portrait(&bumpy(0.05), &seeds, 80, &PortraitSettings::default()).unwrap();
        assert!(p.delta.is_none());
        assert!(p
            .points
            .iter()
            .all(|q| q.gap > 0.0 && q.gap < PI && (0.0..TAU).contains(&q.t)));
    }
}
