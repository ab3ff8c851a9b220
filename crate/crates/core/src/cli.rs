//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code: 0 on success, 1 when a hypothesis
//! fails, 2 on numerical failure or bad usage.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::curve::{SupportCurve, DEFAULT_VALIDATION_GRID};
use crate::dynamics::{
    billiard_map, billiard_map_inverse, chord_residual, conjugate_map, delta_curve, iterate,
    radon_profile, rotation_number, PhasePoint, DEFAULT_CONJUGATE_TOL, DEFAULT_MAP_TOL,
};
use crate::error::{Error, Result};
use crate::experiments::{
    foliation_probe, phase_portrait, rigidity_report, PortraitSettings, ReportConfig, Verdict,
    DEFAULT_PROBE_RANGE, DEFAULT_PROBE_SEEDS,
};
use crate::integrals::{
    int_a_check, int_b_check, integral_region, integral_report, region_agreement_check,
    QuadratureSettings, Region,
};
use crate::io::{csv, load_curve, real, to_json, CurveSpec};
use crate::normalize::{
    isoperimetric_deficit, normalize, normalized_curve, NormalizationResult, NormalizeSettings,
};

#[derive(Debug, Parser)]
#[command(
    name = "symbill",
    version,
    about = "Symplectic billiards on centrally symmetric convex tables"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Curve spec file (JSON).
    #[arg(long, global = true)]
    pub curve: Option<PathBuf>,

    /// Named tolerance, e.g. `--tol map=1e-12`. Names: map, conj, radon, quad, norm, verdict.
    #[arg(long = "tol", global = true, value_parser = parse_tol)]
    pub tols: Vec<(String, f64)>,

    /// Quadrature nodes per axis.
    #[arg(long, global = true)]
    pub nodes: Option<usize>,

    /// Map iterations.
    #[arg(long, global = true)]
    pub iters: Option<usize>,

    /// Output file; `.csv` selects the tabular form where one exists. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check positivity of the support function and curvature radius.
    Validate {
        #[arg(long, default_value_t = DEFAULT_VALIDATION_GRID)]
        grid: usize,
    },
    /// One step of the map (or its inverse).
    Map {
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, allow_hyphen_values = true)]
        t2: f64,
        #[arg(long)]
        inverse: bool,
    },
    /// Forward orbit.
    Orbit {
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, allow_hyphen_values = true)]
        t2: f64,
    },
    /// Birkhoff rotation estimate.
    Rotation {
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, allow_hyphen_values = true)]
        t2: f64,
    },
    /// Conjugate-direction map at one angle, or sampled on a grid.
    Conjugate {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Radon defect and its profile.
    Radon {
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Region integrals of F.
    Integrals {
        /// gamma-delta, delta-gamma-star, half-square or all.
        #[arg(long, default_value = "all")]
        region: String,
    },
    /// The two integral identities and the three-region comparison.
    Identities,
    /// Affine normalization killing the second harmonics.
    Normalize,
    /// Isoperimetric deficit.
    Deficit,
    /// Full rigidity report with verdict.
    Report,
    /// Rotation numbers along a transversal.
    Probe {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = DEFAULT_PROBE_RANGE.0)]
        s_min: f64,
        #[arg(long, default_value_t = DEFAULT_PROBE_RANGE.1)]
        s_max: f64,
        #[arg(long, default_value_t = DEFAULT_PROBE_SEEDS)]
        seeds: usize,
    },
    /// Phase-portrait point clouds.
    Portrait {
        /// Seed `t1,t2`; repeatable. Defaults to 9 seeds on the probe transversal.
        #[arg(long = "seed", value_parser = parse_seed, allow_hyphen_values = true)]
        seeds: Vec<(f64, f64)>,
    },
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("tolerance '{name}': {e}"))?;
    Ok((name.trim().to_string(), value))
}

fn parse_seed(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected t1,t2, got '{s}'"))?;
    let a = a.trim().parse().map_err(|e| format!("seed t1: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("seed t2: {e}"))?;
    Ok((a, b))
}

/// Tolerances addressable with `--tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub map: f64,
    pub conj: f64,
    pub radon: f64,
    pub quad: f64,
    pub norm: f64,
    pub verdict: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let q = QuadratureSettings::default();
        Self {
            map: DEFAULT_MAP_TOL,
            conj: DEFAULT_CONJUGATE_TOL,
            radon: q.radon_tol,
            quad: q.convergence_tol,
            norm: NormalizeSettings::default().tol,
            verdict: ReportConfig::default().verdict_tol,
        }
    }
}

impl Tolerances {
    pub fn from_pairs(pairs: &[(String, f64)]) -> Result<Self> {
        let mut t = Self::default();
        for (name, value) in pairs {
            if !(*value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "tolerance '{name}' must be positive, got {value}"
                )));
            }
            let slot = match name.as_str() {
                "map" => &mut t.map,
                "conj" => &mut t.conj,
                "radon" => &mut t.radon,
                "quad" => &mut t.quad,
                "norm" => &mut t.norm,
                "verdict" => &mut t.verdict,
                other => return Err(Error::InvalidInput(format!("unknown tolerance '{other}'"))),
            };
            *slot = *value;
        }
        Ok(t)
    }
}

/// Resolved settings for one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub curve_path: PathBuf,
    pub tolerances: Tolerances,
    pub nodes: Option<usize>,
    pub iters: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn quadrature(&self) -> QuadratureSettings {
        let mut q = QuadratureSettings::default();
        if let Some(n) = self.nodes {
            q.nodes = n;
        }
        q.conjugate_tol = self.tolerances.conj;
        q.convergence_tol = self.tolerances.quad;
        q.radon_tol = self.tolerances.radon;
        q
    }

    fn normalize(&self) -> NormalizeSettings {
        NormalizeSettings {
            tol: self.tolerances.norm,
            ..NormalizeSettings::default()
        }
    }

    fn report(&self) -> ReportConfig {
        ReportConfig {
            quadrature: self.quadrature(),
            normalize: self.normalize(),
            verdict_tol: self.tolerances.verdict,
            ..ReportConfig::default()
        }
    }

    fn iters(&self, default: usize) -> usize {
        self.iters.unwrap_or(default)
    }

    fn wants_csv(&self) -> bool {
        self.out
            .as_deref()
            .and_then(Path::extension)
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    }
}

/// Machine-readable failure record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub command: String,
    pub kind: &'static str,
    pub hypothesis_failure: bool,
    pub exit_code: i32,
    pub message: String,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_hypothesis_failure() {
        1
    } else {
        2
    }
}

/// Output text and exit code of a completed command.
struct Outcome {
    text: String,
    code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, code: 0 }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let name = command_name(&cli.command);
    let result = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::InvalidInput(format!("thread pool: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(outcome) => match write_output(cli.out.as_deref(), &outcome.text) {
            Ok(()) => outcome.code,
            Err(e) => report_error(name, &e),
        },
        Err(e) => report_error(name, &e),
    }
}

fn report_error(command: &str, err: &Error) -> i32 {
    let code = exit_code(err);
    let record = ErrorRecord {
        status: "error",
        command: command.to_string(),
        kind: err.kind(),
        hypothesis_failure: err.is_hypothesis_failure(),
        exit_code: code,
        message: err.to_string(),
    };
    eprint!("{}", to_json(&record));
    code
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Map { .. } => "map",
        Command::Orbit { .. } => "orbit",
        Command::Rotation { .. } => "rotation",
        Command::Conjugate { .. } => "conjugate",
        Command::Radon { .. } => "radon",
        Command::Integrals { .. } => "integrals",
        Command::Identities => "identities",
        Command::Normalize => "normalize",
        Command::Deficit => "deficit",
        Command::Report => "report",
        Command::Probe { .. } => "probe",
        Command::Portrait { .. } => "portrait",
    }
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let config = RunConfig {
        curve_path: cli
            .curve
            .clone()
            .ok_or_else(|| Error::InvalidInput("--curve <path> is required".into()))?,
        tolerances: Tolerances::from_pairs(&cli.tols)?,
        nodes: cli.nodes,
        iters: cli.iters,
        out: cli.out.clone(),
    };
    if config.nodes == Some(0) || config.iters == Some(0) {
        return Err(Error::InvalidInput(
            "--nodes and --iters must be positive".into(),
        ));
    }
    let curve = load_curve(&config.curve_path)?;
    match &cli.command {
        Command::Validate { grid } => cmd_validate(&curve, *grid),
        Command::Report => cmd_report(&curve, &config),
        other => {
            curve.ensure_valid()?;
            dispatch(other, &curve, &config)
        }
    }
}

fn dispatch(command: &Command, curve: &SupportCurve, config: &RunConfig) -> Result<Outcome> {
    let tol = &config.tolerances;
    match command {
        Command::Map { t1, t2, inverse } => {
            let pp = PhasePoint::new(*t1, *t2)?;
            let image = if *inverse {
                billiard_map_inverse(curve, pp, tol.map)?
            } else {
                billiard_map(curve, pp, tol.map)?
            };
            let (a, b) = if *inverse { (image, pp) } else { (pp, image) };
            let residual = chord_residual(curve, a.t1, a.t2, b.t2);
            #[derive(Serialize)]
            struct Out {
                input: PhasePoint,
                image: PhasePoint,
                inverse: bool,
                chord_residual: f64,
            }
            Ok(Outcome::ok(to_json(&Out {
                input: pp,
                image,
                inverse: *inverse,
                chord_residual: residual,
            })))
        }
        Command::Orbit { t1, t2 } => cmd_orbit(curve, config, PhasePoint::new(*t1, *t2)?),
        Command::Rotation { t1, t2 } => {
            let pp = PhasePoint::new(*t1, *t2)?;
            let est = rotation_number(curve, pp, config.iters(1000), tol.map)?;
            #[derive(Serialize)]
            struct Out {
                seed: PhasePoint,
                #[serde(flatten)]
                estimate: crate::dynamics::RotationEstimate,
            }
            Ok(Outcome::ok(to_json(&Out {
                seed: pp,
                estimate: est,
            })))
        }
        Command::Conjugate { alpha, grid } => match alpha {
            Some(a) => {
                let phi = conjugate_map(curve, *a, tol.conj)?;
                let g = curve.eval_point(*a);
                #[derive(Serialize)]
                struct Out {
                    alpha: f64,
                    phi: f64,
                    residual: f64,
                }
                Ok(Outcome::ok(to_json(&Out {
                    alpha: *a,
                    phi,
                    residual: crate::geometry::PlanePoint::tangent_dir(phi).det(g),
                })))
            }
            None => {
                let samples = delta_curve(curve, *grid, tol.conj)?;
                let profile = radon_profile(curve, *grid, tol.conj)?;
                if config.wants_csv() {
                    return Ok(Outcome::ok(profile_csv(&profile)));
                }
                #[derive(Serialize)]
                struct Out {
                    grid: usize,
                    half_period_error: f64,
                    samples: Vec<crate::dynamics::RadonSample>,
                }
                Ok(Outcome::ok(to_json(&Out {
                    grid: *grid,
                    half_period_error: samples.half_period_error,
                    samples: profile,
                })))
            }
        },
        Command::Radon { grid } => {
            let profile = radon_profile(curve, *grid, tol.conj)?;
            if config.wants_csv() {
                return Ok(Outcome::ok(profile_csv(&profile)));
            }
            let defect = profile.iter().map(|s| s.defect).fold(0.0, f64::max);
            #[derive(Serialize)]
            struct Out {
                radon_defect: f64,
                tol: f64,
                radon_hypothesis_holds: bool,
                grid: usize,
                profile: Vec<crate::dynamics::RadonSample>,
            }
            Ok(Outcome::ok(to_json(&Out {
                radon_defect: defect,
                tol: tol.radon,
                radon_hypothesis_holds: defect < tol.radon,
                grid: *grid,
                profile,
            })))
        }
        Command::Integrals { region } => {
            let q = config.quadrature();
            if region == "all" {
                Ok(Outcome::ok(to_json(&integral_report(curve, &q)?)))
            } else {
                let r: Region = region.parse()?;
                Ok(Outcome::ok(to_json(&integral_region(curve, r, &q)?)))
            }
        }
        Command::Identities => {
            let q = config.quadrature();
            let (region_agreement, region_agreement_skipped) =
                match region_agreement_check(curve, &q) {
                    Ok(r) => (Some(r), None),
                    Err(e) if e.is_hypothesis_failure() => (None, Some(e.to_string())),
                    Err(e) => return Err(e),
                };
            #[derive(Serialize)]
            struct Out {
                #[serde(rename = "intA")]
                int_a: crate::integrals::IdentityCheck,
                #[serde(rename = "intB")]
                int_b: crate::integrals::IdentityCheck,
                region_agreement: Option<crate::integrals::RegionAgreement>,
                region_agreement_skipped: Option<String>,
                settings: QuadratureSettings,
            }
            Ok(Outcome::ok(to_json(&Out {
                int_a: int_a_check(curve, &q)?,
                int_b: int_b_check(curve, &q)?,
                region_agreement,
                region_agreement_skipped,
                settings: q,
            })))
        }
        Command::Normalize => {
            let settings = config.normalize();
            let result = normalize(curve, &settings)?;
            let image = normalized_curve(curve, &result, &settings)?;
            #[derive(Serialize)]
            struct Out {
                #[serde(flatten)]
                result: NormalizationResult,
                normalized_curve: CurveSpec,
            }
            Ok(Outcome::ok(to_json(&Out {
                result,
                normalized_curve: CurveSpec::from_curve(&image),
            })))
        }
        Command::Deficit => {
            #[derive(Serialize)]
            struct Out {
                perimeter: f64,
                area: f64,
                isoperimetric_deficit: f64,
            }
            Ok(Outcome::ok(to_json(&Out {
                perimeter: curve.perimeter(),
                area: curve.area(),
                isoperimetric_deficit: isoperimetric_deficit(curve)?,
            })))
        }
        Command::Probe {
            t0,
            s_min,
            s_max,
            seeds,
        } => {
            let probe = foliation_probe(
                curve,
                *t0,
                (*s_min, *s_max),
                *seeds,
                config.iters(500),
                tol.map,
            )?;
            if config.wants_csv() {
                let rows = probe
                    .seeds
                    .iter()
                    .zip(&probe.rotation_values)
                    .zip(&probe.seed_dispersion)
                    .map(|((s, r), d)| {
                        vec![
                            real(s.t1),
                            real(s.t2),
                            real(r.value),
                            real(r.error_bound),
                            real(*d),
                        ]
                    });
                return Ok(Outcome::ok(csv(
                    &["t1", "t2", "rotation", "error_bound", "dispersion"],
                    rows,
                )));
            }
            Ok(Outcome::ok(to_json(&probe)))
        }
        Command::Portrait { seeds } => {
            let seeds: Vec<PhasePoint> = if seeds.is_empty() {
                let (lo, hi) = DEFAULT_PROBE_RANGE;
                (0..9)
                    .map(|i| PhasePoint::new(0.0, lo + (hi - lo) * i as f64 / 8.0))
                    .collect::<Result<_>>()?
            } else {
                seeds
                    .iter()
                    .map(|&(a, b)| PhasePoint::new(a, b))
                    .collect::<Result<_>>()?
            };
            let settings = PortraitSettings {
                map_tol: tol.map,
                conjugate_tol: tol.conj,
                radon_tol: tol.radon,
                ..PortraitSettings::default()
            };
            let portrait = phase_portrait(curve, &seeds, config.iters(200), &settings)?;
            if config.wants_csv() {
                let orbit_rows = portrait.points.iter().map(|p| {
                    vec![
                        "orbit".into(),
                        p.seed.to_string(),
                        p.step.to_string(),
                        real(p.t),
                        real(p.gap),
                    ]
                });
                let delta_rows = portrait
                    .delta
                    .iter()
                    .flatten()
                    .enumerate()
                    .map(|(j, &(a, g))| {
                        vec![
                            "delta".into(),
                            String::new(),
                            j.to_string(),
                            real(a),
                            real(g),
                        ]
                    });
                return Ok(Outcome::ok(csv(
                    &["kind", "seed", "step", "t", "gap"],
                    orbit_rows.chain(delta_rows),
                )));
            }
            Ok(Outcome::ok(to_json(&portrait)))
        }
        Command::Validate { .. } | Command::Report => unreachable!("handled before validation"),
    }
}

fn cmd_validate(curve: &SupportCurve, grid: usize) -> Result<Outcome> {
    let validation = curve.validate(grid.max(8));
    let symmetric = curve.ensure_symmetric().is_ok();
    #[derive(Serialize)]
    struct Out {
        valid: bool,
        symmetric: bool,
        k_max: usize,
        validation: crate::curve::Validation,
    }
    let valid = validation.passes();
    Ok(Outcome {
        text: to_json(&Out {
            valid,
            symmetric,
            k_max: curve.k_max(),
            validation,
        }),
        code: if valid { 0 } else { 1 },
    })
}

fn cmd_report(curve: &SupportCurve, config: &RunConfig) -> Result<Outcome> {
    let report = rigidity_report(curve, &config.report());
    let numerical = report
        .failures
        .iter()
        .any(|f| !matches!(f.kind, "invalid_curve" | "radon_hypothesis_failed"));
    let code = match report.verdict {
        Verdict::ConsistentWithEllipse => 0,
        Verdict::HypothesesFail => 1,
        Verdict::InequalityViolated if numerical => 2,
        Verdict::InequalityViolated => 0,
    };
    Ok(Outcome {
        text: to_json(&report),
        code,
    })
}

fn cmd_orbit(curve: &SupportCurve, config: &RunConfig, pp: PhasePoint) -> Result<Outcome> {
    let n = config.iters(100);
    let orbit = iterate(curve, pp, n, config.tolerances.map)?;
    let points = orbit.points(curve);
    if config.wants_csv() {
        // the residual column holds the chord residual of the triple centred on the sample
        let rows = orbit
            .samples
            .iter()
            .zip(&points)
            .enumerate()
            .map(|(k, (&t, p))| {
                let r = k
                    .checked_sub(1)
                    .and_then(|i| orbit.residuals.get(i))
                    .map_or(String::new(), |&r| real(r));
                vec![k.to_string(), real(t), real(p.x), real(p.y), r]
            });
        return Ok(Outcome::ok(csv(
            &["step", "t_lifted", "x", "y", "residual"],
            rows,
        )));
    }
    #[derive(Serialize)]
    struct Out {
        seed: PhasePoint,
        iterations: usize,
        samples: Vec<f64>,
        points: Vec<[f64; 2]>,
        residuals: Vec<f64>,
        max_residual: f64,
    }
    let max_residual = orbit.residuals.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::ok(to_json(&Out {
        seed: pp,
        iterations: n,
        points: points.iter().map(|p| [p.x, p.y]).collect(),
        samples: orbit.samples,
        residuals: orbit.residuals,
        max_residual,
    })))
}

fn profile_csv(profile: &[crate::dynamics::RadonSample]) -> String {
    csv(
        &["alpha", "phi", "defect"],
        profile
            .iter()
            .map(|s| vec![real(s.alpha), real(s.phi), real(s.defect)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_parsing() {
        let t = Tolerances::from_pairs(&[("map".into(), 1e-10), ("verdict".into(), 1e-6)]).unwrap();
        assert_eq!((t.map, t.verdict), (1e-10, 1e-6));
        assert!(Tolerances::from_pairs(&[("bogus".into(), 1.0)]).is_err());
        assert!(Tolerances::from_pairs(&[("map".into(), 0.0)]).is_err());
        assert_eq!(parse_tol("quad = 1e-9").unwrap(), ("quad".into(), 1e-9));
        assert!(parse_tol("quad").is_err());
    }

    #[test]
    fn seed_parsing() {
        assert_eq!(parse_seed("0.5,-1").unwrap(), (0.5, -1.0));
        assert!(parse_seed("0.5").is_err());
    }

    #[test]
    fn exit_codes_follow_error_family() {
        assert_eq!(
            exit_code(&Error::RadonHypothesisFailed {
                defect: 0.3,
                tol: 1e-8
            }),
            1
        );
        assert_eq!(
            exit_code(&Error::NonConvergedQuadrature {
                change: 1.0,
                tol: 1e-8
            }),
            2
        );
    }

    #[test]
    fn missing_curve_is_usage_error() {
        assert_eq!(run(["symbill", "deficit"]), 2);
    }
}
