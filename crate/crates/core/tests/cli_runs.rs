use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use symbill::cli::run;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

struct Fixture {
    dir: TempDir,
    ellipse: PathBuf,
    circle: PathBuf,
    bumpy: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let ellipse = write(
        dir.path(),
        "ellipse.json",
        r#"{"type":"ellipse","a":2,"b":1,"rotation":0}"#,
    );
    let circle = write(dir.path(), "circle.json", r#"{"type":"fourier","a0":1}"#);
    let bumpy = write(
        dir.path(),
        "bumpy.json",
        r#"{"type":"fourier","a0":1,"cos":{"4":0.05},"symmetric":true}"#,
    );
    Fixture {
        dir,
        ellipse,
        circle,
        bumpy,
    }
}

/// Runs with `--out <file>` and returns the exit code and the file contents.
fn run_to(fx: &Fixture, out: &str, args: &[&str]) -> (i32, String) {
    let out = fx.dir.path().join(out);
    let mut argv = vec!["symbill".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(out.display().to_string());
    let code = run(argv);
    (code, std::fs::read_to_string(&out).unwrap_or_default())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn report_on_ellipse_is_consistent() {
    let fx = fixture();
    let (code, text) = run_to(&fx, "r.json", &["report", "--curve", s(&fx.ellipse)]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["verdict"], "consistent_with_ellipse");
    assert!(v["F_normalized"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn report_on_bumpy_table_fails_hypotheses() {
    let fx = fixture();
    let (code, text) = run_to(&fx, "r.json", &["report", "--curve", s(&fx.bumpy)]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["verdict"], "hypotheses_fail");
    assert!(v["region_integrals"]["gamma_delta"].is_null());
}

#[test]
fn identities_on_circle() {
    let fx = fixture();
    let (code, text) = run_to(&fx, "i.json", &["identities", "--curve", s(&fx.circle)]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&text).unwrap();
    for side in ["lhs", "rhs"] {
        assert!((v["intA"][side].as_f64().unwrap() + PI * PI).abs() < 1e-10);
        assert!((v["intB"][side].as_f64().unwrap() - PI * PI).abs() < 1e-10);
    }
    assert!(v["region_agreement"].is_object());
}

#[test]
fn graph_region_on_bumpy_table_exits_one() {
    let fx = fixture();
    let (code, text) = run_to(
        &fx,
        "g.json",
        &[
            "integrals",
            "--region",
            "gamma-delta",
            "--curve",
            s(&fx.bumpy),
        ],
    );
    assert_eq!(code, 1);
    assert!(text.is_empty(), "no output file on failure");
    let (code, _) = run_to(
        &fx,
        "h.json",
        &[
            "integrals",
            "--region",
            "half-square",
            "--curve",
            s(&fx.bumpy),
        ],
    );
    assert_eq!(code, 0);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let fx = fixture();
    for args in [
        &["report"][..],
        &["integrals"][..],
        &["probe", "--seeds", "7", "--iters", "200"][..],
    ] {
        let mut a1 = args.to_vec();
        a1.extend(["--curve", s(&fx.ellipse), "--jobs", "1"]);
        let mut a4 = args.to_vec();
        a4.extend(["--curve", s(&fx.ellipse), "--jobs", "4"]);
        let (c1, t1) = run_to(&fx, "one.json", &a1);
        let (c4, t4) = run_to(&fx, "four.json", &a4);
        assert_eq!((c1, c4), (0, 0));
        assert_eq!(t1, t4, "{args:?}");
    }
}

#[test]
fn normalized_curve_round_trips() {
    let fx = fixture();
    let rotated = write(
        fx.dir.path(),
        "rot.json",
        r#"{"type":"ellipse","a":2,"b":1,"rotation":0.5235987755982988}"#,
    );
    let (code, text) = run_to(&fx, "n.json", &["normalize", "--curve", s(&rotated)]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!((v["sigma"].as_f64().unwrap() - PI / 6.0).abs() < 1e-8);
    let spec = write(
        fx.dir.path(),
        "normalized.json",
        &v["normalized_curve"].to_string(),
    );
    let (code, text) = run_to(&fx, "v.json", &["validate", "--curve", s(&spec)]);
    assert_eq!(code, 0);
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap()["valid"], true);
    let (code, text) = run_to(&fx, "d.json", &["deficit", "--curve", s(&spec)]);
    assert_eq!(code, 0);
    let d: Value = serde_json::from_str(&text).unwrap();
    assert!(d["isoperimetric_deficit"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn csv_outputs() {
    let fx = fixture();
    let (code, text) = run_to(
        &fx,
        "o.csv",
        &[
            "orbit",
            "--curve",
            s(&fx.ellipse),
            "--t1",
            "0",
            "--t2",
            "1",
            "--iters",
            "5",
        ],
    );
    assert_eq!(code, 0);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,t_lifted,x,y,residual");
    assert_eq!(lines.len(), 1 + 7);

    let (code, text) = run_to(
        &fx,
        "p.csv",
        &["radon", "--curve", s(&fx.bumpy), "--grid", "16"],
    );
    assert_eq!(code, 0);
    assert!(text.starts_with("alpha,phi,defect\n"));
    assert_eq!(text.lines().count(), 17);

    let (code, text) = run_to(
        &fx,
        "pp.csv",
        &[
            "portrait",
            "--curve",
            s(&fx.circle),
            "--seed",
            "0,1",
            "--iters",
            "3",
        ],
    );
    assert_eq!(code, 0);
    assert!(text.starts_with("kind,seed,step,t,gap\n"));
    assert!(text.lines().any(|l| l.starts_with("delta,")));
}

#[test]
fn map_and_rotation_on_circle() {
    let fx = fixture();
    let (code, text) = run_to(
        &fx,
        "m.json",
        &[
            "map",
            "--curve",
            s(&fx.circle),
            "--t1",
            "-0.5",
            "--t2",
            "0.5",
        ],
    );
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!((v["image"]["t2"].as_f64().unwrap() - 1.5).abs() < 1e-10);

    let (code, text) = run_to(
        &fx,
        "r.json",
        &[
            "rotation",
            "--curve",
            s(&fx.circle),
            "--t1",
            "0",
            "--t2",
            "1",
            "--iters",
            "50",
        ],
    );
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-12);
}

#[test]
fn failures_map_to_exit_codes() {
    let fx = fixture();
    let concave = write(
        fx.dir.path(),
        "bad.json",
        r#"{"type":"fourier","a0":1,"cos":{"2":0.5}}"#,
    );
    let (code, text) = run_to(&fx, "v.json", &["validate", "--curve", s(&concave)]);
    assert_eq!(code, 1);
    assert_eq!(
        serde_json::from_str::<Value>(&text).unwrap()["valid"],
        false
    );
    assert_eq!(
        run_to(&fx, "x.json", &["deficit", "--curve", s(&concave)]).0,
        1
    );
    assert_eq!(
        run_to(
            &fx,
            "x.json",
            &["map", "--curve", s(&fx.circle), "--t1", "0", "--t2", "4"]
        )
        .0,
        2
    );
    assert_eq!(
        run_to(
            &fx,
            "x.json",
            &["deficit", "--curve", s(&fx.circle), "--tol", "bogus=1"]
        )
        .0,
        2
    );
    assert_eq!(
        run_to(
            &fx,
            "x.json",
            &[
                "integrals",
                "--curve",
                s(&fx.ellipse),
                "--tol",
                "quad=1e-30"
            ]
        )
        .0,
        2
    );
}
