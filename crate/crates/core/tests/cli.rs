use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use feedback_iv::simulation::DgpSpec;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_feedback-iv"));
    c.env("RUST_LOG", "error");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn validate(report: &Value) {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/run_report.schema.json"),
        )
        .unwrap(),
    )
    .unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(report)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:?}");
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_on_ones_design_reports_closed_form_gamma() {
    let tiny = fixture("tiny.csv");
    let r = json(&run(&["fit", "--data", path(&tiny), "--outcome", "y"]));
    validate(&r);
    let gamma = r["fit"]["iv"]["gamma"][0].as_f64().unwrap();
    assert!((gamma - (3.0 - 21f64.sqrt()) / 6.0).abs() < 1e-9, "{gamma}");
    assert!((gamma + 0.2637626).abs() < 1e-7);
    assert_eq!(r["command"], "fit");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));

    let again = json(&run(&["fit", "--data", path(&tiny), "--outcome", "y"]));
    assert_eq!(r["input_digest"], again["input_digest"]);
    assert_eq!(r["fit"], again["fit"]);
}

#[test]
fn zero_lags_report_ols_twice() {
    let r = json(&run(&[
        "fit",
        "--data",
        path(&fixture("k3.csv")),
        "--outcome",
        "y",
        "--lags",
        "0",
    ]));
    validate(&r);
    assert_eq!(r["fit"]["ols"], r["fit"]["iv"]);
    assert_eq!(r["fit"]["iv"]["gamma"], Value::Array(vec![]));
    assert!(r["fit"]["difference_t"]
        .as_array()
        .unwrap()
        .iter()
        .all(|t| t == 0.0));
}

#[test]
fn contrast_selection() {
    let k3 = fixture("k3.csv");
    let labels = |c: &str| -> Vec<String> {
        let r = json(&run(&[
            "fit",
            "--data",
            path(&k3),
            "--outcome",
            "y",
            "--contrast",
            c,
        ]));
        validate(&r);
        r["inference"]
            .as_array()
            .unwrap()
            .iter()
            .map(|i| i["label"].as_str().unwrap().to_string())
            .collect()
    };
    assert_eq!(labels("all"), ["x1", "x2", "x3"]);
    assert_eq!(labels("x2"), ["x2"]);
    assert_eq!(labels("feedback"), ["feedback"]);

    let out = run(&[
        "fit",
        "--data",
        path(&k3),
        "--outcome",
        "y",
        "--contrast",
        "nope",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nope"));
}

#[test]
fn conservative_regime_widens_intervals() {
    let k3 = fixture("k3.csv");
    let base = [
        "fit",
        "--data",
        path(&k3),
        "--outcome",
        "y",
        "--contrast",
        "x1",
    ];
    let m = json(&run(&base));
    let g = json(&run(&[&base[..], &["--regime", "gaussian"]].concat()));
    let (m, g) = (&m["inference"][0], &g["inference"][0]);
    assert_eq!(g["regime"], "gaussian_conservative");
    assert!(g["psi"].as_f64().unwrap() > 0.0);
    assert!(
        g["ci_low"].as_f64() <= m["ci_low"].as_f64()
            && g["ci_high"].as_f64() >= m["ci_high"].as_f64()
    );
}

#[test]
fn diagnose_tiers_on_fixtures() {
    for tier in ["green", "amber", "red"] {
        let r = json(&run(&[
            "diagnose",
            "--data",
            path(&fixture(&format!("diag_{tier}.csv"))),
        ]));
        validate(&r);
        let d = &r["diagnostics"];
        assert_eq!(d["tier"], tier);
        assert_eq!(d["lower_trace_ratios"].as_array().unwrap().len(), 4);
        assert!(r["fit"].is_null());
    }
    let r = json(&run(&[
        "diagnose",
        "--data",
        path(&fixture("diag_red.csv")),
        "--lmax",
        "2",
        "--amber",
        "0.2",
        "--red",
        "0.3",
    ]));
    assert_eq!(r["diagnostics"]["tier"], "green");
    assert_eq!(
        r["diagnostics"]["lower_trace_ratios"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
    assert_eq!(r["diagnostics"]["unique_root_ok"], false);
}

#[test]
fn data_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "missing.csv", "a,b,y\n1,2,3\n4,,6\n7,8,9\n");
    let out = run(&["fit", "--data", &missing, "--outcome", "y"]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("missing value at line 3 (data row 2), column `b`"),
        "{}",
        stderr(&out)
    );

    let text = write(dir.path(), "text.csv", "a,b,y\n1,2,3\n4,5,6\n7,oops,9\n");
    let out = run(&["diagnose", "--data", &text]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("non-numeric value `oops`"),
        "{}",
        stderr(&out)
    );

    let out = run(&["fit", "--data", path(&fixture("k3.csv")), "--outcome", "z"]);
    assert_eq!(code(&out), 2);
    assert_eq!(
        code(&run(&[
            "fit",
            "--data",
            "/nonexistent.csv",
            "--outcome",
            "y"
        ])),
        2
    );
    assert_eq!(code(&run(&["fit", "--outcome", "y"])), 2);

    let collinear = write(
        dir.path(),
        "collinear.csv",
        "a,b,y\n1,2,3\n2,4,6\n3,6,7\n4,8,1\n5,10,2\n",
    );
    assert_eq!(
        code(&run(&["fit", "--data", &collinear, "--outcome", "y"])),
        2
    );
}

#[test]
fn report_goes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "fit",
        "--data",
        path(&fixture("tiny.csv")),
        "--outcome",
        "y",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    validate(&r);
}

#[test]
fn simulate_smoke_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture("specs/smoke.json");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&[
            "simulate",
            "--spec",
            path(&spec),
            "--reps",
            "2",
            "--seed",
            "9",
            "--out",
            path(out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(
        text.starts_with("K,rho,T,estimator,bias,sd,size,lower_trace_ratio,n_reps,failures,seed\n")
    );
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn simulate_rejects_bad_specs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"T": 10, "K": 20, "process": "ar1", "alphas": [[1]]}"#,
    );
    assert_eq!(code(&run(&["simulate", "--spec", &bad, "--reps", "2"])), 2);
    let broken = write(dir.path(), "broken.json", "{");
    assert_eq!(
        code(&run(&["simulate", "--spec", &broken, "--reps", "2"])),
        2
    );
    assert_eq!(code(&run(&["simulate", "--reps", "2"])), 2);
}

#[test]
fn simulate_calibrated_panel() {
    let o = run(&[
        "simulate",
        "--panel",
        path(&fixture("panel.csv")),
        "--ks",
        "3,6",
        "--draws",
        "2",
        "--reps",
        "4",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("K,draw,T,target,estimator,"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn filter_cases() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("date,trend,flat\n");
    for t in 0..40 {
        body += &format!("d{t},{},{}\n", 1.0 + 0.25 * t as f64, 2.0);
    }
    let with_flat = write(dir.path(), "flat.csv", &body);
    let o = run(&["filter", "--data", &with_flat]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`flat`"), "{}", stderr(&o));

    let trend_only: String = body
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    let trend = write(dir.path(), "trend.csv", &trend_only);
    let out = dir.path().join("filtered.csv");
    let o = run(&["filter", "--data", &trend, "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("date,trend"));
    let rows: Vec<(String, f64)> = lines
        .map(|l| {
            let (d, v) = l.split_once(',').unwrap();
            (d.to_string(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 40 - 8 - 4 + 1);
    assert_eq!(rows[0].0, "d11");
    assert!(rows.iter().all(|(_, v)| v.abs() < 1e-9));
}

#[test]
fn filter_keeps_white_noise_variance() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut body = String::from("w\n");
    let values: Vec<f64> = (0..5000)
        .map(|_| rng.sample(rand_distr::StandardNormal))
        .collect();
    for v in &values {
        body += &format!("{v}\n");
    }
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "noise.csv", &body);
    let o = run(&["filter", "--data", &data, "--p", "2", "--h", "4"]);
    assert_eq!(code(&o), 0);
    let out: Vec<f64> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    assert_eq!(out.len(), 5000 - 4 - 2 + 1);
    assert!((var(&out) / var(&values) - 1.0).abs() < 0.05);
}

#[test]
fn calibrate_round_trip_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    let o = run(&[
        "calibrate",
        "--data",
        path(&fixture("k3.csv")),
        "--outcome",
        "y",
        "--out",
        path(&spec_path),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&spec_path).unwrap();
    let spec: DgpSpec = serde_json::from_str(&text).unwrap();
    assert_eq!((spec.t, spec.k), (80, 3));
    assert_eq!(serde_json::to_string_pretty(&spec).unwrap() + "\n", text);

    let o = run(&[
        "simulate",
        "--spec",
        path(&spec_path),
        "--reps",
        "4",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let exact = write(
        dir.path(),
        "exact.csv",
        "a,b,y\n1,0,2\n0,1,3\n1,1,5\n2,1,7\n3,5,21\n",
    );
    let o = run(&["calibrate", "--data", &exact, "--outcome", "y"]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).to_lowercase().contains("residual"),
        "{}",
        stderr(&o)
    );
}
