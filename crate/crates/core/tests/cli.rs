use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use chirpdec::experiments::{median, sweep_rows_from_csv, SweepSummary};
use chirpdec::format::capture_from_csv;
use chirpdec::{eval_signal, LfmComponent};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chirpdec"))
        .args(args)
        .output()
        .expect("failed to start chirpdec")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const PAIR: &str = r#"{"components": [
  {"a": 1.0, "k_rad_s2": 1.1e4, "f_hz": 4210.0, "phi_rad": 0.1},
  {"a": 0.5, "k_rad_s2": -7e3, "f_hz": 9870.0, "phi_rad": 1.2}
]}"#;

fn pair() -> Vec<LfmComponent> {
    vec![
        LfmComponent::new(1.0, 1.1e4, 4210.0, 0.1).unwrap(),
        LfmComponent::new(0.5, -7e3, 9870.0, 1.2).unwrap(),
    ]
}

fn write_spec(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("spec.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn synth(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let spec = write_spec(dir, PAIR);
    let out = dir.path().join(name);
    let mut args = vec!["synth", p(&spec), "--fs", "1000", "--out", p(&out)];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn synth_is_deterministic_and_matches_the_model() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.csv", &["--snr", "20", "--seed", "5"]);
    let b = synth(&dir, "b.csv", &["--snr", "20", "--seed", "5"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let short = synth(&dir, "short.csv", &["--samples", "62"]);
    let text = std::fs::read_to_string(&short).unwrap();
    assert_eq!(text.lines().count(), 63);
    let cap = capture_from_csv(&text).unwrap();
    let want = eval_signal(&pair(), &cap.grid.times()).unwrap();
    for (x, w) in cap.x.iter().zip(&want) {
        assert!((x - w).norm() <= 1e-15 * 4.0);
    }
}

#[test]
fn decompose_round_trip() {
    let dir = TempDir::new().unwrap();
    let cap = synth(&dir, "cap.csv", &[]);
    let out = dir.path().join("res.json");
    let o = run(&["decompose", "--in", p(&cap), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let comps = v["components"].as_array().unwrap();
    assert_eq!(comps.len(), 2);
    for (c, t) in comps.iter().zip(pair()) {
        let rel = |key: &str, want: f64| ((c[key].as_f64().unwrap() - want) / want).abs();
        assert!(
            rel("a", t.a) <= 1e-6 && rel("k_rad_s2", t.k) <= 1e-6 && rel("f_hz", t.f) <= 1e-6,
            "{c}"
        );
        assert!((c["phi_rad"].as_f64().unwrap() - t.phi).abs() <= 1e-6);
    }
    // Without --out the result goes to stdout.
    let o = run(&["decompose", "--in", p(&cap)]);
    let v2: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v2["components"], v["components"]);
}

#[test]
fn decompose_reports_bad_input_and_empty_signals() {
    let dir = TempDir::new().unwrap();
    let cap = synth(&dir, "cap.csv", &[]);
    let text = std::fs::read_to_string(&cap).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let cut = &lines[10][..lines[10].len() / 2];
    lines[10] = cut;
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let o = run(&["decompose", "--in", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("line 11"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let spec = write_spec(&dir, r#"{"components": []}"#);
    let zero = dir.path().join("zero.csv");
    assert!(run(&["synth", p(&spec), "--fs", "1000", "--out", p(&zero)])
        .status
        .success());
    assert_eq!(run(&["decompose", "--in", p(&zero)]).status.code(), Some(4));
    assert_eq!(
        run(&["decompose", "--in", p(&cap), "--preset", "loud"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn rank_scan_writes_one_row_per_pair() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("scan.csv");
    let o = run(&[
        "rank-scan",
        "--k-list",
        "0,100,3e4",
        "--dt-list",
        "1e-3,2e-3",
        "--n",
        "12",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[3], r[2] / 12.0);
        if r[0] == 0.0 {
            assert_eq!(r[2], 1.0);
        }
        let again = chirpdec::rank_ratio_scan(&[r[0]], &[r[1]], 12, 1e-10).unwrap();
        assert_eq!(again[0].rank as f64, r[2]);
    }
}

#[test]
fn noise_sweep_noiseless_default_preset() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(&dir, PAIR);
    let prefix = |name: &str| dir.path().join(name);
    for name in ["a", "b"] {
        let o = run(&[
            "noise-sweep",
            "--spec",
            p(&spec),
            "--snr-list",
            "inf",
            "--trials",
            "10",
            "--preset",
            "default",
            "--out",
            p(&prefix(name)),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for ext in ["csv", "json"] {
        let read = |n: &str| std::fs::read(prefix(n).with_extension(ext)).unwrap();
        assert_eq!(read("a"), read("b"));
    }
    let summary: SweepSummary =
        serde_json::from_str(&std::fs::read_to_string(prefix("a").with_extension("json")).unwrap())
            .unwrap();
    let rows =
        sweep_rows_from_csv(&std::fs::read_to_string(prefix("a").with_extension("csv")).unwrap())
            .unwrap();
    assert_eq!(rows.len(), 20);
    let s = &summary.per_snr[0];
    assert_eq!(s.successes, 10);
    assert!(s.median_k_rel_err <= 1e-6 && s.median_f_rel_err <= 1e-6);
    let med = |f: fn(&chirpdec::experiments::MatchErrors) -> f64| {
        median(&rows.iter().map(|r| f(&r.errors)).collect::<Vec<_>>())
    };
    assert_eq!(med(|e| e.k_rel_err), s.median_k_rel_err);
    assert_eq!(med(|e| e.f_rel_err), s.median_f_rel_err);
    assert_eq!(med(|e| e.a_rel_err), s.median_a_rel_err);
}

#[test]
fn verify_passes_quickly() {
    let t = Instant::now();
    let o = run(&["verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(t.elapsed() < Duration::from_secs(10));
}

// The determinant sign flip is only wired into debug builds.
#[cfg(debug_assertions)]
#[test]
fn verify_catches_a_sign_mutation() {
    let o = Command::new(env!("CARGO_BIN_EXE_chirpdec"))
        .arg("verify")
        .env("CHIRPDEC_MUTATE", "delta2_sign")
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
}
