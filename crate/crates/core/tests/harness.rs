use std::process::Command;

use aqkd::harness::config::parse_config;
use aqkd::harness::presets::figure3;
use aqkd::harness::{
    best_point, emit_csv, evaluate_rounds, run_sweep, write_csv, CurveResult, CurveSpec, Link,
    PulseBudget, SweepSpec, CSV_HEADER,
};

fn small_sweep(workers: Option<usize>) -> SweepSpec {
    SweepSpec {
        lengths_km: vec![0.0, 40.0, 80.0],
        curves: vec![
            CurveSpec::new("plain", 1.0, 1.5, vec![0]),
            CurveSpec::new("amp", 16.0, 1.7, vec![0, 1, 2]),
        ],
        budget: PulseBudget::fixed(200_000),
        seed: 5,
        workers,
        ..Default::default()
    }
}

fn csv_bytes(r: &[CurveResult]) -> Vec<u8> {
    let mut v = Vec::new();
    write_csv(r, &mut v).unwrap();
    v
}

#[test]
fn lossless_point_produces_key() {
    let curve = CurveSpec::new("p", 1.0, 1.5, vec![0]);
    let p = best_point(
        &Link::default(),
        &curve,
        0.0,
        PulseBudget::fixed(1_000_000),
        1,
    )
    .unwrap();
    assert!(p.secret_yield > 0.0);
    assert_eq!(p.pulses, 1_000_000);
}

#[test]
fn csv_shape_and_reproducibility() {
    let spec = small_sweep(None);
    let a = run_sweep(&spec).unwrap();
    let b = run_sweep(&spec).unwrap();
    let text = String::from_utf8(csv_bytes(&a)).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + 6);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 14);
    }
    // shortest round-trip formatting
    for l in &lines[1..] {
        for field in l.split(',').skip(1) {
            let x: f64 = field.parse().unwrap();
            assert_eq!(format!("{x}"), field);
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    let one = [CurveResult {
        label: "x".into(),
        points: vec![a[0].points[0].clone()],
    }];
    emit_csv(&one, &path).unwrap();
    let t = std::fs::read_to_string(&path).unwrap();
    assert_eq!(t.lines().count(), 2);
    emit_csv(&[], &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        format!("{CSV_HEADER}\n")
    );
}

#[test]
fn csv_identical_across_worker_counts() {
    let reference = csv_bytes(&run_sweep(&small_sweep(Some(1))).unwrap());
    for w in [4, 8] {
        assert_eq!(
            csv_bytes(&run_sweep(&small_sweep(Some(w))).unwrap()),
            reference
        );
    }
}

#[test]
fn bb84_yield_nonincreasing_in_length() {
    let spec = SweepSpec {
        lengths_km: (0..=6).map(|i| i as f64 * 20.0).collect(),
        curves: vec![CurveSpec::new("bb84", 1.0, 1.5, vec![0])],
        budget: PulseBudget::fixed(2_000_000),
        seed: 8,
        ..Default::default()
    };
    let r = run_sweep(&spec).unwrap();
    for w in r[0].points.windows(2) {
        let slack =
            3.0 * (w[0].secret_yield_stderr.powi(2) + w[1].secret_yield_stderr.powi(2)).sqrt();
        assert!(
            w[1].secret_yield <= w[0].secret_yield + slack,
            "{} km: {} > {} km: {}",
            w[1].length_km,
            w[1].secret_yield,
            w[0].length_km,
            w[0].secret_yield
        );
    }
}

#[test]
fn mu_optimum_is_unimodal_at_fifty_km() {
    let grid = [0.2, 0.5, 1.0, 1.5, 2.5, 4.0, 6.0];
    let pts: Vec<_> = grid
        .iter()
        .map(|&mu| {
            evaluate_rounds(
                &Link::default(),
                1.0,
                1.0,
                mu,
                50.0,
                &[0],
                PulseBudget::fixed(3_000_000),
                3,
            )
            .unwrap()
            .remove(0)
        })
        .collect();
    let best = (0..pts.len())
        .max_by(|&a, &b| pts[a].secret_yield.total_cmp(&pts[b].secret_yield))
        .unwrap();
    assert!(
        best > 0 && best < pts.len() - 1,
        "optimum at grid edge: {best}"
    );
    let sd = |i: usize, j: usize| {
        3.0 * (pts[i].secret_yield_stderr.powi(2) + pts[j].secret_yield_stderr.powi(2)).sqrt()
    };
    for i in 0..best {
        assert!(pts[i + 1].secret_yield + sd(i, i + 1) >= pts[i].secret_yield);
    }
    for i in best..pts.len() - 1 {
        assert!(pts[i + 1].secret_yield <= pts[i].secret_yield + sd(i, i + 1));
    }
}

#[test]
fn yields_never_exceed_capacity_bound() {
    let r = run_sweep(&small_sweep(None)).unwrap();
    for c in &r {
        for p in &c.points {
            assert!(
                p.secret_yield <= p.takeoka_bound,
                "{} at {}",
                c.label,
                p.length_km
            );
        }
    }
}

#[test]
fn figure3_preset_curves() {
    let s = figure3(0);
    let labels: Vec<_> = s.curves.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, ["bb84", "gad", "g4over3", "g16"]);
    assert_eq!(s.curves[0].rounds_grid, vec![0]);
    assert_eq!(s.curves[3].gain, 16.0);
    assert_eq!(s.curves[3].mu_grid, vec![1.7]);
    assert_eq!(s.curves[2].mu_grid, vec![2.5]);
    assert!((s.curves[2].gain - 4.0 / 3.0).abs() < 1e-15);
    s.validate().unwrap();
}

#[test]
fn config_overrides_and_errors() {
    let text = "[global]\nL = 0, 25\npulses = 1e5\nseed = 4\n[curve.bb84]\nrounds = 0\n[curve.g16]\nG = 16\nmu = 1.7\nrounds = 0:2:1\n";
    let file = parse_config(text, "inline").unwrap();
    let mut spec = SweepSpec::default();
    spec.apply(&file, &[]).unwrap();
    spec.validate().unwrap();
    assert_eq!(spec.curves.len(), 2);
    assert_eq!(spec.curves[1].rounds_grid, vec![0, 1, 2]);
    assert_eq!(spec.budget.pulses, 100_000);

    let bad = parse_config("[curve.a]\nGain = 16\n", "inline").unwrap();
    let err = SweepSpec::default()
        .apply(&bad, &[])
        .unwrap_err()
        .to_string();
    assert!(err.contains("Gain") && err.contains("inline:2"), "{err}");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aqkd"))
}

#[test]
fn cli_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    let out = dir.path().join("s.csv");
    let plot = dir.path().join("s.gp");
    std::fs::write(
        &cfg,
        "L = 0:20:10\npulses = 20000\n[curve.a]\nrounds = 0\n[curve.b]\nG = 16\nmu = 1.7\n",
    )
    .unwrap();
    let st = cli()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--seed", "2", "--workers", "2", "--out"])
        .arg(&out)
        .arg("--gnuplot")
        .arg(&plot)
        .output()
        .unwrap();
    assert!(
        st.status.success(),
        "{}",
        String::from_utf8_lossy(&st.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    assert!(std::fs::read_to_string(&plot).unwrap().contains("'b'"));
    assert!(String::from_utf8_lossy(&st.stderr).contains("max range"));
}

#[test]
fn cli_rejects_unknown_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "p-drak = 1e-5\n").unwrap();
    let st = cli()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("p-drak"));
}

#[test]
fn cli_point_and_selftest() {
    let st = cli()
        .args(["point", "--L", "10", "--pulses", "50000", "--rounds", "0,1"])
        .output()
        .unwrap();
    assert!(st.status.success());
    assert!(String::from_utf8_lossy(&st.stdout).contains("secret_yield"));
    let st = cli().arg("selftest").output().unwrap();
    assert!(
        st.status.success(),
        "{}",
        String::from_utf8_lossy(&st.stdout)
    );
    assert!(!String::from_utf8_lossy(&st.stdout).contains("FAIL"));
}
