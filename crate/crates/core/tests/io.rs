use std::collections::BTreeSet;

use stealthsim_core::channel::Terminal;
use stealthsim_core::detection::roc_curve;
use stealthsim_core::io::{
    emit_plot, emit_roc_csv, read_manifest, read_roc_csv, series_of, write_manifest, RocSeries, RunManifest,
};
use stealthsim_core::scenario::{run_campaign, Detector, Mode, ScenarioConfig};

fn data_rows(path: &std::path::Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn diagonal_roc_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("roc.csv");
    let curve = roc_curve(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
    let series = RocSeries {
        mode: Mode::Baseline,
        detector: Detector::Energy,
        observer: Terminal::Eve,
        antennas: 16,
        n_h0: curve.n_h0,
        n_h1: curve.n_h1,
        points: curve.points,
    };
    emit_roc_csv(&[series], &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("mode,detector,observer,antennas,pfa,pd,n_h0,n_h1\n"));
    let rows = data_rows(&path);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[4] == r[5]));
    assert_eq!(rows[1][4], "0.500000");
    assert!(emit_roc_csv(&[], dir.path().join("empty.csv")).is_err());
    assert!(emit_roc_csv(&read_roc_csv(&path).unwrap(), dir.path().join("missing/x.csv")).is_err());
}

#[test]
fn campaign_csv_groups_are_complete_and_reproducible() {
    let cfg = ScenarioConfig {
        n_trials: 2,
        ..ScenarioConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let first = run_campaign(&cfg, &[Mode::Baseline], Some(1)).unwrap();
    emit_roc_csv(&series_of(&first), &a).unwrap();
    let second = run_campaign(&cfg, &[Mode::Baseline], Some(1)).unwrap();
    emit_roc_csv(&series_of(&second), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let groups: BTreeSet<(String, String)> = data_rows(&a).into_iter().map(|r| (r[1].clone(), r[2].clone())).collect();
    assert_eq!(groups.len(), 4);

    let rows = data_rows(&a);
    let keys: Vec<(String, String, String, f64)> = rows
        .iter()
        .map(|r| (r[0].clone(), r[1].clone(), r[2].clone(), r[4].parse().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| (&x.0, &x.1, &x.2).cmp(&(&y.0, &y.1, &y.2)).then(x.3.total_cmp(&y.3)));
    assert_eq!(keys, sorted);

    let back = read_roc_csv(&a).unwrap();
    assert_eq!(back.len(), 4);
    let svg = dir.path().join("roc.svg");
    emit_plot(&back, &svg).unwrap();
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 4);
    assert_eq!(text.matches("class=\"legend-entry\"").count(), 4);
}

#[test]
fn empty_plot_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("none.svg");
    assert!(emit_plot(&[], &svg).is_err());
    assert!(!svg.exists());
}

#[test]
fn manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.json");
    let m = RunManifest {
        config: ScenarioConfig::default(),
        seed: 1,
        modes: vec![Mode::Baseline, Mode::Csi],
        engine_version: stealthsim_core::VERSION.into(),
        started_at: "2026-01-01T00:00:00+00:00".into(),
        finished_at: "2026-01-01T00:01:00+00:00".into(),
        outputs: vec![dir.path().join("roc.csv")],
    };
    write_manifest(&m, &path).unwrap();
    assert_eq!(read_manifest(&path).unwrap(), m);
}
