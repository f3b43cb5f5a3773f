mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bifocus::fresnel::ColumnMap;
use common::fixtures::{example_scene, multistatic_from_forward};
use serde_json::{json, Value};

fn bifocus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bifocus")).args(args).output().unwrap()
}

fn run_with(dir: &Path, command: &str, config: &Value, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{command}.json"));
    fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let out = dir.join(format!("{command}_out"));
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bifocus(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth_config(alpha_deg: f64, kernel: &str) -> Value {
    json!({
        "scene": {
            "n_samples": 36, "bistatic_angle_deg": alpha_deg,
            "tx_radius_m": 1.67, "rx_radius_m": 1.67, "frequency_ghz": 4.0,
            "targets": [{"center_m": [0.01, -0.02], "area_m2": 7.0686e-4, "eps_ratio": 3.0}]
        },
        "kernel": kernel
    })
}

fn image_config(dataset: &Path) -> Value {
    json!({
        "dataset": dataset, "frequency_ghz": 4.0, "kernel": "farfield",
        "truth_targets": [{"center_m": [0.01, -0.02], "area_m2": 7.0686e-4, "eps_ratio": 3.0}]
    })
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth_config(90.0, "exact");
    let o = run_with(tmp.path(), "synth", &cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("synth_out");
    let csv = fs::read(out.join("dataset.csv")).unwrap();
    let manifest = fs::read(out.join("manifest.json")).unwrap();
    assert_eq!(String::from_utf8_lossy(&csv).lines().count(), 37);
    let o = run_with(tmp.path(), "synth", &cfg, &[]);
    assert!(o.status.success());
    assert_eq!(fs::read(out.join("dataset.csv")).unwrap(), csv);
    assert_eq!(fs::read(out.join("manifest.json")).unwrap(), manifest);
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = synth_config(90.0, "exact");
    let scene = cfg["scene"].as_object_mut().unwrap();
    let v = scene.remove("bistatic_angle_deg").unwrap();
    scene.insert("bistatic_angle_rad".into(), v);
    let o = run_with(tmp.path(), "synth", &cfg, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/scene"), "{}", stderr(&o));
}

#[test]
fn inapplicable_override_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with(tmp.path(), "image", &image_config(Path::new("x.csv")), &["--alpha-deg", "30"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn image_and_peaks_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with(tmp.path(), "synth", &synth_config(60.0, "farfield"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dataset = tmp.path().join("synth_out/dataset.csv");
    let o = run_with(tmp.path(), "image", &image_config(&dataset), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("image_out");
    for f in ["map.csv", "map.pgm", "peaks.json", "localization.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let peaks: Value = serde_json::from_str(&fs::read_to_string(out.join("peaks.json")).unwrap()).unwrap();
    let top = &peaks["peaks"][0]["location"];
    let cell = 0.2 / 127.0;
    let (x, y) = (top["x"].as_f64().unwrap(), top["y"].as_f64().unwrap());
    assert!(((x - 0.01) / cell).hypot((y + 0.02) / cell) <= 1.0, "{top}");

    let map = out.join("map.csv");
    let o = run_with(tmp.path(), "peaks", &json!({"map": map, "threshold": 0.5}), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let again: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("peaks_out/peaks.json")).unwrap()).unwrap();
    assert_eq!(again["peaks"], peaks["peaks"]);
}

#[test]
fn antipodal_far_field_has_no_peaks() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with(tmp.path(), "synth", &synth_config(180.0, "farfield"), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dataset = tmp.path().join("synth_out/dataset.csv");
    let o = run_with(tmp.path(), "image", &image_config(&dataset), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let peaks: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("image_out/peaks.json")).unwrap()).unwrap();
    assert_eq!(peaks["peaks"].as_array().unwrap().len(), 0);
}

#[test]
fn missing_dataset_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_with(tmp.path(), "image", &image_config(&tmp.path().join("absent.csv")), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn theory_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = json!({"frequency_ghz": 4.0, "alpha_deg": [0, 60, 90, 135], "n_points": 101,
        "residuals": {"d_max_m": 0.15, "n_d": 10, "n_alpha": 7}});
    let o = run_with(tmp.path(), "theory", &cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("theory_out");
    for f in ["e.csv", "e1.csv", "e2.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().next().unwrap().split(',').count(), 5);
        assert_eq!(text.lines().count(), 102);
    }
    let residuals = fs::read_to_string(out.join("residuals.csv")).unwrap();
    let worst = residuals
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst}");

    let o = run_with(tmp.path(), "theory", &json!({"frequency_ghz": 4.0, "alpha_deg": []}), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/alpha_deg"));
}

fn fresnel_fixture(dir: &Path, mask_half_deg: f64) -> std::path::PathBuf {
    let records = multistatic_from_forward(&example_scene(), 10.0, mask_half_deg);
    let path = dir.join("fixture.exp");
    fs::write(&path, records.to_table(&ColumnMap::first_opus_tm()).unwrap()).unwrap();
    path
}

#[test]
fn fresnel_extraction() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fresnel_fixture(tmp.path(), 0.0);
    let cfg = json!({"data_file": data, "preset": "first_opus_tm", "alpha_deg": 90.0, "frequency_ghz": 4.0});
    let o = run_with(tmp.path(), "fresnel", &cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("fresnel_out/dataset.csv")).unwrap();
    assert_eq!(csv.lines().count(), 37);

    let o = run_with(tmp.path(), "fresnel", &cfg, &["--freq-ghz", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains('4'), "{}", stderr(&o));
}

#[test]
fn fresnel_blind_sector() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fresnel_fixture(tmp.path(), 30.0);
    let cfg = json!({"data_file": data, "preset": "first_opus_tm", "alpha_deg": 20.0, "frequency_ghz": 4.0});
    let o = run_with(tmp.path(), "fresnel", &cfg, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(tmp.path().join("fresnel_out/coverage.json").exists());
    assert!(!tmp.path().join("fresnel_out/dataset.csv").exists());
}
