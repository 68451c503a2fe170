//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twpac"))
}

fn table_s4() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/table_s4.toml")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twpac_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn dispersion_emits_csv_and_manifest() {
    let out = tmp_dir("disp");
    let status = bin()
        .args(["dispersion", "--config"])
        .arg(table_s4())
        .args(["--fmin-ghz", "4", "--fmax-ghz", "6", "--step-mhz", "20", "--svg"])
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("dispersion.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "freq_GHz,s21_db,s21_phase_rad,k_rad_per_cell,kstar_rad_per_cell,re_Z_ohm,im_Z_ohm,alpha_np_per_cell"
    );
    assert_eq!(lines.count(), 101);
    assert!(out.join("dispersion.svg").exists());
    let manifest = std::fs::read_to_string(out.join("dispersion_manifest.json")).unwrap();
    assert!(manifest.contains("\"subcommand\": \"dispersion\""));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let out1 = tmp_dir("det1");
    let out2 = tmp_dir("det2");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["dispersion", "--config"])
            .arg(table_s4())
            .args(["--fmin-ghz", "6", "--fmax-ghz", "7", "--step-mhz", "50"])
            .arg("--out-dir")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out1.join("dispersion.csv")).unwrap();
    let b = std::fs::read(out2.join("dispersion.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_config_exits_with_code_2() {
    let out = tmp_dir("badcfg");
    let cfg = out.join("bad.toml");
    std::fs::write(&cfg, "critical_current_uA = 5.0\n").unwrap();
    let status = bin()
        .args(["dispersion", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let out = tmp_dir("unknown");
    let base = std::fs::read_to_string(table_s4()).unwrap();
    let cfg = out.join("extra.toml");
    std::fs::write(&cfg, format!("made_up_key = 1.0\n{base}")).unwrap();
    let output = bin()
        .args(["dispersion", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("made_up_key"), "stderr: {err}");
}

#[test]
fn cme_sweep_reduced_device() {
    let out = tmp_dir("cme");
    let status = bin()
        .args(["cme-sweep", "--config"])
        .arg(table_s4())
        .args([
            "--cells-override",
            "330",
            "--fa-ghz",
            "14.3",
            "--pa-dbm",
            "-70",
            "--fc-off",
            "--no-4wm",
            "--direction",
            "forward",
            "--fmin-ghz",
            "6.9",
            "--fmax-ghz",
            "7.1",
            "--step-mhz",
            "100",
        ])
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("cme_forward.csv")).unwrap();
    assert!(csv.starts_with("freq_GHz,gain_db,"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn phase_match_prints_the_triplet() {
    let out = tmp_dir("pm");
    let output = bin()
        .args(["phase-match", "--config"])
        .arg(table_s4())
        .args(["--process", "pa", "--detuning-ghz", "1.0"])
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("process pa: pump"), "stdout: {text}");
    assert!(out.join("phase_match_pa.csv").exists());
}

#[test]
fn transient_sweep_single_point() {
    let out = tmp_dir("tr");
    let status = bin()
        .args(["transient-sweep", "--config"])
        .arg(table_s4())
        .args([
            "--cells-override",
            "66",
            "--fmin-ghz",
            "7.0",
            "--fmax-ghz",
            "7.0",
            "--step-mhz",
            "500",
        ])
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("transient_sweep.csv")).unwrap();
    let line = csv.lines().nth(1).unwrap();
    let fwd: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!(fwd.abs() < 1.0, "unpumped short line should be transparent: {fwd} dB");
}

#[test]
fn noise_fit_recovers_synthetic_parameters() {
    let out = tmp_dir("noise");
    let input = out.join("nsys.csv");
    let mut text = String::from("freq_GHz,gain_db,nsys_quanta\n");
    for i in 0..15 {
        let g = 1.0 + i as f64 * 2.0;
        text.push_str(&format!("7.0,{:.6},{:.9}\n", 10.0 * g.log10(), 1.7 + 17.5 / g));
    }
    std::fs::write(&input, text).unwrap();
    let output = bin()
        .args(["noise-fit", "--input"])
        .arg(&input)
        .args(["--bin-width-ghz", "0.5"])
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let fit = std::fs::read_to_string(out.join("noise_fit.csv")).unwrap();
    let row = fit.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    let n1: f64 = cols[1].parse().unwrap();
    let n2: f64 = cols[2].parse().unwrap();
    assert!((n1 - 1.7).abs() < 1e-6, "N1 = {n1}");
    assert!((n2 - 17.5).abs() < 1e-5, "N2 = {n2}");
    assert!(out.join("noise_model.csv").exists());
}

#[test]
fn noise_fit_rejects_empty_input() {
    let out = tmp_dir("noise_empty");
    let input = out.join("empty.csv");
    std::fs::write(&input, "freq_GHz,gain_db,nsys_quanta\n").unwrap();
    let status = bin()
        .args(["noise-fit", "--input"])
        .arg(&input)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
