use std::fs;
use std::path::Path;
use std::process::Command as Process;

use qdyn_cli::{execute, resolve_config, CliError, Command, CommonArgs, RunConfig};
use serde_json::Value;
use tempfile::TempDir;

fn config_in(dir: &Path, toml: &str) -> RunConfig {
    let mut cfg = RunConfig::from_toml_str(toml).unwrap();
    cfg.out = dir.to_path_buf();
    cfg.validate().unwrap();
    cfg
}

/// Data rows of a CSV output, header included, metadata lines dropped.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn no_partials(dir: &Path) -> bool {
    fs::read_dir(dir).unwrap().all(|e| {
        !e.unwrap()
            .file_name()
            .to_string_lossy()
            .ends_with(".partial")
    })
}

#[test]
fn fidelity_report_has_thirty_rows_and_orderings() {
    let dir = TempDir::new().unwrap();
    let files = execute(Command::FidelityReport, &config_in(dir.path(), "")).unwrap();
    let rows = csv_rows(&files[0]);
    assert_eq!(
        rows[0][..7],
        [
            "m",
            "pipeline",
            "n1q",
            "n2q",
            "n2q_effective",
            "est_fidelity",
            "est_duration_ns"
        ]
    );
    assert_eq!(rows.len(), 31);
    for chunk in rows[1..].chunks(3) {
        let fid: Vec<f64> = chunk.iter().map(|r| r[5].parse().unwrap()).collect();
        let dur: Vec<f64> = chunk.iter().map(|r| r[6].parse().unwrap()).collect();
        assert_eq!(
            (chunk[0][1].as_str(), chunk[2][1].as_str()),
            ("naive", "rzx")
        );
        assert!(fid[2] >= fid[1] && fid[1] >= fid[0]);
        assert!(dur[2] <= dur[1] && dur[1] <= dur[0]);
    }
    assert!(no_partials(dir.path()));
}

#[test]
fn zero_steps_row_is_trivial() {
    let dir = TempDir::new().unwrap();
    let files = execute(
        Command::FidelityReport,
        &config_in(dir.path(), "[fidelity]\nsteps = [0]\n"),
    )
    .unwrap();
    let rows = csv_rows(&files[0]);
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        assert_eq!(r[5].parse::<f64>().unwrap(), 1.0);
        assert_eq!(r[6].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn sweep_at_time_zero_keeps_particle_on_site_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "[evolution]\nn_times = 1\nsteps = [5, 8]\n");
    let rows = csv_rows(&execute(Command::TrotterSweep, &cfg).unwrap()[0]);
    assert_eq!(
        rows[0],
        ["t", "m", "order", "site", "value", "exact", "error"]
    );
    assert_eq!(rows.len(), 1 + 2 * 5);
    for r in &rows[1..] {
        let want = if r[3] == "0" { 1.0 } else { 0.0 };
        assert!((r[4].parse::<f64>().unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn sweep_rows_cover_every_time_and_site() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "[evolution]\nn_times = 7\nsteps = [8]\n");
    let rows = csv_rows(&execute(Command::TrotterSweep, &cfg).unwrap()[0]);
    assert_eq!(rows.len(), 1 + 7 * 5);
    let total: f64 = rows[1..6]
        .iter()
        .map(|r| r[4].parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn outputs_reproduce_bit_for_bit() {
    let toml = "noise = true\nseed = 11\nshots = 2000\n[evolution]\nn_times = 5\n[mitigation]\nconfusion = true\npostselect = true\n";
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let mut cb = config_in(b.path(), toml);
    cb.workers = Some(2);
    let fa = execute(Command::TrotterSweep, &config_in(a.path(), toml)).unwrap();
    let fb = execute(Command::TrotterSweep, &cb).unwrap();
    assert_eq!(fs::read(&fa[0]).unwrap(), fs::read(&fb[0]).unwrap());
    let text = fs::read_to_string(&fa[0]).unwrap();
    assert!(text.starts_with("# tool: qdyn "));
    assert!(text.contains("# seed: 11\n"));
    assert!(text.contains("# config_sha256: "));
}

#[test]
fn hash_tracks_settings_but_not_output_location() {
    let a = RunConfig::default();
    let mut b = a.clone();
    b.out = "elsewhere".into();
    b.workers = Some(3);
    assert_eq!(a.hash("layout"), b.hash("layout"));
    b.seed = 1;
    assert_ne!(a.hash("layout"), b.hash("layout"));
    assert_ne!(a.hash("layout"), a.hash("spectrum"));
}

#[test]
fn layout_ranks_four_chains() {
    let dir = TempDir::new().unwrap();
    let rows = csv_rows(&execute(Command::Layout, &config_in(dir.path(), "")).unwrap()[0]);
    assert_eq!(rows.len(), 5);
    let scores: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn ghz_without_noise_is_balanced() {
    let dir = TempDir::new().unwrap();
    let r = json(&execute(Command::GhzMitigate, &config_in(dir.path(), "seed = 4\n")).unwrap()[0]);
    for key in ["all_zeros", "all_ones"] {
        let v = r["mitigated"][key].as_f64().unwrap();
        let se = r["mitigated"][&format!("stderr_{key}")].as_f64().unwrap();
        assert!((v - 0.5).abs() <= 3.0 * se);
    }
    assert_eq!(r["postselection"]["empty"], Value::Bool(true));
    assert_eq!(r["meta"]["command"], "ghz-mitigate");
}

#[test]
fn ghz_with_flips_moves_toward_one_half() {
    let dir = TempDir::new().unwrap();
    let toml = "noise = true\nseed = 9\n[ghz]\nreadout = [[0.02, 0.03], [0.01, 0.02], [0.03, 0.01], [0.02, 0.02], [0.01, 0.03]]\n";
    let r = json(&execute(Command::GhzMitigate, &config_in(dir.path(), toml)).unwrap()[0]);
    for key in ["all_zeros", "all_ones"] {
        let raw = r["raw"][key].as_f64().unwrap();
        let mit = r["mitigated"][key].as_f64().unwrap();
        assert!((mit - 0.5).abs() < (raw - 0.5).abs());
    }
}

#[test]
fn spectrum_of_an_eigenstate_has_one_peak() {
    let dir = TempDir::new().unwrap();
    let files = execute(
        Command::Spectrum,
        &config_in(dir.path(), "[spectrum]\ninitial = \"00000\"\n"),
    )
    .unwrap();
    let peaks = json(&files[1]);
    let list = peaks["peaks"].as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert!(list[0]["location"].as_f64().unwrap().abs() < 1e-6);
    assert_eq!(csv_rows(&files[0])[0], ["omega", "intensity"]);
}

#[test]
fn empty_omega_grid_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let err = execute(
        Command::Spectroscopy,
        &config_in(dir.path(), "[spectroscopy]\nn_omega = 0\n"),
    )
    .unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(!dir.path().join("spectroscopy.csv").exists());
}

#[test]
fn spectroscopy_rows_follow_grid() {
    let dir = TempDir::new().unwrap();
    let toml = "[spectroscopy]\nn_omega = 9\nn_steps = 20\n";
    let rows = csv_rows(&execute(Command::Spectroscopy, &config_in(dir.path(), toml)).unwrap()[0]);
    assert_eq!(rows.len(), 10);
    for r in &rows[1..] {
        let z: f64 = r[1].parse().unwrap();
        assert!((-1.0..=1.0 + 1e-12).contains(&z));
    }
}

#[test]
fn slater_occupations_match_orbitals() {
    let dir = TempDir::new().unwrap();
    let rows = csv_rows(&execute(Command::SlaterPrep, &config_in(dir.path(), "")).unwrap()[0]);
    let total: f64 = rows[1..].iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 2.0).abs() < 1e-10);
    for r in &rows[1..] {
        assert!((r[1].parse::<f64>().unwrap() - r[2].parse::<f64>().unwrap()).abs() < 1e-10);
    }
}

#[test]
fn lcu_report_tracks_exact_evolution() {
    let dir = TempDir::new().unwrap();
    let r = json(&execute(Command::LcuEvolve, &config_in(dir.path(), "")).unwrap()[0]);
    assert!(r["fidelity"].as_f64().unwrap() > 1.0 - 1e-6);
    let p = r["success_probability"].as_f64().unwrap();
    assert!((p - r["inverse_s_squared"].as_f64().unwrap()).abs() < 1e-6);
}

#[test]
fn flags_override_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "seed = 1\nshots = 50\n").unwrap();
    let args = CommonArgs {
        config: Some(path),
        seed: Some(7),
        ..Default::default()
    };
    let cfg = resolve_config(&args).unwrap();
    assert_eq!((cfg.seed, cfg.shots), (7, 50));
}

#[test]
fn missing_device_file_is_rejected() {
    let args = CommonArgs {
        device: Some("/nonexistent/device.toml".into()),
        ..Default::default()
    };
    assert!(matches!(resolve_config(&args), Err(CliError::Config(_))));
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_qdyn");
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "no_such_key = 1\n").unwrap();
    let status = Process::new(bin)
        .args(["layout", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let out = Process::new(bin)
        .args(["layout", "--seed", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("layouts.csv")).unwrap();
    assert!(text.contains("# seed: 5\n"));
}
