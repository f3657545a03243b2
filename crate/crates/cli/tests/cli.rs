//! End-to-end checks of the command-line interface.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bbchain"))
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

fn tmpdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("bbchain-cli-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn profiles_runs_are_byte_identical() {
    let dir = tmpdir("determinism");
    for sub in ["a", "b"] {
        let out = dir.join(sub);
        let status = bin()
            .args(["profiles", "--n", "3", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = read(&dir.join("a"), "profile_n3.csv");
    let b = read(&dir.join("b"), "profile_n3.csv");
    assert_eq!(a, b);
    let ma = read(&dir.join("a"), "manifest.json");
    let mb = read(&dir.join("b"), "manifest.json");
    assert_eq!(ma, mb);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn transfer_emits_csv_sidecar_and_manifest() {
    let dir = tmpdir("transfer");
    let status = bin()
        .args(["transfer", "--n", "3", "--t", "20", "--schedule", "linear", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(&dir, "transfer_n3_t20_linear.csv");
    assert!(csv.starts_with("t,p_1,p_2,p_3,norm\n"));
    assert_eq!(csv.lines().count(), 202);
    let sidecar: serde_json::Value =
        serde_json::from_str(&read(&dir, "transfer_n3_t20_linear.json")).unwrap();
    assert!(sidecar["fidelity"].as_f64().unwrap() > 0.0);
    assert!(sidecar["norm_drift"].as_f64().unwrap() < 1e-8);
    let manifest: serde_json::Value = serde_json::from_str(&read(&dir, "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "transfer");
    assert!(manifest["tolerances"]["norm_drift_limit"].as_f64().unwrap() > 0.0);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn capability_limit_exits_with_code_four() {
    let dir = tmpdir("capability");
    let status = bin()
        .args(["transfer", "--n", "11", "--t", "20", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    let status = bin()
        .args(["profiles", "--n", "13", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn protocol_violations_exit_with_code_two() {
    let dir = tmpdir("config");
    // even chain
    let status = bin()
        .args(["transfer", "--n", "4", "--t", "20", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // wrong mixing angle for the protocol
    let status = bin()
        .args(["transfer", "--n", "3", "--t", "20", "--theta", "0.3", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn potential_writes_all_three_stages() {
    let dir = tmpdir("potential");
    let status = bin()
        .args(["potential", "--stage", "all", "--points", "101", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    for tag in ["a", "b", "c"] {
        let csv = read(&dir, &format!("potential_{tag}.csv"));
        assert!(csv.starts_with("x_over_lambda,V\n"));
        assert_eq!(csv.lines().count(), 102);
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn timescale_reads_bundled_table_and_maps_hubbard() {
    let dir = tmpdir("timescale");
    let output = bin()
        .args([
            "timescale",
            "--n",
            "9",
            "--target-error",
            "1e-2",
            "--j",
            "100,200",
            "--scattering",
            "46",
            "52",
            "--hubbard",
            "0.05",
            "1.0",
            "0.04",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text: serde_json::Value = serde_json::from_str(&read(&dir, "timescale.json")).unwrap();
    let estimates = text["estimates"].as_array().unwrap();
    assert_eq!(estimates.len(), 2);
    // J doubled -> duration halved
    let s0 = estimates[0]["seconds"].as_f64().unwrap();
    let s1 = estimates[1]["seconds"].as_f64().unwrap();
    assert!((s0 - 2.0 * s1).abs() < 1e-12);
    assert!((text["extra"]["ctilde2_from_scattering"].as_f64().unwrap() - 0.04).abs() < 1e-15);
    let mapping = read(&dir, "hubbard_mapping.txt");
    assert!(mapping.starts_with("alpha "));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tmpdir("configfile");
    let cfg = dir.join("cfg.toml");
    fs::write(&cfg, format!("out = \"{}\"\nalpha = 2.0\n", dir.join("from-config").display()))
        .unwrap();
    // no --out flag: config wins
    let status = bin()
        .args(["gap-scaling", "--n", "3", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(&dir.join("from-config"), "gap_scaling.csv");
    // alpha = 2 from the config scales the reported gap to 2/3
    let row = csv.lines().nth(1).unwrap();
    let gap: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((gap - 2.0 / 3.0).abs() < 1e-8);
    // explicit flag overrides the config
    let flag_out = dir.join("from-flag");
    let status = bin()
        .args(["gap-scaling", "--n", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(flag_out.join("gap_scaling.csv").exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn pplus_reports_probability_column() {
    let dir = tmpdir("pplus");
    let status = bin()
        .args(["pplus", "--n", "3", "--t-list", "10,20", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(&dir, "pplus_n3_linear.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t_alpha,probability,first_order_valid,nodes");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let p: f64 = first[1].parse().unwrap();
    assert!(p > 0.0 && p < 1.0);
    assert_eq!(first[2], "true");
    let _ = fs::remove_dir_all(&dir);
}
