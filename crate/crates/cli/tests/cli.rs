//! End-to-end checks of the binary: exit codes, file outputs, and format
//! round trips.

use std::path::Path;
use std::process::{Command, Output};

use imlab_core::worstcase;

fn imlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, body: &str) {
    std::fs::write(path, body).unwrap();
}

#[test]
fn worstcase_sweep_matches_library() {
    let out = imlab(&["worstcase", "--gammas", "0.5,0.9"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let expected = worstcase::sweep_csv(&[0.5, 0.9]).unwrap();
    assert_eq!(stdout, expected);
    assert!(stdout.starts_with("gamma,v_e,v_i,gap,epsilon,thm1_rhs,ratio"));
}

#[test]
fn run_persists_and_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("raw.json");
    let csv_path = dir.path().join("direct.csv");

    let config = |output: &str| {
        format!(
            r#"{{
  "seed": 5,
  "mdp_family": {{"n_states": 3, "n_actions": 2, "gammas": [0.9], "dirichlet_alpha": 1.0, "reward_scale": 1.0}},
  "campaign": "bc_policy",
  "trials": 4,
  "sample_sizes": [40],
  "delta": 0.1,
  "output": {output}
}}"#
        )
    };

    let cfg_json = dir.path().join("cfg_json.json");
    write(
        &cfg_json,
        &config(&format!(
            r#"{{"path": "{}", "format": "json"}}"#,
            json_path.display()
        )),
    );
    let out = imlab(&["run", cfg_json.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json_path.exists());

    let cfg_csv = dir.path().join("cfg_csv.json");
    write(
        &cfg_csv,
        &config(&format!(
            r#"{{"path": "{}", "format": "csv"}}"#,
            csv_path.display()
        )),
    );
    let out = imlab(&["run", cfg_csv.to_str().unwrap()]);
    assert!(out.status.success());

    // Converting the raw JSON report must reproduce the direct CSV bytes.
    let out = imlab(&["report", json_path.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    let converted = String::from_utf8(out.stdout).unwrap();
    let direct = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(converted, direct);
}

#[test]
fn run_rejects_invalid_config_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    write(&cfg, r#"{"seed": 1}"#);
    let out = imlab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let cfg2 = dir.path().join("bad2.json");
    write(
        &cfg2,
        r#"{
  "seed": 5,
  "mdp_family": {"n_states": 3, "n_actions": 2, "gammas": [0.9], "dirichlet_alpha": 1.0, "reward_scale": 1.0},
  "campaign": "bc_policy",
  "trials": 0,
  "sample_sizes": [40],
  "delta": 0.1
}"#,
    );
    let out = imlab(&["run", cfg2.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_reports_bound_on_hard_instance() {
    let dir = tempfile::tempdir().unwrap();
    let hard = worstcase::hard_instance(0.9).unwrap();
    let mdp_path = dir.path().join("mdp.json");
    let pe_path = dir.path().join("pe.json");
    let pi_path = dir.path().join("pi.json");
    write(&mdp_path, &serde_json::to_string(&hard.mdp).unwrap());
    write(&pe_path, &serde_json::to_string(&hard.pi_e).unwrap());
    write(&pi_path, &serde_json::to_string(&hard.pi_i).unwrap());

    for bound in ["THM1", "LEM_A_SA", "LEM1_JS", "PINSKER"] {
        let out = imlab(&[
            "verify",
            mdp_path.to_str().unwrap(),
            pe_path.to_str().unwrap(),
            pi_path.to_str().unwrap(),
            "--bound",
            bound,
        ]);
        assert!(
            out.status.success(),
            "{bound}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report: serde_json::Value =
            serde_json::from_slice(&out.stdout).expect("report is JSON");
        assert_eq!(report["bound_id"], bound);
        assert_eq!(report["holds"], true);
    }

    // Bounds needing more inputs are a usage error.
    let out = imlab(&[
        "verify",
        mdp_path.to_str().unwrap(),
        pe_path.to_str().unwrap(),
        pi_path.to_str().unwrap(),
        "--bound",
        "THM3",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = imlab(&[
        "verify",
        mdp_path.to_str().unwrap(),
        pe_path.to_str().unwrap(),
        pi_path.to_str().unwrap(),
        "--bound",
        "NOPE",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
