use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn ergm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

const HAMILTONIAN: &str = r#"{"family":["K12","C3"],"terms":[{"k":1,"beta":2.0,"shift":1.0,"gamma":0.3333333333333333}],"allow_degenerate":false}"#;

#[test]
fn planar_phi_triangle_summary_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = ergm(&["planar-phi", "--motifs", "C3", "--s", "1.0"], dir.path());
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim_end(),
        r#"{"value":0.3333333333333333,"optimizers":[[0.0,0.3333333333333333]]}"#
    );
}

#[test]
fn planar_phi_emits_region_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = ergm(
        &[
            "planar-phi",
            "--motifs",
            "K12,C3,C4",
            "--s",
            "2,15,100",
            "--grid",
            "20",
            "--emit-region",
            "r.csv",
            "--emit-curves",
            "c.json",
        ],
        dir.path(),
    );
    stdout_json(&out);
    let region = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(region.lines().next(), Some("a,b,feasible,objective"));
    assert_eq!(region.lines().count(), 1 + 21 * 21);
    let curves: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(curves.as_array().unwrap().len(), 3);
}

#[test]
fn edge_f_triangle_is_clique_phase() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&ergm(
        &["edge-f", "--motif", "C3", "--gamma", "1.0", "--beta", "2.0"],
        dir.path(),
    ));
    assert_eq!(v["phase"], "clique");
    // Clique size (gamma beta)^{2/(2 - gamma)} = 4.
    assert!((v["a_star"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert!((v["psi"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn edge_f_phase_scan_csv() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&ergm(
        &[
            "edge-f",
            "--motif",
            "C3",
            "--gamma",
            "1.0",
            "--beta",
            "2.0",
            "--beta-grid",
            "1:3:0.5",
            "--emit",
            "phase.csv",
        ],
        dir.path(),
    ));
    let text = fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,phase,s_star,a_star,b_star,psi");
    let phases: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(phases, ["hub", "hub", "clique", "clique", "clique"]);
}

#[test]
fn finner_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&ergm(
        &[
            "finner-check",
            "--suite",
            "random",
            "--count",
            "10",
            "--seed",
            "1",
        ],
        dir.path(),
    ));
    assert_eq!(v["finner"]["failures"], 0);
    assert_eq!(v["holder"]["failures"], 0);
}

#[test]
fn finner_instance_recovery() {
    let dir = tempfile::tempdir().unwrap();
    // Two coordinates, the Loomis-Whitney style cover {0}, {1} with product f.
    let inst = r#"{"spaces":[[0.5,0.5],[0.25,0.75]],
        "system":[{"A":[0],"lambda":1.0},{"A":[1],"lambda":1.0}],
        "functions":[{"A_index":0,"values":[0.5,1.5]},{"A_index":1,"values":[2.0,0.6666666666666666]}]}"#;
    fs::write(dir.path().join("inst.json"), inst).unwrap();
    let v = stdout_json(&ergm(
        &["finner-check", "--instance", "inst.json", "--recover"],
        dir.path(),
    ));
    assert!((v["integral"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["bound_holds"].as_bool().unwrap());
    assert!(v["recovery"]["residuals"].is_array());
}

#[test]
fn hamiltonian_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("h.json"), HAMILTONIAN).unwrap();
    let psi = stdout_json(&ergm(&["psi", "--hamiltonian", "h.json"], dir.path()));
    assert!((psi["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(psi["duality_gap"].as_f64().unwrap().abs() < 1e-6);

    let nmf = stdout_json(&ergm(
        &["nmf", "--n", "32", "--p", "0.1", "--hamiltonian", "h.json"],
        dir.path(),
    ));
    for key in ["value", "iterations", "residuals", "witness_value"] {
        assert!(!nmf[key].is_null(), "missing {key}");
    }
    assert!(nmf["value"].as_f64().unwrap() >= nmf["witness_value"].as_f64().unwrap() - 1e-9);
}

#[test]
fn phi_np_table_feeds_hom_density() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&ergm(
        &[
            "phi-np", "--n", "24", "--p", "0.1", "--motifs", "C3", "--s", "1.0", "--emit", "q.bin",
        ],
        dir.path(),
    ));
    assert!(v["residuals"][0].as_f64().unwrap().abs() < 1e-6);
    let t = stdout_json(&ergm(
        &["hom-density", "--motif", "C3", "--graph", "q.bin"],
        dir.path(),
    ));
    // The upper-tail constraint t(C3, Q) >= (1 + s) p^3 is active.
    let target = 2.0 * 0.1f64.powi(3);
    assert!(t["density"].as_f64().unwrap() >= target * (1.0 - 1e-6));
}

#[test]
fn sample_writes_trajectory_graph_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("h.json"), HAMILTONIAN).unwrap();
    let args = [
        "sample",
        "--n",
        "32",
        "--p",
        "0.1",
        "--hamiltonian",
        "h.json",
        "--sweeps",
        "6",
        "--chains",
        "2",
        "--detect",
        "--emit-traj",
        "traj.csv",
        "--emit-graph",
        "g.bin",
        "--seed",
        "7",
        "--out",
        "run",
    ];
    stdout_json(&ergm(&args, dir.path()));
    let run = dir.path().join("run");
    let traj = fs::read_to_string(run.join("traj.csv")).unwrap();
    assert_eq!(
        traj.lines().next(),
        Some("chain,sweep,edges,t_1,t_2,hubSize,cliqueSize,xi1,xi2")
    );
    assert_eq!(traj.lines().count(), 1 + 2 * 6);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        let path = run.join(o["path"].as_str().unwrap());
        assert_eq!(o["sha256"].as_str().unwrap(), sha(&path));
    }

    // Same seed, same bytes.
    let first: Vec<String> = ["traj.csv", "g.bin"]
        .iter()
        .map(|f| sha(&run.join(f)))
        .collect();
    stdout_json(&ergm(&args, dir.path()));
    let second: Vec<String> = ["traj.csv", "g.bin"]
        .iter()
        .map(|f| sha(&run.join(f)))
        .collect();
    assert_eq!(first, second);
}

#[test]
fn emit_figure_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&ergm(
        &["emit-figure", "fig2A", "--grid", "30", "--out", "bundle"],
        dir.path(),
    ));
    let bundle = dir.path().join("bundle");
    for f in [
        "region.csv",
        "curves.json",
        "optimizers.csv",
        "objective_line.csv",
        "near_ties.csv",
        "scenario.json",
        "manifest.json",
    ] {
        assert!(bundle.join(f).exists(), "{f} missing");
    }
    // Every optimizer lies on a/2 + b = phi.
    let phi = v["value"].as_f64().unwrap();
    let rows = fs::read_to_string(bundle.join("optimizers.csv")).unwrap();
    for line in rows.lines().skip(1) {
        let ab: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((0.5 * ab[0] + ab[1] - phi).abs() <= 1e-8);
    }
    let scenario: Value =
        serde_json::from_str(&fs::read_to_string(bundle.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(scenario, v);
}

#[test]
fn json_outputs_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = ergm(
        &[
            "planar-phi",
            "--motifs",
            "K12,C3,C4",
            "--s",
            "4,25,100",
            "--json",
        ],
        dir.path(),
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&v).unwrap(), text.trim_end());
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = ergm(&["no-such-command"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));

    let bad_scenario = ergm(&["emit-figure", "fig9"], dir.path());
    assert_eq!(bad_scenario.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_scenario.stderr).starts_with("E_VALIDATION"));

    let bad_level = ergm(&["planar-phi", "--motifs", "C3", "--s=-1"], dir.path());
    assert_eq!(bad_level.status.code(), Some(1));
    assert_eq!(
        String::from_utf8_lossy(&bad_level.stderr).lines().count(),
        1
    );

    // State space beyond the enumeration limit.
    let spaces = vec![vec![0.5, 0.5]; 30];
    let inst = serde_json::json!({
        "spaces": spaces,
        "system": (0..30).map(|v| serde_json::json!({"A": [v], "lambda": 1.0})).collect::<Vec<_>>(),
    });
    fs::write(dir.path().join("big.json"), inst.to_string()).unwrap();
    let big = ergm(&["finner-check", "--instance", "big.json"], dir.path());
    assert_eq!(big.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&big.stderr).starts_with("E_CAPABILITY"));
}
