//! End-to-end tests for the `borchers` binary: exit-code contract, output
//! shapes, config hashing, and seed precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use borchers_core::io::moment_table_from_csv;

fn borchers() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_borchers"));
    cmd.env_remove("BORCHERS_SEED");
    cmd
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

const ULTRALOCAL_STATE: &str = r#"{
  "kind": "ultralocal",
  "space": {"points": [[0.0], [1.0], [2.0], [3.0]],
            "weights": [1.0, 1.0, 1.0, 1.0],
            "periodic": [4.0]},
  "k": 1
}"#;

const DELTA_GENS: &str = r#"{
  "k": 1,
  "generators": [
    {"kind": "delta", "at": 0, "matrix": [[[1.0, 0.0]]]},
    {"kind": "delta", "at": 1, "matrix": [[[1.0, 0.0]]]}
  ]
}"#;

const NEGATIVE_ALPHA_STATE: &str = r#"{
  "kind": "constant",
  "space": {"points": [[0.0]], "weights": [1.0], "periodic": [null]},
  "k": 1,
  "alpha": [1.0, 0.0, -1.0]
}"#;

const UNIT_GEN: &str = r#"{
  "k": 1,
  "generators": [{"kind": "constant", "matrix": [[[1.0, 0.0]]]}]
}"#;

#[test]
fn gns_reports_carry_dims_ops_and_a_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "state.json", ULTRALOCAL_STATE);
    let gens = write(dir.path(), "gens.json", DELTA_GENS);
    let out = borchers()
        .args(["gns", &state, &gens, "--max-len", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["dim_H"], 3);
    assert_eq!(report["dropped"], 0);
    assert_eq!(report["ops"].as_array().unwrap().len(), 2);
    let hash = report["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));

    // --out writes the identical report to a file.
    let path = dir.path().join("report.json");
    let again = borchers()
        .args(["gns", &state, &gens, "--max-len", "1", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(again.status.success());
    assert_eq!(fs::read_to_string(&path).unwrap(), stdout(&out));
}

#[test]
fn malformed_input_exits_one_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = write(dir.path(), "garbage.json", "not json at all");
    let gens = write(dir.path(), "gens.json", UNIT_GEN);
    let out = borchers().args(["gns", &garbage, &gens]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cannot parse"), "stderr: {err}");

    let missing = borchers()
        .args(["gns", "/nonexistent/state.json", &gens])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn negative_alpha_exits_two_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "bad.json", NEGATIVE_ALPHA_STATE);
    let gens = write(dir.path(), "gens.json", UNIT_GEN);
    let out = borchers()
        .args(["gns", &state, &gens, "--max-len", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not positive"), "stderr: {err}");
    assert!(err.contains("witness"), "stderr: {err}");
}

#[test]
fn ym2_emits_partition_and_two_point_rows() {
    let out = borchers()
        .args([
            "ym2", "--genus", "2", "--N", "2", "--tau", "1e-6", "--cutoff", "20000",
            "--two-point", "1", "1", "0", "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_hash = "));
    assert_eq!(lines[1], "genus,N,tau,cutoff,Z,tail");
    let fields: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(&fields[..4], &["2", "2", "0.000001", "20000"]);
    let z: f64 = fields[4].parse().unwrap();
    let zeta2 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    assert!((z - zeta2).abs() < 1e-3, "Z = {z}");
    let tail: f64 = fields[5].parse().unwrap();
    assert!(tail >= 0.0 && tail < 1e-6);
    // Coefficient echo: p^{11} = 1/N = 1/2 and m^{11} = 0.
    assert_eq!(lines[3], "a,b,x,y,p_ab,m_ab,xi,gauge_invariant");
    let two: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(&two[..6], &["1", "1", "0", "1", "1/2", "0/1"]);
}

#[test]
fn ym2_cutoff_zero_is_unity_and_epsilon_aliases_tau() {
    let out = borchers()
        .args(["ym2", "--genus", "1", "--N", "3", "--tau", "0.7", "--cutoff", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let z: f64 = text.lines().nth(2).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert_eq!(z, 1.0);

    let aliased = borchers()
        .args(["ym2", "--genus", "1", "--N", "3", "--epsilon", "0.7", "--cutoff", "0"])
        .output()
        .unwrap();
    assert!(aliased.status.success());
    assert_eq!(stdout(&aliased), text);

    let help = borchers().args(["ym2", "--help"]).output().unwrap();
    assert!(help.status.success());
    let help_text = stdout(&help);
    assert!(help_text.contains("--epsilon"), "alias must be documented");
}

#[test]
fn mm_tables_parse_back_and_seeds_resolve_by_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"N": 2, "couplings": {"2": -0.5}, "seed": 11}"#,
    );
    let pairs = write(dir.path(), "pairs.json", "[[[0,0],[0,0]], [[0,1],[1,0]]]");

    let run = |extra_env: Option<u64>, seed_flag: Option<u64>| -> String {
        let mut cmd = borchers();
        cmd.args(["mm", &spec, "--moments", &pairs, "--samples", "2000"]);
        if let Some(seed) = seed_flag {
            cmd.args(["--seed", &seed.to_string()]);
        }
        if let Some(env_seed) = extra_env {
            cmd.env("BORCHERS_SEED", env_seed.to_string());
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        stdout(&out)
    };

    // Deterministic: identical invocations are byte-identical.
    let base = run(None, None);
    assert_eq!(base, run(None, None));
    assert!(base.contains("# seed = 11"), "file seed used by default");

    // Values are sane Gaussian moments (⟨M₀₀²⟩ = ⟨M₀₁M₁₀⟩ = 1/2).
    let body: String = base.lines().skip(2).collect::<Vec<_>>().join("\n");
    let table = moment_table_from_csv(&body).unwrap();
    for (_, entry) in table.entries() {
        assert!((entry.value.re - 0.5).abs() < 0.2);
        assert_eq!(entry.n_samples, 2000);
    }

    // Environment beats the file; the flag beats both.
    let via_env = run(Some(7), None);
    assert!(via_env.contains("# seed = 7"));
    let via_flag = run(Some(7), Some(5));
    assert!(via_flag.contains("# seed = 5"));
    assert_eq!(via_flag, run(None, Some(5)));
}

#[test]
fn check_passes_ultralocal_and_names_failures() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "state.json", ULTRALOCAL_STATE);
    let out = borchers().args(["check", &good, "--all"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passed"], true);
    for name in ["positivity", "locality", "hssc", "krein", "translation"] {
        assert_eq!(report["checks"][name]["passed"], true, "check {name}");
    }

    // A constructed α₂ < 0 state fails positivity by name, exit code 2.
    let bad = write(dir.path(), "bad.json", NEGATIVE_ALPHA_STATE);
    let out = borchers().args(["check", &bad, "--positivity"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["checks"]["positivity"]["passed"], false);
    assert!(report["checks"]["positivity"]["violating_vector"].is_string());

    // No flags at all is a usage error.
    let none = borchers().args(["check", &good]).output().unwrap();
    assert_eq!(none.status.code(), Some(1));
}

#[test]
fn translation_check_skips_aperiodic_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let aperiodic = write(
        dir.path(),
        "open.json",
        r#"{
          "kind": "ultralocal",
          "space": {"points": [[0.0], [1.0]], "weights": [1.0, 1.0], "periodic": [null]},
          "k": 1
        }"#,
    );
    let out = borchers()
        .args(["check", &aperiodic, "--translation"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["checks"]["translation"]["skipped"].is_string());
    assert_eq!(report["passed"], true);
}
