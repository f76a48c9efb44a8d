//! End-to-end tests of the `ddb-shadow` binary: artifact shapes, exit-code
//! taxonomy, determinism under fixed seeds, and manifest checksums.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ddb-shadow"));
    // The seed fallback must come from the test, never the outer shell.
    cmd.env_remove("DDB_SHADOW_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, code: i32, context: &str) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "{context}: expected exit {code}, got {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("file exists"))
        .expect("valid JSON")
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes a diagonal observable with entries f(i) as upper-triangle JSON.
fn write_diag_obs(dir: &Path, name: &str, dim: usize, f: impl Fn(usize) -> f64) -> PathBuf {
    let entries: Vec<serde_json::Value> = (0..dim)
        .map(|i| serde_json::json!([i, i, f(i), 0.0]))
        .collect();
    let path = dir.join(name);
    std::fs::write(
        &path,
        serde_json::json!({ "dim": dim, "entries": entries }).to_string(),
    )
    .unwrap();
    path
}

#[test]
fn estimate_on_the_mixed_state_with_identity_is_exact() {
    let tmp = TempDir::new().unwrap();
    let obs = write_diag_obs(tmp.path(), "id.json", 4, |_| 1.0);
    let out = tmp.path().join("run");
    let output = run(&[
        "estimate",
        "--dim",
        "4",
        "--state",
        "maximally-mixed",
        "--observable",
        obs.to_str().unwrap(),
        "--shots",
        "64",
        "--oracle",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "estimate");
    let report = read_json(&out.join("estimate.json"));
    assert_eq!(report["report"]["estimate"], 1.0);
    assert_eq!(report["report"]["std_error"], 0.0);
    assert_eq!(report["oracle"], 1.0);
    assert_eq!(report["abs_error"], 0.0);
    assert_eq!(report["report"]["shots_used"], 64);

    // Manifest lists the report with a correct checksum.
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "estimate");
    assert_eq!(manifest["seed"], 7);
    let outputs = manifest["outputs"].as_array().unwrap();
    let entry = outputs
        .iter()
        .find(|o| o["path"] == "estimate.json")
        .expect("estimate.json listed");
    let bytes = std::fs::read(out.join("estimate.json")).unwrap();
    assert_eq!(entry["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    assert_eq!(entry["bytes"].as_u64().unwrap(), bytes.len() as u64);
}

#[test]
fn estimates_are_byte_identical_under_a_fixed_seed() {
    let tmp = TempDir::new().unwrap();
    let obs = write_diag_obs(tmp.path(), "obs.json", 6, |i| i as f64 - 2.0);
    let run_once = |dir: &str, seed: &str| {
        let out = tmp.path().join(dir);
        let output = run(&[
            "estimate",
            "--dim",
            "6",
            "--state",
            "haar",
            "--observable",
            obs.to_str().unwrap(),
            "--shots",
            "500",
            "--keep-log",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_exit(&output, 0, "estimate haar");
        (
            std::fs::read(out.join("estimate.json")).unwrap(),
            std::fs::read(out.join("shadow.bin")).unwrap(),
        )
    };
    let (report_a, log_a) = run_once("a", "12");
    let (report_b, log_b) = run_once("b", "12");
    let (report_c, log_c) = run_once("c", "13");
    assert_eq!(report_a, report_b);
    assert_eq!(log_a, log_b);
    assert_ne!(report_a, report_c);
    assert_ne!(log_a, log_c);
}

#[test]
fn seed_env_var_is_the_flag_default() {
    let tmp = TempDir::new().unwrap();
    let obs = write_diag_obs(tmp.path(), "obs.json", 4, |i| i as f64);
    let base = [
        "estimate",
        "--dim",
        "4",
        "--state",
        "hs",
        "--observable",
        obs.to_str().unwrap(),
        "--shots",
        "200",
    ];
    let out_env = tmp.path().join("env");
    let output = bin()
        .args(base)
        .args(["--out", out_env.to_str().unwrap()])
        .env("DDB_SHADOW_SEED", "9")
        .output()
        .unwrap();
    assert_exit(&output, 0, "env seed");
    let out_flag = tmp.path().join("flag");
    let output = run(&[
        &base[..],
        &["--seed", "9", "--out", out_flag.to_str().unwrap()],
    ]
    .concat());
    assert_exit(&output, 0, "flag seed");
    assert_eq!(
        std::fs::read(out_env.join("estimate.json")).unwrap(),
        std::fs::read(out_flag.join("estimate.json")).unwrap()
    );
}

#[test]
fn exit_codes_follow_the_taxonomy() {
    let tmp = TempDir::new().unwrap();
    let obs = write_diag_obs(tmp.path(), "id.json", 4, |_| 1.0);
    let obs = obs.to_str().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    // Usage errors: exit 2.
    assert_exit(
        &run(&["fig1", "--trials", "0", "--out", out]),
        2,
        "zero trials",
    );
    assert_exit(
        &run(&[
            "estimate", "--dim", "1", "--observable", obs, "--out", out,
        ]),
        2,
        "dimension below range",
    );
    assert_exit(
        &run(&[
            "estimate", "--dim", "4", "--observable", obs, "--strategy", "mode", "--out", out,
        ]),
        2,
        "unknown strategy",
    );
    assert_exit(
        &run(&[
            "stabilizer", "--n", "61", "--r", "2", "--observable", obs, "--out", out,
        ]),
        2,
        "qubit cap",
    );
    assert_exit(
        &run(&["estimate", "--dim", "4", "--out", out]),
        2,
        "missing required flag (clap)",
    );

    // Parse errors: exit 3.
    let garbage = tmp.path().join("garbage.json");
    std::fs::write(&garbage, "not json {").unwrap();
    assert_exit(
        &run(&[
            "estimate",
            "--dim",
            "4",
            "--observable",
            garbage.to_str().unwrap(),
            "--out",
            out,
        ]),
        3,
        "garbage observable",
    );

    // Invariant violations: exit 4. Parses as a matrix but trace is 2.
    let not_density = tmp.path().join("not_density.json");
    std::fs::write(
        &not_density,
        r#"{"dim":2,"entries":[[0,0,1.0,0.0],[1,1,1.0,0.0]]}"#,
    )
    .unwrap();
    let obs2 = write_diag_obs(tmp.path(), "id2.json", 2, |_| 1.0);
    let bad_state_out = tmp.path().join("bad-state");
    assert_exit(
        &run(&[
            "estimate",
            "--dim",
            "2",
            "--state",
            "file",
            "--state-file",
            not_density.to_str().unwrap(),
            "--observable",
            obs2.to_str().unwrap(),
            "--out",
            bad_state_out.to_str().unwrap(),
        ]),
        4,
        "non-density state file",
    );
    // A failed run must not leave a manifest behind.
    assert!(!bad_state_out.join("manifest.json").exists());
}

#[test]
fn fig1_emits_csv_rows_and_json_series() {
    let tmp = TempDir::new().unwrap();
    let run_once = |dir: &str| {
        let out = tmp.path().join(dir);
        let output = run(&[
            "fig1",
            "--n-range",
            "2..3",
            "--trials",
            "8",
            "--thresholds",
            "4,n^2",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_exit(&output, 0, "fig1");
        out
    };
    let out = run_once("x");

    let csv = std::fs::read_to_string(out.join("proportions.csv")).unwrap();
    let mut lines = csv.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# ddb-shadow "));
    assert!(comment.contains("seed=5"));
    assert_eq!(lines.next().unwrap(), "n,d,s,fraction,trials");
    // Two qubit counts x two thresholds.
    assert_eq!(lines.count(), 4);

    let json = read_json(&out.join("proportions.json"));
    let series = json["series"].as_array().unwrap();
    let labels: Vec<&str> = series
        .iter()
        .map(|s| s["threshold"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["4", "n^2"]);
    let quad = &series[1];
    assert_eq!(quad["points"].as_array().unwrap().len(), 2);

    // Deterministic across identical runs.
    let out2 = run_once("y");
    assert_eq!(
        std::fs::read(out.join("proportions.csv")).unwrap(),
        std::fs::read(out2.join("proportions.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(out.join("proportions.json")).unwrap(),
        std::fs::read(out2.join("proportions.json")).unwrap()
    );
}

#[test]
fn variance_audit_of_a_multiple_of_identity_is_all_zero() {
    let tmp = TempDir::new().unwrap();
    let obs = write_diag_obs(tmp.path(), "id.json", 4, |_| 3.0);
    let out = tmp.path().join("run");
    let output = run(&[
        "variance",
        "--dim",
        "4",
        "--observable",
        obs.to_str().unwrap(),
        "--states",
        "6",
        "--family",
        "hs",
        "--worst-case-demo",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "variance");

    let csv = std::fs::read_to_string(out.join("bound_audit.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# ddb-shadow "));
    let header = lines.next().unwrap();
    assert!(header.starts_with("state_id,variance_exact"));
    let mut rows = 0;
    for line in lines {
        // The traceless part of c*I vanishes, so every moment is zero.
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.0, "row {line}");
        rows += 1;
    }
    // Six sampled states plus the maximally mixed reference row.
    assert_eq!(rows, 7);

    let worst = std::fs::read_to_string(out.join("worst_case.csv")).unwrap();
    let last = worst.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "4");
    assert!(fields[2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn stabilizer_rank_zero_is_exact_with_zero_shots() {
    let tmp = TempDir::new().unwrap();
    let obs = write_diag_obs(tmp.path(), "obs.json", 8, |i| i as f64);
    let out = tmp.path().join("run");
    let output = run(&[
        "stabilizer",
        "--n",
        "3",
        "--r",
        "0",
        "--observable",
        obs.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "stabilizer r=0");
    let report = read_json(&out.join("stabilizer.json"));
    assert_eq!(report["report"]["shots"], 0);
    assert_eq!(report["report"]["path"], "Direct");
    assert_eq!(report["abs_error"], 0.0);
    assert!(out.join("state.json").exists());
}

#[test]
fn stabilizer_state_file_reruns_identically_and_rejects_mismatched_flags() {
    let tmp = TempDir::new().unwrap();
    let obs = write_diag_obs(tmp.path(), "obs.json", 16, |i| (i % 3) as f64 - 1.0);
    let first = tmp.path().join("first");
    let output = run(&[
        "stabilizer",
        "--n",
        "4",
        "--r",
        "2",
        "--observable",
        obs.to_str().unwrap(),
        "--seed",
        "11",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "stabilizer sample");

    let state = first.join("state.json");
    let second = tmp.path().join("second");
    let output = run(&[
        "stabilizer",
        "--state",
        state.to_str().unwrap(),
        "--observable",
        obs.to_str().unwrap(),
        "--seed",
        "11",
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "stabilizer from file");
    let a = read_json(&first.join("stabilizer.json"));
    let b = read_json(&second.join("stabilizer.json"));
    assert_eq!(a["report"]["final_estimate"], b["report"]["final_estimate"]);

    let output = run(&[
        "stabilizer",
        "--n",
        "5",
        "--r",
        "2",
        "--state",
        state.to_str().unwrap(),
        "--observable",
        obs.to_str().unwrap(),
        "--out",
        tmp.path().join("third").to_str().unwrap(),
    ]);
    assert_exit(&output, 2, "flag/file mismatch");
}

#[test]
fn bench_emits_tables_and_a_fully_checksummed_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let output = run(&[
        "bench",
        "--dims",
        "4,8",
        "--shots",
        "500",
        "--repeats",
        "1",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0, "bench");

    for name in [
        "bench_post_processing.csv",
        "bench_dense_oracle.csv",
        "bench_reduction.csv",
    ] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert!(text.starts_with("# ddb-shadow "), "{name} comment line");
        assert!(text.lines().count() >= 3, "{name} has data rows");
    }
    let summary = read_json(&out.join("bench_summary.json"));
    for key in [
        "per_shot_ratio_largest_vs_smallest",
        "dense_oracle_loglog_slope",
        "reduction_loglog_slope",
    ] {
        assert!(summary[key].as_f64().unwrap().is_finite(), "{key} finite");
    }

    // The manifest names exactly the non-manifest files, each with a
    // correct digest.
    let manifest = read_json(&out.join("manifest.json"));
    let listed: std::collections::BTreeSet<String> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap().to_string())
        .collect();
    let on_disk: std::collections::BTreeSet<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|name| name != "manifest.json")
        .collect();
    assert_eq!(listed, on_disk);
    for entry in manifest["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(out.join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
}
