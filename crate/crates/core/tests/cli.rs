use std::fs;
use std::path::Path;

use coherent_fingerprint::cli::{run, EXIT_CONFIG, EXIT_PHYSICS, EXIT_SUCCESS};
use serde_json::Value;

fn cohfp(args: &[&str]) -> (u8, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cohfp").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn records(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_is_reproducible_and_sub_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let (code, stdout, _) = cohfp(&[
            "simulate", "--n", "64", "--trials", "2", "--seed", "9", "--repetitions", "500",
            "--output", path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_SUCCESS);
        assert!(stdout.is_empty());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());

    let recs = records(&text);
    assert_eq!(recs.len(), 3);
    let meta = &recs[0];
    assert_eq!(meta["type"], "meta");
    for key in ["generator", "log_conventions", "model", "version"] {
        assert!(!meta[key].is_null(), "missing {key}");
    }
    assert_ne!(recs[1]["seed"], recs[2]["seed"]);
    assert_eq!(recs[1]["trial"], 0);
    assert_eq!(recs[2]["trial"], 1);
    assert!(recs[1].get("wall_time_s").is_none());
}

#[test]
fn config_file_then_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# small run\nn = 32\nmu = 2\nrepetitions = 100\nrecord_timing = true\n");
    let (code, stdout, _) = cohfp(&["simulate", "--config", &cfg, "--mu", "3"]);
    assert_eq!(code, EXIT_SUCCESS);
    let recs = records(&stdout);
    assert_eq!(recs[1]["params"]["mu"], 3.0);
    assert_eq!(recs[1]["params"]["n"], 32);
    assert!(recs[1]["wall_time_s"].is_number());
}

#[test]
fn identical_vector_files_estimate_near_zero() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = (0..256).map(|i| format!("{}\n", ((i * 37 % 101) as f64) - 50.0)).collect();
    let x = write(dir.path(), "x.txt", &body);
    let (code, stdout, _) = cohfp(&[
        "simulate", "--x_file", &x, "--y_file", &x, "--nu", "1", "--model", "linearized", "--trials", "5",
        "--repetitions", "20000",
    ]);
    assert_eq!(code, EXIT_SUCCESS);
    let recs = records(&stdout);
    let mean: f64 = recs[1..].iter().map(|r| r["e_hat"].as_f64().unwrap()).sum::<f64>() / 5.0;
    assert!(mean.abs() < 0.02, "mean e_hat {mean}");
    assert_eq!(recs[1]["true_distance_sq"], 0.0);
}

#[test]
fn physics_violations_exit_3_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.jsonl");
    let (code, _, stderr) = cohfp(&[
        "simulate", "--n", "64", "--k", "64", "--mu", "2", "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PHYSICS);
    assert!(!out.exists());
    let err: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(err["error"], "physics");

    let (code, _, _) = cohfp(&["simulate", "--n", "16", "--nu", "0.5"]);
    assert_eq!(code, EXIT_PHYSICS);
}

#[test]
fn config_errors_exit_2() {
    for args in [
        &["simulate", "--mu", "abc"][..],
        &["simulate", "--n", "12", "--k", "5"],
        &["simulate", "--x_file", "/nonexistent/x.txt", "--y_file", "/nonexistent/y.txt"],
        &["simulate", "--colour", "red"],
        &["frobnicate"],
    ] {
        let (code, _, stderr) = cohfp(args);
        assert_eq!(code, EXIT_CONFIG, "{args:?}");
        let err: Value = serde_json::from_str(stderr.trim()).unwrap();
        assert_eq!(err["exit_code"], 2);
    }
}

#[test]
fn equality_from_bit_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.txt", "# message\n10110010\n");
    let t = write(dir.path(), "t.txt", "1011 0011\n");
    let short = write(dir.path(), "short.txt", "101\n");
    let empty = write(dir.path(), "empty.txt", "# nothing\n");

    let (code, stdout, _) = cohfp(&["equality", "--x_bits", &s, "--y_bits", &s, "--trials", "3"]);
    assert_eq!(code, EXIT_SUCCESS);
    for r in &records(&stdout)[1..] {
        assert_eq!(r["equality"]["inputs_equal"], true);
        assert_eq!(r["params"]["n"], 128);
    }
    let (code, stdout, _) = cohfp(&["equality", "--x_bits", &s, "--y_bits", &t]);
    assert_eq!(code, EXIT_SUCCESS);
    assert_eq!(records(&stdout)[1]["equality"]["hamming_distance"], 1);

    assert_eq!(cohfp(&["equality", "--x_bits", &s, "--y_bits", &short]).0, EXIT_CONFIG);
    assert_eq!(cohfp(&["equality", "--x_bits", &empty, "--y_bits", &empty]).0, EXIT_CONFIG);
}

#[test]
fn resources_csv() {
    let (code, stdout, _) = cohfp(&["resources", "--n_list", "1024"]);
    assert_eq!(code, EXIT_SUCCESS);
    let data: Vec<&str> = stdout.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "n,k,T_cl,T_cp,T_qp,I_qp");
    assert_eq!(data.len(), 2);
    assert!(stdout.contains("# generator:"));
    assert!(stdout.contains("# log log_k: base 2"));

    let (_, stdout, _) = cohfp(&["resources", "--n_list", "2^10,2^20", "--k_rule", "const:2", "--nu_band", "0.985,0.995"]);
    let rows: Vec<Vec<f64>> = stdout
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    for row in &rows {
        assert_eq!(row.len(), 10);
        assert_eq!(row[1], 2.0);
        let n = row[0];
        // log2(2) = 1, so the classical columns are the raw bounds.
        assert!((row[3] - (20.0 * n.sqrt() + 10.0)).abs() < 1e-9);
        assert!(row[6] > row[4] && row[4] > row[8], "T_qp falls as nu rises");
    }
}

#[test]
fn ofdm_check_is_deterministic() {
    let (code, a, _) = cohfp(&["ofdm-check", "--k_list", "1,2,4,8", "--trials", "100", "--seed", "3"]);
    assert_eq!(code, EXIT_SUCCESS);
    let (_, b, _) = cohfp(&["ofdm-check", "--k_list", "1,2,4,8", "--trials", "100", "--seed", "3"]);
    assert_eq!(a, b);
    let recs = records(&a);
    for r in &recs[1..] {
        let tol = if r["k"] == 1 { 1e-15 } else { 1e-12 };
        assert!(r["max_error"].as_f64().unwrap() <= tol, "{r}");
    }
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(cohfp(&["--version"]).0, EXIT_SUCCESS);
    let (code, stdout, _) = cohfp(&["simulate", "--help"]);
    assert_eq!(code, EXIT_SUCCESS);
    assert!(stdout.contains("--p_dark_d0"));
}
