use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stratq")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Compare with a stored golden file; `STRATQ_BLESS=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("STRATQ_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, want, "output differs from {}", path.display());
}

fn f(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn validate_fixtures() {
    for name in ["junk_pair.json", "uniform_clock_n4.json"] {
        let o = run(&["validate", "--strategy", &f(name), "--input-strategy", &f("iid_uniform.json")]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["junk_pair.json", "three_state.json", "uniform_clock_n4.json", "coin.json"] {
        let o = run(&["validate", "--strategy", &f(name)]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).ends_with("valid\n"));
    }
}

#[test]
fn cost_golden() {
    let o = run(&["cost", "--strategy", &f("junk_pair.json")]);
    assert!(o.status.success());
    let text = stdout(&o);
    // Orthogonal memory states: every cost is H(2/3, 1/3).
    let h = -(2.0f64 / 3.0) * (2.0f64 / 3.0).log2() - (1.0f64 / 3.0) * (1.0f64 / 3.0).log2();
    assert!(text.contains(&format!("C_mu: {:.12}", h)));
    assert!(text.contains(&format!("C_qinf: {:.12}", h)));
    check_golden("cost_junk_pair.txt", &text);

    let o = run(&["cost", "--strategy", &f("three_state.json")]);
    assert!(o.status.success());
    check_golden("cost_three_state.txt", &stdout(&o));
}

#[test]
fn encode_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle.json");
    let o = run(&["encode", "--strategy", &f("junk_pair.json"), "--variant", "qinf", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["overlaps"][0][1].as_f64(), Some(0.0));
    assert_eq!(v["layout"]["total_dim"].as_u64(), Some(16));
    assert_eq!(v["unitary"].as_array().unwrap().len(), 256);
    check_golden("encode_junk_pair.json", &text);
}

#[test]
fn bounds_golden() {
    let o = run(&["bounds", "--strategy", &f("three_state.json"), "--method", "exact"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let r = 3f64.sqrt() / 4.0;
    let pairs = v["pairs"].as_array().unwrap();
    let bounds: Vec<f64> = pairs.iter().map(|p| p["bound"].as_f64().unwrap()).collect();
    assert!((bounds[0] - r).abs() < 1e-12 && bounds[1] == 0.0 && (bounds[2] - r).abs() < 1e-12);
    check_golden("bounds_three_state.json", &text);

    for (method, depth) in [("iter", "30"), ("hybrid", "2")] {
        let o = run(&["bounds", "--strategy", &f("three_state.json"), "--method", method, "--depth", depth]);
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["depth"].as_u64(), Some(depth.parse().unwrap()));
    }
}

#[test]
fn junk_check_prints_witness() {
    let o = run(&["junk-check", "--strategy", &f("junk_pair.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("junk required"));
    check_golden("junk_check_junk_pair.txt", &text);
    let o = run(&["junk-check", "--strategy", &f("coin.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("inconclusive"));
}

#[test]
fn minimize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("min.json");
    let o = run(&["minimize", "--strategy", &f("three_state.json"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let a = stratq::formats::load_strategy(&fixture("three_state.json")).unwrap();
    let b = stratq::formats::load_strategy(&out).unwrap();
    assert_eq!(a, b);
}

#[test]
fn simulate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let args = ["simulate", "--strategy", &f("junk_pair.json"), "--steps", "200", "--seed", "9", "--out", traj.to_str().unwrap()];
    assert!(run(&args).status.success());
    let first = std::fs::read_to_string(&traj).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, std::fs::read_to_string(&traj).unwrap());
    assert_eq!(first.lines().count(), 201);
    assert_eq!(first.lines().next(), Some("step,x,y,collapse_fidelity"));

    let report = dir.path().join("faith.json");
    let o = run(&[
        "simulate", "--strategy", &f("junk_pair.json"), "--faithfulness", "2", "--samples", "5000", "--seed", "1", "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["passed"].as_bool(), Some(true));
    assert_eq!(v["strings"].as_array().unwrap().len(), 4);
}

#[test]
fn clock_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&["clock-sweep", "--tau", "1", "--reset-rate", "0.5", "--n", "4..12", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,delta_t,N,C_mu,C_q1,C_qinf,delta_c,delta_p");
    assert_eq!(lines.len(), 10);
    assert!(lines[9].starts_with("12,0.000244140625,4096,"));
    let dat = std::fs::read_to_string(out.with_extension("dat")).unwrap();
    assert_eq!(dat.lines().count(), 10);
    assert!(stdout(&o).contains("\"k_p\""));
}

#[test]
fn sweep_threads_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("s{threads}.csv"));
        let o = Command::new(env!("CARGO_BIN_EXE_stratq"))
            .env("STRATQ_THREADS", threads)
            .args(["clock-sweep", "--n", "0..7", "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success());
        outputs.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    check_golden("sweep_0_7.csv", &outputs[0]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"stimuli":["0"],"actions":["0"],"states":["A"],"transitions":[]}"#).unwrap();
    assert_eq!(run(&["validate", "--strategy", empty.to_str().unwrap()]).status.code(), Some(2));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"stimuli\": [\"0\",\n}").unwrap();
    let o = run(&["validate", "--strategy", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json:3:"));

    assert_eq!(run(&["validate", "--strategy", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(run(&["encode", "--strategy", &f("junk_pair.json"), "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["encode", "--strategy", &f("junk_pair.json"), "--variant", "q2"]).status.code(), Some(2));
    assert_eq!(run(&["clock-sweep", "--n", "5..3"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--strategy", &f("junk_pair.json"), "--input-strategy", &f("three_state.json")]).status.code(), Some(2));
    // Enumeration cap is a numerical failure.
    assert_eq!(run(&["bounds", "--strategy", &f("permutations.json"), "--method", "exact"]).status.code(), Some(3));
}
