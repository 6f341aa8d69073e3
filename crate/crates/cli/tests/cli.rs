use std::process::{Command, Output};

use serde_json::Value;

fn qes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qes"))
        .args(args)
        .env_remove("QES_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_of(args: &[&str]) -> (i32, Value, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    full.extend(["--json", p]);
    let o = qes(&full);
    let text = std::fs::read_to_string(&path).unwrap_or_default();
    let v = serde_json::from_str(&text).unwrap_or(Value::Null);
    (code(&o), v, text)
}

fn eigenvalues(v: &Value) -> Vec<f64> {
    let mut out: Vec<f64> = v["sectors"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["eigenvalues"].as_array().unwrap().iter().map(|e| e.as_f64().unwrap()))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

#[test]
fn lame_example_passes() {
    let (c, v, _) = json_of(&["lame", "--n", "1", "--k", "0.5", "--grid", "512"]);
    assert_eq!(c, 0);
    assert_eq!(v["system"], "lame");
    assert_eq!(eigenvalues(&v).len(), 5);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert_eq!(v["reference"]["grid"], 512);
}

#[test]
fn lame_circular_limit() {
    let (c, v, _) = json_of(&["lame", "--n", "1", "--k", "0", "--grid", "256"]);
    assert_eq!(c, 0);
    for (a, b) in eigenvalues(&v).iter().zip([0.0, 1.0, 1.0, 4.0, 4.0]) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn bad_arguments_exit_1() {
    let o = qes(&["lame", "--n", "0", "--k", "0.5"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--help"));
    assert_eq!(code(&qes(&["lame", "--n", "1", "--k", "1.5"])), 1);
    assert_eq!(code(&qes(&["lame", "--n", "1"])), 1);
    assert_eq!(code(&qes(&["nonsense"])), 1);
    assert_eq!(code(&qes(&["manybody", "--bodies", "4", "--m", "1"])), 1);
}

#[test]
fn help_exits_0() {
    let o = qes(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verify"));
}

#[test]
fn manybody_decoupled_and_counts() {
    let (c, v, _) = json_of(&["manybody", "--bodies", "2", "--a", "0", "--b", "0", "--m", "1"]);
    assert_eq!(c, 0);
    assert_eq!(v["sectors"][0]["dim"], 3);
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["name"].as_str().unwrap().starts_with("decoupling oracle")));

    let (c, v, _) = json_of(&["manybody", "--bodies", "2", "--a", "2", "--b", "0", "--m", "1"]);
    assert_eq!(c, 0);
    assert_eq!(v["sectors"].as_array().unwrap().len(), 4);
    assert_eq!(eigenvalues(&v).len(), 6);
}

#[test]
fn manybody_off_locus_reports_zero() {
    let o = qes(&["manybody", "--bodies", "2", "--a", "2", "--b", "0", "--c", "43"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("0 algebraic eigenvectors"));
}

#[test]
fn coupled_exit_codes() {
    let (c, v, _) = json_of(&["coupled", "--m", "1", "--k", "0.6", "--b", "1.0", "--grid", "512"]);
    assert_eq!(c, 0);
    assert_eq!(eigenvalues(&v).len(), 5);
    // the invariant locus is complex here
    assert_eq!(code(&qes(&["coupled", "--m", "1", "--k", "0.6", "--b", "0.3"])), 1);
    // the literal constants are not invariant
    assert_eq!(
        code(&qes(&["coupled", "--m", "1", "--k", "0.6", "--b", "0.3", "--constants", "printed"])),
        2
    );
}

#[test]
fn trig_examples() {
    let (c, v, _) = json_of(&["trig", "--N", "1", "--b", "0", "--pmax", "2", "--grid", "512"]);
    assert_eq!(c, 0);
    let blocks: Vec<Vec<f64>> = v["sectors"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["gauge"].as_str().unwrap().starts_with('E'))
        .map(|s| s["eigenvalues"].as_array().unwrap().iter().map(|e| e.as_f64().unwrap()).collect())
        .collect();
    assert_eq!(blocks, vec![vec![1.0], vec![0.0, 4.0], vec![1.0, 9.0]]);

    let (c, v, _) = json_of(&["trig", "--N", "3", "--b", "0.2", "--pmax", "4", "--grid", "512"]);
    assert_eq!(c, 0);
    let iso = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "E/G isospectrality").unwrap();
    assert_eq!(iso["pass"], true);
}

#[test]
fn json_is_byte_identical_across_runs_and_threads() {
    let args = ["lame", "--n", "2", "--k", "0.3", "--grid", "256"];
    let (_, _, a) = json_of(&args);
    let (_, _, b) = json_of(&args);
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.json");
    let o = Command::new(env!("CARGO_BIN_EXE_qes"))
        .args(args)
        .args(["--json", path.to_str().unwrap()])
        .env("QES_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(path).unwrap(), a);
}

#[test]
fn csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = qes(&["lame", "--n", "1", "--k", "0.5", "--grid", "256", "--csv", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "system,sector,index,eigenvalue,matched_reference,abs_error");
    assert_eq!(lines.len(), 6);
    assert!(lines[1..].iter().all(|l| l.split(',').filter(|f| !f.is_empty()).count() == 6));
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# lame run\nn = 2\nk = 0.5\ngrid = 256\nseed = 9\n").unwrap();
    let (c, v, _) = json_of(&["lame", "--config", cfg.to_str().unwrap(), "--n", "1"]);
    assert_eq!(c, 0);
    assert_eq!(v["params"]["n"], 1);
    assert_eq!(v["params"]["k"], 0.5);
    assert_eq!(v["params"]["seed"], 9);
    assert_eq!(v["reference"]["grid"], 256);

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(code(&qes(&["lame", "--n", "1", "--k", "0.5", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn invalid_thread_cap_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_qes"))
        .args(["lame", "--n", "1", "--k", "0.5", "--grid", "128"])
        .env("QES_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_suites() {
    let o = qes(&["verify", "elliptic"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("criterion 1: PASS"));
    let o = qes(&["verify", "manybody"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("criterion 5: PASS") && stdout(&o).contains("criterion 6: PASS"));
    let o = qes(&["verify", "coupled", "--grid", "512"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("criterion 7: FAIL") && stdout(&o).contains("criterion 8: PASS"));
    assert_eq!(code(&qes(&["verify", "everything"])), 1);
}
