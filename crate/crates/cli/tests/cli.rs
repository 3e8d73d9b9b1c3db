use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn memtrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memtrap"))
        .args(args)
        .env_remove("MEMTRAP_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = memtrap(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn help_exits_zero() {
    let out = memtrap(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    for sub in ["mode", "film", "trap", "thermal", "failcurve", "fitloss", "sweep", "report"] {
        assert!(stdout(&out).contains(sub), "missing {sub}");
    }
}

#[test]
fn film_defaults_reproduce_the_transmission_table() {
    let out = memtrap(&["film"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("d_nm,T_s,T_p,T_circ"));
    let t = column(&text, "T_circ");
    for (got, want) in t.iter().zip([0.962, 0.880, 0.803]) {
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }
}

#[test]
fn bad_flag_value_is_a_usage_error() {
    let out = memtrap(&["film", "--theta-deg", "abc"]);
    assert_eq!(out.status.code(), Some(1));
    let out = memtrap(&["film", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_of_range_input_fails_with_message() {
    let out = memtrap(&["film", "--theta-deg", "95"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"bogus": 1}"#);
    let out = memtrap(&["film", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"n_core": 1.5}"#);
    let from_cfg = column(&stdout(&memtrap(&["film", "--config", &cfg, "--d-nm", "25"])), "T_circ")[0];
    let from_flag = column(
        &stdout(&memtrap(&["film", "--config", &cfg, "--d-nm", "25", "--n", "2.0"])),
        "T_circ",
    )[0];
    let direct = column(&stdout(&memtrap(&["film", "--d-nm", "25", "--n", "2.0"])), "T_circ")[0];
    assert_eq!(from_flag, direct);
    assert!(from_cfg > from_flag);
}

#[test]
fn csv_output_goes_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("film.csv");
    let out = memtrap(&["film", "--csv", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

fn synthetic_trace(dir: &Path) -> String {
    let mut body = String::from("position_cm,intensity\n");
    for i in 0..50 {
        let x = 2.0 * i as f64 / 49.0;
        body.push_str(&format!("{x},{}\n", 10f64.powf(-x / 10.0)));
    }
    write(dir, "trace.csv", &body)
}

#[test]
fn fitloss_recovers_one_db_per_cm() {
    let dir = tempfile::tempdir().unwrap();
    let trace = synthetic_trace(dir.path());
    let out = memtrap(&["fitloss", &trace]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("alpha_db_per_cm: 1.000"), "{}", stdout(&out));

    let out = memtrap(&["fitloss", &trace, "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["alpha_db_per_cm"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["samples"].as_u64(), Some(50));
}

#[test]
fn missing_trace_file_fails() {
    let out = memtrap(&["fitloss", "/nonexistent/trace.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unconverged_thermal_solve_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"thermal": {"max_iter": 1}}"#);
    let out = memtrap(&["thermal", "--config", &cfg, "--span-um", "250", "--cell-um", "10"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("not converged"));
}

#[test]
fn invalid_worker_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_memtrap"))
        .args(["film"])
        .env("MEMTRAP_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("rep");
    let out = memtrap(&[
        "report",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--no-calibrate",
        "--cell-um",
        "10",
        "--h-nm",
        "20",
        "--spans-um",
        "250,500",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in [
        "film.csv",
        "trap_potential.csv",
        "failcurve_straight.csv",
        "failcurve_hybrid_needle.csv",
        "failcurve_infinity.csv",
        "summary.txt",
    ] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    let hash = summary.lines().next().unwrap();
    assert!(hash.starts_with("config_sha256: ") && hash.len() == 15 + 64, "{hash}");
    assert!(summary.contains("trap_depth_uk"));
    // The embedded configuration parses back.
    let json = summary.split_once("config:\n").unwrap().1;
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["cell_um"].as_f64(), Some(10.0));

    let curve = fs::read_to_string(out_dir.join("failcurve_infinity.csv")).unwrap();
    let p = column(&curve, "p_fail_mw");
    assert_eq!(p.len(), 2);
    assert!(p[1] < p[0]);
}
