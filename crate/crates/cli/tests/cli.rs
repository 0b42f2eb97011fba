use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn entroflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entroflow"))
        .current_dir(dir)
        .env_remove("ENTROFLOW_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

/// `key=value` lines from standard output.
fn stdout_value(out: &Output, key: &str) -> Option<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
}

#[test]
fn lsi_bank_passes_with_two_hundred_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = entroflow(
        dir.path(),
        &[
            "check",
            "--inequality",
            "lsi",
            "--bank",
            "default",
            "--seed",
            "7",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read(dir.path().join("o/lsi_report.csv"));
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("case_id,lhs,rhs,margin,pass"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("o/manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "check");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["params"]["count"], 200);
}

#[test]
fn fokker_planck_simulation_reports_rate_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = entroflow(
        dir.path(),
        &["simulate", "--flow", "fokker_planck", "--diagnose", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rates = read(dir.path().join("o/rates.csv"));
    let mut lines = rates.lines();
    assert_eq!(lines.next(), Some("quantity,fitted_rate,target_rate,pass"));
    let mut seen = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let rate: f64 = fields[1].parse().unwrap();
        assert!((rate - 2.0).abs() <= 0.1, "{line}");
        seen += 1;
    }
    assert_eq!(seen, 2);
    assert!(read(dir.path().join("o/report.csv")).starts_with("t,value,production,bound\n"));
    assert!(read(dir.path().join("o/snapshots.csv")).starts_with("t,x,value\n"));
}

#[test]
fn negative_time_step_is_a_config_error_naming_dt() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"command": "simulate", "dt": -1}"#).unwrap();
    for args in [
        vec!["simulate", "--config", "c.json", "--out", "o"],
        vec!["simulate", "--dt", "-1", "--out", "o"],
    ] {
        let out = entroflow(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("`dt`"), "{out:?}");
    }
}

#[test]
fn malformed_and_unknown_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"dt": "fast"}"#, "`dt`"),
        (r#"{"dtt": 0.1}"#, "`dtt`"),
        (r#"{"command": "jko"}"#, "`command`"),
        (r#"{"flow": "porous"}"#, "`flow`"),
    ];
    for (text, field) in cases {
        fs::write(dir.path().join("c.json"), text).unwrap();
        let out = entroflow(dir.path(), &["simulate", "--config", "c.json", "--out", "o"]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{text}: {out:?}");
    }
    let out = entroflow(dir.path(), &["check", "--inequality", "poincare"]);
    assert_eq!(out.status.code(), Some(2));
    let out = entroflow(
        dir.path(),
        &[
            "simulate",
            "--flow",
            "heat",
            "--t-end",
            "0.1",
            "--dt",
            "0.01",
            "--diagnose",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`snapshot_every`"));
    let out = entroflow(dir.path(), &["integrate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"command": "check", "inequality": "eep_fp", "count": 5, "out": "from_file"}"#,
    )
    .unwrap();
    let out = entroflow(dir.path(), &["check", "--config", "c.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(dir.path().join("from_file/eep_fp_report.csv")).lines().count(), 6);

    let out = entroflow(
        dir.path(),
        &["check", "--config", "c.json", "--count", "7", "--out", "flag"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(dir.path().join("flag/eep_fp_report.csv")).lines().count(), 8);
}

#[test]
fn environment_selects_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_entroflow"))
        .current_dir(dir.path())
        .env("ENTROFLOW_OUT", "from_env")
        .args(["check", "--count", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from_env/manifest.json").exists());
    assert!(dir.path().join("from_env/lsi_report.csv").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        vec![
            "check",
            "--inequality",
            "zugmeyer",
            "--count",
            "12",
            "--threads",
            "1",
            "--out",
            "a",
        ],
        vec![
            "check",
            "--inequality",
            "zugmeyer",
            "--count",
            "12",
            "--threads",
            "4",
            "--out",
            "b",
        ],
    ];
    for args in &runs {
        assert_eq!(entroflow(dir.path(), args).status.code(), Some(0));
    }
    for name in ["zugmeyer_report.csv", "summary.csv", "manifest.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let args = [
        "simulate",
        "--flow",
        "fast_diffusion",
        "--nodes",
        "100",
        "--t-end",
        "0.2",
        "--seed",
        "3",
    ];
    for out in ["c", "d"] {
        let mut a = args.to_vec();
        a.extend(["--out", out]);
        assert_eq!(entroflow(dir.path(), &a).status.code(), Some(0));
    }
    for name in ["snapshots.csv", "checks.csv", "manifest.json"] {
        assert_eq!(
            fs::read(dir.path().join("c").join(name)).unwrap(),
            fs::read(dir.path().join("d").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn coarse_time_step_violates_the_rate_and_exits_one() {
    // implicit Euler at dt = 0.2 decays like (1 + dt)^-2k, a fitted rate of
    // 2 ln(1.2) / 0.2 = 1.82 < 1.9
    let dir = tempfile::tempdir().unwrap();
    let out = entroflow(
        dir.path(),
        &[
            "simulate",
            "--flow",
            "fokker_planck",
            "--diagnose",
            "--dt",
            "0.2",
            "--snapshot-every",
            "1",
            "--nodes",
            "401",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violated=value_rate"));
    let checks = read(dir.path().join("o/checks.csv"));
    assert!(checks
        .lines()
        .any(|l| l.starts_with("value_rate,") && l.ends_with(",false")));
}

#[test]
fn every_command_writes_headers_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, Vec<&str>); 4] = [
        ("diag", vec!["diagnose", "--potential", "anisotropic_quadratic"]),
        ("jko", vec!["jko", "--steps", "5", "--levels", "256", "--nodes", "401"]),
        (
            "heat",
            vec![
                "simulate",
                "--flow",
                "heat",
                "--t-end",
                "0.1",
                "--dt",
                "0.01",
                "--snapshot-every",
                "2",
                "--diagnose",
            ],
        ),
        (
            "w2",
            vec![
                "w2",
                "--mu-mean",
                "-1",
                "--nu-mean",
                "2",
                "--geodesic-steps",
                "4",
                "--nodes",
                "801",
            ],
        ),
    ];
    for (name, args) in runs {
        let mut a = args.clone();
        a.extend(["--out", name]);
        let out = entroflow(dir.path(), &a);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let d = dir.path().join(name);
        assert!(d.join("manifest.json").exists(), "{name}");
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|e| e == "csv") {
                let first = read(&p).lines().next().unwrap_or_default().to_string();
                assert!(
                    first.split(',').all(|f| f.parse::<f64>().is_err()),
                    "{}: header {first}",
                    p.display()
                );
            }
        }
    }
    let header = read(dir.path().join("jko/jko_log.csv"));
    assert!(header.starts_with("k,F,W2_step,inner_iters\n"));
    assert!(read(dir.path().join("diag/trajectory.csv")).starts_with("t,x_1,x_2,E,gradnorm2\n"));
    assert!(read(dir.path().join("w2/geodesic.csv")).starts_with("s,x,value\n"));
}

#[test]
fn w2_prints_key_value_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = entroflow(
        dir.path(),
        &["w2", "--mu-mean", "0", "--nu-mean", "1.5", "--nu-sd", "2", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(0));
    let w: f64 = stdout_value(&out, "w2").unwrap().parse().unwrap();
    assert!((w - (1.5f64 * 1.5 + 1.0).sqrt()).abs() < 1e-3, "{w}");

    // densities from files
    let grid: Vec<f64> = (0..801).map(|i| -8.0 + 16.0 * i as f64 / 800.0).collect();
    for (name, m) in [("mu.csv", 0.0), ("nu.csv", 0.5)] {
        let mut text = String::from("x,value\n");
        for x in &grid {
            text.push_str(&format!("{x:.16e},{:.16e}\n", (-(x - m) * (x - m) / 2.0f64).exp()));
        }
        fs::write(dir.path().join(name), text).unwrap();
    }
    let out = entroflow(dir.path(), &["w2", "--mu", "mu.csv", "--nu", "nu.csv", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let w: f64 = stdout_value(&out, "w2").unwrap().parse().unwrap();
    assert!((w - 0.5).abs() < 1e-4, "{w}");
    let out = entroflow(dir.path(), &["w2", "--mu", "mu.csv", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
}
