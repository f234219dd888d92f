use std::path::Path;
use std::process::{Command, Output};

fn brsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate_to(path: &Path, extra: &[&str]) -> Vec<(f64, f64)> {
    let mut args = vec![
        "simulate", "--method", "0", "--k", "100", "--b", "1", "--step", "0.05",
    ];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let o = brsim(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].parse().unwrap(), rec[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn simulate_writes_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let rows = simulate_to(&dir.path().join("z.csv"), &["--seed", "1"]);
    assert_eq!(rows.len(), 41);
    assert_eq!(rows[0].0, -1.0);
    assert_eq!(rows[40].0, 1.0);
}

#[test]
fn frechet_values_are_positive() {
    let dir = tempfile::tempdir().unwrap();
    let rows = simulate_to(&dir.path().join("z.csv"), &["--margins", "frechet"]);
    assert!(rows.iter().all(|r| r.1 > 0.0));
}

#[test]
fn seeds_change_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    simulate_to(&a, &["--seed", "1"]);
    simulate_to(&b, &["--seed", "2"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    simulate_to(&c, &["--seed", "1"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn bounds_json_has_all_components() {
    let o = brsim(&[
        "bounds", "--method", "0", "--b", "1", "--k", "10000", "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["conditional", "low_event", "high_event", "total"] {
        assert!(v[key].is_number(), "missing {key}");
    }
    let table = brsim(&["bounds", "--method", "0", "--b", "1"]);
    assert!(stdout(&table).contains("total_clamped"));
}

#[test]
fn bounds_defaults_follow_alpha() {
    let json = |method: &str| -> serde_json::Value {
        let o = brsim(&[
            "bounds",
            "--method",
            method,
            "--alpha",
            "0.5",
            "--k",
            "1000",
            "--json",
            "--no-cache",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        serde_json::from_str(&stdout(&o)).unwrap()
    };
    // reach 15/alpha = 30 beyond b = 2
    assert_eq!(json("3")["params"]["method"]["j_max"], 320);
    let shapes = json("4");
    assert_eq!(shapes["params"]["method"]["half_width"], 32.0);
    let lambda = shapes["params"]["method"]["lambda_p"].as_f64().unwrap();
    assert!(lambda > 0.0 && lambda.is_finite());
}

#[test]
fn asymmetric_shifts_exit_with_two() {
    let o = brsim(&[
        "bounds", "--method", "1", "--b", "1", "--shifts", "-1,0.5", "--c", "-1", "--x", "-3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("AsymmetricShifts"));
}

#[test]
fn short_lattice_is_a_domain_error() {
    let o = brsim(&[
        "bounds", "--method", "3", "--b", "1", "--step", "0.1", "--j-max", "50",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("domain error") && err.contains("p*j_max > b + 4"),
        "{err}"
    );
}

#[test]
fn study_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("study.json");
    std::fs::write(
        &config,
        r#"{"methods": [{"method": 0}], "alphas": [1.0], "reps": 2}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let run = || {
        let o = brsim(&[
            "study",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("study.csv")).unwrap()
    };
    let first = run();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 9);
    assert_eq!(lines[1].split(',').count(), 9);
    assert_eq!(run(), first);
}

#[test]
fn study_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"methods": [{"method": 0}], "reps": 0}"#).unwrap();
    let o = brsim(&[
        "study",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reps"));
    let missing = dir.path().join("missing.json");
    let o = brsim(&[
        "study",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn check_reads_dumped_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = brsim(&[
        "study",
        "--method",
        "0",
        "--alpha",
        "1",
        "--b",
        "1",
        "--reps",
        "30",
        "--dump-samples",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let samples = out.join("samples_m0_a1.csv");
    let o = brsim(&["check", "--samples", samples.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_reps"], 30);
    assert!(v["dev"]["DEV"].is_number());
}

#[test]
fn lambda_prints_an_estimate() {
    let o = brsim(&["lambda", "--step", "1", "--window", "8", "--n", "2000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["lambda_p"].as_f64().unwrap() > 0.0);
}
