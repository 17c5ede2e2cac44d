use std::path::Path;
use std::process::Command;

fn mallows() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mallows"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn verify_zero_cost_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(mallows().args(["verify", "--beta", "0", "--grid", "64", "--n-min", "2", "--n-max", "8", "--out"]).arg(dir.path()));
    for name in ["report.json", "partition.csv", "spectrum.json", "bridge.json", "convergence.svg"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let csv = read(dir.path(), "partition.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,method,D_n,L_n,scaled,mc_stderr,seed"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[1], "ryser");
        let scaled: f64 = fields[4].parse().unwrap();
        assert!((scaled - 1.0).abs() < 1e-12);
    }
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "report.json")).unwrap();
    assert_eq!(report["c_spectral"], serde_json::json!(1.0));
    assert!(report["hard_failures"].as_array().unwrap().is_empty());
}

#[test]
fn stages_can_run_from_cached_bridge() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let text = run_ok(mallows().args(["bridge", "--grid", "128", "--out"]).arg(out));
    assert!(text.contains("Gamma_0"));
    let bridge = out.join("bridge.json");

    let text = run_ok(mallows().args(["spectrum", "--bridge"]).arg(&bridge).arg("--out").arg(out));
    assert!(text.contains("lambda_0"));
    let spectrum: serde_json::Value = serde_json::from_str(&read(out, "spectrum.json")).unwrap();
    assert_eq!(spectrum["m"], 128);
    assert!(spectrum["conjectured_C"].as_f64().unwrap() > 1.0);

    run_ok(
        mallows()
            .args(["partition", "--method", "brute", "--n-min", "2", "--n-max", "6", "--bridge"])
            .arg(&bridge)
            .arg("--out")
            .arg(out),
    );
    assert_eq!(read(out, "partition.csv").lines().count(), 6);

    run_ok(
        mallows()
            .args(["series", "--K", "7", "--L", "3", "--n-min", "3", "--n-max", "5", "--bridge"])
            .arg(&bridge)
            .arg("--out")
            .arg(out),
    );
    let series: serde_json::Value = serde_json::from_str(&read(out, "series.json")).unwrap();
    assert_eq!(series["limit"]["K"], 6);
    assert_eq!(series["limit"]["L"], 3);
    assert_eq!(series["finite_n"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        "# monte-carlo run\ncost = quadratic\nbeta = 1\ngrid = 64\nmethod = mc\nsamples = 2000\nseed = 9\nn_min = 3\nn_max = 3\n",
    )
    .unwrap();
    run_ok(
        mallows()
            .arg("partition")
            .arg("--config")
            .arg(&config)
            .args(["--n-max", "5", "--out"])
            .arg(dir.path()),
    );
    let csv = read(dir.path(), "partition.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.contains(",monte-carlo,") && r.ends_with(",9")));
}

#[test]
fn invalid_input_fails_with_message() {
    let out = mallows().args(["bridge", "--grid", "4"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));

    let out = mallows().args(["partition", "--method", "brute", "--n-max", "12"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));

    let out = mallows().args(["bridge", "--cost", "hinge"]).output().unwrap();
    assert!(!out.status.success());
}
