use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tmsv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmsv-phase"))
        .args(args)
        .current_dir(dir)
        .env_remove("TMSV_PHASE_THREADS")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn ensemble_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmsv(
        dir.path(),
        &[
            "ensemble", "--theta", "0.1", "--nbar", "3", "--M", "1000", "--N", "10000", "--seed",
            "42",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = rows(&dir.path().join("ensemble.csv"));
    assert_eq!(
        table[0],
        ["theta", "nbar", "M", "N", "mean_phi", "std_phi", "bias", "c_crb", "c_sn", "c_hl"]
    );
    let mean: f64 = table[1][4].parse().unwrap();
    assert!((0.097..=0.103).contains(&mean), "{mean}");
    assert!(dir.path().join("ensemble.csv.json").exists());
}

#[test]
fn parity_curve_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmsv(
        dir.path(),
        &[
            "parity-curve",
            "--nbar",
            "3",
            "--theta-min",
            "0",
            "--theta-max",
            "1.5708",
            "--steps",
            "100",
            "-o",
            "curve.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = rows(&dir.path().join("curve.csv"));
    assert_eq!(table.len(), 102);
    assert_eq!(table[1][2], "1");
    for row in &table[1..] {
        let theta: f64 = row[0].parse().unwrap();
        let parity: f64 = row[2].parse().unwrap();
        let expected = 1.0 / (1.0 + 15.0 * theta.sin().powi(2)).sqrt();
        assert!((parity - expected).abs() < 1e-11);
    }
}

#[test]
fn oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmsv(
        dir.path(),
        &["oracle-check", "--nbar", "7", "--epsilon", "1e-8"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = rows(&dir.path().join("oracle-check.csv"));
    assert_eq!(table.len(), 32);
    let worst = table[1..]
        .iter()
        .map(|r| r[4].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6);
}

#[test]
fn sidecar_rerun_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &[
            "trace", "--theta", "0.1", "--nbar", "3", "--M", "500", "--seed", "9",
        ],
        &[
            "posterior",
            "--nbar",
            "3",
            "--M",
            "200",
            "--even-count",
            "150",
            "--grid",
            "1024",
        ],
        &[
            "scaling-fit",
            "--theta",
            "0.3",
            "--nbar",
            "3",
            "--N",
            "300",
            "--lengths",
            "100,1000,10000",
        ],
        &[
            "intensity-scan",
            "--theta",
            "0.2",
            "--nbars",
            "1,3",
            "--N",
            "200",
            "--lengths",
            "100,1000,10000",
        ],
        &[
            "stddev-scan",
            "--nbar",
            "2",
            "--theta-min",
            "0.5",
            "--theta-max",
            "0.6",
            "--theta-step",
            "0.05",
            "--N",
            "200",
            "--lengths",
            "100,400",
        ],
    ];
    for (i, args) in runs.iter().enumerate() {
        let first = format!("first-{i}.csv");
        let mut args = args.to_vec();
        args.extend(["-o", &first]);
        let out = tmsv(dir.path(), &args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));

        let sidecar = dir.path().join(format!("{first}.json"));
        let second = format!("second-{i}.csv");
        let out = tmsv(
            dir.path(),
            &["--config", sidecar.to_str().unwrap(), "-o", &second],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert_eq!(
            fs::read(dir.path().join(&first)).unwrap(),
            fs::read(dir.path().join(&second)).unwrap(),
            "{args:?}"
        );
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "bias-scan",
        "--nbar",
        "3",
        "--theta-max",
        "0.3",
        "--N",
        "500",
        "--lengths",
        "100,1000",
    ];
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let name = format!("t{threads}.csv");
        let mut args = base.to_vec();
        args.extend(["--threads", threads, "-o", &name]);
        let out = tmsv(dir.path(), &args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push(fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("typo.json");
    fs::write(&config, r#"{"thetaa": 0.1}"#).unwrap();
    let out = tmsv(
        dir.path(),
        &["ensemble", "--config", config.to_str().unwrap()],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("thetaa"));

    fs::write(&config, "{\n\"theta\": 0.1,\n}").unwrap();
    let out = tmsv(
        dir.path(),
        &["ensemble", "--config", config.to_str().unwrap()],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let out = tmsv(dir.path(), &["ensemble", "--nbar", "3", "--M", "100"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--theta"));

    let out = tmsv(
        dir.path(),
        &[
            "trace",
            "--theta",
            "0.1",
            "--nbar",
            "3",
            "--M",
            "10",
            "-o",
            "missing/dir/out.csv",
        ],
    );
    assert_eq!(code(&out), 2);

    let out = tmsv(
        dir.path(),
        &[
            "trace",
            "--theta",
            "0.1",
            "--nbar",
            "3",
            "--M",
            "10",
            "--threads",
            "zero",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tmsv-phase"))
        .args(["trace", "--theta", "0.1", "--nbar", "3", "--M", "10"])
        .current_dir(dir.path())
        .env("TMSV_PHASE_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trace.csv.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["threads"], 3);
    assert_eq!(sidecar["seed"], 42);
    assert_eq!(sidecar["command"], "trace");
}
