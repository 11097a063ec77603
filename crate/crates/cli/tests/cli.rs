use std::process::{Command, Output};

use superfluor_core::{Observable, TimeSeries};

fn superfluor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superfluor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_writes_csv_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("piqs.csv");
    let out = superfluor(&[
        "run", "--solver", "piqs", "--n", "6", "--gamma-l", "0.1", "--gamma-d", "10", "--t-max", "1", "--samples", "11",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let series = TimeSeries::load_csv(&path).unwrap();
    assert_eq!(series.t.len(), 11);
    assert_eq!(series.require(Observable::Jz).unwrap()[0], 3.0);
    assert_eq!(series.meta.config["rates"]["gamma_d"], 10.0);
    assert!(dir.path().join("piqs.csv.meta.json").exists());
}

#[test]
fn solvers_share_the_schema() {
    for solver in ["oracle", "piqs", "cumulant1", "cumulant2"] {
        let out = superfluor(&["run", "--solver", solver, "--n", "4", "--samples", "5", "--scaled"]);
        assert!(out.status.success(), "{solver}");
        let text = stdout(&out);
        assert!(text.starts_with("t,Jz,J2,JpJm,Jz2\n"), "{solver}: {text}");
        assert_eq!(text.lines().count(), 6);
    }
    let out = superfluor(&["run", "--solver", "bosonic", "--n", "100", "--m0", "-49", "--samples", "3"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("t,nb,nd\n"));
}

#[test]
fn json_output_parses() {
    let out = superfluor(&["run", "--n", "3", "--samples", "4", "--format", "json"]);
    assert!(out.status.success());
    let series: TimeSeries = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(series.meta.n, 3);
}

#[test]
fn invalid_configurations_exit_with_2() {
    for args in [
        vec!["run", "--solver", "oracle", "--n", "14"],
        vec!["run", "--n", "4", "--j0", "7/2"],
        vec!["run", "--n", "4", "--rtol", "0.1"],
        vec!["run", "--solver", "bosonic", "--n", "50"],
        vec!["run", "--solver", "cumulant0", "--n", "4"],
        vec!["run", "--n", "4", "--gamma-s", "0", "--gamma-d", "1"],
        vec!["field", "--n", "10", "--resolution", "1"],
        vec!["sweep", "--n", "100", "--gamma-d", "1", "--jobs", "2", "--samples", "1"],
    ] {
        let out = superfluor(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn sweep_rows_are_deterministic() {
    let args = ["sweep", "--n", "50,100", "--gamma-d", "0.3,3", "--relative", "--gamma-l", "10", "--samples", "101"];
    let serial = superfluor(&[&args[..], &["--jobs", "1"]].concat());
    let parallel = superfluor(&[&args[..], &["--jobs", "4"]].concat());
    assert!(serial.status.success());
    assert_eq!(stdout(&serial), stdout(&parallel));
    assert_eq!(stdout(&serial).lines().count(), 5);
}

#[test]
fn geometry_outputs() {
    let out = superfluor(&["field", "--n", "20", "--resolution", "5"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 26);
    let out = superfluor(&["boundary", "--n", "20", "--samples", "5", "--ratios", "0,0.1,inf"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 16);
    let out = superfluor(&["trajectory", "--solver", "cumulant2", "--n", "200", "--gamma-l", "10", "--gamma-d", "50", "--samples", "9"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("t,j,m\n"));
}

#[test]
fn table1_and_validation_exit_codes() {
    let out = superfluor(&["table1", "--format", "json"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 10);

    let out = superfluor(&["validate", "--criteria", "1,11"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().filter(|l| l.contains("PASS")).count(), 2);

    // the leading forms at N = 400 miss the 2/N band in two cells
    let out = superfluor(&["validate", "--criteria", "4"]);
    assert_eq!(out.status.code(), Some(4));
}
