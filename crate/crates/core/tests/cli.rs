//! End-to-end runs of the `bmg` binary: exit codes, report and CSV round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bmg::report::{Report, REPORT_SCHEMA};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn bmg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BMG_THREADS")
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Report {
    Report::parse(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn b1_on_two_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("two_atoms.json");
    let o = bmg(&["integrate", "--input", input.to_str().unwrap(), "--mode", "b1", "--f", "one"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert_eq!(r.schema, REPORT_SCHEMA);
    assert!(r.pass);
    let value: Vec<f64> = serde_json::from_value(r.details.unwrap()["value"].clone()).unwrap();
    assert_eq!(value, vec![0.25, 1.5]);
}

#[test]
fn negative_mass_is_an_input_error_naming_the_atom() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("negative_mass.json");
    let o = bmg(&["integrate", "--input", input.to_str().unwrap(), "--mode", "b1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`b`"), "{err}");
}

#[test]
fn unknown_key_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("two_atoms.json")).unwrap().replace("\"scalar\"", "\"scalr\"");
    let input = dir.path().join("typo.json");
    std::fs::write(&input, text).unwrap();
    let o = bmg(&["integrate", "--input", input.to_str().unwrap(), "--mode", "b1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
}

#[test]
fn unreachable_eps_is_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("grid_cubic.json");
    let o = bmg(&["integrate", "--input", input.to_str().unwrap(), "--mode", "b1", "--eps", "1e-8"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let r = report(dir.path());
    assert!(!r.pass);
    assert!(r.error.unwrap().contains("did not converge"));
}

#[test]
fn bad_thread_count_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bmg"))
        .args(["check", "substitution", "--random", "2", "--out"])
        .arg(dir.path())
        .env("BMG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn substitution_corpus_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bmg(&["check", "substitution", "--random", "20", "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r.records.len(), 20);
    assert!(r.max_gap().unwrap() <= 1e-10);
}

#[test]
fn tower_check_on_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("four_atoms_condexp.json");
    let o = bmg(&["check", "condexp", "--input", input.to_str().unwrap(), "--tower"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(report(dir.path()).pass);
}

#[test]
fn constant_process_is_a_martingale() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("constant_process.json");
    let o = bmg(&["check", "martingale", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(dir.path()).max_gap(), Some(0.0));
}

#[test]
fn girsanov_report_and_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = bmg(&["girsanov", "--fixture", "exact", "--seed", "11"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert!(r.pass);
    assert_eq!(r.records.len(), 10);

    let csv = std::fs::read_to_string(dir.path().join("marginals.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..2], ["time", "point"]);
    assert_eq!(header.last(), Some(&"gap"));
    let dim = (header.len() - 3) / 2;
    let mut rows = 0;
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields.len(), header.len());
        let gap = (0..dim).map(|i| (fields[2 + i] - fields[2 + dim + i]).abs()).fold(0.0, f64::max);
        assert!((gap - fields[header.len() - 1]).abs() <= 1e-15 + 1e-12 * gap);
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn fair_coin_walk_passes() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("coin_walk.json");
    let o = bmg(&["girsanov", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

/// After an up-move the walk drifts down on average and vice versa, so `w` is no martingale.
const MEAN_REVERTING: &str = r#"{
  "schema": "bmg/1",
  "space": {"kind": "finite", "atoms": [{"id": "uu"}, {"id": "ud"}, {"id": "du"}, {"id": "dd"}]},
  "measure": {"dim": 1, "values": {"uu": [0.125], "ud": [0.375], "du": [0.375], "dd": [0.125]}},
  "process": {"times": [0, 1, 2], "pitch": 1,
              "paths": {"uu": [0, 1, 2], "ud": [0, 1, 0], "du": [0, -1, 0], "dd": [0, -1, -2]}}
}"#;

#[test]
fn failed_hypothesis_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("mean_reverting.json");
    std::fs::write(&input, MEAN_REVERTING).unwrap();
    let o = bmg(&["girsanov", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(4));
    let r = report(dir.path());
    assert!(!r.pass);
    assert!(r.records.iter().any(|rec| rec.name.starts_with("A2") && !rec.pass));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["check", "changevar", "--random", "10", "--seed", "3"];
    bmg(&args, a.path());
    bmg(&args, b.path());
    let read = |d: &Path| std::fs::read(d.join("report.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}
