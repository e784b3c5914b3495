use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use toric_ding::catalog::builtin_catalog;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_toric-ding"));
    c.env_remove("TORIC_DING_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn alpha_json_is_exact() {
    let o = run(&["alpha", "P2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["alpha"], "0/1");
    assert_eq!(v["l"]["constant"], "2/9");
    let o = run(&["alpha", "F1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["alpha"], "5/11");
    assert_eq!(v["lambda"], "3/22");
    assert_eq!(v["l"]["constant"], "3/11");
    assert_eq!(v["l"]["linear"], serde_json::json!(["0/1", "-3/22"]));
}

#[test]
fn info_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    for entry in builtin_catalog() {
        let first = run(&["info", entry.key, "--format", "json"]);
        assert_eq!(first.status.code(), Some(0), "{}", entry.key);
        let path = dir.path().join(format!("{}.json", entry.key));
        fs::write(&path, &first.stdout).unwrap();
        let second = run(&["info", path.to_str().unwrap(), "--format", "json"]);
        assert_eq!(second.status.code(), Some(0));
        assert_eq!(stdout(&first), stdout(&second), "{}", entry.key);
    }
}

fn catalog_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in builtin_catalog() {
        let o = run(&["info", entry.key, "--format", "json"]);
        fs::write(dir.path().join(format!("{}.json", entry.key)), &o.stdout).unwrap();
    }
    dir
}

#[test]
fn scan_matches_per_entry_alpha() {
    let dir = catalog_dir();
    let mut files: Vec<PathBuf> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    for format in ["json", "csv", "text"] {
        let scan = run(&["scan", dir.path().to_str().unwrap(), "--format", format]);
        assert_eq!(scan.status.code(), Some(0));
        let mut expected = Vec::new();
        for (i, f) in files.iter().enumerate() {
            let o = run(&["alpha", f.to_str().unwrap(), "--format", format]);
            let text = stdout(&o);
            // Per-file CSV carries its own header; the scan prints it once.
            if format == "csv" && i > 0 {
                expected.push(text.split_once('\n').unwrap().1.to_string());
            } else {
                expected.push(text);
            }
        }
        assert_eq!(stdout(&scan), expected.concat(), "{format}");
    }
}

#[test]
fn scan_reports_invalid_files_and_keeps_going() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("diamond.json"), dir.path().join("a.json")).unwrap();
    fs::copy(fixture("unnamed.json"), dir.path().join("b.json")).unwrap();
    let o = run(&["scan", dir.path().to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().nth(1).unwrap().starts_with("b,"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["alpha", "F1"]).status.code(), Some(0));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["alpha", "no-such-entry"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "P1", "--refine", "0"]).status.code(), Some(1));
    assert_eq!(run(&["info", &fixture("diamond.json")]).status.code(), Some(2));
    assert_eq!(run(&["info", &fixture("malformed.json")]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let unstable = run(&["solve", &fixture("unstable.json"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(unstable.status.code(), Some(3));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "refusal writes nothing");
    let o = run(&["solve", "P2", "--max-iter", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn file_name_defaults_to_stem() {
    let o = run(&["alpha", &fixture("unnamed.json"), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["name"], "unnamed");
    assert_eq!(v["alpha"], "5/11");
}

#[test]
fn solve_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["solve", "P1", "--refine", "1", "--plot", "svg", "--format", "json"])
        .env("TORIC_DING_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("P1-solve");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report, serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap());
    assert_eq!(report["converged"], true);
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("iteration,d_value,grad_norm,residual_l1\n"));
    assert!(csv.lines().count() >= 2);
    let metric = fs::read_to_string(out.join("metric.csv")).unwrap();
    // 41 nodes on [−10, 10] with spacing 1/2, plus the header.
    assert_eq!(metric.lines().count(), 42);
    assert!(fs::read_to_string(out.join("convergence.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn stability_plot_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["stability", "F1", "--plot", "svg", "--format", "json"])
        .env("TORIC_DING_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let svg = fs::read_to_string(dir.path().join("F1-polytope.svg")).unwrap();
    assert!(svg.contains("l = 3/22") && svg.contains("l = 9/22"));
}

#[test]
fn catalog_lists_every_entry() {
    let o = run(&["catalog", "list", "--format", "csv"]);
    let out = stdout(&o);
    for entry in builtin_catalog() {
        assert!(out.lines().any(|l| l.starts_with(&format!("{},", entry.key))), "{}", entry.key);
    }
}
