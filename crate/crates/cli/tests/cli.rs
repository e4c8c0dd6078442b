use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn designs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../designs");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "design"))
        .collect();
    v.sort();
    v
}

fn design(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../designs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvfilter")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn bundled_designs_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let all = designs();
    assert!(all.len() >= 2);
    for d in all {
        let out = dir.path().join("s.csv");
        let o = run(&["sweep", "--design", s(&d), "--out", s(&out)]);
        assert!(o.status.success(), "{}: {}", d.display(), stderr(&o));
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("f_Hz,S11_k-"));
        assert_eq!(lines.count(), 401);
    }
}

#[test]
fn metrics_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = run(&["metrics", "--design", s(&design("order3.design")), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    let d0: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("D0_dB="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((d0 - 14.83).abs() < 0.05, "{d0}");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn mode_and_harmonics_override() {
    let o = run(&["metrics", "--design", s(&design("order3.design")), "--mode", "rigorous", "--nhar", "9", "--points", "101"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["metrics", "--design", s(&design("order3.design")), "--mode", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[config]:"));
}

#[test]
fn converge_table() {
    let o = run(&["converge", "--design", s(&design("order3.design")), "--series", "3,5,7", "--points", "81"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("from_nhar,to_nhar,max_delta_dB"));
    assert_eq!(text.lines().count(), 3);
    let o = run(&["converge", "--design", s(&design("order3.design")), "--series", "5,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_appends_to_run_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("runs.csv");
    for name in ["order3.design", "order4.design"] {
        let o = run(&["optimize", "--design", s(&design(name)), "--out", s(&log), "--points", "81"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("feasible="));
    }
    let text = std::fs::read_to_string(&log).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("design,mode,nhar,objective"));
    assert!(lines[2].contains("directivity_bandwidth@13"));
}

#[test]
fn oracle_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let o = run(&["oracle", "--design", s(&design("order3.design")), "--out", s(&out), "--freqs", "975MHz"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    let col = header.iter().position(|h| *h == "S21_delta_dB").unwrap();
    let delta: f64 = row[col].parse().unwrap();
    assert!(delta.abs() < 0.2, "{delta}");
}

#[test]
fn echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for d in designs() {
        let first = dir.path().join("a.design");
        let second = dir.path().join("b.design");
        assert!(run(&["echo", "--design", s(&d), "--out", s(&first)]).status.success());
        assert!(run(&["echo", "--design", s(&first), "--out", s(&second)]).status.success());
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
        let a = run(&["metrics", "--design", s(&d)]);
        let b = run(&["metrics", "--design", s(&first)]);
        assert_eq!(stdout(&a), stdout(&b));
    }
}

#[test]
fn malformed_file_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.design");
    let text = std::fs::read_to_string(design("order3.design")).unwrap();
    std::fs::write(&bad, text.replacen("[bandpass]", "[bandpass]\nbogus = 1", 1)).unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&["sweep", "--design", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[config]:") && err.contains("line"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);

    let o = run(&["sweep", "--design", s(&dir.path().join("missing.design")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    // 101 harmonics push the lowest sideband below zero frequency.
    let o = run(&["sweep", "--design", s(&design("order3.design")), "--mode", "rigorous", "--nhar", "101", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[numeric]:"));
    assert!(!out.exists());
}
