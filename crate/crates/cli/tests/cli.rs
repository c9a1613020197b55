use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ctrldet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctrldet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SMALL: &str = "\
dims 1 1
8 0 1
4 0 1
0 : 0 1
1 : 1 2
2 : 1
5 : 2 3
6 : 3
7 : 0 3
";

#[test]
fn determinize_then_verify_each_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.ctl"), SMALL).unwrap();
    for algo in ["la", "ga", "lga", "blga"] {
        let out = format!("c.{algo}.mtb");
        ok(&ctrldet(dir.path(), &["determinize", "c.ctl", "--algo", algo, "-o", &out]));
        let v = ok(&ctrldet(dir.path(), &["verify", "c.ctl", &out]));
        assert!(v.starts_with("ok: 6 states"), "{v}");
        let s = ok(&ctrldet(dir.path(), &["stats", &out]));
        let bytes = fs::metadata(dir.path().join(&out)).unwrap().len();
        assert!(s.contains(&format!("bytes: {bytes}")), "{s}");
    }
}

#[test]
fn sr_writes_expression_and_valid_diagram() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.ctl"), SMALL).unwrap();
    fs::write(dir.path().join("sr.cfg"), "N = 3\nM = 8\nN_ES = 2\n").unwrap();
    ok(&ctrldet(
        dir.path(),
        &["determinize", "c.ctl", "--algo", "sr", "--seed", "4", "--sr-config", "sr.cfg", "-o", "c.sr.mtb"],
    ));
    let expr = fs::read_to_string(dir.path().join("c.sr.expr")).unwrap();
    assert!(ctrldet::symreg::parse_expressions(expr.trim()).is_ok(), "{expr}");
    ok(&ctrldet(dir.path(), &["verify", "c.ctl", "c.sr.mtb"]));
}

#[test]
fn verify_fails_on_a_wrong_diagram() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.ctl"), SMALL).unwrap();
    fs::write(dir.path().join("d.ctl"), SMALL.replace("6 : 3", "6 : 0")).unwrap();
    ok(&ctrldet(dir.path(), &["determinize", "d.ctl", "--algo", "la", "-o", "d.mtb"]));
    let out = ctrldet(dir.path(), &["verify", "c.ctl", "d.mtb"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("state 6: input 0 not admissible"));
}

#[test]
fn gen_stats_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ctrldet(
        dir.path(),
        &["gen", "--family", "clustered", "--states", "8,8", "--inputs", "6", "--seed", "2", "-o", "a.ctl"],
    ));
    ok(&ctrldet(
        dir.path(),
        &["gen", "--family", "planted", "--states", "32", "--inputs", "64", "--law", "2", "--offset", "-1", "-o", "b.ctl"],
    ));
    let s = ok(&ctrldet(dir.path(), &["stats", "a.ctl"]));
    assert!(s.contains("state grid: 8 x 8"), "{s}");

    ok(&ctrldet(dir.path(), &["bench", "a.ctl", "b.ctl", "--out-dir", "out", "--csv", "r.csv"]));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("controller,algo,seed,nodes_before,nodes_after,bytes_before,bytes_after,C,seconds")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    for r in rows {
        let after = fs::metadata(dir.path().join("out").join(format!("{}.{}.mtb", r[0], r[1]))).unwrap().len();
        assert_eq!(r[6].parse::<u64>().unwrap(), after);
    }
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.ctl"), "dims 1 1\n4 0 1\n").unwrap();
    let out = ctrldet(dir.path(), &["stats", "bad.ctl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.ctl"));
    let out = ctrldet(dir.path(), &["determinize", "bad.ctl", "--algo", "xyz", "-o", "o.mtb"]);
    assert!(!out.status.success());
}
