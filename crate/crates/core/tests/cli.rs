use std::path::Path;
use std::process::{Command, Output};

use ginv::bench::{InverseReport, Method};
use ginv::matcore::{mp_pseudoinverse, read_matrix, svd, write_matrix, ToleranceConfig};

fn ginv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ginv"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn gen(dir: &Path, size: &str) {
    let out = ginv(dir, &["gen", "--size", size, "--seed", "2", "-o", "A.mtx"]);
    assert_eq!(code(&out), 0, "{out:?}");
}

#[test]
fn solve_ls_writes_row_sparse_inverse() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "20x10x4");
    let out = ginv(d, &["solve", "--method", "ls", "-i", "A.mtx", "-o", "H.mtx", "--report", "r.json"]);
    assert_eq!(code(&out), 0, "{out:?}");
    let rep = InverseReport::from_json_line(std::fs::read_to_string(d.join("r.json")).unwrap().trim()).unwrap();
    assert_eq!(rep.method, Method::Ls);
    assert_eq!(rep.nzr, Some(4));
    assert_eq!(read_matrix(d.join("H.mtx")).unwrap().shape(), (10, 20));
    assert!(stdout(&out).contains("LS"));
}

#[test]
fn check_pseudoinverse() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "12x8x3");
    let a = read_matrix(d.join("A.mtx")).unwrap();
    let h = mp_pseudoinverse(&svd(&a, &ToleranceConfig::default()).unwrap());
    write_matrix(d.join("H.mtx"), &h).unwrap();
    let out = ginv(d, &["check", "-i", "A.mtx", "-H", "H.mtx"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.ends_with("yes")), "{text}");

    let out = ginv(d, &["check", "-i", "A.mtx", "-H", "A.mtx"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_table_and_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ginv(
        d,
        &["bench", "--sizes", "12x8x3,20x10x5", "--methods", "p21,p123,ls", "--seed", "1", "--report", "b.jsonl"],
    );
    assert_eq!(code(&out), 0, "{out:?}");
    let table = stdout(&out);
    let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(
        header,
        ["instance", "method", "NZR", "||H||_0", "||H||_1", "||H||_2,1", "time_s", "total_s", "status"]
    );
    assert_eq!(table.lines().count(), 7);

    let out = ginv(d, &["ratio", "-i", "b.jsonl"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 3);
}

#[test]
fn export_trace_and_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "10x6x3");
    let out = ginv(d, &["export-lp", "-i", "A.mtx", "-o", "p.mps", "--dump-blocks", "blocks"]);
    assert_eq!(code(&out), 0);
    assert!(std::fs::read_to_string(d.join("p.mps")).unwrap().starts_with("NAME"));
    for name in ["G", "V2", "U1"] {
        assert!(d.join("blocks").join(format!("{name}.csv")).exists());
    }
    let out = ginv(d, &["solve", "--method", "p123", "-i", "A.mtx", "-o", "H.mtx", "--trace", "t.csv"]);
    assert_eq!(code(&out), 0);
    let trace = std::fs::read_to_string(d.join("t.csv")).unwrap();
    assert!(trace.starts_with("stage,iteration,objective,residual,bound,merit"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "10x6x3");
    let solve = |extra: &[&str]| {
        let mut args = vec!["solve", "-i", "A.mtx", "-o", "H.mtx"];
        args.extend(extra);
        code(&ginv(d, &args))
    };
    assert_eq!(solve(&["--method", "bogus"]), 2);
    assert_eq!(solve(&["--method", "p21", "--zero-tol", "-1"]), 2);
    assert_eq!(solve(&["--method", "ls", "--poly-kappa", "0.5"]), 2);
    assert_eq!(solve(&["--method", "p21", "--rank", "7"]), 2);
    assert_eq!(code(&ginv(d, &["solve", "--method", "p21", "-i", "missing.mtx", "-o", "H.mtx"])), 4);
    assert_eq!(solve(&["--method", "p21", "--max-iters", "1"]), 3);
    assert_eq!(solve(&["--method", "ls", "--poly-kappa", "1.01"]), 0);
    assert_eq!(code(&ginv(d, &["gen", "--size", "4x4x5", "-o", "x.mtx"])), 2);
    assert_eq!(code(&ginv(d, &["--help"])), 0);
}
