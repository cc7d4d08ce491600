//! End-to-end runs of the `cvcsp` binary.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::*;
use cvcsp::{CostFunction, Instance, Language, Term, UnaryClosure};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn cvcsp(args: &[&str]) -> Run {
    let o = Command::new(env!("CARGO_BIN_EXE_cvcsp"))
        .args(args)
        .output()
        .unwrap();
    Run {
        code: o.status.code().unwrap(),
        out: String::from_utf8(o.stdout).unwrap(),
        err: String::from_utf8(o.stderr).unwrap(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn lang_file(dir: &Path, name: &str, fs: Vec<CostFunction>) -> String {
    write(
        dir,
        name,
        &Language::new(2, fs, UnaryClosure::Finite)
            .unwrap()
            .to_json(),
    )
}

#[test]
fn classify_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let lang = lang_file(dir.path(), "sub.json", vec![submodular()]);
    let cert = dir.path().join("c.json");
    let r = cvcsp(&[
        "classify",
        &lang,
        "--emit-certificate",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("tractable"), "{}", r.out);
    assert!(cert.exists());

    let r = cvcsp(&["verify", cert.to_str().unwrap(), &lang]);
    assert_eq!(r.code, 0);
    assert!(r.out.starts_with("certificate valid"), "{}", r.out);

    // the same certificate does not replay on a different language
    let other = lang_file(dir.path(), "cut.json", vec![cut()]);
    let r = cvcsp(&["verify", cert.to_str().unwrap(), &other]);
    assert_eq!(r.code, 1);
    assert!(r.out.starts_with("certificate invalid"), "{}", r.out);
}

#[test]
fn hardness_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    for (name, f) in [("cut.json", cut()), ("parity.json", parity())] {
        let lang = lang_file(dir.path(), name, vec![f]);
        let cert = dir.path().join(format!("{name}.cert"));
        let r = cvcsp(&[
            "classify",
            &lang,
            "--emit-certificate",
            cert.to_str().unwrap(),
        ]);
        assert_eq!(r.code, 2, "{name}: {}", r.out);
        assert_eq!(cvcsp(&["verify", cert.to_str().unwrap(), &lang]).code, 0);
    }
}

#[test]
fn unknown_at_budget() {
    let dir = tempfile::tempdir().unwrap();
    let f = CostFunction::from_fn(3, 2, |t| cvcsp::Cost::int((t[0] * t[1]) as u64 % 3)).unwrap();
    let lang = write(
        dir.path(),
        "l.json",
        &Language::new(3, vec![f], UnaryClosure::Finite)
            .unwrap()
            .to_json(),
    );
    let cert = dir.path().join("c.json");
    let r = cvcsp(&[
        "classify",
        &lang,
        "--budget-rounds",
        "0",
        "--budget-size",
        "1",
        "--strategy",
        "backtracking",
        "--majority-nodes",
        "1",
        "--emit-certificate",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 3, "{}{}", r.out, r.err);
    assert!(r.out.contains("unknown"));
    // an unknown verdict certifies nothing
    assert_eq!(cvcsp(&["verify", cert.to_str().unwrap(), &lang]).code, 1);
}

#[test]
fn solve_prints_assignment_and_cost() {
    let dir = tempfile::tempdir().unwrap();
    let u = CostFunction::from_ints(2, 1, &[Some(3), Some(1)]).unwrap();
    let lang = lang_file(dir.path(), "l.json", vec![u]);
    let inst = Instance::new(
        1,
        vec![Term {
            function: 0,
            scope: vec![0],
        }],
    )
    .unwrap();
    let inst = write(dir.path(), "i.json", &inst.to_json());
    let r = cvcsp(&["solve", &inst, &lang]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("assignment: (1)"), "{}", r.out);
    assert!(r.out.contains("cost: 1"), "{}", r.out);
}

#[test]
fn check_mm_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let ops = write(
        dir.path(),
        "mm.json",
        r#"{"kind":"pair","meet":[0,0,0,1],"join":[0,1,1,1]}"#,
    );
    let sub = lang_file(dir.path(), "sub.json", vec![submodular()]);
    let cut = lang_file(dir.path(), "cut.json", vec![cut()]);
    let r = cvcsp(&["check-mm", &ops, &sub, "--m-set", "0-1"]);
    assert_eq!(r.code, 0, "{}{}", r.out, r.err);
    let r = cvcsp(&["check-mm", &ops, &cut]);
    assert_eq!(r.code, 1, "{}{}", r.out, r.err);
}

#[test]
fn express_graph_reduce_gen() {
    let dir = tempfile::tempdir().unwrap();
    let lang = lang_file(dir.path(), "cut.json", vec![cut()]);
    let r = cvcsp(&["express", &lang, "--budget-rounds", "1"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("members"));

    let r = cvcsp(&["graph", &lang, "--dot"]);
    assert_eq!(r.code, 0);
    assert!(
        r.out.starts_with("graph") || r.out.starts_with("digraph"),
        "{}",
        r.out
    );
    let r = cvcsp(&["graph", &lang]);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert!(v.get("properties").is_some());

    let r = cvcsp(&["reduce", &lang, "--mode", "feas"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let feas = Language::from_json(&r.out).unwrap();
    assert_eq!(
        feas.functions()[0],
        CostFunction::crisp(2, 2, |_| true).unwrap()
    );

    let r = cvcsp(&["gen", "language", "--seed", "3", "--domain", "3"]);
    assert_eq!(r.code, 0);
    let g = write(dir.path(), "g.json", &r.out);
    assert_eq!(Language::from_json(&r.out).unwrap().domain_size(), 3);
    let r = cvcsp(&[
        "gen", "instance", &g, "--seed", "1", "--vars", "3", "--terms", "2",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(Instance::from_json(&r.out).unwrap().terms.len(), 2);
}

#[test]
fn input_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"domain_size": 2, "functions": [{"arity": 2, "table": [0, 1, 2]}]}"#,
    );
    let r = cvcsp(&["classify", &bad]);
    assert_eq!(r.code, 64, "{}", r.err);

    let broken = write(
        dir.path(),
        "broken.json",
        "{\"domain_size\": 2,\n \"functions\": [",
    );
    let r = cvcsp(&["classify", &broken]);
    assert_eq!(r.code, 64);
    assert!(r.err.contains("line 2"), "{}", r.err);

    let big = Language::new(
        5,
        vec![CostFunction::crisp(5, 2, |t| t[0] != t[1]).unwrap()],
        UnaryClosure::Finite,
    );
    let big = write(dir.path(), "big.json", &big.unwrap().to_json());
    assert_eq!(cvcsp(&["classify", &big]).code, 65);

    assert_eq!(cvcsp(&["classify", "/nonexistent/lang.json"]).code, 66);
    assert_eq!(cvcsp(&["no-such-command"]).code, 64);
}
