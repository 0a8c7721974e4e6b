use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fqpolar"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["construct", "encode", "decode", "exact-ser", "mc-ser", "simulate", "verify"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["verify"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let broken = write(dir.path(), "code.json", "{not json");
    let ch = write(dir.path(), "ch.json", r#"{"kind":"qsc","epsilon":"1/10"}"#);
    let out = run(&["exact-ser", "--code", s(&broken), "--channel", s(&ch)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parsing"));
}

#[test]
fn theorem_holds_on_decreasing_code() {
    let dir = TempDir::new().unwrap();
    let code = write(dir.path(), "code.json", r#"{"m":2,"k":2,"info_set":[1,3]}"#);
    let ch = write(dir.path(), "ch.json", r#"{"kind":"qsc","epsilon":"1/10"}"#);
    let out = run(&["verify", "--code", s(&code), "--channel", s(&ch), "--lemmas", "thm1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["reports"][0]["status"], "pass");
    assert_eq!(v["code"]["info_set"], serde_json::json!([1, 3]));
}

#[test]
fn counterexample_exits_one_with_witness() {
    let dir = TempDir::new().unwrap();
    let code = write(dir.path(), "code.json", r#"{"m":1,"k":1,"info_set":[0]}"#);
    let ch = write(dir.path(), "ch.json", r#"{"kind":"qsc","epsilon":"1/10"}"#);
    let out = run(&["verify", "--code", s(&code), "--channel", s(&ch), "--lemmas", "thm1"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    let r = &v["reports"][0];
    assert_eq!(r["status"], "fail");
    assert_eq!(r["hypothesis_met"], false);
    assert_eq!(r["witness"]["ser"], serde_json::json!(["9/50", "0/1"]));
    assert_eq!(r["witness"]["closure_violation"]["member"], 0);
    assert_eq!(r["witness"]["closure_violation"]["dominator"], 1);
}

#[test]
fn exact_ser_reports_rationals() {
    let dir = TempDir::new().unwrap();
    let code = write(dir.path(), "code.json", r#"{"m":1,"k":1,"info_set":[0]}"#);
    let ch = write(dir.path(), "ch.json", r#"{"kind":"qsc","epsilon":"1/10"}"#);
    let out = run(&["exact-ser", "--code", s(&code), "--channel", s(&ch)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["ser"]["per_index"], serde_json::json!(["9/50", "0/1"]));
    assert_eq!(v["all_equal"], false);
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "exp.json",
        r#"{"code":{"m":3,"k":4,"info_set":[3,5,6,7]},"channel":{"kind":"qsc","epsilon":"1/10"},"trials":3000,"seed":17,"shards":3}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let gp = dir.path().join("a.gp");
    for (out, extra) in [(&a, vec!["--plot", s(&gp)]), (&b, vec![])] {
        let mut args = vec!["simulate", "--config", s(&cfg), "--out", s(out)];
        args.extend(extra);
        let r = run(&args);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("# config: "));
    assert!(text.contains("\"seed\":17"));
    assert!(fs::read_to_string(&gp).unwrap().contains("multiplot"));

    let other = dir.path().join("c.csv");
    let cfg2 = write(dir.path(), "exp2.json", &fs::read_to_string(&cfg).unwrap().replace("\"seed\":17", "\"seed\":18"));
    assert_eq!(run(&["simulate", "--config", s(&cfg2), "--out", s(&other)]).status.code(), Some(0));
    assert_ne!(fs::read(&other).unwrap(), fs::read(&a).unwrap());
}

#[test]
fn construct_then_encode_and_decode() {
    let dir = TempDir::new().unwrap();
    let ch = write(dir.path(), "ch.json", r#"{"kind":"qec","epsilon":"1/2"}"#);
    let code = dir.path().join("code.json");
    let r = run(&["construct", "--m", "2", "--k", "2", "--channel", s(&ch), "--out", s(&code)]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&code).unwrap()).unwrap();
    // erasure parameters 15/16, 9/16, 7/16, 1/16
    assert_eq!(v["info_set"], serde_json::json!([2, 3]));
    assert_eq!(v["construction"]["method"]["method"], "erasure_exact");

    let msg = write(dir.path(), "u.json", "[1, 1]");
    let r = run(&["encode", "--code", s(&code), "--message", s(&msg)]);
    assert_eq!(r.status.code(), Some(0));
    let e = stdout_json(&r);
    assert_eq!(e["u"], serde_json::json!([0, 0, 1, 1]));
    assert_eq!(e["x"], serde_json::json!([0, 1, 0, 1]));

    let y = write(dir.path(), "y.json", "[0, 1, 0, 1]");
    let r = run(&["decode", "--code", s(&code), "--channel", s(&ch), "--y", s(&y), "--tie", "lex"]);
    assert_eq!(r.status.code(), Some(0));
    let d = stdout_json(&r);
    assert_eq!(d["x_hat"], serde_json::json!([0, 1, 0, 1]));
    assert_eq!(d["u_hat"], serde_json::json!([0, 0, 1, 1]));
}

#[test]
fn genie_construct_records_seed() {
    let dir = TempDir::new().unwrap();
    let ch = write(dir.path(), "ch.json", r#"{"kind":"awgn_bpsk","ebno_db":2.0}"#);
    let r = run(&["construct", "--m", "3", "--k", "4", "--channel", s(&ch), "--trials", "2000", "--seed", "5"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let v = stdout_json(&r);
    assert_eq!(v["construction"]["seed"], 5);
    assert_eq!(v["construction"]["method"]["method"], "genie_mc");
    assert_eq!(v["info_set"].as_array().unwrap().len(), 4);
}

#[test]
fn mc_ser_csv_has_header() {
    let dir = TempDir::new().unwrap();
    let code = write(dir.path(), "code.json", r#"{"m":2,"k":2,"info_set":[1,3]}"#);
    let ch = write(dir.path(), "ch.json", r#"{"kind":"qsc","epsilon":"1/10"}"#);
    let args = ["mc-ser", "--code", s(&code), "--channel", s(&ch), "--trials", "500", "--seed", "3", "--format", "csv"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, run(&args).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("# seed: 3"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
}
