use std::fs;
use std::path::PathBuf;
use std::process::Command;

use lbll_cli::{run, Outcome, EXIT_CAP, EXIT_FAIL, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn file(name: &str, body: &str) -> String {
    let dir = std::env::temp_dir().join(format!("lbll-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p: PathBuf = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn lbll(args: &[&str]) -> Outcome {
    run(std::iter::once("lbll").chain(args.iter().copied()))
}

fn json(out: &Outcome) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {out:?}"))
}

#[test]
fn check_reports_type_and_references() {
    let coin = file("coin.lbll", "flipcoin[1]()\n");
    let out = lbll(&["check", &coin]);
    assert_eq!((out.code, out.stdout.as_str()), (EXIT_OK, "Bool under {}\n"));
    let toggle = file("toggle.lbll", "ref r : Bool;\nlet x = get r in if x then r := ff else r := tt\n");
    assert_eq!(lbll(&["check", &toggle]).stdout, "Unit under {r: Bool}\n");
    let v = json(&lbll(&["check", &toggle, "--json"]));
    assert_eq!(v["refs"]["r"], "Bool");
}

#[test]
fn check_failures() {
    let unbound = file("unbound.lbll", "return y\n");
    let out = lbll(&["check", &unbound]);
    assert_eq!(out.code, EXIT_FAIL);
    assert!(out.stderr.contains("unbound variable `y`"), "{}", out.stderr);
    let linear = file("linear.lbll", "let f = return \\x : Bool. return x in let a = f tt in f ff\n");
    let out = lbll(&["check", &linear]);
    assert_eq!(out.code, EXIT_FAIL);
    assert!(out.stderr.contains("cannot merge `(Bool -> Bool)` with `(Bool -> Bool)`"), "{}", out.stderr);
    let syntax = file("syntax.lbll", "let x = in return x\n");
    let out = lbll(&["check", &syntax]);
    assert_eq!(out.code, EXIT_FAIL);
    assert!(out.stderr.contains(":1:9: syntax error"), "{}", out.stderr);
}

#[test]
fn eval_examples() {
    let coin = file("flip.lbll", "flipcoin[1]()\n");
    let v = json(&lbll(&["eval", &coin, "--n", "1", "--json"]));
    assert_eq!(v["distribution"], serde_json::json!({"tt": "1/2", "ff": "1/2"}));
    assert_eq!(v["support"][0], serde_json::json!({"value": "tt", "store": {}, "prob": "1/2"}));
    let ret = file("ret.lbll", "return tt\n");
    assert_eq!(json(&lbll(&["eval", &ret, "--json"]))["distribution"], serde_json::json!({"tt": "1"}));
    let rand_f = file("randf.lbll", "let y = zeros[i]() in let x = random[i]() in equal[i](x, y)\n");
    let v = json(&lbll(&["eval", &rand_f, "--n", "3", "--json"]));
    assert_eq!(v["distribution"], serde_json::json!({"tt": "1/8", "ff": "7/8"}));
}

#[test]
fn eval_with_initial_store() {
    let prog = file("store.lbll", "ref s : Str[i];\nlet x = get s in let y = ones[i]() in xor[i](x, y)\n");
    let store = file("store.json", r#"{"s": "0110"}"#);
    let v = json(&lbll(&["eval", &prog, "--n", "4", "--store", &store, "--json"]));
    assert_eq!(v["distribution"], serde_json::json!({"\"1001\"": "1"}));
    assert_eq!(v["support"][0]["store"]["s"], "\"0110\"");
    assert_eq!(lbll(&["eval", &prog, "--n", "3", "--store", &store]).code, EXIT_USAGE);
}

#[test]
fn bound_rows() {
    let prog = file("loop.lbll", "loop[i](\\x : Bool. return x, return tt)\n");
    let out = lbll(&["bound", &prog, "--range", "1..3", "--json"]);
    assert_eq!(out.code, EXIT_OK);
    let rows = json(&out);
    assert_eq!(rows.as_array().unwrap().len(), 3);
    for (n, row) in (1..=3).zip(rows.as_array().unwrap()) {
        assert_eq!(row["n"], n);
        assert_eq!(row["ok"], true);
        assert!(row["steps"].as_u64().unwrap() <= row["bound"].as_str().unwrap().parse::<u64>().unwrap());
    }
    let out = lbll(&["bound", &prog, "--n", "2", "--abstract"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.starts_with("n=2 steps="), "{}", out.stdout);
}

#[test]
fn dist_output_is_deterministic() {
    let l = file("l.lbll", "return ff\n");
    let r = file("r.lbll", "let y = random[i]() in let x = random[i]() in equal[i](x, y)\n");
    let args = ["dist", l.as_str(), r.as_str(), "--range", "1..4", "--bound", "1/2^n", "--json"];
    let first = lbll(&args);
    assert_eq!(first.code, EXIT_OK);
    for jobs in ["1", "3"] {
        let mut with_jobs = args.to_vec();
        with_jobs.extend(["--jobs", jobs]);
        assert_eq!(lbll(&with_jobs).stdout, first.stdout);
    }
    assert_eq!(json(&first)["rows"][3], serde_json::json!({"n": 4, "distance": "1/16", "mode": "exact"}));
    let csv = lbll(&["dist", &l, &r, "--n", "1..2", "--csv"]);
    assert_eq!(csv.stdout, "n,distance\n1,1/2\n2,1/4\n");
}

#[test]
fn dist_rejects_mismatched_types() {
    let b = file("b.lbll", "return tt\n");
    let s = file("s.lbll", "random[i]()\n");
    let out = lbll(&["dist", &b, &s]);
    assert_eq!(out.code, EXIT_FAIL);
    assert!(out.stderr.contains("has type `Bool`"), "{}", out.stderr);
}

#[test]
fn usage_errors() {
    let b = file("u.lbll", "return tt\n");
    assert_eq!(lbll(&["dist", &b, &b, "--range", "0..3"]).code, EXIT_USAGE);
    assert_eq!(lbll(&["dist", &b, &b, "--range", "1..33"]).code, EXIT_USAGE);
    assert_eq!(lbll(&["dist", &b, &b, "--bound", "1/3^n"]).code, EXIT_USAGE);
    assert_eq!(lbll(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(lbll(&["check", "/nonexistent/file.lbll"]).code, EXIT_USAGE);
    assert_eq!(lbll(&["demo", "privk", "--adv", "nobody"]).code, EXIT_USAGE);
    assert_eq!(lbll(&["--help"]).code, EXIT_OK);
}

#[test]
fn store_cap_exit_code() {
    let prog = file("cap.lbll", "ref s : Str[i];\nlet x = get s in return tt\n");
    let out = lbll(&["dist", &prog, &prog, "--range", "1..3", "--cap", "4"]);
    assert_eq!(out.code, EXIT_CAP);
    assert!(out.stdout.contains("n=3 error: store space of size 8 exceeds the cap 4"), "{}", out.stdout);
    let bin = env!("CARGO_BIN_EXE_lbll");
    let status = Command::new(bin).args(["dist", &prog, &prog, "--n", "3"]).env("LBLL_CAP", "4").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_CAP));
    let status = Command::new(bin).args(["dist", &prog, &prog, "--n", "3"]).env("LBLL_CAP", "8").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
}

#[test]
fn demos() {
    let v = json(&lbll(&["demo", "randf", "--json"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    assert_eq!(v["verdict"]["pass"], true);
    let out = lbll(&["demo", "randxor", "--range", "1..3"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.ends_with("bound 0: pass\n"), "{}", out.stdout);
    let out = lbll(&["demo", "privk", "--adv", "onequery", "--n", "1", "--json"]);
    assert_eq!(out.code, EXIT_OK);
    let v = json(&out);
    assert_eq!(v["rows"][0]["privk_f_vs_flipcoin"], "1/4");
    assert_eq!(v["pass"], true);
}
