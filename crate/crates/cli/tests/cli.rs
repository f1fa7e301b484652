use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

const ETA_ENV: &str = "io : {cap} Top
f : all (op: {io} all (u: Top) -> Top) -> Top
w : all (k: {io} all (op: Box {io} all (u: Top) -> Top) -> Top) -> Top
";

const BG_ENV: &str = "file : {cap} Top
console : {cap} Top
op : {file, console} all (z: Top) -> Top
l : {console} Top
";

struct Files(TempDir);

impl Files {
    fn new() -> Self {
        Files(tempfile::tempdir().unwrap())
    }

    fn put(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.0.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }
}

fn capbox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capbox"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn check_prints_the_type() {
    let d = Files::new();
    let env = d.put("g.env", ETA_ENV);
    let t = d.put("t", "let y = box f in w y");
    let o = capbox(&["check", t.to_str().unwrap(), "--env", env.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "box f has the wrong type for w");
    let t = d.put("t2", "fun (u: Top) u");
    let o = capbox(&["check", t.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "all (u: Top) -> {u} Top");
}

#[test]
fn infer_both_agrees_on_eta_expansion() {
    let d = Files::new();
    let env = d.put("g.env", ETA_ENV);
    let t = d.put("t", "w f");
    let o = capbox(&[
        "infer",
        t.to_str().unwrap(),
        "--env",
        env.to_str().unwrap(),
        "--system",
        "both",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("term: let f' = (fun (op: Box {io} all (u: Top) -> Top) let op' = ({io} unbox op) in f op') in w f'"), "{out}");
    assert!(out.contains("type: Top"));
    assert!(out.contains("captures: {f, io, w}"));

    let o = capbox(&[
        "infer",
        t.to_str().unwrap(),
        "--env",
        env.to_str().unwrap(),
        "--system",
        "type",
    ]);
    assert_eq!(stdout(&o), "type: Top\ncaptures: {f, io, w}\n");
}

#[test]
fn sub_follows_declared_captures() {
    let d = Files::new();
    let env = d.put("bg.env", BG_ENV);
    let env = env.to_str().unwrap();
    let o = capbox(&["sub", "{l} Top", "{file, console} Top", "--env", env]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "true");
    for extra in [&[][..], &["--capsets"][..]] {
        let mut args = vec!["sub", "{file} Top", "{console} Top", "--env", env];
        args.extend_from_slice(extra);
        let o = capbox(&args);
        assert_eq!(code(&o), 1);
        assert_eq!(stdout(&o).trim(), "false");
    }
}

#[test]
fn adapt_in_both_systems() {
    let d = Files::new();
    let env = d.put("g.env", ETA_ENV);
    let to = "{io} all (op: Box {io} all (u: Top) -> Top) -> Top";
    let o = capbox(&[
        "adapt",
        "--env",
        env.to_str().unwrap(),
        "--var",
        "f",
        "--to",
        to,
        "--system",
        "type",
    ]);
    assert_eq!(stdout(&o), "kind: Val\ncaptures: {f, io}\n");
    let o = capbox(&[
        "adapt",
        "--env",
        env.to_str().unwrap(),
        "--var",
        "f",
        "--to",
        "Box {cap} Top",
    ]);
    assert_eq!(code(&o), 1);
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("ba-"),
        "diagnostics name the rule"
    );
}

#[test]
fn normalize_and_erase() {
    let d = Files::new();
    let env = d.put("g.env", ETA_ENV);
    let t = d.put("t", "let a = (let b = f in b) in a");
    let o = capbox(&["normalize", t.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "f");
    let t = d.put("t2", "let y = {io} unbox f in y");
    let o = capbox(&[
        "erase",
        t.to_str().unwrap(),
        "--env",
        env.to_str().unwrap(),
        "--check-fsub",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "let y = f in y\nall (op: all (u: Top) -> Top) -> Top\n"
    );
}

#[test]
fn exit_codes() {
    let d = Files::new();
    let bad = d.put("bad", "fun (x: Top");
    assert_eq!(code(&capbox(&["check", bad.to_str().unwrap()])), 2);
    let unbound = d.put("u", "f x");
    assert_eq!(code(&capbox(&["check", unbound.to_str().unwrap()])), 2);
    assert_eq!(code(&capbox(&["check", "/nonexistent/file"])), 2);
    let ill = d.put("ill.env", "f : {nope} Top\n");
    let t = d.put("t", "f");
    assert_eq!(
        code(&capbox(&[
            "check",
            t.to_str().unwrap(),
            "--env",
            ill.to_str().unwrap()
        ])),
        2
    );
    let env = d.put("g.env", ETA_ENV);
    let app = d.put("app", "w f");
    assert_eq!(
        code(&capbox(&[
            "--fuel",
            "2",
            "infer",
            app.to_str().unwrap(),
            "--env",
            env.to_str().unwrap()
        ])),
        3
    );
}

#[test]
fn fuzz_reports_json_lines() {
    let o = capbox(&[
        "fuzz",
        "--seed",
        "3",
        "--count",
        "4",
        "--check",
        "sub-reflexivity,adp-completeness",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<serde_json::Value> = out
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines[0].get("config").is_some());
    assert_eq!(lines.last().unwrap()["summary"]["cases_run"], 8);
    let again = capbox(&[
        "fuzz",
        "--seed",
        "3",
        "--count",
        "4",
        "--check",
        "sub-reflexivity,adp-completeness",
    ]);
    assert_eq!(stdout(&again), out);

    let o = capbox(&[
        "fuzz",
        "--count",
        "30",
        "--check",
        "adp-adpt-equivalence",
        "--mutation",
        "broken-cv",
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&capbox(&["fuzz", "--check", "no-such-property"])), 2);
}
