use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sysmine::export::module_json;
use sysmine::logkit::{agent_behavior, behavior_to_module, parse_log, LogFormat, RolePolicy};
use sysmine::net::Module;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn sysmine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sysmine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn mine_system(out: &Path) -> Output {
    sysmine(&[
        "mine-system",
        "--log",
        path(&fixture("retail.jsonl")),
        "--roles",
        path(&fixture("roles.json")),
        "--structure",
        path(&fixture("s0.json")),
        "--place-roles",
        path(&fixture("place_roles.json")),
        "--format",
        "dot",
        "--out-dir",
        path(out),
    ])
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn mine_system_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = mine_system(a.path());
    let second = mine_system(b.path());
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(second.status.success());
    assert_eq!(stdout(&first), stdout(&second));
    let fa = artifacts(a.path());
    assert_eq!(fa.len(), 10);
    assert_eq!(fa, artifacts(b.path()));
}

#[test]
fn mine_system_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = mine_system(dir.path());
    let out = stdout(&o);
    assert!(out.contains("system net with 7 transitions"), "{out}");
    for symbol in ["elm(VE)", "elm(CL)", "elm(CA)"] {
        assert!(out.contains(symbol));
    }
    assert!(out.trim_end().ends_with("conformant: yes"));
    let net = fs::read_to_string(dir.path().join("system_net.json")).unwrap();
    assert!(net.starts_with("{\n  \"format_version\": 1,"));
}

#[test]
fn mine_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = sysmine(&[
        "mine-run",
        "--log",
        path(&fixture("retail.jsonl")),
        "--roles",
        path(&fixture("roles.json")),
        "--out-dir",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("transitions: 7"));
    assert!(out.contains("interface elements: 0"));
    assert!(out.contains("Alice pays take home || hat not on offer"));
    assert!(out.contains("Alice pays take home || shoes to be ordered"));
    let run: Module =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run.net().transitions().len(), 7);
}

#[test]
fn step_tagged_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = sysmine(&[
        "mine-run",
        "--log",
        path(&empty),
        "--roles",
        path(&fixture("roles.json")),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step 1: empty log"), "{}", stderr(&o));

    let roles = dir.path().join("roles.json");
    let text = fs::read_to_string(fixture("roles.json")).unwrap();
    fs::write(&roles, text.replace("\"Bob\": \"client\",", "")).unwrap();
    let o = sysmine(&[
        "mine-run",
        "--log",
        path(&fixture("retail.jsonl")),
        "--roles",
        path(&roles),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("step 2:") && err.contains("Bob"), "{err}");

    let o = sysmine(&[
        "mine-system",
        "--log",
        path(&fixture("retail.jsonl")),
        "--roles",
        path(&fixture("roles.json")),
        "--structure",
        path(&dir.path().join("missing.json")),
        "--place-roles",
        path(&fixture("place_roles.json")),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step 4: cannot load structure"));
}

fn agent_module(agent: &str) -> Module {
    let log = parse_log(fs::File::open(fixture("retail.jsonl")).unwrap(), LogFormat::Jsonl).unwrap();
    let policy = RolePolicy::from_json(fs::File::open(fixture("roles.json")).unwrap()).unwrap();
    let behavior = agent_behavior(&log, agent).unwrap();
    behavior_to_module(&behavior, agent, &policy).unwrap().into_module()
}

fn check(dir: &Path, a: &Module, b: &Module) -> String {
    let pa = dir.join("a.json");
    let pb = dir.join("b.json");
    fs::write(&pa, module_json(a)).unwrap();
    fs::write(&pb, module_json(b)).unwrap();
    let o = sysmine(&["check", path(&pa), path(&pb)]);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o)
}

#[test]
fn check_retail_modules() {
    let dir = tempfile::tempdir().unwrap();
    let out = check(dir.path(), &agent_module("V2"), &agent_module("Claire"));
    assert!(out.contains("harmonic pairs: 1"));
    assert!(out.contains("commutes: no"));
    assert!(out.contains("dissent: none"));

    let out = check(dir.path(), &agent_module("Alice"), &agent_module("V2"));
    assert!(out.contains("commutes: yes"));
}

#[test]
fn check_dissenting_chains() {
    let a = Module::builder()
        .place("a0", "a0")
        .transition("a1", "x")
        .place("a2", "a2")
        .transition("a3", "y")
        .arc("a0", "a1")
        .arc("a1", "a2")
        .arc("a2", "a3")
        .right("a1")
        .right("a3")
        .build()
        .unwrap();
    let b = Module::builder()
        .transition("b1", "y")
        .place("b2", "b2")
        .transition("b3", "x")
        .arc("b1", "b2")
        .arc("b2", "b3")
        .left("b1")
        .left("b3")
        .build()
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = check(dir.path(), &a, &b);
    assert!(out.contains("dissent: 1"), "{out}");
    assert!(out.contains("composition is not an occurrence module"));
}

#[test]
fn export_and_replay_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mine_system(dir.path()).status.success());
    for (file, marker) in [
        ("run.json", "digraph module"),
        ("system_net.json", "digraph \"system\""),
        ("schema.json", "elm(VE)"),
    ] {
        let o = sysmine(&["export", path(&dir.path().join(file))]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains(marker), "{file}");
    }
    let o = sysmine(&[
        "replay",
        "--net",
        path(&dir.path().join("system_net.json")),
        "--run",
        path(&dir.path().join("run.json")),
        "--atoms",
        path(&dir.path().join("atoms.json")),
        "--structure",
        path(&fixture("s0.json")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("conformant: yes"));
}
