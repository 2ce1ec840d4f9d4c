use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use utxo_lab::codec::TraceFile;
use utxo_lab::ledger::Slot;
use utxo_lab::props::fixture::{chain_run, eight_tx_run};
use utxo_lab::props::{AnnotatedRun, RunStep};
use utxo_lab::trace::{InitialConditions, SlotRange};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_utxo-lab"));
    c.env_remove("UTXO_LAB_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_report(args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = run(&a);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

fn verdict<'a>(report: &'a Value, check: &str) -> &'a Value {
    report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["check"] == check)
        .unwrap_or_else(|| panic!("no {check} verdict in {report}"))
}

fn write_run(
    dir: &Path,
    name: &str,
    genesis: utxo_lab::ledger::Tx,
    run: &AnnotatedRun,
    end: u64,
) -> PathBuf {
    let f = TraceFile {
        init: InitialConditions::new(vec![genesis], SlotRange::new(Slot(0), Slot(end)).unwrap()),
        trace: run.to_trace(),
    };
    let p = dir.join(name);
    fs::write(&p, f.to_json()).unwrap();
    p
}

fn gen(dir: &Path, seed: &str, count: &str) -> Output {
    run(&[
        "trace",
        "gen",
        "--seed",
        seed,
        "--depth",
        "6",
        "--count",
        count,
        "--out",
        dir.to_str().unwrap(),
    ])
}

fn trace_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_str()
                .unwrap()
                .starts_with("trace-")
        })
        .map(|p| p.to_str().unwrap().to_string())
        .collect();
    v.sort();
    v
}

#[test]
fn generation_is_byte_identical() {
    let t = TempDir::new().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert!(gen(&a, "11", "6").status.success());
    assert!(gen(&b, "11", "6").status.success());
    let names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 7);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap());
    }
    let c = t.path().join("c");
    assert!(gen(&c, "12", "6").status.success());
    assert_ne!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(c.join("manifest.json")).unwrap()
    );
}

#[test]
fn sequential_and_parallel_generation_agree() {
    let t = TempDir::new().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert!(gen(&a, "3", "8").status.success());
    let out = run(&[
        "--sequential",
        "trace",
        "gen",
        "--seed",
        "3",
        "--depth",
        "6",
        "--count",
        "8",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
}

#[test]
fn count_zero_writes_manifest_only() {
    let t = TempDir::new().unwrap();
    assert!(gen(t.path(), "1", "0").status.success());
    let names: Vec<_> = fs::read_dir(t.path()).unwrap().collect();
    assert_eq!(names.len(), 1);
    let m: Value =
        serde_json::from_slice(&fs::read(t.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["traces"], Value::Array(vec![]));
}

#[test]
fn output_directory_from_environment() {
    let t = TempDir::new().unwrap();
    let out = bin()
        .args(["trace", "gen", "--count", "2", "--depth", "3"])
        .env("UTXO_LAB_OUT", t.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(t.path().join("manifest.json").exists());
}

#[test]
fn generated_traces_validate_and_reports_are_deterministic() {
    let t = TempDir::new().unwrap();
    assert!(gen(t.path(), "5", "4").status.success());
    let files = trace_files(t.path());
    let mut args = vec!["trace", "validate", "--policy", "nft"];
    args.extend(files.iter().map(String::as_str));
    let (code, r1) = json_report(&args);
    assert_eq!(code, 0);
    assert_eq!(r1["verdicts"].as_array().unwrap().len(), 4);
    let (_, r2) = json_report(&args);
    assert_eq!(r1, r2);
}

#[test]
fn parse_errors_exit_2() {
    let t = TempDir::new().unwrap();
    assert!(gen(t.path(), "2", "1").status.success());
    let full = fs::read_to_string(t.path().join("trace-0000.json")).unwrap();
    let bad = t.path().join("bad.json");
    fs::write(&bad, &full[..full.len() / 2]).unwrap();
    assert_eq!(
        run(&["trace", "validate", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    fs::write(&bad, full.replace("\"version\": 1", "\"version\": 9")).unwrap();
    assert_eq!(
        run(&["trace", "validate", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["trace", "frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["trace", "validate", "/nonexistent/x.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn decreasing_slots_are_reported() {
    let t = TempDir::new().unwrap();
    let (g, r) = chain_run(3);
    let steps: Vec<RunStep> = r
        .steps()
        .iter()
        .zip([4, 6, 5])
        .map(|(s, q)| RunStep {
            slot: Slot(q),
            ..s.clone()
        })
        .collect();
    let bad = AnnotatedRun::new(r.initial().clone(), steps).unwrap();
    let p = write_run(t.path(), "slots.json", g, &bad, 10);
    let (code, rep) = json_report(&["trace", "validate", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    let v = verdict(&rep, "validity");
    assert_eq!(v["witness"]["code"], "slots-decreasing");
    assert_eq!(v["witness"]["step"], 2);
}

#[test]
fn eight_transaction_fixture_canon() {
    let t = TempDir::new().unwrap();
    let (g, r) = eight_tx_run();
    let p = write_run(t.path(), "eight.json", g, &r, 1);
    let (code, rep) = json_report(&["props", "check", "--run", p.to_str().unwrap(), "--canon"]);
    assert_eq!(code, 0, "{rep}");
    let w = &verdict(&rep, "canonical-form")["witness"];
    assert_eq!(w["levels"], serde_json::json!([0, 0, 1, 0, 2, 2, 1, 3]));
    assert_eq!(
        w["presentation"],
        serde_json::json!([0, 1, 3, 2, 6, 4, 5, 7])
    );
    assert_eq!(
        w["groups"],
        serde_json::json!([[0, 1, 3], [2, 6], [4, 5], [7]])
    );

    let (code, rep) = json_report(&[
        "props",
        "canon",
        "--run",
        p.to_str().unwrap(),
        "--enumerate",
        "--cap",
        "100000",
    ]);
    assert_eq!(code, 0, "{rep}");
    let w = &verdict(&rep, "permutations")["witness"];
    assert_eq!(w["truncated"], false);
    let orders = w["orders"].as_array().unwrap();
    assert!(orders.contains(&serde_json::json!([3, 1, 6, 2, 5, 7, 0, 4])));
    assert!(!orders.contains(&serde_json::json!([0, 1, 2, 3, 4, 5, 7, 6])));

    let (_, rep) = json_report(&[
        "props",
        "canon",
        "--run",
        p.to_str().unwrap(),
        "--enumerate",
        "--cap",
        "3",
    ]);
    let w = &verdict(&rep, "permutations")["witness"];
    assert_eq!(w["truncated"], true);
    assert_eq!(w["count"], 3);
}

#[test]
fn clean_generated_run_passes_props_check() {
    let t = TempDir::new().unwrap();
    assert!(gen(t.path(), "9", "1").status.success());
    let p = t.path().join("trace-0000.json");
    let out = run(&["props", "check", "--run", p.to_str().unwrap(), "--canon"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn duplicate_transaction_run_exits_1_with_pair() {
    let t = TempDir::new().unwrap();
    let (g, r) = chain_run(2);
    let mut steps = r.steps().to_vec();
    let last = r.final_state().clone();
    steps.push(RunStep {
        slot: Slot(0),
        from: last.clone(),
        tx: steps[0].tx.clone(),
        to: last,
    });
    let bad = AnnotatedRun::new(r.initial().clone(), steps).unwrap();
    let p = write_run(t.path(), "dup.json", g, &bad, 1);
    let (code, rep) = json_report(&["props", "check", "--run", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(verdict(&rep, "validity")["status"], "violation");
    let w = &verdict(&rep, "replay-protection")["witness"];
    assert_eq!((w["i"].as_u64(), w["j"].as_u64()), (Some(0), Some(2)));
}

#[test]
fn contract_check_on_generated_traces() {
    let t = TempDir::new().unwrap();
    let dir = t.path().join("g");
    assert!(gen(&dir, "21", "12").status.success());
    let files = trace_files(&dir);
    let induce = t.path().join("induced");
    let mut args = vec![
        "contract",
        "check",
        "--name",
        "nft",
        "--nonexpanding",
        "100",
        "--induce",
        induce.to_str().unwrap(),
        "--traces",
    ];
    args.extend(files.iter().map(String::as_str));
    let (code, rep) = json_report(&args);
    assert_eq!(code, 0, "{rep}");
    let ne = &verdict(&rep, "non-expanding")["witness"];
    assert_eq!(ne["pairs"], 100);
    assert_eq!(ne["violations"], Value::Array(vec![]));
    assert_eq!(fs::read_dir(&induce).unwrap().count(), 12);

    let mut args = vec!["contract", "check", "--name", "nope", "--traces"];
    args.extend(files.iter().map(String::as_str));
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn contract_list_names_the_registry() {
    let out = run(&["contract", "list"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("[nft]") && s.contains("[nft-broken-kappa]"));
}

#[test]
fn graph_dump_contains_the_trace() {
    let t = TempDir::new().unwrap();
    assert!(gen(t.path(), "4", "1").status.success());
    let p = t.path().join("trace-0000.json");
    let g = t.path().join("graph.json");
    let (code, rep) = json_report(&[
        "graph",
        "dump",
        "--trace",
        p.to_str().unwrap(),
        "--out",
        g.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{rep}");
    let dump: Value = serde_json::from_slice(&fs::read(&g).unwrap()).unwrap();
    assert!(!dump["vertices"].as_array().unwrap().is_empty());
    let out = run(&[
        "graph",
        "dump",
        "--trace",
        p.to_str().unwrap(),
        "--projected",
    ]);
    assert!(out.status.success());
    let dump: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!dump["initial"].as_array().unwrap().is_empty());
}
