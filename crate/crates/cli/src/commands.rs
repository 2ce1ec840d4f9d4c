use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use utxo_lab::codec::{
    self, dump_graph, sha256_hex, Manifest, ManifestEntry, TraceFile, FORMAT_VERSION,
};
use utxo_lab::contract::{self, nft, REGISTERED};
use utxo_lab::graph::{build_ledger_graph_with, project_ledger_graph, LedgerVertex};
use utxo_lab::ledger::{AcceptAll, AdditionalChecks, Slot, UtxoSet};
use utxo_lab::props::{
    build_tx_poset, canonical_presentation, check_disjointness, check_replay_protection,
    check_trivial_update_protection, enumerate_valid_permutations, replay_permutation,
    AnnotatedRun,
};
use utxo_lab::trace::{
    first_difference, generate_valid_traces, monitor_trace, random_genesis, ultra_distance,
    validate_lifted, EmptyUtxoMonitor, InitialConditions, LedgerTrace, MonitorVerdict,
    RandomSpender, ReplayMonitor, SlotRange, TrivialUpdateMonitor, Validity,
};
use utxo_lab::Exec;

use crate::report::{Digest, Report, Verdict};
use crate::{CliError, ContractArgs, GenArgs, MonitorKind, Output, Policy};

fn shown(p: &Path) -> String {
    p.display().to_string()
}

fn read(path: &Path, digest: &mut Digest) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", shown(path))))?;
    digest.file(&bytes);
    String::from_utf8(bytes).map_err(|e| CliError::Parse {
        path: shown(path),
        msg: e.to_string(),
    })
}

fn load(path: &Path, digest: &mut Digest) -> Result<TraceFile, CliError> {
    let text = read(path, digest)?;
    TraceFile::from_json(&text).map_err(|e| CliError::Parse {
        path: shown(path),
        msg: e.to_string(),
    })
}

fn load_sorted(
    paths: &[PathBuf],
    digest: &mut Digest,
) -> Result<Vec<(PathBuf, TraceFile)>, CliError> {
    let mut paths = paths.to_vec();
    paths.sort();
    paths.dedup();
    paths
        .into_iter()
        .map(|p| load(&p, digest).map(|f| (p, f)))
        .collect()
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", shown(path))))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Usage(format!("{}: {e}", shown(path))))
}

fn hook(policy: Policy) -> Box<dyn AdditionalChecks> {
    match policy {
        Policy::None => Box::new(AcceptAll),
        Policy::Nft => Box::new(nft::MintingPolicy::default()),
    }
}

fn validity_verdict(
    subject: &str,
    init: &InitialConditions,
    hook: &dyn AdditionalChecks,
    trace: &LedgerTrace,
) -> Verdict {
    match validate_lifted(init, hook, trace) {
        Ok(Validity::Valid) => Verdict::new(
            "validity",
            Some(subject),
            true,
            json!({ "states": trace.len() }),
        ),
        Ok(Validity::Invalid(d)) => Verdict::new(
            "validity",
            Some(subject),
            false,
            json!({ "code": d.code(), "step": d.step(), "detail": d.to_string() }),
        ),
        Err(e) => Verdict::new(
            "validity",
            Some(subject),
            false,
            json!({ "code": "unverifiable", "detail": e.to_string() }),
        ),
    }
}

pub fn trace_gen(a: &GenArgs, exec: Exec) -> Result<Report, CliError> {
    if a.depth == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    let slots = SlotRange::new(Slot(a.slot_start), Slot(a.slot_end))
        .map_err(|e| CliError::Usage(format!("initial slot range: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    rng.set_stream(1);
    let init = InitialConditions::new(vec![random_genesis(&mut rng, a.universe, 0)], slots);
    let gen = RandomSpender::with_unique_token(nft::token());
    let policy = nft::MintingPolicy::default();
    let traces = generate_valid_traces(&init, &gen, &policy, a.depth, a.count, a.seed, exec);

    create_dir(&a.out)?;
    let mut entries = Vec::with_capacity(traces.len());
    for (i, g) in traces.iter().enumerate() {
        if !matches!(
            validate_lifted(&init, &policy, &g.trace),
            Ok(Validity::Valid)
        ) {
            return Err(CliError::Internal(format!(
                "generated trace {i} does not validate"
            )));
        }
        let file = format!("trace-{i:04}.json");
        let text = TraceFile {
            init: init.clone(),
            trace: g.trace.clone(),
        }
        .to_json();
        write(&a.out.join(&file), &text)?;
        entries.push(ManifestEntry {
            file,
            sha256: sha256_hex(text.as_bytes()),
            states: g.trace.len(),
            exhausted: g.exhausted,
        });
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        seed: a.seed,
        depth: a.depth,
        count: a.count,
        universe: a.universe,
        generator: "random-spender+nft-policy".into(),
        traces: entries,
    };
    let text = codec::to_json(&manifest);
    write(&a.out.join("manifest.json"), &text)?;

    let digest = Digest::default()
        .param("seed", a.seed)
        .param("depth", a.depth)
        .param("count", a.count)
        .param("universe", a.universe)
        .param("slots", [a.slot_start, a.slot_end]);
    let mut r = Report::new("trace gen", digest);
    let exhausted = manifest.traces.iter().filter(|e| e.exhausted).count();
    r.push(Verdict::new(
        "generate",
        None,
        true,
        json!({
            "out": shown(&a.out),
            "files": manifest.traces.len(),
            "exhausted": exhausted,
            "manifest_sha256": sha256_hex(text.as_bytes()),
        }),
    ));
    Ok(r)
}

pub fn trace_validate(files: &[PathBuf], policy: Policy, exec: Exec) -> Result<Report, CliError> {
    let mut digest = Digest::default().param("policy", format!("{policy:?}"));
    let loaded = load_sorted(files, &mut digest)?;
    let h = hook(policy);
    let verdicts = exec.map(&loaded, |(p, f)| {
        validity_verdict(&shown(p), &f.init, h.as_ref(), &f.trace)
    });
    let mut r = Report::new("trace validate", digest);
    verdicts.into_iter().for_each(|v| r.push(v));
    Ok(r)
}

pub fn trace_dist(a: &Path, b: &Path) -> Result<Report, CliError> {
    let mut digest = Digest::default();
    let fa = load(a, &mut digest)?;
    let fb = load(b, &mut digest)?;
    let d = ultra_distance(&fa.trace, &fb.trace);
    let mut r = Report::new("trace dist", digest);
    r.push(Verdict::new(
        "distance",
        None,
        true,
        json!({
            "distance": d.to_string(),
            "exact": d.is_exact(),
            "upper": d.upper().to_f64(),
            "first_difference": first_difference(fa.trace.states(), fb.trace.states()),
        }),
    ));
    Ok(r)
}

pub fn trace_monitor(files: &[PathBuf], kind: MonitorKind) -> Result<Report, CliError> {
    let mut digest = Digest::default().param("monitor", format!("{kind:?}"));
    let loaded = load_sorted(files, &mut digest)?;
    let mut r = Report::new("trace monitor", digest);
    for (p, f) in &loaded {
        let (name, v) = match kind {
            MonitorKind::Replay => ("replay", monitor_trace(&ReplayMonitor, &f.trace)),
            MonitorKind::TrivialUpdate => (
                "trivial-update",
                monitor_trace(&TrivialUpdateMonitor, &f.trace),
            ),
            MonitorKind::EmptyUtxo => ("empty-utxo", monitor_trace(&EmptyUtxoMonitor, &f.trace)),
        };
        let witness = match v {
            MonitorVerdict::Clean => Value::Null,
            MonitorVerdict::ViolatedAt(n) => json!({ "bad_prefix_length": n + 1 }),
        };
        r.push(Verdict::new(
            name,
            Some(&shown(p)),
            v == MonitorVerdict::Clean,
            witness,
        ));
    }
    Ok(r)
}

fn as_run(path: &Path, f: &TraceFile) -> Result<AnnotatedRun, CliError> {
    AnnotatedRun::from_trace(&f.trace)
        .ok_or_else(|| CliError::Usage(format!("{}: a run file needs a lift", shown(path))))
}

fn canon_verdict(run: &AnnotatedRun, hook: &dyn AdditionalChecks) -> Verdict {
    let poset = match build_tx_poset(run) {
        Ok(p) => p,
        Err(e) => {
            return Verdict::new(
                "canonical-form",
                None,
                false,
                json!({ "error": e.to_string() }),
            )
        }
    };
    let order = canonical_presentation(&poset);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if poset.level(g[0]) == poset.level(i) => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let replay = match replay_permutation(hook, run, &order) {
        Ok(r) if r.final_state() == run.final_state() => Ok(()),
        Ok(_) => Err("final state differs".to_string()),
        Err(e) => Err(e.to_string()),
    };
    let mut w = json!({
        "levels": poset.levels(),
        "presentation": order,
        "groups": groups,
        "hasse_edges": poset.hasse_edges(),
    });
    if let Err(e) = &replay {
        w["replay_error"] = json!(e);
    }
    Verdict::new("canonical-form", None, replay.is_ok(), w)
}

pub fn props_check(path: &Path, canon: bool, policy: Policy) -> Result<Report, CliError> {
    let mut digest = Digest::default()
        .param("canon", canon)
        .param("policy", format!("{policy:?}"));
    let f = load(path, &mut digest)?;
    let run = as_run(path, &f)?;
    let h = hook(policy);
    let mut r = Report::new("props check", digest);
    r.push(validity_verdict(
        &shown(path),
        &f.init,
        h.as_ref(),
        &f.trace,
    ));
    let pair = |res: Result<(), utxo_lab::props::PairWitness>| match res {
        Ok(()) => (true, Value::Null),
        Err(w) => (false, json!({ "i": w.i, "j": w.j })),
    };
    let (ok, w) = pair(check_replay_protection(&run));
    r.push(Verdict::new("replay-protection", None, ok, w));
    let (ok, w) = pair(check_trivial_update_protection(&run));
    r.push(Verdict::new("trivial-update-protection", None, ok, w));
    match check_disjointness(&run) {
        Ok(()) => r.push(Verdict::new("disjointness", None, true, Value::Null)),
        Err(v) => {
            let mut w = json!({ "code": v.code() });
            w["violation"] = serde_json::to_value(&v).expect("serializable");
            r.push(Verdict::new("disjointness", None, false, w));
        }
    }
    if canon {
        r.push(canon_verdict(&run, h.as_ref()));
    }
    Ok(r)
}

pub fn props_canon(
    path: &Path,
    cap: Option<usize>,
    policy: Policy,
    exec: Exec,
) -> Result<Report, CliError> {
    let mut digest = Digest::default()
        .param("cap", cap)
        .param("policy", format!("{policy:?}"));
    let f = load(path, &mut digest)?;
    let run = as_run(path, &f)?;
    let h = hook(policy);
    let mut r = Report::new("props canon", digest);
    r.push(canon_verdict(&run, h.as_ref()));
    if let (Some(cap), Ok(poset)) = (cap, build_tx_poset(&run)) {
        let en = enumerate_valid_permutations(&poset, cap);
        let outcomes = exec.map(&en.orders, |o| {
            match replay_permutation(h.as_ref(), &run, o) {
                Ok(x) if x.final_state() == run.final_state() => None,
                Ok(_) => Some("final state differs".to_string()),
                Err(e) => Some(e.to_string()),
            }
        });
        let failures: Vec<Value> = en
            .orders
            .iter()
            .zip(&outcomes)
            .filter_map(|(o, e)| e.as_ref().map(|e| json!({ "order": o, "error": e })))
            .collect();
        r.push(Verdict::new(
            "permutations",
            None,
            failures.is_empty(),
            json!({
                "count": en.orders.len(),
                "truncated": en.truncated,
                "orders": en.orders,
                "failures": failures,
            }),
        ));
    }
    Ok(r)
}

pub fn contract_list() -> Report {
    let mut r = Report::new("contract list", Digest::default());
    for name in REGISTERED {
        r.push(Verdict::new("registered", Some(name), true, Value::Null));
    }
    r
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into())
}

pub fn contract_check(a: &ContractArgs, exec: Exec) -> Result<Report, CliError> {
    let c = contract::lookup(&a.name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown contract `{}` (registered: {})",
            a.name,
            REGISTERED.join(", ")
        ))
    })?;
    let mut digest = Digest::default()
        .param("name", &a.name)
        .param("nonexpanding", a.nonexpanding)
        .param("seed", a.seed);
    let loaded = load_sorted(&a.traces, &mut digest)?;
    if a.nonexpanding.is_some_and(|n| n > 0) && loaded.len() < 2 {
        return Err(CliError::Usage(
            "--nonexpanding needs at least two traces".into(),
        ));
    }
    let traces: Vec<LedgerTrace> = loaded.iter().map(|(_, f)| f.trace.clone()).collect();
    let mut r = Report::new("contract check", digest);

    for (p, f) in &loaded {
        r.push(validity_verdict(&shown(p), &f.init, c.hook(), &f.trace));
    }
    let rep = c.check_traces(&traces, exec);
    for (i, (p, _)) in loaded.iter().enumerate() {
        let failures: Vec<_> = rep.failures.iter().filter(|x| x.trace == i).collect();
        let w = if failures.is_empty() {
            Value::Null
        } else {
            json!({ "failures": failures })
        };
        r.push(Verdict::new(
            "step-correctness",
            Some(&shown(p)),
            failures.is_empty(),
            w,
        ));
    }

    if let Some(dir) = &a.induce {
        create_dir(dir)?;
        for (p, f) in &loaded {
            let subject = shown(p);
            match c.induce(&f.trace) {
                Ok(t) => {
                    let file = format!("{}.{}.json", file_stem(p), c.name());
                    let doc = json!({
                        "version": FORMAT_VERSION,
                        "contract": c.name(),
                        "trace": t,
                    });
                    write(&dir.join(&file), &codec::to_json(&doc))?;
                    let max = c.max_state(&f.trace).unwrap_or(Value::Null);
                    r.push(Verdict::new(
                        "induce",
                        Some(&subject),
                        true,
                        json!({ "file": file, "max_state": max }),
                    ));
                }
                Err(e) => r.push(Verdict::new(
                    "induce",
                    Some(&subject),
                    false,
                    json!({ "error": e.to_string() }),
                )),
            }
        }
    }

    if let Some(n) = a.nonexpanding {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let k = traces.len();
        let pairs: Vec<(LedgerTrace, LedgerTrace)> = (0..n)
            .map(|_| {
                let i = rng.gen_range(0..k);
                let j = (i + rng.gen_range(1..k)) % k;
                (traces[i].clone(), traces[j].clone())
            })
            .collect();
        let ne = c.non_expanding(&pairs, exec);
        r.push(Verdict::new(
            "non-expanding",
            None,
            ne.is_clean(),
            serde_json::to_value(&ne).expect("serializable"),
        ));
    }
    Ok(r)
}

fn utxo_keys(u: &UtxoSet) -> Vec<String> {
    u.iter().map(|(k, _)| k.to_string()).collect()
}

pub fn graph_dump(
    path: &Path,
    projected: bool,
    policy: Policy,
    out: Option<&Path>,
) -> Result<Output, CliError> {
    let mut digest = Digest::default()
        .param("projected", projected)
        .param("policy", format!("{policy:?}"));
    let f = load(path, &mut digest)?;
    let labels = f.trace.lift().ok_or_else(|| {
        CliError::Usage(format!("{}: graph dump needs a lifted trace", shown(path)))
    })?;
    let u0 = f
        .init
        .genesis_utxo()
        .map_err(|e| CliError::Usage(format!("{}: genesis: {e}", shown(path))))?;
    let txs: Vec<_> = labels
        .iter()
        .map(|l| l.tx.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut slot_set: BTreeSet<Slot> = labels.iter().map(|l| l.slot).collect();
    slot_set.insert(f.init.slots.start);
    let slots: Vec<Slot> = slot_set.into_iter().collect();
    let initial_slots: Vec<Slot> = slots
        .iter()
        .copied()
        .filter(|q| f.init.slots.contains(*q))
        .collect();
    let h = hook(policy);
    let g = build_ledger_graph_with(
        h.as_ref(),
        std::slice::from_ref(&u0),
        &initial_slots,
        &txs,
        &slots,
    );

    let path_vertices: Vec<LedgerVertex> = labels
        .iter()
        .zip(f.trace.states())
        .map(|(l, u)| LedgerVertex {
            slot: l.slot,
            utxo: u.clone(),
            tx: l.tx.clone(),
        })
        .collect();
    let missing = path_vertices.iter().position(|v| !g.contains(v));
    let first_initial = path_vertices.first().is_none_or(|v| g.is_initial(v));
    let broken_edge = path_vertices
        .windows(2)
        .position(|w| !g.has_edge(&w[0], &w[1]));

    let (doc, vertices, edges, initial) = if projected {
        let (pg, _) = project_ledger_graph(&g, &[u0]);
        let d = dump_graph(&pg, utxo_keys);
        let n = (d.vertices.len(), d.edges.len(), d.initial.len());
        (codec::to_json(&d), n.0, n.1, n.2)
    } else {
        let d = dump_graph(
            &g,
            |v: &LedgerVertex| json!({ "slot": v.slot, "tx": v.tx.id().to_hex(), "utxo": utxo_keys(&v.utxo) }),
        );
        let n = (d.vertices.len(), d.edges.len(), d.initial.len());
        (codec::to_json(&d), n.0, n.1, n.2)
    };

    let mut r = Report::new("graph dump", digest);
    let path_ok = missing.is_none() && first_initial && broken_edge.is_none();
    r.push(Verdict::new(
        "trace-path",
        Some(&shown(path)),
        path_ok,
        if path_ok {
            Value::Null
        } else {
            json!({ "missing_vertex": missing, "initial": first_initial, "missing_edge": broken_edge })
        },
    ));
    let summary = json!({ "vertices": vertices, "edges": edges, "initial": initial });
    match out {
        Some(o) => {
            write(o, &doc)?;
            r.push(Verdict::new("graph", None, true, summary));
            Ok(Output::Report(r))
        }
        None => {
            r.push(Verdict::new("graph", None, true, summary));
            Ok(Output::Raw(doc, r))
        }
    }
}
