//! Structured contracts: an abstract state machine together with a projection of
//! ledger states (`pi`) and a classification of transactions (`kappa`) that make
//! every ledger step a step of the machine.

pub mod nft;

use std::fmt::Debug;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Exec;
use crate::graph::{LedgerVertex, PartialSieveHom, SimpleGraph};
use crate::ledger::{AcceptAll, AdditionalChecks, LedgerStep, Tx, UtxoSet};
use crate::trace::{check_non_expanding, LedgerTrace, NonExpansionReport, TracePrefix};

/// A deterministic contract state machine.
pub trait ContractSpec: Send + Sync {
    type State: Clone + Ord + Debug + Serialize + Send + Sync;
    type Input: Clone + Ord + Debug + Serialize + Send + Sync;

    fn step(&self, state: &Self::State, input: &Self::Input) -> Option<Self::State>;
    fn is_initial(&self, state: &Self::State) -> bool;
}

type Projection<S> = Arc<dyn Fn(&UtxoSet) -> Option<S> + Send + Sync>;
type Classifier<I> = Arc<dyn Fn(&Tx) -> I + Send + Sync>;

pub struct StructuredContract<C: ContractSpec> {
    name: String,
    spec: C,
    pi: Projection<C::State>,
    kappa: Classifier<C::Input>,
    hook: Arc<dyn AdditionalChecks>,
}

impl<C: ContractSpec> Clone for StructuredContract<C>
where
    C: Clone,
{
    fn clone(&self) -> Self {
        StructuredContract {
            name: self.name.clone(),
            spec: self.spec.clone(),
            pi: self.pi.clone(),
            kappa: self.kappa.clone(),
            hook: self.hook.clone(),
        }
    }
}

impl<C: ContractSpec> StructuredContract<C> {
    pub fn new(
        name: impl Into<String>,
        spec: C,
        pi: impl Fn(&UtxoSet) -> Option<C::State> + Send + Sync + 'static,
        kappa: impl Fn(&Tx) -> C::Input + Send + Sync + 'static,
    ) -> Self {
        StructuredContract {
            name: name.into(),
            spec,
            pi: Arc::new(pi),
            kappa: Arc::new(kappa),
            hook: Arc::new(AcceptAll),
        }
    }

    /// Ledger rules the contract relies on, such as a minting policy.
    pub fn with_hook(mut self, hook: impl AdditionalChecks + 'static) -> Self {
        self.hook = Arc::new(hook);
        self
    }

    pub fn with_pi(
        mut self,
        pi: impl Fn(&UtxoSet) -> Option<C::State> + Send + Sync + 'static,
    ) -> Self {
        self.pi = Arc::new(pi);
        self
    }

    pub fn with_kappa(mut self, kappa: impl Fn(&Tx) -> C::Input + Send + Sync + 'static) -> Self {
        self.kappa = Arc::new(kappa);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &C {
        &self.spec
    }

    pub fn hook(&self) -> &dyn AdditionalChecks {
        self.hook.as_ref()
    }

    pub fn project(&self, u: &UtxoSet) -> Option<C::State> {
        (self.pi)(u)
    }

    pub fn classify(&self, t: &Tx) -> C::Input {
        (self.kappa)(t)
    }
}

/// Outcome of checking one ledger step against the contract.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum StepCheck<S, I> {
    Holds,
    /// The from-state is not projectable, so nothing is claimed.
    Vacuous,
    ToStateUnprojectable {
        from: S,
        input: I,
    },
    ContractStepMismatch {
        from: S,
        input: I,
        expected: Option<S>,
        actual: S,
    },
}

impl<S, I> StepCheck<S, I> {
    pub fn code(&self) -> &'static str {
        match self {
            StepCheck::Holds => "holds",
            StepCheck::Vacuous => "vacuous",
            StepCheck::ToStateUnprojectable { .. } => "to-state-unprojectable",
            StepCheck::ContractStepMismatch { .. } => "contract-step-mismatch",
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, StepCheck::Holds | StepCheck::Vacuous)
    }
}

/// Checks `step(pi u, kappa t) = pi u'` for a transition `u -> u'` by `t`.
pub fn check_transition<C: ContractSpec>(
    sc: &StructuredContract<C>,
    from: &UtxoSet,
    tx: &Tx,
    to: &UtxoSet,
) -> StepCheck<C::State, C::Input> {
    let Some(s) = sc.project(from) else {
        return StepCheck::Vacuous;
    };
    let input = sc.classify(tx);
    let Some(actual) = sc.project(to) else {
        return StepCheck::ToStateUnprojectable { from: s, input };
    };
    let expected = sc.spec.step(&s, &input);
    if expected.as_ref() == Some(&actual) {
        StepCheck::Holds
    } else {
        StepCheck::ContractStepMismatch {
            from: s,
            input,
            expected,
            actual,
        }
    }
}

pub fn check_step_correctness<C: ContractSpec>(
    sc: &StructuredContract<C>,
    step: &LedgerStep,
) -> StepCheck<C::State, C::Input> {
    check_transition(sc, step.from_state(), step.tx(), step.to_state())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContractFailure {
    pub trace: usize,
    /// Step index, or `None` for a problem with the initial state.
    pub step: Option<usize>,
    pub code: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ContractTraceReport {
    pub traces: usize,
    pub steps: usize,
    pub vacuous: usize,
    pub failures: Vec<ContractFailure>,
}

impl ContractTraceReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

fn check_one<C: ContractSpec>(
    sc: &StructuredContract<C>,
    index: usize,
    trace: &LedgerTrace,
) -> ContractTraceReport {
    let mut r = ContractTraceReport {
        traces: 1,
        ..Default::default()
    };
    let fail = |step, code: &str, detail: String| ContractFailure {
        trace: index,
        step,
        code: code.to_string(),
        detail,
    };
    match sc.project(trace.first()) {
        None => r
            .failures
            .push(fail(None, "initial-unprojectable", String::new())),
        Some(s) if !sc.spec.is_initial(&s) => {
            r.failures
                .push(fail(None, "initial-not-in-state0", format!("{s:?}")))
        }
        Some(_) => {}
    }
    let states = trace.states();
    for (k, label) in trace.labels().iter().enumerate() {
        r.steps += 1;
        let (u, u2) = (&states[k], &states[k + 1]);
        let c = check_transition(sc, u, &label.tx, u2);
        if matches!(c, StepCheck::Vacuous) {
            r.vacuous += 1;
        } else if !c.is_ok() {
            r.failures.push(fail(Some(k), c.code(), format!("{c:?}")));
        }
        // The square: project the ledger vertex then map, versus map then project.
        let v = LedgerVertex {
            slot: label.slot,
            utxo: u.clone(),
            tx: label.tx.clone(),
        };
        if let (Some(a), Some(b)) = (sigma_prime(sc, &v.utxo), sigma(sc, &v).map(|(s, _)| s)) {
            if a != b {
                r.failures.push(fail(
                    Some(k),
                    "square-does-not-commute",
                    format!("{a:?} vs {b:?}"),
                ));
            }
        }
    }
    r
}

/// `sigma`: a ledger vertex `(q, u, t)` to the contract vertex `(pi u, kappa t)`,
/// defined when the contract step is.
pub fn sigma<C: ContractSpec>(
    sc: &StructuredContract<C>,
    v: &LedgerVertex,
) -> Option<(C::State, C::Input)> {
    let s = sc.project(&v.utxo)?;
    let i = sc.classify(&v.tx);
    sc.spec.step(&s, &i).map(|_| (s, i))
}

/// `sigma'`: the projection on UTxO states.
pub fn sigma_prime<C: ContractSpec>(sc: &StructuredContract<C>, u: &UtxoSet) -> Option<C::State> {
    sc.project(u)
}

/// Step correctness on every step of every trace, plus the initial-state condition
/// and the commuting square.
pub fn check_contract_on_traces<C: ContractSpec>(
    sc: &StructuredContract<C>,
    traces: &[LedgerTrace],
    exec: Exec,
) -> ContractTraceReport {
    let idx: Vec<usize> = (0..traces.len()).collect();
    exec.map(&idx, |&i| check_one(sc, i, &traces[i]))
        .into_iter()
        .fold(ContractTraceReport::default(), |mut acc, r| {
            acc.traces += r.traces;
            acc.steps += r.steps;
            acc.vacuous += r.vacuous;
            acc.failures.extend(r.failures);
            acc
        })
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("state {0} is outside the projection's domain")]
    Unprojectable(usize),
}

/// The pointwise projection of a ledger trace, labelled by classified transactions.
pub fn induce_trace_map<C: ContractSpec>(
    sc: &StructuredContract<C>,
    trace: &LedgerTrace,
) -> Result<TracePrefix<C::State, C::Input>, ContractError> {
    let states = trace
        .states()
        .iter()
        .enumerate()
        .map(|(k, u)| sc.project(u).ok_or(ContractError::Unprojectable(k)))
        .collect::<Result<Vec<_>, _>>()?;
    match trace.lift() {
        Some(l) => {
            let inputs = l.iter().map(|x| sc.classify(&x.tx)).collect();
            Ok(TracePrefix::with_lift(states, inputs).expect("same shape as the ledger trace"))
        }
        None => Ok(TracePrefix::new(states).expect("non-empty")),
    }
}

/// Whether every step of a contract trace is a step of the machine.
pub fn is_contract_trace<C: ContractSpec>(
    spec: &C,
    trace: &TracePrefix<C::State, C::Input>,
) -> bool {
    let s = trace.states();
    trace
        .labels()
        .iter()
        .enumerate()
        .all(|(k, i)| spec.step(&s[k], i).as_ref() == Some(&s[k + 1]))
}

/// Non-expansion of the induced trace map over pairs of ledger traces.
pub fn check_induced_non_expanding<C: ContractSpec>(
    sc: &StructuredContract<C>,
    pairs: &[(LedgerTrace, LedgerTrace)],
    exec: Exec,
) -> NonExpansionReport {
    check_non_expanding(&|u: &UtxoSet| sc.project(u), pairs, exec)
}

pub type ContractGraphs<S, I> = (
    SimpleGraph<(S, I)>,
    SimpleGraph<S>,
    PartialSieveHom<(S, I), S>,
);

/// The contract graph over pairs `(s, i)` with a defined step, its projection onto
/// states, and the projection map.
pub fn build_contract_graphs<C: ContractSpec>(
    spec: &C,
    states: &[C::State],
    inputs: &[C::Input],
) -> ContractGraphs<C::State, C::Input> {
    let mut gamma = SimpleGraph::new();
    let mut gamma_p = SimpleGraph::new();
    for s in states {
        gamma_p.add_vertex(s.clone());
        if spec.is_initial(s) {
            gamma_p.mark_initial(s.clone());
        }
    }
    let mut defined = Vec::new();
    for s in states {
        for i in inputs {
            if let Some(next) = spec.step(s, i) {
                let v = (s.clone(), i.clone());
                gamma.add_vertex(v.clone());
                if spec.is_initial(s) {
                    gamma.mark_initial(v.clone());
                }
                defined.push((v, next));
            }
        }
    }
    for (v, next) in &defined {
        if gamma_p.contains(next) {
            gamma_p.add_edge(v.0.clone(), next.clone());
        }
        for i in inputs {
            let w = (next.clone(), i.clone());
            if gamma.contains(&w) {
                gamma.add_edge(v.clone(), w);
            }
        }
    }
    let psi = PartialSieveHom::tabulate(&gamma, |(s, _)| Some(s.clone()));
    (gamma, gamma_p, psi)
}

/// `sigma` tabulated over an explicit ledger graph.
pub fn tabulate_sigma<C: ContractSpec>(
    sc: &StructuredContract<C>,
    lambda: &SimpleGraph<LedgerVertex>,
) -> PartialSieveHom<LedgerVertex, (C::State, C::Input)> {
    PartialSieveHom::tabulate(lambda, |v| sigma(sc, v))
}

/// `sigma'` tabulated over the projected ledger graph.
pub fn tabulate_sigma_prime<C: ContractSpec>(
    sc: &StructuredContract<C>,
    lambda_p: &SimpleGraph<UtxoSet>,
) -> PartialSieveHom<UtxoSet, C::State> {
    PartialSieveHom::tabulate(lambda_p, |u| sigma_prime(sc, u))
}

/// A registered contract with its state types erased, for tools that pick
/// contracts by name.
pub trait DynContract: Send + Sync {
    fn name(&self) -> &str;
    fn hook(&self) -> &dyn AdditionalChecks;
    fn check_traces(&self, traces: &[LedgerTrace], exec: Exec) -> ContractTraceReport;
    fn induce(&self, trace: &LedgerTrace) -> Result<serde_json::Value, ContractError>;
    fn max_state(&self, trace: &LedgerTrace) -> Result<serde_json::Value, ContractError>;
    fn non_expanding(&self, pairs: &[(LedgerTrace, LedgerTrace)], exec: Exec)
        -> NonExpansionReport;
}

impl<C: ContractSpec> DynContract for StructuredContract<C> {
    fn name(&self) -> &str {
        StructuredContract::name(self)
    }

    fn hook(&self) -> &dyn AdditionalChecks {
        StructuredContract::hook(self)
    }

    fn check_traces(&self, traces: &[LedgerTrace], exec: Exec) -> ContractTraceReport {
        check_contract_on_traces(self, traces, exec)
    }

    fn induce(&self, trace: &LedgerTrace) -> Result<serde_json::Value, ContractError> {
        let t = induce_trace_map(self, trace)?;
        Ok(serde_json::to_value(&t).expect("contract states serialize"))
    }

    fn max_state(&self, trace: &LedgerTrace) -> Result<serde_json::Value, ContractError> {
        let t = induce_trace_map(self, trace)?;
        let m = t.states().iter().max().expect("non-empty");
        Ok(serde_json::to_value(m).expect("contract states serialize"))
    }

    fn non_expanding(
        &self,
        pairs: &[(LedgerTrace, LedgerTrace)],
        exec: Exec,
    ) -> NonExpansionReport {
        check_induced_non_expanding(self, pairs, exec)
    }
}

pub const REGISTERED: [&str; 3] = ["nft", "nft-broken-pi", "nft-broken-kappa"];

pub fn lookup(name: &str) -> Option<Box<dyn DynContract>> {
    match name {
        "nft" => Some(Box::new(nft::contract())),
        "nft-broken-pi" => Some(Box::new(nft::broken_pi())),
        "nft-broken-kappa" => Some(Box::new(nft::broken_kappa())),
        _ => None,
    }
}
