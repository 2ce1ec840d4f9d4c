use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{
    get_orefs, mk_outs, step_ledger_with, AcceptAll, AdditionalChecks, OutputRef, Slot, StepError,
    Tx, UtxoSet,
};
use crate::trace::{LedgerLabel, LedgerTrace, TracePrefix};

/// One recorded transition. Unlike [`crate::ledger::LedgerStep`] it is not checked
/// on construction, so corrupted runs can be represented and diagnosed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStep {
    pub slot: Slot,
    pub from: UtxoSet,
    pub tx: Tx,
    pub to: UtxoSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("step {0} does not start where the previous one ended")]
    Broken(usize),
}

/// A chained sequence of steps from an initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedRun {
    initial: UtxoSet,
    steps: Vec<RunStep>,
}

impl AnnotatedRun {
    pub fn new(initial: UtxoSet, steps: Vec<RunStep>) -> Result<Self, RunError> {
        let mut at = &initial;
        for (k, s) in steps.iter().enumerate() {
            if s.from != *at {
                return Err(RunError::Broken(k));
            }
            at = &s.to;
        }
        Ok(AnnotatedRun { initial, steps })
    }

    /// A run from a ledger trace; the lift supplies the slots and transactions.
    pub fn from_trace(trace: &LedgerTrace) -> Option<Self> {
        let states = trace.states();
        let steps = trace
            .labels()
            .iter()
            .enumerate()
            .map(|(k, l)| RunStep {
                slot: l.slot,
                from: states[k].clone(),
                tx: l.tx.clone(),
                to: states[k + 1].clone(),
            })
            .collect::<Vec<_>>();
        if steps.len() + 1 != states.len() {
            return None;
        }
        AnnotatedRun::new(states[0].clone(), steps).ok()
    }

    pub fn to_trace(&self) -> LedgerTrace {
        let labels = self
            .steps
            .iter()
            .map(|s| LedgerLabel {
                slot: s.slot,
                tx: s.tx.clone(),
            })
            .collect();
        TracePrefix::with_lift(self.states().into_iter().cloned().collect(), labels)
            .expect("one label per step")
    }

    pub fn initial(&self) -> &UtxoSet {
        &self.initial
    }

    pub fn steps(&self) -> &[RunStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn txs(&self) -> Vec<Tx> {
        self.steps.iter().map(|s| s.tx.clone()).collect()
    }

    pub fn slots(&self) -> Vec<Slot> {
        self.steps.iter().map(|s| s.slot).collect()
    }

    /// `u_0, u_1, .., u_n`.
    pub fn states(&self) -> Vec<&UtxoSet> {
        std::iter::once(&self.initial)
            .chain(self.steps.iter().map(|s| &s.to))
            .collect()
    }

    pub fn final_state(&self) -> &UtxoSet {
        self.steps.last().map_or(&self.initial, |s| &s.to)
    }

    /// `r_k`, the references spent by step `k`.
    pub fn consumed(&self, k: usize) -> BTreeSet<OutputRef> {
        get_orefs(&self.steps[k].tx)
    }

    /// `c_k`, the references created by step `k`.
    pub fn created(&self, k: usize) -> BTreeSet<OutputRef> {
        mk_outs(&self.steps[k].tx).keys()
    }

    /// Re-checks every step against the transition rule.
    pub fn validate(&self, hook: &dyn AdditionalChecks) -> Result<(), ReplayError> {
        for (k, s) in self.steps.iter().enumerate() {
            if k > 0 && s.slot < self.steps[k - 1].slot {
                return Err(ReplayError::SlotsDecreasing(k));
            }
            match step_ledger_with(hook, s.slot, &s.from, &s.tx) {
                Err(error) => return Err(ReplayError::Rejected { index: k, error }),
                Ok(st) if *st.to_state() != s.to => return Err(ReplayError::StateMismatch(k)),
                Ok(_) => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("{slots} slots for {txs} transactions")]
    LengthMismatch { slots: usize, txs: usize },
    #[error("slot of step {0} precedes the previous slot")]
    SlotsDecreasing(usize),
    #[error("step {index} rejected: {error}")]
    Rejected { index: usize, error: StepError },
    #[error("step {0} records the wrong resulting state")]
    StateMismatch(usize),
}

impl ReplayError {
    pub fn code(&self) -> &'static str {
        match self {
            ReplayError::LengthMismatch { .. } => "length-mismatch",
            ReplayError::SlotsDecreasing(_) => "slots-decreasing",
            ReplayError::Rejected { error, .. } => error.code(),
            ReplayError::StateMismatch(_) => "state-mismatch",
        }
    }

    pub fn index(&self) -> Option<usize> {
        match self {
            ReplayError::LengthMismatch { .. } => None,
            ReplayError::SlotsDecreasing(k)
            | ReplayError::StateMismatch(k)
            | ReplayError::Rejected { index: k, .. } => Some(*k),
        }
    }
}

pub fn replay_sequence(
    u0: &UtxoSet,
    slots: &[Slot],
    txs: &[Tx],
) -> Result<AnnotatedRun, ReplayError> {
    replay_with(&AcceptAll, u0, slots, txs)
}

/// Folds the transition rule over `txs` at the given slots.
pub fn replay_with(
    hook: &dyn AdditionalChecks,
    u0: &UtxoSet,
    slots: &[Slot],
    txs: &[Tx],
) -> Result<AnnotatedRun, ReplayError> {
    if slots.len() != txs.len() {
        return Err(ReplayError::LengthMismatch {
            slots: slots.len(),
            txs: txs.len(),
        });
    }
    let mut steps = Vec::with_capacity(txs.len());
    let mut u = u0.clone();
    for (k, (q, t)) in slots.iter().zip(txs).enumerate() {
        if k > 0 && *q < slots[k - 1] {
            return Err(ReplayError::SlotsDecreasing(k));
        }
        let st = step_ledger_with(hook, *q, &u, t)
            .map_err(|error| ReplayError::Rejected { index: k, error })?;
        let (_, from, tx, to) = st.into_parts();
        u = to.clone();
        steps.push(RunStep {
            slot: *q,
            from,
            tx,
            to,
        });
    }
    Ok(AnnotatedRun {
        initial: u0.clone(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{Output, TokenId, TxInput, ValidityInterval, Value};

    #[test]
    fn replay_basics() {
        let g = Tx::new(
            vec![],
            vec![Output::new(
                vec![1],
                Value::single(TokenId::new("ada"), 3),
                vec![],
            )],
            ValidityInterval::always(),
            vec![],
        )
        .unwrap();
        let u0 = mk_outs(&g);
        let r = replay_sequence(&u0, &[], &[]).unwrap();
        assert_eq!(r.states(), vec![&u0]);
        let k = OutputRef::new(g.id(), 0);
        let t = Tx::new(
            vec![TxInput::new(k, u0.get(&k).unwrap().clone())],
            vec![],
            ValidityInterval::always(),
            vec![],
        )
        .unwrap();
        let run = replay_sequence(&u0, &[Slot(1)], std::slice::from_ref(&t)).unwrap();
        assert!(run.final_state().is_empty());
        assert!(run.validate(&AcceptAll).is_ok());
        assert_eq!(AnnotatedRun::from_trace(&run.to_trace()), Some(run.clone()));
        let e = replay_sequence(&u0, &[Slot(1), Slot(1)], &[t.clone(), t.clone()]).unwrap_err();
        assert_eq!((e.code(), e.index()), ("missing-input", Some(1)));
        let e = replay_sequence(&u0, &[Slot(1)], &[t.clone(), t]).unwrap_err();
        assert_eq!(e.code(), "length-mismatch");
        let broken = AnnotatedRun::new(
            UtxoSet::new(),
            vec![RunStep {
                slot: Slot(0),
                from: u0.clone(),
                tx: g,
                to: u0,
            }],
        );
        assert_eq!(broken, Err(RunError::Broken(0)));
    }
}
