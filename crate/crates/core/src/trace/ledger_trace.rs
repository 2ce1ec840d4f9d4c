//! Valid ledger traces.

use serde::{Deserialize, Serialize};

use super::{TraceError, TracePrefix};
use crate::ledger::{
    mk_outs, step_ledger_with, AdditionalChecks, LedgerError, Slot, StepError, Tx, UtxoSet,
};
use crate::props::{check_well_founded, NotWellFounded};

/// The environment and input of one ledger step.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LedgerLabel {
    pub slot: Slot,
    pub tx: Tx,
}

pub type LedgerTrace = TracePrefix<UtxoSet, LedgerLabel>;

/// Half-open slot range `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRange {
    pub start: Slot,
    pub end: Slot,
}

impl SlotRange {
    pub fn new(start: Slot, end: Slot) -> Result<Self, LedgerError> {
        if start >= end {
            return Err(LedgerError::InvalidInterval { start, end });
        }
        Ok(SlotRange { start, end })
    }

    pub fn contains(&self, q: Slot) -> bool {
        self.start <= q && q < self.end
    }
}

/// `Slot₀ × UTxO₀`: initial UTxO sets are those well-founded over `genesis`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub genesis: Vec<Tx>,
    pub slots: SlotRange,
}

impl InitialConditions {
    pub fn new(genesis: Vec<Tx>, slots: SlotRange) -> Self {
        InitialConditions { genesis, slots }
    }

    /// Everything produced by the inputless genesis transactions.
    pub fn genesis_utxo(&self) -> Result<UtxoSet, LedgerError> {
        self.genesis
            .iter()
            .filter(|t| t.inputs().is_empty())
            .try_fold(UtxoSet::new(), |acc, t| acc.union(&mk_outs(t)))
    }

    pub fn initial_utxo_check(&self, u: &UtxoSet) -> Result<(), NotWellFounded> {
        check_well_founded(u, &self.genesis)
    }

    pub fn is_initial_utxo(&self, u: &UtxoSet) -> bool {
        self.initial_utxo_check(u).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceDefect {
    InitialState(NotWellFounded),
    InitialSlot(Slot),
    SlotsDecreasing {
        index: usize,
        prev: Slot,
        next: Slot,
    },
    StepRejected {
        index: usize,
        reason: StepError,
    },
    StateMismatch {
        index: usize,
    },
}

impl TraceDefect {
    pub fn code(&self) -> &'static str {
        match self {
            TraceDefect::InitialState(_) => "initial-state",
            TraceDefect::InitialSlot(_) => "initial-slot",
            TraceDefect::SlotsDecreasing { .. } => "slots-decreasing",
            TraceDefect::StepRejected { reason, .. } => reason.code(),
            TraceDefect::StateMismatch { .. } => "state-mismatch",
        }
    }

    /// Index of the offending step, if the defect is tied to one.
    pub fn step(&self) -> Option<usize> {
        match self {
            TraceDefect::SlotsDecreasing { index, .. }
            | TraceDefect::StepRejected { index, .. }
            | TraceDefect::StateMismatch { index } => Some(*index),
            _ => None,
        }
    }
}

impl std::fmt::Display for TraceDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceDefect::InitialState(w) => write!(f, "initial state: {w}"),
            TraceDefect::InitialSlot(q) => write!(f, "initial slot {q} outside the initial range"),
            TraceDefect::SlotsDecreasing { index, prev, next } => {
                write!(f, "step {index}: slot {next} precedes {prev}")
            }
            TraceDefect::StepRejected { index, reason } => write!(f, "step {index}: {reason}"),
            TraceDefect::StateMismatch { index } => {
                write!(
                    f,
                    "step {index}: recorded state differs from the applied transaction"
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(TraceDefect),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Checks that `prefix` is the head of a valid ledger trace driven by `steps`.
pub fn validate_trace_prefix<L>(
    init: &InitialConditions,
    hook: &dyn AdditionalChecks,
    prefix: &TracePrefix<UtxoSet, L>,
    steps: &[(Slot, Tx)],
) -> Result<Validity, TraceError> {
    let states = prefix.states();
    if steps.len() + 1 != states.len() {
        return Err(TraceError::StepCount {
            states: states.len(),
            steps: steps.len(),
        });
    }
    if let Err(w) = init.initial_utxo_check(&states[0]) {
        return Ok(Validity::Invalid(TraceDefect::InitialState(w)));
    }
    if let Some(&(q0, _)) = steps.first() {
        if !init.slots.contains(q0) {
            return Ok(Validity::Invalid(TraceDefect::InitialSlot(q0)));
        }
    }
    for (k, (q, t)) in steps.iter().enumerate() {
        if k > 0 && *q < steps[k - 1].0 {
            return Ok(Validity::Invalid(TraceDefect::SlotsDecreasing {
                index: k,
                prev: steps[k - 1].0,
                next: *q,
            }));
        }
        match step_ledger_with(hook, *q, &states[k], t) {
            Err(reason) => {
                return Ok(Validity::Invalid(TraceDefect::StepRejected {
                    index: k,
                    reason,
                }))
            }
            Ok(s) if *s.to_state() != states[k + 1] => {
                return Ok(Validity::Invalid(TraceDefect::StateMismatch { index: k }))
            }
            Ok(_) => {}
        }
    }
    Ok(Validity::Valid)
}

/// [`validate_trace_prefix`] with steps taken from the prefix's own lift.
pub fn validate_lifted(
    init: &InitialConditions,
    hook: &dyn AdditionalChecks,
    trace: &LedgerTrace,
) -> Result<Validity, TraceError> {
    let steps: Vec<(Slot, Tx)> = match trace.lift() {
        Some(l) => l.iter().map(|x| (x.slot, x.tx.clone())).collect(),
        None if trace.len() == 1 => Vec::new(),
        None => return Err(TraceError::MissingLift),
    };
    validate_trace_prefix(init, hook, trace, &steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{
        apply_tx, AcceptAll, Output, OutputRef, TokenId, TxInput, ValidityInterval, Value,
    };

    fn genesis() -> Tx {
        let outs = (0..3u8)
            .map(|k| Output::new(vec![k], Value::single(TokenId::new("ada"), 10), vec![]))
            .collect();
        Tx::new(vec![], outs, ValidityInterval::always(), vec![]).unwrap()
    }

    fn spend(u: &UtxoSet, r: OutputRef, tag: u8) -> Tx {
        Tx::new(
            vec![TxInput::new(r, u.get(&r).unwrap().clone())],
            vec![Output::new(vec![tag], Value::new(), vec![])],
            ValidityInterval::new(Slot(0), Slot(100)).unwrap(),
            vec![tag],
        )
        .unwrap()
    }

    fn setup() -> (InitialConditions, UtxoSet, Tx) {
        let g = genesis();
        let init =
            InitialConditions::new(vec![g.clone()], SlotRange::new(Slot(0), Slot(10)).unwrap());
        let u0 = init.genesis_utxo().unwrap();
        (init, u0, g)
    }

    #[test]
    fn single_state() {
        let (init, u0, _) = setup();
        let p: LedgerTrace = TracePrefix::single(u0);
        assert_eq!(validate_lifted(&init, &AcceptAll, &p), Ok(Validity::Valid));
        let bogus: LedgerTrace = TracePrefix::single(UtxoSet::from_iter([(
            OutputRef::new(crate::ledger::TxHash([7; 32]), 0),
            Output::new(vec![], Value::new(), vec![]),
        )]));
        let v = validate_lifted(&init, &AcceptAll, &bogus).unwrap();
        assert!(matches!(v, Validity::Invalid(TraceDefect::InitialState(_))));
    }

    #[test]
    fn three_steps_and_decreasing_slots() {
        let (init, u0, g) = setup();
        let t0 = spend(&u0, OutputRef::new(g.id(), 0), 0);
        let u1 = apply_tx(&u0, &t0).unwrap();
        let t1 = spend(&u1, OutputRef::new(g.id(), 1), 1);
        let u2 = apply_tx(&u1, &t1).unwrap();
        let t2 = spend(&u2, OutputRef::new(t0.id(), 0), 2);
        let u3 = apply_tx(&u2, &t2).unwrap();
        let states = vec![u0, u1, u2, u3];
        let p: TracePrefix<UtxoSet> = TracePrefix::new(states.clone()).unwrap();
        let steps = vec![
            (Slot(1), t0.clone()),
            (Slot(1), t1.clone()),
            (Slot(5), t2.clone()),
        ];
        assert_eq!(
            validate_trace_prefix(&init, &AcceptAll, &p, &steps),
            Ok(Validity::Valid)
        );

        let bad = vec![
            (Slot(3), t0.clone()),
            (Slot(2), t1.clone()),
            (Slot(5), t2.clone()),
        ];
        let v = validate_trace_prefix(&init, &AcceptAll, &p, &bad).unwrap();
        let Validity::Invalid(d) = v else { panic!() };
        assert_eq!((d.code(), d.step()), ("slots-decreasing", Some(1)));

        let late = vec![(Slot(10), t0), (Slot(11), t1), (Slot(12), t2)];
        let v = validate_trace_prefix(&init, &AcceptAll, &p, &late).unwrap();
        assert_eq!(v, Validity::Invalid(TraceDefect::InitialSlot(Slot(10))));

        assert_eq!(
            validate_trace_prefix(&init, &AcceptAll, &p, &steps[..1]),
            Err(TraceError::StepCount {
                states: 4,
                steps: 1
            })
        );
    }

    #[test]
    fn wrong_recorded_state() {
        let (init, u0, g) = setup();
        let t0 = spend(&u0, OutputRef::new(g.id(), 0), 0);
        let p = TracePrefix::with_lift(
            vec![u0.clone(), u0],
            vec![LedgerLabel {
                slot: Slot(0),
                tx: t0,
            }],
        )
        .unwrap();
        let v = validate_lifted(&init, &AcceptAll, &p).unwrap();
        assert_eq!(
            v,
            Validity::Invalid(TraceDefect::StateMismatch { index: 0 })
        );
    }
}
