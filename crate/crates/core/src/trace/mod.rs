//! Execution traces as finite prefixes of infinite paths.
//!
//! A [`TracePrefix`] records the observed head of a trace together with optional
//! lift labels (the environment and input of each step). Infinite traces are never
//! materialized, so distances between prefixes are either exact or an upper bound
//! (see [`UltraDistance`]).

mod generate;
mod ledger_trace;
mod maps;
mod metric;
mod monitor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{
    extend_trace, generate_valid_traces, random_genesis, GeneratedTrace, RandomSpender, TxGenerator,
};
pub use ledger_trace::{
    validate_lifted, validate_trace_prefix, InitialConditions, LedgerLabel, LedgerTrace, SlotRange,
    TraceDefect, Validity,
};
pub use maps::{
    check_non_expanding, check_non_expanding_by, has_truncated_lift, push_forward,
    NonExpansionReport, NonExpansionViolation, PrefixPair, StateMap,
};
pub use metric::{
    ball_members, check_ultrametric_axioms, first_difference, head_length_for_radius,
    ultra_distance, AxiomReport, AxiomViolation, BallMembers, Dyadic, UltraDistance,
};
pub use monitor::{
    monitor_trace, verify_monotone, EmptyUtxoMonitor, FnMonitor, MonitorVerdict, ReplayMonitor,
    SafetyMonitor, TrivialUpdateMonitor,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("a trace prefix needs at least one state")]
    Empty,
    #[error("lift has {labels} labels for {states} states")]
    LiftLength { states: usize, labels: usize },
    #[error("{steps} steps supplied for {states} states")]
    StepCount { states: usize, steps: usize },
    #[error("trace has no lift annotations")]
    MissingLift,
    #[error("prefix of length {len} is too short for n = {n}")]
    TooShort { len: usize, n: usize },
    #[error("radius must be positive")]
    NonPositiveRadius,
    #[error("state {0} lies outside the map's domain")]
    OutsideDomain(usize),
    #[error("source graph initial vertices are not finitely enumerable")]
    UnsupportedEnumeration,
}

/// The observed head of a trace, with optional per-step labels.
///
/// When present, `lift[k]` labels the step from `states[k]` to `states[k + 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TracePrefix<S, L = ()> {
    states: Vec<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lift: Option<Vec<L>>,
}

#[derive(Deserialize)]
struct TracePrefixRepr<S, L> {
    states: Vec<S>,
    #[serde(default = "Option::default")]
    lift: Option<Vec<L>>,
}

impl<'de, S, L> Deserialize<'de> for TracePrefix<S, L>
where
    S: Deserialize<'de>,
    L: Deserialize<'de>,
{
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = TracePrefixRepr::<S, L>::deserialize(d)?;
        let p = match r.lift {
            Some(l) => TracePrefix::with_lift(r.states, l),
            None => TracePrefix::new(r.states),
        };
        p.map_err(serde::de::Error::custom)
    }
}

impl<S, L> TracePrefix<S, L> {
    pub fn new(states: Vec<S>) -> Result<Self, TraceError> {
        if states.is_empty() {
            return Err(TraceError::Empty);
        }
        Ok(TracePrefix { states, lift: None })
    }

    pub fn with_lift(states: Vec<S>, lift: Vec<L>) -> Result<Self, TraceError> {
        if states.is_empty() {
            return Err(TraceError::Empty);
        }
        if lift.len() + 1 != states.len() {
            return Err(TraceError::LiftLength {
                states: states.len(),
                labels: lift.len(),
            });
        }
        Ok(TracePrefix {
            states,
            lift: Some(lift),
        })
    }

    pub fn single(state: S) -> Self {
        TracePrefix {
            states: vec![state],
            lift: None,
        }
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn lift(&self) -> Option<&[L]> {
        self.lift.as_deref()
    }

    /// Labels, or an empty slice when the prefix carries no lift.
    pub fn labels(&self) -> &[L] {
        self.lift.as_deref().unwrap_or(&[])
    }

    /// Observed length (number of states).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &S {
        &self.states[0]
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("non-empty")
    }

    /// Appends a state reached by a step labelled `label`.
    ///
    /// A prefix without a lift gains one only if it has a single state.
    pub fn push(&mut self, label: Option<L>, state: S) {
        match (&mut self.lift, label) {
            (Some(l), Some(x)) => l.push(x),
            (None, Some(x)) if self.states.len() == 1 => self.lift = Some(vec![x]),
            (lift, _) => *lift = None,
        }
        self.states.push(state);
    }

    pub fn into_parts(self) -> (Vec<S>, Option<Vec<L>>) {
        (self.states, self.lift)
    }
}

impl<S: Clone, L: Clone> TracePrefix<S, L> {
    /// The first `n` states (and their labels); `n` is clamped to `1..=len`.
    pub fn head(&self, n: usize) -> TracePrefix<S, L> {
        let n = n.clamp(1, self.states.len());
        TracePrefix {
            states: self.states[..n].to_vec(),
            lift: self.lift.as_ref().map(|l| l[..n - 1].to_vec()),
        }
    }

    pub fn without_lift(&self) -> TracePrefix<S, L> {
        TracePrefix {
            states: self.states.clone(),
            lift: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_lift_length() {
        assert_eq!(TracePrefix::<u8>::new(vec![]), Err(TraceError::Empty));
        assert!(TracePrefix::with_lift(vec![1u8, 2], vec!['a']).is_ok());
        assert_eq!(
            TracePrefix::with_lift(vec![1u8, 2], vec!['a', 'b']),
            Err(TraceError::LiftLength {
                states: 2,
                labels: 2
            })
        );
    }

    #[test]
    fn push_and_head() {
        let mut p = TracePrefix::single(0u8);
        p.push(Some('a'), 1);
        p.push(Some('b'), 2);
        assert_eq!(p.labels(), &['a', 'b']);
        let h = p.head(2);
        assert_eq!(h.states(), &[0, 1]);
        assert_eq!(h.labels(), &['a']);
        assert_eq!(p.head(0).len(), 1);
    }

    #[test]
    fn serde_rejects_bad_lift() {
        let ok: TracePrefix<u8, char> =
            serde_json::from_str(r#"{"states":[1,2],"lift":["x"]}"#).unwrap();
        assert_eq!(ok.len(), 2);
        assert!(
            serde_json::from_str::<TracePrefix<u8, char>>(r#"{"states":[1,2],"lift":[]}"#).is_err()
        );
        assert!(serde_json::from_str::<TracePrefix<u8, char>>(r#"{"states":[]}"#).is_err());
    }
}
