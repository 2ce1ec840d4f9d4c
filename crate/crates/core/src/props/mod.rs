//! Safety properties of ledger runs and the dependency order of their transactions.

mod canon;
pub mod fixture;
mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ledger::{mk_outs, OutputRef, Tx, UtxoSet};

pub use canon::{
    assign_slots, build_tx_poset, canonical_presentation, enumerate_valid_permutations,
    exhaustive_commutativity, replay_permutation, CommutativityReport, Enumeration,
    PermutationError, PosetError, TxPoset,
};
pub use run::{replay_sequence, replay_with, AnnotatedRun, ReplayError, RunError, RunStep};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotWellFoundedReason {
    /// No genesis transaction has this hash.
    UnknownHash,
    /// The hash belongs to a transaction that has inputs.
    NotGenesis,
    /// The genesis transaction produced a different output at this index.
    OutputMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Error)]
#[error("{key}: {reason:?}")]
pub struct NotWellFounded {
    pub key: OutputRef,
    pub reason: NotWellFoundedReason,
}

/// Every entry of `u0` must be an output of an inputless transaction in `genesis`.
pub fn check_well_founded(u0: &UtxoSet, genesis: &[Tx]) -> Result<(), NotWellFounded> {
    let by_hash: BTreeMap<_, _> = genesis.iter().map(|t| (t.id(), t)).collect();
    for (key, out) in u0.iter() {
        let fail = |reason| NotWellFounded { key: *key, reason };
        let t = by_hash
            .get(&key.tx)
            .ok_or(fail(NotWellFoundedReason::UnknownHash))?;
        if !t.inputs().is_empty() {
            return Err(fail(NotWellFoundedReason::NotGenesis));
        }
        if mk_outs(t).get(key) != Some(out) {
            return Err(fail(NotWellFoundedReason::OutputMismatch));
        }
    }
    Ok(())
}

/// Indices `(i, j)`, `i < j`, of two equal items.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairWitness {
    pub i: usize,
    pub j: usize,
}

impl fmt::Display for PairWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// The smallest `j` repeating an earlier item, paired with the first such earlier `i`.
fn first_repeat<T: Ord>(items: impl IntoIterator<Item = T>) -> Option<PairWitness> {
    let mut seen = BTreeMap::new();
    for (j, x) in items.into_iter().enumerate() {
        if let Some(&i) = seen.get(&x) {
            return Some(PairWitness { i, j });
        }
        seen.insert(x, j);
    }
    None
}

/// No transaction occurs twice.
pub fn check_replay_protection(run: &AnnotatedRun) -> Result<(), PairWitness> {
    match first_repeat(run.steps().iter().map(|s| &s.tx)) {
        Some(w) => Err(w),
        None => Ok(()),
    }
}

/// No state occurs twice among `u_0 .. u_{n+1}`.
pub fn check_trivial_update_protection(run: &AnnotatedRun) -> Result<(), PairWitness> {
    match first_repeat(run.states()) {
        Some(w) => Err(w),
        None => Ok(()),
    }
}

/// Where an output reference came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Initial,
    Step(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DisjointnessViolation {
    /// Two of `u_0, c_0, c_1, ..` share a key.
    Produced {
        first: Origin,
        second: Origin,
        key: OutputRef,
    },
    /// Two of `r_0, r_1, ..` share a key.
    Consumed { i: usize, j: usize, key: OutputRef },
    /// `r_k` is not contained in `u_k`.
    Unavailable { step: usize, key: OutputRef },
    /// `c_k` meets `u_k \ r_k`.
    Overlap { step: usize, key: OutputRef },
}

impl DisjointnessViolation {
    pub fn code(&self) -> &'static str {
        match self {
            DisjointnessViolation::Produced { .. } => "produced-overlap",
            DisjointnessViolation::Consumed { .. } => "consumed-overlap",
            DisjointnessViolation::Unavailable { .. } => "consumed-unavailable",
            DisjointnessViolation::Overlap { .. } => "step-overlap",
        }
    }
}

/// `u_0, c_0, c_1, ..` pairwise disjoint, `r_0, r_1, ..` pairwise disjoint, and every
/// step a disjoint union `u_{k+1} = (u_k \ r_k) ⊔ c_k`.
pub fn check_disjointness(run: &AnnotatedRun) -> Result<(), DisjointnessViolation> {
    let mut produced: BTreeMap<OutputRef, Origin> = run
        .initial()
        .keys()
        .into_iter()
        .map(|k| (k, Origin::Initial))
        .collect();
    let mut consumed: BTreeMap<OutputRef, usize> = BTreeMap::new();
    for (k, step) in run.steps().iter().enumerate() {
        let (r, c) = (run.consumed(k), run.created(k));
        for key in &c {
            if let Some(&first) = produced.get(key) {
                return Err(DisjointnessViolation::Produced {
                    first,
                    second: Origin::Step(k),
                    key: *key,
                });
            }
            produced.insert(*key, Origin::Step(k));
        }
        for key in &r {
            if let Some(&i) = consumed.get(key) {
                return Err(DisjointnessViolation::Consumed { i, j: k, key: *key });
            }
            consumed.insert(*key, k);
        }
        let uk = step.from.keys();
        if let Some(key) = r.difference(&uk).next() {
            return Err(DisjointnessViolation::Unavailable { step: k, key: *key });
        }
        let rest: BTreeSet<_> = uk.difference(&r).copied().collect();
        if let Some(key) = c.intersection(&rest).next() {
            return Err(DisjointnessViolation::Overlap { step: k, key: *key });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CommutativityError {
    #[error("runs start from different states")]
    DifferentStart,
    #[error("transaction lists are not permutations of each other")]
    NotPermutation,
}

/// Final states of two runs over the same transactions from the same start.
///
/// `Ok(true)` when they agree.
pub fn check_commutativity(a: &AnnotatedRun, b: &AnnotatedRun) -> Result<bool, CommutativityError> {
    if a.initial() != b.initial() {
        return Err(CommutativityError::DifferentStart);
    }
    let mut ta: Vec<&Tx> = a.steps().iter().map(|s| &s.tx).collect();
    let mut tb: Vec<&Tx> = b.steps().iter().map(|s| &s.tx).collect();
    ta.sort();
    tb.sort();
    if ta != tb {
        return Err(CommutativityError::NotPermutation);
    }
    Ok(a.final_state() == b.final_state())
}
