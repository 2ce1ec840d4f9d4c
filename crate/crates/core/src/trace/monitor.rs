//! Safety properties as bad-prefix monitors.

use std::collections::BTreeSet;

use serde::Serialize;

use super::ledger_trace::LedgerLabel;
use super::TracePrefix;
use crate::ledger::{Tx, UtxoSet};

/// A monotone predicate on finite prefixes: once a prefix is bad, every extension
/// is bad too.
///
/// `labels` holds the labels of every step visible so far. It has either as many
/// entries as `states` minus one, or as many as `states` when the step leaving the
/// last state is already known.
pub trait SafetyMonitor<S, L> {
    fn name(&self) -> &str;
    fn is_bad(&self, states: &[S], labels: &[L]) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "index", rename_all = "kebab-case")]
pub enum MonitorVerdict {
    Clean,
    /// Smallest `n` such that the length-`n + 1` truncation is bad.
    ViolatedAt(usize),
}

fn truncation<S, L>(p: &TracePrefix<S, L>, n: usize) -> (&[S], &[L]) {
    let labels = p.labels();
    (&p.states()[..=n], &labels[..labels.len().min(n + 1)])
}

pub fn monitor_trace<S, L, M: SafetyMonitor<S, L> + ?Sized>(
    monitor: &M,
    prefix: &TracePrefix<S, L>,
) -> MonitorVerdict {
    for n in 0..prefix.len() {
        let (s, l) = truncation(prefix, n);
        if monitor.is_bad(s, l) {
            return MonitorVerdict::ViolatedAt(n);
        }
    }
    MonitorVerdict::Clean
}

/// Looks for a sample whose truncations go from bad back to good.
///
/// Returns `(sample, n)` where truncation `n` is good after an earlier bad one.
pub fn verify_monotone<S, L, M: SafetyMonitor<S, L> + ?Sized>(
    monitor: &M,
    samples: &[TracePrefix<S, L>],
) -> Result<(), (usize, usize)> {
    for (i, p) in samples.iter().enumerate() {
        let mut bad = false;
        for n in 0..p.len() {
            let (s, l) = truncation(p, n);
            let now = monitor.is_bad(s, l);
            if bad && !now {
                return Err((i, n));
            }
            bad |= now;
        }
    }
    Ok(())
}

fn has_duplicate<T: Ord>(xs: impl IntoIterator<Item = T>) -> bool {
    let mut seen = BTreeSet::new();
    xs.into_iter().any(|x| !seen.insert(x))
}

/// Flags a transaction submitted twice.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReplayMonitor;

impl SafetyMonitor<UtxoSet, LedgerLabel> for ReplayMonitor {
    fn name(&self) -> &str {
        "replay"
    }

    fn is_bad(&self, _: &[UtxoSet], labels: &[LedgerLabel]) -> bool {
        has_duplicate(labels.iter().map(|l| l.tx.id()))
    }
}

impl SafetyMonitor<UtxoSet, Tx> for ReplayMonitor {
    fn name(&self) -> &str {
        "replay"
    }

    fn is_bad(&self, _: &[UtxoSet], labels: &[Tx]) -> bool {
        has_duplicate(labels.iter().map(Tx::id))
    }
}

/// Flags a state visited twice.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrivialUpdateMonitor;

impl<S: Ord, L> SafetyMonitor<S, L> for TrivialUpdateMonitor {
    fn name(&self) -> &str {
        "trivial-update"
    }

    fn is_bad(&self, states: &[S], _: &[L]) -> bool {
        has_duplicate(states)
    }
}

/// Flags a state with no unspent outputs.
#[derive(Clone, Copy, Debug, Default)]
pub struct EmptyUtxoMonitor;

impl<L> SafetyMonitor<UtxoSet, L> for EmptyUtxoMonitor {
    fn name(&self) -> &str {
        "empty-utxo"
    }

    fn is_bad(&self, states: &[UtxoSet], _: &[L]) -> bool {
        states.iter().any(UtxoSet::is_empty)
    }
}

/// Builds a monitor from a per-state predicate, bad once any visited state is bad.
pub struct FnMonitor<F> {
    name: String,
    bad_state: F,
}

impl<F> FnMonitor<F> {
    pub fn new(name: impl Into<String>, bad_state: F) -> Self {
        FnMonitor {
            name: name.into(),
            bad_state,
        }
    }
}

impl<S, L, F: Fn(&S) -> bool> SafetyMonitor<S, L> for FnMonitor<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_bad(&self, states: &[S], _: &[L]) -> bool {
        states.iter().any(&self.bad_state)
    }
}
