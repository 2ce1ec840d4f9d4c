//! The dependency order of a run's transactions and its canonical presentation.

use std::collections::{BTreeSet, HashSet, VecDeque};

use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

use super::run::{replay_with, AnnotatedRun, ReplayError};
use crate::exec::Exec;
use crate::ledger::{AdditionalChecks, Slot};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PosetError {
    #[error("dependency cycle through transaction {0}")]
    Cycle(usize),
}

/// Dependencies between the transactions of a run.
///
/// `deps[i]` holds the `j` whose outputs transaction `i` spends. The closure of that
/// relation is the order every valid reordering has to respect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TxPoset {
    deps: Vec<BTreeSet<usize>>,
    below: Vec<BTreeSet<usize>>,
    hasse: Vec<BTreeSet<usize>>,
    levels: Vec<usize>,
}

impl TxPoset {
    /// Builds the order from direct dependencies.
    pub fn from_deps(deps: Vec<BTreeSet<usize>>) -> Result<Self, PosetError> {
        let n = deps.len();
        let mut below: Vec<Option<BTreeSet<usize>>> = vec![None; n];
        // Iterative DFS with an on-stack marker to catch cycles.
        let mut state = vec![0u8; n];
        for root in 0..n {
            if state[root] == 2 {
                continue;
            }
            let mut stack = vec![(root, false)];
            while let Some((v, done)) = stack.pop() {
                if done {
                    let mut b = BTreeSet::new();
                    for &j in &deps[v] {
                        b.insert(j);
                        b.extend(below[j].as_ref().expect("finished").iter().copied());
                    }
                    below[v] = Some(b);
                    state[v] = 2;
                    continue;
                }
                match state[v] {
                    2 => continue,
                    1 => return Err(PosetError::Cycle(v)),
                    _ => {}
                }
                state[v] = 1;
                stack.push((v, true));
                for &j in &deps[v] {
                    if j >= n {
                        continue;
                    }
                    match state[j] {
                        1 => return Err(PosetError::Cycle(j)),
                        0 => stack.push((j, false)),
                        _ => {}
                    }
                }
            }
        }
        let below: Vec<BTreeSet<usize>> =
            below.into_iter().map(Option::unwrap_or_default).collect();
        let hasse: Vec<BTreeSet<usize>> = (0..n)
            .map(|i| {
                below[i]
                    .iter()
                    .copied()
                    .filter(|&j| !below[i].iter().any(|&m| below[m].contains(&j)))
                    .collect()
            })
            .collect();
        let mut levels = vec![0usize; n];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| below[i].len());
        for &i in &order {
            levels[i] = hasse[i].iter().map(|&j| levels[j] + 1).max().unwrap_or(0);
        }
        Ok(TxPoset {
            deps,
            below,
            hasse,
            levels,
        })
    }

    pub fn len(&self) -> usize {
        self.deps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deps.is_empty()
    }

    /// `K_i`: the transactions whose outputs `i` spends.
    pub fn deps(&self, i: usize) -> &BTreeSet<usize> {
        &self.deps[i]
    }

    /// `j` has to be applied before `i`.
    pub fn precedes(&self, j: usize, i: usize) -> bool {
        self.below[i].contains(&j)
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.precedes(a, b) || self.precedes(b, a)
    }

    /// Covering pairs `(j, i)`: `j` precedes `i` with nothing in between.
    pub fn hasse_edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|i| self.hasse[i].iter().map(move |&j| (j, i)))
            .collect()
    }

    pub fn level(&self, i: usize) -> usize {
        self.levels[i]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn is_linear_extension(&self, order: &[usize]) -> bool {
        let n = self.len();
        if order.len() != n {
            return false;
        }
        let mut pos = vec![usize::MAX; n];
        for (p, &i) in order.iter().enumerate() {
            if i >= n || pos[i] != usize::MAX {
                return false;
            }
            pos[i] = p;
        }
        (0..n).all(|i| self.below[i].iter().all(|&j| pos[j] < pos[i]))
    }
}

/// `K_i = { j | r_i ∩ c_j ≠ ∅ }` for every transaction of the run.
pub fn build_tx_poset(run: &AnnotatedRun) -> Result<TxPoset, PosetError> {
    let n = run.len();
    let created: Vec<_> = (0..n).map(|j| run.created(j)).collect();
    let deps = (0..n)
        .map(|i| {
            let r = run.consumed(i);
            (0..n)
                .filter(|&j| j != i && !r.is_disjoint(&created[j]))
                .collect()
        })
        .collect();
    TxPoset::from_deps(deps)
}

/// Indices sorted by level, then by index.
pub fn canonical_presentation(poset: &TxPoset) -> Vec<usize> {
    (0..poset.len())
        .sorted_by_key(|&i| (poset.level(i), i))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Enumeration {
    pub orders: Vec<Vec<usize>>,
    /// More orders exist than the cap allowed.
    pub truncated: bool,
}

/// Orders reachable from the canonical presentation by swapping adjacent
/// transactions that do not depend on each other, up to `cap`, sorted.
pub fn enumerate_valid_permutations(poset: &TxPoset, cap: usize) -> Enumeration {
    let start = canonical_presentation(poset);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut truncated = false;
    if cap > 0 {
        seen.insert(start.clone());
        queue.push_back(start);
    } else {
        truncated = true;
    }
    'bfs: while let Some(order) = queue.pop_front() {
        for p in 0..order.len().saturating_sub(1) {
            if poset.comparable(order[p], order[p + 1]) {
                continue;
            }
            let mut next = order.clone();
            next.swap(p, p + 1);
            if seen.contains(&next) {
                continue;
            }
            if seen.len() == cap {
                truncated = true;
                break 'bfs;
            }
            seen.insert(next.clone());
            queue.push_back(next);
        }
    }
    let mut orders: Vec<_> = seen.into_iter().collect();
    orders.sort();
    Enumeration { orders, truncated }
}

/// Slots for replaying the run's transactions in `order`.
///
/// One slot inside every validity interval if there is one, otherwise the least
/// non-decreasing sequence, never earlier than the run's first slot.
pub fn assign_slots(run: &AnnotatedRun, order: &[usize]) -> Option<Vec<Slot>> {
    let base = run.steps().first().map_or(Slot(0), |s| s.slot);
    let ivs: Vec<_> = order
        .iter()
        .map(|&i| run.steps()[i].tx.validity())
        .collect();
    let q = ivs.iter().map(|v| v.start).fold(base, Slot::max);
    if ivs.iter().all(|v| q < v.end) {
        return Some(vec![q; order.len()]);
    }
    let mut prev = base;
    ivs.iter()
        .map(|v| {
            let q = prev.max(v.start);
            prev = q;
            (q < v.end).then_some(q)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PermutationError {
    #[error("{0:?} is not a permutation of the run's transactions")]
    NotPermutation(Vec<usize>),
    #[error("no slot sequence satisfies every validity interval")]
    NoSlots,
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Replays the run's transactions in `order` from its initial state.
pub fn replay_permutation(
    hook: &dyn AdditionalChecks,
    run: &AnnotatedRun,
    order: &[usize],
) -> Result<AnnotatedRun, PermutationError> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..run.len()).collect::<Vec<_>>() {
        return Err(PermutationError::NotPermutation(order.to_vec()));
    }
    let slots = assign_slots(run, order).ok_or(PermutationError::NoSlots)?;
    let txs: Vec<_> = order.iter().map(|&i| run.steps()[i].tx.clone()).collect();
    Ok(replay_with(hook, run.initial(), &slots, &txs)?)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CommutativityReport {
    pub permutations: usize,
    /// Orders that replay validly.
    pub valid: usize,
    /// Valid orders that are not linear extensions of the dependency order.
    pub unexpected_valid: Vec<Vec<usize>>,
    /// Linear extensions that fail to replay.
    pub unexpected_invalid: Vec<Vec<usize>>,
    /// Valid orders whose final state differs from the original.
    pub mismatches: Vec<Vec<usize>>,
}

impl CommutativityReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
            && self.unexpected_valid.is_empty()
            && self.unexpected_invalid.is_empty()
    }
}

/// Replays every permutation of the run and compares final states.
pub fn exhaustive_commutativity(
    hook: &dyn AdditionalChecks,
    run: &AnnotatedRun,
    exec: Exec,
) -> Result<CommutativityReport, PosetError> {
    let poset = build_tx_poset(run)?;
    let perms: Vec<Vec<usize>> = (0..run.len()).permutations(run.len()).collect();
    let outcomes = exec.map(&perms, |p| {
        let r = replay_permutation(hook, run, p).ok();
        (
            r.is_some(),
            poset.is_linear_extension(p),
            r.is_some_and(|r| r.final_state() == run.final_state()),
        )
    });
    let mut rep = CommutativityReport {
        permutations: perms.len(),
        ..Default::default()
    };
    for (p, (valid, ext, same)) in perms.into_iter().zip(outcomes) {
        if valid {
            rep.valid += 1;
            if !same {
                rep.mismatches.push(p.clone());
            }
            if !ext {
                rep.unexpected_valid.push(p);
            }
        } else if ext {
            rep.unexpected_invalid.push(p);
        }
    }
    Ok(rep)
}
