//! Maps between state spaces and their action on traces.

use std::fmt::Debug;

use serde::Serialize;

use super::metric::{ultra_distance, UltraDistance};
use super::{TraceError, TracePrefix};
use crate::exec::Exec;
use crate::graph::{PartialSieveHom, PathSource};

/// A partial map on states.
pub trait StateMap<S, T> {
    fn map_state(&self, s: &S) -> Option<T>;
}

impl<V: Ord + Clone + Debug, W: Ord + Clone + Debug> StateMap<V, W> for PartialSieveHom<V, W> {
    fn map_state(&self, s: &V) -> Option<W> {
        self.apply(s).cloned()
    }
}

impl<S, T, F: Fn(&S) -> Option<T>> StateMap<S, T> for F {
    fn map_state(&self, s: &S) -> Option<T> {
        self(s)
    }
}

/// Two prefixes whose distance is compared before and after a map.
pub type PrefixPair<S, L> = (TracePrefix<S, L>, TracePrefix<S, L>);

/// Maps every state of `prefix`; labels are dropped.
pub fn push_forward<S, L, T, M: StateMap<S, T> + ?Sized>(
    map: &M,
    prefix: &TracePrefix<S, L>,
) -> Result<TracePrefix<T>, TraceError> {
    let states = prefix
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| map.map_state(s).ok_or(TraceError::OutsideDomain(i)))
        .collect::<Result<Vec<_>, _>>()?;
    TracePrefix::new(states)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NonExpansionViolation {
    pub pair: usize,
    pub source: UltraDistance,
    pub image: UltraDistance,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NonExpansionReport {
    pub pairs: usize,
    pub checked: usize,
    /// Pairs whose source distance is only bounded.
    pub skipped_inexact: usize,
    /// Pairs with a state outside the map's domain.
    pub skipped_domain: Vec<usize>,
    pub violations: Vec<NonExpansionViolation>,
}

impl NonExpansionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `d(f a, f b) <= d(a, b)` on each pair whose source distance is exact,
/// with `f` applying `map` pointwise.
///
/// An image pair with no observed difference is bounded by `2^-n` for its shared
/// length `n`, which never exceeds an exact source distance over the same length.
pub fn check_non_expanding<S, L, T, M>(
    map: &M,
    pairs: &[PrefixPair<S, L>],
    exec: Exec,
) -> NonExpansionReport
where
    S: PartialEq + Sync,
    L: Sync,
    T: PartialEq,
    M: StateMap<S, T> + Sync + ?Sized,
{
    check_non_expanding_by(|p| push_forward(map, p).ok(), pairs, exec)
}

/// Like [`check_non_expanding`] for an arbitrary map on prefixes; `None` marks a
/// prefix outside the domain.
pub fn check_non_expanding_by<S, L, T, F>(
    f: F,
    pairs: &[PrefixPair<S, L>],
    exec: Exec,
) -> NonExpansionReport
where
    S: PartialEq + Sync,
    L: Sync,
    T: PartialEq,
    F: Fn(&TracePrefix<S, L>) -> Option<TracePrefix<T>> + Sync,
{
    // Per pair: None = outside domain, Some(None) = inexact, Some(Some(..)) = checked.
    let outcomes = exec.map(pairs, |(a, b)| {
        let (fa, fb) = (f(a)?, f(b)?);
        let src = ultra_distance(a, b);
        Some(src.exact().map(|ds| {
            let img = ultra_distance(&fa, &fb);
            (img.upper() > ds).then_some((src, img))
        }))
    });
    let mut r = NonExpansionReport {
        pairs: pairs.len(),
        ..Default::default()
    };
    for (pair, o) in outcomes.into_iter().enumerate() {
        match o {
            None => r.skipped_domain.push(pair),
            Some(None) => r.skipped_inexact += 1,
            Some(Some(bad)) => {
                r.checked += 1;
                if let Some((source, image)) = bad {
                    r.violations.push(NonExpansionViolation {
                        pair,
                        source,
                        image,
                    });
                }
            }
        }
    }
    r
}

/// Searches for a path `v_0 .. v_n` in `source`, starting at an initial vertex, whose
/// image under `map` equals `target[..=n]`.
pub fn has_truncated_lift<G, W, M>(
    source: &G,
    map: &M,
    target: &[W],
    n: usize,
) -> Result<Option<Vec<G::Vertex>>, TraceError>
where
    G: PathSource,
    W: PartialEq,
    M: StateMap<G::Vertex, W> + ?Sized,
{
    if target.len() < n + 1 {
        return Err(TraceError::TooShort {
            len: target.len(),
            n,
        });
    }
    let starts = source
        .initial_vertices()
        .ok_or(TraceError::UnsupportedEnumeration)?;
    let hits = |v: &G::Vertex, k: usize| map.map_state(v).is_some_and(|w| w == target[k]);
    let mut stack: Vec<Vec<G::Vertex>> = starts
        .into_iter()
        .filter(|v| source.contains_vertex(v) && source.is_initial_vertex(v) && hits(v, 0))
        .map(|v| vec![v])
        .collect();
    stack.reverse();
    while let Some(path) = stack.pop() {
        let k = path.len();
        if k == n + 1 {
            return Ok(Some(path));
        }
        let last = path.last().expect("non-empty");
        let mut next: Vec<_> = source
            .successors_of(last)
            .into_iter()
            .filter(|w| hits(w, k))
            .collect();
        next.reverse();
        for w in next {
            let mut p = path.clone();
            p.push(w);
            stack.push(p);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{IntensionalGraph, SimpleGraph};

    fn p(xs: &[u8]) -> TracePrefix<u8> {
        TracePrefix::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn identity_and_collapse_are_non_expanding() {
        let pairs = vec![(p(&[0, 1, 2]), p(&[0, 1, 3])), (p(&[0, 1]), p(&[0, 1]))];
        let id = |s: &u8| Some(*s);
        let r = check_non_expanding(&id, &pairs, Exec::Sequential);
        assert_eq!((r.checked, r.skipped_inexact), (1, 1));
        assert!(r.is_clean());
        let collapse = |_: &u8| Some(());
        assert!(check_non_expanding(&collapse, &pairs, Exec::Sequential).is_clean());
    }

    #[test]
    fn reversal_expands() {
        let pairs = vec![(p(&[0, 1, 2, 3]), p(&[0, 1, 2, 4]))];
        let rev =
            |t: &TracePrefix<u8>| TracePrefix::new(t.states().iter().rev().copied().collect()).ok();
        let r = check_non_expanding_by(rev, &pairs, Exec::Parallel);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(
            r.violations[0].image,
            UltraDistance::Exact(crate::trace::Dyadic::ONE)
        );
    }

    #[test]
    fn domain_gaps_are_skipped() {
        let pairs = vec![(p(&[0, 1]), p(&[0, 2]))];
        let f = |s: &u8| (*s < 2).then_some(*s);
        let r = check_non_expanding(&f, &pairs, Exec::Sequential);
        assert_eq!(r.skipped_domain, vec![0]);
    }

    #[test]
    fn lift_search() {
        let g = SimpleGraph::from_edges([], [(0u8, 1u8), (1, 2), (0, 3), (3, 2)], [0]);
        let parity = |v: &u8| Some(*v % 2);
        assert_eq!(
            has_truncated_lift(&g, &parity, &[0, 1, 0], 2).unwrap(),
            Some(vec![0, 1, 2])
        );
        assert_eq!(has_truncated_lift(&g, &parity, &[0, 0], 1).unwrap(), None);
        assert_eq!(
            has_truncated_lift(&g, &parity, &[0], 2),
            Err(TraceError::TooShort { len: 1, n: 2 })
        );
        let nat = IntensionalGraph::new(|_: &u64| true, |v| vec![v + 1], |v| *v == 0, None);
        let id = |v: &u64| Some(*v);
        assert_eq!(
            has_truncated_lift(&nat, &id, &[0u64], 0),
            Err(TraceError::UnsupportedEnumeration)
        );
    }
}
