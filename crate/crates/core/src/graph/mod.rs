//! Simple directed graphs with distinguished initial vertices, sieves, and partial
//! sieve-defined homomorphisms.
//!
//! A *sieve* is a vertex set closed under outgoing edges. A partial sieve-defined
//! homomorphism is a vertex map defined on a sieve that sends edges to edges and
//! initial vertices to initial vertices. Finite graphs are [`SimpleGraph`]s; graphs
//! too large to materialize implement [`PathSource`] (see [`IntensionalGraph`]), and
//! only support path enumeration.

mod ledger_graph;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::sync::Arc;

use thiserror::Error;

pub use ledger_graph::{
    build_ledger_graph, build_ledger_graph_with, project_ledger_graph, LedgerVertex,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {0} is not a vertex of the graph")]
    NotSubset(String),
    #[error("argument is not a sieve: edge {0} -> {1} leaves it")]
    NotASieve(String, String),
    #[error("target graph of the first morphism differs from the source of the second")]
    GraphMismatch,
    #[error("initial vertices are not finitely enumerable")]
    UnsupportedEnumeration,
    #[error("path depth must be at least 1")]
    ZeroDepth,
    #[error("homomorphism check failed: {0}")]
    InvalidHom(String),
}

/// A directed graph with at most one edge per ordered pair (self-loops allowed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph<V: Ord> {
    succ: BTreeMap<V, BTreeSet<V>>,
    initial: BTreeSet<V>,
}

impl<V: Ord> Default for SimpleGraph<V> {
    fn default() -> Self {
        SimpleGraph {
            succ: BTreeMap::new(),
            initial: BTreeSet::new(),
        }
    }
}

impl<V: Ord + Clone + Debug> SimpleGraph<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from an edge list; every endpoint and initial vertex is added.
    pub fn from_edges(
        vertices: impl IntoIterator<Item = V>,
        edges: impl IntoIterator<Item = (V, V)>,
        initial: impl IntoIterator<Item = V>,
    ) -> Self {
        let mut g = SimpleGraph::new();
        for v in vertices {
            g.add_vertex(v);
        }
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        for v in initial {
            g.mark_initial(v);
        }
        g
    }

    pub fn add_vertex(&mut self, v: V) -> bool {
        if self.succ.contains_key(&v) {
            return false;
        }
        self.succ.insert(v, BTreeSet::new());
        true
    }

    /// Adds `a -> b`, adding missing endpoints. Returns false if the edge existed.
    pub fn add_edge(&mut self, a: V, b: V) -> bool {
        self.add_vertex(b.clone());
        self.succ.entry(a).or_default().insert(b)
    }

    pub fn mark_initial(&mut self, v: V) {
        self.add_vertex(v.clone());
        self.initial.insert(v);
    }

    pub fn contains(&self, v: &V) -> bool {
        self.succ.contains_key(v)
    }

    pub fn has_edge(&self, a: &V, b: &V) -> bool {
        self.succ.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn vertices(&self) -> impl Iterator<Item = &V> {
        self.succ.keys()
    }

    pub fn vertex_set(&self) -> BTreeSet<V> {
        self.succ.keys().cloned().collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.succ.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&V, &V)> {
        self.succ
            .iter()
            .flat_map(|(a, bs)| bs.iter().map(move |b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.values().map(BTreeSet::len).sum()
    }

    pub fn successors(&self, v: &V) -> impl Iterator<Item = &V> {
        self.succ.get(v).into_iter().flatten()
    }

    pub fn initial(&self) -> &BTreeSet<V> {
        &self.initial
    }

    pub fn is_initial(&self, v: &V) -> bool {
        self.initial.contains(v)
    }

    fn check_subset(&self, subset: &BTreeSet<V>) -> Result<(), GraphError> {
        match subset.iter().find(|v| !self.contains(v)) {
            Some(v) => Err(GraphError::NotSubset(format!("{v:?}"))),
            None => Ok(()),
        }
    }

    /// The first edge leaving `subset`, if any.
    pub fn sieve_violation(&self, subset: &BTreeSet<V>) -> Result<Option<(V, V)>, GraphError> {
        self.check_subset(subset)?;
        for v in subset {
            if let Some(w) = self.successors(v).find(|w| !subset.contains(*w)) {
                return Ok(Some((v.clone(), w.clone())));
            }
        }
        Ok(None)
    }

    pub fn is_sieve(&self, subset: &BTreeSet<V>) -> Result<bool, GraphError> {
        Ok(self.sieve_violation(subset)?.is_none())
    }

    fn require_sieve(&self, s: &BTreeSet<V>) -> Result<(), GraphError> {
        match self.sieve_violation(s)? {
            Some((a, b)) => Err(GraphError::NotASieve(format!("{a:?}"), format!("{b:?}"))),
            None => Ok(()),
        }
    }

    /// Intersection of two sieves, which is again a sieve.
    pub fn intersect_sieves(
        &self,
        s1: &BTreeSet<V>,
        s2: &BTreeSet<V>,
    ) -> Result<BTreeSet<V>, GraphError> {
        self.require_sieve(s1)?;
        self.require_sieve(s2)?;
        Ok(s1.intersection(s2).cloned().collect())
    }

    /// Full subgraph on `subset`; initial vertices are restricted to it.
    pub fn full_subgraph(&self, subset: &BTreeSet<V>) -> Result<SimpleGraph<V>, GraphError> {
        self.check_subset(subset)?;
        let succ = subset
            .iter()
            .map(|v| {
                let out = self
                    .successors(v)
                    .filter(|w| subset.contains(*w))
                    .cloned()
                    .collect();
                (v.clone(), out)
            })
            .collect();
        let initial = self.initial.intersection(subset).cloned().collect();
        Ok(SimpleGraph { succ, initial })
    }

    /// Vertices reachable from the initial vertices.
    pub fn reachable_from_initial(&self) -> BTreeSet<V> {
        let mut seen: BTreeSet<V> = BTreeSet::new();
        let mut stack: Vec<V> = self.initial.iter().cloned().collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v.clone()) {
                stack.extend(self.successors(&v).filter(|w| !seen.contains(*w)).cloned());
            }
        }
        seen
    }
}

/// Reason a vertex map fails to be a partial sieve-defined homomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HomViolation<V: Debug, W: Debug> {
    #[error("domain vertex {0:?} is not a source vertex")]
    DomainOutsideSource(V),
    #[error("image {1:?} of {0:?} is not a target vertex")]
    ImageOutsideTarget(V, W),
    #[error("domain is not a sieve: edge {0:?} -> {1:?} leaves it")]
    NotASieve(V, V),
    #[error("edge {0:?} -> {1:?} maps to {2:?} -> {3:?}, which is not a target edge")]
    EdgeNotPreserved(V, V, W, W),
    #[error("initial vertex {0:?} is outside the domain")]
    InitialNotInDomain(V),
    #[error("initial vertex {0:?} maps to non-initial {1:?}")]
    InitialNotPreserved(V, W),
}

impl<V: Debug, W: Debug> HomViolation<V, W> {
    pub fn code(&self) -> &'static str {
        match self {
            HomViolation::DomainOutsideSource(_) => "domain-outside-source",
            HomViolation::ImageOutsideTarget(..) => "image-outside-target",
            HomViolation::NotASieve(..) => "not-a-sieve",
            HomViolation::EdgeNotPreserved(..) => "edge-not-preserved",
            HomViolation::InitialNotInDomain(_) => "initial-not-in-domain",
            HomViolation::InitialNotPreserved(..) => "initial-not-preserved",
        }
    }
}

/// A partial vertex map; its domain is the key set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialSieveHom<V: Ord, W> {
    map: BTreeMap<V, W>,
}

impl<V: Ord + Clone + Debug, W: Ord + Clone + Debug> PartialSieveHom<V, W> {
    pub fn from_map(map: BTreeMap<V, W>) -> Self {
        PartialSieveHom { map }
    }

    /// Tabulates `f` over the vertices of `source` on which it is defined.
    pub fn tabulate(source: &SimpleGraph<V>, f: impl Fn(&V) -> Option<W>) -> Self {
        let map = source
            .vertices()
            .filter_map(|v| f(v).map(|w| (v.clone(), w)))
            .collect();
        PartialSieveHom { map }
    }

    pub fn apply(&self, v: &V) -> Option<&W> {
        self.map.get(v)
    }

    pub fn in_domain(&self, v: &V) -> bool {
        self.map.contains_key(v)
    }

    pub fn domain(&self) -> BTreeSet<V> {
        self.map.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&V, &W)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Vertices of the domain mapping to `w`.
    pub fn preimage(&self, w: &W) -> Vec<&V> {
        self.map
            .iter()
            .filter(|(_, x)| *x == w)
            .map(|(v, _)| v)
            .collect()
    }
}

impl<V: Ord + Clone + Debug> PartialSieveHom<V, V> {
    pub fn identity(g: &SimpleGraph<V>) -> Self {
        PartialSieveHom {
            map: g.vertices().map(|v| (v.clone(), v.clone())).collect(),
        }
    }
}

/// Checks every defining clause of a partial sieve-defined homomorphism between
/// finite graphs; the error carries a witness.
pub fn check_hom<V, W>(
    source: &SimpleGraph<V>,
    target: &SimpleGraph<W>,
    hom: &PartialSieveHom<V, W>,
) -> Result<(), HomViolation<V, W>>
where
    V: Ord + Clone + Debug,
    W: Ord + Clone + Debug,
{
    for (v, w) in hom.iter() {
        if !source.contains(v) {
            return Err(HomViolation::DomainOutsideSource(v.clone()));
        }
        if !target.contains(w) {
            return Err(HomViolation::ImageOutsideTarget(v.clone(), w.clone()));
        }
    }
    for (v, w) in hom.iter() {
        for v2 in source.successors(v) {
            let Some(w2) = hom.apply(v2) else {
                return Err(HomViolation::NotASieve(v.clone(), v2.clone()));
            };
            if !target.has_edge(w, w2) {
                return Err(HomViolation::EdgeNotPreserved(
                    v.clone(),
                    v2.clone(),
                    w.clone(),
                    w2.clone(),
                ));
            }
        }
    }
    for v in source.initial() {
        match hom.apply(v) {
            None => return Err(HomViolation::InitialNotInDomain(v.clone())),
            Some(w) if !target.is_initial(w) => {
                return Err(HomViolation::InitialNotPreserved(v.clone(), w.clone()))
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// `g ∘ f`, defined on `Def f ∩ f⁻¹(Def g)`.
pub fn compose_homs<U, V, W>(
    f: &PartialSieveHom<U, V>,
    g: &PartialSieveHom<V, W>,
) -> PartialSieveHom<U, W>
where
    U: Ord + Clone + Debug,
    V: Ord + Clone + Debug,
    W: Ord + Clone + Debug,
{
    let map = f
        .iter()
        .filter_map(|(u, v)| g.apply(v).map(|w| (u.clone(), w.clone())))
        .collect();
    PartialSieveHom { map }
}

/// A homomorphism together with its source and target graphs.
#[derive(Clone, Debug)]
pub struct Morphism<'a, V: Ord, W: Ord> {
    pub source: &'a SimpleGraph<V>,
    pub target: &'a SimpleGraph<W>,
    pub hom: PartialSieveHom<V, W>,
}

impl<'a, V, W> Morphism<'a, V, W>
where
    V: Ord + Clone + Debug,
    W: Ord + Clone + Debug,
{
    pub fn new(
        source: &'a SimpleGraph<V>,
        target: &'a SimpleGraph<W>,
        hom: PartialSieveHom<V, W>,
    ) -> Result<Self, GraphError> {
        check_hom(source, target, &hom).map_err(|e| GraphError::InvalidHom(e.to_string()))?;
        Ok(Morphism {
            source,
            target,
            hom,
        })
    }

    /// `next ∘ self`; the graphs must line up.
    pub fn then<X: Ord + Clone + Debug>(
        &self,
        next: &Morphism<'a, W, X>,
    ) -> Result<Morphism<'a, V, X>, GraphError> {
        if self.target != next.source {
            return Err(GraphError::GraphMismatch);
        }
        Ok(Morphism {
            source: self.source,
            target: next.target,
            hom: compose_homs(&self.hom, &next.hom),
        })
    }
}

/// Anything paths can be enumerated from.
pub trait PathSource {
    type Vertex: Ord + Clone + Debug;

    fn contains_vertex(&self, v: &Self::Vertex) -> bool;
    fn successors_of(&self, v: &Self::Vertex) -> Vec<Self::Vertex>;
    fn is_initial_vertex(&self, v: &Self::Vertex) -> bool;
    /// `None` when the initial vertices cannot be listed finitely.
    fn initial_vertices(&self) -> Option<Vec<Self::Vertex>>;
}

impl<V: Ord + Clone + Debug> PathSource for SimpleGraph<V> {
    type Vertex = V;

    fn contains_vertex(&self, v: &V) -> bool {
        self.contains(v)
    }

    fn successors_of(&self, v: &V) -> Vec<V> {
        self.successors(v).cloned().collect()
    }

    fn is_initial_vertex(&self, v: &V) -> bool {
        self.is_initial(v)
    }

    fn initial_vertices(&self) -> Option<Vec<V>> {
        Some(self.initial.iter().cloned().collect())
    }
}

type Pred<V> = Arc<dyn Fn(&V) -> bool + Send + Sync>;
type Succ<V> = Arc<dyn Fn(&V) -> Vec<V> + Send + Sync>;

/// A graph given by functions rather than vertex and edge sets.
#[derive(Clone)]
pub struct IntensionalGraph<V> {
    contains: Pred<V>,
    successors: Succ<V>,
    is_initial: Pred<V>,
    initial: Option<Vec<V>>,
}

impl<V> IntensionalGraph<V> {
    /// `initial` lists the initial vertices when there are finitely many.
    pub fn new(
        contains: impl Fn(&V) -> bool + Send + Sync + 'static,
        successors: impl Fn(&V) -> Vec<V> + Send + Sync + 'static,
        is_initial: impl Fn(&V) -> bool + Send + Sync + 'static,
        initial: Option<Vec<V>>,
    ) -> Self {
        IntensionalGraph {
            contains: Arc::new(contains),
            successors: Arc::new(successors),
            is_initial: Arc::new(is_initial),
            initial,
        }
    }
}

impl<V: Ord + Clone + Debug> PathSource for IntensionalGraph<V> {
    type Vertex = V;

    fn contains_vertex(&self, v: &V) -> bool {
        (self.contains)(v)
    }

    fn successors_of(&self, v: &V) -> Vec<V> {
        (self.successors)(v)
            .into_iter()
            .filter(|w| (self.contains)(w))
            .collect()
    }

    fn is_initial_vertex(&self, v: &V) -> bool {
        (self.is_initial)(v)
    }

    fn initial_vertices(&self) -> Option<Vec<V>> {
        self.initial.clone()
    }
}

/// All paths with `depth` vertices (`depth - 1` edges) starting at an initial vertex.
pub fn enumerate_paths<G: PathSource>(
    g: &G,
    depth: usize,
) -> Result<BTreeSet<Vec<G::Vertex>>, GraphError> {
    if depth == 0 {
        return Err(GraphError::ZeroDepth);
    }
    let starts = g
        .initial_vertices()
        .ok_or(GraphError::UnsupportedEnumeration)?;
    let mut frontier: Vec<Vec<G::Vertex>> = starts
        .into_iter()
        .filter(|v| g.contains_vertex(v) && g.is_initial_vertex(v))
        .map(|v| vec![v])
        .collect();
    for _ in 1..depth {
        frontier = frontier
            .into_iter()
            .flat_map(|p| {
                let last = p.last().expect("paths are non-empty").clone();
                g.successors_of(&last).into_iter().map(move |w| {
                    let mut q = p.clone();
                    q.push(w);
                    q
                })
            })
            .collect();
    }
    Ok(frontier.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(edges: &[(u8, u8)], init: &[u8]) -> SimpleGraph<u8> {
        SimpleGraph::from_edges([], edges.iter().copied(), init.iter().copied())
    }

    fn set(xs: &[u8]) -> BTreeSet<u8> {
        xs.iter().copied().collect()
    }

    #[test]
    fn sieve_examples() {
        let gr = g(&[(0, 1), (1, 2), (3, 2)], &[0]);
        assert!(gr.is_sieve(&gr.vertex_set()).unwrap());
        assert!(gr.is_sieve(&set(&[2])).unwrap());
        assert!(!gr.is_sieve(&set(&[0])).unwrap());
        assert_eq!(gr.sieve_violation(&set(&[0])).unwrap(), Some((0, 1)));
        assert!(matches!(
            gr.is_sieve(&set(&[9])),
            Err(GraphError::NotSubset(_))
        ));
    }

    #[test]
    fn intersect_sieve_cases() {
        let gr = g(&[(0, 1), (1, 2)], &[0]);
        let s = set(&[1, 2]);
        assert_eq!(gr.intersect_sieves(&gr.vertex_set(), &s).unwrap(), s);
        let two = g(&[(0, 1), (0, 2)], &[0]);
        assert!(two
            .intersect_sieves(&set(&[1]), &set(&[2]))
            .unwrap()
            .is_empty());
        assert!(gr.intersect_sieves(&set(&[0]), &s).is_err());
    }

    #[test]
    fn identity_and_broken_homs() {
        let gr = g(&[(0, 1), (1, 0), (1, 1)], &[0]);
        assert!(check_hom(&gr, &gr, &PartialSieveHom::identity(&gr)).is_ok());

        // a -> b collapsed onto a vertex with no self-loop.
        let src = g(&[(0, 1)], &[0]);
        let tgt = g(&[], &[5]);
        let collapse = PartialSieveHom::from_map([(0, 5), (1, 5)].into_iter().collect());
        let err = check_hom(&src, &tgt, &collapse).unwrap_err();
        assert_eq!(err, HomViolation::EdgeNotPreserved(0, 1, 5, 5));

        let partial = PartialSieveHom::from_map([(0u8, 0u8)].into_iter().collect());
        let err = check_hom(&src, &src, &partial).unwrap_err();
        assert_eq!(err, HomViolation::NotASieve(0, 1));

        let sink_only = PartialSieveHom::from_map([(1u8, 1u8)].into_iter().collect());
        assert_eq!(
            check_hom(&src, &src, &sink_only).unwrap_err().code(),
            "initial-not-in-domain"
        );
    }

    #[test]
    fn composition_with_identity_and_mismatch() {
        let a = g(&[(0, 1), (1, 1)], &[0]);
        let b = g(&[(7, 7)], &[7]);
        let f = PartialSieveHom::tabulate(&a, |_| Some(7u8));
        assert!(check_hom(&a, &b, &f).is_ok());
        let id = PartialSieveHom::identity(&b);
        assert_eq!(compose_homs(&f, &id), f);

        let fm = Morphism::new(&a, &b, f.clone()).unwrap();
        let am = Morphism::new(&a, &a, PartialSieveHom::identity(&a)).unwrap();
        assert!(am.then(&fm).is_ok());
        assert_eq!(fm.then(&am).unwrap_err(), GraphError::GraphMismatch);
    }

    #[test]
    fn path_enumeration() {
        let loop1 = g(&[(0, 0)], &[0]);
        assert_eq!(
            enumerate_paths(&loop1, 3).unwrap(),
            [vec![0, 0, 0]].into_iter().collect()
        );
        let cyc = g(&[(0, 1), (1, 0)], &[0]);
        assert_eq!(
            enumerate_paths(&cyc, 4).unwrap(),
            [vec![0, 1, 0, 1]].into_iter().collect()
        );
        let dag = g(&[(0, 1), (1, 2), (0, 2)], &[0]);
        assert!(enumerate_paths(&dag, 4).unwrap().is_empty());
        assert_eq!(enumerate_paths(&dag, 0), Err(GraphError::ZeroDepth));
    }

    #[test]
    fn intensional_paths_over_naturals() {
        let nat =
            IntensionalGraph::new(|_: &u64| true, |v| vec![v + 1], |v| *v == 0, Some(vec![0]));
        assert_eq!(
            enumerate_paths(&nat, 4).unwrap(),
            [vec![0, 1, 2, 3]].into_iter().collect()
        );
        let unbounded = IntensionalGraph::new(|_: &u64| true, |v| vec![v + 1], |_| true, None);
        assert_eq!(
            enumerate_paths(&unbounded, 2),
            Err(GraphError::UnsupportedEnumeration)
        );
    }
}
