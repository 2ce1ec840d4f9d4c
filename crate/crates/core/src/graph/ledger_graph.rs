//! Explicit state graphs of the ledger over finite slot and transaction universes.

use std::collections::{BTreeSet, VecDeque};

use super::{PartialSieveHom, SimpleGraph};
use crate::ledger::{
    apply_tx, check_tx_with, AcceptAll, AdditionalChecks, CanonicalBytes, Slot, Tx, UtxoSet,
};

/// A triple `(slot, utxo, tx)` on which `check_tx` holds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LedgerVertex {
    pub slot: Slot,
    pub utxo: UtxoSet,
    pub tx: Tx,
}

impl CanonicalBytes for LedgerVertex {
    fn canonical_bytes(&self) -> Vec<u8> {
        let mut buf = self.slot.0.to_be_bytes().to_vec();
        let u = self.utxo.canonical_bytes();
        buf.extend_from_slice(&(u.len() as u64).to_be_bytes());
        buf.extend_from_slice(&u);
        buf.extend_from_slice(self.tx.id().as_bytes());
        buf
    }
}

pub fn build_ledger_graph(
    initial_utxos: &[UtxoSet],
    initial_slots: &[Slot],
    tx_universe: &[Tx],
    slot_universe: &[Slot],
) -> SimpleGraph<LedgerVertex> {
    build_ledger_graph_with(
        &AcceptAll,
        initial_utxos,
        initial_slots,
        tx_universe,
        slot_universe,
    )
}

/// Explores the ledger graph from the initial triples.
///
/// Vertices are the reachable triples passing `check_tx`; there is an edge
/// `(q, u, t) -> (q', u', t')` when `u' = apply_tx(u, t)` and `q <= q'`.
pub fn build_ledger_graph_with(
    hook: &dyn AdditionalChecks,
    initial_utxos: &[UtxoSet],
    initial_slots: &[Slot],
    tx_universe: &[Tx],
    slot_universe: &[Slot],
) -> SimpleGraph<LedgerVertex> {
    let slots: BTreeSet<Slot> = slot_universe.iter().copied().collect();
    let valid_from = |u: &UtxoSet, min_slot: Slot| -> Vec<LedgerVertex> {
        let mut out = Vec::new();
        for &q in slots.range(min_slot..) {
            for t in tx_universe {
                if check_tx_with(hook, q, u, t).is_ok() && apply_tx(u, t).is_ok() {
                    out.push(LedgerVertex {
                        slot: q,
                        utxo: u.clone(),
                        tx: t.clone(),
                    });
                }
            }
        }
        out
    };

    let mut g = SimpleGraph::new();
    let mut queue = VecDeque::new();
    for u in initial_utxos {
        for &q in initial_slots {
            for t in tx_universe {
                if check_tx_with(hook, q, u, t).is_ok() && apply_tx(u, t).is_ok() {
                    let v = LedgerVertex {
                        slot: q,
                        utxo: u.clone(),
                        tx: t.clone(),
                    };
                    if g.add_vertex(v.clone()) {
                        queue.push_back(v.clone());
                    }
                    g.mark_initial(v);
                }
            }
        }
    }
    while let Some(v) = queue.pop_front() {
        let next = apply_tx(&v.utxo, &v.tx).expect("vertices only hold applicable triples");
        for w in valid_from(&next, v.slot) {
            if g.add_vertex(w.clone()) {
                queue.push_back(w.clone());
            }
            g.add_edge(v.clone(), w);
        }
    }
    g
}

/// Projects the ledger graph onto its UTxO component.
///
/// The projected graph has one vertex per UTxO state occurring in `lambda`, an edge
/// `u -> u'` whenever some vertex `(q, u, t)` has `apply_tx(u, t) = u'` with `u'` a
/// vertex, and initial vertices `V' ∩ initial_utxos`. The returned map sends
/// `(q, u, t)` to `u`.
pub fn project_ledger_graph(
    lambda: &SimpleGraph<LedgerVertex>,
    initial_utxos: &[UtxoSet],
) -> (SimpleGraph<UtxoSet>, PartialSieveHom<LedgerVertex, UtxoSet>) {
    let mut g = SimpleGraph::new();
    for v in lambda.vertices() {
        g.add_vertex(v.utxo.clone());
    }
    for v in lambda.vertices() {
        if let Ok(next) = apply_tx(&v.utxo, &v.tx) {
            if g.contains(&next) {
                g.add_edge(v.utxo.clone(), next);
            }
        }
    }
    let present: Vec<UtxoSet> = initial_utxos
        .iter()
        .filter(|u| g.contains(u))
        .cloned()
        .collect();
    for u in present {
        g.mark_initial(u);
    }
    let phi = PartialSieveHom::tabulate(lambda, |v| Some(v.utxo.clone()));
    (g, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::check_hom;
    use crate::ledger::{mk_outs, Output, OutputRef, TokenId, TxInput, ValidityInterval, Value};

    fn genesis() -> Tx {
        let outs = (0..2)
            .map(|k| Output::new(vec![k], Value::single(TokenId::new("ada"), 5), vec![]))
            .collect();
        Tx::new(vec![], outs, ValidityInterval::always(), vec![]).unwrap()
    }

    fn spend(u: &UtxoSet, k: OutputRef, iv: (u64, u64), n_out: u8) -> Tx {
        let outs = (0..n_out)
            .map(|j| Output::new(vec![9, j], Value::new(), vec![]))
            .collect();
        Tx::new(
            vec![TxInput::new(k, u.get(&k).unwrap().clone())],
            outs,
            ValidityInterval::new(Slot(iv.0), Slot(iv.1)).unwrap(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn empty_universe_has_no_vertices() {
        let u0 = mk_outs(&genesis());
        let g = build_ledger_graph(&[u0], &[Slot(0)], &[], &[Slot(0)]);
        assert_eq!(g.vertex_count(), 0);
    }

    #[test]
    fn single_terminal_step() {
        let gt = genesis();
        let u0 = mk_outs(&gt);
        let g0 = UtxoSet::from_iter([(
            OutputRef::new(gt.id(), 0),
            u0.get(&OutputRef::new(gt.id(), 0)).unwrap().clone(),
        )]);
        let t = spend(&g0, OutputRef::new(gt.id(), 0), (0, 10), 0);
        let g = build_ledger_graph(&[g0], &[Slot(0)], &[t], &[Slot(0)]);
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.initial().len(), 1);
    }

    #[test]
    fn edges_respect_slot_order() {
        let gt = genesis();
        let u0 = mk_outs(&gt);
        let a = spend(&u0, OutputRef::new(gt.id(), 0), (0, 10), 1);
        let b = spend(&u0, OutputRef::new(gt.id(), 1), (0, 10), 1);
        let slots = [Slot(1), Slot(2)];
        let g = build_ledger_graph(
            std::slice::from_ref(&u0),
            &slots,
            &[a.clone(), b.clone()],
            &slots,
        );
        for (x, y) in g.edges() {
            assert!(x.slot <= y.slot);
        }
        // From (2, u0, a) the only successor is b at slot 2, never slot 1.
        let v = LedgerVertex {
            slot: Slot(2),
            utxo: u0.clone(),
            tx: a.clone(),
        };
        let succ: Vec<_> = g.successors(&v).collect();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].slot, Slot(2));

        let (lp, phi) = project_ledger_graph(&g, std::slice::from_ref(&u0));
        assert!(check_hom(&g, &lp, &phi).is_ok());
        assert_eq!(lp.initial().iter().collect::<Vec<_>>(), vec![&u0]);
        // (1,u0,a) and (2,u0,a) share u0.
        assert_eq!(phi.preimage(&u0).len(), 4);
    }
}
