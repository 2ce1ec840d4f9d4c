//! Hand-built runs with a prescribed dependency structure.

use super::run::{replay_sequence, AnnotatedRun};
use crate::ledger::{
    mk_outs, Output, OutputRef, Slot, TokenId, Tx, TxInput, ValidityInterval, Value,
};

/// Direct dependencies of the eight-transaction example.
pub const EIGHT_TX_DEPS: [&[usize]; 8] =
    [&[], &[], &[1], &[], &[0, 2, 3], &[2, 3], &[1, 3], &[5, 6]];

/// Builds a run whose transaction `i` spends exactly one output of each `j` in
/// `deps[i]`, applied in index order. Transactions without dependencies spend a
/// fresh output of a shared genesis transaction.
///
/// Returns the genesis transaction and the run. Panics if some `deps[i]` names an
/// index `>= i`.
pub fn run_from_deps(deps: &[&[usize]]) -> (Tx, AnnotatedRun) {
    let n = deps.len();
    let roots: Vec<usize> = (0..n).filter(|&i| deps[i].is_empty()).collect();
    let genesis = Tx::new(
        Vec::new(),
        roots
            .iter()
            .map(|&i| {
                Output::new(
                    b"genesis".to_vec(),
                    Value::single(TokenId::new("ada"), 10),
                    vec![i as u8],
                )
            })
            .collect(),
        ValidityInterval::always(),
        b"fixture-genesis".to_vec(),
    )
    .expect("inputless");
    let u0 = mk_outs(&genesis);

    let mut txs: Vec<Tx> = Vec::with_capacity(n);
    for i in 0..n {
        let inputs: Vec<TxInput> = if deps[i].is_empty() {
            let ix = roots.iter().position(|&r| r == i).expect("root") as u32;
            let key = OutputRef::new(genesis.id(), ix);
            vec![TxInput::new(
                key,
                u0.get(&key).expect("genesis output").clone(),
            )]
        } else {
            deps[i]
                .iter()
                .map(|&j| {
                    assert!(j < i, "dependency {j} of {i} must come earlier");
                    let t: &Tx = &txs[j];
                    let ix = consumer_slot(deps, j, i);
                    TxInput::new(OutputRef::new(t.id(), ix), t.outputs()[ix as usize].clone())
                })
                .collect()
        };
        // One output per consumer, then one that nobody spends.
        let consumers: Vec<usize> = (0..n).filter(|&k| deps[k].contains(&i)).collect();
        let mut outputs: Vec<Output> = consumers
            .iter()
            .map(|&k| Output::new(format!("to-{k}").into_bytes(), Value::new(), vec![i as u8]))
            .collect();
        outputs.push(Output::new(b"sink".to_vec(), Value::new(), vec![i as u8]));
        txs.push(
            Tx::new(inputs, outputs, ValidityInterval::always(), vec![i as u8])
                .expect("distinct inputs"),
        );
    }
    let run = replay_sequence(&u0, &vec![Slot(0); n], &txs).expect("fixture replays");
    (genesis, run)
}

/// Output index of `producer` that is reserved for `consumer`.
fn consumer_slot(deps: &[&[usize]], producer: usize, consumer: usize) -> u32 {
    (0..deps.len())
        .filter(|&k| deps[k].contains(&producer))
        .position(|k| k == consumer)
        .expect("consumer listed") as u32
}

pub fn eight_tx_run() -> (Tx, AnnotatedRun) {
    run_from_deps(&EIGHT_TX_DEPS)
}

/// `t_0 -> t_1 -> .. -> t_{n-1}`, each spending the previous one's output.
pub fn chain_run(n: usize) -> (Tx, AnnotatedRun) {
    let deps: Vec<Vec<usize>> = (0..n)
        .map(|i| if i == 0 { vec![] } else { vec![i - 1] })
        .collect();
    let refs: Vec<&[usize]> = deps.iter().map(Vec::as_slice).collect();
    run_from_deps(&refs)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::props::{build_tx_poset, canonical_presentation};

    #[test]
    fn eight_tx_dependencies_round_trip() {
        let (_, run) = eight_tx_run();
        let p = build_tx_poset(&run).unwrap();
        for (i, d) in EIGHT_TX_DEPS.iter().enumerate() {
            assert_eq!(p.deps(i), &d.iter().copied().collect::<BTreeSet<_>>());
        }
        assert_eq!(p.levels(), &[0, 0, 1, 0, 2, 2, 1, 3]);
        assert_eq!(canonical_presentation(&p), vec![0, 1, 3, 2, 6, 4, 5, 7]);
    }

    #[test]
    fn chain() {
        let (_, run) = chain_run(3);
        let p = build_tx_poset(&run).unwrap();
        assert_eq!(p.levels(), &[0, 1, 2]);
        assert_eq!(canonical_presentation(&p), vec![0, 1, 2]);
    }
}
