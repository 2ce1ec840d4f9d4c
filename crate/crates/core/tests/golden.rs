use utxo_lab::codec::vertex_id;
use utxo_lab::ledger::{
    apply_tx, Output, OutputRef, Slot, TokenId, Tx, TxHash, TxInput, UtxoSet, ValidityInterval,
    Value,
};

const TX_HASH: &str = "a5a0c6e08f0f6b7dde3e2d7dff78063d30df82797b864c7df34d44835a7f3806";
const UTXO_ID: &str = "80d0bd1cdd5e05a6";

fn fixture() -> (UtxoSet, Tx) {
    let r = OutputRef::new(TxHash([0x11; 32]), 2);
    let spent = Output::new(
        b"alice".to_vec(),
        Value::single(TokenId::new("ada"), 5),
        vec![],
    );
    let u: UtxoSet = [(r, spent.clone())].into_iter().collect();
    let tx = Tx::new(
        vec![TxInput::new(r, spent)],
        vec![Output::new(
            b"bob".to_vec(),
            Value::single(TokenId::new("ada"), 3).with(TokenId::new("NFT"), 1),
            b"d".to_vec(),
        )],
        ValidityInterval::new(Slot(1), Slot(10)).unwrap(),
        b"x".to_vec(),
    )
    .unwrap();
    (u, tx)
}

#[test]
fn transaction_hash_is_frozen() {
    let (_, tx) = fixture();
    assert_eq!(tx.id().to_hex(), TX_HASH);
    assert_eq!(TxHash::from_hex(TX_HASH).unwrap(), tx.id());
}

#[test]
fn utxo_vertex_id_is_frozen() {
    let (u, tx) = fixture();
    let next = apply_tx(&u, &tx).unwrap();
    assert_eq!(vertex_id(&next), UTXO_ID);
}

#[test]
fn hash_ignores_input_order() {
    let a = OutputRef::new(TxHash([1; 32]), 0);
    let b = OutputRef::new(TxHash([2; 32]), 0);
    let o = Output::new(vec![0], Value::new(), vec![]);
    let mk = |ins: Vec<OutputRef>| {
        Tx::new(
            ins.into_iter()
                .map(|r| TxInput::new(r, o.clone()))
                .collect(),
            vec![],
            ValidityInterval::always(),
            vec![],
        )
        .unwrap()
        .id()
    };
    assert_eq!(mk(vec![a, b]), mk(vec![b, a]));
}
