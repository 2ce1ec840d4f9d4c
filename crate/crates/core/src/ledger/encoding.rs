//! Canonical byte encoding used for hashing and vertex identifiers.
//!
//! Layout (all naturals are unsigned 64-bit big-endian):
//!
//! ```text
//! nat(n)        = n as 8 bytes, big-endian
//! bytes(b)      = nat(len b) || b
//! hash(h)       = 32 raw bytes
//! oref(r)       = hash(r.tx) || nat(r.ix)
//! value(v)      = nat(#tokens) || for each token ascending: bytes(token) || nat(qty)
//! output(o)     = bytes(o.address) || value(o.value) || bytes(o.datum)
//! tx(t)         = nat(#inputs)  || for each input ascending by oref: oref || output
//!                 nat(#outputs) || for each output in list order: output
//!                 nat(start) || nat(end) || bytes(additional_data)
//! utxo(u)       = nat(#entries) || for each entry ascending by oref: oref || output
//! ```

use super::{Output, OutputRef, Tx, UtxoSet, Value};

fn put_nat(buf: &mut Vec<u8>, n: u64) {
    buf.extend_from_slice(&n.to_be_bytes());
}

fn put_bytes(buf: &mut Vec<u8>, b: &[u8]) {
    put_nat(buf, b.len() as u64);
    buf.extend_from_slice(b);
}

fn put_oref(buf: &mut Vec<u8>, r: &OutputRef) {
    buf.extend_from_slice(r.tx.as_bytes());
    put_nat(buf, u64::from(r.ix));
}

fn put_value(buf: &mut Vec<u8>, v: &Value) {
    put_nat(buf, v.len() as u64);
    for (token, qty) in v.iter() {
        put_bytes(buf, &token.0);
        put_nat(buf, qty);
    }
}

fn put_output(buf: &mut Vec<u8>, o: &Output) {
    put_bytes(buf, &o.address);
    put_value(buf, &o.value);
    put_bytes(buf, &o.datum);
}

/// The byte string hashed by [`super::hash_tx`].
pub fn canonical_tx_bytes(tx: &Tx) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 96 * (tx.inputs.len() + tx.outputs.len()));
    put_nat(&mut buf, tx.inputs.len() as u64);
    // `Tx::new` keeps inputs sorted by output reference.
    for i in &tx.inputs {
        put_oref(&mut buf, &i.output_ref);
        put_output(&mut buf, &i.output);
    }
    put_nat(&mut buf, tx.outputs.len() as u64);
    for o in &tx.outputs {
        put_output(&mut buf, o);
    }
    put_nat(&mut buf, tx.validity.start.0);
    put_nat(&mut buf, tx.validity.end.0);
    put_bytes(&mut buf, &tx.additional_data);
    buf
}

pub fn canonical_utxo_bytes(u: &UtxoSet) -> Vec<u8> {
    let mut buf = Vec::new();
    put_nat(&mut buf, u.len() as u64);
    for (k, o) in u.iter() {
        put_oref(&mut buf, k);
        put_output(&mut buf, o);
    }
    buf
}

/// Values with a stable canonical encoding, used to derive opaque vertex ids.
pub trait CanonicalBytes {
    fn canonical_bytes(&self) -> Vec<u8>;
}

impl CanonicalBytes for Tx {
    fn canonical_bytes(&self) -> Vec<u8> {
        canonical_tx_bytes(self)
    }
}

impl CanonicalBytes for UtxoSet {
    fn canonical_bytes(&self) -> Vec<u8> {
        canonical_utxo_bytes(self)
    }
}

impl CanonicalBytes for u64 {
    fn canonical_bytes(&self) -> Vec<u8> {
        self.to_be_bytes().to_vec()
    }
}

impl CanonicalBytes for super::Slot {
    fn canonical_bytes(&self) -> Vec<u8> {
        self.0.to_be_bytes().to_vec()
    }
}

impl<A: CanonicalBytes, B: CanonicalBytes> CanonicalBytes for (A, B) {
    fn canonical_bytes(&self) -> Vec<u8> {
        let a = self.0.canonical_bytes();
        let b = self.1.canonical_bytes();
        let mut buf = Vec::with_capacity(16 + a.len() + b.len());
        put_bytes(&mut buf, &a);
        put_bytes(&mut buf, &b);
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{Slot, TokenId, TxHash, TxInput, ValidityInterval};

    #[test]
    fn empty_tx_layout() {
        let t = Tx::new(
            vec![],
            vec![],
            ValidityInterval::new(Slot(1), Slot(2)).unwrap(),
            vec![],
        )
        .unwrap();
        let b = canonical_tx_bytes(&t);
        let mut expect = vec![0u8; 8];
        expect.extend_from_slice(&[0; 8]);
        expect.extend_from_slice(&1u64.to_be_bytes());
        expect.extend_from_slice(&2u64.to_be_bytes());
        expect.extend_from_slice(&[0; 8]);
        assert_eq!(b, expect);
    }

    #[test]
    fn input_layout() {
        let r = OutputRef::new(TxHash([7; 32]), 3);
        let o = Output::new(
            vec![0xaa],
            Value::single(TokenId::new(vec![0x01]), 5),
            vec![],
        );
        let t = Tx::new(
            vec![TxInput::new(r, o)],
            vec![],
            ValidityInterval::always(),
            vec![0xff],
        )
        .unwrap();
        let b = canonical_tx_bytes(&t);
        let mut e = Vec::new();
        e.extend_from_slice(&1u64.to_be_bytes());
        e.extend_from_slice(&[7; 32]);
        e.extend_from_slice(&3u64.to_be_bytes());
        e.extend_from_slice(&1u64.to_be_bytes());
        e.push(0xaa);
        e.extend_from_slice(&1u64.to_be_bytes());
        e.extend_from_slice(&1u64.to_be_bytes());
        e.push(0x01);
        e.extend_from_slice(&5u64.to_be_bytes());
        e.extend_from_slice(&0u64.to_be_bytes());
        e.extend_from_slice(&0u64.to_be_bytes());
        e.extend_from_slice(&0u64.to_be_bytes());
        e.extend_from_slice(&u64::MAX.to_be_bytes());
        e.extend_from_slice(&1u64.to_be_bytes());
        e.push(0xff);
        assert_eq!(b, e);
    }
}
