//! The UTxO ledger transition system.
//!
//! A ledger state is a [`UtxoSet`]; applying a [`Tx`] at a [`Slot`] removes the
//! entries named by the transaction inputs and adds one entry per output, keyed by
//! the transaction hash and the output position. [`step_ledger`] is the single
//! transition rule: it accepts a triple only when [`check_tx`] holds.

mod encoding;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::hex_bytes;

pub use encoding::{canonical_tx_bytes, canonical_utxo_bytes, CanonicalBytes};

/// Length in bytes of a transaction hash.
pub const HASH_LEN: usize = 32;

/// A transaction hash (SHA-256 of the canonical transaction encoding).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxHash(pub [u8; HASH_LEN]);

impl TxHash {
    pub fn as_bytes(&self) -> &[u8; HASH_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, LedgerError> {
        let raw = hex::decode(s).map_err(|_| LedgerError::BadHash(s.to_owned()))?;
        let arr: [u8; HASH_LEN] = raw
            .try_into()
            .map_err(|_| LedgerError::BadHash(s.to_owned()))?;
        Ok(TxHash(arr))
    }
}

impl fmt::Debug for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxHash({}..)", &self.to_hex()[..12])
    }
}

impl fmt::Display for TxHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for TxHash {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TxHash {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TxHash::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Key of a UTxO entry: the producing transaction's hash and the output position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutputRef {
    pub tx: TxHash,
    pub ix: u32,
}

impl OutputRef {
    pub fn new(tx: TxHash, ix: u32) -> Self {
        OutputRef { tx, ix }
    }
}

impl fmt::Display for OutputRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", &self.tx.to_hex()[..16], self.ix)
    }
}

/// Slot number; the ledger's notion of time.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Slot(pub u64);

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Half-open slot interval `[start, end)`. An interval with `start == end` is empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValidityInterval {
    pub start: Slot,
    pub end: Slot,
}

impl ValidityInterval {
    pub fn new(start: Slot, end: Slot) -> Result<Self, LedgerError> {
        if start > end {
            return Err(LedgerError::InvalidInterval { start, end });
        }
        Ok(ValidityInterval { start, end })
    }

    /// Interval accepting every slot the encoding can express.
    pub fn always() -> Self {
        ValidityInterval {
            start: Slot(0),
            end: Slot(u64::MAX),
        }
    }

    pub fn contains(&self, slot: Slot) -> bool {
        self.start <= slot && slot < self.end
    }
}

/// Token identifier inside a [`Value`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub Vec<u8>);

impl TokenId {
    pub fn new(raw: impl Into<Vec<u8>>) -> Self {
        TokenId(raw.into())
    }
}

impl fmt::Debug for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match std::str::from_utf8(&self.0) {
            Ok(s) if s.chars().all(|c| c.is_ascii_graphic()) => write!(f, "TokenId({s})"),
            _ => write!(f, "TokenId(0x{})", hex::encode(&self.0)),
        }
    }
}

/// Multi-token quantity map. Zero quantities are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, u64>", into = "BTreeMap<String, u64>")]
pub struct Value(BTreeMap<TokenId, u64>);

impl Value {
    pub fn new() -> Self {
        Value::default()
    }

    pub fn single(token: TokenId, qty: u64) -> Self {
        let mut v = Value::new();
        v.insert(token, qty);
        v
    }

    /// Sets the quantity of `token`; a zero quantity removes it.
    pub fn insert(&mut self, token: TokenId, qty: u64) {
        if qty == 0 {
            self.0.remove(&token);
        } else {
            self.0.insert(token, qty);
        }
    }

    pub fn with(mut self, token: TokenId, qty: u64) -> Self {
        self.insert(token, qty);
        self
    }

    pub fn quantity(&self, token: &TokenId) -> u64 {
        self.0.get(token).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TokenId, u64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<BTreeMap<String, u64>> for Value {
    type Error = hex::FromHexError;

    fn try_from(raw: BTreeMap<String, u64>) -> Result<Self, Self::Error> {
        let mut v = Value::new();
        for (k, q) in raw {
            v.insert(TokenId(hex::decode(&k)?), q);
        }
        Ok(v)
    }
}

impl From<Value> for BTreeMap<String, u64> {
    fn from(v: Value) -> Self {
        v.0.into_iter()
            .map(|(k, q)| (hex::encode(k.0), q))
            .collect()
    }
}

/// A transaction output: an owner address, a token bundle and an opaque datum.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Output {
    #[serde(with = "hex_bytes")]
    pub address: Vec<u8>,
    pub value: Value,
    #[serde(with = "hex_bytes")]
    pub datum: Vec<u8>,
}

impl Output {
    pub fn new(address: impl Into<Vec<u8>>, value: Value, datum: impl Into<Vec<u8>>) -> Self {
        Output {
            address: address.into(),
            value,
            datum: datum.into(),
        }
    }
}

/// The ledger state: a finite map from output references to outputs.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<UtxoEntry>", try_from = "Vec<UtxoEntry>")]
pub struct UtxoSet(BTreeMap<OutputRef, Output>);

#[derive(Clone, Serialize, Deserialize)]
struct UtxoEntry {
    #[serde(rename = "ref")]
    oref: OutputRef,
    output: Output,
}

impl From<UtxoSet> for Vec<UtxoEntry> {
    fn from(u: UtxoSet) -> Self {
        u.0.into_iter()
            .map(|(oref, output)| UtxoEntry { oref, output })
            .collect()
    }
}

impl TryFrom<Vec<UtxoEntry>> for UtxoSet {
    type Error = LedgerError;

    fn try_from(entries: Vec<UtxoEntry>) -> Result<Self, Self::Error> {
        let mut map = BTreeMap::new();
        for e in entries {
            if map.insert(e.oref, e.output).is_some() {
                return Err(LedgerError::KeyCollision(e.oref));
            }
        }
        Ok(UtxoSet(map))
    }
}

impl UtxoSet {
    pub fn new() -> Self {
        UtxoSet::default()
    }

    pub fn get(&self, key: &OutputRef) -> Option<&Output> {
        self.0.get(key)
    }

    pub fn contains_key(&self, key: &OutputRef) -> bool {
        self.0.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OutputRef, &Output)> {
        self.0.iter()
    }

    pub fn keys(&self) -> BTreeSet<OutputRef> {
        self.0.keys().copied().collect()
    }

    /// Inserts an entry, refusing to overwrite an existing key.
    pub fn insert(&mut self, key: OutputRef, out: Output) -> Result<(), LedgerError> {
        if self.0.contains_key(&key) {
            return Err(LedgerError::KeyCollision(key));
        }
        self.0.insert(key, out);
        Ok(())
    }

    /// Disjoint union; fails on the first shared key.
    pub fn union(&self, other: &UtxoSet) -> Result<UtxoSet, LedgerError> {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.insert(*k, v.clone())?;
        }
        Ok(out)
    }

    /// Removes every key in `keys`; absent keys are ignored.
    pub fn without(&self, keys: &BTreeSet<OutputRef>) -> UtxoSet {
        UtxoSet(
            self.0
                .iter()
                .filter(|(k, _)| !keys.contains(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        )
    }

    /// Total quantity of `token` across all entries.
    pub fn token_total(&self, token: &TokenId) -> u64 {
        self.0.values().map(|o| o.value.quantity(token)).sum()
    }
}

impl FromIterator<(OutputRef, Output)> for UtxoSet {
    fn from_iter<I: IntoIterator<Item = (OutputRef, Output)>>(iter: I) -> Self {
        UtxoSet(iter.into_iter().collect())
    }
}

/// A transaction input: the reference being spent and the output it is expected to hold.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TxInput {
    #[serde(rename = "ref")]
    pub output_ref: OutputRef,
    pub output: Output,
}

impl TxInput {
    pub fn new(output_ref: OutputRef, output: Output) -> Self {
        TxInput { output_ref, output }
    }
}

/// A transaction. Inputs are kept sorted by output reference and have distinct references.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "TxRepr", into = "TxRepr")]
pub struct Tx {
    inputs: Vec<TxInput>,
    outputs: Vec<Output>,
    validity: ValidityInterval,
    additional_data: Vec<u8>,
    id: TxHash,
}

#[derive(Clone, Serialize, Deserialize)]
struct TxRepr {
    inputs: Vec<TxInput>,
    outputs: Vec<Output>,
    validity: ValidityInterval,
    #[serde(with = "hex_bytes", default)]
    additional_data: Vec<u8>,
}

impl TryFrom<TxRepr> for Tx {
    type Error = LedgerError;

    fn try_from(r: TxRepr) -> Result<Self, Self::Error> {
        Tx::new(r.inputs, r.outputs, r.validity, r.additional_data)
    }
}

impl From<Tx> for TxRepr {
    fn from(t: Tx) -> Self {
        TxRepr {
            inputs: t.inputs,
            outputs: t.outputs,
            validity: t.validity,
            additional_data: t.additional_data,
        }
    }
}

impl fmt::Debug for Tx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tx")
            .field("id", &self.id)
            .field("inputs", &self.inputs.len())
            .field("outputs", &self.outputs.len())
            .field("validity", &(self.validity.start.0, self.validity.end.0))
            .finish()
    }
}

impl Tx {
    pub fn new(
        inputs: Vec<TxInput>,
        outputs: Vec<Output>,
        validity: ValidityInterval,
        additional_data: impl Into<Vec<u8>>,
    ) -> Result<Tx, LedgerError> {
        if validity.start > validity.end {
            return Err(LedgerError::InvalidInterval {
                start: validity.start,
                end: validity.end,
            });
        }
        let mut inputs = inputs;
        inputs.sort();
        if let Some(w) = inputs
            .windows(2)
            .find(|w| w[0].output_ref == w[1].output_ref)
        {
            return Err(LedgerError::DuplicateInput(w[0].output_ref));
        }
        let mut tx = Tx {
            inputs,
            outputs,
            validity,
            additional_data: additional_data.into(),
            id: TxHash([0; HASH_LEN]),
        };
        tx.id = TxHash(Sha256::digest(canonical_tx_bytes(&tx)).into());
        Ok(tx)
    }

    pub fn inputs(&self) -> &[TxInput] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Output] {
        &self.outputs
    }

    pub fn validity(&self) -> ValidityInterval {
        self.validity
    }

    pub fn additional_data(&self) -> &[u8] {
        &self.additional_data
    }

    /// The transaction hash, computed once at construction.
    pub fn id(&self) -> TxHash {
        self.id
    }
}

/// Hash of the canonical byte encoding of `tx`.
pub fn hash_tx(tx: &Tx) -> TxHash {
    tx.id
}

/// Indexes `outs` consecutively from `start`.
pub fn to_map(start: u32, outs: &[Output]) -> BTreeMap<u32, Output> {
    outs.iter()
        .enumerate()
        .map(|(k, o)| (start + k as u32, o.clone()))
        .collect()
}

/// Entries created by `tx`, keyed `(hash_tx(tx), position)`.
pub fn mk_outs(tx: &Tx) -> UtxoSet {
    let h = hash_tx(tx);
    to_map(0, tx.outputs())
        .into_iter()
        .map(|(ix, o)| (OutputRef::new(h, ix), o))
        .collect()
}

/// The output references spent by `tx`.
pub fn get_orefs(tx: &Tx) -> BTreeSet<OutputRef> {
    tx.inputs().iter().map(|i| i.output_ref).collect()
}

/// Reason a transaction fails validation against a ledger state.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CheckFailure {
    #[error("transaction has no inputs")]
    EmptyInputs,
    #[error("slot {slot} outside validity interval [{}, {})", interval.start, interval.end)]
    SlotOutOfInterval {
        slot: Slot,
        interval: ValidityInterval,
    },
    #[error("input {0} is not in the UTxO set")]
    MissingInput(OutputRef),
    #[error("input {0} does not match the UTxO entry")]
    InputMismatch(OutputRef),
    #[error("additional checks rejected the transaction: {0}")]
    AdditionalChecks(String),
}

impl CheckFailure {
    /// Stable diagnostic code.
    pub fn code(&self) -> &'static str {
        match self {
            CheckFailure::EmptyInputs => "empty-inputs",
            CheckFailure::SlotOutOfInterval { .. } => "slot-out-of-interval",
            CheckFailure::MissingInput(_) => "missing-input",
            CheckFailure::InputMismatch(_) => "input-mismatch",
            CheckFailure::AdditionalChecks(_) => "additional-checks",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("output reference {0} already present (hash collision or replay)")]
    KeyCollision(OutputRef),
    #[error("duplicate input {0}")]
    DuplicateInput(OutputRef),
    #[error("validity interval start {start} exceeds end {end}")]
    InvalidInterval { start: Slot, end: Slot },
    #[error("malformed transaction hash {0:?}")]
    BadHash(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("rejected: {0}")]
    Rejected(#[from] CheckFailure),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

impl StepError {
    pub fn code(&self) -> &'static str {
        match self {
            StepError::Rejected(c) => c.code(),
            StepError::Ledger(LedgerError::KeyCollision(_)) => "key-collision",
            StepError::Ledger(_) => "ledger-error",
        }
    }
}

/// Extension point for validation rules beyond the core ledger clauses.
pub trait AdditionalChecks: Send + Sync {
    fn check(&self, slot: Slot, utxo: &UtxoSet, tx: &Tx) -> Result<(), String>;
}

/// The default hook: accepts everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcceptAll;

impl AdditionalChecks for AcceptAll {
    fn check(&self, _: Slot, _: &UtxoSet, _: &Tx) -> Result<(), String> {
        Ok(())
    }
}

/// Validates `tx` against `utxo` at `slot` with the default hook.
pub fn check_tx(slot: Slot, utxo: &UtxoSet, tx: &Tx) -> Result<(), CheckFailure> {
    check_tx_with(&AcceptAll, slot, utxo, tx)
}

/// Validates `tx`; the error names the first failing clause in rule order.
pub fn check_tx_with(
    hook: &dyn AdditionalChecks,
    slot: Slot,
    utxo: &UtxoSet,
    tx: &Tx,
) -> Result<(), CheckFailure> {
    if tx.inputs().is_empty() {
        return Err(CheckFailure::EmptyInputs);
    }
    if !tx.validity().contains(slot) {
        return Err(CheckFailure::SlotOutOfInterval {
            slot,
            interval: tx.validity(),
        });
    }
    for input in tx.inputs() {
        match utxo.get(&input.output_ref) {
            None => return Err(CheckFailure::MissingInput(input.output_ref)),
            Some(o) if *o != input.output => {
                return Err(CheckFailure::InputMismatch(input.output_ref))
            }
            Some(_) => {}
        }
    }
    hook.check(slot, utxo, tx)
        .map_err(CheckFailure::AdditionalChecks)
}

/// `(utxo \ getORefs(tx)) ∪ mkOuts(tx)`, refusing to overwrite a surviving key.
pub fn apply_tx(utxo: &UtxoSet, tx: &Tx) -> Result<UtxoSet, LedgerError> {
    utxo.without(&get_orefs(tx)).union(&mk_outs(tx))
}

/// One accepted ledger transition `(slot, from, tx, to)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LedgerStep {
    slot: Slot,
    from: UtxoSet,
    tx: Tx,
    to: UtxoSet,
}

impl LedgerStep {
    pub fn slot(&self) -> Slot {
        self.slot
    }

    pub fn from_state(&self) -> &UtxoSet {
        &self.from
    }

    pub fn tx(&self) -> &Tx {
        &self.tx
    }

    pub fn to_state(&self) -> &UtxoSet {
        &self.to
    }

    pub fn into_parts(self) -> (Slot, UtxoSet, Tx, UtxoSet) {
        (self.slot, self.from, self.tx, self.to)
    }
}

#[derive(Deserialize)]
struct LedgerStepRepr {
    slot: Slot,
    from: UtxoSet,
    tx: Tx,
    to: UtxoSet,
}

impl<'de> Deserialize<'de> for LedgerStep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = LedgerStepRepr::deserialize(d)?;
        let step = step_ledger(r.slot, &r.from, &r.tx).map_err(D::Error::custom)?;
        if step.to != r.to {
            return Err(D::Error::custom(
                "`to` does not match the applied transaction",
            ));
        }
        Ok(step)
    }
}

/// The transition rule with the default hook.
pub fn step_ledger(slot: Slot, utxo: &UtxoSet, tx: &Tx) -> Result<LedgerStep, StepError> {
    step_ledger_with(&AcceptAll, slot, utxo, tx)
}

pub fn step_ledger_with(
    hook: &dyn AdditionalChecks,
    slot: Slot,
    utxo: &UtxoSet,
    tx: &Tx,
) -> Result<LedgerStep, StepError> {
    check_tx_with(hook, slot, utxo, tx)?;
    let to = apply_tx(utxo, tx)?;
    Ok(LedgerStep {
        slot,
        from: utxo.clone(),
        tx: tx.clone(),
        to,
    })
}
