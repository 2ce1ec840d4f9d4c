//! Versioned JSON file formats.
//!
//! Every file carries a top-level `version`; readers refuse versions they do not
//! know. See `docs/schema.md` for the field-by-field layout.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::SimpleGraph;
use crate::ledger::{CanonicalBytes, Tx, UtxoSet};
use crate::trace::{InitialConditions, LedgerLabel, LedgerTrace, SlotRange, TracePrefix};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing `version` field")]
    MissingVersion,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u64),
    #[error("{0}")]
    Invalid(String),
}

pub mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(&s).map_err(serde::de::Error::custom)
    }
}

fn check_version(v: &serde_json::Value) -> Result<(), CodecError> {
    match v.get("version").and_then(serde_json::Value::as_u64) {
        None => Err(CodecError::MissingVersion),
        Some(FORMAT_VERSION) => Ok(()),
        Some(n) => Err(CodecError::UnsupportedVersion(n)),
    }
}

/// Parses a versioned document.
pub fn from_versioned_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CodecError> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    check_version(&v)?;
    Ok(serde_json::from_value(v)?)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory values serialize");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFileRepr {
    version: u64,
    genesis: Vec<Tx>,
    initial_slots: SlotRange,
    states: Vec<UtxoSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lift: Option<Vec<LedgerLabel>>,
}

/// A ledger trace (or run) together with the initial conditions it starts from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFile {
    pub init: InitialConditions,
    pub trace: LedgerTrace,
}

impl TraceFile {
    pub fn to_json(&self) -> String {
        let (states, lift) = self.trace.clone().into_parts();
        to_json(&TraceFileRepr {
            version: FORMAT_VERSION,
            genesis: self.init.genesis.clone(),
            initial_slots: self.init.slots,
            states,
            lift,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        let r: TraceFileRepr = from_versioned_json(text)?;
        let trace = match r.lift {
            Some(l) => TracePrefix::with_lift(r.states, l),
            None => TracePrefix::new(r.states),
        }
        .map_err(|e| CodecError::Invalid(e.to_string()))?;
        Ok(TraceFile {
            init: InitialConditions::new(r.genesis, r.initial_slots),
            trace,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub states: usize,
    pub exhausted: bool,
}

/// Index of a generated batch of traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u64,
    pub seed: u64,
    pub depth: usize,
    pub count: usize,
    pub universe: usize,
    pub generator: String,
    pub traces: Vec<ManifestEntry>,
}

/// Short stable id of a vertex: the first 16 hex digits of the SHA-256 of its
/// canonical encoding.
pub fn vertex_id<V: CanonicalBytes>(v: &V) -> String {
    sha256_hex(&v.canonical_bytes())[..16].to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDump<L> {
    pub vertices: Vec<VertexDump<L>>,
    pub edges: Vec<(String, String)>,
    pub initial: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexDump<L> {
    pub id: String,
    pub label: L,
}

/// Vertex, edge and initial lists with ids from [`vertex_id`], in id order.
pub fn dump_graph<V, L>(g: &SimpleGraph<V>, label: impl Fn(&V) -> L) -> GraphDump<L>
where
    V: Ord + Clone + Debug + CanonicalBytes,
{
    let mut vertices: Vec<VertexDump<L>> = g
        .vertices()
        .map(|v| VertexDump {
            id: vertex_id(v),
            label: label(v),
        })
        .collect();
    vertices.sort_by(|a, b| a.id.cmp(&b.id));
    let mut edges: Vec<(String, String)> = g
        .edges()
        .map(|(a, b)| (vertex_id(a), vertex_id(b)))
        .collect();
    edges.sort();
    let mut initial: Vec<String> = g.initial().iter().map(vertex_id).collect();
    initial.sort();
    GraphDump {
        vertices,
        edges,
        initial,
    }
}
