//! Executable UTxO ledger semantics.
//!
//! * [`ledger`]: the small-step ledger rule (`check_tx`, `apply_tx`, `step_ledger`).
//! * [`graph`]: simple graphs with initial vertices, sieves and partial sieve-defined
//!   homomorphisms, plus the ledger state graphs.
//! * [`trace`]: finite trace prefixes, the prefix ultrametric, balls, safety monitors,
//!   non-expansion and truncated-lift checks, and a seeded trace generator.
//! * [`contract`]: structured contracts and the NFT example.
//! * [`props`]: replay / trivial-update protection, disjointness, commutativity and the
//!   canonical ordering of transaction sequences.
//! * [`codec`]: the versioned JSON file formats.

pub mod codec;
pub mod contract;
pub mod exec;
pub mod graph;
pub mod ledger;
pub mod props;
pub mod trace;

pub use exec::Exec;
