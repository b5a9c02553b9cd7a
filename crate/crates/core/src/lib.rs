//! Compressed dynamic text indexing and binary relations.
//!
//! The crate wraps an immutable compressed full-text index (BWT + wavelet
//! tree + sampled suffix array) in layers that add dynamism:
//!
//! - [`bits`]: bit vectors with one-way clearing, range reporting and rank.
//! - [`static_index`]: the immutable index with range-find / locate /
//!   extract / suffix-rank.
//! - [`semi_dynamic`]: lazy document deletion over a static index with
//!   threshold-triggered purge rebuilds.
//! - [`suffix_tree`]: an uncompressed generalized suffix tree holding the
//!   small fully-dynamic front collection.
//! - [`amortized`]: a hierarchy of geometrically capped sub-collections with
//!   merge-on-insert routing and global rebuilds (amortized update bounds).
//! - [`worstcase`]: the same idea with locked collections and incremental
//!   background rebuilds charged against explicit per-update work budgets
//!   (worst-case bounds).
//! - [`relation`] / [`graph`]: dynamic binary relations and directed graphs
//!   over the same machinery.
//! - [`oracle`]: brute-force reference models used for verification.
//! - [`workload`]: script replay, the fuzzing driver and stats formatting
//!   used by the CLI.

pub mod amortized;
pub mod bits;
pub mod error;
pub mod graph;
pub mod layout;
pub mod oracle;
pub mod relation;
pub mod sais;
pub mod semi_dynamic;
pub mod serial;
pub mod static_index;
pub mod suffix_tree;
pub mod wavelet;
pub mod workload;
pub mod worstcase;

pub use error::{Error, Result};
