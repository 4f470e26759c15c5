//! Phase-aware pattern store with exact top-k resonance search.
//!
//! Patterns live in fixed-capacity memory-mapped segment files under a store
//! directory. Queries scan every live record in parallel and return hits by
//! score descending, ties broken by id.
//!
//! ```no_run
//! use resonancedb::{top_k, QueryConfig, Store};
//! use resonance_core::{PatternId, WavePattern};
//!
//! let store = Store::open_default("/tmp/example-db", 2)?;
//! let p = WavePattern::new(vec![1.0, 0.5], vec![0.0, 1.0])?;
//! store.insert(PatternId::from_u128(1), &p)?;
//! let hits = top_k(&store, &p, &QueryConfig::new(5))?;
//! assert_eq!(hits[0].id, PatternId::from_u128(1));
//! # Ok::<(), resonancedb::Error>(())
//! ```

pub mod bench;
pub mod cli;
mod error;
pub mod ingest;
pub mod query;
pub mod segment;
pub mod store;
pub mod verify;

pub use error::{Error, Result};
pub use query::{default_workers, merge_heaps, partition_plan, top_k, QueryConfig, TopK, WORKERS_ENV};
pub use store::{RecordLocator, Snapshot, Store};

pub use resonance_core;
