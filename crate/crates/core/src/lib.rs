//! Phase-aware wave patterns and the resonance similarity kernel.
//!
//! A pattern is a fixed-length discrete waveform `ψ(x) = A(x)·e^{iφ(x)}` stored
//! as amplitude/phase pairs. Similarity between two patterns is the resonance
//! score: the interference energy of their sum, normalized by combined energy
//! and scaled down when the two energies are imbalanced. The score lies in
//! `[0, 1]`, is 1 only for identical non-zero patterns and 0 for anti-phase
//! patterns of equal energy.
//!
//! This crate is `no_std` (it needs `alloc`); storage, search and IO live in
//! the `resonancedb` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod kernel;
pub mod mapping;
pub mod operators;
pub mod pattern;

pub use crate::error::{Error, Result};
pub use crate::kernel::{energy, inner_re, resonance, resonance_batch, KernelKind, QueryScorer};
pub use crate::mapping::{cosine, sign_phase, to_distances, zero_phase, DistancePair, RealVector};
pub use crate::operators::{apply, OperatorSpec};
pub use crate::pattern::{validate, wrap_phase, Hit, PatternId, WavePattern};
