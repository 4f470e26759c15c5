//! Energies, the Hermitian inner product and the resonance score.
//!
//! The score is evaluated in its compact form
//!
//! ```text
//! S = (E1 + E2 + 2·Re⟨ψ1,ψ2⟩) · sqrt(E1·E2) / (E1 + E2)²
//! ```
//!
//! which equals half the interference energy `Σ|ψ1+ψ2|²` over `E1+E2`, times
//! the scale-alignment factor `2·sqrt(E1·E2)/(E1+E2)`. It needs three running
//! sums and never materializes complex values. `S = 0` when `E1 + E2 = 0`.
//!
//! All accumulation is in `f64`. The scalar kernel sums strictly left to
//! right, so its results are bit-stable across runs and call paths.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::pattern::WavePattern;

/// Which accumulation routine scores a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KernelKind {
    /// Reference kernel: sequential left-to-right accumulation.
    #[default]
    Scalar,
    /// Experimental lane-split accumulation. Scores agree with `Scalar`
    /// within 1e-6 absolute but are not bit-identical.
    #[cfg(feature = "vectorized")]
    Vectorized,
}

impl KernelKind {
    pub const fn name(self) -> &'static str {
        match self {
            KernelKind::Scalar => "scalar",
            #[cfg(feature = "vectorized")]
            KernelKind::Vectorized => "vectorized",
        }
    }

    /// Kernels compiled into this build.
    pub fn available() -> &'static [KernelKind] {
        &[
            KernelKind::Scalar,
            #[cfg(feature = "vectorized")]
            KernelKind::Vectorized,
        ]
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::available()
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownKernel(s.to_string()))
    }
}

/// Energies of the two patterns in a pair, `E = Σ|ψ(x)|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPair {
    pub e1: f64,
    pub e2: f64,
}

/// `Σ A(x)²`; phase does not contribute to `|ψ(x)|²`.
pub fn energy(p: &WavePattern) -> f64 {
    energy_scalar(p.amplitude())
}

/// `Re⟨ψ1,ψ2⟩ = Σ A1(x)·A2(x)·cos(φ1(x) − φ2(x))`.
pub fn inner_re(p1: &WavePattern, p2: &WavePattern) -> Result<f64> {
    check_dims(p1.dim(), p2.dim())?;
    let (_, re) = accumulate_scalar(p1.amplitude(), p1.phase(), p2.amplitude(), p2.phase());
    Ok(re)
}

/// Resonance score of two patterns, in `[0, 1]` and symmetric.
pub fn resonance(p1: &WavePattern, p2: &WavePattern, kind: KernelKind) -> Result<f64> {
    check_dims(p1.dim(), p2.dim())?;
    Ok(QueryScorer::new(p1, kind).score(p2.amplitude(), p2.phase()))
}

/// Scores every corpus pattern against `query`. Stops at the first pattern
/// whose dimension differs from the query's.
pub fn resonance_batch(query: &WavePattern, corpus: &[WavePattern], kind: KernelKind) -> Result<Vec<f64>> {
    let scorer = QueryScorer::new(query, kind);
    corpus
        .iter()
        .map(|p| {
            check_dims(query.dim(), p.dim())?;
            Ok(scorer.score(p.amplitude(), p.phase()))
        })
        .collect()
}

/// Combines energies and the real inner product into the score.
pub fn score_from_parts(energies: EnergyPair, re: f64) -> f64 {
    let EnergyPair { e1, e2 } = energies;
    let total = e1 + e2;
    if total <= 0.0 {
        return 0.0;
    }
    let s = (total + 2.0 * re) * libm::sqrt(e1 * e2) / (total * total);
    s.clamp(0.0, 1.0)
}

/// A query with its energy computed once, for scoring many candidates.
///
/// Candidate slices are expected to be the same length as the query; this is
/// checked with a debug assertion only, callers validate dimensions up front.
#[derive(Debug, Clone)]
pub struct QueryScorer<'a> {
    amplitude: &'a [f64],
    phase: &'a [f64],
    energy: f64,
    kind: KernelKind,
}

impl<'a> QueryScorer<'a> {
    pub fn new(query: &'a WavePattern, kind: KernelKind) -> Self {
        let energy = match kind {
            KernelKind::Scalar => energy_scalar(query.amplitude()),
            #[cfg(feature = "vectorized")]
            KernelKind::Vectorized => lanes::energy(query.amplitude()),
        };
        Self {
            amplitude: query.amplitude(),
            phase: query.phase(),
            energy,
            kind,
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitude.len()
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Scores a candidate given as raw amplitude/phase slices.
    pub fn score(&self, amplitude: &[f64], phase: &[f64]) -> f64 {
        debug_assert_eq!(amplitude.len(), self.amplitude.len());
        debug_assert_eq!(phase.len(), self.phase.len());
        let (e2, re) = match self.kind {
            KernelKind::Scalar => accumulate_scalar(self.amplitude, self.phase, amplitude, phase),
            #[cfg(feature = "vectorized")]
            KernelKind::Vectorized => lanes::accumulate(self.amplitude, self.phase, amplitude, phase),
        };
        score_from_parts(EnergyPair { e1: self.energy, e2 }, re)
    }
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

fn energy_scalar(amplitude: &[f64]) -> f64 {
    let mut e = 0.0;
    for &a in amplitude {
        e += a * a;
    }
    e
}

/// Returns `(E2, Re⟨ψ1,ψ2⟩)` with sequential accumulation.
fn accumulate_scalar(a1: &[f64], p1: &[f64], a2: &[f64], p2: &[f64]) -> (f64, f64) {
    let mut e2 = 0.0;
    let mut re = 0.0;
    for (((&x1, &y1), &x2), &y2) in a1.iter().zip(p1).zip(a2).zip(p2) {
        e2 += x2 * x2;
        re += x1 * x2 * libm::cos(y1 - y2);
    }
    (e2, re)
}

#[cfg(feature = "vectorized")]
mod lanes {
    const LANES: usize = 8;

    fn reduce(acc: [f64; LANES]) -> f64 {
        // Pairwise tree so the reduction order is fixed.
        let a = [acc[0] + acc[4], acc[1] + acc[5], acc[2] + acc[6], acc[3] + acc[7]];
        (a[0] + a[2]) + (a[1] + a[3])
    }

    pub(super) fn energy(amplitude: &[f64]) -> f64 {
        let mut acc = [0.0; LANES];
        let chunks = amplitude.chunks_exact(LANES);
        let tail = chunks.remainder();
        for c in chunks {
            for i in 0..LANES {
                acc[i] += c[i] * c[i];
            }
        }
        let mut e = reduce(acc);
        for &a in tail {
            e += a * a;
        }
        e
    }

    pub(super) fn accumulate(a1: &[f64], p1: &[f64], a2: &[f64], p2: &[f64]) -> (f64, f64) {
        let n = a1.len().min(p1.len()).min(a2.len()).min(p2.len());
        let body = n - n % LANES;
        let mut e_acc = [0.0; LANES];
        let mut re_acc = [0.0; LANES];
        let mut cosines = [0.0; LANES];
        let mut i = 0;
        while i < body {
            for l in 0..LANES {
                cosines[l] = libm::cos(p1[i + l] - p2[i + l]);
            }
            let (x1, x2) = (&a1[i..i + LANES], &a2[i..i + LANES]);
            for l in 0..LANES {
                e_acc[l] += x2[l] * x2[l];
                re_acc[l] += x1[l] * x2[l] * cosines[l];
            }
            i += LANES;
        }
        let mut e2 = reduce(e_acc);
        let mut re = reduce(re_acc);
        for j in body..n {
            e2 += a2[j] * a2[j];
            re += a1[j] * a2[j] * libm::cos(p1[j] - p2[j]);
        }
        (e2, re)
    }
}
