//! Real embedding vectors to patterns, plus the cosine baseline.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::pattern::{wrap_phase, WavePattern};

/// Phase assigned to negative components. `π` canonicalizes to `-π`.
pub const ANTI_PHASE: f64 = -PI;

/// A finite, non-empty real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPattern);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.0.iter().map(|v| v * v).sum())
    }
}

/// `A(x) = |v(x)|`, `φ(x) = 0` where `v(x) ≥ 0` and anti-phase otherwise.
///
/// Zero components take phase 0. `A·cos(φ)` reproduces `v` exactly.
pub fn sign_phase(v: &RealVector) -> WavePattern {
    let amplitude = v.values().iter().map(|x| x.abs()).collect();
    let phase = v
        .values()
        .iter()
        .map(|&x| if x >= 0.0 { 0.0 } else { ANTI_PHASE })
        .collect();
    WavePattern::new(amplitude, phase).expect("sign-phase output satisfies pattern invariants")
}

/// Zero-phase initialization for vectors with no negative entries.
pub fn zero_phase(v: &RealVector) -> Result<WavePattern> {
    WavePattern::new(v.values().to_vec(), alloc::vec![0.0; v.dim()])
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`. Zero-norm input is an error.
pub fn cosine(u: &RealVector, v: &RealVector) -> Result<f64> {
    cosine_slices(u.values(), v.values())
}

/// Cosine on raw slices, e.g. the amplitude projections of two patterns.
pub fn cosine_slices(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (libm::sqrt(uu) * libm::sqrt(vv))).clamp(-1.0, 1.0))
}

/// Distances on `[0, 1]` derived from the two similarities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistancePair {
    /// `(1 − cosine) / 2`
    pub d_cos: f64,
    /// `1 − S`
    pub d_res: f64,
}

pub fn to_distances(cos_sim: f64, res_score: f64) -> Result<DistancePair> {
    if !(-1.0..=1.0).contains(&cos_sim) {
        return Err(Error::OutOfRange {
            what: "cosine",
            value: cos_sim,
        });
    }
    if !(0.0..=1.0).contains(&res_score) {
        return Err(Error::OutOfRange {
            what: "resonance",
            value: res_score,
        });
    }
    Ok(DistancePair {
        d_cos: (1.0 - cos_sim) / 2.0,
        d_res: 1.0 - res_score,
    })
}

/// Rotates every phase of a pattern by `delta`, re-wrapping into `[-π, π)`.
pub(crate) fn rotate_phases(p: &WavePattern, delta: f64) -> WavePattern {
    let phase = p
        .phase()
        .iter()
        .map(|&x| wrap_phase(x + delta).expect("finite phase"))
        .collect();
    WavePattern::new(p.amplitude().to_vec(), phase).expect("rotation keeps invariants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{energy, resonance, KernelKind};
    use alloc::vec;
    use proptest::prelude::*;

    fn rv(v: &[f64]) -> RealVector {
        RealVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sign_phase_examples() {
        let p = sign_phase(&rv(&[0.5, -0.3]));
        assert_eq!(p.amplitude(), &[0.5, 0.3]);
        assert_eq!(p.phase(), &[0.0, -PI]);

        let p = sign_phase(&rv(&[1.0, 2.0, 0.0]));
        assert!(p.phase().iter().all(|&x| x == 0.0));

        let p = sign_phase(&rv(&[0.0, 0.0]));
        assert_eq!(p.amplitude(), &[0.0, 0.0]);
        assert_eq!(p.phase(), &[0.0, 0.0]);
        // -0.0 satisfies `v >= 0`.
        assert_eq!(sign_phase(&rv(&[-0.0])).phase(), &[0.0]);
    }

    #[test]
    fn real_vector_rejects_bad_input() {
        assert_eq!(
            RealVector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteValue { index: 1 })
        );
        assert_eq!(RealVector::new(vec![]), Err(Error::EmptyPattern));
    }

    #[test]
    fn zero_phase_rejects_negatives() {
        let p = zero_phase(&rv(&[1.0, 0.0, 2.0])).unwrap();
        assert_eq!(p.phase(), &[0.0, 0.0, 0.0]);
        assert!(matches!(
            zero_phase(&rv(&[1.0, -1.0])),
            Err(Error::NegativeAmplitude { index: 1, .. })
        ));
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&rv(&[1.0, 2.0, 3.0]), &rv(&[1.0, 2.0, 3.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&rv(&[1.0, 0.0]), &rv(&[0.0, 1.0])).unwrap(), 0.0);
        assert!((cosine(&rv(&[1.0, 2.0, 3.0]), &rv(&[-1.0, -2.0, -3.0])).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(cosine(&rv(&[0.0, 0.0]), &rv(&[1.0, 1.0])), Err(Error::ZeroNorm));
        assert_eq!(
            cosine(&rv(&[1.0]), &rv(&[1.0, 1.0])),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        );
    }

    #[test]
    fn distance_examples() {
        assert_eq!(to_distances(1.0, 1.0).unwrap(), DistancePair { d_cos: 0.0, d_res: 0.0 });
        assert_eq!(
            to_distances(-1.0, 0.0).unwrap(),
            DistancePair { d_cos: 1.0, d_res: 1.0 }
        );
        assert_eq!(to_distances(0.0, 0.5).unwrap(), DistancePair { d_cos: 0.5, d_res: 0.5 });
        assert!(to_distances(1.5, 0.5).is_err());
        assert!(to_distances(0.0, -0.1).is_err());
        assert!(to_distances(f64::NAN, 0.5).is_err());
    }

    fn arb_vec(dim: impl Into<prop::collection::SizeRange>) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, dim)
    }

    fn arb_vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..64).prop_flat_map(|d| (arb_vec(d), arb_vec(d)))
    }

    proptest! {
        #[test]
        fn sign_phase_round_trips(v in arb_vec(1..64usize)) {
            let p = sign_phase(&rv(&v));
            for ((&a, &ph), &x) in p.amplitude().iter().zip(p.phase()).zip(&v) {
                prop_assert_eq!(a, x.abs());
                prop_assert_eq!(a * libm::cos(ph), x);
            }
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            prop_assert!((energy(&p) - norm2).abs() <= 1e-9 * (1.0 + norm2));
        }

        #[test]
        fn equal_norm_reduces_to_cosine((u, v) in arb_vec_pair()) {
            let (u, v) = (rv(&u), rv(&v));
            prop_assume!(u.norm() > 1e-6 && v.norm() > 1e-6);
            let scale = u.norm() / v.norm();
            let v = rv(&v.values().iter().map(|x| x * scale).collect::<Vec<_>>());
            let c = cosine(&u, &v).unwrap();
            let s = resonance(&sign_phase(&u), &sign_phase(&v), KernelKind::Scalar).unwrap();
            prop_assert!((s - (1.0 + c) / 2.0).abs() <= 1e-6);
        }

        #[test]
        fn cosine_is_symmetric_and_scale_invariant((u, v) in arb_vec_pair(), c in 0.01f64..100.0) {
            let (u, v) = (rv(&u), rv(&v));
            prop_assume!(u.norm() > 1e-6 && v.norm() > 1e-6);
            let a = cosine(&u, &v).unwrap();
            prop_assert!((a - cosine(&v, &u).unwrap()).abs() <= 1e-15);
            let scaled = rv(&v.values().iter().map(|x| x * c).collect::<Vec<_>>());
            prop_assert!((a - cosine(&u, &scaled).unwrap()).abs() <= 1e-12);
        }
    }
}
