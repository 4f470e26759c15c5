//! The pattern representation shared by every other module.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{PI, TAU};
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Largest magnitude reduced by a single fused multiply-add; beyond it the
/// rounding error of `TAU` times the period count exceeds 1e-13.
const FMA_REDUCTION_LIMIT: f64 = 1024.0;

/// Canonicalizes an angle into the half-open interval `[-π, π)`.
///
/// Angles already inside the interval are returned unchanged, so wrapping is
/// idempotent bit for bit. `+π` maps to `-π`.
pub fn wrap_phase(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::NonFiniteValue { index: 0 });
    }
    if (-PI..PI).contains(&theta) {
        return Ok(theta);
    }
    let wrapped = if theta.abs() <= FMA_REDUCTION_LIMIT {
        let turns = libm::floor((theta + PI) / TAU);
        libm::fma(-turns, TAU, theta)
    } else {
        // libm reduces sin/cos arguments exactly, so this keeps e^{iθ} intact
        // for arbitrarily large angles.
        libm::atan2(libm::sin(theta), libm::cos(theta))
    };
    Ok(if wrapped >= PI {
        wrapped - TAU
    } else if wrapped < -PI {
        wrapped + TAU
    } else {
        wrapped
    })
}

/// A fixed-length waveform `ψ(x) = A(x)·e^{iφ(x)}` held as amplitude/phase pairs.
///
/// Invariants: both arrays have the same non-zero length, amplitudes are
/// non-negative, phases lie in `[-π, π)`, and every entry is finite. Equality
/// compares the stored pairs, not the complex values they denote.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePattern {
    amplitude: Vec<f64>,
    phase: Vec<f64>,
}

impl WavePattern {
    /// Validates the arrays and wraps phases into `[-π, π)`.
    pub fn new(amplitude: Vec<f64>, mut phase: Vec<f64>) -> Result<Self> {
        if amplitude.len() != phase.len() {
            return Err(Error::LengthMismatch {
                amplitude: amplitude.len(),
                phase: phase.len(),
            });
        }
        if amplitude.is_empty() {
            return Err(Error::EmptyPattern);
        }
        for (index, &a) in amplitude.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFiniteValue { index });
            }
            if a < 0.0 {
                return Err(Error::NegativeAmplitude { index, value: a });
            }
        }
        for (index, p) in phase.iter_mut().enumerate() {
            *p = wrap_phase(*p).map_err(|_| Error::NonFiniteValue { index })?;
        }
        Ok(Self { amplitude, phase })
    }

    pub fn dim(&self) -> usize {
        self.amplitude.len()
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    /// True when every amplitude is zero, i.e. `ψ = 0`.
    pub fn is_zero(&self) -> bool {
        self.amplitude.iter().all(|&a| a == 0.0)
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.amplitude, self.phase)
    }
}

/// Builds a validated pattern from borrowed arrays.
pub fn validate(amplitude: &[f64], phase: &[f64]) -> Result<WavePattern> {
    WavePattern::new(amplitude.to_vec(), phase.to_vec())
}

/// 16-byte opaque pattern identifier. Orders lexicographically by bytes;
/// its text form is 32 lowercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PatternId(pub [u8; 16]);

impl PatternId {
    pub const LEN: usize = 16;

    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    /// Id whose big-endian bytes encode `n`; byte order then matches numeric order.
    pub fn from_u128(n: u128) -> Self {
        Self(n.to_be_bytes())
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl FromStr for PatternId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 32 {
            return Err(Error::InvalidId(s.to_string()));
        }
        let mut bytes = [0u8; 16];
        hex::decode_to_slice(s, &mut bytes).map_err(|_| Error::InvalidId(s.to_string()))?;
        Ok(Self(bytes))
    }
}

/// One search result: a pattern id and its resonance score against the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub id: PatternId,
    pub score: f64,
}

impl Hit {
    pub fn new(id: PatternId, score: f64) -> Self {
        Self { id, score }
    }

    /// Result order: higher score first, then ascending id.
    /// `Ordering::Less` means `self` ranks ahead of `other`.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        other.score.total_cmp(&self.score).then_with(|| self.id.cmp(&other.id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    /// Independent oracle: reduce with Euclidean remainder on the shifted angle.
    fn wrap_oracle(theta: f64) -> f64 {
        (theta + PI).rem_euclid(TAU) - PI
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_phase(0.0).unwrap(), 0.0);
        assert_eq!(wrap_phase(PI).unwrap(), -PI);
        assert_eq!(wrap_phase(-PI).unwrap(), -PI);
        let w = wrap_phase(3.0 * PI / 2.0).unwrap();
        assert!((w - wrap_oracle(3.0 * PI / 2.0)).abs() < 1e-15);
        assert!((w + PI / 2.0).abs() < 1e-15);
        // 3π lands on the boundary; either representative of the same point is
        // acceptable as long as it lies in [-π, π).
        let w = wrap_phase(3.0 * PI).unwrap();
        assert!((-PI..PI).contains(&w));
        assert!((w + PI).abs() < 1e-15 || (w - PI).abs() < 1e-15);
    }

    #[test]
    fn wrap_rejects_non_finite() {
        assert!(matches!(wrap_phase(f64::NAN), Err(Error::NonFiniteValue { .. })));
        assert!(matches!(wrap_phase(f64::INFINITY), Err(Error::NonFiniteValue { .. })));
    }

    #[test]
    fn validate_examples() {
        let p = validate(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(
            validate(&[1.0, -1.0], &[0.0, 0.0]),
            Err(Error::NegativeAmplitude { index: 1, value: -1.0 })
        );
        assert_eq!(
            validate(&[1.0], &[0.0, 0.0]),
            Err(Error::LengthMismatch { amplitude: 1, phase: 2 })
        );
        assert_eq!(validate(&[], &[]), Err(Error::EmptyPattern));
        assert_eq!(validate(&[f64::NAN], &[0.0]), Err(Error::NonFiniteValue { index: 0 }));
        assert_eq!(
            validate(&[1.0, 1.0], &[0.0, f64::NAN]),
            Err(Error::NonFiniteValue { index: 1 })
        );
        let p = validate(&[1.0], &[3.0 * PI]).unwrap();
        assert!((p.phase()[0].abs() - PI).abs() < 1e-15);
        let p = validate(&[0.0], &[1.0]).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn pattern_id_text_form() {
        let id = PatternId::from_u128(0xdead_beef);
        let s = id.to_string();
        assert_eq!(s, "000000000000000000000000deadbeef");
        assert_eq!(s.parse::<PatternId>().unwrap(), id);
        assert_eq!("000000000000000000000000DEADBEEF".parse::<PatternId>().unwrap(), id);
        assert!("abc".parse::<PatternId>().is_err());
        assert!("zz000000000000000000000000000000".parse::<PatternId>().is_err());
        assert!(PatternId::from_u128(1) < PatternId::from_u128(256));
    }

    #[test]
    fn hit_order_breaks_ties_by_id() {
        let a = Hit::new(PatternId::from_u128(2), 0.5);
        let b = Hit::new(PatternId::from_u128(1), 0.5);
        let c = Hit::new(PatternId::from_u128(3), 0.9);
        let mut v = vec![a, b, c];
        v.sort_by(Hit::rank_cmp);
        assert_eq!(v, vec![c, b, a]);
    }

    proptest! {
        #[test]
        fn wrap_lands_in_range_and_preserves_angle(theta in -1.0e6f64..1.0e6) {
            let w = wrap_phase(theta).unwrap();
            prop_assert!((-PI..PI).contains(&w));
            let (dre, dim) = (libm::cos(w) - libm::cos(theta), libm::sin(w) - libm::sin(theta));
            prop_assert!(libm::sqrt(dre * dre + dim * dim) <= 1e-12);
        }

        #[test]
        fn wrap_matches_mod_oracle(theta in -100.0f64..100.0) {
            let w = wrap_phase(theta).unwrap();
            let o = wrap_oracle(theta);
            // The two may straddle the ±π seam by an ulp.
            let d = (w - o).abs();
            prop_assert!(d < 1e-13 || (TAU - d).abs() < 1e-13);
        }

        #[test]
        fn wrap_preserves_huge_angles(theta in prop::num::f64::NORMAL) {
            let w = wrap_phase(theta).unwrap();
            prop_assert!((-PI..PI).contains(&w));
            let (dre, dim) = (libm::cos(w) - libm::cos(theta), libm::sin(w) - libm::sin(theta));
            prop_assert!(libm::sqrt(dre * dre + dim * dim) <= 1e-12);
        }

        #[test]
        fn validate_is_idempotent(
            parts in prop::collection::vec((0.0f64..10.0, -50.0f64..50.0), 1..32)
        ) {
            let (a, p): (Vec<f64>, Vec<f64>) = parts.into_iter().unzip();
            let once = validate(&a, &p).unwrap();
            let twice = validate(once.amplitude(), once.phase()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
