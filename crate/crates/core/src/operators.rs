//! Semantic operators as pattern transforms.
//!
//! | operator   | transform                    | default      |
//! |------------|------------------------------|--------------|
//! | `NEG`      | `φ → wrap(φ + π)`            |              |
//! | `SHIFT`    | `φ → wrap(φ + δ)` everywhere | `δ = π/4`    |
//! | `INT_UP`   | `A → f·A`, `f > 1`           | `f = 3.0`    |
//! | `INT_DOWN` | `A → f·A`, `0 < f < 1`       | `f = 0.5`    |
//!
//! For a non-zero pattern `p` the self-scores are `S(p, NEG p) = 0`,
//! `S(p, SHIFT p) = (1 + cos δ)/2` and `S(p, INT p) = f(1+f)²/(1+f²)²`. The
//! last expression is unchanged by `f → 1/f`, so the intensity defaults are
//! deliberately not reciprocal.

use alloc::format;
use alloc::string::ToString;
use core::f64::consts::{FRAC_PI_4, PI};
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::mapping::rotate_phases;
use crate::pattern::WavePattern;

pub const DEFAULT_SHIFT: f64 = FRAC_PI_4;
pub const DEFAULT_INT_UP: f64 = 3.0;
pub const DEFAULT_INT_DOWN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorSpec {
    Neg,
    Shift { delta: f64 },
    IntUp { factor: f64 },
    IntDown { factor: f64 },
}

impl OperatorSpec {
    pub fn shift(delta: f64) -> Result<Self> {
        Self::Shift { delta }.checked()
    }

    pub fn int_up(factor: f64) -> Result<Self> {
        Self::IntUp { factor }.checked()
    }

    pub fn int_down(factor: f64) -> Result<Self> {
        Self::IntDown { factor }.checked()
    }

    /// The four operators at their default parameters.
    pub fn defaults() -> [OperatorSpec; 4] {
        [
            OperatorSpec::Neg,
            OperatorSpec::Shift { delta: DEFAULT_SHIFT },
            OperatorSpec::IntUp { factor: DEFAULT_INT_UP },
            OperatorSpec::IntDown {
                factor: DEFAULT_INT_DOWN,
            },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorSpec::Neg => "NEG",
            OperatorSpec::Shift { .. } => "SHIFT",
            OperatorSpec::IntUp { .. } => "INT_UP",
            OperatorSpec::IntDown { .. } => "INT_DOWN",
        }
    }

    fn checked(self) -> Result<Self> {
        let ok = match self {
            OperatorSpec::Neg => true,
            OperatorSpec::Shift { delta } => delta > 0.0 && delta < PI,
            OperatorSpec::IntUp { factor } => factor.is_finite() && factor > 1.0,
            OperatorSpec::IntDown { factor } => factor > 0.0 && factor < 1.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidOperator(self.to_string()))
        }
    }

    pub fn apply(&self, p: &WavePattern) -> Result<WavePattern> {
        apply(*self, p)
    }
}

/// Applies `op` to `p`. The output is always a valid pattern.
pub fn apply(op: OperatorSpec, p: &WavePattern) -> Result<WavePattern> {
    let op = op.checked()?;
    Ok(match op {
        OperatorSpec::Neg => rotate_phases(p, PI),
        OperatorSpec::Shift { delta } => rotate_phases(p, delta),
        OperatorSpec::IntUp { factor } | OperatorSpec::IntDown { factor } => {
            WavePattern::new(p.amplitude().iter().map(|a| a * factor).collect(), p.phase().to_vec())?
        }
    })
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::Neg => f.write_str("neg"),
            OperatorSpec::Shift { delta } => write!(f, "shift:{delta}"),
            OperatorSpec::IntUp { factor } => write!(f, "int_up:{factor}"),
            OperatorSpec::IntDown { factor } => write!(f, "int_down:{factor}"),
        }
    }
}

/// Parses `neg`, `shift[:δ]`, `int_up[:f]`, `int_down[:f]` (case-insensitive).
impl FromStr for OperatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let value = |default: f64| -> Result<f64> {
            match param {
                None => Ok(default),
                Some(p) => p
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidOperator(format!("bad parameter in {s:?}"))),
            }
        };
        let op = match name.trim().to_ascii_lowercase().as_str() {
            "neg" if param.is_none() => OperatorSpec::Neg,
            "shift" | "shift+" => OperatorSpec::Shift {
                delta: value(DEFAULT_SHIFT)?,
            },
            "int_up" => OperatorSpec::IntUp {
                factor: value(DEFAULT_INT_UP)?,
            },
            "int_down" => OperatorSpec::IntDown {
                factor: value(DEFAULT_INT_DOWN)?,
            },
            _ => return Err(Error::InvalidOperator(s.to_string())),
        };
        op.checked()
    }
}
