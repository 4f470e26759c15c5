//! Ingest record parsing and content-derived ids.

use clap::ValueEnum;
use resonance_core::{sign_phase, zero_phase, PatternId, RealVector, WavePattern};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::segment::quantize;

/// How a plain `vector` becomes a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum MapMode {
    /// `A = |v|`, phase 0 for `v ≥ 0` and anti-phase otherwise.
    #[default]
    SignPhase,
    /// `A = v`, phase 0; negative components are rejected.
    ZeroPhase,
    /// Records must carry `amplitude` and `phase` directly.
    Native,
}

/// One JSON Lines ingest record: an optional 32-hex `id` and either
/// `vector` or both `amplitude` and `phase`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestRecord {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub vector: Option<Vec<f64>>,
    #[serde(default)]
    pub amplitude: Option<Vec<f64>>,
    #[serde(default)]
    pub phase: Option<Vec<f64>>,
}

impl IngestRecord {
    pub fn parse(line: &str) -> Result<Self, String> {
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))
    }

    pub fn to_pattern(&self, map: MapMode, dim: usize) -> Result<WavePattern, String> {
        let pattern = match (&self.vector, &self.amplitude, &self.phase) {
            (Some(v), None, None) => vector_to_pattern(v.clone(), map)?,
            (None, Some(a), Some(p)) => WavePattern::new(a.clone(), p.clone()).map_err(|e| e.to_string())?,
            (None, Some(_), None) | (None, None, Some(_)) => {
                return Err("amplitude and phase must be given together".into())
            }
            (None, None, None) => return Err("record has neither vector nor amplitude/phase".into()),
            _ => return Err("give either vector or amplitude/phase, not both".into()),
        };
        if pattern.dim() != dim {
            return Err(format!("record has dimension {}, store has {dim}", pattern.dim()));
        }
        Ok(pattern)
    }

    /// The explicit id, or the content hash of the stored form of `pattern`.
    pub fn resolve_id(&self, pattern: &WavePattern) -> Result<PatternId, String> {
        match &self.id {
            Some(s) => s.parse().map_err(|e: resonance_core::Error| e.to_string()),
            None => Ok(content_id(pattern)),
        }
    }
}

pub fn vector_to_pattern(values: Vec<f64>, map: MapMode) -> Result<WavePattern, String> {
    let v = RealVector::new(values).map_err(|e| e.to_string())?;
    match map {
        MapMode::SignPhase => Ok(sign_phase(&v)),
        MapMode::ZeroPhase => zero_phase(&v).map_err(|e| format!("zero-phase mapping: {e}")),
        MapMode::Native => Err("native mapping requires amplitude and phase fields".into()),
    }
}

/// First 16 bytes of SHA-256 over the 32-bit little-endian stored form
/// (amplitudes, then phases). Identical stored content yields the same id.
pub fn content_id(p: &WavePattern) -> PatternId {
    let stored = quantize(p).unwrap_or_else(|_| p.clone());
    let mut hasher = Sha256::new();
    for &a in stored.amplitude() {
        hasher.update((a as f32).to_le_bytes());
    }
    for &x in stored.phase() {
        hasher.update((x as f32).to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut id = [0u8; 16];
    id.copy_from_slice(&digest[..16]);
    PatternId(id)
}
