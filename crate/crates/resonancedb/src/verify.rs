//! Randomized check of the resonance score's algebraic properties.
//!
//! Each property is evaluated on seeded random pattern pairs and reported
//! with its worst observed deviation and tolerance. The direct evaluation
//! used for the compact-form check materializes `ψ1 + ψ2` as complex numbers,
//! independently of the kernel.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resonance_core::{apply, cosine, resonance, sign_phase, KernelKind, OperatorSpec, RealVector, WavePattern};

/// Dimensions cycled through by the generated pairs.
pub const DIMS: [usize; 4] = [1, 2, 8, 512];

pub type Scorer<'a> = &'a dyn Fn(&WavePattern, &WavePattern) -> f64;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<20} cases={:<6} worst={:.3e} tol={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance
        )
    }
}

struct Tracker {
    name: &'static str,
    cases: usize,
    worst: f64,
    tolerance: f64,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            worst: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, deviation: f64) {
        self.cases += 1;
        // NaN must count as a failure.
        if deviation.is_nan() || deviation > self.worst {
            self.worst = if deviation.is_nan() { f64::INFINITY } else { deviation };
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
        }
    }
}

pub fn random_pattern(rng: &mut impl Rng, dim: usize, max_amplitude: f64) -> WavePattern {
    let amplitude = (0..dim).map(|_| rng.random_range(0.0..=max_amplitude)).collect();
    let phase = (0..dim).map(|_| rng.random_range(-PI..PI)).collect();
    WavePattern::new(amplitude, phase).expect("random pattern is valid")
}

/// Score from the interference definition:
/// `½ · Σ|ψ1+ψ2|² / Σ(|ψ1|²+|ψ2|²) · 2√(E1E2)/(E1+E2)`.
pub fn direct_score(p1: &WavePattern, p2: &WavePattern) -> f64 {
    let to_complex = |p: &WavePattern| -> Vec<Complex64> {
        p.amplitude()
            .iter()
            .zip(p.phase())
            .map(|(&a, &ph)| Complex64::from_polar(a, ph))
            .collect()
    };
    let (z1, z2) = (to_complex(p1), to_complex(p2));
    let e1: f64 = z1.iter().map(|z| z.norm_sqr()).sum();
    let e2: f64 = z2.iter().map(|z| z.norm_sqr()).sum();
    if e1 + e2 == 0.0 {
        return 0.0;
    }
    let interference: f64 = z1.iter().zip(&z2).map(|(a, b)| (a + b).norm_sqr()).sum();
    let denom: f64 = z1.iter().zip(&z2).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).sum();
    let r = 2.0 * (e1 * e2).sqrt() / (e1 + e2);
    0.5 * interference / denom * r
}

fn rotate(p: &WavePattern, delta: f64) -> WavePattern {
    let phase = p.phase().iter().map(|x| x + delta).collect();
    WavePattern::new(p.amplitude().to_vec(), phase).expect("rotation keeps invariants")
}

/// Runs the suite against the scalar kernel.
pub fn run_suite(seed: u64, cases: usize) -> Vec<PropertyResult> {
    run_suite_with(seed, cases, &|a, b| {
        resonance(a, b, KernelKind::Scalar).expect("equal dimensions")
    })
}

/// Runs the suite against an arbitrary scorer.
pub fn run_suite_with(seed: u64, cases: usize, score: Scorer<'_>) -> Vec<PropertyResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bounds = Tracker::new("bounds", 1e-12);
    let mut symmetry = Tracker::new("symmetry", 1e-12);
    let mut self_match = Tracker::new("self_match", 1e-9);
    let mut global_phase = Tracker::new("global_phase", 1e-9);
    let mut anti_phase = Tracker::new("anti_phase", 1e-9);
    let mut compact = Tracker::new("compact_vs_direct", 1e-9);
    let mut reduction = Tracker::new("cosine_reduction", 1e-6);
    #[cfg(feature = "vectorized")]
    let mut kernels = Tracker::new("kernel_equivalence", 1e-6);

    for i in 0..cases {
        let dim = DIMS[i % DIMS.len()];
        let p = random_pattern(&mut rng, dim, 10.0);
        let q = random_pattern(&mut rng, dim, 10.0);
        let s = score(&p, &q);

        bounds.record((-s).max(s - 1.0).max(0.0));
        symmetry.record((s - score(&q, &p)).abs());
        if !p.is_zero() {
            self_match.record((score(&p, &p) - 1.0).abs());
            let neg = apply(OperatorSpec::Neg, &p).expect("NEG is always valid");
            anti_phase.record(score(&p, &neg).max(0.0));
        }
        let delta = rng.random_range(-PI..PI);
        global_phase.record((score(&rotate(&p, delta), &rotate(&q, delta)) - s).abs());
        compact.record((s - direct_score(&p, &q)).abs());
        #[cfg(feature = "vectorized")]
        kernels.record(
            (resonance(&p, &q, KernelKind::Scalar).unwrap() - resonance(&p, &q, KernelKind::Vectorized).unwrap()).abs(),
        );

        // Real vectors scaled to equal norms, mapped with sign-phase.
        let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (u, v) = (RealVector::new(u).unwrap(), RealVector::new(v).unwrap());
        if u.norm() > 1e-9 && v.norm() > 1e-9 {
            let scale = u.norm() / v.norm();
            let v = RealVector::new(v.values().iter().map(|x| x * scale).collect()).unwrap();
            let c = cosine(&u, &v).unwrap();
            reduction.record((score(&sign_phase(&u), &sign_phase(&v)) - (1.0 + c) / 2.0).abs());
        }
    }

    vec![
        bounds.finish(),
        symmetry.finish(),
        self_match.finish(),
        global_phase.finish(),
        anti_phase.finish(),
        compact.finish(),
        reduction.finish(),
        #[cfg(feature = "vectorized")]
        kernels.finish(),
    ]
}

pub fn all_passed(results: &[PropertyResult]) -> bool {
    results.iter().all(PropertyResult::passed)
}
