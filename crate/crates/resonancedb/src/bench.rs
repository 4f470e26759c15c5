//! Synthetic corpora, latency measurement and the operator-retrieval experiment.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use resonance_core::mapping::cosine_slices;
use resonance_core::{apply, resonance, to_distances, Hit, KernelKind, OperatorSpec, PatternId, WavePattern};

use crate::error::{Error, Result};
use crate::query::{top_k, QueryConfig, TopK};
use crate::store::Store;

/// Deterministic stream of random patterns: amplitudes uniform on `[0, 1)`,
/// phases uniform on `[-π, π)`, drawn from ChaCha8 seeded with `seed`.
/// Each pattern draws all amplitudes, then all phases.
#[derive(Debug, Clone)]
pub struct SyntheticPatterns {
    rng: ChaCha8Rng,
    dim: usize,
    remaining: usize,
}

impl SyntheticPatterns {
    pub fn new(n: usize, dim: usize, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim,
            remaining: n,
        }
    }
}

impl Iterator for SyntheticPatterns {
    type Item = WavePattern;

    fn next(&mut self) -> Option<WavePattern> {
        if self.remaining == 0 || self.dim == 0 {
            return None;
        }
        self.remaining -= 1;
        let amplitude: Vec<f64> = (0..self.dim).map(|_| self.rng.random::<f64>()).collect();
        let phase: Vec<f64> = (0..self.dim).map(|_| self.rng.random_range(-PI..PI)).collect();
        Some(WavePattern::new(amplitude, phase).expect("generated values are valid"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

pub fn gen_synthetic(n: usize, dim: usize, seed: u64) -> Vec<WavePattern> {
    SyntheticPatterns::new(n, dim, seed).collect()
}

/// Inserts `n` synthetic patterns with ids `0..n`.
pub fn populate(store: &Store, n: usize, seed: u64) -> Result<()> {
    for (i, p) in SyntheticPatterns::new(n, store.dim(), seed).enumerate() {
        store.insert(PatternId::from_u128(i as u128), &p)?;
    }
    store.flush()
}

/// Nearest-rank percentile: the `ceil(pct/100 · n)`-th smallest sample.
pub fn nearest_rank(samples: &[f64], pct: u32) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((pct as usize * n).div_ceil(100)).clamp(1, n);
    Some(sorted[rank - 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub avg_ms: f64,
    pub p95_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples_ms: &[f64]) -> Option<Self> {
        let p95_ms = nearest_rank(samples_ms, 95)?;
        let avg_ms = samples_ms.iter().sum::<f64>() / samples_ms.len() as f64;
        Some(Self { avg_ms, p95_ms })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CacheMode {
    /// Reuse the open store; store-open time is excluded.
    #[default]
    Warm,
    /// Reopen the store before every repetition and include the open in the
    /// timing. Best effort only: the OS page cache is not evicted.
    Cold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    pub repetitions: usize,
    pub workers: usize,
    pub kernel: KernelKind,
    pub avg_ms: f64,
    pub p95_ms: f64,
}

pub const LATENCY_CSV_HEADER: &str = "n,L,k,workers,avg_ms,p95_ms";

impl LatencyReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n, self.dim, self.k, self.workers, self.avg_ms, self.p95_ms
        )
    }
}

/// Times `repetitions` sequential queries, cycling through `queries`.
pub fn measure_latency(
    store: &Store,
    queries: &[WavePattern],
    cfg: &QueryConfig,
    repetitions: usize,
    mode: CacheMode,
) -> Result<LatencyReport> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    if queries.is_empty() || repetitions == 0 {
        return Err(Error::InvalidArgument(
            "need at least one query and one repetition".into(),
        ));
    }
    let mut samples = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let q = &queries[rep % queries.len()];
        let hits = match mode {
            CacheMode::Warm => {
                let t = Instant::now();
                let hits = top_k(store, q, cfg)?;
                samples.push(t.elapsed().as_secs_f64() * 1e3);
                hits
            }
            CacheMode::Cold => {
                let t = Instant::now();
                let fresh = Store::open_existing(store.dir())?;
                let hits = top_k(&fresh, q, cfg)?;
                samples.push(t.elapsed().as_secs_f64() * 1e3);
                hits
            }
        };
        std::hint::black_box(hits);
    }
    let stats = LatencyStats::from_samples(&samples).expect("non-empty samples");
    Ok(LatencyReport {
        n: store.len(),
        dim: store.dim(),
        k: cfg.k,
        repetitions,
        workers: cfg.workers,
        kernel: cfg.kernel,
        avg_ms: stats.avg_ms,
        p95_ms: stats.p95_ms,
    })
}

/// Least-squares line `y = slope·x + intercept` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorEvalConfig {
    pub bases: usize,
    pub dim: usize,
    pub seed: u64,
    pub ops: Vec<OperatorSpec>,
    /// Standard deviation of the Gaussian amplitude noise applied to the
    /// query-side copy of each base.
    pub jitter: f64,
    pub kernel: KernelKind,
}

impl OperatorEvalConfig {
    pub fn new(bases: usize, dim: usize, seed: u64) -> Self {
        Self {
            bases,
            dim,
            seed,
            ops: OperatorSpec::defaults().to_vec(),
            jitter: 0.01,
            kernel: KernelKind::Scalar,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSummary {
    pub op: OperatorSpec,
    /// Resonance precision at 1.
    pub p1_res: f64,
    /// Precision at 1 of the baseline: cosine between amplitude vectors.
    pub p1_cos: f64,
    pub mean_dres: f64,
    pub std_dres: f64,
    pub mean_dcos: f64,
    pub std_dcos: f64,
    /// Per-base distances between base `b` and the stored `op(b)`.
    pub d_res: Vec<f64>,
    pub d_cos: Vec<f64>,
}

impl OperatorSummary {
    pub fn stderr_dres(&self) -> f64 {
        self.std_dres / (self.d_res.len() as f64).sqrt()
    }
}

/// Square distance matrix over corpus items.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Heatmap {
    pub ids: Vec<PatternId>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorEvalReport {
    pub operators: Vec<OperatorSummary>,
    pub heatmap_res: Heatmap,
    pub heatmap_cos: Heatmap,
}

/// Cosine is scale invariant, so a base and its rescaled variant tie
/// mathematically but can differ in the last bits. Ranking on a 1e-12 grid
/// makes such ties resolve by id instead of by rounding noise.
fn snap_to_grid(c: f64) -> f64 {
    (c * 1e12).round() / 1e12
}

fn rank_one(candidates: impl Iterator<Item = Hit>) -> Option<PatternId> {
    let mut best = TopK::new(1);
    candidates.for_each(|h| best.push(h));
    best.into_sorted().first().map(|h| h.id)
}

/// Operator retrieval experiment on synthetic bases.
///
/// Corpus: the `bases` random patterns (ids `0..bases`) followed by `op(b)`
/// for every operator and base (ids continue in operator-major order). For
/// each `(op, b)` the query is `op(b')`, where `b'` is `b` with Gaussian
/// amplitude jitter; the target is the stored `op(b)`. The cosine baseline
/// ranks the same corpus by cosine between amplitude vectors. Ties go to the
/// lower id under both metrics.
pub fn operator_eval(cfg: &OperatorEvalConfig) -> Result<OperatorEvalReport> {
    if cfg.bases < 2 {
        return Err(Error::InvalidArgument(
            "operator evaluation needs at least 2 bases".into(),
        ));
    }
    if !(cfg.jitter >= 0.0 && cfg.jitter.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid jitter {}", cfg.jitter)));
    }
    for (i, op) in cfg.ops.iter().enumerate() {
        if cfg.ops[..i].iter().any(|o| o.name() == op.name()) {
            return Err(Error::InvalidArgument(format!("operator {} listed twice", op.name())));
        }
    }
    if cfg.ops.is_empty() {
        return Ok(OperatorEvalReport::default());
    }

    let bases = gen_synthetic(cfg.bases, cfg.dim, cfg.seed);
    let mut corpus: Vec<(PatternId, WavePattern)> = bases
        .iter()
        .enumerate()
        .map(|(i, b)| (PatternId::from_u128(i as u128), b.clone()))
        .collect();
    for op in &cfg.ops {
        for b in &bases {
            corpus.push((PatternId::from_u128(corpus.len() as u128), apply(*op, b)?));
        }
    }

    let mut jitter_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    jitter_rng.set_stream(1);
    let noise = Normal::new(0.0, cfg.jitter).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut operators = Vec::with_capacity(cfg.ops.len());
    for (j, op) in cfg.ops.iter().enumerate() {
        let (mut hits_res, mut hits_cos) = (0usize, 0usize);
        let (mut d_res, mut d_cos) = (Vec::new(), Vec::new());
        for (b, base) in bases.iter().enumerate() {
            let target_index = cfg.bases * (j + 1) + b;
            let (target_id, target) = &corpus[target_index];

            let amplitude: Vec<f64> = base
                .amplitude()
                .iter()
                .map(|a| (a + noise.sample(&mut jitter_rng)).max(0.0))
                .collect();
            let query = apply(*op, &WavePattern::new(amplitude, base.phase().to_vec())?)?;

            let mut res_scores = Vec::with_capacity(corpus.len());
            for (id, p) in &corpus {
                res_scores.push(Hit::new(*id, resonance(&query, p, cfg.kernel)?));
            }
            if rank_one(res_scores.into_iter()) == Some(*target_id) {
                hits_res += 1;
            }
            let mut cos_scores = Vec::with_capacity(corpus.len());
            for (id, p) in &corpus {
                let c = cosine_slices(query.amplitude(), p.amplitude())?;
                cos_scores.push(Hit::new(*id, snap_to_grid(c)));
            }
            if rank_one(cos_scores.into_iter()) == Some(*target_id) {
                hits_cos += 1;
            }

            let d = to_distances(
                cosine_slices(base.amplitude(), target.amplitude())?,
                resonance(base, target, cfg.kernel)?,
            )?;
            d_res.push(d.d_res);
            d_cos.push(d.d_cos);
        }
        let (mean_dres, std_dres) = mean_std(&d_res);
        let (mean_dcos, std_dcos) = mean_std(&d_cos);
        operators.push(OperatorSummary {
            op: *op,
            p1_res: hits_res as f64 / cfg.bases as f64,
            p1_cos: hits_cos as f64 / cfg.bases as f64,
            mean_dres,
            std_dres,
            mean_dcos,
            std_dcos,
            d_res,
            d_cos,
        });
    }

    let ids: Vec<PatternId> = corpus.iter().map(|(id, _)| *id).collect();
    let n = corpus.len();
    let (mut res, mut cos) = (vec![vec![0.0; n]; n], vec![vec![0.0; n]; n]);
    for i in 0..n {
        for k in i..n {
            let (a, b) = (&corpus[i].1, &corpus[k].1);
            let d = to_distances(
                cosine_slices(a.amplitude(), b.amplitude())?,
                resonance(a, b, cfg.kernel)?,
            )?;
            res[i][k] = d.d_res;
            res[k][i] = d.d_res;
            cos[i][k] = d.d_cos;
            cos[k][i] = d.d_cos;
        }
    }
    Ok(OperatorEvalReport {
        operators,
        heatmap_res: Heatmap {
            ids: ids.clone(),
            values: res,
        },
        heatmap_cos: Heatmap { ids, values: cos },
    })
}

pub const SUMMARY_CSV_HEADER: &str = "operator,p1_res,p1_cos,mean_dres,std_dres,mean_dcos,std_dcos";
pub const HIST_CSV_HEADER: &str = "operator,pair_index,d_res,d_cos";

impl OperatorEvalReport {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_CSV_HEADER);
        out.push('\n');
        for s in &self.operators {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.op.name(),
                s.p1_res,
                s.p1_cos,
                s.mean_dres,
                s.std_dres,
                s.mean_dcos,
                s.std_dcos
            );
        }
        out
    }

    pub fn hist_csv(&self) -> String {
        let mut out = String::from(HIST_CSV_HEADER);
        out.push('\n');
        for s in &self.operators {
            for (i, (r, c)) in s.d_res.iter().zip(&s.d_cos).enumerate() {
                let _ = writeln!(out, "{},{i},{r},{c}", s.op.name());
            }
        }
        out
    }

    /// Writes `operator_summary.csv`, `operator_hist.csv`, `heatmap_res.csv`
    /// and `heatmap_cos.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("operator_summary.csv"), self.summary_csv())?;
        fs::write(dir.join("operator_hist.csv"), self.hist_csv())?;
        fs::write(dir.join("heatmap_res.csv"), self.heatmap_res.to_csv())?;
        fs::write(dir.join("heatmap_cos.csv"), self.heatmap_cos.to_csv())?;
        Ok(())
    }
}

impl Heatmap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.ids {
            let _ = write!(out, ",{id}");
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.values) {
            let _ = write!(out, "{id}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_deterministic() {
        let a = gen_synthetic(3, 16, 7);
        assert_eq!(a, gen_synthetic(3, 16, 7));
        assert_ne!(a[0], gen_synthetic(1, 16, 8)[0]);
        for p in &a {
            assert!(p.amplitude().iter().all(|x| (0.0..1.0).contains(x)));
            assert!(p.phase().iter().all(|x| (-PI..PI).contains(x)));
        }
    }

    #[test]
    fn synthetic_ten_thousand_by_512_is_fast() {
        let t = Instant::now();
        let v = gen_synthetic(10_000, 512, 1);
        assert_eq!(v.len(), 10_000);
        assert!(t.elapsed().as_secs_f64() < 1.0, "{:?}", t.elapsed());
    }

    #[test]
    fn latency_stats_examples() {
        let s = LatencyStats::from_samples(&[10.0; 25]).unwrap();
        assert_eq!((s.avg_ms, s.p95_ms), (10.0, 10.0));
        let feed: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = LatencyStats::from_samples(&feed).unwrap();
        assert_eq!(s.p95_ms, 95.0);
        assert_eq!(s.avg_ms, 50.5);
        assert!(LatencyStats::from_samples(&[]).is_none());
    }

    #[test]
    fn nearest_rank_oracle() {
        // rank = ceil(0.95·n), checked against a direct rational computation.
        for n in 1..=300usize {
            let feed: Vec<f64> = (1..=n).rev().map(|v| v as f64).collect();
            let mut rank = 1;
            while rank * 100 < 95 * n {
                rank += 1;
            }
            assert_eq!(nearest_rank(&feed, 95).unwrap(), rank as f64, "n={n}");
        }
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let f = linear_fit(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((f.r_squared - 0.25).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn operator_eval_edge_cases() {
        let mut cfg = OperatorEvalConfig::new(4, 8, 1);
        cfg.ops.clear();
        let r = operator_eval(&cfg).unwrap();
        assert!(r.operators.is_empty());
        assert_eq!(r.summary_csv(), format!("{SUMMARY_CSV_HEADER}\n"));
        assert!(operator_eval(&OperatorEvalConfig::new(1, 8, 1)).is_err());
        let mut cfg = OperatorEvalConfig::new(4, 8, 1);
        cfg.ops = vec![OperatorSpec::Neg, OperatorSpec::Neg];
        assert!(operator_eval(&cfg).is_err());
    }

    #[test]
    fn operator_eval_small_run() {
        let r = operator_eval(&OperatorEvalConfig::new(6, 64, 3)).unwrap();
        assert_eq!(r.operators.len(), 4);
        for s in &r.operators {
            assert_eq!(s.p1_res, 1.0, "{}", s.op);
            assert_eq!(s.p1_cos, 0.0, "{}", s.op);
            assert_eq!(s.d_res.len(), 6);
        }
        assert_eq!(r.heatmap_res.ids.len(), 30);
        for (i, row) in r.heatmap_res.values.iter().enumerate() {
            assert!(row[i].abs() < 1e-12);
        }
        let csv = r.heatmap_cos.to_csv();
        assert_eq!(csv.lines().count(), 31);
        assert!(csv.starts_with("id,00000000000000000000000000000000,"));
    }
}
