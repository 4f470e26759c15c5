//! Exact top-k retrieval by parallel full scan.
//!
//! The written slot range is split into contiguous chunks, one per worker.
//! Each worker keeps a bounded selection of its best `k` hits; the partial
//! lists are merged once all workers finish. Hits are ordered by score
//! descending, then id ascending, so the result does not depend on the
//! worker count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Range;
use std::thread;

use resonance_core::{Hit, KernelKind, QueryScorer, WavePattern};

use crate::error::{Error, Result};
use crate::store::Store;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "RESONANCEDB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryConfig {
    pub k: usize,
    pub workers: usize,
    pub kernel: KernelKind,
}

/// `RESONANCEDB_WORKERS` if set to a positive integer, else the CPU count.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

impl QueryConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            workers: default_workers(),
            kernel: KernelKind::Scalar,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelKind) -> Self {
        self.kernel = kernel;
        self
    }

    fn check(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Splits `[0, n)` into at most `workers` contiguous non-empty ranges whose
/// sizes differ by at most one. Larger ranges come first.
pub fn partition_plan(n: usize, workers: usize) -> Vec<Range<usize>> {
    let parts = workers.max(1).min(n);
    if parts == 0 {
        return Vec::new();
    }
    let (base, extra) = (n / parts, n % parts);
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Heap entry whose maximum is the worst-ranked hit.
#[derive(Debug, Clone, Copy)]
struct Ranked(Hit);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.rank_cmp(&other.0)
    }
}

/// Keeps the best `k` hits seen so far.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k.saturating_add(1).min(1 << 16)),
        }
    }

    pub fn push(&mut self, hit: Hit) {
        if self.k == 0 {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push(Ranked(hit));
        } else if let Some(worst) = self.heap.peek() {
            if hit.rank_cmp(&worst.0) == Ordering::Less {
                self.heap.pop();
                self.heap.push(Ranked(hit));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Hits in result order.
    pub fn into_sorted(self) -> Vec<Hit> {
        let mut hits: Vec<Hit> = self.heap.into_iter().map(|r| r.0).collect();
        hits.sort_by(Hit::rank_cmp);
        hits
    }
}

/// Merges per-worker result lists into the global top `k`.
pub fn merge_heaps(partials: impl IntoIterator<Item = Vec<Hit>>, k: usize) -> Vec<Hit> {
    let mut top = TopK::new(k);
    for hit in partials.into_iter().flatten() {
        top.push(hit);
    }
    top.into_sorted()
}

/// Exact top-k search of `store` for `query`.
pub fn top_k(store: &Store, query: &WavePattern, cfg: &QueryConfig) -> Result<Vec<Hit>> {
    cfg.check()?;
    if query.dim() != store.dim() {
        return Err(resonance_core::Error::DimensionMismatch {
            expected: store.dim(),
            actual: query.dim(),
        }
        .into());
    }
    let snapshot = store.snapshot();
    let scorer = QueryScorer::new(query, cfg.kernel);
    let scan = |range: Range<usize>| {
        let mut top = TopK::new(cfg.k);
        snapshot.for_each_live(range, |id, amplitude, phase| {
            top.push(Hit::new(id, scorer.score(amplitude, phase)));
        });
        top.into_sorted()
    };
    let plan = partition_plan(snapshot.total_slots(), cfg.workers);
    let partials: Vec<Vec<Hit>> = if plan.len() <= 1 {
        plan.into_iter().map(scan).collect()
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = plan.into_iter().map(|r| s.spawn(|| scan(r))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scan worker panicked"))
                .collect()
        })
    };
    Ok(merge_heaps(partials, cfg.k))
}
