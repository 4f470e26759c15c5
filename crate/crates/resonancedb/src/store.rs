//! Append-only pattern store over memory-mapped segments.
//!
//! One writer and any number of readers may use a [`Store`] concurrently.
//! Scans walk the mapped segments directly and see a record iff its flag was
//! live when read; a delete racing a scan may or may not be observed.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use resonance_core::{PatternId, WavePattern};

use crate::error::{Error, Result};
use crate::segment::{
    parse_segment_file_name, segment_file_name, Segment, SegmentHeader, DEFAULT_SEGMENT_RECORDS, FLAG_LIVE,
};

/// Position of a record: segment ordinal and slot within that segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordLocator {
    pub segment: u32,
    pub record: u32,
}

#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    dim: usize,
    segment_capacity: u32,
    segments: RwLock<Vec<Arc<Segment>>>,
    index: RwLock<HashMap<PatternId, RecordLocator>>,
    writer: Mutex<Vec<u8>>,
}

fn list_segments(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if let Some(n) = entry.file_name().to_str().and_then(parse_segment_file_name) {
            found.push((n, entry.path()));
        }
    }
    found.sort();
    for (expected, (n, path)) in found.iter().enumerate() {
        if *n != expected {
            return Err(Error::CorruptHeader {
                path: path.clone(),
                reason: format!("segment ordinals are not contiguous (expected {expected})"),
            });
        }
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

impl Store {
    /// Opens (or starts) a store in `dir`. Existing segments must all have
    /// dimension `dim`; new segments hold up to `max_records_per_segment`.
    pub fn open(dir: impl AsRef<Path>, dim: usize, max_records_per_segment: u32) -> Result<Self> {
        let dir = dir.as_ref();
        SegmentHeader::new(dim, max_records_per_segment)?;
        fs::create_dir_all(dir)?;
        let paths = list_segments(dir)?;
        let mut segments = Vec::with_capacity(paths.len());
        let mut index = HashMap::new();
        let mut reference: Option<SegmentHeader> = None;
        for (ordinal, path) in paths.iter().enumerate() {
            let (segment, live) = Segment::open(path)?;
            let header = segment.header();
            if header.dim as usize != dim {
                return Err(Error::DimMismatch {
                    requested: dim,
                    found: header.dim as usize,
                });
            }
            if let Some(r) = reference {
                if r.format_version != header.format_version {
                    return Err(Error::CorruptHeader {
                        path: path.clone(),
                        reason: "segments disagree on format version".into(),
                    });
                }
            }
            reference = Some(header);
            for (slot, id) in live {
                let loc = RecordLocator {
                    segment: ordinal as u32,
                    record: slot as u32,
                };
                if index.insert(id, loc).is_some() {
                    return Err(Error::CorruptHeader {
                        path: path.clone(),
                        reason: format!("pattern {id} is live in more than one record"),
                    });
                }
            }
            segments.push(Arc::new(segment));
        }
        let store = Self {
            dir: dir.to_path_buf(),
            dim,
            segment_capacity: max_records_per_segment,
            segments: RwLock::new(segments),
            index: RwLock::new(index),
            writer: Mutex::new(Vec::new()),
        };
        // A new store writes its first segment at once so the directory
        // records its dimension even before the first insert.
        if paths.is_empty() {
            store.add_segment(&mut store.segments.write().unwrap())?;
        }
        Ok(store)
    }

    /// Opens a store, taking dimension and segment size from its first segment.
    pub fn open_existing(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::NotAStore(dir.to_path_buf()));
        }
        let first = list_segments(dir)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::NotAStore(dir.to_path_buf()))?;
        let header = SegmentHeader::read_from(&first)?;
        Self::open(dir, header.dim as usize, header.record_capacity)
    }

    /// Creates an empty store with its first segment. Fails with `Conflict`
    /// if `dir` already holds segments.
    pub fn create(dir: impl AsRef<Path>, dim: usize, max_records_per_segment: u32) -> Result<Self> {
        let dir = dir.as_ref();
        if dir.is_dir() && !list_segments(dir)?.is_empty() {
            return Err(Error::Conflict(format!("{} already contains a store", dir.display())));
        }
        Self::open(dir, dim, max_records_per_segment)
    }

    pub fn open_default(dir: impl AsRef<Path>, dim: usize) -> Result<Self> {
        Self::open(dir, dim, DEFAULT_SEGMENT_RECORDS)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segment_capacity(&self) -> u32 {
        self.segment_capacity
    }

    /// Number of live patterns.
    pub fn len(&self) -> usize {
        self.index.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: &PatternId) -> bool {
        self.index.read().unwrap().contains_key(id)
    }

    pub fn segment_count(&self) -> usize {
        self.segments.read().unwrap().len()
    }

    pub fn segment_paths(&self) -> Vec<PathBuf> {
        self.segments
            .read()
            .unwrap()
            .iter()
            .map(|s| s.path().to_path_buf())
            .collect()
    }

    fn add_segment(&self, segments: &mut Vec<Arc<Segment>>) -> Result<Arc<Segment>> {
        let header = SegmentHeader::new(self.dim, self.segment_capacity)?;
        let path = self.dir.join(segment_file_name(segments.len()));
        let segment = Arc::new(Segment::create(&path, header)?);
        segments.push(segment.clone());
        Ok(segment)
    }

    pub fn insert(&self, id: PatternId, p: &WavePattern) -> Result<()> {
        if p.dim() != self.dim {
            return Err(resonance_core::Error::DimensionMismatch {
                expected: self.dim,
                actual: p.dim(),
            }
            .into());
        }
        let mut scratch = self.writer.lock().unwrap();
        if self.contains(&id) {
            return Err(Error::DuplicateId(id));
        }
        let (ordinal, segment) = {
            let mut segments = self.segments.write().unwrap();
            let active = match segments.last() {
                Some(s) if !s.is_full() => s.clone(),
                _ => self.add_segment(&mut segments)?,
            };
            (segments.len() - 1, active)
        };
        let slot = segment.append(id, p, &mut scratch)?;
        self.index.write().unwrap().insert(
            id,
            RecordLocator {
                segment: ordinal as u32,
                record: slot as u32,
            },
        );
        Ok(())
    }

    pub fn locate(&self, id: &PatternId) -> Option<RecordLocator> {
        self.index.read().unwrap().get(id).copied()
    }

    pub fn get(&self, id: &PatternId) -> Result<WavePattern> {
        let loc = self.locate(id).ok_or(Error::NotFound(*id))?;
        self.read(loc).ok_or(Error::NotFound(*id))?
    }

    /// Reads the pattern at `loc` if that record is live.
    pub fn read(&self, loc: RecordLocator) -> Option<Result<WavePattern>> {
        let segment = self.segments.read().unwrap().get(loc.segment as usize)?.clone();
        let slot = loc.record as usize;
        if slot >= segment.used() || segment.flag(slot) != FLAG_LIVE {
            return None;
        }
        Some(segment.read_pattern(slot))
    }

    pub fn delete(&self, id: &PatternId) -> Result<()> {
        let _guard = self.writer.lock().unwrap();
        let loc = self.index.write().unwrap().remove(id).ok_or(Error::NotFound(*id))?;
        let segment = self.segments.read().unwrap()[loc.segment as usize].clone();
        segment.tombstone(loc.record as usize);
        Ok(())
    }

    /// Point-in-time view of the written record range, for scanning.
    pub fn snapshot(&self) -> Snapshot {
        let segments: Vec<(Arc<Segment>, usize)> = self
            .segments
            .read()
            .unwrap()
            .iter()
            .map(|s| (s.clone(), s.used()))
            .collect();
        let mut starts = Vec::with_capacity(segments.len());
        let mut total = 0;
        for (_, used) in &segments {
            starts.push(total);
            total += used;
        }
        Snapshot {
            dim: self.dim,
            segments,
            starts,
            total,
        }
    }

    /// Every live record once, in (segment, record) order.
    pub fn scan_live(&self) -> LiveScan {
        LiveScan {
            snapshot: self.snapshot(),
            segment: 0,
            slot: 0,
        }
    }

    /// Current index contents, ordered by id.
    pub fn index_entries(&self) -> BTreeMap<PatternId, RecordLocator> {
        self.index.read().unwrap().iter().map(|(k, v)| (*k, *v)).collect()
    }

    pub fn headers(&self) -> Vec<SegmentHeader> {
        self.segments.read().unwrap().iter().map(|s| s.header()).collect()
    }

    /// Writes dirty pages of every segment to disk.
    pub fn flush(&self) -> Result<()> {
        for s in self.segments.read().unwrap().iter() {
            s.flush()?;
        }
        Ok(())
    }
}

impl Drop for Store {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

/// Written-slot ranges of all segments at one instant. Slots are numbered
/// globally in (segment, record) order.
#[derive(Debug, Clone)]
pub struct Snapshot {
    dim: usize,
    segments: Vec<(Arc<Segment>, usize)>,
    starts: Vec<usize>,
    total: usize,
}

impl Snapshot {
    /// Number of written slots, live or not.
    pub fn total_slots(&self) -> usize {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Calls `f(id, amplitude, phase)` for each live record whose global slot
    /// falls in `range`, in slot order. The slices are reused between calls.
    pub fn for_each_live(&self, range: Range<usize>, mut f: impl FnMut(PatternId, &[f64], &[f64])) {
        let (mut amplitude, mut phase) = (vec![0.0; self.dim], vec![0.0; self.dim]);
        let end = range.end.min(self.total);
        let mut pos = range.start;
        let mut seg = match self.starts.binary_search(&pos) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        while pos < end && seg < self.segments.len() {
            let (segment, used) = &self.segments[seg];
            let start = self.starts[seg];
            let stop = end.min(start + used);
            for slot in pos - start..stop - start {
                if segment.flag(slot) != FLAG_LIVE {
                    continue;
                }
                segment.decode_into(slot, &mut amplitude, &mut phase);
                f(segment.id(slot), &amplitude, &phase);
            }
            pos = stop.max(pos);
            seg += 1;
        }
    }
}

/// Iterator over live `(id, locator)` pairs; see [`Store::scan_live`].
#[derive(Debug)]
pub struct LiveScan {
    snapshot: Snapshot,
    segment: usize,
    slot: usize,
}

impl Iterator for LiveScan {
    type Item = (PatternId, RecordLocator);

    fn next(&mut self) -> Option<Self::Item> {
        while let Some((segment, used)) = self.snapshot.segments.get(self.segment) {
            while self.slot < *used {
                let slot = self.slot;
                self.slot += 1;
                if segment.flag(slot) == FLAG_LIVE {
                    let loc = RecordLocator {
                        segment: self.segment as u32,
                        record: slot as u32,
                    };
                    return Some((segment.id(slot), loc));
                }
            }
            self.segment += 1;
            self.slot = 0;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::{quantize, record_len, HEADER_LEN};
    use std::f64::consts::PI;

    fn pat(seed: u64, dim: usize) -> WavePattern {
        let a = (0..dim)
            .map(|i| ((seed as usize * 7 + i * 13) % 17) as f64 / 3.0)
            .collect();
        let p = (0..dim)
            .map(|i| ((seed as usize * 5 + i * 11) % 23) as f64 / 23.0 * 2.0 * PI - PI)
            .collect();
        WavePattern::new(a, p).unwrap()
    }

    fn id(n: u128) -> PatternId {
        PatternId::from_u128(n)
    }

    #[test]
    fn empty_open_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path(), 4, 10).unwrap();
        assert_eq!(store.len(), 0);
        assert_eq!(store.scan_live().count(), 0);
        for i in 0..3 {
            store.insert(id(i), &pat(i as u64, 4)).unwrap();
        }
        drop(store);
        let store = Store::open(dir.path(), 4, 10).unwrap();
        assert_eq!(store.len(), 3);
        let ids: Vec<PatternId> = store.scan_live().map(|(i, _)| i).collect();
        assert_eq!(ids, vec![id(0), id(1), id(2)]);
    }

    #[test]
    fn dim_mismatch_on_reopen() {
        let dir = tempfile::tempdir().unwrap();
        Store::create(dir.path(), 512, 4).unwrap();
        match Store::open(dir.path(), 1024, 4) {
            Err(Error::DimMismatch {
                requested: 1024,
                found: 512,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn create_refuses_existing_store() {
        let dir = tempfile::tempdir().unwrap();
        Store::create(dir.path(), 3, 4).unwrap();
        assert!(matches!(Store::create(dir.path(), 3, 4), Err(Error::Conflict(_))));
        let s = Store::open_existing(dir.path()).unwrap();
        assert_eq!((s.dim(), s.segment_capacity()), (3, 4));
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        Store::create(dir.path(), 3, 4).unwrap();
        let path = dir.path().join("seg-000000.rdb");
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            Store::open(dir.path(), 3, 4),
            Err(Error::CorruptHeader { .. })
        ));
    }

    #[test]
    fn insert_get_delete() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path(), 5, 8).unwrap();
        let p = pat(1, 5);
        store.insert(id(1), &p).unwrap();
        assert_eq!(store.get(&id(1)).unwrap(), quantize(&p).unwrap());
        assert!(matches!(store.insert(id(1), &p), Err(Error::DuplicateId(_))));
        assert!(matches!(store.get(&id(2)), Err(Error::NotFound(_))));
        assert!(store.insert(id(3), &pat(1, 4)).is_err());
        store.delete(&id(1)).unwrap();
        assert!(matches!(store.get(&id(1)), Err(Error::NotFound(_))));
        assert!(matches!(store.delete(&id(1)), Err(Error::NotFound(_))));
        // Id becomes reusable after deletion.
        store.insert(id(1), &p).unwrap();
        drop(store);
        let store = Store::open(dir.path(), 5, 8).unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store.locate(&id(1)).unwrap().record, 1);
    }

    #[test]
    fn rolls_over_to_new_segment() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path(), 2, 4).unwrap();
        for i in 0..5 {
            store.insert(id(i), &pat(i as u64, 2)).unwrap();
        }
        assert_eq!(store.segment_count(), 2);
        let files = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(files, 2);
        assert!(dir.path().join("seg-000001.rdb").exists());
        let locs: Vec<RecordLocator> = store.scan_live().map(|(_, l)| l).collect();
        assert_eq!(locs[4], RecordLocator { segment: 1, record: 0 });
    }

    #[test]
    fn scan_counts_live_records() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path(), 3, 7).unwrap();
        for i in 0..30 {
            store.insert(id(i), &pat(i as u64, 3)).unwrap();
        }
        for i in (0..30).step_by(4) {
            store.delete(&id(i)).unwrap();
        }
        // Counting oracle: 30 inserts minus 8 deletes.
        assert_eq!(store.scan_live().count(), 22);
        let snap = store.snapshot();
        assert_eq!(snap.total_slots(), 30);
        let mut seen = Vec::new();
        snap.for_each_live(0..snap.total_slots(), |i, _, _| seen.push(i));
        let scanned: Vec<PatternId> = store.scan_live().map(|(i, _)| i).collect();
        assert_eq!(seen, scanned);
        let mut split = Vec::new();
        snap.for_each_live(0..13, |i, _, _| split.push(i));
        snap.for_each_live(13..30, |i, _, _| split.push(i));
        assert_eq!(split, scanned);
    }

    #[test]
    fn truncated_tail_record_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let dim = 6;
        let store = Store::open(dir.path(), dim, 16).unwrap();
        for i in 0..4 {
            store.insert(id(i), &pat(i as u64, dim)).unwrap();
        }
        drop(store);
        let path = dir.path().join("seg-000000.rdb");
        // Cut the file in the middle of the last published record.
        let cut = HEADER_LEN + 3 * record_len(dim) + 9;
        fs::OpenOptions::new()
            .write(true)
            .open(&path)
            .unwrap()
            .set_len(cut as u64)
            .unwrap();
        let store = Store::open(dir.path(), dim, 16).unwrap();
        assert_eq!(store.len(), 3);
        assert!(!store.contains(&id(3)));
        assert_eq!(store.get(&id(2)).unwrap(), quantize(&pat(2, dim)).unwrap());
        store.insert(id(9), &pat(9, dim)).unwrap();
        assert_eq!(store.locate(&id(9)).unwrap().record, 3);
    }

    #[test]
    fn concurrent_readers_during_inserts() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path(), 8, 32).unwrap();
        std::thread::scope(|s| {
            s.spawn(|| {
                for i in 0..200 {
                    store.insert(id(i), &pat(i as u64, 8)).unwrap();
                }
            });
            for _ in 0..2 {
                s.spawn(|| {
                    let mut last = 0;
                    for _ in 0..50 {
                        let n = store.scan_live().count();
                        assert!(n >= last);
                        last = n;
                    }
                });
            }
        });
        assert_eq!(store.scan_live().count(), 200);
    }
}
