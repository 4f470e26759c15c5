//! On-disk segment format.
//!
//! A segment is one file: a 64-byte header followed by `record_capacity`
//! fixed-size records. The file is sized to full capacity at creation and
//! memory mapped as a whole.
//!
//! ```text
//! header (little-endian)
//!   0..8    magic "RSNDB001"
//!   8..10   format_version  u16
//!   10..12  reserved (zero)
//!   12..16  dim             u32
//!   16..20  record_capacity u32
//!   20..64  reserved (zero)
//!
//! record, align8(1 + 16 + 8·dim) bytes
//!   0       flag: 0x00 empty, 0x01 live, 0x02 tombstone
//!   1..17   pattern id
//!   17..    dim × f32 amplitude, then dim × f32 phase, zero padding
//! ```
//!
//! A record is published by writing its flag byte last with release
//! ordering; readers load the flag with acquire ordering before touching the
//! payload. Records whose flag is not `0x01` are never returned.

use std::f64::consts::PI;
use std::fs::{File, OpenOptions};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU8, AtomicUsize, Ordering};

use memmap2::{MmapOptions, MmapRaw};
use resonance_core::{PatternId, WavePattern};
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"RSNDB001";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 64;
pub const DEFAULT_SEGMENT_RECORDS: u32 = 65_536;

pub const FLAG_EMPTY: u8 = 0x00;
pub const FLAG_LIVE: u8 = 0x01;
pub const FLAG_TOMBSTONE: u8 = 0x02;

const ID_OFFSET: usize = 1;
const PAYLOAD_OFFSET: usize = ID_OFFSET + PatternId::LEN;

/// Bytes per record for patterns of `dim` entries.
pub const fn record_len(dim: usize) -> usize {
    (PAYLOAD_OFFSET + 8 * dim + 7) & !7
}

pub fn segment_file_name(ordinal: usize) -> String {
    format!("seg-{ordinal:06}.rdb")
}

/// Parses `seg-NNNNNN.rdb`.
pub fn parse_segment_file_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("seg-")?.strip_suffix(".rdb")?;
    if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SegmentHeader {
    pub format_version: u16,
    pub dim: u32,
    pub record_capacity: u32,
}

impl SegmentHeader {
    pub fn new(dim: usize, record_capacity: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if record_capacity == 0 {
            return Err(Error::InvalidArgument("segment capacity must be at least 1".into()));
        }
        let dim =
            u32::try_from(dim).map_err(|_| Error::InvalidArgument(format!("dimension {dim} does not fit in u32")))?;
        Ok(Self {
            format_version: FORMAT_VERSION,
            dim,
            record_capacity,
        })
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..8].copy_from_slice(&MAGIC);
        out[8..10].copy_from_slice(&self.format_version.to_le_bytes());
        out[12..16].copy_from_slice(&self.dim.to_le_bytes());
        out[16..20].copy_from_slice(&self.record_capacity.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("header is {} bytes, expected {HEADER_LEN}", bytes.len()));
        }
        if bytes[0..8] != MAGIC {
            return Err(format!("bad magic {:02x?}", &bytes[0..8]));
        }
        let format_version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if format_version != FORMAT_VERSION {
            return Err(format!("unsupported format version {format_version}"));
        }
        let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        let record_capacity = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
        if dim == 0 {
            return Err("dimension is zero".into());
        }
        if record_capacity == 0 {
            return Err("record capacity is zero".into());
        }
        Ok(Self {
            format_version,
            dim,
            record_capacity,
        })
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let mut buf = [0u8; HEADER_LEN];
        let mut file = File::open(path)?;
        let corrupt = |reason: String| Error::CorruptHeader {
            path: path.to_path_buf(),
            reason,
        };
        file.read_exact(&mut buf)
            .map_err(|e| corrupt(format!("cannot read header: {e}")))?;
        Self::decode(&buf).map_err(corrupt)
    }

    pub fn record_len(&self) -> usize {
        record_len(self.dim as usize)
    }

    pub fn file_len(&self) -> u64 {
        HEADER_LEN as u64 + self.record_capacity as u64 * self.record_len() as u64
    }
}

/// Widens a stored phase. The `f32` nearest to `±π` lies just outside
/// `[-π, π)` in `f64`; both seam values decode to `-π`.
#[inline]
fn widen_phase(stored: f32) -> f64 {
    let p = stored as f64;
    if (-PI..PI).contains(&p) {
        p
    } else {
        -PI
    }
}

#[inline]
fn narrow_phase(phase: f64) -> f32 {
    let p = phase as f32;
    if (p as f64) >= PI {
        -PI as f32
    } else {
        p
    }
}

/// The pattern a store returns after persisting `p` at 32-bit precision.
pub fn quantize(p: &WavePattern) -> Result<WavePattern> {
    let amplitude = p.amplitude().iter().map(|&a| a as f32 as f64).collect();
    let phase = p.phase().iter().map(|&x| widen_phase(narrow_phase(x))).collect();
    Ok(WavePattern::new(amplitude, phase)?)
}

/// Decodes the payload of a record into caller-provided buffers.
pub(crate) fn decode_payload(payload: &[u8], amplitude: &mut [f64], phase: &mut [f64]) {
    let dim = amplitude.len();
    let (amp_bytes, rest) = payload.split_at(4 * dim);
    for (dst, b) in amplitude.iter_mut().zip(amp_bytes.chunks_exact(4)) {
        *dst = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
    }
    for (dst, b) in phase.iter_mut().zip(rest[..4 * dim].chunks_exact(4)) {
        *dst = widen_phase(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    }
}

fn encode_payload(p: &WavePattern, out: &mut Vec<u8>) -> Result<()> {
    out.clear();
    for (index, &a) in p.amplitude().iter().enumerate() {
        let narrowed = a as f32;
        if !narrowed.is_finite() {
            return Err(resonance_core::Error::NonFiniteValue { index }.into());
        }
        out.extend_from_slice(&narrowed.to_le_bytes());
    }
    for &x in p.phase() {
        out.extend_from_slice(&narrow_phase(x).to_le_bytes());
    }
    Ok(())
}

/// A mapped segment file.
pub(crate) struct Segment {
    path: PathBuf,
    header: SegmentHeader,
    record_len: usize,
    map: MmapRaw,
    /// Slots `[0, used)` have been written at some point.
    used: AtomicUsize,
}

impl std::fmt::Debug for Segment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Segment")
            .field("path", &self.path)
            .field("header", &self.header)
            .field("used", &self.used())
            .finish()
    }
}

/// Live records found while opening a segment, as `(slot, id)`.
pub(crate) type LiveRecords = Vec<(usize, PatternId)>;

impl Segment {
    pub(crate) fn create(path: &Path, header: SegmentHeader) -> Result<Self> {
        let file = OpenOptions::new().read(true).write(true).create_new(true).open(path)?;
        file.set_len(header.file_len())?;
        let map = MmapOptions::new().map_raw(&file)?;
        // SAFETY: the mapping covers at least HEADER_LEN bytes and nothing else
        // references it yet.
        unsafe {
            std::ptr::copy_nonoverlapping(header.encode().as_ptr(), map.as_mut_ptr(), HEADER_LEN);
        }
        map.flush_range(0, HEADER_LEN)?;
        Ok(Self {
            path: path.to_path_buf(),
            header,
            record_len: header.record_len(),
            map,
            used: AtomicUsize::new(0),
        })
    }

    /// Maps an existing segment and collects its live records. A file cut
    /// short inside a record is re-extended and that record is discarded.
    pub(crate) fn open(path: &Path) -> Result<(Self, LiveRecords)> {
        let header = SegmentHeader::read_from(path)?;
        let file = OpenOptions::new().read(true).write(true).open(path)?;
        let actual_len = file.metadata()?.len();
        let full_len = header.file_len();
        if actual_len > full_len {
            return Err(Error::CorruptHeader {
                path: path.to_path_buf(),
                reason: format!("file is {actual_len} bytes, capacity allows {full_len}"),
            });
        }
        let record_len = header.record_len();
        let capacity = header.record_capacity as usize;
        let complete = ((actual_len as usize - HEADER_LEN) / record_len).min(capacity);
        if actual_len < full_len {
            file.set_len(full_len)?;
        }
        let map = MmapOptions::new().map_raw(&file)?;
        let segment = Self {
            path: path.to_path_buf(),
            header,
            record_len,
            map,
            used: AtomicUsize::new(0),
        };
        if complete < capacity {
            // The first incomplete slot may still carry a published flag.
            segment.flag_cell(complete).store(FLAG_EMPTY, Ordering::Release);
        }

        let mut used = 0;
        let mut live = Vec::new();
        for slot in 0..capacity {
            match segment.flag(slot) {
                FLAG_EMPTY => {}
                FLAG_LIVE => {
                    live.push((slot, segment.id(slot)));
                    used = slot + 1;
                }
                _ => used = slot + 1,
            }
        }
        segment.used.store(used, Ordering::Release);
        Ok((segment, live))
    }

    pub(crate) fn path(&self) -> &Path {
        &self.path
    }

    pub(crate) fn header(&self) -> SegmentHeader {
        self.header
    }

    pub(crate) fn capacity(&self) -> usize {
        self.header.record_capacity as usize
    }

    pub(crate) fn used(&self) -> usize {
        self.used.load(Ordering::Acquire)
    }

    pub(crate) fn is_full(&self) -> bool {
        self.used() >= self.capacity()
    }

    fn offset(&self, slot: usize) -> usize {
        assert!(slot < self.capacity(), "slot {slot} out of range");
        HEADER_LEN + slot * self.record_len
    }

    fn flag_cell(&self, slot: usize) -> &AtomicU8 {
        let off = self.offset(slot);
        // SAFETY: `off` is inside the mapping; AtomicU8 has alignment 1 and the
        // flag byte is only ever accessed through this atomic view.
        unsafe { &*(self.map.as_mut_ptr().add(off) as *const AtomicU8) }
    }

    pub(crate) fn flag(&self, slot: usize) -> u8 {
        self.flag_cell(slot).load(Ordering::Acquire)
    }

    /// Id and payload bytes of a slot. Only call after observing a live flag.
    fn body(&self, slot: usize) -> &[u8] {
        let off = self.offset(slot);
        // SAFETY: in bounds; bytes after the flag are written once before the
        // release-store of the live flag and never modified afterwards.
        unsafe { std::slice::from_raw_parts(self.map.as_ptr().add(off + ID_OFFSET), self.record_len - 1) }
    }

    pub(crate) fn id(&self, slot: usize) -> PatternId {
        let mut id = [0u8; PatternId::LEN];
        id.copy_from_slice(&self.body(slot)[..PatternId::LEN]);
        PatternId(id)
    }

    pub(crate) fn decode_into(&self, slot: usize, amplitude: &mut [f64], phase: &mut [f64]) {
        decode_payload(&self.body(slot)[PatternId::LEN..], amplitude, phase);
    }

    pub(crate) fn read_pattern(&self, slot: usize) -> Result<WavePattern> {
        let dim = self.header.dim as usize;
        let (mut a, mut p) = (vec![0.0; dim], vec![0.0; dim]);
        self.decode_into(slot, &mut a, &mut p);
        Ok(WavePattern::new(a, p)?)
    }

    /// Appends a record. The caller must hold the store's writer lock.
    pub(crate) fn append(&self, id: PatternId, p: &WavePattern, scratch: &mut Vec<u8>) -> Result<usize> {
        let slot = self.used();
        if slot >= self.capacity() {
            return Err(Error::Conflict(format!("segment {} is full", self.path.display())));
        }
        encode_payload(p, scratch)?;
        let off = self.offset(slot);
        // SAFETY: the slot is beyond `used`, so no reader dereferences its body
        // until the flag below is published; the writer lock excludes other writers.
        unsafe {
            let dst = self.map.as_mut_ptr().add(off + ID_OFFSET);
            std::ptr::copy_nonoverlapping(id.0.as_ptr(), dst, PatternId::LEN);
            std::ptr::copy_nonoverlapping(scratch.as_ptr(), dst.add(PatternId::LEN), scratch.len());
        }
        self.flag_cell(slot).store(FLAG_LIVE, Ordering::Release);
        self.used.store(slot + 1, Ordering::Release);
        Ok(slot)
    }

    pub(crate) fn tombstone(&self, slot: usize) {
        self.flag_cell(slot).store(FLAG_TOMBSTONE, Ordering::Release);
    }

    pub(crate) fn flush(&self) -> Result<()> {
        self.map.flush()?;
        Ok(())
    }
}
