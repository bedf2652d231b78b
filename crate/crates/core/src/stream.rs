//! The toy elementary-stream format.
//!
//! A [`ToyStream`] stands in for real coded video: access units carry
//! timestamps, tile geometry and an opaque payload, and "decoding" (see
//! [`crate::decode`]) is a pure function of the payload. This keeps every
//! bitstream transform exactly verifiable without entropy-coding machinery.
//!
//! # Container format
//!
//! Little-endian binary, 24-byte header:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "TOYS"
//!      4     2  version (u16, = 1)
//!      6     2  reserved (zero)
//!      8     4  stream_id (u32)
//!     12     1  codec_profile (0 = TOY_BASE, 1 = TOY_TILED)
//!     13     1  grid_cols
//!     14     1  grid_rows
//!     15     1  reserved (zero)
//!     16     4  tick_rate (u32)
//!     20     4  unit_count (u32)
//! ```
//!
//! followed by `unit_count` unit records, each a fixed 32-byte header plus
//! payload:
//!
//! ```text
//! poc u32, dts i64, pts i64, width u16, height u16, tile_col u8,
//! tile_row u8, flags u8 (bit0 = parameter set), reserved u8,
//! payload_len u32, payload bytes
//! ```

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::mix;

pub const MAGIC: [u8; 4] = *b"TOYS";
pub const CONTAINER_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;
pub const UNIT_HEADER_LEN: usize = 32;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("bad magic: expected \"TOYS\"")]
    BadMagic,
    #[error("truncated input: needed {needed} more byte(s) for {what}")]
    TruncatedInput { what: &'static str, needed: usize },
    #[error("stream invariant violated: {0}")]
    InvariantViolation(String),
}

/// Codec profile of a toy stream. `ToyTiled` streams carry one unit per tile
/// per picture; `ToyBase` streams are a single 1x1 tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CodecProfile {
    ToyBase,
    ToyTiled,
}

impl CodecProfile {
    pub fn as_u8(self) -> u8 {
        match self {
            CodecProfile::ToyBase => 0,
            CodecProfile::ToyTiled => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<CodecProfile> {
        match v {
            0 => Some(CodecProfile::ToyBase),
            1 => Some(CodecProfile::ToyTiled),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecProfile::ToyBase => "TOY_BASE",
            CodecProfile::ToyTiled => "TOY_TILED",
        }
    }
}

/// One coded picture's data for one tile: the j-th access unit of a stream.
///
/// Within a tiled stream, all units sharing a `poc` are the tiles of one
/// coded picture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessUnit {
    pub stream_id: u32,
    /// Picture order count: position of the picture in output order.
    pub poc: u32,
    /// Decode timestamp in ticks.
    pub dts: i64,
    /// Presentation timestamp in ticks; never before `dts`.
    pub pts: i64,
    pub width: u16,
    pub height: u16,
    pub tile_col: u8,
    pub tile_row: u8,
    pub is_parameter_set: bool,
    pub payload: Vec<u8>,
}

impl AccessUnit {
    /// Serialized size of this unit inside the container (header + payload).
    ///
    /// This is also the unit's byte footprint in the target-decoder input
    /// buffer model.
    pub fn wire_size(&self) -> usize {
        UNIT_HEADER_LEN + self.payload.len()
    }
}

/// An ordered sequence of access units plus stream-level metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyStream {
    pub stream_id: u32,
    pub codec_profile: CodecProfile,
    /// Ticks per second for all timestamps in this stream.
    pub tick_rate: u32,
    pub grid_cols: u8,
    pub grid_rows: u8,
    pub units: Vec<AccessUnit>,
}

impl ToyStream {
    /// Checks every stream invariant; all operations producing streams
    /// re-validate through this.
    pub fn validate(&self) -> Result<(), StreamError> {
        if self.tick_rate == 0 {
            return Err(StreamError::InvariantViolation("tick_rate must be > 0".into()));
        }
        if self.grid_cols == 0 || self.grid_rows == 0 {
            return Err(StreamError::InvariantViolation("grid must be at least 1x1".into()));
        }
        if self.codec_profile == CodecProfile::ToyBase && (self.grid_cols != 1 || self.grid_rows != 1) {
            return Err(StreamError::InvariantViolation(
                "TOY_BASE streams must declare a 1x1 grid".into(),
            ));
        }
        let mut last_dts: Option<i64> = None;
        let mut seen_pocs: Vec<u32> = Vec::new();
        let mut tile_dims: Vec<Option<(u16, u16)>> =
            vec![None; self.grid_cols as usize * self.grid_rows as usize];
        for (i, unit) in self.units.iter().enumerate() {
            if unit.stream_id != self.stream_id {
                return Err(StreamError::InvariantViolation(format!(
                    "unit {} has stream_id {} but stream is {}",
                    i, unit.stream_id, self.stream_id
                )));
            }
            if unit.pts < unit.dts {
                return Err(StreamError::InvariantViolation(format!(
                    "unit {} has pts {} before dts {}",
                    i, unit.pts, unit.dts
                )));
            }
            if let Some(prev) = last_dts {
                if unit.dts < prev {
                    return Err(StreamError::InvariantViolation(format!(
                        "dts decreases at unit {} ({} after {})",
                        i, unit.dts, prev
                    )));
                }
            }
            last_dts = Some(unit.dts);
            if !unit.is_parameter_set {
                if unit.width == 0 || unit.height == 0 {
                    return Err(StreamError::InvariantViolation(format!(
                        "picture unit {} has zero dimension",
                        i
                    )));
                }
                if unit.tile_col >= self.grid_cols || unit.tile_row >= self.grid_rows {
                    return Err(StreamError::InvariantViolation(format!(
                        "unit {} tile ({}, {}) outside {}x{} grid",
                        i, unit.tile_col, unit.tile_row, self.grid_cols, self.grid_rows
                    )));
                }
                let slot = unit.tile_row as usize * self.grid_cols as usize + unit.tile_col as usize;
                match tile_dims[slot] {
                    None => tile_dims[slot] = Some((unit.width, unit.height)),
                    Some(dims) if dims != (unit.width, unit.height) => {
                        return Err(StreamError::InvariantViolation(format!(
                            "tile ({}, {}) changes dimensions at unit {}",
                            unit.tile_col, unit.tile_row, i
                        )));
                    }
                    Some(_) => {}
                }
                // POC uniqueness is per (poc, tile) — units of one picture
                // share a poc, one per tile.
                let key = unit.poc;
                if self.codec_profile == CodecProfile::ToyBase {
                    if seen_pocs.contains(&key) {
                        return Err(StreamError::InvariantViolation(format!(
                            "duplicate poc {} at unit {}",
                            key, i
                        )));
                    }
                    seen_pocs.push(key);
                }
            }
        }
        if self.codec_profile == CodecProfile::ToyTiled {
            // In a tiled stream, uniqueness holds per (poc, tile_col, tile_row).
            let mut seen: Vec<(u32, u8, u8)> = Vec::new();
            for (i, unit) in self.units.iter().enumerate() {
                if unit.is_parameter_set {
                    continue;
                }
                let key = (unit.poc, unit.tile_col, unit.tile_row);
                if seen.contains(&key) {
                    return Err(StreamError::InvariantViolation(format!(
                        "duplicate (poc, tile) ({}, {}, {}) at unit {}",
                        key.0, key.1, key.2, i
                    )));
                }
                seen.push(key);
            }
        }
        Ok(())
    }

    /// Total elementary-stream byte count (serialized unit records, no
    /// container header).
    pub fn elementary_size(&self) -> usize {
        self.units.iter().map(AccessUnit::wire_size).sum()
    }

    /// POCs of the stream's pictures in decode order (parameter sets skipped,
    /// tiled units collapsed per picture).
    pub fn picture_pocs(&self) -> Vec<u32> {
        let mut pocs: Vec<u32> = Vec::new();
        for unit in &self.units {
            if unit.is_parameter_set {
                continue;
            }
            if pocs.last() != Some(&unit.poc) && !pocs.contains(&unit.poc) {
                pocs.push(unit.poc);
            }
        }
        pocs
    }

    /// Nominal frame interval in ticks: the median of consecutive dts deltas
    /// over picture units, robust to a single irregular gap. Falls back to 1
    /// when the stream has fewer than two distinct picture timestamps.
    pub fn nominal_frame_interval(&self) -> i64 {
        let mut times: Vec<i64> = Vec::new();
        for unit in &self.units {
            if unit.is_parameter_set {
                continue;
            }
            if times.last() != Some(&unit.dts) {
                times.push(unit.dts);
            }
        }
        let mut deltas: Vec<i64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        if deltas.is_empty() {
            return 1;
        }
        deltas.sort_unstable();
        // Lower median keeps the result an observed delta.
        deltas[(deltas.len() - 1) / 2]
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], StreamError> {
        if self.bytes.len() - self.pos < n {
            return Err(StreamError::TruncatedInput {
                what,
                needed: n - (self.bytes.len() - self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, StreamError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, StreamError> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, StreamError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn i64(&mut self, what: &'static str) -> Result<i64, StreamError> {
        let b = self.take(8, what)?;
        Ok(i64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]))
    }
}

/// Serializes a stream to the binary container. Deterministic: the same
/// stream always yields the same bytes.
pub fn serialize_stream(stream: &ToyStream) -> Result<Vec<u8>, StreamError> {
    stream.validate()?;
    let mut out = Vec::with_capacity(HEADER_LEN + stream.elementary_size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&stream.stream_id.to_le_bytes());
    out.push(stream.codec_profile.as_u8());
    out.push(stream.grid_cols);
    out.push(stream.grid_rows);
    out.push(0);
    out.extend_from_slice(&stream.tick_rate.to_le_bytes());
    out.extend_from_slice(&(stream.units.len() as u32).to_le_bytes());
    for unit in &stream.units {
        out.extend_from_slice(&unit.poc.to_le_bytes());
        out.extend_from_slice(&unit.dts.to_le_bytes());
        out.extend_from_slice(&unit.pts.to_le_bytes());
        out.extend_from_slice(&unit.width.to_le_bytes());
        out.extend_from_slice(&unit.height.to_le_bytes());
        out.push(unit.tile_col);
        out.push(unit.tile_row);
        out.push(unit.is_parameter_set as u8);
        out.push(0);
        out.extend_from_slice(&(unit.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&unit.payload);
    }
    Ok(out)
}

/// Parses the binary container. Inverse of [`serialize_stream`] on its image;
/// every stream invariant is re-checked, so a successful parse never yields a
/// partially-valid stream.
pub fn parse_stream(bytes: &[u8]) -> Result<ToyStream, StreamError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(StreamError::BadMagic);
    }
    let version = cur.u16("version")?;
    if version != CONTAINER_VERSION {
        return Err(StreamError::InvariantViolation(format!(
            "unsupported container version {}",
            version
        )));
    }
    cur.take(2, "header reserved")?;
    let stream_id = cur.u32("stream_id")?;
    let profile_byte = cur.u8("codec_profile")?;
    let codec_profile = CodecProfile::from_u8(profile_byte).ok_or_else(|| {
        StreamError::InvariantViolation(format!("unknown codec profile {}", profile_byte))
    })?;
    let grid_cols = cur.u8("grid_cols")?;
    let grid_rows = cur.u8("grid_rows")?;
    cur.u8("reserved")?;
    let tick_rate = cur.u32("tick_rate")?;
    let unit_count = cur.u32("unit_count")?;
    let mut units = Vec::with_capacity(unit_count as usize);
    for _ in 0..unit_count {
        let poc = cur.u32("unit poc")?;
        let dts = cur.i64("unit dts")?;
        let pts = cur.i64("unit pts")?;
        let width = cur.u16("unit width")?;
        let height = cur.u16("unit height")?;
        let tile_col = cur.u8("unit tile_col")?;
        let tile_row = cur.u8("unit tile_row")?;
        let flags = cur.u8("unit flags")?;
        cur.u8("unit reserved")?;
        let payload_len = cur.u32("payload_len")?;
        let payload = cur.take(payload_len as usize, "payload")?.to_vec();
        units.push(AccessUnit {
            stream_id,
            poc,
            dts,
            pts,
            width,
            height,
            tile_col,
            tile_row,
            is_parameter_set: flags & 1 != 0,
            payload,
        });
    }
    if cur.pos != bytes.len() {
        return Err(StreamError::InvariantViolation(format!(
            "{} trailing byte(s) after last unit",
            bytes.len() - cur.pos
        )));
    }
    let stream = ToyStream {
        stream_id,
        codec_profile,
        tick_rate,
        grid_cols,
        grid_rows,
        units,
    };
    stream.validate()?;
    Ok(stream)
}

/// Parameters for [`make_test_stream`]. `width`/`height` are per tile;
/// the composed picture is `width * grid_cols` by `height * grid_rows`.
#[derive(Debug, Clone)]
pub struct TestStreamSpec {
    pub stream_id: u32,
    pub frames: u32,
    pub width: u16,
    pub height: u16,
    pub grid_cols: u8,
    pub grid_rows: u8,
    pub fps: u32,
    pub tick_rate: u32,
    pub payload_bytes_per_frame: u32,
}

impl TestStreamSpec {
    pub fn new(frames: u32, width: u16, height: u16) -> TestStreamSpec {
        TestStreamSpec {
            stream_id: 0,
            frames,
            width,
            height,
            grid_cols: 1,
            grid_rows: 1,
            fps: 30,
            tick_rate: 90_000,
            payload_bytes_per_frame: 64,
        }
    }

    pub fn stream_id(mut self, id: u32) -> Self {
        self.stream_id = id;
        self
    }

    pub fn grid(mut self, cols: u8, rows: u8) -> Self {
        self.grid_cols = cols;
        self.grid_rows = rows;
        self
    }

    pub fn fps(mut self, fps: u32) -> Self {
        self.fps = fps;
        self
    }

    pub fn tick_rate(mut self, rate: u32) -> Self {
        self.tick_rate = rate;
        self
    }

    pub fn payload_bytes(mut self, bytes: u32) -> Self {
        self.payload_bytes_per_frame = bytes;
        self
    }
}

/// Generates a deterministic fixture stream: units in decode order, one per
/// tile per picture, `poc` equal to the frame index, `dts = pts` (no
/// reordering), payload bytes keyed by `(stream_id, poc, tile)`.
pub fn make_test_stream(spec: &TestStreamSpec) -> Result<ToyStream, StreamError> {
    if spec.frames == 0 || spec.width == 0 || spec.height == 0 {
        return Err(StreamError::InvariantViolation(
            "test stream needs positive frame count and dimensions".into(),
        ));
    }
    if spec.fps == 0 || spec.tick_rate == 0 {
        return Err(StreamError::InvariantViolation(
            "test stream needs positive fps and tick_rate".into(),
        ));
    }
    if spec.grid_cols == 0 || spec.grid_rows == 0 {
        return Err(StreamError::InvariantViolation("grid must be at least 1x1".into()));
    }
    let tiled = spec.grid_cols > 1 || spec.grid_rows > 1;
    let mut units = Vec::new();
    for frame in 0..spec.frames {
        let ts = (frame as i64 * spec.tick_rate as i64) / spec.fps as i64;
        for row in 0..spec.grid_rows {
            for col in 0..spec.grid_cols {
                let mut payload = vec![0u8; spec.payload_bytes_per_frame as usize];
                let seed = (spec.stream_id as u64) << 32
                    | (frame as u64) << 16
                    | (col as u64) << 8
                    | row as u64;
                mix::fill_keyed(seed, &mut payload);
                units.push(AccessUnit {
                    stream_id: spec.stream_id,
                    poc: frame,
                    dts: ts,
                    pts: ts,
                    width: spec.width,
                    height: spec.height,
                    tile_col: col,
                    tile_row: row,
                    is_parameter_set: false,
                    payload,
                });
            }
        }
    }
    let stream = ToyStream {
        stream_id: spec.stream_id,
        codec_profile: if tiled { CodecProfile::ToyTiled } else { CodecProfile::ToyBase },
        tick_rate: spec.tick_rate,
        grid_cols: spec.grid_cols,
        grid_rows: spec.grid_rows,
        units,
    };
    stream.validate()?;
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_serializes_to_header_only() {
        let stream = ToyStream {
            stream_id: 7,
            codec_profile: CodecProfile::ToyBase,
            tick_rate: 90_000,
            grid_cols: 1,
            grid_rows: 1,
            units: Vec::new(),
        };
        let bytes = serialize_stream(&stream).unwrap();
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[..4], b"TOYS");
    }

    #[test]
    fn two_unit_round_trip() {
        let stream = make_test_stream(&TestStreamSpec::new(2, 64, 64)).unwrap();
        let bytes = serialize_stream(&stream).unwrap();
        assert_eq!(parse_stream(&bytes).unwrap(), stream);
    }

    #[test]
    fn serialization_is_deterministic() {
        let stream = make_test_stream(&TestStreamSpec::new(3, 32, 16).stream_id(5)).unwrap();
        assert_eq!(serialize_stream(&stream).unwrap(), serialize_stream(&stream).unwrap());
    }

    #[test]
    fn bad_magic_rejected() {
        let stream = make_test_stream(&TestStreamSpec::new(1, 8, 8)).unwrap();
        let mut bytes = serialize_stream(&stream).unwrap();
        bytes[0] = b'X';
        assert_eq!(parse_stream(&bytes), Err(StreamError::BadMagic));
    }

    #[test]
    fn truncated_unit_list_rejected() {
        // Header declares 3 units but the payload holds 2.
        let stream = make_test_stream(&TestStreamSpec::new(2, 8, 8)).unwrap();
        let mut bytes = serialize_stream(&stream).unwrap();
        bytes[20..24].copy_from_slice(&3u32.to_le_bytes());
        match parse_stream(&bytes) {
            Err(StreamError::TruncatedInput { .. }) => {}
            other => panic!("expected TruncatedInput, got {:?}", other),
        }
    }

    #[test]
    fn truncated_payload_rejected() {
        let stream = make_test_stream(&TestStreamSpec::new(1, 8, 8)).unwrap();
        let mut bytes = serialize_stream(&stream).unwrap();
        bytes.truncate(bytes.len() - 3);
        match parse_stream(&bytes) {
            Err(StreamError::TruncatedInput { what: "payload", .. }) => {}
            other => panic!("expected truncated payload, got {:?}", other),
        }
    }

    #[test]
    fn decreasing_dts_rejected_on_parse() {
        let mut stream = make_test_stream(&TestStreamSpec::new(2, 8, 8)).unwrap();
        stream.units[1].dts = -1;
        stream.units[1].pts = -1;
        // Serialize manually: serialize_stream would reject it.
        let mut swapped = stream.clone();
        swapped.units.swap(0, 1);
        assert!(matches!(
            serialize_stream(&swapped),
            Err(StreamError::InvariantViolation(_))
        ));
    }

    #[test]
    fn single_frame_spec() {
        let stream = make_test_stream(&TestStreamSpec::new(1, 64, 64)).unwrap();
        assert_eq!(stream.units.len(), 1);
        assert_eq!(stream.units[0].dts, 0);
        assert_eq!(stream.units[0].pts, 0);
        assert_eq!(stream.codec_profile, CodecProfile::ToyBase);
    }

    #[test]
    fn second_frame_timestamp_from_tick_rate() {
        // 90000 ticks/s at 30 fps: frame 1 lands at 3000 ticks.
        let stream =
            make_test_stream(&TestStreamSpec::new(2, 64, 64).fps(30).tick_rate(90_000)).unwrap();
        assert_eq!(stream.units[1].dts, 3000);
    }

    #[test]
    fn grid_spec_emits_one_unit_per_tile() {
        let stream = make_test_stream(&TestStreamSpec::new(1, 32, 32).grid(2, 2)).unwrap();
        assert_eq!(stream.codec_profile, CodecProfile::ToyTiled);
        let tiles: Vec<(u8, u8)> =
            stream.units.iter().map(|u| (u.tile_col, u.tile_row)).collect();
        assert_eq!(tiles, [(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert!(stream.units.iter().all(|u| u.poc == 0));
    }

    #[test]
    fn payloads_are_keyed_by_position() {
        let stream = make_test_stream(&TestStreamSpec::new(2, 8, 8).grid(2, 1)).unwrap();
        assert_ne!(stream.units[0].payload, stream.units[1].payload);
        assert_ne!(stream.units[0].payload, stream.units[2].payload);
    }

    #[test]
    fn nominal_interval_is_median_delta() {
        let mut stream = make_test_stream(&TestStreamSpec::new(4, 8, 8)).unwrap();
        assert_eq!(stream.nominal_frame_interval(), 3000);
        // One irregular gap does not move the median.
        stream.units[3].dts += 9000;
        stream.units[3].pts += 9000;
        assert_eq!(stream.nominal_frame_interval(), 3000);
    }

    #[test]
    fn trailing_bytes_rejected() {
        let stream = make_test_stream(&TestStreamSpec::new(1, 8, 8)).unwrap();
        let mut bytes = serialize_stream(&stream).unwrap();
        bytes.push(0);
        assert!(matches!(
            parse_stream(&bytes),
            Err(StreamError::InvariantViolation(_))
        ));
    }
}
