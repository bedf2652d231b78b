//! Bitstream-to-bitstream input formatting: filtering, inserting, appending
//! and stacking toy streams, so N source streams can feed one decoder
//! instance.
//!
//! Every transform re-validates its output; the module's core guarantee is
//! decode equivalence — decoding a stacked stream composes the sources'
//! decoded pixels spatially, and decoding an appended stream concatenates the
//! sources' decoded sequences, both bit-exactly.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::stream::{AccessUnit, CodecProfile, StreamError, ToyStream};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("no units match the predicate")]
    EmptyResult,
    #[error("tile ({0}, {1}) does not exist in the {2}x{3} grid")]
    UnknownTile(u8, u8, u8, u8),
    #[error("insert position {position} beyond unit count {count}")]
    PositionOutOfRange { position: usize, count: usize },
    #[error("inserting unit with dts {dts} violates dts order at position {position}")]
    DtsOrderViolation { position: usize, dts: i64 },
    #[error("streams disagree on {0}")]
    ParameterMismatch(String),
    #[error("no input streams")]
    EmptyInput,
    #[error("sources disagree on frame structure: {0}")]
    FrameStructureMismatch(String),
    #[error("layout expects {expected} sources, got {got}")]
    LayoutArityMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Invalid(#[from] StreamError),
}

/// Selects tiles (and optionally a poc range) to keep when filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePredicate {
    pub keep: BTreeSet<(u8, u8)>,
    pub poc_range: Option<(u32, u32)>,
}

impl TilePredicate {
    pub fn tiles<I: IntoIterator<Item = (u8, u8)>>(tiles: I) -> TilePredicate {
        TilePredicate { keep: tiles.into_iter().collect(), poc_range: None }
    }

    pub fn with_poc_range(mut self, min_poc: u32, max_poc: u32) -> TilePredicate {
        self.poc_range = Some((min_poc, max_poc));
        self
    }

    fn matches(&self, unit: &AccessUnit) -> bool {
        if !self.keep.contains(&(unit.tile_col, unit.tile_row)) {
            return false;
        }
        match self.poc_range {
            Some((lo, hi)) => unit.poc >= lo && unit.poc <= hi,
            None => true,
        }
    }
}

/// Spatial arrangement for [`stack`]: `slots` lists source stream ids in
/// row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackLayout {
    pub cols: u8,
    pub rows: u8,
    pub slots: Vec<u32>,
}

impl StackLayout {
    pub fn grid(cols: u8, rows: u8, slots: Vec<u32>) -> StackLayout {
        StackLayout { cols, rows, slots }
    }
}

/// Keeps exactly the units matching the predicate, preserving order.
/// Parameter-set units always survive, and the grid metadata is rewritten to
/// the bounding grid of the kept tiles (tile coordinates rebased onto it).
pub fn filter(stream: &ToyStream, predicate: &TilePredicate) -> Result<ToyStream, FormatError> {
    if stream.codec_profile != CodecProfile::ToyTiled {
        return Err(FormatError::Invalid(StreamError::InvariantViolation(
            "filter requires a TOY_TILED stream".into(),
        )));
    }
    assert!(!predicate.keep.is_empty(), "predicate must keep at least one tile");
    for &(col, row) in &predicate.keep {
        if col >= stream.grid_cols || row >= stream.grid_rows {
            return Err(FormatError::UnknownTile(col, row, stream.grid_cols, stream.grid_rows));
        }
    }
    let kept: Vec<AccessUnit> = stream
        .units
        .iter()
        .filter(|u| u.is_parameter_set || predicate.matches(u))
        .cloned()
        .collect();
    if kept.iter().all(|u| u.is_parameter_set) {
        return Err(FormatError::EmptyResult);
    }
    // Bounding grid of the kept tiles, rebased to the origin.
    let min_col = predicate.keep.iter().map(|&(c, _)| c).min().expect("non-empty");
    let max_col = predicate.keep.iter().map(|&(c, _)| c).max().expect("non-empty");
    let min_row = predicate.keep.iter().map(|&(_, r)| r).min().expect("non-empty");
    let max_row = predicate.keep.iter().map(|&(_, r)| r).max().expect("non-empty");
    let mut units = kept;
    for unit in &mut units {
        if !unit.is_parameter_set {
            unit.tile_col -= min_col;
            unit.tile_row -= min_row;
        }
    }
    let out = ToyStream {
        stream_id: stream.stream_id,
        codec_profile: CodecProfile::ToyTiled,
        tick_rate: stream.tick_rate,
        grid_cols: max_col - min_col + 1,
        grid_rows: max_row - min_row + 1,
        units,
    };
    out.validate()?;
    Ok(out)
}

/// Inserts a unit at `position`. A parameter set takes over the dts of its
/// successor (or predecessor at the tail) so ordering is preserved; picture
/// units must themselves respect the non-decreasing dts order.
pub fn insert(stream: &ToyStream, unit: AccessUnit, position: usize) -> Result<ToyStream, FormatError> {
    if position > stream.units.len() {
        return Err(FormatError::PositionOutOfRange { position, count: stream.units.len() });
    }
    let mut unit = unit;
    unit.stream_id = stream.stream_id;
    if unit.is_parameter_set {
        unit.dts = match stream.units.get(position) {
            Some(successor) => successor.dts,
            None => stream.units.last().map(|u| u.dts).unwrap_or(unit.dts),
        };
        if unit.pts < unit.dts {
            unit.pts = unit.dts;
        }
    } else {
        if position > 0 && unit.dts < stream.units[position - 1].dts {
            return Err(FormatError::DtsOrderViolation { position, dts: unit.dts });
        }
        if position < stream.units.len() && stream.units[position].dts < unit.dts {
            return Err(FormatError::DtsOrderViolation { position, dts: unit.dts });
        }
    }
    let mut units = stream.units.clone();
    units.insert(position, unit);
    let out = ToyStream { units, ..stream.clone() };
    out.validate()?;
    Ok(out)
}

/// Temporal concatenation. Subsequent streams are rebased so POCs continue
/// past the running maximum and timestamps continue one nominal frame
/// interval after the last dts seen. A single-stream input is returned
/// unchanged.
pub fn append(streams: &[ToyStream]) -> Result<ToyStream, FormatError> {
    let first = match streams.first() {
        None => return Err(FormatError::EmptyInput),
        Some(f) => f,
    };
    for (i, s) in streams.iter().enumerate().skip(1) {
        if s.codec_profile != first.codec_profile {
            return Err(FormatError::ParameterMismatch(format!("codec_profile at stream {}", i)));
        }
        if s.tick_rate != first.tick_rate {
            return Err(FormatError::ParameterMismatch(format!("tick_rate at stream {}", i)));
        }
        if (s.grid_cols, s.grid_rows) != (first.grid_cols, first.grid_rows) {
            return Err(FormatError::ParameterMismatch(format!("grid at stream {}", i)));
        }
        let dims = |s: &ToyStream| {
            s.units
                .iter()
                .find(|u| !u.is_parameter_set)
                .map(|u| (u.width, u.height))
        };
        if dims(s) != dims(first) {
            return Err(FormatError::ParameterMismatch(format!(
                "picture dimensions at stream {}",
                i
            )));
        }
    }
    if streams.len() == 1 {
        return Ok(first.clone());
    }
    let interval = first.nominal_frame_interval();
    let mut units: Vec<AccessUnit> = first.units.clone();
    let mut max_poc: Option<u32> = units.iter().filter(|u| !u.is_parameter_set).map(|u| u.poc).max();
    let mut last_dts: Option<i64> = units.last().map(|u| u.dts);
    for stream in &streams[1..] {
        if stream.units.is_empty() {
            continue;
        }
        let poc_offset = max_poc.map_or(0, |m| m + 1);
        let time_shift = match last_dts {
            Some(last) => last + interval - stream.units[0].dts,
            None => 0,
        };
        for unit in &stream.units {
            let mut rebased = unit.clone();
            rebased.stream_id = first.stream_id;
            rebased.poc = unit.poc + poc_offset;
            rebased.dts = unit.dts + time_shift;
            rebased.pts = unit.pts + time_shift;
            units.push(rebased);
        }
        max_poc = units.iter().filter(|u| !u.is_parameter_set).map(|u| u.poc).max();
        last_dts = units.last().map(|u| u.dts);
    }
    let out = ToyStream { units, ..first.clone() };
    out.validate()?;
    Ok(out)
}

/// Spatial composition: one tiled output stream whose units at each poc carry
/// the source payloads, tile positions given by the layout. Sources must be
/// single-tile streams with identical frame structure. Parameter sets of the
/// first slot's source are carried through ahead of the pictures.
pub fn stack(streams: &[ToyStream], layout: &StackLayout) -> Result<ToyStream, FormatError> {
    if streams.is_empty() {
        return Err(FormatError::EmptyInput);
    }
    let expected = layout.cols as usize * layout.rows as usize;
    if layout.slots.len() != expected || streams.len() != expected {
        return Err(FormatError::LayoutArityMismatch { expected, got: streams.len().max(layout.slots.len()) });
    }
    let mut seen = BTreeSet::new();
    for id in &layout.slots {
        if !seen.insert(*id) {
            return Err(FormatError::LayoutArityMismatch { expected, got: layout.slots.len() });
        }
    }
    let mut sources: Vec<&ToyStream> = Vec::with_capacity(expected);
    for id in &layout.slots {
        match streams.iter().find(|s| s.stream_id == *id) {
            Some(s) => sources.push(s),
            None => {
                return Err(FormatError::FrameStructureMismatch(format!(
                    "layout references stream {} which was not provided",
                    id
                )))
            }
        }
    }
    for (i, source) in sources.iter().enumerate() {
        if source.grid_cols != 1 || source.grid_rows != 1 {
            return Err(FormatError::FrameStructureMismatch(format!(
                "source {} is not single-tile",
                source.stream_id
            )));
        }
        if source.tick_rate != sources[0].tick_rate {
            return Err(FormatError::ParameterMismatch(format!("tick_rate at slot {}", i)));
        }
    }
    let structure = |s: &ToyStream| -> Vec<(u32, i64, i64, u16, u16)> {
        s.units
            .iter()
            .filter(|u| !u.is_parameter_set)
            .map(|u| (u.poc, u.dts, u.pts, u.width, u.height))
            .collect()
    };
    let reference = structure(sources[0]);
    for source in &sources[1..] {
        if structure(source) != reference {
            return Err(FormatError::FrameStructureMismatch(format!(
                "stream {} differs from stream {}",
                source.stream_id, sources[0].stream_id
            )));
        }
    }
    let out_id = sources[0].stream_id;
    let mut units: Vec<AccessUnit> = sources[0]
        .units
        .iter()
        .filter(|u| u.is_parameter_set)
        .cloned()
        .map(|mut u| {
            u.stream_id = out_id;
            u
        })
        .collect();
    // reference holds the shared (poc, dts, pts, w, h) sequence.
    for &(poc, dts, pts, width, height) in &reference {
        for (slot, source) in sources.iter().enumerate() {
            let src_unit = source
                .units
                .iter()
                .find(|u| !u.is_parameter_set && u.poc == poc)
                .expect("structure checked above");
            units.push(AccessUnit {
                stream_id: out_id,
                poc,
                dts,
                pts,
                width,
                height,
                tile_col: (slot % layout.cols as usize) as u8,
                tile_row: (slot / layout.cols as usize) as u8,
                is_parameter_set: false,
                payload: src_unit.payload.clone(),
            });
        }
    }
    let out = ToyStream {
        stream_id: out_id,
        codec_profile: CodecProfile::ToyTiled,
        tick_rate: sources[0].tick_rate,
        grid_cols: layout.cols,
        grid_rows: layout.rows,
        units,
    };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::decode_stream;
    use crate::stream::{make_test_stream, TestStreamSpec};
    use alloc::vec;

    fn tiled(frames: u32, cols: u8, rows: u8) -> ToyStream {
        make_test_stream(&TestStreamSpec::new(frames, 16, 16).grid(cols, rows)).unwrap()
    }

    fn base(frames: u32, id: u32) -> ToyStream {
        make_test_stream(&TestStreamSpec::new(frames, 16, 16).stream_id(id)).unwrap()
    }

    #[test]
    fn identity_predicate_keeps_stream() {
        let stream = tiled(3, 2, 2);
        let all = TilePredicate::tiles([(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(filter(&stream, &all).unwrap(), stream);
    }

    #[test]
    fn single_tile_filter_shrinks_grid() {
        let stream = tiled(3, 2, 2);
        let out = filter(&stream, &TilePredicate::tiles([(0, 0)])).unwrap();
        assert_eq!(out.units.len(), 3);
        assert_eq!((out.grid_cols, out.grid_rows), (1, 1));
        assert!(out.units.iter().all(|u| (u.tile_col, u.tile_row) == (0, 0)));
    }

    #[test]
    fn filter_rebases_tile_coordinates() {
        let stream = tiled(2, 2, 2);
        let out = filter(&stream, &TilePredicate::tiles([(1, 1)])).unwrap();
        assert_eq!((out.grid_cols, out.grid_rows), (1, 1));
        assert!(out.units.iter().all(|u| (u.tile_col, u.tile_row) == (0, 0)));
        // Payloads are untouched: tile (1,1) content survives the rebase.
        let source_payload = &stream
            .units
            .iter()
            .find(|u| (u.tile_col, u.tile_row) == (1, 1))
            .unwrap()
            .payload;
        assert_eq!(&out.units[0].payload, source_payload);
    }

    #[test]
    fn unknown_tile_rejected() {
        let stream = tiled(1, 2, 2);
        assert_eq!(
            filter(&stream, &TilePredicate::tiles([(5, 5)])),
            Err(FormatError::UnknownTile(5, 5, 2, 2))
        );
    }

    #[test]
    fn poc_range_narrows_selection() {
        let stream = tiled(5, 2, 1);
        let out = filter(&stream, &TilePredicate::tiles([(0, 0)]).with_poc_range(1, 3)).unwrap();
        let pocs: Vec<u32> = out.units.iter().map(|u| u.poc).collect();
        assert_eq!(pocs, [1, 2, 3]);
    }

    #[test]
    fn no_matching_units_is_empty_result() {
        let stream = tiled(2, 2, 1);
        assert_eq!(
            filter(&stream, &TilePredicate::tiles([(0, 0)]).with_poc_range(10, 20)),
            Err(FormatError::EmptyResult)
        );
    }

    #[test]
    fn parameter_sets_survive_filtering() {
        let mut stream = tiled(2, 2, 1);
        let mut ps = stream.units[0].clone();
        ps.is_parameter_set = true;
        ps.payload = b"ps".to_vec();
        stream.units.insert(0, ps);
        let out = filter(&stream, &TilePredicate::tiles([(1, 0)])).unwrap();
        assert!(out.units[0].is_parameter_set);
        assert_eq!(out.units.len(), 3);
    }

    #[test]
    fn insert_parameter_set_at_head() {
        let stream = base(2, 0);
        let mut ps = stream.units[0].clone();
        ps.is_parameter_set = true;
        ps.width = 0;
        ps.height = 0;
        ps.payload = b"sps".to_vec();
        let out = insert(&stream, ps, 0).unwrap();
        assert!(out.units[0].is_parameter_set);
        assert_eq!(out.units[0].dts, out.units[1].dts);
        assert_eq!(out.units.len(), 3);
    }

    #[test]
    fn insert_picture_between_neighbors() {
        let mut stream = base(2, 0);
        // Make room: move the second picture further out.
        stream.units[1].dts = 6000;
        stream.units[1].pts = 6000;
        let mut unit = stream.units[0].clone();
        unit.poc = 9;
        unit.dts = 3000;
        unit.pts = 3000;
        let out = insert(&stream, unit, 1).unwrap();
        assert_eq!(out.units[1].poc, 9);
        out.validate().unwrap();
    }

    #[test]
    fn insert_with_lower_dts_rejected() {
        let stream = base(2, 0);
        let mut unit = stream.units[0].clone();
        unit.poc = 9;
        unit.dts = stream.units[1].dts - 1;
        unit.pts = unit.dts;
        assert!(matches!(
            insert(&stream, unit, 2),
            Err(FormatError::DtsOrderViolation { .. })
        ));
    }

    #[test]
    fn insert_position_out_of_range() {
        let stream = base(1, 0);
        let unit = stream.units[0].clone();
        assert_eq!(
            insert(&stream, unit, 5),
            Err(FormatError::PositionOutOfRange { position: 5, count: 1 })
        );
    }

    #[test]
    fn append_single_stream_is_identity() {
        let stream = base(2, 0);
        assert_eq!(append(&[stream.clone()]).unwrap(), stream);
    }

    #[test]
    fn append_rebases_pocs_and_timestamps() {
        let a = base(2, 0);
        let b = base(2, 1);
        let out = append(&[a, b]).unwrap();
        let pocs: Vec<u32> = out.units.iter().map(|u| u.poc).collect();
        assert_eq!(pocs, [0, 1, 2, 3]);
        let dts: Vec<i64> = out.units.iter().map(|u| u.dts).collect();
        assert_eq!(dts, [0, 3000, 6000, 9000]);
        assert!(out.units.iter().all(|u| u.stream_id == 0));
    }

    #[test]
    fn append_mismatched_tick_rate_rejected() {
        let a = base(2, 0);
        let b = make_test_stream(&TestStreamSpec::new(2, 16, 16).stream_id(1).tick_rate(48_000))
            .unwrap();
        assert!(matches!(append(&[a, b]), Err(FormatError::ParameterMismatch(_))));
    }

    #[test]
    fn append_empty_input_rejected() {
        assert_eq!(append(&[]), Err(FormatError::EmptyInput));
    }

    #[test]
    fn append_decodes_to_concatenated_sequences() {
        let a = base(2, 0);
        let b = base(3, 1);
        let merged = append(&[a.clone(), b.clone()]).unwrap();
        let merged_pixels: Vec<Vec<u8>> =
            decode_stream(&merged, None).into_iter().map(|p| p.pixels).collect();
        let mut expected: Vec<Vec<u8>> =
            decode_stream(&a, None).into_iter().map(|p| p.pixels).collect();
        expected.extend(decode_stream(&b, None).into_iter().map(|p| p.pixels));
        assert_eq!(merged_pixels, expected);
    }

    #[test]
    fn stack_identity_layout_retags_profile() {
        let a = base(2, 0);
        let out = stack(&[a.clone()], &StackLayout::grid(1, 1, vec![0])).unwrap();
        assert_eq!(out.codec_profile, CodecProfile::ToyTiled);
        let merged = decode_stream(&out, None);
        let separate = decode_stream(&a, None);
        assert_eq!(merged.len(), separate.len());
        for (m, s) in merged.iter().zip(&separate) {
            assert_eq!(m.pixels, s.pixels);
        }
    }

    // The module's core theorem at 2x2: each decoded picture of the stacked
    // stream equals the spatial composition of the separate decodes.
    #[test]
    fn stack_decodes_to_spatial_composition() {
        let sources: Vec<ToyStream> = (0..4).map(|i| base(3, i)).collect();
        let layout = StackLayout::grid(2, 2, vec![0, 1, 2, 3]);
        let stacked = stack(&sources, &layout).unwrap();
        let merged = decode_stream(&stacked, None);
        assert_eq!(merged.len(), 3);
        let tile_w = 16usize;
        let tile_h = 16usize;
        for (frame, picture) in merged.iter().enumerate() {
            assert_eq!((picture.width, picture.height), (32, 32));
            // Independent composition oracle: paint each source's decode
            // into its quadrant.
            let mut expected = vec![0u8; 32 * 32];
            for (slot, source) in sources.iter().enumerate() {
                let decoded = &decode_stream(source, None)[frame];
                let x0 = (slot % 2) * tile_w;
                let y0 = (slot / 2) * tile_h;
                for row in 0..tile_h {
                    let dst = (y0 + row) * 32 + x0;
                    expected[dst..dst + tile_w]
                        .copy_from_slice(&decoded.pixels[row * tile_w..(row + 1) * tile_w]);
                }
            }
            assert_eq!(picture.pixels, expected, "frame {} composition differs", frame);
        }
    }

    #[test]
    fn stack_rejects_differing_poc_sequences() {
        let a = base(2, 0);
        let b = base(3, 1);
        let layout = StackLayout::grid(2, 1, vec![0, 1]);
        assert!(matches!(
            stack(&[a, b], &layout),
            Err(FormatError::FrameStructureMismatch(_))
        ));
    }

    #[test]
    fn stack_rejects_arity_mismatch() {
        let a = base(1, 0);
        let layout = StackLayout::grid(2, 1, vec![0, 1]);
        assert!(matches!(
            stack(&[a], &layout),
            Err(FormatError::LayoutArityMismatch { .. })
        ));
    }

    #[test]
    fn filter_of_stack_is_valid() {
        let sources: Vec<ToyStream> = (0..4).map(|i| base(2, i)).collect();
        let stacked = stack(&sources, &StackLayout::grid(2, 2, vec![0, 1, 2, 3])).unwrap();
        let out = filter(&stacked, &TilePredicate::tiles([(1, 0), (1, 1)])).unwrap();
        out.validate().unwrap();
        assert_eq!((out.grid_cols, out.grid_rows), (1, 2));
    }

    #[test]
    fn append_of_append_is_valid() {
        let out = append(&[
            append(&[base(2, 0), base(2, 1)]).unwrap(),
            append(&[base(1, 2), base(1, 3)]).unwrap(),
        ])
        .unwrap();
        out.validate().unwrap();
        assert_eq!(out.picture_pocs().len(), 6);
    }
}
