//! Deterministic toy decode: maps access-unit payloads to decoded pictures.
//!
//! A unit's pixel block is a keyed-hash expansion of its payload to
//! `width x height` bytes, so decoding is a pure function of the bitstream.
//! Tiled pictures compose their units spatially on a canvas before an
//! optional crop. This makes merged-versus-separate decode comparisons
//! bit-exact.

use alloc::vec;
use alloc::vec::Vec;

use crate::mix;
use crate::stream::{AccessUnit, ToyStream};

/// Crop rectangle `(x, y, width, height)` in canvas pixels.
pub type CropWindow = (u16, u16, u16, u16);

/// One decoded picture: the presentation-unit payload at the decoder output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedPicture {
    pub source_stream_id: u32,
    pub poc: u32,
    pub pts: i64,
    pub width: u16,
    pub height: u16,
    /// Exactly `width * height` bytes (post-crop dimensions).
    pub pixels: Vec<u8>,
}

impl DecodedPicture {
    /// Serializes for storage as a circular-buffer frame:
    /// `stream_id u32 | poc u32 | width u16 | height u16 | pixels`, little-endian.
    pub fn to_frame_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.pixels.len());
        out.extend_from_slice(&self.source_stream_id.to_le_bytes());
        out.extend_from_slice(&self.poc.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Inverse of [`to_frame_bytes`]; `pts` comes from the frame timestamp.
    pub fn from_frame_bytes(bytes: &[u8], pts: i64) -> Option<DecodedPicture> {
        if bytes.len() < 12 {
            return None;
        }
        let source_stream_id = u32::from_le_bytes(bytes[0..4].try_into().ok()?);
        let poc = u32::from_le_bytes(bytes[4..8].try_into().ok()?);
        let width = u16::from_le_bytes(bytes[8..10].try_into().ok()?);
        let height = u16::from_le_bytes(bytes[10..12].try_into().ok()?);
        let pixels = bytes[12..].to_vec();
        if pixels.len() != width as usize * height as usize {
            return None;
        }
        Some(DecodedPicture { source_stream_id, poc, pts, width, height, pixels })
    }
}

/// Expands a payload to a `width x height` pixel block keyed by the payload
/// content.
pub fn expand_payload(payload: &[u8], width: u16, height: u16) -> Vec<u8> {
    let mut out = vec![0u8; width as usize * height as usize];
    mix::fill_keyed(mix::fnv1a64(payload), &mut out);
    out
}

/// The units making up one coded picture (all tiles sharing a poc).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PictureRef {
    pub poc: u32,
    pub unit_indices: Vec<usize>,
}

/// Groups a stream's units into pictures in decode order, skipping parameter
/// sets. Units sharing a poc form one picture.
pub fn picture_refs(stream: &ToyStream) -> Vec<PictureRef> {
    let mut refs: Vec<PictureRef> = Vec::new();
    for (i, unit) in stream.units.iter().enumerate() {
        if unit.is_parameter_set {
            continue;
        }
        match refs.iter_mut().find(|r| r.poc == unit.poc) {
            Some(r) => r.unit_indices.push(i),
            None => refs.push(PictureRef { poc: unit.poc, unit_indices: vec![i] }),
        }
    }
    refs
}

/// Decodes one picture: paints each tile's expansion onto the composed
/// canvas, then applies the crop window.
///
/// The crop must lie within the canvas; callers validate before decode.
pub fn decode_picture(
    stream: &ToyStream,
    picture: &PictureRef,
    crop: Option<CropWindow>,
) -> DecodedPicture {
    let units: Vec<&AccessUnit> =
        picture.unit_indices.iter().map(|&i| &stream.units[i]).collect();
    assert!(!units.is_empty(), "picture must have at least one unit");
    let tile_w = units[0].width;
    let tile_h = units[0].height;
    let canvas_w = tile_w as usize * stream.grid_cols as usize;
    let canvas_h = tile_h as usize * stream.grid_rows as usize;
    let mut canvas = vec![0u8; canvas_w * canvas_h];
    let mut pts = i64::MIN;
    for unit in &units {
        debug_assert_eq!((unit.width, unit.height), (tile_w, tile_h), "uniform tile dims");
        let block = expand_payload(&unit.payload, unit.width, unit.height);
        let x0 = unit.tile_col as usize * tile_w as usize;
        let y0 = unit.tile_row as usize * tile_h as usize;
        for row in 0..tile_h as usize {
            let src = &block[row * tile_w as usize..(row + 1) * tile_w as usize];
            let dst = (y0 + row) * canvas_w + x0;
            canvas[dst..dst + tile_w as usize].copy_from_slice(src);
        }
        pts = pts.max(unit.pts);
    }
    let (out_w, out_h, pixels) = match crop {
        None => (canvas_w as u16, canvas_h as u16, canvas),
        Some((x, y, w, h)) => {
            assert!(
                x as usize + w as usize <= canvas_w && y as usize + h as usize <= canvas_h,
                "crop window outside picture bounds"
            );
            let mut cropped = Vec::with_capacity(w as usize * h as usize);
            for row in 0..h as usize {
                let src = (y as usize + row) * canvas_w + x as usize;
                cropped.extend_from_slice(&canvas[src..src + w as usize]);
            }
            (w, h, cropped)
        }
    };
    DecodedPicture {
        source_stream_id: stream.stream_id,
        poc: picture.poc,
        pts,
        width: out_w,
        height: out_h,
        pixels,
    }
}

/// Decodes a whole stream in decode order.
pub fn decode_stream(stream: &ToyStream, crop: Option<CropWindow>) -> Vec<DecodedPicture> {
    picture_refs(stream)
        .iter()
        .map(|p| decode_picture(stream, p, crop))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{make_test_stream, TestStreamSpec};

    #[test]
    fn pixels_are_pure_function_of_payload() {
        let a = expand_payload(b"payload", 8, 4);
        let b = expand_payload(b"payload", 8, 4);
        assert_eq!(a, b);
        assert_ne!(a, expand_payload(b"payloae", 8, 4));
        assert_eq!(a.len(), 32);
    }

    #[test]
    fn base_stream_decodes_one_picture_per_frame() {
        let stream = make_test_stream(&TestStreamSpec::new(3, 16, 8)).unwrap();
        let pictures = decode_stream(&stream, None);
        assert_eq!(pictures.len(), 3);
        assert_eq!(pictures[0].width, 16);
        assert_eq!(pictures[0].height, 8);
        assert_eq!(pictures[0].pixels.len(), 128);
        assert_eq!(pictures[2].poc, 2);
    }

    #[test]
    fn tiled_picture_composes_tiles_in_place() {
        let stream = make_test_stream(&TestStreamSpec::new(1, 4, 4).grid(2, 1)).unwrap();
        let picture = &decode_stream(&stream, None)[0];
        assert_eq!((picture.width, picture.height), (8, 4));
        // Left half must equal tile (0,0)'s own expansion.
        let left = expand_payload(&stream.units[0].payload, 4, 4);
        for row in 0..4 {
            assert_eq!(&picture.pixels[row * 8..row * 8 + 4], &left[row * 4..row * 4 + 4]);
        }
    }

    #[test]
    fn crop_selects_canvas_region() {
        let stream = make_test_stream(&TestStreamSpec::new(1, 64, 64)).unwrap();
        let full = decode_stream(&stream, None);
        let cropped = decode_stream(&stream, Some((0, 0, 16, 16)));
        assert_eq!(cropped[0].pixels.len(), 256);
        for row in 0..16 {
            assert_eq!(
                &cropped[0].pixels[row * 16..(row + 1) * 16],
                &full[0].pixels[row * 64..row * 64 + 16]
            );
        }
    }

    #[test]
    fn frame_bytes_round_trip() {
        let stream = make_test_stream(&TestStreamSpec::new(1, 8, 8)).unwrap();
        let picture = decode_stream(&stream, None).remove(0);
        let bytes = picture.to_frame_bytes();
        assert_eq!(DecodedPicture::from_frame_bytes(&bytes, picture.pts), Some(picture));
    }

    #[test]
    fn parameter_sets_do_not_produce_pictures() {
        let mut stream = make_test_stream(&TestStreamSpec::new(2, 8, 8)).unwrap();
        let mut ps = stream.units[0].clone();
        ps.is_parameter_set = true;
        ps.payload = b"sps".to_vec();
        stream.units.insert(0, ps);
        assert_eq!(picture_refs(&stream).len(), 2);
    }
}
