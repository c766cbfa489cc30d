//! `.lfraw` frames and their `.calib.json` sidecars.
//!
//! `.lfraw` layout, little-endian: magic `LFRW`, u16 width, u16 height,
//! u8 bit_depth, u8 bayer_phase, then `width * height` u16 samples row-major.

use std::fs;
use std::path::Path;

use super::{BayerPhase, CalibrationParams, ContainerError, RawLensletImage};
use crate::util::{ByteReader, ByteWriter};

const MAGIC: &[u8; 4] = b"LFRW";

pub fn encode_lfraw(raw: &RawLensletImage) -> Result<Vec<u8>, ContainerError> {
    if raw.width > u16::MAX as usize || raw.height > u16::MAX as usize {
        return Err(ContainerError::ShapeMismatch(
            "lfraw dimensions are limited to u16".into(),
        ));
    }
    let mut w = ByteWriter::new();
    w.bytes(MAGIC);
    w.u16(raw.width as u16);
    w.u16(raw.height as u16);
    w.u8(raw.bit_depth);
    w.u8(raw.bayer_phase.code());
    for &s in &raw.samples {
        w.u16(s);
    }
    Ok(w.into_inner())
}

pub fn decode_lfraw(bytes: &[u8]) -> Result<RawLensletImage, ContainerError> {
    let bad = |m: &str| ContainerError::Malformed(m.to_string());
    let mut r = ByteReader::new(bytes);
    if r.take(4) != Some(MAGIC.as_slice()) {
        return Err(bad("missing LFRW magic"));
    }
    let width = r.u16().ok_or_else(|| bad("truncated header"))? as usize;
    let height = r.u16().ok_or_else(|| bad("truncated header"))? as usize;
    let bit_depth = r.u8().ok_or_else(|| bad("truncated header"))?;
    let phase = r.u8().ok_or_else(|| bad("truncated header"))?;
    let bayer_phase = BayerPhase::from_code(phase).ok_or_else(|| bad("unknown bayer phase"))?;
    if r.remaining() != width * height * 2 {
        return Err(bad("sample payload length does not match dimensions"));
    }
    let samples = (0..width * height).map(|_| r.u16().unwrap()).collect();
    RawLensletImage::new(width, height, bit_depth, bayer_phase, samples)
}

pub fn write_lfraw(path: impl AsRef<Path>, raw: &RawLensletImage) -> Result<(), ContainerError> {
    fs::write(path, encode_lfraw(raw)?)?;
    Ok(())
}

pub fn read_lfraw(path: impl AsRef<Path>) -> Result<RawLensletImage, ContainerError> {
    decode_lfraw(&fs::read(path)?)
}

pub fn write_calibration(
    path: impl AsRef<Path>,
    params: &CalibrationParams,
) -> Result<(), ContainerError> {
    let text = serde_json::to_string_pretty(params)
        .map_err(|e| ContainerError::Malformed(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_calibration(path: impl AsRef<Path>) -> Result<CalibrationParams, ContainerError> {
    let text = fs::read_to_string(path)?;
    let params: CalibrationParams =
        serde_json::from_str(&text).map_err(|e| ContainerError::Malformed(e.to_string()))?;
    params.validate()?;
    Ok(params)
}
