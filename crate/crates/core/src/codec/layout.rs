//! Color layout of the SAIs: which positions hold which Bayer color.

use super::CodecError;
use crate::container::{BayerPhase, CalibrationMap, CalibrationParams, Color, SAIArray};
use crate::entropy::{BitModel, EntropyError, RangeDecoder, RangeEncoder};

/// Per-SAI color occupancy, row-major.
pub type SaiLayout = Vec<Option<Color>>;

/// Layouts of every SAI implied by the calibration geometry of a sensor of
/// `sensor_width × sensor_height` samples.
pub fn derived_layouts(
    sensor_width: usize,
    sensor_height: usize,
    params: &CalibrationParams,
    phase: BayerPhase,
) -> Result<Vec<SaiLayout>, CodecError> {
    let map = CalibrationMap::new(sensor_width, sensor_height, params)?;
    let colors = map.cell_colors(phase);
    let (w, h) = (params.sai_width, params.sai_height);
    let mut out = vec![vec![None; w * h]; params.view_count()];
    for (cell, color) in colors.iter().enumerate() {
        let Some(color) = *color else { continue };
        let (x, y) = (cell % map.canvas_width, cell / map.canvas_width);
        if let Some((du, dv, row, col)) = params.cell_to_sai(x, y) {
            out[dv * params.views_u + du][row * w + col] = Some(color);
        }
    }
    Ok(out)
}

/// Whether `arr` has exactly the layout the geometry predicts.
pub fn matches_layout(arr: &SAIArray, layouts: &[SaiLayout]) -> bool {
    arr.sais.len() == layouts.len() && arr.sais.iter().zip(layouts).all(|(s, l)| s.colors() == *l)
}

fn symbol(c: Option<Color>) -> usize {
    match c {
        None => 0,
        Some(Color::R) => 1,
        Some(Color::G) => 2,
        Some(Color::B) => 3,
    }
}

fn color_of(s: usize) -> Option<Color> {
    [None, Some(Color::R), Some(Color::G), Some(Color::B)][s]
}

/// Two binary decisions per position, conditioned on the left, upper and
/// upper-left symbols.
#[derive(Debug, Clone)]
struct LayoutModels {
    high: Vec<BitModel>,
    low: Vec<BitModel>,
}

impl LayoutModels {
    fn new() -> Self {
        Self {
            high: vec![BitModel::default(); 64],
            low: vec![BitModel::default(); 128],
        }
    }
}

fn context(layout: &[usize], width: usize, i: usize) -> usize {
    let (r, c) = (i / width, i % width);
    let left = if c > 0 { layout[i - 1] } else { 0 };
    let up = if r > 0 { layout[i - width] } else { 0 };
    let diag = if r > 0 && c > 0 {
        layout[i - width - 1]
    } else {
        0
    };
    left * 16 + up * 4 + diag
}

pub fn write_layout(enc: &mut RangeEncoder, layout: &[Option<Color>], width: usize) {
    let mut m = LayoutModels::new();
    let syms: Vec<usize> = layout.iter().map(|&c| symbol(c)).collect();
    for (i, &s) in syms.iter().enumerate() {
        let ctx = context(&syms, width, i);
        enc.encode(&mut m.high[ctx], s >> 1 == 1);
        enc.encode(&mut m.low[ctx * 2 + (s >> 1)], s & 1 == 1);
    }
}

pub fn read_layout(
    dec: &mut RangeDecoder<'_>,
    width: usize,
    height: usize,
) -> Result<SaiLayout, EntropyError> {
    let mut m = LayoutModels::new();
    let mut syms = vec![0usize; width * height];
    for i in 0..syms.len() {
        let ctx = context(&syms, width, i);
        let high = dec.decode(&mut m.high[ctx])? as usize;
        let low = dec.decode(&mut m.low[ctx * 2 + high])? as usize;
        syms[i] = high << 1 | low;
    }
    Ok(syms.into_iter().map(color_of).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::container::{calibrate, decompose, RawLensletImage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derived_layout_matches_decomposition() {
        let params = CalibrationParams {
            row_offset: 1.0,
            ..CalibrationParams::identity(3, 2, 9, 8)
        }
        .with_rotation(1.5);
        let (w, h) = (params.canvas_width(), params.canvas_height());
        let raw = RawLensletImage::new(w, h, 10, BayerPhase::Bggr, vec![7; w * h]).unwrap();
        let (cal, _) = calibrate(&raw, &params).unwrap();
        let arr = decompose(&cal, &params).unwrap();
        let layouts = derived_layouts(w, h, &params, BayerPhase::Bggr).unwrap();
        assert!(matches_layout(&arr, &layouts));
        let other = derived_layouts(w, h, &params, BayerPhase::Rggb).unwrap();
        assert!(!matches_layout(&arr, &other));
    }

    #[test]
    fn explicit_layout_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (w, h) = (13, 9);
        let layout: SaiLayout = (0..w * h)
            .map(|_| color_of(rng.random_range(0..4)))
            .collect();
        let mut enc = RangeEncoder::new();
        write_layout(&mut enc, &layout, w);
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        assert_eq!(read_layout(&mut dec, w, h).unwrap(), layout);
    }

    #[test]
    fn periodic_layout_is_cheap() {
        let (w, h) = (64, 64);
        let layout: SaiLayout = (0..w * h)
            .map(|i| Some(BayerPhase::Rggb.color_at(i / w, i % w)))
            .collect();
        let mut enc = RangeEncoder::new();
        write_layout(&mut enc, &layout, w);
        assert!(enc.finish().len() < 120);
    }
}
