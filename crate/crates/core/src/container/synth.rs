use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::calibrate::CalibrationMap;
use super::{
    check_bit_depth, max_value, BayerPhase, CalibrationParams, ContainerError, LightField,
    RawLensletImage,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    pub bayer_phase: BayerPhase,
    /// Standard deviation of additive Gaussian sensor noise, in sample units.
    pub noise_sigma: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            bayer_phase: BayerPhase::Rggb,
            noise_sigma: 0.0,
        }
    }
}

/// Renders a light field into a Bayer lenselet mosaic whose sensor size equals
/// the calibrated canvas. Every sensor sample that calibration keeps receives
/// the scene value of its Bayer color at the SAI position it will land on, so
/// `decompose(calibrate(raw))` returns the scene sampled on the mosaic. The
/// remaining samples take the value of the nearest SAI position.
pub fn synthesize_lenselet(
    scene: &LightField,
    params: &CalibrationParams,
    opts: SynthOptions,
) -> Result<RawLensletImage, ContainerError> {
    params.validate()?;
    check_bit_depth(scene.bit_depth)?;
    if !scene.matches(params)
        || scene.data.len() != scene.views_u * scene.views_v * scene.view_len()
    {
        return Err(ContainerError::ShapeMismatch(format!(
            "scene {}x{} views of {}x{} does not match calibration {}x{} views of {}x{}",
            scene.views_u,
            scene.views_v,
            scene.width,
            scene.height,
            params.views_u,
            params.views_v,
            params.sai_width,
            params.sai_height
        )));
    }
    let (w, h) = (params.canvas_width(), params.canvas_height());
    let map = CalibrationMap::new(w, h, params)?;
    let max = max_value(scene.bit_depth) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = if opts.noise_sigma > 0.0 {
        Some(
            Normal::new(0.0, opts.noise_sigma)
                .map_err(|e| ContainerError::InconsistentParams(e.to_string()))?,
        )
    } else {
        None
    };

    let mut samples = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let (du, dv, r, c) = match map.dest[row * w + col] {
                Some(cell) => params
                    .cell_to_sai(cell % w, cell / w)
                    .expect("winner cells are inside the grid"),
                None => {
                    let (fx, fy) = params.map_point(col as f64, row as f64);
                    nearest_sai(params, fx, fy)
                }
            };
            let color = opts.bayer_phase.color_at(row, col);
            let mut v = scene.get(du, dv, r, c)[color.index()] as f64;
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            samples.push(v.round().clamp(0.0, max) as u16);
        }
    }
    RawLensletImage::new(w, h, scene.bit_depth, opts.bayer_phase, samples)
}

fn nearest_sai(params: &CalibrationParams, fx: f64, fy: f64) -> (usize, usize, usize, usize) {
    let y = (fy.round().max(0.0) as usize).min(params.canvas_height() - 1);
    let shift = params.row_shift(y / params.views_v);
    let lo = shift as f64;
    let hi = (shift + params.sai_width * params.views_u - 1) as f64;
    let x = fx.round().clamp(lo, hi) as usize;
    params
        .cell_to_sai(x, y)
        .expect("clamped cell is inside the grid")
}
