//! Full-color 4D light fields: ground truth for synthetic tests and the
//! demosaicked output of the decoder.
//!
//! `.lfscene` layout, little-endian: magic `LFSC`, u16 views_u, u16 views_v,
//! u16 width, u16 height, u8 bit_depth, then RGB u16 triples ordered by view
//! (`dv * views_u + du`) and then row-major position.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_bit_depth, max_value, CalibrationParams, ContainerError};
use crate::util::{ByteReader, ByteWriter};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightField {
    pub views_u: usize,
    pub views_v: usize,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub data: Vec<[u16; 3]>,
}

impl LightField {
    pub fn filled(
        views_u: usize,
        views_v: usize,
        width: usize,
        height: usize,
        bit_depth: u8,
        rgb: [u16; 3],
    ) -> Self {
        Self {
            views_u,
            views_v,
            width,
            height,
            bit_depth,
            data: vec![rgb; views_u * views_v * width * height],
        }
    }

    pub fn view_len(&self) -> usize {
        self.width * self.height
    }

    pub fn get(&self, du: usize, dv: usize, row: usize, col: usize) -> [u16; 3] {
        self.data[(dv * self.views_u + du) * self.view_len() + row * self.width + col]
    }

    pub fn set(&mut self, du: usize, dv: usize, row: usize, col: usize, rgb: [u16; 3]) {
        let n = self.view_len();
        self.data[(dv * self.views_u + du) * n + row * self.width + col] = rgb;
    }

    /// Pixels of one view, row-major.
    pub fn view(&self, index: usize) -> &[[u16; 3]] {
        let n = self.view_len();
        &self.data[index * n..(index + 1) * n]
    }

    pub fn matches(&self, params: &CalibrationParams) -> bool {
        self.views_u == params.views_u
            && self.views_v == params.views_v
            && self.width == params.sai_width
            && self.height == params.sai_height
    }
}

/// Synthetic scene families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneKind {
    /// Every sample of every channel equals the given level.
    Constant(u16),
    /// Intensity grows linearly with the column index, identical in all channels.
    HorizontalRamp,
    /// Smooth shading crossed by several soft straight edges, with a small
    /// disparity between views.
    Edges,
}

/// Generates a light field matching the SAI geometry of `params`.
pub fn generate_scene(
    kind: SceneKind,
    params: &CalibrationParams,
    bit_depth: u8,
    seed: u64,
) -> LightField {
    let (vu, vv, w, h) = (
        params.views_u,
        params.views_v,
        params.sai_width,
        params.sai_height,
    );
    let max = max_value(bit_depth) as f64;
    let mut lf = LightField::filled(vu, vv, w, h, bit_depth, [0; 3]);
    match kind {
        SceneKind::Constant(level) => {
            let level = level.min(max as u16);
            lf.data.iter_mut().for_each(|p| *p = [level; 3]);
        }
        SceneKind::HorizontalRamp => {
            let step = (max / w.max(1) as f64).floor().max(1.0);
            for dv in 0..vv {
                for du in 0..vu {
                    for r in 0..h {
                        for c in 0..w {
                            let v = (c as f64 * step).min(max) as u16;
                            lf.set(du, dv, r, c, [v; 3]);
                        }
                    }
                }
            }
        }
        SceneKind::Edges => {
            let model = EdgeModel::random(seed, w, h, max);
            let (cu, cv) = ((vu as f64 - 1.0) / 2.0, (vv as f64 - 1.0) / 2.0);
            for dv in 0..vv {
                for du in 0..vu {
                    let (ox, oy) = (
                        (du as f64 - cu) * model.disparity,
                        (dv as f64 - cv) * model.disparity,
                    );
                    for r in 0..h {
                        for c in 0..w {
                            let rgb = model.eval(c as f64 + ox, r as f64 + oy);
                            let q = rgb.map(|v| v.round().clamp(0.0, max) as u16);
                            lf.set(du, dv, r, c, q);
                        }
                    }
                }
            }
        }
    }
    lf
}

struct SoftEdge {
    normal: (f64, f64),
    anchor: (f64, f64),
    step: [f64; 3],
}

struct EdgeModel {
    base: [f64; 3],
    slope: (f64, f64),
    edges: Vec<SoftEdge>,
    disparity: f64,
    max: f64,
}

impl EdgeModel {
    fn random(seed: u64, w: usize, h: usize, max: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tint: [f64; 3] = [rng.random_range(0.8..1.2), 1.0, rng.random_range(0.8..1.2)];
        let level = rng.random_range(0.35..0.55) * max;
        let base = tint.map(|t| t * level);
        let slope = (
            rng.random_range(-0.15..0.15) * max / w as f64,
            rng.random_range(-0.15..0.15) * max / h as f64,
        );
        let n_edges = rng.random_range(4..8);
        let edges = (0..n_edges)
            .map(|_| {
                let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
                let anchor = (
                    rng.random_range(0.0..w as f64),
                    rng.random_range(0.0..h as f64),
                );
                let mag = rng.random_range(0.12..0.3)
                    * max
                    * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let step = [
                    mag * rng.random_range(0.7..1.3),
                    mag,
                    mag * rng.random_range(0.7..1.3),
                ];
                SoftEdge {
                    normal: (angle.cos(), angle.sin()),
                    anchor,
                    step,
                }
            })
            .collect();
        let disparity = rng.random_range(0.2..0.6);
        Self {
            base,
            slope,
            edges,
            disparity,
            max,
        }
    }

    fn eval(&self, x: f64, y: f64) -> [f64; 3] {
        let shade = self.slope.0 * x + self.slope.1 * y;
        let mut v = self.base.map(|b| b + shade);
        for e in &self.edges {
            let d = e.normal.0 * (x - e.anchor.0) + e.normal.1 * (y - e.anchor.1);
            let s = 0.5 * (1.0 + (d / 0.6).tanh());
            for (ch, step) in v.iter_mut().zip(e.step) {
                *ch += step * (s - 0.5);
            }
        }
        v.map(|c| c.clamp(0.02 * self.max, 0.98 * self.max))
    }
}

pub fn encode_scene(lf: &LightField) -> Result<Vec<u8>, ContainerError> {
    let dims = [lf.views_u, lf.views_v, lf.width, lf.height];
    if dims.iter().any(|&d| d > u16::MAX as usize) {
        return Err(ContainerError::ShapeMismatch(
            "scene dimensions are limited to u16".into(),
        ));
    }
    let mut w = ByteWriter::new();
    w.bytes(b"LFSC");
    dims.iter().for_each(|&d| w.u16(d as u16));
    w.u8(lf.bit_depth);
    for px in &lf.data {
        px.iter().for_each(|&v| w.u16(v));
    }
    Ok(w.into_inner())
}

pub fn decode_scene(bytes: &[u8]) -> Result<LightField, ContainerError> {
    let bad = |m: &str| ContainerError::Malformed(m.to_string());
    let mut r = ByteReader::new(bytes);
    if r.take(4) != Some(b"LFSC".as_slice()) {
        return Err(bad("missing LFSC magic"));
    }
    let mut dims = [0usize; 4];
    for d in dims.iter_mut() {
        *d = r.u16().ok_or_else(|| bad("truncated header"))? as usize;
    }
    let bit_depth = r.u8().ok_or_else(|| bad("truncated header"))?;
    check_bit_depth(bit_depth)?;
    let n = dims.iter().product::<usize>();
    if r.remaining() != n * 6 {
        return Err(bad("sample payload length does not match dimensions"));
    }
    let data = (0..n)
        .map(|_| [r.u16().unwrap(), r.u16().unwrap(), r.u16().unwrap()])
        .collect();
    Ok(LightField {
        views_u: dims[0],
        views_v: dims[1],
        width: dims[2],
        height: dims[3],
        bit_depth,
        data,
    })
}

pub fn write_scene(path: impl AsRef<Path>, lf: &LightField) -> Result<(), ContainerError> {
    fs::write(path, encode_scene(lf)?)?;
    Ok(())
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<LightField, ContainerError> {
    decode_scene(&fs::read(path)?)
}
