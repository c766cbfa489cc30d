//! Raw lenselet data, calibration onto the macro-pixel grid and the mapping
//! between calibrated lenselets and arrays of sparse sub-aperture images.

mod calibrate;
mod raw;
mod sai;
mod scene;
mod synth;

pub use calibrate::{
    calibrate, restore_raw, CalibratedLenslet, CalibrationMap, CalibrationReport, Cell, Collision,
};
pub use raw::{read_calibration, read_lfraw, write_calibration, write_lfraw};
pub use sai::{compose, decompose, SAIArray, SaiPixel, SparseSAI};
pub use scene::{generate_scene, read_scene, write_scene, LightField, SceneKind};
pub use synth::{synthesize_lenselet, SynthOptions};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ContainerError {
    #[error("affine calibration matrix is not invertible (det = {0})")]
    NonInvertibleAffine(f64),
    #[error("inconsistent calibration parameters: {0}")]
    InconsistentParams(String),
    #[error("duplicate pixel at ({row}, {col})")]
    DuplicatePosition { row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("sample value {value} exceeds {bit_depth}-bit range")]
    ValueOutOfRange { value: u32, bit_depth: u8 },
    #[error("invalid bit depth {0}")]
    InvalidBitDepth(u8),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for ContainerError {
    fn from(e: std::io::Error) -> Self {
        ContainerError::Io(e.to_string())
    }
}

/// Color filter of a single sensor sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    R,
    G,
    B,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::R, Color::G, Color::B];

    /// Channel index in RGB order.
    pub fn index(self) -> usize {
        match self {
            Color::R => 0,
            Color::G => 1,
            Color::B => 2,
        }
    }
}

/// Phase of the 2×2 Bayer tile, named by its first row then second row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BayerPhase {
    Rggb,
    Grbg,
    Gbrg,
    Bggr,
}

impl BayerPhase {
    pub fn color_at(self, row: usize, col: usize) -> Color {
        use Color::*;
        let tile = match self {
            BayerPhase::Rggb => [[R, G], [G, B]],
            BayerPhase::Grbg => [[G, R], [B, G]],
            BayerPhase::Gbrg => [[G, B], [R, G]],
            BayerPhase::Bggr => [[B, G], [G, R]],
        };
        tile[row & 1][col & 1]
    }

    pub fn code(self) -> u8 {
        match self {
            BayerPhase::Rggb => 0,
            BayerPhase::Grbg => 1,
            BayerPhase::Gbrg => 2,
            BayerPhase::Bggr => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => BayerPhase::Rggb,
            1 => BayerPhase::Grbg,
            2 => BayerPhase::Gbrg,
            3 => BayerPhase::Bggr,
            _ => return None,
        })
    }
}

pub(crate) fn check_bit_depth(bit_depth: u8) -> Result<(), ContainerError> {
    if (8..=16).contains(&bit_depth) {
        Ok(())
    } else {
        Err(ContainerError::InvalidBitDepth(bit_depth))
    }
}

pub(crate) fn max_value(bit_depth: u8) -> u32 {
    (1u32 << bit_depth) - 1
}

/// Bayer-mosaic sensor frame. Samples are row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLensletImage {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub bayer_phase: BayerPhase,
    pub samples: Vec<u16>,
}

impl RawLensletImage {
    pub fn new(
        width: usize,
        height: usize,
        bit_depth: u8,
        bayer_phase: BayerPhase,
        samples: Vec<u16>,
    ) -> Result<Self, ContainerError> {
        check_bit_depth(bit_depth)?;
        if samples.len() != width * height {
            return Err(ContainerError::ShapeMismatch(format!(
                "{} samples for a {width}x{height} frame",
                samples.len()
            )));
        }
        let max = max_value(bit_depth);
        if let Some(&v) = samples.iter().find(|&&v| v as u32 > max) {
            return Err(ContainerError::ValueOutOfRange {
                value: v as u32,
                bit_depth,
            });
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            bayer_phase,
            samples,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.samples[row * self.width + col]
    }

    pub fn color_at(&self, row: usize, col: usize) -> Color {
        self.bayer_phase.color_at(row, col)
    }
}

/// Calibration geometry. The affine maps sensor coordinates `(x = col, y = row)`
/// to calibrated coordinates: `x' = a0 x + a1 y + a2`, `y' = a3 x + a4 y + a5`.
///
/// After calibration the canvas is tiled by `views_u × views_v` macro-pixels.
/// Odd macro-pixel rows are shifted right by `row_offset` (rounded, taken
/// modulo `views_u`), which gives the hexagonal arrangement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub affine: [f64; 6],
    pub macro_pixel_pitch: f64,
    pub row_offset: f64,
    pub views_u: usize,
    pub views_v: usize,
    pub sai_width: usize,
    pub sai_height: usize,
}

impl CalibrationParams {
    /// Identity calibration with a rectangular (unshifted) macro-pixel grid.
    pub fn identity(views_u: usize, views_v: usize, sai_width: usize, sai_height: usize) -> Self {
        Self {
            affine: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            macro_pixel_pitch: views_u as f64,
            row_offset: 0.0,
            views_u,
            views_v,
            sai_width,
            sai_height,
        }
    }

    /// Rotation by `degrees` about the canvas center.
    pub fn with_rotation(mut self, degrees: f64) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        let cx = (self.canvas_width() as f64 - 1.0) / 2.0;
        let cy = (self.canvas_height() as f64 - 1.0) / 2.0;
        self.affine = [c, -s, cx - c * cx + s * cy, s, c, cy - s * cx - c * cy];
        self
    }

    pub fn determinant(&self) -> f64 {
        self.affine[0] * self.affine[4] - self.affine[1] * self.affine[3]
    }

    pub fn validate(&self) -> Result<(), ContainerError> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < 1e-12 || self.affine.iter().any(|v| !v.is_finite()) {
            return Err(ContainerError::NonInvertibleAffine(det));
        }
        if self.views_u == 0 || self.views_v == 0 {
            return Err(ContainerError::InconsistentParams(
                "views_u and views_v must be >= 1".into(),
            ));
        }
        if self.sai_width < 8 || self.sai_height < 8 {
            return Err(ContainerError::InconsistentParams(
                "sai_width and sai_height must be >= 8".into(),
            ));
        }
        if (self.macro_pixel_pitch - self.views_u as f64).abs() > 1e-9 {
            return Err(ContainerError::InconsistentParams(format!(
                "macro_pixel_pitch {} does not match views_u {}",
                self.macro_pixel_pitch, self.views_u
            )));
        }
        if !self.row_offset.is_finite() {
            return Err(ContainerError::InconsistentParams(
                "row_offset is not finite".into(),
            ));
        }
        if self.canvas_width() > u32::MAX as usize || self.canvas_height() > u32::MAX as usize {
            return Err(ContainerError::InconsistentParams(
                "canvas too large".into(),
            ));
        }
        Ok(())
    }

    /// Integer shift applied to odd macro-pixel rows.
    pub fn odd_row_shift(&self) -> usize {
        (self.row_offset.round() as i64).rem_euclid(self.views_u as i64) as usize
    }

    pub fn row_shift(&self, macro_row: usize) -> usize {
        if macro_row % 2 == 1 {
            self.odd_row_shift()
        } else {
            0
        }
    }

    pub fn canvas_width(&self) -> usize {
        let extra = if self.sai_height > 1 {
            self.odd_row_shift()
        } else {
            0
        };
        self.sai_width * self.views_u + extra
    }

    pub fn canvas_height(&self) -> usize {
        self.sai_height * self.views_v
    }

    pub fn view_count(&self) -> usize {
        self.views_u * self.views_v
    }

    /// Calibrated canvas cell → `(du, dv, row, col)` of the SAI sample it feeds,
    /// or `None` when the cell lies outside every macro-pixel.
    pub fn cell_to_sai(&self, x: usize, y: usize) -> Option<(usize, usize, usize, usize)> {
        if y >= self.canvas_height() {
            return None;
        }
        let mr = y / self.views_v;
        let dv = y % self.views_v;
        let shift = self.row_shift(mr);
        if x < shift {
            return None;
        }
        let xs = x - shift;
        let mc = xs / self.views_u;
        if mc >= self.sai_width {
            return None;
        }
        Some((xs % self.views_u, dv, mr, mc))
    }

    /// Inverse of [`cell_to_sai`](Self::cell_to_sai).
    pub fn sai_to_cell(&self, du: usize, dv: usize, row: usize, col: usize) -> (usize, usize) {
        let x = col * self.views_u + du + self.row_shift(row);
        let y = row * self.views_v + dv;
        (x, y)
    }

    /// Applies the affine to a sensor coordinate.
    pub fn map_point(&self, x: f64, y: f64) -> (f64, f64) {
        let a = &self.affine;
        (a[0] * x + a[1] * y + a[2], a[3] * x + a[4] * y + a[5])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bayer_phases() {
        assert_eq!(BayerPhase::Rggb.color_at(0, 0), Color::R);
        assert_eq!(BayerPhase::Rggb.color_at(1, 1), Color::B);
        assert_eq!(BayerPhase::Grbg.color_at(0, 1), Color::R);
        assert_eq!(BayerPhase::Gbrg.color_at(1, 0), Color::R);
        assert_eq!(BayerPhase::Bggr.color_at(2, 2), Color::B);
        for p in [
            BayerPhase::Rggb,
            BayerPhase::Grbg,
            BayerPhase::Gbrg,
            BayerPhase::Bggr,
        ] {
            assert_eq!(BayerPhase::from_code(p.code()), Some(p));
            let greens = (0..2)
                .flat_map(|r| (0..2).map(move |c| (r, c)))
                .filter(|&(r, c)| p.color_at(r, c) == Color::G)
                .count();
            assert_eq!(greens, 2);
        }
    }

    #[test]
    fn raw_rejects_out_of_range() {
        let err = RawLensletImage::new(2, 1, 8, BayerPhase::Rggb, vec![0, 256]).unwrap_err();
        assert_eq!(
            err,
            ContainerError::ValueOutOfRange {
                value: 256,
                bit_depth: 8
            }
        );
        assert!(RawLensletImage::new(2, 2, 8, BayerPhase::Rggb, vec![0; 3]).is_err());
        assert!(RawLensletImage::new(1, 1, 7, BayerPhase::Rggb, vec![0]).is_err());
    }

    #[test]
    fn params_validation() {
        let p = CalibrationParams::identity(5, 5, 8, 8);
        assert!(p.validate().is_ok());
        let mut bad = p.clone();
        bad.affine = [1.0, 2.0, 0.0, 2.0, 4.0, 0.0];
        assert!(matches!(
            bad.validate(),
            Err(ContainerError::NonInvertibleAffine(_))
        ));
        let mut bad = p.clone();
        bad.sai_width = 4;
        assert!(matches!(
            bad.validate(),
            Err(ContainerError::InconsistentParams(_))
        ));
        let mut bad = p;
        bad.macro_pixel_pitch = 6.0;
        assert!(matches!(
            bad.validate(),
            Err(ContainerError::InconsistentParams(_))
        ));
    }

    #[test]
    fn cell_sai_mapping_is_bijective_with_hex_shift() {
        let mut p = CalibrationParams::identity(3, 2, 8, 8);
        p.row_offset = 1.4;
        assert_eq!(p.odd_row_shift(), 1);
        let mut seen = std::collections::HashSet::new();
        for y in 0..p.canvas_height() {
            for x in 0..p.canvas_width() {
                if let Some((du, dv, r, c)) = p.cell_to_sai(x, y) {
                    assert_eq!(p.sai_to_cell(du, dv, r, c), (x, y));
                    assert!(seen.insert((du, dv, r, c)));
                }
            }
        }
        assert_eq!(seen.len(), p.view_count() * p.sai_width * p.sai_height);
    }
}
