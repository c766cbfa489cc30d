use super::calibrate::{CalibratedLenslet, Cell};
use super::{check_bit_depth, max_value, BayerPhase, CalibrationParams, Color, ContainerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaiPixel {
    pub color: Color,
    pub value: u16,
}

/// Sub-aperture image whose grid is only partially populated; every occupied
/// position carries a single color sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSAI {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    cells: Vec<Option<SaiPixel>>,
}

impl SparseSAI {
    pub fn empty(width: usize, height: usize, bit_depth: u8) -> Self {
        Self {
            width,
            height,
            bit_depth,
            cells: vec![None; width * height],
        }
    }

    /// Builds an SAI from a pixel list `(row, col, color, value)`.
    pub fn from_pixels(
        width: usize,
        height: usize,
        bit_depth: u8,
        pixels: impl IntoIterator<Item = (usize, usize, Color, u16)>,
    ) -> Result<Self, ContainerError> {
        check_bit_depth(bit_depth)?;
        let mut sai = Self::empty(width, height, bit_depth);
        for (row, col, color, value) in pixels {
            if row >= height || col >= width {
                return Err(ContainerError::ShapeMismatch(format!(
                    "pixel ({row}, {col}) outside {width}x{height} SAI"
                )));
            }
            if value as u32 > max_value(bit_depth) {
                return Err(ContainerError::ValueOutOfRange {
                    value: value as u32,
                    bit_depth,
                });
            }
            let slot = &mut sai.cells[row * width + col];
            if slot.is_some() {
                return Err(ContainerError::DuplicatePosition { row, col });
            }
            *slot = Some(SaiPixel { color, value });
        }
        Ok(sai)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<SaiPixel> {
        self.cells[row * self.width + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, px: Option<SaiPixel>) {
        self.cells[row * self.width + col] = px;
    }

    pub fn cells(&self) -> &[Option<SaiPixel>] {
        &self.cells
    }

    /// Per-position color occupancy, the part of the SAI the decoder knows
    /// before reading any payload.
    pub fn colors(&self) -> Vec<Option<Color>> {
        self.cells.iter().map(|c| c.map(|p| p.color)).collect()
    }

    /// Occupied pixels in raster order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize, Color, u16)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.map(|p| (i / self.width, i % self.width, p.color, p.value)))
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

/// All SAIs of one light field, indexed `dv * views_u + du`.
#[derive(Debug, Clone, PartialEq)]
pub struct SAIArray {
    pub params: CalibrationParams,
    pub bit_depth: u8,
    pub bayer_phase: BayerPhase,
    pub sais: Vec<SparseSAI>,
}

impl SAIArray {
    pub fn empty(params: &CalibrationParams, bit_depth: u8, bayer_phase: BayerPhase) -> Self {
        let sais = (0..params.view_count())
            .map(|_| SparseSAI::empty(params.sai_width, params.sai_height, bit_depth))
            .collect();
        Self {
            params: params.clone(),
            bit_depth,
            bayer_phase,
            sais,
        }
    }

    pub fn index(&self, du: usize, dv: usize) -> usize {
        dv * self.params.views_u + du
    }

    pub fn get(&self, du: usize, dv: usize) -> &SparseSAI {
        &self.sais[self.index(du, dv)]
    }

    pub fn occupied(&self) -> usize {
        self.sais.iter().map(SparseSAI::occupied).sum()
    }
}

/// Splits a calibrated lenselet into SAIs: the sample at offset `(du, dv)`
/// inside macro-pixel `(row, col)` becomes pixel `(row, col)` of SAI `(du, dv)`.
pub fn decompose(
    cal: &CalibratedLenslet,
    params: &CalibrationParams,
) -> Result<SAIArray, ContainerError> {
    params.validate()?;
    if cal.width != params.canvas_width() || cal.height != params.canvas_height() {
        return Err(ContainerError::InconsistentParams(format!(
            "lenselet canvas {}x{} does not match parameters ({}x{})",
            cal.width,
            cal.height,
            params.canvas_width(),
            params.canvas_height()
        )));
    }
    let mut arr = SAIArray::empty(params, cal.bit_depth, cal.bayer_phase);
    for (i, cell) in cal.cells.iter().enumerate() {
        let Some(c) = cell else { continue };
        let (x, y) = (i % cal.width, i / cal.width);
        let (du, dv, row, col) = params.cell_to_sai(x, y).ok_or_else(|| {
            ContainerError::InconsistentParams(format!(
                "occupied cell ({x}, {y}) outside macro-pixel grid"
            ))
        })?;
        let idx = arr.index(du, dv);
        arr.sais[idx].set(
            row,
            col,
            Some(SaiPixel {
                color: c.color,
                value: c.value,
            }),
        );
    }
    Ok(arr)
}

/// Exact inverse of [`decompose`].
pub fn compose(arr: &SAIArray) -> Result<CalibratedLenslet, ContainerError> {
    let params = &arr.params;
    params.validate()?;
    if arr.sais.len() != params.view_count() {
        return Err(ContainerError::InconsistentParams(format!(
            "{} SAIs for a {}x{} view grid",
            arr.sais.len(),
            params.views_u,
            params.views_v
        )));
    }
    let mut cal = CalibratedLenslet::empty(params, arr.bit_depth, arr.bayer_phase);
    for dv in 0..params.views_v {
        for du in 0..params.views_u {
            let sai = arr.get(du, dv);
            if sai.width != params.sai_width || sai.height != params.sai_height {
                return Err(ContainerError::InconsistentParams(format!(
                    "SAI ({du}, {dv}) is {}x{}, expected {}x{}",
                    sai.width, sai.height, params.sai_width, params.sai_height
                )));
            }
            for (row, col, color, value) in sai.pixels() {
                let (x, y) = params.sai_to_cell(du, dv, row, col);
                let slot = &mut cal.cells[y * cal.width + x];
                if slot.is_some() {
                    return Err(ContainerError::DuplicatePosition { row: y, col: x });
                }
                *slot = Some(Cell { color, value });
            }
        }
    }
    Ok(cal)
}
