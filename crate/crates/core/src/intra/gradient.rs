use super::{tensor::StructureTensor, IntraError};
use crate::container::{Color, SparseSAI};

/// Intensity derivative along columns (`dh`) and rows (`dv`, pointing down).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gradient {
    pub dh: f64,
    pub dv: f64,
}

/// Single-color sample plane with holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Option<f64>>,
}

impl Plane {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![None; width * height],
        }
    }

    /// The samples of `color` in an SAI.
    pub fn of_color(sai: &SparseSAI, color: Color) -> Self {
        let values = sai
            .cells()
            .iter()
            .map(|c| c.filter(|p| p.color == color).map(|p| p.value as f64))
            .collect();
        Self {
            width: sai.width,
            height: sai.height,
            values,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn get_signed(&self, row: i64, col: i64) -> Option<f64> {
        if row < 0 || col < 0 || row >= self.height as i64 || col >= self.width as i64 {
            None
        } else {
            self.get(row as usize, col as usize)
        }
    }

    pub fn set(&mut self, row: usize, col: usize, v: Option<f64>) {
        self.values[row * self.width + col] = v;
    }
}

const HALF_AXES: [(i64, i64); 4] = [(0, 1), (0, -1), (1, 0), (-1, 0)];

/// Least-squares plane fit `(XᵀX)⁺ XᵀF` at `(row, col)` using the nearest sample
/// on each of the four half-axes within `radius`. A rank-deficient fit (all
/// neighbours on one axis) gives the minimum-norm solution.
pub fn estimate_gradient(
    plane: &Plane,
    row: usize,
    col: usize,
    radius: usize,
) -> Result<Gradient, IntraError> {
    let center = plane
        .get(row, col)
        .ok_or(IntraError::MissingSample { row, col })?;
    let (mut xx, mut xy, mut yy, mut xf, mut yf) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut found = 0;
    for (dr, dc) in HALF_AXES {
        for k in 1..=radius as i64 {
            if let Some(v) = plane.get_signed(row as i64 + dr * k, col as i64 + dc * k) {
                let (h, w) = ((dc * k) as f64, (dr * k) as f64);
                let f = v - center;
                xx += h * h;
                xy += h * w;
                yy += w * w;
                xf += h * f;
                yf += w * f;
                found += 1;
                break;
            }
        }
    }
    if found < 2 {
        return Err(IntraError::InsufficientNeighbors { found, radius });
    }
    let det = xx * yy - xy * xy;
    let (dh, dv) = if det > 0.0 {
        ((yy * xf - xy * yf) / det, (xx * yf - xy * xf) / det)
    } else {
        // XᵀX = s·uuᵀ with s = trace; its pseudo-inverse is uuᵀ/s.
        let s = xx + yy;
        let (ux, uy) = (xx.sqrt(), if xy < 0.0 { -yy.sqrt() } else { yy.sqrt() });
        let proj = (ux * xf + uy * yf) / (s * s);
        (ux * proj, uy * proj)
    };
    Ok(Gradient { dh, dv })
}

/// Structure tensor `Σ ∇f ∇fᵀ` over the plane's samples in a region, with the
/// number of pixels that produced a gradient.
pub fn block_tensor(
    plane: &Plane,
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
    radius: usize,
) -> (StructureTensor, usize) {
    let mut t = StructureTensor::zero();
    let mut n = 0;
    for r in row0..(row0 + rows).min(plane.height) {
        for c in col0..(col0 + cols).min(plane.width) {
            if plane.get(r, c).is_none() {
                continue;
            }
            if let Ok(g) = estimate_gradient(plane, r, c, radius) {
                t.accumulate(g);
                n += 1;
            }
        }
    }
    (t, n)
}
