use super::gradient::{block_tensor, Plane};
use super::kernel::{kernel_params, predict_pixel, KernelParams, RefSample};
use super::tensor::{eigen2x2, estimate_input_tensor, RefTensor, StructureTensor, TensorEigen};
use crate::container::{Color, SparseSAI};
use crate::graph::{classify_block, ModeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntraParams {
    pub block_size: usize,
    pub delta: f64,
    pub sigma: f64,
    pub p1: f64,
    pub p2: f64,
    /// Chebyshev radius of the reference window.
    pub ref_radius: usize,
    /// Search radius of the gradient neighbours.
    pub grad_radius: usize,
    /// Regularizer of the DC test ratio.
    pub dc_p: f64,
    /// Eigenvalue ratio below which a block is DC.
    pub dc_threshold: f64,
}

impl Default for IntraParams {
    fn default() -> Self {
        Self {
            block_size: 8,
            delta: 0.9,
            sigma: 1.6,
            p1: 0.001,
            p2: 0.001,
            ref_radius: 7,
            grad_radius: 6,
            dc_p: 0.001,
            dc_threshold: 1.5,
        }
    }
}

/// Pixel rectangle of one block, clipped to the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRegion {
    pub block_row: usize,
    pub block_col: usize,
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl BlockRegion {
    pub fn new(
        block_row: usize,
        block_col: usize,
        block_size: usize,
        width: usize,
        height: usize,
    ) -> Self {
        let (row0, col0) = (block_row * block_size, block_col * block_size);
        Self {
            block_row,
            block_col,
            row0,
            col0,
            rows: block_size.min(height.saturating_sub(row0)),
            cols: block_size.min(width.saturating_sub(col0)),
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.row0..self.row0 + self.rows)
            .flat_map(move |r| (self.col0..self.col0 + self.cols).map(move |c| (r, c)))
    }
}

/// Block grid dimensions `(rows, cols)` of an image.
pub fn block_grid(width: usize, height: usize, block_size: usize) -> (usize, usize) {
    (height.div_ceil(block_size), width.div_ceil(block_size))
}

/// What the coder knows about an SAI while it walks the blocks: the color
/// layout of every position, and the values reconstructed so far.
#[derive(Debug, Clone)]
pub struct CausalFrame {
    pub width: usize,
    pub height: usize,
    colors: Vec<Option<Color>>,
    planes: [Plane; 3],
}

impl CausalFrame {
    pub fn new(width: usize, height: usize, colors: Vec<Option<Color>>) -> Self {
        assert_eq!(colors.len(), width * height);
        let planes = [(); 3].map(|_| Plane::empty(width, height));
        Self {
            width,
            height,
            colors,
            planes,
        }
    }

    pub fn for_sai(sai: &SparseSAI) -> Self {
        Self::new(sai.width, sai.height, sai.colors())
    }

    pub fn color(&self, row: usize, col: usize) -> Option<Color> {
        self.colors[row * self.width + col]
    }

    pub fn colors(&self) -> &[Option<Color>] {
        &self.colors
    }

    /// Records the reconstructed value of an occupied position.
    pub fn commit(&mut self, row: usize, col: usize, value: f64) {
        let color = self.color(row, col).expect("commit on an empty position");
        self.planes[color.index()].set(row, col, Some(value));
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.color(row, col)
            .and_then(|c| self.planes[c.index()].get(row, col))
    }

    pub fn plane(&self, color: Color) -> &Plane {
        &self.planes[color.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedPixel {
    pub row: usize,
    pub col: usize,
    pub color: Color,
    pub prediction: f64,
}

/// Everything the encoder and decoder derive for a block before any of its
/// own samples are known.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPrediction {
    pub region: BlockRegion,
    /// `None` when no causal block carried a usable tensor.
    pub input_tensor: Option<StructureTensor>,
    pub eigen: TensorEigen,
    pub kernel: KernelParams,
    pub mode: ModeId,
    /// Occupied positions in raster order.
    pub pixels: Vec<PredictedPixel>,
}

/// Causal neighbours in the order of [`REFERENCE_DIRECTIONS`](super::REFERENCE_DIRECTIONS).
const NEIGHBOURS: [(i64, i64); 4] = [(-1, -1), (0, -1), (-1, 1), (-1, 0)];

fn neighbour_regions(
    frame: &CausalFrame,
    region: &BlockRegion,
    bs: usize,
) -> [Option<BlockRegion>; 4] {
    let (grid_rows, grid_cols) = block_grid(frame.width, frame.height, bs);
    NEIGHBOURS.map(|(dr, dc)| {
        let (br, bc) = (region.block_row as i64 + dr, region.block_col as i64 + dc);
        (br >= 0 && bc >= 0 && (br as usize) < grid_rows && (bc as usize) < grid_cols)
            .then(|| BlockRegion::new(br as usize, bc as usize, bs, frame.width, frame.height))
    })
}

/// Estimates the block's tensor from its causal neighbours and predicts every
/// occupied position. With `enabled = false` the predictions are zero but the
/// tensor, kernel and mode are still derived.
pub fn predict_block(
    frame: &CausalFrame,
    block_row: usize,
    block_col: usize,
    params: &IntraParams,
    enabled: bool,
) -> BlockPrediction {
    let bs = params.block_size;
    let region = BlockRegion::new(block_row, block_col, bs, frame.width, frame.height);
    let neighbours = neighbour_regions(frame, &region, bs);
    let green = frame.plane(Color::G);
    let refs = neighbours.map(|nb| {
        nb.map(|b| {
            let (tensor, count) =
                block_tensor(green, b.row0, b.col0, b.rows, b.cols, params.grad_radius);
            RefTensor { tensor, count }
        })
    });
    let input_tensor = estimate_input_tensor(&refs, params.delta).ok();
    let eigen = input_tensor
        .map(eigen2x2)
        .unwrap_or_else(TensorEigen::isotropic);
    let green_count = region
        .positions()
        .filter(|&(r, c)| frame.color(r, c) == Some(Color::G))
        .count();
    let kernel = kernel_params(&eigen, green_count, params.sigma, params.p1, params.p2);
    let mode = classify_block(&eigen, params.dc_p, params.dc_threshold);

    let radius = params.ref_radius as i64;
    let mut samples = Vec::new();
    let pixels = region
        .positions()
        .filter_map(|(r, c)| {
            let color = frame.color(r, c)?;
            let prediction = if enabled {
                samples.clear();
                let plane = frame.plane(color);
                for nb in neighbours.iter().flatten() {
                    let rr0 = (nb.row0 as i64).max(r as i64 - radius) as usize;
                    let rr1 = ((nb.row0 + nb.rows) as i64).min(r as i64 + radius + 1);
                    let cc0 = (nb.col0 as i64).max(c as i64 - radius) as usize;
                    let cc1 = ((nb.col0 + nb.cols) as i64).min(c as i64 + radius + 1);
                    for rr in rr0..rr1.max(rr0 as i64) as usize {
                        for cc in cc0..cc1.max(cc0 as i64) as usize {
                            if let Some(value) = plane.get(rr, cc) {
                                samples.push(RefSample {
                                    dh: cc as f64 - c as f64,
                                    dv: rr as f64 - r as f64,
                                    value,
                                });
                            }
                        }
                    }
                }
                predict_pixel(&samples, &kernel).unwrap_or(0.0)
            } else {
                0.0
            };
            Some(PredictedPixel {
                row: r,
                col: c,
                color,
                prediction,
            })
        })
        .collect();
    BlockPrediction {
        region,
        input_tensor,
        eigen,
        kernel,
        mode,
        pixels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub row: usize,
    pub col: usize,
    pub color: Color,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub region: BlockRegion,
    pub mode: ModeId,
    pub residuals: Vec<Residual>,
}

impl ResidualBlock {
    pub fn energy(&self) -> f64 {
        self.residuals.iter().map(|r| r.value * r.value).sum()
    }

    /// Residual values of one color in raster order.
    pub fn of_color(&self, color: Color) -> impl Iterator<Item = &Residual> + '_ {
        self.residuals.iter().filter(move |r| r.color == color)
    }
}

/// Predicts one block of `sai` against `frame` and returns the real-valued
/// residuals together with the estimated tensor.
pub fn intra_predict_block(
    sai: &SparseSAI,
    frame: &CausalFrame,
    block_row: usize,
    block_col: usize,
    params: &IntraParams,
    enabled: bool,
) -> (ResidualBlock, BlockPrediction) {
    let pred = predict_block(frame, block_row, block_col, params, enabled);
    let residuals = pred
        .pixels
        .iter()
        .map(|p| {
            let v = sai
                .get(p.row, p.col)
                .expect("frame layout matches the SAI")
                .value as f64;
            Residual {
                row: p.row,
                col: p.col,
                color: p.color,
                value: v - p.prediction,
            }
        })
        .collect();
    (
        ResidualBlock {
            region: pred.region,
            mode: pred.mode,
            residuals,
        },
        pred,
    )
}

/// Runs intra prediction over a whole SAI in raster order with exact
/// (lossless) reconstruction of the causal references.
pub fn lossless_residuals(
    sai: &SparseSAI,
    params: &IntraParams,
    enabled: bool,
) -> Vec<(ResidualBlock, BlockPrediction)> {
    let mut frame = CausalFrame::for_sai(sai);
    let (rows, cols) = block_grid(sai.width, sai.height, params.block_size);
    let mut out = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let (res, pred) = intra_predict_block(sai, &frame, br, bc, params, enabled);
            for p in &pred.pixels {
                frame.commit(p.row, p.col, sai.get(p.row, p.col).unwrap().value as f64);
            }
            out.push((res, pred));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::container::BayerPhase;

    fn mosaic_sai(w: usize, h: usize, f: impl Fn(usize, usize) -> u16) -> SparseSAI {
        let px = (0..h)
            .flat_map(|r| (0..w).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, BayerPhase::Rggb.color_at(r, c), f(r, c)));
        SparseSAI::from_pixels(w, h, 10, px.collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn constant_image_has_zero_residuals_after_first_block() {
        let sai = mosaic_sai(24, 24, |_, _| 500);
        let blocks = lossless_residuals(&sai, &IntraParams::default(), true);
        assert_eq!(
            blocks[0].0.residuals.iter().map(|r| r.value).sum::<f64>(),
            500.0 * 64.0
        );
        for (res, _) in blocks
            .iter()
            .filter(|b| b.0.region.block_row > 0 && b.0.region.block_col > 0)
        {
            for r in &res.residuals {
                let local = (r.row % 8, r.col % 8);
                if r.value.abs() > 1e-9 {
                    // Only positions with no same-color pixel of the causal
                    // blocks inside the window stay unpredicted: the R corner
                    // (6, 6) and the B corner (7, 7) of an RGGB block.
                    assert!(local == (6, 6) || local == (7, 7), "{r:?}");
                    assert_eq!(r.value, 500.0);
                }
            }
        }
    }

    #[test]
    fn top_left_block_is_unpredicted() {
        let sai = mosaic_sai(16, 16, |r, c| (r * 16 + c) as u16);
        let frame = CausalFrame::for_sai(&sai);
        let (res, pred) = intra_predict_block(&sai, &frame, 0, 0, &IntraParams::default(), true);
        assert!(pred.input_tensor.is_none());
        assert_eq!(pred.mode, ModeId::Dc);
        for r in &res.residuals {
            assert_eq!(r.value, sai.get(r.row, r.col).unwrap().value as f64);
        }
        assert_eq!(res.residuals.len(), 64);
    }

    #[test]
    fn prediction_lowers_energy_on_edges() {
        let sai = mosaic_sai(32, 32, |r, c| if 2 * r + c > 40 { 800 } else { 200 });
        let p = IntraParams::default();
        let on: f64 = lossless_residuals(&sai, &p, true)
            .iter()
            .map(|b| b.0.energy())
            .sum();
        let off: f64 = lossless_residuals(&sai, &p, false)
            .iter()
            .map(|b| b.0.energy())
            .sum();
        assert!(on < off, "{on} vs {off}");
    }

    #[test]
    fn residual_count_matches_occupancy() {
        let px: Vec<_> = (0..16)
            .flat_map(|r| (0..16).map(move |c| (r, c)))
            .filter(|(r, c)| (r * 7 + c * 3) % 5 != 0)
            .map(|(r, c)| (r, c, BayerPhase::Grbg.color_at(r, c), (r + c) as u16))
            .collect();
        let sai = SparseSAI::from_pixels(16, 16, 8, px).unwrap();
        let blocks = lossless_residuals(&sai, &IntraParams::default(), true);
        for (res, _) in &blocks {
            let occupied = res
                .region
                .positions()
                .filter(|&(r, c)| sai.get(r, c).is_some())
                .count();
            assert_eq!(res.residuals.len(), occupied);
        }
    }
}
