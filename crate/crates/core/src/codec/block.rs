//! The per-block loop shared by encoder and decoder. Both sides run the same
//! prediction, graph construction and reconstruction on the same causal
//! state; only the source of the quantized levels differs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::{CodecConfig, CodecError, GraphMode};
use crate::container::{Color, SaiPixel, SparseSAI};
use crate::entropy::{LevelReader, LevelWriter};
use crate::glt::{dequantize, quantize, LiftingPlan, Qp, QuantizedBlock, Rounding};
use crate::graph::{distance_graph, observed_graph, ModeGraphBank, ModeId};
use crate::intra::{
    block_grid, predict_block, BlockPrediction, CausalFrame, IntraParams, KernelParams,
};
use crate::util::round_half_away;

/// Neighbours per node of the distance graphs.
pub const DISTANCE_NEIGHBOURS: usize = 4;

/// Graph key of a plan: the bank mode, or `None` for distance graphs.
type PlanKey = (Option<ModeId>, Vec<usize>);

/// Lifting plans keyed by graph source and local occupancy. Plans depend only
/// on data both sides know, so a cache shared across SAIs and threads is safe.
#[derive(Debug, Default)]
pub struct PlanCache {
    plans: Mutex<HashMap<PlanKey, Arc<LiftingPlan>>>,
}

impl PlanCache {
    pub fn len(&self) -> usize {
        self.plans.lock().expect("plan cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Read-only state of one encode or decode run.
pub(crate) struct CodingContext<'a> {
    pub config: &'a CodecConfig,
    pub intra: IntraParams,
    pub qp: Qp,
    pub bank: Option<&'a ModeGraphBank>,
    pub plans: &'a PlanCache,
}

impl<'a> CodingContext<'a> {
    pub fn new(
        config: &'a CodecConfig,
        bank: Option<&'a ModeGraphBank>,
        plans: &'a PlanCache,
    ) -> Result<Self, CodecError> {
        let qp = config.validate()?;
        let bank = match config.graph_mode {
            GraphMode::Distance => None,
            GraphMode::Learned => {
                let b = bank.ok_or(CodecError::MissingBank)?;
                if b.block_size != config.block_size {
                    return Err(CodecError::Config(format!(
                        "bank block size {} differs from coding block size {}",
                        b.block_size, config.block_size
                    )));
                }
                Some(b)
            }
        };
        Ok(Self {
            config,
            intra: config.intra_params(),
            qp,
            bank,
            plans,
        })
    }

    /// Step-1 quantization keeps integer coefficients, so the lifting rounds
    /// and the path is lossless; coarser steps use the exact ladder.
    fn rounding(&self) -> Rounding {
        if self.qp.step() == 1.0 {
            Rounding::Integer
        } else {
            Rounding::Exact
        }
    }

    fn plan(&self, mode: ModeId, local: &[usize]) -> Result<Arc<LiftingPlan>, CodecError> {
        let key = (self.bank.map(|_| mode), local.to_vec());
        if let Some(p) = self
            .plans
            .plans
            .lock()
            .expect("plan cache poisoned")
            .get(&key)
        {
            return Ok(p.clone());
        }
        let bs = self.config.block_size;
        let graph = match self.bank {
            Some(bank) => observed_graph(&bank.entry(mode).graph, local)?,
            None => {
                let pos: Vec<(f64, f64)> = local
                    .iter()
                    .map(|&i| ((i / bs) as f64, (i % bs) as f64))
                    .collect();
                distance_graph(local, &pos, DISTANCE_NEIGHBOURS)
            }
        };
        let plan = Arc::new(LiftingPlan::build(
            &graph.adjacency,
            &graph.self_loops,
            self.config.lifting_levels,
            self.config.k_sparse,
        )?);
        self.plans
            .plans
            .lock()
            .expect("plan cache poisoned")
            .entry(key)
            .or_insert_with(|| plan.clone());
        Ok(plan)
    }
}

/// What one block looked like to the coder.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    pub block_row: usize,
    pub block_col: usize,
    pub mode: ModeId,
    pub kernel: KernelParams,
    /// Reconstructed samples in raster order of the occupied positions.
    pub reconstructed: Vec<u16>,
}

/// Energies of one block, summed over its colors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockStats {
    pub residual_energy: f64,
    pub low_energy: f64,
    pub high_energy: f64,
    pub samples: usize,
}

/// Where the levels of a block come from.
pub(crate) enum LevelSource<'w, 'r> {
    Encode {
        sai: &'w SparseSAI,
        writer: &'w mut LevelWriter,
    },
    Decode(&'w mut LevelReader<'r>),
}

/// Result of running the block loop over one SAI.
pub(crate) struct SaiOutcome {
    pub sai: SparseSAI,
    pub traces: Vec<BlockTrace>,
    pub stats: Vec<BlockStats>,
}

/// Runs every block of an SAI with the given layout through prediction,
/// lifting and quantization, and reconstructs it exactly as the decoder will.
pub(crate) fn run_sai(
    ctx: &CodingContext<'_>,
    layout: Vec<Option<Color>>,
    width: usize,
    height: usize,
    bit_depth: u8,
    mut source: LevelSource<'_, '_>,
) -> Result<SaiOutcome, CodecError> {
    let max = ((1u32 << bit_depth) - 1) as f64;
    let bs = ctx.config.block_size;
    let mut frame = CausalFrame::new(width, height, layout);
    let mut out = SparseSAI::empty(width, height, bit_depth);
    let (rows, cols) = block_grid(width, height, bs);
    let mut traces = Vec::with_capacity(rows * cols);
    let mut stats = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let pred = predict_block(&frame, br, bc, &ctx.intra, ctx.config.intra);
            let (recon, st) = code_block(ctx, &pred, &mut source, max)?;
            for (p, &v) in pred.pixels.iter().zip(&recon) {
                frame.commit(p.row, p.col, v as f64);
                out.set(
                    p.row,
                    p.col,
                    Some(SaiPixel {
                        color: p.color,
                        value: v,
                    }),
                );
            }
            traces.push(BlockTrace {
                block_row: br,
                block_col: bc,
                mode: pred.mode,
                kernel: pred.kernel,
                reconstructed: recon,
            });
            stats.push(st);
        }
    }
    Ok(SaiOutcome {
        sai: out,
        traces,
        stats,
    })
}

fn code_block(
    ctx: &CodingContext<'_>,
    pred: &BlockPrediction,
    source: &mut LevelSource<'_, '_>,
    max: f64,
) -> Result<(Vec<u16>, BlockStats), CodecError> {
    let bs = ctx.config.block_size;
    let region = pred.region;
    let base: Vec<f64> = pred
        .pixels
        .iter()
        .map(|p| round_half_away(p.prediction).clamp(0.0, max))
        .collect();
    let mut recon = vec![0u16; pred.pixels.len()];
    let mut st = BlockStats {
        samples: pred.pixels.len(),
        ..BlockStats::default()
    };
    let rounding = ctx.rounding();
    for color in Color::ALL {
        let members: Vec<usize> = (0..pred.pixels.len())
            .filter(|&i| pred.pixels[i].color == color)
            .collect();
        if members.is_empty() {
            continue;
        }
        let local: Vec<usize> = members
            .iter()
            .map(|&i| (pred.pixels[i].row - region.row0) * bs + (pred.pixels[i].col - region.col0))
            .collect();
        let plan = ctx.plan(pred.mode, &local)?;
        let bands = plan.band_sizes();
        let levels = match source {
            LevelSource::Encode { sai, writer } => {
                let residual: Vec<f64> = members
                    .iter()
                    .map(|&i| {
                        let p = &pred.pixels[i];
                        let v = sai.get(p.row, p.col).ok_or_else(|| {
                            CodecError::ShapeMismatch(format!(
                                "layout promises a sample at ({}, {})",
                                p.row, p.col
                            ))
                        })?;
                        Ok(v.value as f64 - base[i])
                    })
                    .collect::<Result<_, CodecError>>()?;
                st.residual_energy += residual.iter().map(|r| r * r).sum::<f64>();
                let coeffs = plan.forward(&residual, rounding)?;
                let low = bands[0];
                st.low_energy += coeffs.values[..low].iter().map(|c| c * c).sum::<f64>();
                st.high_energy += coeffs.values[low..].iter().map(|c| c * c).sum::<f64>();
                let q = quantize(&coeffs.values, &bands, ctx.qp);
                writer.write_block(&q.levels, &bands)?;
                q.levels
            }
            LevelSource::Decode(reader) => reader.read_block(&bands)?,
        };
        let deq = dequantize(&QuantizedBlock {
            qp: ctx.qp,
            levels,
            bands,
        });
        let res = plan.inverse(&deq, rounding)?;
        for (k, &i) in members.iter().enumerate() {
            recon[i] = round_half_away(base[i] + res[k]).clamp(0.0, max) as u16;
        }
    }
    Ok((recon, st))
}
