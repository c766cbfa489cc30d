//! The trained bank of mode templates and its `.lfbank` file.
//!
//! Layout, little-endian: magic `LFGB`, u8 version, u8 block size, u8 topology
//! id, then for each of the 9 modes: u8 mode id, u16 n, u32 edge count, edges
//! as (u16, u16, f64), n × f64 self-loops. A trailer follows with, per mode,
//! the u64 number of training blocks and a u8 flag set when the mode fell
//! back to the distance template.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::covariance::PlugInCovariance;
use super::learn::{learn_laplacian, LearnConfig};
use super::mode::ModeId;
use super::observed::distance_graph;
use super::template::{lattice_edges, TemplateGraph, LATTICE_TOPOLOGY};
use super::GraphError;
use crate::container::{Color, SparseSAI};
use crate::intra::{lossless_residuals, IntraParams};
use crate::util::{fnv1a64, ByteReader, ByteWriter};

const MAGIC: &[u8; 4] = b"LFGB";
const VERSION: u8 = 1;

/// Modes with fewer training blocks than this use the distance template.
pub const MIN_MODE_BLOCKS: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub mode: ModeId,
    pub graph: TemplateGraph,
    pub samples: u64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeGraphBank {
    pub block_size: usize,
    pub topology: u8,
    /// One entry per mode, in [`ModeId::ALL`] order.
    pub entries: Vec<BankEntry>,
}

/// Distance-graph template over every position of a `side × side` block.
pub fn distance_template(side: usize) -> TemplateGraph {
    let n = side * side;
    let nodes: Vec<usize> = (0..n).collect();
    let pos: Vec<(f64, f64)> = nodes
        .iter()
        .map(|&i| ((i / side) as f64, (i % side) as f64))
        .collect();
    let g = distance_graph(&nodes, &pos, 4);
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if g.adjacency[(i, j)] > 0.0 {
                edges.push((i, j));
                weights.push(g.adjacency[(i, j)]);
            }
        }
    }
    TemplateGraph::new(n, edges, weights, vec![0.0; n])
}

impl ModeGraphBank {
    pub fn entry(&self, mode: ModeId) -> &BankEntry {
        &self.entries[mode.code() as usize]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u8(VERSION);
        w.u8(self.block_size as u8);
        w.u8(self.topology);
        for e in &self.entries {
            w.u8(e.mode.code());
            w.u16(e.graph.n as u16);
            w.u32(e.graph.edges.len() as u32);
            for (&(i, j), &wt) in e.graph.edges.iter().zip(&e.graph.weights) {
                w.u16(i as u16);
                w.u16(j as u16);
                w.f64(wt);
            }
            e.graph.self_loops.iter().for_each(|&h| w.f64(h));
        }
        for e in &self.entries {
            w.u64(e.samples);
            w.u8(e.fallback as u8);
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GraphError> {
        let bad = |m: &str| GraphError::MalformedBank(m.to_string());
        let mut r = ByteReader::new(bytes);
        if r.take(4) != Some(MAGIC.as_slice()) {
            return Err(bad("missing LFGB magic"));
        }
        let version = r.u8().ok_or_else(|| bad("truncated"))?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let block_size = r.u8().ok_or_else(|| bad("truncated"))? as usize;
        let topology = r.u8().ok_or_else(|| bad("truncated"))?;
        let mut entries = Vec::with_capacity(9);
        for expected in ModeId::ALL {
            let code = r.u8().ok_or_else(|| bad("truncated"))?;
            if code != expected.code() {
                return Err(bad("modes out of order"));
            }
            let n = r.u16().ok_or_else(|| bad("truncated"))? as usize;
            if n != block_size * block_size {
                return Err(bad("template size does not match the block size"));
            }
            let m = r.u32().ok_or_else(|| bad("truncated"))? as usize;
            if m > n * n {
                return Err(bad("too many edges"));
            }
            let mut edges = Vec::with_capacity(m);
            let mut weights = Vec::with_capacity(m);
            for _ in 0..m {
                let i = r.u16().ok_or_else(|| bad("truncated"))? as usize;
                let j = r.u16().ok_or_else(|| bad("truncated"))? as usize;
                let w = r.f64().ok_or_else(|| bad("truncated"))?;
                if i >= n || j >= n || i == j || !(w >= 0.0 && w.is_finite()) {
                    return Err(bad("invalid edge"));
                }
                edges.push((i, j));
                weights.push(w);
            }
            let self_loops = (0..n)
                .map(|_| {
                    r.f64()
                        .filter(|h| *h >= 0.0 && h.is_finite())
                        .ok_or_else(|| bad("invalid self-loop"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            entries.push(BankEntry {
                mode: expected,
                graph: TemplateGraph::new(n, edges, weights, self_loops),
                samples: 0,
                fallback: false,
            });
        }
        for e in entries.iter_mut() {
            e.samples = r.u64().ok_or_else(|| bad("truncated trailer"))?;
            e.fallback = r.u8().ok_or_else(|| bad("truncated trailer"))? != 0;
        }
        if r.remaining() != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            block_size,
            topology,
            entries,
        })
    }

    /// FNV-1a 64 of the serialized bank; streams record it to bind to a bank.
    pub fn hash(&self) -> u64 {
        fnv1a64(&self.to_bytes())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Training blocks per mode, in [`ModeId::ALL`] order.
    pub counts: [u64; 9],
    /// Modes that fell back to the distance template.
    pub empty_modes: Vec<ModeId>,
    /// Modes whose solver hit the sweep budget.
    pub unconverged: Vec<ModeId>,
}

/// Runs the intra front-end over the training SAIs, classifies every full
/// block by its estimated tensor, accumulates plug-in covariances of the G
/// residuals per mode and learns one Laplacian per mode on the lattice.
pub fn train_bank(
    sais: &[SparseSAI],
    params: &IntraParams,
    intra_enabled: bool,
    learn: &LearnConfig,
) -> Result<(ModeGraphBank, TrainingReport), GraphError> {
    let bs = params.block_size;
    let n = bs * bs;
    let shards: Vec<(Vec<PlugInCovariance>, [u64; 9])> = sais
        .par_iter()
        .map(|sai| {
            let mut acc: Vec<PlugInCovariance> = (0..9).map(|_| PlugInCovariance::new(n)).collect();
            let mut counts = [0u64; 9];
            for (res, _) in lossless_residuals(sai, params, intra_enabled) {
                if res.region.rows != bs || res.region.cols != bs {
                    continue;
                }
                let mut obs = vec![None; n];
                for r in res.of_color(Color::G) {
                    obs[(r.row - res.region.row0) * bs + (r.col - res.region.col0)] = Some(r.value);
                }
                let m = res.mode.code() as usize;
                acc[m].observe(&obs);
                counts[m] += 1;
            }
            (acc, counts)
        })
        .collect();
    let mut acc: Vec<PlugInCovariance> = (0..9).map(|_| PlugInCovariance::new(n)).collect();
    let mut counts = [0u64; 9];
    for (shard, c) in &shards {
        for m in 0..9 {
            acc[m].merge(&shard[m]);
            counts[m] += c[m];
        }
    }

    let lattice = lattice_edges(bs);
    let learned: Vec<Result<(BankEntry, bool), GraphError>> = ModeId::ALL
        .par_iter()
        .map(|&mode| {
            let m = mode.code() as usize;
            if counts[m] < MIN_MODE_BLOCKS {
                return Ok((
                    BankEntry {
                        mode,
                        graph: distance_template(bs),
                        samples: counts[m],
                        fallback: true,
                    },
                    true,
                ));
            }
            let s = acc[m].estimate();
            let edges: Vec<(usize, usize)> = lattice
                .iter()
                .copied()
                .filter(|&(i, j)| acc[m].pair_count(i, j) > 0)
                .collect();
            let out = learn_laplacian(&s, &edges, learn)?;
            Ok((
                BankEntry {
                    mode,
                    graph: out.graph,
                    samples: counts[m],
                    fallback: false,
                },
                out.converged,
            ))
        })
        .collect();
    let mut entries = Vec::with_capacity(9);
    let mut unconverged = Vec::new();
    for r in learned {
        let (e, converged) = r?;
        if !converged {
            unconverged.push(e.mode);
        }
        entries.push(e);
    }
    let empty_modes = entries
        .iter()
        .filter(|e| e.fallback)
        .map(|e| e.mode)
        .collect();
    let bank = ModeGraphBank {
        block_size: bs,
        topology: LATTICE_TOPOLOGY,
        entries,
    };
    Ok((
        bank,
        TrainingReport {
            counts,
            empty_modes,
            unconverged,
        },
    ))
}
