use serde::{Deserialize, Serialize};

use super::CodecError;
use crate::entropy::{CodingParams, LayoutSource};
use crate::glt::Qp;
use crate::intra::IntraParams;

/// Where the per-block lifting graphs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    /// k-nearest-neighbour graph on pixel distances.
    Distance,
    /// Mode template from a trained bank.
    Learned,
}

impl GraphMode {
    pub fn code(self) -> u8 {
        match self {
            GraphMode::Distance => 0,
            GraphMode::Learned => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(GraphMode::Distance),
            1 => Some(GraphMode::Learned),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecConfig {
    pub block_size: usize,
    /// Angular decay of the reference block weights.
    pub delta: f64,
    /// Kernel bandwidth.
    pub sigma: f64,
    pub p1: f64,
    pub p2: f64,
    /// Elongation threshold `T` below which a block is classified DC.
    pub dc_threshold: f64,
    /// Regularizer of the DC elongation test.
    pub dc_p: f64,
    pub qp: i32,
    pub lifting_levels: usize,
    pub k_sparse: usize,
    pub graph_mode: GraphMode,
    pub intra: bool,
    pub ref_radius: usize,
    pub grad_radius: usize,
}

impl Default for CodecConfig {
    fn default() -> Self {
        let ip = IntraParams::default();
        Self {
            block_size: ip.block_size,
            delta: ip.delta,
            sigma: ip.sigma,
            p1: ip.p1,
            p2: ip.p2,
            dc_threshold: ip.dc_threshold,
            dc_p: ip.dc_p,
            qp: 22,
            lifting_levels: 2,
            k_sparse: crate::glt::K_SPARSE,
            graph_mode: GraphMode::Learned,
            intra: true,
            ref_radius: ip.ref_radius,
            grad_radius: ip.grad_radius,
        }
    }
}

impl CodecConfig {
    pub fn intra_params(&self) -> IntraParams {
        IntraParams {
            block_size: self.block_size,
            delta: self.delta,
            sigma: self.sigma,
            p1: self.p1,
            p2: self.p2,
            ref_radius: self.ref_radius,
            grad_radius: self.grad_radius,
            dc_p: self.dc_p,
            dc_threshold: self.dc_threshold,
        }
    }

    pub fn validate(&self) -> Result<Qp, CodecError> {
        let bad = |m: String| Err(CodecError::Config(m));
        if !(2..=16).contains(&self.block_size) {
            return bad(format!("block size {} outside 2..=16", self.block_size));
        }
        if !(1..=4).contains(&self.lifting_levels) {
            return bad(format!(
                "lifting levels {} outside 1..=4",
                self.lifting_levels
            ));
        }
        if self.k_sparse == 0 {
            return bad("k_sparse must be positive".into());
        }
        if self.ref_radius > 255 || self.grad_radius > 255 || self.k_sparse > 255 {
            return bad("radii and k_sparse must fit in a byte".into());
        }
        for (name, v) in [("delta", self.delta), ("sigma", self.sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("dc_p", self.dc_p),
            ("dc_threshold", self.dc_threshold),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be nonnegative"));
            }
        }
        Ok(Qp::new(self.qp)?)
    }

    pub(crate) fn coding_params(&self, layout: LayoutSource) -> CodingParams {
        CodingParams {
            qp: self.qp as u8,
            block_size: self.block_size as u8,
            lifting_levels: self.lifting_levels as u8,
            k_sparse: self.k_sparse as u8,
            ref_radius: self.ref_radius as u8,
            grad_radius: self.grad_radius as u8,
            intra: self.intra,
            graph_mode: self.graph_mode.code(),
            layout,
            delta: self.delta,
            sigma: self.sigma,
            p1: self.p1,
            p2: self.p2,
            dc_threshold: self.dc_threshold,
            dc_p: self.dc_p,
        }
    }

    /// Configuration recorded in a stream header.
    pub(crate) fn from_coding(c: &CodingParams) -> Result<Self, CodecError> {
        let graph_mode = GraphMode::from_code(c.graph_mode)
            .ok_or_else(|| CodecError::Config(format!("unknown graph mode {}", c.graph_mode)))?;
        let cfg = Self {
            block_size: c.block_size as usize,
            delta: c.delta,
            sigma: c.sigma,
            p1: c.p1,
            p2: c.p2,
            dc_threshold: c.dc_threshold,
            dc_p: c.dc_p,
            qp: c.qp as i32,
            lifting_levels: c.lifting_levels as usize,
            k_sparse: c.k_sparse as usize,
            graph_mode,
            intra: c.intra,
            ref_radius: c.ref_radius as usize,
            grad_radius: c.grad_radius as usize,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
