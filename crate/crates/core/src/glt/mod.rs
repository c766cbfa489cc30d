//! Graph lifting transform: MST bipartition, Kron re-connection, a two-level
//! predict/update ladder with self-loop aware prediction, and quantization.

mod bipartition;
mod kron;
mod lifting;
mod quant;

use thiserror::Error;

pub use bipartition::{bipartition_mst, max_spanning_forest, Bipartition};
pub use kron::{kron_reconnect, BipartiteGraph, SINGULAR_JITTER};
pub use lifting::{
    lift_forward, lift_inverse, lifting_plan, LiftingCoefficients, LiftingPlan, Rounding, K_SPARSE,
};
pub use quant::{dequantize, quantize, Qp, QuantizedBlock, QP_MAX, QP_MIN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GltError {
    #[error("prediction block of the Laplacian is singular even after regularization")]
    SingularPP,
    #[error("graph has {expected} nodes but {found} values were supplied")]
    GraphMismatch { expected: usize, found: usize },
    #[error("QP {0} outside [4, 36]")]
    QpOutOfRange(i32),
}
