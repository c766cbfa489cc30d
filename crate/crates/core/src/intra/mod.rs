//! Intra prediction for sparse SAIs.
//!
//! Gradients are fitted on the G plane, summarized per block as structure
//! tensors, and the tensor of the block being coded is extrapolated from its
//! four causal neighbours. The resulting anisotropic Gaussian kernel predicts
//! every color from same-color pixels of those neighbours.

mod block;
mod gradient;
mod kernel;
mod tensor;

pub use block::{
    block_grid, intra_predict_block, lossless_residuals, predict_block, BlockPrediction,
    BlockRegion, CausalFrame, IntraParams, PredictedPixel, Residual, ResidualBlock,
};
pub use gradient::{block_tensor, estimate_gradient, Gradient, Plane};
pub use kernel::{kernel_params, kernel_weight, predict_pixel, KernelParams, RefSample};
pub use tensor::{
    eigen2x2, estimate_input_tensor, reference_weight, RefTensor, StructureTensor, TensorEigen,
    REFERENCE_DIRECTIONS,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntraError {
    #[error("only {found} gradient neighbours within radius {radius}")]
    InsufficientNeighbors { found: usize, radius: usize },
    #[error("position ({row}, {col}) holds no sample")]
    MissingSample { row: usize, col: usize },
    #[error("no reference block carries a usable structure tensor")]
    NoReferences,
    #[error("empty reference set")]
    EmptyReferenceSet,
}
