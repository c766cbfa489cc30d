//! Pre-demosaic light field codec.
//!
//! Raw Bayer lenselet frames are calibrated onto an integer macro-pixel grid,
//! split into sparse sub-aperture images (SAIs), intra-predicted block by block
//! with structure-tensor steered kernels and transform coded with a graph
//! lifting transform whose graphs come from a learned bank of generalized
//! Laplacians. Every SAI is coded independently so any view can be decoded
//! without touching the others.
//!
//! Module map:
//!
//! * [`container`] raw mosaics, calibration, SAI decomposition, synthetic scenes
//! * [`intra`] gradients, structure tensors and adaptive kernel prediction
//! * [`graph`] mode classification, plug-in covariance, Laplacian learning
//! * [`glt`] bipartition, Kron reconnection, lifting and quantization
//! * [`entropy`] adaptive binary range coder and the `.lfgc` container
//! * [`codec`] encode/decode orchestration, demosaicking and metrics

pub mod codec;
pub mod container;
pub mod entropy;
pub mod glt;
pub mod graph;
pub mod intra;
pub mod linalg;
pub mod util;

pub use codec::{CodecConfig, GraphMode};
pub use container::{
    BayerPhase, CalibratedLenslet, CalibrationParams, Color, LightField, RawLensletImage, SAIArray,
    SparseSAI,
};
