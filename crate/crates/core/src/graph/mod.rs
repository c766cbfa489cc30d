//! Graphs for transform coding: mode classification, plug-in covariance from
//! incomplete blocks, maximum-likelihood generalized Laplacians, per-block
//! observed graphs and the trained mode bank.

mod bank;
mod covariance;
mod learn;
mod mode;
mod observed;
mod template;

pub use bank::{
    distance_template, train_bank, BankEntry, ModeGraphBank, TrainingReport, MIN_MODE_BLOCKS,
};
pub use covariance::{plug_in_covariance, PlugInCovariance};
pub use learn::{laplacian_objective, learn_laplacian, LearnConfig, LearnOutcome};
pub use mode::{classify_block, ModeId};
pub use observed::{
    distance_graph, laplacian_of, observed_from_precision, observed_graph, sparsify, ObservedGraph,
    KEEP_LINKS,
};
pub use template::{lattice_edges, TemplateGraph, LATTICE_TOPOLOGY};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("precision matrix stayed singular after {attempts} regularization attempts")]
    SingularQ { attempts: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("no observed nodes")]
    EmptyObservation,
    #[error("mode {0:?} has no training blocks")]
    EmptyMode(ModeId),
    #[error("malformed bank: {0}")]
    MalformedBank(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GraphError {
    fn from(e: std::io::Error) -> Self {
        GraphError::Io(e.to_string())
    }
}
