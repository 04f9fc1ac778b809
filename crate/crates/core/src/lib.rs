//! Dependency forests for relation extraction.
//!
//! The crate turns per-sentence labeled arc probabilities into dependency
//! forests (edge thresholding or merged K-best projective trees), measures
//! forest quality, and trains a Bi-LSTM + graph recurrent network relation
//! classifier whose message passing can be weighted by parser confidence.
//!
//! Module map:
//!
//! - [`vocab`], [`instance`], [`arcs`], [`structure`]: shared data model.
//! - [`forest`]: 1-best / K-best Eisner decoding, edgewise forests, statistics.
//! - [`nn`]: the encoder, its exact gradients and checkpoints.
//! - [`train`]: losses, Adam, micro-F1 evaluation and the training loop.
//! - [`io`]: line-delimited file formats and the synthetic corpus generator.

pub mod arcs;
pub mod error;
pub mod forest;
pub mod instance;
pub mod io;
pub mod nn;
pub mod seed;
pub mod structure;
pub mod train;
pub mod vocab;

pub use crate::arcs::{ArcEntry, ArcProbabilities};
pub use crate::error::{Error, Result};
pub use crate::instance::{validate_instance, RelationInstance, Sentence, Span};
pub use crate::structure::{DependencyEdge, DependencyForest, DependencyTree};
pub use crate::vocab::{LabelId, LabelVocab, WordVocab};
