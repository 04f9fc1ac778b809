//! The relation encoder: embeddings, Bi-LSTM, graph recurrent network over a
//! dependency structure, mention pooling, and relation / NER output layers,
//! together with hand-written reverse-mode gradients.

mod checkpoint;
mod config;
mod graph;
mod grn;
mod lstm;
mod model;
mod output;
mod params;

pub use self::checkpoint::{Checkpoint, Model, NamedTensor, CHECKPOINT_FORMAT};
pub use self::config::{ModelConfig, Structure};
pub use self::graph::{GnnGraph, GraphEdge};
pub use self::grn::{compute_messages, grn_forward, grn_step, GrnStep, GrnTrace};
pub use self::lstm::{bilstm_forward, BiLstmTrace};
pub use self::model::{backward, forward, EncoderInput, ForwardTrace, OutputGradients};
pub use self::output::{
    log_softmax, mention_pool, ner_distributions, ner_logits, relation_distribution,
    relation_logits, softmax,
};
pub use self::params::{embed, LstmParams, ModelParams, ParamShapes, TensorKind};
