use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which dependency structure the encoder consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    /// Bi-LSTM states only; no graph layer.
    TextOnly,
    /// A single (1-best) tree.
    Tree,
    /// A dependency forest.
    Forest,
}

impl Structure {
    pub fn uses_graph(self) -> bool {
        self != Structure::TextOnly
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "textonly" => Ok(Structure::TextOnly),
            "tree" => Ok(Structure::Tree),
            "forest" => Ok(Structure::Forest),
            other => Err(Error::InvalidConfig(format!("unknown structure {other}"))),
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::TextOnly => "textonly",
            Structure::Tree => "tree",
            Structure::Forest => "forest",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub label_dim: usize,
    /// Hidden size of each LSTM direction; graph states are twice this.
    pub lstm_dim: usize,
    /// Message passing steps.
    pub steps: usize,
    pub dropout: f64,
    /// Scale messages by the parser probability of their edge.
    pub weighted: bool,
    pub ner_head: bool,
    pub freeze_embeddings: bool,
    pub structure: Structure,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 200,
            label_dim: 100,
            lstm_dim: 100,
            steps: 2,
            dropout: 0.1,
            weighted: true,
            ner_head: false,
            freeze_embeddings: false,
            structure: Structure::Forest,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn hidden_dim(&self) -> usize {
        2 * self.lstm_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.word_dim == 0 || self.label_dim == 0 || self.lstm_dim == 0 {
            return Err(Error::InvalidConfig(
                "all dimensions must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout {} not in [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}
