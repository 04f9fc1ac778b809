use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::graph::GnnGraph;
use super::model::{forward, EncoderInput};
use super::params::{ModelParams, ParamShapes};
use crate::error::{Error, Result};
use crate::instance::RelationInstance;
use crate::structure::DependencyForest;
use crate::vocab::{LabelVocab, WordVocab};

pub const CHECKPOINT_FORMAT: &str = "depforest-checkpoint/1";

/// A tensor as stored on disk: dimensions plus row-major values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// On-disk form of a [`Model`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: ModelConfig,
    pub vocab: LabelVocab,
    pub label_vocab_hash: String,
    pub word_vocab_hash: String,
    pub words: Vec<String>,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

/// Configuration, vocabularies and parameters of a trained encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: LabelVocab,
    pub words: WordVocab,
    pub params: ModelParams,
}

impl Model {
    pub fn new(
        config: ModelConfig,
        vocab: LabelVocab,
        words: WordVocab,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        config.validate()?;
        let shapes = shapes_for(&vocab, &words);
        let params = ModelParams::init(&config, &shapes, rng);
        Ok(Model {
            config,
            vocab,
            words,
            params,
        })
    }

    pub fn shapes(&self) -> ParamShapes {
        shapes_for(&self.vocab, &self.words)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let tensors = self
            .params
            .tensors()
            .into_iter()
            .map(|(name, _, t)| NamedTensor {
                name: name.to_owned(),
                shape: t.shape().to_vec(),
                values: t.iter().copied().collect(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            label_vocab_hash: self.vocab.fingerprint(),
            word_vocab_hash: self.words.fingerprint(),
            words: self.words.words().to_vec(),
            tensors,
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint format {}",
                ck.format
            )));
        }
        ck.config.validate()?;
        let words = WordVocab::new(ck.words)?;
        if words.fingerprint() != ck.word_vocab_hash {
            return Err(Error::VocabMismatch(
                "word vocabulary hash does not match its contents".into(),
            ));
        }
        if ck.vocab.fingerprint() != ck.label_vocab_hash {
            return Err(Error::VocabMismatch(
                "label vocabulary hash does not match its contents".into(),
            ));
        }
        let shapes = shapes_for(&ck.vocab, &words);
        let mut params = ModelParams::zeros(&ck.config, &shapes);
        {
            let mut slots = params.tensors_mut();
            if slots.len() != ck.tensors.len() {
                return Err(Error::ShapeMismatch(format!(
                    "checkpoint has {} tensors, model expects {}",
                    ck.tensors.len(),
                    slots.len()
                )));
            }
            for ((name, _, slot), stored) in slots.iter_mut().zip(&ck.tensors) {
                if *name != stored.name
                    || slot.shape() != stored.shape.as_slice()
                    || slot.len() != stored.values.len()
                {
                    return Err(Error::ShapeMismatch(format!(
                        "tensor {} {:?} where {} {:?} was expected",
                        stored.name,
                        stored.shape,
                        name,
                        slot.shape()
                    )));
                }
                for (dst, src) in slot.iter_mut().zip(&stored.values) {
                    *dst = *src;
                }
            }
        }
        if !params.all_finite() {
            return Err(Error::InvalidConfig(
                "checkpoint contains non-finite values".into(),
            ));
        }
        Ok(Model {
            config: ck.config,
            vocab: ck.vocab,
            words,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Model::from_checkpoint(Checkpoint::load(path)?)
    }

    /// Fail unless `vocab` is the label vocabulary the model was built with.
    pub fn check_vocab(&self, vocab: &LabelVocab) -> Result<()> {
        if vocab.fingerprint() != self.vocab.fingerprint() {
            return Err(Error::VocabMismatch(format!(
                "data vocabulary {} differs from checkpoint vocabulary {}",
                &vocab.fingerprint()[..12],
                &self.vocab.fingerprint()[..12]
            )));
        }
        Ok(())
    }

    /// Map tokens to embedding rows and attach the graph for structured models.
    pub fn encode(
        &self,
        inst: &RelationInstance,
        forest: Option<&DependencyForest>,
    ) -> Result<EncoderInput> {
        let n = inst.sentence.len();
        inst.mention1.check(n)?;
        inst.mention2.check(n)?;
        let graph = if self.config.structure.uses_graph() {
            let forest = forest.ok_or_else(|| {
                Error::Misaligned(format!(
                    "{} model needs a structure for {}",
                    self.config.structure,
                    inst.id()
                ))
            })?;
            if forest.n() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: forest.n(),
                });
            }
            Some(GnnGraph::from_forest(forest))
        } else {
            None
        };
        Ok(EncoderInput {
            token_ids: inst
                .sentence
                .tokens
                .iter()
                .map(|t| self.words.lookup(t))
                .collect(),
            graph,
            mention1: inst.mention1,
            mention2: inst.mention2,
        })
    }

    /// Relation distribution without dropout.
    pub fn relation_probs(&self, input: &EncoderInput) -> Result<Array1<f64>> {
        Ok(forward(&self.params, &self.config, input, None)?.relation_probs)
    }

    /// Argmax relation index and its probability; the first maximum wins.
    pub fn predict(&self, input: &EncoderInput) -> Result<(usize, f64)> {
        let probs = self.relation_probs(input)?;
        let mut best = 0;
        for (idx, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = idx;
            }
        }
        Ok((best, probs[best]))
    }
}

fn shapes_for(vocab: &LabelVocab, words: &WordVocab) -> ParamShapes {
    ParamShapes {
        vocab_size: words.len(),
        num_label_ids: vocab.num_label_ids(),
        num_relations: vocab.relations().len(),
        num_tags: vocab.ne_tags().len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::config::Structure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab() -> LabelVocab {
        LabelVocab::new(
            vec!["nsubj".into(), "obj".into()],
            vec!["None".into(), "R1".into()],
            vec!["O".into(), "B-X".into(), "I-X".into()],
        )
        .unwrap()
    }

    fn model(structure: Structure) -> Model {
        let config = ModelConfig {
            word_dim: 3,
            label_dim: 2,
            lstm_dim: 2,
            ner_head: true,
            structure,
            ..ModelConfig::default()
        };
        let words = WordVocab::from_tokens(["a", "b", "c"]);
        Model::new(config, vocab(), words, &mut ChaCha8Rng::seed_from_u64(8)).unwrap()
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = model(Structure::Forest);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let loaded = Model::load(&path).unwrap();
        assert_eq!(loaded, m);
        let again = dir.path().join("m2.json");
        loaded.save(&again).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }

    #[test]
    fn tampered_checkpoints_are_rejected() {
        let m = model(Structure::Tree);
        let mut ck = m.to_checkpoint();
        ck.words.push("zzz".into());
        assert!(matches!(
            Model::from_checkpoint(ck),
            Err(Error::VocabMismatch(_))
        ));
        let mut ck = m.to_checkpoint();
        ck.tensors[3].shape = vec![1];
        assert!(matches!(
            Model::from_checkpoint(ck),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn vocab_check() {
        let m = model(Structure::Forest);
        assert!(m.check_vocab(&vocab()).is_ok());
        let other =
            LabelVocab::new(vec!["nsubj".into()], vec!["None".into()], vec!["O".into()]).unwrap();
        assert!(matches!(
            m.check_vocab(&other),
            Err(Error::VocabMismatch(_))
        ));
    }

    #[test]
    fn parameter_count_independent_of_structure() {
        assert_eq!(
            model(Structure::Forest).params.parameter_count(),
            model(Structure::Tree).params.parameter_count()
        );
    }
}
