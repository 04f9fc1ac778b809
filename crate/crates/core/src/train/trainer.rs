use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, OptimizerState};
use super::loss::instance_gradient;
use super::metrics::{evaluate_predictions, EvalReport};
use crate::error::{Error, Result};
use crate::instance::RelationInstance;
use crate::nn::{EncoderInput, Model, ModelConfig, Structure};
use crate::seed::stream;
use crate::structure::DependencyForest;
use crate::vocab::{LabelVocab, WordVocab};

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub epochs: usize,
    pub use_ner: bool,
    /// Drives shuffling and dropout masks.
    pub seed: u64,
    /// Stop after this many epochs without a dev F1 improvement.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            batch_size: 20,
            l2: 1e-8,
            epochs: 100,
            use_ner: false,
            seed: 0,
            patience: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be finite and non-negative",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "l2 coefficient {} must be non-negative",
                self.l2
            )));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            l2: self.l2,
            ..AdamConfig::default()
        }
    }
}

/// A freshly initialized model whose parameters derive from `config.seed`.
pub fn init_model(config: ModelConfig, vocab: LabelVocab, words: WordVocab) -> Result<Model> {
    let seed = config.seed;
    Model::new(config, vocab, words, &mut stream(seed, &[INIT_STREAM]))
}

/// An encoded instance with its gold relation and tags.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub input: EncoderInput,
    pub relation: usize,
    pub tags: Option<Vec<usize>>,
}

/// Encode instances for `model`; `structures[i]` belongs to `instances[i]`.
pub fn prepare_examples(
    model: &Model,
    instances: &[RelationInstance],
    structures: Option<&[DependencyForest]>,
) -> Result<Vec<Example>> {
    if let Some(s) = structures {
        if s.len() != instances.len() {
            return Err(Error::Misaligned(format!(
                "{} structures for {} instances",
                s.len(),
                instances.len()
            )));
        }
    }
    instances
        .iter()
        .enumerate()
        .map(|(idx, inst)| {
            let forest = structures.map(|s| &s[idx]);
            let input = model.encode(inst, forest)?;
            let relation = model.vocab.relation_index(&inst.relation)?;
            let tags = match &inst.ne_tags {
                Some(tags) => Some(
                    tags.iter()
                        .map(|t| model.vocab.tag_index(t))
                        .collect::<Result<Vec<_>>>()?,
                ),
                None => None,
            };
            Ok(Example {
                input,
                relation,
                tags,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev: EvalReport,
    pub wall_secs: f64,
}

pub const METRIC_LOG_HEADER: &str = "epoch\ttrain_loss\tdev_p\tdev_r\tdev_f1";

/// Tab-separated metric log. Wall-clock time is left out so that the log
/// is a pure function of data, configuration and seed.
pub fn metric_log(records: &[EpochRecord]) -> String {
    let mut out = String::from(METRIC_LOG_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{}\t{:?}\t{:?}\t{:?}\t{:?}",
            r.epoch, r.train_loss, r.dev.precision, r.dev.recall, r.dev.f1
        )
        .expect("writing to a string");
    }
    out
}

/// `epoch<TAB>wall_secs` lines.
pub fn timing_log(records: &[EpochRecord]) -> String {
    let mut out = String::from("epoch\twall_secs\n");
    for r in records {
        writeln!(out, "{}\t{:.3}", r.epoch, r.wall_secs).expect("writing to a string");
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best dev F1.
    pub best: Model,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

/// Tensors the optimizer must leave untouched for this model and config.
pub fn frozen_tensors(model: &Model, config: &TrainConfig) -> Vec<&'static str> {
    let mut frozen = Vec::new();
    if model.config.freeze_embeddings {
        frozen.push("word_emb");
    }
    if !config.use_ner {
        frozen.extend(["ner.w", "ner.b"]);
    }
    if model.config.structure == Structure::TextOnly {
        frozen.extend(["label_emb", "grn.w_up", "grn.w_down", "grn.b"]);
    }
    frozen
}

/// Argmax relation and its probability for every example, in order.
pub fn predict_all(model: &Model, examples: &[Example]) -> Result<Vec<(usize, f64)>> {
    examples
        .par_iter()
        .map(|ex| model.predict(&ex.input))
        .collect()
}

pub fn evaluate(
    model: &Model,
    examples: &[Example],
    external_gold: Option<usize>,
) -> Result<EvalReport> {
    let predicted: Vec<usize> = predict_all(model, examples)?
        .into_iter()
        .map(|(r, _)| r)
        .collect();
    let gold: Vec<usize> = examples.iter().map(|ex| ex.relation).collect();
    evaluate_predictions(&model.vocab, &gold, &predicted, external_gold)
}

/// Minibatch Adam on the mean per-instance loss, keeping the best-dev model.
///
/// Gradients of a batch are computed in parallel and reduced in batch order,
/// so results do not depend on the number of worker threads.
pub fn train(
    mut model: Model,
    train_set: &[Example],
    dev_set: &[Example],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    model.config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("no training instances".into()));
    }
    let frozen = frozen_tensors(&model, config);
    let adam = config.adam();
    let mut state = OptimizerState::new(&model.params);
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Model)> = None;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut stream(config.seed, &[SHUFFLE_STREAM, epoch as u64]));
        let mut losses = vec![0.0; train_set.len()];

        for batch in order.chunks(config.batch_size) {
            let params = &model.params;
            let model_config = &model.config;
            let results: Vec<(f64, crate::nn::ModelParams)> = batch
                .par_iter()
                .map(|&idx| {
                    let ex = &train_set[idx];
                    let mut rng = stream(config.seed, &[DROPOUT_STREAM, epoch as u64, idx as u64]);
                    instance_gradient(
                        params,
                        model_config,
                        &ex.input,
                        ex.relation,
                        ex.tags.as_deref(),
                        config.use_ner,
                        Some(&mut rng as &mut dyn RngCore),
                    )
                })
                .collect::<Result<_>>()?;
            let mut total = model.params.zeros_like();
            for (&idx, (loss, grads)) in batch.iter().zip(&results) {
                losses[idx] = *loss;
                total.add_assign(grads);
            }
            total.scale(1.0 / batch.len() as f64);
            adam_step(&mut model.params, &total, &mut state, &adam, &frozen)?;
        }

        let train_loss = losses.iter().sum::<f64>() / losses.len() as f64;
        let dev = evaluate(&model, dev_set, None)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            dev,
            wall_secs: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        let f1 = record.dev.f1;
        log.push(record);

        let improved = best.as_ref().is_none_or(|(best_f1, _, _)| f1 > *best_f1);
        if improved {
            best = Some((f1, epoch, model.clone()));
        }
        let best_epoch = best.as_ref().map_or(epoch, |(_, e, _)| *e);
        if !dev_set.is_empty() && epoch - best_epoch >= config.patience {
            break;
        }
    }

    let (best_epoch, best) = match best {
        // An empty dev set gives no signal; keep the final parameters.
        Some(_) if dev_set.is_empty() => (log.len(), model),
        Some((_, epoch, m)) => (epoch, m),
        None => (0, model),
    };
    Ok(TrainOutcome {
        best,
        best_epoch,
        log,
    })
}
