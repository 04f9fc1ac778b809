use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::{Rng, RngCore};

use super::config::ModelConfig;
use super::graph::GnnGraph;
use super::grn::{grn_backward, grn_forward, GrnTrace};
use super::lstm::{bilstm_backward, bilstm_forward, outer, BiLstmTrace};
use super::output::{mention_pool, ner_logits, softmax};
use super::params::{embed, ModelParams};
use crate::error::{Error, Result};
use crate::instance::Span;

/// Everything the encoder consumes for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderInput {
    pub token_ids: Vec<usize>,
    /// Required unless the model is text-only.
    pub graph: Option<GnnGraph>,
    pub mention1: Span,
    pub mention2: Span,
}

impl EncoderInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct ForwardTrace<'a> {
    pub input: &'a EncoderInput,
    /// Word embeddings after dropout.
    pub embeddings: Array2<f64>,
    pub embedding_mask: Option<Array2<f64>>,
    pub bilstm: BiLstmTrace,
    pub grn: Option<GrnTrace>,
    pub pooled_first: Array1<f64>,
    pub pooled_second: Array1<f64>,
    /// `[h_first; h_second]` after dropout.
    pub features: Array1<f64>,
    pub feature_mask: Option<Array1<f64>>,
    pub relation_logits: Array1<f64>,
    pub relation_probs: Array1<f64>,
    pub ner_logits: Option<Array2<f64>>,
    pub ner_probs: Option<Array2<f64>>,
}

impl ForwardTrace<'_> {
    /// `h^(T)`: graph states, or the Bi-LSTM states for text-only models.
    pub fn final_states(&self) -> &Array2<f64> {
        match &self.grn {
            Some(grn) => grn.output(),
            None => &self.bilstm.output,
        }
    }
}

/// Loss gradients w.r.t. the output logits.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputGradients {
    pub relation_logits: Array1<f64>,
    pub ner_logits: Option<Array2<f64>>,
}

fn dropout_mask(rate: f64, shape: (usize, usize), rng: &mut dyn RngCore) -> Array2<f64> {
    let keep = 1.0 - rate;
    Array2::from_shape_simple_fn(shape, || {
        if rng.random::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    })
}

/// Run the encoder on one instance. Dropout is applied only when `rng` is
/// given and the configured rate is positive.
pub fn forward<'a>(
    params: &ModelParams,
    config: &ModelConfig,
    input: &'a EncoderInput,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<ForwardTrace<'a>> {
    let n = input.len();
    if n == 0 {
        return Err(Error::EmptyInput("sentence without tokens".into()));
    }
    let vocab_size = params.word_emb.nrows();
    if let Some(&bad) = input.token_ids.iter().find(|&&t| t >= vocab_size) {
        return Err(Error::ShapeMismatch(format!(
            "token id {bad} outside vocabulary of {vocab_size}"
        )));
    }
    let graph = if config.structure.uses_graph() {
        let graph = input.graph.as_ref().ok_or_else(|| {
            Error::InvalidConfig(format!("{} model needs a graph", config.structure))
        })?;
        if graph.n() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: graph.n(),
            });
        }
        Some(graph)
    } else {
        None
    };

    let active = config.dropout > 0.0;
    let mut embeddings = embed(params, &input.token_ids);
    let embedding_mask = match rng.as_deref_mut() {
        Some(r) if active => {
            let mask = dropout_mask(config.dropout, embeddings.dim(), r);
            embeddings *= &mask;
            Some(mask)
        }
        _ => None,
    };

    let bilstm = bilstm_forward(params, &embeddings);
    let grn = graph.map(|g| grn_forward(&bilstm.output, g, params, config.steps, config.weighted));
    let states = match &grn {
        Some(grn) => grn.output(),
        None => &bilstm.output,
    };

    let pooled_first = mention_pool(states, input.mention1)?;
    let pooled_second = mention_pool(states, input.mention2)?;
    let mut features = concatenate![Axis(0), pooled_first.view(), pooled_second.view()];
    let feature_mask = match rng {
        Some(r) if active => {
            let mask = dropout_mask(config.dropout, (1, features.len()), r).remove_axis(Axis(0));
            features *= &mask;
            Some(mask)
        }
        _ => None,
    };

    let rel_logits = params.cls_w.dot(&features) + &params.cls_b;
    let relation_probs = softmax(rel_logits.view());
    let (ner_logits, ner_probs) = if params.ner_w.is_some() {
        let logits = ner_logits(params, states)?;
        let mut probs = logits.clone();
        for mut row in probs.rows_mut() {
            let p = softmax(row.view());
            row.assign(&p);
        }
        (Some(logits), Some(probs))
    } else {
        (None, None)
    };

    Ok(ForwardTrace {
        input,
        embeddings,
        embedding_mask,
        bilstm,
        grn,
        pooled_first,
        pooled_second,
        features,
        feature_mask,
        relation_logits: rel_logits,
        relation_probs,
        ner_logits,
        ner_probs,
    })
}

#[cfg(test)]
pub(crate) fn logits_undropped(params: &ModelParams, trace: &ForwardTrace<'_>) -> Array1<f64> {
    super::output::relation_logits(params, &trace.pooled_first, &trace.pooled_second)
}

/// Reverse-mode gradients of a scalar loss whose gradient w.r.t. the logits
/// is `seeds`. Edge probabilities are constants and receive no gradient.
pub fn backward(
    params: &ModelParams,
    config: &ModelConfig,
    trace: &ForwardTrace<'_>,
    seeds: &OutputGradients,
) -> Result<ModelParams> {
    let num_rel = params.cls_b.len();
    if seeds.relation_logits.len() != num_rel {
        return Err(Error::ShapeMismatch(format!(
            "relation seed of length {} for {num_rel} relations",
            seeds.relation_logits.len()
        )));
    }
    let mut grads = params.zeros_like();
    let d_h = params.grn_w_up.nrows() / 4;
    let n = trace.input.len();

    let d_rel = &seeds.relation_logits;
    grads.cls_w += &outer(d_rel, &trace.features);
    grads.cls_b += d_rel;
    let mut d_features = params.cls_w.t().dot(d_rel);
    if let Some(mask) = &trace.feature_mask {
        d_features *= mask;
    }

    let mut d_states = Array2::zeros((n, d_h));
    for (span, part) in [
        (trace.input.mention1, 0..d_h),
        (trace.input.mention2, d_h..2 * d_h),
    ] {
        let share = d_features.slice(s![part]).mapv(|v| v / span.len() as f64);
        for pos in span.positions() {
            let mut row = d_states.row_mut(pos - 1);
            row += &share;
        }
    }

    if let Some(d_ner) = &seeds.ner_logits {
        let (w, _) = match (&params.ner_w, &params.ner_b) {
            (Some(w), Some(b)) => (w, b),
            _ => return Err(Error::NerHeadDisabled),
        };
        if d_ner.dim() != (n, w.nrows()) {
            return Err(Error::ShapeMismatch(format!(
                "NER seed of shape {:?}, expected {:?}",
                d_ner.dim(),
                (n, w.nrows())
            )));
        }
        let states = trace.final_states();
        if let Some(gw) = grads.ner_w.as_mut() {
            *gw += &d_ner.t().dot(states);
        }
        if let Some(gb) = grads.ner_b.as_mut() {
            *gb += &d_ner.sum_axis(Axis(0));
        }
        d_states += &d_ner.dot(w);
    }

    let d_h0 = match (&trace.grn, &trace.input.graph) {
        (Some(grn), Some(graph)) => {
            grn_backward(grn, graph, params, config.weighted, d_states, &mut grads)
        }
        _ => d_states,
    };

    let mut d_emb = bilstm_backward(params, &trace.bilstm, &d_h0, &mut grads);
    if let Some(mask) = &trace.embedding_mask {
        d_emb *= mask;
    }
    for (row, &tok) in d_emb.rows().into_iter().zip(&trace.input.token_ids) {
        let mut target = grads.word_emb.row_mut(tok);
        target += &row;
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::config::Structure;
    use crate::nn::params::ParamShapes;
    use crate::structure::{DependencyEdge, DependencyForest};
    use crate::vocab::LabelId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(structure: Structure) -> ModelConfig {
        ModelConfig {
            word_dim: 3,
            label_dim: 2,
            lstm_dim: 2,
            steps: 2,
            dropout: 0.0,
            ner_head: true,
            structure,
            ..ModelConfig::default()
        }
    }

    fn shapes() -> ParamShapes {
        ParamShapes {
            vocab_size: 6,
            num_label_ids: 4,
            num_relations: 3,
            num_tags: 3,
        }
    }

    fn input() -> EncoderInput {
        let mut f = DependencyForest::new(4);
        f.insert(DependencyEdge::new(2, LabelId(0), 1, 0.9))
            .unwrap();
        f.insert(DependencyEdge::new(0, LabelId(1), 2, 0.8))
            .unwrap();
        f.insert(DependencyEdge::new(2, LabelId(1), 3, 0.6))
            .unwrap();
        f.insert(DependencyEdge::new(1, LabelId(1), 3, 0.3))
            .unwrap();
        f.insert(DependencyEdge::new(3, LabelId(0), 4, 0.7))
            .unwrap();
        EncoderInput {
            token_ids: vec![1, 4, 2, 5],
            graph: Some(GnnGraph::from_forest(&f)),
            mention1: Span::single(1),
            mention2: Span::new(3, 5),
        }
    }

    #[test]
    fn distributions_are_normalized() {
        let c = config(Structure::Forest);
        let p = ModelParams::init(&c, &shapes(), &mut ChaCha8Rng::seed_from_u64(2));
        let inp = input();
        let t = forward(&p, &c, &inp, None).unwrap();
        assert!((t.relation_probs.sum() - 1.0).abs() < 1e-6);
        assert_eq!(t.final_states().dim(), (4, 4));
        assert_eq!(t.grn.as_ref().unwrap().states.len(), 3);
        assert_eq!(logits_undropped(&p, &t), t.relation_logits);
    }

    #[test]
    fn text_only_ignores_the_graph() {
        let c = config(Structure::TextOnly);
        let p = ModelParams::init(&c, &shapes(), &mut ChaCha8Rng::seed_from_u64(2));
        let with = input();
        let without = EncoderInput {
            graph: None,
            ..input()
        };
        let a = forward(&p, &c, &with, None).unwrap();
        let b = forward(&p, &c, &without, None).unwrap();
        assert!(a.grn.is_none());
        assert_eq!(a.relation_logits, b.relation_logits);
        assert_eq!(a.final_states(), &a.bilstm.output);
    }

    #[test]
    fn graph_models_need_a_graph() {
        let c = config(Structure::Tree);
        let p = ModelParams::init(&c, &shapes(), &mut ChaCha8Rng::seed_from_u64(2));
        let without = EncoderInput {
            graph: None,
            ..input()
        };
        assert!(forward(&p, &c, &without, None).is_err());
    }

    #[test]
    fn zero_seed_gives_zero_gradients() {
        let c = config(Structure::Forest);
        let p = ModelParams::init(&c, &shapes(), &mut ChaCha8Rng::seed_from_u64(2));
        let inp = input();
        let t = forward(&p, &c, &inp, None).unwrap();
        let seeds = OutputGradients {
            relation_logits: Array1::zeros(3),
            ner_logits: Some(Array2::zeros((4, 3))),
        };
        let g = backward(&p, &c, &t, &seeds).unwrap();
        assert!(g
            .tensors()
            .iter()
            .all(|(_, _, t)| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn bad_seed_shape() {
        let c = config(Structure::Forest);
        let p = ModelParams::init(&c, &shapes(), &mut ChaCha8Rng::seed_from_u64(2));
        let inp = input();
        let t = forward(&p, &c, &inp, None).unwrap();
        let seeds = OutputGradients {
            relation_logits: Array1::zeros(2),
            ner_logits: None,
        };
        assert!(matches!(
            backward(&p, &c, &t, &seeds),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn dropout_masks_are_recorded() {
        let c = ModelConfig {
            dropout: 0.5,
            ..config(Structure::Forest)
        };
        let p = ModelParams::init(&c, &shapes(), &mut ChaCha8Rng::seed_from_u64(2));
        let inp = input();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = forward(&p, &c, &inp, Some(&mut rng)).unwrap();
        let mask = t.embedding_mask.as_ref().unwrap();
        assert!(mask.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(t.feature_mask.is_some());
        assert!(forward(&p, &c, &inp, None)
            .unwrap()
            .embedding_mask
            .is_none());
    }
}
