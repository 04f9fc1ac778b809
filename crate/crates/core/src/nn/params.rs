use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::config::ModelConfig;

/// Vocabulary-dependent table sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamShapes {
    pub vocab_size: usize,
    /// Forward plus reversed dependency labels.
    pub num_label_ids: usize,
    pub num_relations: usize,
    pub num_tags: usize,
}

/// Gate pre-activations are stacked row-wise: `W [x; h] + b` yields the four
/// gates as consecutive blocks of `hidden` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    /// `4 * hidden x (input + hidden)`, gate blocks `i, f, o, g`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl LstmParams {
    fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w: Array2::zeros((4 * hidden, input + hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b.len() / 4
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorKind {
    Embedding,
    Weight,
    Bias,
}

/// All trainable tensors of the encoder.
///
/// The graph layer stacks its four gates (`i, o, f, u`) row-wise, so
/// `grn_w_up` is `4 * d_h x (d_h + d_l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub word_emb: Array2<f64>,
    pub label_emb: Array2<f64>,
    /// Runs right to left.
    pub lstm_leftward: LstmParams,
    /// Runs left to right.
    pub lstm_rightward: LstmParams,
    pub grn_w_up: Array2<f64>,
    pub grn_w_down: Array2<f64>,
    pub grn_b: Array1<f64>,
    pub cls_w: Array2<f64>,
    pub cls_b: Array1<f64>,
    pub ner_w: Option<Array2<f64>>,
    pub ner_b: Option<Array1<f64>>,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig, shapes: &ParamShapes) -> Self {
        let d_h = config.hidden_dim();
        let d_l = config.label_dim;
        let (ner_w, ner_b) = if config.ner_head {
            (
                Some(Array2::zeros((shapes.num_tags, d_h))),
                Some(Array1::zeros(shapes.num_tags)),
            )
        } else {
            (None, None)
        };
        ModelParams {
            word_emb: Array2::zeros((shapes.vocab_size, config.word_dim)),
            label_emb: Array2::zeros((shapes.num_label_ids, d_l)),
            lstm_leftward: LstmParams::zeros(config.word_dim, config.lstm_dim),
            lstm_rightward: LstmParams::zeros(config.word_dim, config.lstm_dim),
            grn_w_up: Array2::zeros((4 * d_h, d_h + d_l)),
            grn_w_down: Array2::zeros((4 * d_h, d_h + d_l)),
            grn_b: Array1::zeros(4 * d_h),
            cls_w: Array2::zeros((shapes.num_relations, 2 * d_h)),
            cls_b: Array1::zeros(shapes.num_relations),
            ner_w,
            ner_b,
        }
    }

    /// Glorot-uniform weights, small uniform embeddings, zero biases.
    pub fn init(config: &ModelConfig, shapes: &ParamShapes, rng: &mut impl Rng) -> Self {
        let mut params = ModelParams::zeros(config, shapes);
        for (_, kind, mut t) in params.tensors_mut() {
            let limit = match kind {
                TensorKind::Bias => continue,
                TensorKind::Embedding => (3.0 / t.shape()[1] as f64).sqrt(),
                TensorKind::Weight => {
                    let (rows, cols) = (t.shape()[0], t.shape()[1]);
                    (6.0 / (rows + cols) as f64).sqrt()
                }
            };
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            t.iter_mut().for_each(|v| *v = dist.sample(rng));
        }
        params
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for (_, _, mut t) in out.tensors_mut() {
            t.fill(0.0);
        }
        out
    }

    pub fn tensors(&self) -> Vec<(&'static str, TensorKind, ArrayViewD<'_, f64>)> {
        use TensorKind::*;
        let mut out = vec![
            ("word_emb", Embedding, self.word_emb.view().into_dyn()),
            ("label_emb", Embedding, self.label_emb.view().into_dyn()),
            (
                "lstm_leftward.w",
                Weight,
                self.lstm_leftward.w.view().into_dyn(),
            ),
            (
                "lstm_leftward.b",
                Bias,
                self.lstm_leftward.b.view().into_dyn(),
            ),
            (
                "lstm_rightward.w",
                Weight,
                self.lstm_rightward.w.view().into_dyn(),
            ),
            (
                "lstm_rightward.b",
                Bias,
                self.lstm_rightward.b.view().into_dyn(),
            ),
            ("grn.w_up", Weight, self.grn_w_up.view().into_dyn()),
            ("grn.w_down", Weight, self.grn_w_down.view().into_dyn()),
            ("grn.b", Bias, self.grn_b.view().into_dyn()),
            ("classifier.w", Weight, self.cls_w.view().into_dyn()),
            ("classifier.b", Bias, self.cls_b.view().into_dyn()),
        ];
        if let Some(w) = &self.ner_w {
            out.push(("ner.w", Weight, w.view().into_dyn()));
        }
        if let Some(b) = &self.ner_b {
            out.push(("ner.b", Bias, b.view().into_dyn()));
        }
        out
    }

    /// Same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, TensorKind, ArrayViewMutD<'_, f64>)> {
        use TensorKind::*;
        let mut out = vec![
            ("word_emb", Embedding, self.word_emb.view_mut().into_dyn()),
            ("label_emb", Embedding, self.label_emb.view_mut().into_dyn()),
            (
                "lstm_leftward.w",
                Weight,
                self.lstm_leftward.w.view_mut().into_dyn(),
            ),
            (
                "lstm_leftward.b",
                Bias,
                self.lstm_leftward.b.view_mut().into_dyn(),
            ),
            (
                "lstm_rightward.w",
                Weight,
                self.lstm_rightward.w.view_mut().into_dyn(),
            ),
            (
                "lstm_rightward.b",
                Bias,
                self.lstm_rightward.b.view_mut().into_dyn(),
            ),
            ("grn.w_up", Weight, self.grn_w_up.view_mut().into_dyn()),
            ("grn.w_down", Weight, self.grn_w_down.view_mut().into_dyn()),
            ("grn.b", Bias, self.grn_b.view_mut().into_dyn()),
            ("classifier.w", Weight, self.cls_w.view_mut().into_dyn()),
            ("classifier.b", Bias, self.cls_b.view_mut().into_dyn()),
        ];
        if let Some(w) = &mut self.ner_w {
            out.push(("ner.w", Weight, w.view_mut().into_dyn()));
        }
        if let Some(b) = &mut self.ner_b {
            out.push(("ner.b", Bias, b.view_mut().into_dyn()));
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, _, t)| t.len()).sum()
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &ModelParams) {
        for ((_, _, mut a), (_, _, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a += &b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, _, mut t) in self.tensors_mut() {
            t.mapv_inplace(|v| v * factor);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, _, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// Embedding rows of `token_ids`, one row per token.
pub fn embed(params: &ModelParams, token_ids: &[usize]) -> Array2<f64> {
    params.word_emb.select(ndarray::Axis(0), token_ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shapes() -> ParamShapes {
        ParamShapes {
            vocab_size: 5,
            num_label_ids: 6,
            num_relations: 3,
            num_tags: 4,
        }
    }

    #[test]
    fn embed_rows() {
        let config = ModelConfig {
            word_dim: 3,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&config, &shapes(), &mut ChaCha8Rng::seed_from_u64(1));
        let e = embed(&params, &[2, 0, 2]);
        assert_eq!(e.row(0), e.row(2));
        assert_eq!(e.row(1), params.word_emb.row(0));
        assert_eq!(embed(&params, &[3]).row(0), params.word_emb.row(3));
    }

    #[test]
    fn parameter_count_matches_shapes() {
        let config = ModelConfig {
            word_dim: 3,
            label_dim: 2,
            lstm_dim: 4,
            ner_head: true,
            ..ModelConfig::default()
        };
        let p = ModelParams::zeros(&config, &shapes());
        let d_h = 8;
        let expected = 5 * 3
            + 6 * 2
            + 2 * (16 * 7 + 16)
            + 2 * (4 * d_h * (d_h + 2))
            + 4 * d_h
            + 3 * 2 * d_h
            + 3
            + 4 * d_h
            + 4;
        assert_eq!(p.parameter_count(), expected);
    }

    #[test]
    fn init_is_seeded() {
        let config = ModelConfig {
            word_dim: 3,
            label_dim: 2,
            lstm_dim: 2,
            ..ModelConfig::default()
        };
        let a = ModelParams::init(&config, &shapes(), &mut ChaCha8Rng::seed_from_u64(9));
        let b = ModelParams::init(&config, &shapes(), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert!(a.grn_b.iter().all(|&v| v == 0.0));
        assert!(a.cls_w.iter().any(|&v| v != 0.0));
    }
}
