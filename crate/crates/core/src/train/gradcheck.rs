//! Central finite-difference verification of the analytic gradients.

use rand::Rng;
use serde::Serialize;

use super::loss::{instance_gradient, instance_loss};
use crate::arcs::ArcProbabilities;
use crate::error::Result;
use crate::forest::{decode_1best, edgewise_forest};
use crate::instance::Span;
use crate::nn::{EncoderInput, GnnGraph, ModelConfig, ModelParams, ParamShapes, Structure};
use crate::seed::stream;
use crate::structure::DependencyForest;
use crate::vocab::LabelId;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Denominator floor of the relative error, so that gradients that are zero
/// up to rounding do not produce spurious large ratios.
pub const DEFAULT_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `name[index]` of the worst element.
    pub worst: String,
    pub checked: usize,
}

fn element_mut(params: &mut ModelParams, tensor: usize, idx: usize, f: impl FnOnce(&mut f64)) {
    let mut views = params.tensors_mut();
    let view = &mut views[tensor].2;
    f(view
        .as_slice_mut()
        .expect("standard layout")
        .get_mut(idx)
        .expect("index in range"));
}

/// Compare every parameter gradient of one instance's total loss with a
/// central difference of step `step`. Dropout is off.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check(
    params: &ModelParams,
    config: &ModelConfig,
    input: &EncoderInput,
    relation: usize,
    tags: Option<&[usize]>,
    use_ner: bool,
    step: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    let (_, analytic) = instance_gradient(params, config, input, relation, tags, use_ner, None)?;
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    for (tensor, (name, _, grad)) in analytic.tensors().into_iter().enumerate() {
        let grad = grad.as_slice().expect("standard layout");
        for (idx, &a) in grad.iter().enumerate() {
            let mut original = 0.0;
            element_mut(&mut probe, tensor, idx, |v| {
                original = *v;
                *v = original + step;
            });
            let up = instance_loss(&probe, config, input, relation, tags, use_ner)?;
            element_mut(&mut probe, tensor, idx, |v| *v = original - step);
            let down = instance_loss(&probe, config, input, relation, tags, use_ner)?;
            element_mut(&mut probe, tensor, idx, |v| *v = original);
            let numeric = (up - down) / (2.0 * step);
            let err = relative_error(a, numeric, floor);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_empty() {
                report.max_rel_error = err;
                report.worst = format!("{name}[{idx}]");
            }
        }
    }
    Ok(report)
}

/// One model variant of the standard gradient-check grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GradCheckCase {
    pub structure: Structure,
    pub weighted: bool,
    pub ner: bool,
}

impl GradCheckCase {
    /// `{textonly, tree, forest} x {weighted, unweighted} x {NER on, off}`.
    pub fn grid() -> Vec<GradCheckCase> {
        let mut out = Vec::new();
        for structure in [Structure::TextOnly, Structure::Tree, Structure::Forest] {
            for weighted in [true, false] {
                for ner in [true, false] {
                    out.push(GradCheckCase {
                        structure,
                        weighted,
                        ner,
                    });
                }
            }
        }
        out
    }

    pub fn name(&self) -> String {
        format!(
            "{}/{}/{}",
            self.structure,
            if self.weighted {
                "weighted"
            } else {
                "unweighted"
            },
            if self.ner { "ner" } else { "no-ner" }
        )
    }
}

/// Random arc distribution over all `(head, label)` pairs of every modifier.
fn random_arcs(n: usize, labels: u32, rng: &mut impl Rng) -> ArcProbabilities {
    let mut probs = ArcProbabilities::new("gradcheck", n);
    for m in 1..=n {
        let cands: Vec<(usize, u32, f64)> = (0..=n)
            .filter(|&h| h != m)
            .flat_map(|h| (0..labels).map(move |l| (h, l)))
            .map(|(h, l)| (h, l, rng.random_range(0.1..1.0)))
            .collect();
        let total: f64 = cands.iter().map(|c| c.2).sum();
        for (h, l, w) in cands {
            probs
                .insert(m, h, LabelId(l), w / total)
                .expect("valid random arc");
        }
    }
    probs
}

/// Run the grid on seeded random instances with word and label dims 3,
/// LSTM dim 4, five tokens and two graph steps.
pub fn gradcheck_suite(seed: u64) -> Result<Vec<(GradCheckCase, GradCheckReport)>> {
    const N: usize = 5;
    const LABELS: u32 = 3;
    let shapes = ParamShapes {
        vocab_size: 7,
        num_label_ids: 2 * LABELS as usize,
        num_relations: 4,
        num_tags: 3,
    };
    let mut out = Vec::new();
    for (case_idx, case) in GradCheckCase::grid().into_iter().enumerate() {
        let mut rng = stream(seed, &[case_idx as u64]);
        let config = ModelConfig {
            word_dim: 3,
            label_dim: 3,
            lstm_dim: 4,
            steps: 2,
            dropout: 0.0,
            weighted: case.weighted,
            ner_head: case.ner,
            freeze_embeddings: false,
            structure: case.structure,
            seed,
        };
        let mut params = ModelParams::init(&config, &shapes, &mut rng);
        for (_, _, mut t) in params.tensors_mut() {
            // Non-zero biases exercise every gate path.
            t.iter_mut().for_each(|v| *v += rng.random_range(-0.1..0.1));
        }
        let arcs = random_arcs(N, LABELS, &mut rng);
        let graph = match case.structure {
            Structure::TextOnly => None,
            Structure::Tree => Some(GnnGraph::from_tree(&decode_1best(&arcs)?)),
            Structure::Forest => {
                let mut forest: DependencyForest = edgewise_forest(&arcs, 0.05);
                // Make sure every word takes part in message passing.
                for e in decode_1best(&arcs)?.edges() {
                    forest.insert(*e)?;
                }
                Some(GnnGraph::from_forest(&forest))
            }
        };
        let input = EncoderInput {
            token_ids: (0..N)
                .map(|_| rng.random_range(0..shapes.vocab_size))
                .collect(),
            graph,
            mention1: Span::new(1, 3),
            mention2: Span::single(4),
        };
        let relation = rng.random_range(0..shapes.num_relations);
        let tags: Vec<usize> = (0..N)
            .map(|_| rng.random_range(0..shapes.num_tags))
            .collect();
        let report = gradient_check(
            &params,
            &config,
            &input,
            relation,
            Some(&tags),
            case.ner,
            DEFAULT_STEP,
            DEFAULT_FLOOR,
        )?;
        out.push((case, report));
    }
    Ok(out)
}
