use serde::Serialize;

use crate::error::{Error, Result};
use crate::vocab::LabelVocab;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationCounts {
    pub relation: String,
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

/// Micro precision / recall / F1 over the regular (non-None) relations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: usize,
    pub predicted: usize,
    /// Recall denominator.
    pub gold: usize,
    pub per_relation: Vec<RelationCounts>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Score predicted relation indices against gold ones.
///
/// With `external_gold` the recall denominator is that count instead of the
/// number of regular gold relations among `gold`.
pub fn evaluate_predictions(
    vocab: &LabelVocab,
    gold: &[usize],
    predicted: &[usize],
    external_gold: Option<usize>,
) -> Result<EvalReport> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: gold.len(),
            found: predicted.len(),
        });
    }
    let none = vocab.none_relation();
    let num = vocab.relations().len();
    if let Some(&bad) = gold.iter().chain(predicted).find(|&&r| r >= num) {
        return Err(Error::UnknownRelation(format!("index {bad}")));
    }
    let mut per_relation: Vec<RelationCounts> = vocab
        .relations()
        .iter()
        .map(|r| RelationCounts {
            relation: r.clone(),
            gold: 0,
            predicted: 0,
            correct: 0,
        })
        .collect();
    for (&g, &p) in gold.iter().zip(predicted) {
        per_relation[g].gold += 1;
        per_relation[p].predicted += 1;
        if g == p {
            per_relation[g].correct += 1;
        }
    }
    let regular = |f: fn(&RelationCounts) -> usize| -> usize {
        per_relation
            .iter()
            .enumerate()
            .filter(|(idx, _)| *idx != none)
            .map(|(_, c)| f(c))
            .sum()
    };
    let correct = regular(|c| c.correct);
    let predicted_count = regular(|c| c.predicted);
    let gold_count = external_gold.unwrap_or_else(|| regular(|c| c.gold));
    if gold_count < correct {
        return Err(Error::InvalidConfig(format!(
            "external gold count {gold_count} is below the {correct} correct predictions"
        )));
    }
    let precision = ratio(correct, predicted_count);
    let recall = ratio(correct, gold_count);
    Ok(EvalReport {
        precision,
        recall,
        f1: f1_score(precision, recall),
        correct,
        predicted: predicted_count,
        gold: gold_count,
        per_relation,
    })
}
