use ndarray::{concatenate, s, Array1, Array2, ArrayView1, Axis};

use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::instance::Span;

pub fn softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exp = logits.mapv(|v| (v - max).exp());
    let total = exp.sum();
    exp / total
}

pub fn log_softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = logits.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
    logits.mapv(|v| v - lse)
}

/// Mean of the rows of `states` (0-based word rows) covered by the 1-based
/// `span`.
pub fn mention_pool(states: &Array2<f64>, span: Span) -> Result<Array1<f64>> {
    span.check(states.nrows())?;
    let rows = states.slice(s![span.start - 1..span.end - 1, ..]);
    Ok(rows.sum_axis(Axis(0)) / span.len() as f64)
}

pub fn relation_logits(
    params: &ModelParams,
    h_first: &Array1<f64>,
    h_second: &Array1<f64>,
) -> Array1<f64> {
    let x = concatenate![Axis(0), h_first.view(), h_second.view()];
    params.cls_w.dot(&x) + &params.cls_b
}

pub fn relation_distribution(
    params: &ModelParams,
    h_first: &Array1<f64>,
    h_second: &Array1<f64>,
) -> Array1<f64> {
    softmax(relation_logits(params, h_first, h_second).view())
}

/// Per-token tag logits, `N x |tags|`.
pub fn ner_logits(params: &ModelParams, states: &Array2<f64>) -> Result<Array2<f64>> {
    match (&params.ner_w, &params.ner_b) {
        (Some(w), Some(b)) => Ok(states.dot(&w.t()) + b),
        _ => Err(Error::NerHeadDisabled),
    }
}

pub fn ner_distributions(params: &ModelParams, states: &Array2<f64>) -> Result<Array2<f64>> {
    let mut logits = ner_logits(params, states)?;
    for mut row in logits.rows_mut() {
        let p = softmax(row.view());
        row.assign(&p);
    }
    Ok(logits)
}
