use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::nn::{
    backward, forward, log_softmax, softmax, EncoderInput, ModelConfig, ModelParams,
    OutputGradients,
};

/// `-log_softmax(logits)[gold]`.
pub fn relation_loss(logits: ArrayView1<'_, f64>, gold: usize) -> Result<f64> {
    if gold >= logits.len() {
        return Err(Error::UnknownRelation(format!(
            "index {gold} of {}",
            logits.len()
        )));
    }
    Ok(-log_softmax(logits)[gold])
}

/// Loss and its gradient w.r.t. the logits (`softmax - onehot`).
pub fn relation_loss_grad(logits: ArrayView1<'_, f64>, gold: usize) -> Result<(f64, Array1<f64>)> {
    let loss = relation_loss(logits, gold)?;
    let mut grad = softmax(logits);
    grad[gold] -= 1.0;
    Ok((loss, grad))
}

/// Mean over tokens of `-log_softmax(row)[tag]`.
pub fn ner_loss(logits: ArrayView2<'_, f64>, gold: &[usize]) -> Result<f64> {
    Ok(ner_loss_grad(logits, gold)?.0)
}

pub fn ner_loss_grad(logits: ArrayView2<'_, f64>, gold: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (n, tags) = logits.dim();
    if gold.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: gold.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput("no tokens to tag".into()));
    }
    let mut grad = Array2::zeros((n, tags));
    let mut total = 0.0;
    for (i, &tag) in gold.iter().enumerate() {
        if tag >= tags {
            return Err(Error::UnknownTag(format!("index {tag} of {tags}")));
        }
        let row = logits.row(i);
        total -= log_softmax(row)[tag];
        let mut g = softmax(row);
        g[tag] -= 1.0;
        grad.row_mut(i).assign(&(g / n as f64));
    }
    Ok((total / n as f64, grad))
}

pub fn total_loss(relation: f64, ner: f64, use_ner: bool) -> f64 {
    if use_ner {
        relation + ner
    } else {
        relation
    }
}

/// Total loss of one instance and the gradient of every parameter.
pub fn instance_gradient(
    params: &ModelParams,
    config: &ModelConfig,
    input: &EncoderInput,
    relation: usize,
    tags: Option<&[usize]>,
    use_ner: bool,
    rng: Option<&mut dyn RngCore>,
) -> Result<(f64, ModelParams)> {
    let trace = forward(params, config, input, rng)?;
    let (l_rel, d_rel) = relation_loss_grad(trace.relation_logits.view(), relation)?;
    let (l_ner, d_ner) = if use_ner {
        let logits = trace.ner_logits.as_ref().ok_or(Error::NerHeadDisabled)?;
        let tags = tags
            .ok_or_else(|| Error::Misaligned("instance without NE tags in NER training".into()))?;
        let (l, g) = ner_loss_grad(logits.view(), tags)?;
        (l, Some(g))
    } else {
        (0.0, None)
    };
    let seeds = OutputGradients {
        relation_logits: d_rel,
        ner_logits: d_ner,
    };
    let grads = backward(params, config, &trace, &seeds)?;
    Ok((total_loss(l_rel, l_ner, use_ner), grads))
}

/// Total loss of one instance without dropout.
pub fn instance_loss(
    params: &ModelParams,
    config: &ModelConfig,
    input: &EncoderInput,
    relation: usize,
    tags: Option<&[usize]>,
    use_ner: bool,
) -> Result<f64> {
    let trace = forward(params, config, input, None)?;
    let l_rel = relation_loss(trace.relation_logits.view(), relation)?;
    let l_ner = if use_ner {
        let logits = trace.ner_logits.as_ref().ok_or(Error::NerHeadDisabled)?;
        let tags = tags
            .ok_or_else(|| Error::Misaligned("instance without NE tags in NER training".into()))?;
        ner_loss(logits.view(), tags)?
    } else {
        0.0
    };
    Ok(total_loss(l_rel, l_ner, use_ner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn relation_loss_values() {
        let uniform = Array1::zeros(6);
        assert!((relation_loss(uniform.view(), 2).unwrap() - 6f64.ln()).abs() < 1e-12);
        let sure = array![0.0, 800.0];
        assert_eq!(relation_loss(sure.view(), 1).unwrap(), 0.0);
        let half = array![0.0, 0.0];
        assert!((relation_loss(half.view(), 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(relation_loss(half.view(), 2).is_err());
    }

    #[test]
    fn relation_loss_is_stable_for_large_logits() {
        let l = array![1000.0, -1000.0];
        let loss = relation_loss(l.view(), 1).unwrap();
        assert!(loss.is_finite());
        assert!((loss - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn ner_loss_values() {
        let uniform = Array2::zeros((3, 5));
        assert!((ner_loss(uniform.view(), &[0, 4, 2]).unwrap() - 5f64.ln()).abs() < 1e-12);
        let perfect = array![[900.0, 0.0], [0.0, 900.0]];
        assert_eq!(ner_loss(perfect.view(), &[0, 1]).unwrap(), 0.0);
        let mixed = array![[0.0, 0.0], [900.0, 0.0]];
        assert!((ner_loss(mixed.view(), &[1, 0]).unwrap() - 2f64.ln() / 2.0).abs() < 1e-15);
        assert!(ner_loss(mixed.view(), &[1, 2]).is_err());
        assert!(ner_loss(mixed.view(), &[1]).is_err());
    }

    #[test]
    fn total_loss_modes() {
        assert_eq!(total_loss(1.0, 0.5, true), 1.5);
        assert_eq!(total_loss(1.0, 0.5, false), 1.0);
        assert_eq!(total_loss(0.0, 0.0, true), 0.0);
    }

    #[test]
    fn gradient_of_softmax_cross_entropy() {
        let l = array![0.3, -1.2, 0.8];
        let (_, g) = relation_loss_grad(l.view(), 2).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut up = l.clone();
            up[k] += h;
            let mut down = l.clone();
            down[k] -= h;
            let fd = (relation_loss(up.view(), 2).unwrap()
                - relation_loss(down.view(), 2).unwrap())
                / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}
