use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records;
use crate::arcs::ArcProbabilities;
use crate::error::{Error, Result};
use crate::vocab::LabelVocab;

/// Arcs below this probability are not written.
pub const STORAGE_FLOOR: f64 = 1e-4;

/// One arc-probability line; arcs are `(modifier, head, label, prob)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcRecord {
    pub id: String,
    pub n: usize,
    pub arcs: Vec<(usize, usize, String, f64)>,
}

fn record_to_probs(rec: ArcRecord, vocab: &LabelVocab) -> Result<ArcProbabilities> {
    let mut probs = ArcProbabilities::new(rec.id, rec.n);
    for (m, h, label, p) in rec.arcs {
        let id = vocab.forward_label_id(&label)?;
        probs.insert(m, h, id, p).map_err(|e| match e {
            Error::DuplicateArc { modifier, head, .. } => Error::DuplicateArc {
                modifier,
                head,
                label,
            },
            other => other,
        })?;
    }
    Ok(probs)
}

pub fn arc_probs_from_str(text: &str, vocab: &LabelVocab) -> Result<Vec<ArcProbabilities>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in records(text) {
        let rec: ArcRecord = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate id {}", rec.id),
            });
        }
        let probs = record_to_probs(rec, vocab).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(probs);
    }
    Ok(out)
}

pub fn load_arc_probs(path: &Path, vocab: &LabelVocab) -> Result<Vec<ArcProbabilities>> {
    arc_probs_from_str(&fs::read_to_string(path)?, vocab)
}

/// Serialize in canonical `(modifier, head, label)` order, dropping arcs
/// below `floor`.
pub fn arc_probs_to_string(
    probs: &[ArcProbabilities],
    vocab: &LabelVocab,
    floor: f64,
) -> Result<String> {
    let mut out = String::new();
    for p in probs {
        let rec = ArcRecord {
            id: p.id().to_owned(),
            n: p.n(),
            arcs: p
                .iter()
                .filter(|(_, e)| e.prob >= floor)
                .map(|(m, e)| (m, e.head, vocab.label_name(e.label).to_owned(), e.prob))
                .collect(),
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_arc_probs(
    probs: &[ArcProbabilities],
    vocab: &LabelVocab,
    floor: f64,
    path: &Path,
) -> Result<()> {
    fs::write(path, arc_probs_to_string(probs, vocab, floor)?)?;
    Ok(())
}
