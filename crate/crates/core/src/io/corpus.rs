use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records;
use crate::error::{Error, Result};
use crate::instance::{validate_instance, RelationInstance, Sentence, Span};
use crate::vocab::LabelVocab;

/// One corpus line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub mention1: Span,
    pub mention2: Span,
    pub relation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ne_tags: Option<Vec<String>>,
}

impl From<&RelationInstance> for CorpusRecord {
    fn from(inst: &RelationInstance) -> Self {
        CorpusRecord {
            id: inst.sentence.id.clone(),
            tokens: inst.sentence.tokens.clone(),
            mention1: inst.mention1,
            mention2: inst.mention2,
            relation: inst.relation.clone(),
            ne_tags: inst.ne_tags.clone(),
        }
    }
}

impl From<CorpusRecord> for RelationInstance {
    fn from(r: CorpusRecord) -> Self {
        RelationInstance {
            sentence: Sentence::new(r.id, r.tokens),
            mention1: r.mention1,
            mention2: r.mention2,
            ne_tags: r.ne_tags,
            relation: r.relation,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LoadMode {
    /// Drop invalid records and report them.
    #[default]
    SkipInvalid,
    /// Stop at the first invalid record.
    FailFast,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusLoad {
    pub instances: Vec<RelationInstance>,
    pub skipped: Vec<SkippedRecord>,
}

pub fn corpus_from_str(text: &str, vocab: &LabelVocab, mode: LoadMode) -> Result<CorpusLoad> {
    let mut out = CorpusLoad {
        instances: Vec::new(),
        skipped: Vec::new(),
    };
    let mut seen = HashSet::new();
    for (line, raw) in records(text) {
        let checked = serde_json::from_str::<CorpusRecord>(raw)
            .map_err(|e| e.to_string())
            .and_then(|rec| {
                let inst = RelationInstance::from(rec);
                let violations = validate_instance(&inst, vocab);
                if !violations.is_empty() {
                    return Err(violations.join("; "));
                }
                if !seen.insert(inst.id().to_owned()) {
                    return Err(format!("duplicate id {}", inst.id()));
                }
                Ok(inst)
            });
        match checked {
            Ok(inst) => out.instances.push(inst),
            Err(message) if mode == LoadMode::FailFast => {
                return Err(Error::Parse { line, message })
            }
            Err(reason) => out.skipped.push(SkippedRecord { line, reason }),
        }
    }
    Ok(out)
}

pub fn load_corpus(path: &Path, vocab: &LabelVocab, mode: LoadMode) -> Result<CorpusLoad> {
    corpus_from_str(&fs::read_to_string(path)?, vocab, mode)
}

pub fn corpus_to_string(instances: &[RelationInstance]) -> Result<String> {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(&CorpusRecord::from(inst))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_corpus(instances: &[RelationInstance], path: &Path) -> Result<()> {
    fs::write(path, corpus_to_string(instances)?)?;
    Ok(())
}
