//! Sentences, mention spans and relation instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{bio_type, LabelVocab, OUTSIDE_TAG};

/// A tokenized sentence. Tokens occupy positions `1..=n`; position 0 is the
/// implicit ROOT.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Self {
        Sentence {
            id: id.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at 1-based position `pos`.
    pub fn token(&self, pos: usize) -> &str {
        &self.tokens[pos - 1]
    }
}

/// Half-open, 1-based token interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn single(pos: usize) -> Self {
        Span {
            start: pos,
            end: pos + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn positions(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.start <= pos && pos < self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Non-empty and inside a sentence of `n` tokens.
    pub fn check(&self, n: usize) -> Result<()> {
        if self.start >= 1 && self.start < self.end && self.end <= n + 1 {
            Ok(())
        } else {
            Err(Error::InvalidSpan {
                start: self.start,
                end: self.end,
                n,
            })
        }
    }
}

/// A sentence with two target mentions and its gold relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationInstance {
    pub sentence: Sentence,
    pub mention1: Span,
    pub mention2: Span,
    pub ne_tags: Option<Vec<String>>,
    pub relation: String,
}

impl RelationInstance {
    pub fn id(&self) -> &str {
        &self.sentence.id
    }
}

/// All invariant violations of `inst`; empty when the instance is well formed.
pub fn validate_instance(inst: &RelationInstance, vocab: &LabelVocab) -> Vec<String> {
    let mut violations = Vec::new();
    let n = inst.sentence.len();
    if n == 0 {
        violations.push("sentence has no tokens".to_owned());
    }

    for (name, span) in [("mention1", inst.mention1), ("mention2", inst.mention2)] {
        if span.start == span.end {
            violations.push(format!("empty mention span {name}"));
        } else if span.check(n).is_err() {
            violations.push(format!(
                "mention span {name} [{}, {}) outside 1..={n}",
                span.start, span.end
            ));
        }
    }

    if vocab.relation_index(&inst.relation).is_err() {
        violations.push(format!("unknown relation {}", inst.relation));
    }

    if let Some(tags) = &inst.ne_tags {
        if tags.len() != n {
            violations.push(format!(
                "tag sequence has length {} but sentence has {n} tokens",
                tags.len()
            ));
        }
        let mut prev: Option<&str> = None;
        for (idx, tag) in tags.iter().enumerate() {
            let pos = idx + 1;
            if vocab.tag_index(tag).is_err() {
                violations.push(format!("unknown NE tag {tag} at position {pos}"));
            }
            if let Some(ty) = tag.strip_prefix("I-") {
                let continues = prev
                    .filter(|p| *p != OUTSIDE_TAG)
                    .and_then(bio_type)
                    .is_some_and(|prev_ty| prev_ty == ty);
                if !continues {
                    violations.push(format!("BIO discontinuity at position {pos}"));
                }
            }
            prev = Some(tag);
        }
    }

    violations
}
