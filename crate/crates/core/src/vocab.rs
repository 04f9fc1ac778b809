//! Label, relation, tag and word vocabularies.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Suffix that turns a forward dependency label into its reversed partner.
pub const REVERSED_SUFFIX: &str = "-rev";

/// Identifier of the distinguished "no relation" class.
pub const NONE_RELATION: &str = "None";

/// Outside tag of the BIO scheme.
pub const OUTSIDE_TAG: &str = "O";

/// Index into the label universe of a [`LabelVocab`].
///
/// Forward labels occupy `0..L`, their reversed partners `L..2L`, so the
/// reversed partner of forward label `l` is `l + L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelId(pub u32);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawLabelVocab {
    dep_labels: Vec<String>,
    relations: Vec<String>,
    ne_tags: Vec<String>,
}

/// Dependency labels (with their reversed partners), relation set and NE tag set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLabelVocab", into = "RawLabelVocab")]
pub struct LabelVocab {
    dep_labels: Vec<String>,
    reversed: Vec<String>,
    relations: Vec<String>,
    ne_tags: Vec<String>,
    label_index: HashMap<String, LabelId>,
    relation_index: HashMap<String, usize>,
    tag_index: HashMap<String, usize>,
    none_relation: usize,
}

impl TryFrom<RawLabelVocab> for LabelVocab {
    type Error = Error;

    fn try_from(raw: RawLabelVocab) -> Result<Self> {
        LabelVocab::new(raw.dep_labels, raw.relations, raw.ne_tags)
    }
}

impl From<LabelVocab> for RawLabelVocab {
    fn from(vocab: LabelVocab) -> Self {
        RawLabelVocab {
            dep_labels: vocab.dep_labels,
            relations: vocab.relations,
            ne_tags: vocab.ne_tags,
        }
    }
}

impl LabelVocab {
    pub fn new(
        dep_labels: Vec<String>,
        relations: Vec<String>,
        ne_tags: Vec<String>,
    ) -> Result<Self> {
        if dep_labels.is_empty() {
            return Err(Error::InvalidVocab("no dependency labels".into()));
        }

        let reversed: Vec<String> = dep_labels
            .iter()
            .map(|l| format!("{l}{REVERSED_SUFFIX}"))
            .collect();

        let mut label_index = HashMap::new();
        for (idx, label) in dep_labels.iter().chain(reversed.iter()).enumerate() {
            if label_index
                .insert(label.clone(), LabelId(idx as u32))
                .is_some()
            {
                return Err(Error::InvalidVocab(format!(
                    "label {label} collides in the forward/reversed label universe"
                )));
            }
        }

        let mut relation_index = HashMap::new();
        for (idx, rel) in relations.iter().enumerate() {
            if relation_index.insert(rel.clone(), idx).is_some() {
                return Err(Error::InvalidVocab(format!("duplicate relation {rel}")));
            }
        }
        let none_relation = *relation_index.get(NONE_RELATION).ok_or_else(|| {
            Error::InvalidVocab(format!("relation set lacks the {NONE_RELATION} entry"))
        })?;

        let mut tag_index = HashMap::new();
        for (idx, tag) in ne_tags.iter().enumerate() {
            if !is_bio_tag(tag) {
                return Err(Error::InvalidVocab(format!("malformed BIO tag {tag}")));
            }
            if tag_index.insert(tag.clone(), idx).is_some() {
                return Err(Error::InvalidVocab(format!("duplicate tag {tag}")));
            }
        }

        Ok(LabelVocab {
            dep_labels,
            reversed,
            relations,
            ne_tags,
            label_index,
            relation_index,
            tag_index,
            none_relation,
        })
    }

    /// Number of forward dependency labels.
    pub fn num_labels(&self) -> usize {
        self.dep_labels.len()
    }

    /// Size of the label universe (forward and reversed).
    pub fn num_label_ids(&self) -> usize {
        2 * self.dep_labels.len()
    }

    pub fn dep_labels(&self) -> &[String] {
        &self.dep_labels
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn ne_tags(&self) -> &[String] {
        &self.ne_tags
    }

    pub fn none_relation(&self) -> usize {
        self.none_relation
    }

    pub fn label_id(&self, label: &str) -> Result<LabelId> {
        self.label_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    /// Look up a forward (non-reversed) label.
    pub fn forward_label_id(&self, label: &str) -> Result<LabelId> {
        let id = self.label_id(label)?;
        if self.is_reversed(id) {
            return Err(Error::UnknownLabel(format!(
                "{label} (reversed labels cannot label arcs)"
            )));
        }
        Ok(id)
    }

    pub fn label_name(&self, id: LabelId) -> &str {
        let idx = id.index();
        let num = self.dep_labels.len();
        if idx < num {
            &self.dep_labels[idx]
        } else {
            &self.reversed[idx - num]
        }
    }

    pub fn is_reversed(&self, id: LabelId) -> bool {
        id.index() >= self.dep_labels.len()
    }

    pub fn reverse_id(&self, id: LabelId) -> LabelId {
        let num = self.dep_labels.len() as u32;
        if id.0 < num {
            LabelId(id.0 + num)
        } else {
            LabelId(id.0 - num)
        }
    }

    /// Map a forward label to its reversed partner and vice versa.
    pub fn reverse_label(&self, label: &str) -> Result<&str> {
        let id = self.label_id(label)?;
        Ok(self.label_name(self.reverse_id(id)))
    }

    pub fn relation_index(&self, relation: &str) -> Result<usize> {
        self.relation_index
            .get(relation)
            .copied()
            .ok_or_else(|| Error::UnknownRelation(relation.to_owned()))
    }

    pub fn tag_index(&self, tag: &str) -> Result<usize> {
        self.tag_index
            .get(tag)
            .copied()
            .ok_or_else(|| Error::UnknownTag(tag.to_owned()))
    }

    /// SHA-256 over the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("vocabulary serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// `O`, `B-X` or `I-X` with a non-empty type `X`.
pub fn is_bio_tag(tag: &str) -> bool {
    tag == OUTSIDE_TAG || bio_type(tag).is_some()
}

/// The entity type of a `B-X`/`I-X` tag.
pub(crate) fn bio_type(tag: &str) -> Option<&str> {
    tag.strip_prefix("B-")
        .or_else(|| tag.strip_prefix("I-"))
        .filter(|t| !t.is_empty())
}

/// Word types seen in training; row 0 of the embedding table is reserved for
/// unknown words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordVocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

pub const UNK_WORD: &str = "<unk>";

impl WordVocab {
    /// Build from an explicit list; `<unk>` is prepended when missing.
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut all = Vec::with_capacity(words.len() + 1);
        if words.first().map(String::as_str) != Some(UNK_WORD) {
            all.push(UNK_WORD.to_owned());
        }
        all.extend(words);

        let mut index = HashMap::with_capacity(all.len());
        for (idx, w) in all.iter().enumerate() {
            if index.insert(w.clone(), idx).is_some() {
                return Err(Error::InvalidVocab(format!("duplicate word {w}")));
            }
        }
        Ok(WordVocab { words: all, index })
    }

    /// Sorted set of all tokens, so the result does not depend on input order.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut set: Vec<&str> = tokens.into_iter().filter(|t| *t != UNK_WORD).collect();
        set.sort_unstable();
        set.dedup();
        WordVocab::new(set.into_iter().map(str::to_owned).collect()).expect("deduplicated")
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Index of a token, or 0 (`<unk>`) when unseen.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.as_bytes());
            hasher.update([0u8]);
        }
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> LabelVocab {
        LabelVocab::new(
            vec!["amod".into(), "comp".into(), "root".into()],
            vec!["CPR:3".into(), "None".into()],
            vec!["O".into(), "B-GENE".into(), "I-GENE".into()],
        )
        .unwrap()
    }

    #[test]
    fn reverse_label_forward_and_back() {
        let v = vocab();
        assert_eq!(v.reverse_label("amod").unwrap(), "amod-rev");
        assert_eq!(v.reverse_label("amod-rev").unwrap(), "amod");
        let once = v.reverse_label("comp").unwrap().to_owned();
        assert_eq!(v.reverse_label(&once).unwrap(), "comp");
    }

    #[test]
    fn reverse_label_unknown() {
        let err = vocab().reverse_label("unknown-xyz").unwrap_err();
        assert!(err.to_string().contains("unknown-xyz"));
    }

    #[test]
    fn reversal_is_an_involution_on_ids() {
        let v = vocab();
        for idx in 0..v.num_label_ids() {
            let id = LabelId(idx as u32);
            assert_ne!(v.reverse_id(id), id);
            assert_eq!(v.reverse_id(v.reverse_id(id)), id);
            assert_ne!(v.is_reversed(id), v.is_reversed(v.reverse_id(id)));
        }
    }

    #[test]
    fn colliding_reversed_label_rejected() {
        let err = LabelVocab::new(
            vec!["x".into(), "x-rev".into()],
            vec!["None".into()],
            vec!["O".into()],
        );
        assert!(err.is_err());
    }

    #[test]
    fn relation_set_needs_exactly_one_none() {
        assert!(LabelVocab::new(vec!["a".into()], vec!["R".into()], vec![]).is_err());
        assert!(
            LabelVocab::new(vec!["a".into()], vec!["None".into(), "None".into()], vec![]).is_err()
        );
    }

    #[test]
    fn malformed_tags_rejected() {
        for tag in ["X-GENE", "B-", "b-GENE", ""] {
            assert!(
                LabelVocab::new(vec!["a".into()], vec!["None".into()], vec![tag.into()]).is_err(),
                "{tag}"
            );
        }
    }

    #[test]
    fn json_round_trip_rebuilds_indices() {
        let v = vocab();
        let json = serde_json::to_string(&v).unwrap();
        let back: LabelVocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.fingerprint(), v.fingerprint());
        assert_eq!(back.none_relation(), 1);
    }

    #[test]
    fn word_vocab_reserves_unk() {
        let w = WordVocab::from_tokens(["b", "a", "b"]);
        assert_eq!(w.words(), &["<unk>", "a", "b"]);
        assert_eq!(w.lookup("a"), 1);
        assert_eq!(w.lookup("zzz"), 0);
    }
}
