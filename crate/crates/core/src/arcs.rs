//! Sparse labeled arc probabilities produced by a parser.

use crate::error::{Error, Result};
use crate::vocab::LabelId;

/// Slack allowed on the per-modifier probability mass.
pub const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcEntry {
    pub head: usize,
    pub label: LabelId,
    pub prob: f64,
}

/// Per-modifier sparse distribution over `(head, label)` pairs.
///
/// Entries of each modifier are kept sorted by `(head, label)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcProbabilities {
    id: String,
    n: usize,
    entries: Vec<Vec<ArcEntry>>,
    mass: Vec<f64>,
}

impl ArcProbabilities {
    pub fn new(id: impl Into<String>, n: usize) -> Self {
        ArcProbabilities {
            id: id.into(),
            n,
            entries: vec![Vec::new(); n],
            mass: vec![0.0; n],
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Number of tokens.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Store `p(head, label | modifier)`.
    pub fn insert(
        &mut self,
        modifier: usize,
        head: usize,
        label: LabelId,
        prob: f64,
    ) -> Result<()> {
        if modifier == 0 || modifier > self.n {
            return Err(Error::InvalidArc(format!(
                "modifier {modifier} outside 1..={}",
                self.n
            )));
        }
        if head > self.n {
            return Err(Error::InvalidArc(format!(
                "head {head} outside 0..={}",
                self.n
            )));
        }
        if head == modifier {
            return Err(Error::InvalidArc(format!("self-arc on position {head}")));
        }
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(Error::InvalidArc(format!(
                "probability {prob} for ({modifier}, {head}) not in (0, 1]"
            )));
        }

        let slot = &mut self.entries[modifier - 1];
        match slot.binary_search_by(|e| (e.head, e.label).cmp(&(head, label))) {
            Ok(_) => Err(Error::DuplicateArc {
                modifier,
                head,
                label: format!("#{}", label.0),
            }),
            Err(pos) => {
                let mass = self.mass[modifier - 1] + prob;
                if mass > 1.0 + MASS_TOLERANCE {
                    return Err(Error::MassViolation { modifier, mass });
                }
                self.mass[modifier - 1] = mass;
                slot.insert(pos, ArcEntry { head, label, prob });
                Ok(())
            }
        }
    }

    /// Candidates of `modifier` (1-based), sorted by `(head, label)`.
    pub fn entries(&self, modifier: usize) -> &[ArcEntry] {
        &self.entries[modifier - 1]
    }

    /// Stored `(modifier, entry)` pairs in `(modifier, head, label)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &ArcEntry)> {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(idx, es)| es.iter().map(move |e| (idx + 1, e)))
    }

    pub fn get(&self, modifier: usize, head: usize, label: LabelId) -> Option<f64> {
        let slot = self.entries.get(modifier.checked_sub(1)?)?;
        slot.binary_search_by(|e| (e.head, e.label).cmp(&(head, label)))
            .ok()
            .map(|pos| slot[pos].prob)
    }

    /// Stored probability mass of `modifier`.
    pub fn mass(&self, modifier: usize) -> f64 {
        self.mass[modifier - 1]
    }

    pub fn num_entries(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    /// Modifiers without any stored head candidate.
    pub fn uncovered_modifiers(&self) -> Vec<usize> {
        (1..=self.n)
            .filter(|&m| self.entries[m - 1].is_empty())
            .collect()
    }

    /// Give every uncovered modifier a uniform candidate `eps` for each head
    /// (labelled `label`).
    pub fn with_fallback(&self, eps: f64, label: LabelId) -> Result<Self> {
        let mut out = self.clone();
        for m in self.uncovered_modifiers() {
            for h in (0..=self.n).filter(|&h| h != m) {
                out.insert(m, h, label, eps)?;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_arcs_and_root_modifier() {
        let mut p = ArcProbabilities::new("s", 3);
        assert!(p.insert(2, 2, LabelId(0), 0.5).is_err());
        assert!(p.insert(0, 1, LabelId(0), 0.5).is_err());
        assert!(p.insert(4, 1, LabelId(0), 0.5).is_err());
        assert!(p.insert(1, 4, LabelId(0), 0.5).is_err());
    }

    #[test]
    fn rejects_nonpositive_and_oversized_probabilities() {
        let mut p = ArcProbabilities::new("s", 2);
        assert!(p.insert(1, 0, LabelId(0), 0.0).is_err());
        assert!(p.insert(1, 0, LabelId(0), 1.5).is_err());
        assert!(p.insert(1, 0, LabelId(0), f64::NAN).is_err());
    }

    #[test]
    fn duplicates_and_mass() {
        let mut p = ArcProbabilities::new("s", 2);
        p.insert(2, 1, LabelId(1), 0.6).unwrap();
        assert!(matches!(
            p.insert(2, 1, LabelId(1), 0.1),
            Err(Error::DuplicateArc { .. })
        ));
        assert!(matches!(
            p.insert(2, 0, LabelId(0), 0.6),
            Err(Error::MassViolation { .. })
        ));
        p.insert(2, 0, LabelId(0), 0.4).unwrap();
        assert!((p.mass(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entries_are_sorted_by_head_then_label() {
        let mut p = ArcProbabilities::new("s", 3);
        p.insert(1, 3, LabelId(0), 0.1).unwrap();
        p.insert(1, 0, LabelId(2), 0.1).unwrap();
        p.insert(1, 0, LabelId(1), 0.1).unwrap();
        let keys: Vec<_> = p.entries(1).iter().map(|e| (e.head, e.label.0)).collect();
        assert_eq!(keys, vec![(0, 1), (0, 2), (3, 0)]);
        assert_eq!(p.uncovered_modifiers(), vec![2, 3]);
    }

    #[test]
    fn fallback_covers_every_modifier() {
        let mut p = ArcProbabilities::new("s", 3);
        p.insert(1, 0, LabelId(0), 0.9).unwrap();
        let q = p.with_fallback(0.01, LabelId(0)).unwrap();
        assert!(q.uncovered_modifiers().is_empty());
        assert_eq!(q.entries(1).len(), 1);
        assert_eq!(q.entries(2).len(), 3);
    }
}
