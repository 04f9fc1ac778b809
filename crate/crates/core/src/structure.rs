//! Dependency edges, projective trees and forests.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::vocab::LabelId;

/// A labeled arc `head -> modifier` carrying its parser probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DependencyEdge {
    pub head: usize,
    pub label: LabelId,
    pub modifier: usize,
    pub prob: f64,
}

impl DependencyEdge {
    pub fn new(head: usize, label: LabelId, modifier: usize, prob: f64) -> Self {
        DependencyEdge {
            head,
            label,
            modifier,
            prob,
        }
    }

    /// Canonical ordering key `(modifier, head, label)`.
    pub fn key(&self) -> (usize, usize, LabelId) {
        (self.modifier, self.head, self.label)
    }
}

/// Sum of `ln p` over edges in modifier order.
pub(crate) fn canonical_log_score(edges: &[DependencyEdge]) -> f64 {
    edges.iter().map(|e| e.prob.ln()).sum()
}

/// A spanning, acyclic, projective analysis of an `n`-token sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct DependencyTree {
    n: usize,
    edges: Vec<DependencyEdge>,
    log_score: f64,
}

impl DependencyTree {
    /// Build and validate a tree; edges may come in any order.
    pub fn new(n: usize, mut edges: Vec<DependencyEdge>) -> Result<Self> {
        edges.sort_by_key(|e| e.modifier);
        let log_score = canonical_log_score(&edges);
        let tree = DependencyTree {
            n,
            edges,
            log_score,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges sorted by modifier; `edges()[m - 1]` attaches position `m`.
    pub fn edges(&self) -> &[DependencyEdge] {
        &self.edges
    }

    pub fn log_score(&self) -> f64 {
        self.log_score
    }

    /// Head of every position `1..=n`, indexed by `m - 1`.
    pub fn heads(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.head).collect()
    }

    /// `(modifier, head, label)` of every edge in canonical order.
    pub fn signature(&self) -> Vec<(usize, usize, LabelId)> {
        self.edges.iter().map(DependencyEdge::key).collect()
    }

    /// Check spanning, acyclicity, projectivity and the cached score.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidTree("empty sentence".into()));
        }
        if self.edges.len() != n {
            return Err(Error::InvalidTree(format!(
                "{} edges for {n} tokens",
                self.edges.len()
            )));
        }
        for (idx, e) in self.edges.iter().enumerate() {
            if e.modifier != idx + 1 {
                return Err(Error::InvalidTree(format!(
                    "position {} is not attached exactly once",
                    idx + 1
                )));
            }
            if e.head > n || e.head == e.modifier {
                return Err(Error::InvalidTree(format!(
                    "bad head {} for {}",
                    e.head, e.modifier
                )));
            }
            if !(e.prob > 0.0 && e.prob <= 1.0) {
                return Err(Error::InvalidTree(format!("bad probability {}", e.prob)));
            }
        }

        let heads = self.heads();
        let head_of = |pos: usize| heads[pos - 1];
        // Acyclic iff every walk up reaches ROOT within n steps.
        for start in 1..=n {
            let mut cur = start;
            let mut steps = 0;
            while cur != 0 {
                cur = head_of(cur);
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidTree(format!(
                        "cycle through position {start}"
                    )));
                }
            }
        }

        let dominates = |anc: usize, mut pos: usize| {
            while pos != 0 {
                if pos == anc {
                    return true;
                }
                pos = head_of(pos);
            }
            anc == 0
        };
        for e in &self.edges {
            let (lo, hi) = (e.head.min(e.modifier), e.head.max(e.modifier));
            if let Some(k) = (lo + 1..hi).find(|&k| !dominates(e.head, k)) {
                return Err(Error::InvalidTree(format!(
                    "edge {} -> {} is non-projective over position {k}",
                    e.head, e.modifier
                )));
            }
        }

        let expected = canonical_log_score(&self.edges);
        if (expected - self.log_score).abs() > 1e-9 {
            return Err(Error::InvalidTree("log score does not match edges".into()));
        }
        Ok(())
    }
}

/// A deduplicated set of labeled edges over an `n`-token sentence.
///
/// Edges are keyed by `(modifier, head, label)`; re-inserting an existing
/// triple keeps the first probability.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DependencyForest {
    n: usize,
    edges: BTreeMap<(usize, usize, LabelId), f64>,
}

impl DependencyForest {
    pub fn new(n: usize) -> Self {
        DependencyForest {
            n,
            edges: BTreeMap::new(),
        }
    }

    pub fn from_tree(tree: &DependencyTree) -> Self {
        let mut forest = DependencyForest::new(tree.n());
        for e in tree.edges() {
            forest.insert(*e).expect("tree edges are valid");
        }
        forest
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Insert an edge; returns `false` when the triple was already present.
    pub fn insert(&mut self, edge: DependencyEdge) -> Result<bool> {
        if edge.modifier == 0
            || edge.modifier > self.n
            || edge.head > self.n
            || edge.head == edge.modifier
        {
            return Err(Error::InvalidForestEdge {
                head: edge.head,
                label: edge.label,
                modifier: edge.modifier,
            });
        }
        if !(edge.prob > 0.0 && edge.prob <= 1.0) {
            return Err(Error::InvalidArc(format!(
                "forest edge probability {}",
                edge.prob
            )));
        }
        let mut inserted = false;
        self.edges.entry(edge.key()).or_insert_with(|| {
            inserted = true;
            edge.prob
        });
        Ok(inserted)
    }

    pub fn contains(&self, head: usize, label: LabelId, modifier: usize) -> bool {
        self.edges.contains_key(&(modifier, head, label))
    }

    pub fn prob(&self, head: usize, label: LabelId, modifier: usize) -> Option<f64> {
        self.edges.get(&(modifier, head, label)).copied()
    }

    /// Edges in canonical `(modifier, head, label)` order.
    pub fn edges(&self) -> impl Iterator<Item = DependencyEdge> + '_ {
        self.edges
            .iter()
            .map(|(&(modifier, head, label), &prob)| DependencyEdge {
                head,
                label,
                modifier,
                prob,
            })
    }

    /// A copy with every probability replaced by `prob`.
    pub fn with_uniform_prob(&self, prob: f64) -> Self {
        DependencyForest {
            n: self.n,
            edges: self.edges.keys().map(|k| (*k, prob)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(h: usize, m: usize, p: f64) -> DependencyEdge {
        DependencyEdge::new(h, LabelId(0), m, p)
    }

    #[test]
    fn tree_accepts_projective_analysis() {
        let t = DependencyTree::new(3, vec![e(2, 1, 0.5), e(0, 2, 0.9), e(2, 3, 0.8)]).unwrap();
        assert_eq!(t.heads(), vec![2, 0, 2]);
        let expected = 0.5f64.ln() + 0.9f64.ln() + 0.8f64.ln();
        assert!((t.log_score() - expected).abs() < 1e-12);
    }

    #[test]
    fn tree_allows_several_root_children() {
        assert!(DependencyTree::new(2, vec![e(0, 1, 0.5), e(0, 2, 0.5)]).is_ok());
    }

    #[test]
    fn tree_rejects_cycles() {
        let err = DependencyTree::new(2, vec![e(2, 1, 0.5), e(1, 2, 0.5)]).unwrap_err();
        assert!(err.to_string().contains("cycle"));
    }

    #[test]
    fn tree_rejects_crossing_arcs() {
        // 1 -> 3 and 2 -> 4 cross.
        let edges = vec![e(0, 1, 0.5), e(0, 2, 0.5), e(1, 3, 0.5), e(2, 4, 0.5)];
        let err = DependencyTree::new(4, edges).unwrap_err();
        assert!(err.to_string().contains("non-projective"));
    }

    #[test]
    fn tree_rejects_double_attachment() {
        assert!(DependencyTree::new(2, vec![e(0, 1, 0.5), e(0, 1, 0.5)]).is_err());
        assert!(DependencyTree::new(2, vec![e(0, 1, 0.5)]).is_err());
    }

    #[test]
    fn forest_dedup_keeps_first_probability() {
        let mut f = DependencyForest::new(3);
        assert!(f.insert(e(0, 1, 0.3)).unwrap());
        assert!(!f.insert(e(0, 1, 0.9)).unwrap());
        assert_eq!(f.len(), 1);
        assert_eq!(f.prob(0, LabelId(0), 1), Some(0.3));
    }

    #[test]
    fn forest_rejects_out_of_range_edges() {
        let mut f = DependencyForest::new(2);
        assert!(f.insert(e(0, 3, 0.3)).is_err());
        assert!(f.insert(e(3, 1, 0.3)).is_err());
        assert!(f.insert(e(1, 1, 0.3)).is_err());
        assert!(f.insert(e(0, 0, 0.3)).is_err());
    }

    #[test]
    fn forest_iterates_canonically() {
        let mut f = DependencyForest::new(3);
        f.insert(e(2, 3, 0.1)).unwrap();
        f.insert(e(3, 1, 0.1)).unwrap();
        f.insert(e(0, 1, 0.1)).unwrap();
        let keys: Vec<_> = f.edges().map(|e| (e.modifier, e.head)).collect();
        assert_eq!(keys, vec![(1, 0), (1, 3), (3, 2)]);
    }
}
