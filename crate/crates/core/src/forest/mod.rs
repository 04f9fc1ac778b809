//! Forest generation from arc probabilities.
//!
//! Two generators are provided: [`edgewise_forest`] keeps every stored arc
//! above a threshold, and [`decode_kbest`] + [`merge_trees`] merge the K
//! highest-scoring projective trees. Both run independently per sentence;
//! [`generate_forests`] fans out over sentences and keeps input order.

mod brute;
mod eisner;
mod stats;

use rayon::prelude::*;

pub use self::brute::{brute_force_kbest, BRUTE_FORCE_MAX_LEN};
pub use self::eisner::{decode_1best, decode_kbest};
pub use self::stats::{
    forest_density, forest_stats, mention_connectivity, oracle_las, ForestStats,
};

use crate::arcs::ArcProbabilities;
use crate::error::{Error, Result};
use crate::structure::{DependencyEdge, DependencyForest, DependencyTree};
use crate::vocab::LabelId;

/// Highest-probability label stored for the arc `head -> modifier`.
///
/// Ties go to the label that comes first in vocabulary order.
pub fn best_label(
    probs: &ArcProbabilities,
    head: usize,
    modifier: usize,
) -> Option<(LabelId, f64)> {
    let mut best: Option<(LabelId, f64)> = None;
    // Entries are sorted by (head, label), so the first maximum wins ties.
    for e in probs.entries(modifier).iter().filter(|e| e.head == head) {
        if best.is_none_or(|(_, p)| e.prob > p) {
            best = Some((e.label, e.prob));
        }
    }
    best
}

/// Scores closer than this are tied; bottom-up chart sums and canonical
/// modifier-order sums of the same tree may differ in the last bits.
pub(crate) const SCORE_TIE_TOLERANCE: f64 = 1e-10;

/// Sort best-first by score, then by head vector within runs of tied scores.
pub(crate) fn rank_trees<T>(items: &mut [(f64, Vec<usize>, T)]) {
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut start = 0;
    while start < items.len() {
        let mut end = start + 1;
        while end < items.len() && items[end - 1].0 - items[end].0 <= SCORE_TIE_TOLERANCE {
            end += 1;
        }
        items[start..end].sort_by(|a, b| a.1.cmp(&b.1));
        start = end;
    }
}

/// Best label and `ln p` for every arc, `NEG_INFINITY` where none is stored.
pub(crate) struct ArcTable {
    n: usize,
    cells: Vec<Option<(LabelId, f64, f64)>>,
}

impl ArcTable {
    pub(crate) fn new(probs: &ArcProbabilities) -> Self {
        let n = probs.n();
        let mut cells = vec![None; (n + 1) * (n + 1)];
        for m in 1..=n {
            for e in probs.entries(m) {
                let slot: &mut Option<(LabelId, f64, f64)> = &mut cells[e.head * (n + 1) + m];
                if slot.is_none_or(|(_, p, _)| e.prob > p) {
                    *slot = Some((e.label, e.prob, e.prob.ln()));
                }
            }
        }
        ArcTable { n, cells }
    }

    pub(crate) fn score(&self, head: usize, modifier: usize) -> f64 {
        self.cells[head * (self.n + 1) + modifier].map_or(f64::NEG_INFINITY, |(_, _, s)| s)
    }

    pub(crate) fn edge(&self, head: usize, modifier: usize) -> DependencyEdge {
        let (label, prob, _) = self.cells[head * (self.n + 1) + modifier].expect("arc exists");
        DependencyEdge::new(head, label, modifier, prob)
    }

    /// Build the tree for a head vector (`heads[m - 1]` is the head of `m`).
    pub(crate) fn tree(&self, heads: &[usize]) -> DependencyTree {
        let edges = heads
            .iter()
            .enumerate()
            .map(|(idx, &h)| self.edge(h, idx + 1))
            .collect();
        DependencyTree::new(self.n, edges).expect("decoded structure is a projective tree")
    }
}

/// Union of the labeled edges of `trees`.
///
/// Trees are visited in order, so on duplicates the first tree's probability
/// is kept.
pub fn merge_trees(trees: &[DependencyTree]) -> Result<DependencyForest> {
    let first = trees
        .first()
        .ok_or_else(|| Error::EmptyInput("no trees to merge".into()))?;
    let mut forest = DependencyForest::new(first.n());
    for tree in trees {
        if tree.n() != first.n() {
            return Err(Error::LengthMismatch {
                expected: first.n(),
                found: tree.n(),
            });
        }
        for e in tree.edges() {
            forest.insert(*e)?;
        }
    }
    Ok(forest)
}

/// Every stored arc with probability strictly greater than `gamma`.
pub fn edgewise_forest(probs: &ArcProbabilities, gamma: f64) -> DependencyForest {
    let mut forest = DependencyForest::new(probs.n());
    for (m, e) in probs.iter().filter(|(_, e)| e.prob > gamma) {
        forest
            .insert(DependencyEdge::new(e.head, e.label, m, e.prob))
            .expect("stored arcs are valid forest edges");
    }
    forest
}

/// Forest construction strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForestAlgorithm {
    Edgewise { gamma: f64 },
    KBest { k: usize },
}

impl ForestAlgorithm {
    pub fn generate(&self, probs: &ArcProbabilities) -> Result<DependencyForest> {
        match *self {
            ForestAlgorithm::Edgewise { gamma } => Ok(edgewise_forest(probs, gamma)),
            ForestAlgorithm::KBest { k } => merge_trees(&decode_kbest(probs, k)?),
        }
    }
}

/// Generate a forest per sentence in parallel; results keep input order.
pub fn generate_forests(
    probs: &[ArcProbabilities],
    algo: ForestAlgorithm,
) -> Vec<Result<DependencyForest>> {
    probs.par_iter().map(|p| algo.generate(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(n: usize, arcs: &[(usize, usize, u32, f64)]) -> ArcProbabilities {
        let mut p = ArcProbabilities::new("t", n);
        for &(m, h, l, prob) in arcs {
            p.insert(m, h, LabelId(l), prob).unwrap();
        }
        p
    }

    #[test]
    fn best_label_strict_max() {
        let p = probs(2, &[(2, 1, 1, 0.6), (2, 1, 0, 0.3)]);
        assert_eq!(best_label(&p, 1, 2), Some((LabelId(1), 0.6)));
    }

    #[test]
    fn best_label_tie_prefers_vocab_order() {
        let p = probs(2, &[(2, 1, 3, 0.4), (2, 1, 2, 0.4)]);
        assert_eq!(best_label(&p, 1, 2), Some((LabelId(2), 0.4)));
    }

    #[test]
    fn best_label_absent() {
        let p = probs(2, &[(2, 0, 0, 0.4)]);
        assert_eq!(best_label(&p, 1, 2), None);
    }

    #[test]
    fn edgewise_boundaries() {
        let p = probs(2, &[(1, 0, 0, 1.0), (2, 1, 0, 0.7), (2, 0, 1, 0.3)]);
        assert!(edgewise_forest(&p, 1.0).is_empty());
        assert_eq!(edgewise_forest(&p, 0.0).len(), 3);
        // strict inequality at the threshold itself
        assert_eq!(edgewise_forest(&p, 0.3).len(), 2);
    }

    #[test]
    fn merge_single_tree_has_density_one() {
        let p = probs(3, &[(1, 2, 0, 0.9), (2, 0, 0, 0.9), (3, 2, 0, 0.9)]);
        let t = decode_1best(&p).unwrap();
        let f = merge_trees(std::slice::from_ref(&t)).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(forest_density(&f), 1.0);
        assert_eq!(merge_trees(&[t.clone(), t]).unwrap(), f);
    }

    #[test]
    fn merge_rejects_mixed_lengths() {
        let a = decode_1best(&probs(1, &[(1, 0, 0, 1.0)])).unwrap();
        let b = decode_1best(&probs(2, &[(1, 0, 0, 1.0), (2, 1, 0, 1.0)])).unwrap();
        assert!(matches!(
            merge_trees(&[a, b]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(merge_trees(&[]).is_err());
    }
}
