use crate::structure::{DependencyForest, DependencyTree};
use crate::vocab::LabelId;

/// A word-to-word arc; positions are 0-based word indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphEdge {
    pub head: usize,
    pub modifier: usize,
    pub label: LabelId,
    pub prob: f64,
}

/// Message-passing graph over the words of a sentence.
///
/// ROOT-headed arcs are dropped. Incident edge lists keep the forest's
/// canonical `(modifier, head, label)` order, which fixes the summation order
/// of messages.
#[derive(Clone, Debug, PartialEq)]
pub struct GnnGraph {
    n: usize,
    edges: Vec<GraphEdge>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

impl GnnGraph {
    pub fn from_forest(forest: &DependencyForest) -> Self {
        let n = forest.n();
        let edges: Vec<GraphEdge> = forest
            .edges()
            .filter(|e| e.head != 0)
            .map(|e| GraphEdge {
                head: e.head - 1,
                modifier: e.modifier - 1,
                label: e.label,
                prob: e.prob,
            })
            .collect();
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            children[e.head].push(idx);
            parents[e.modifier].push(idx);
        }
        GnnGraph {
            n,
            edges,
            children,
            parents,
        }
    }

    pub fn from_tree(tree: &DependencyTree) -> Self {
        GnnGraph::from_forest(&DependencyForest::from_tree(tree))
    }

    /// A graph over `n` words without edges.
    pub fn empty(n: usize) -> Self {
        GnnGraph::from_forest(&DependencyForest::new(n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    /// Edges in which word `i` is the head (its children).
    pub fn child_edges(&self, i: usize) -> impl Iterator<Item = &GraphEdge> {
        self.children[i].iter().map(|&e| &self.edges[e])
    }

    /// Edges in which word `i` is the modifier (its parents).
    pub fn parent_edges(&self, i: usize) -> impl Iterator<Item = &GraphEdge> {
        self.parents[i].iter().map(|&e| &self.edges[e])
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.children[i].is_empty() && self.parents[i].is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::DependencyEdge;

    #[test]
    fn root_edges_are_dropped() {
        let mut f = DependencyForest::new(3);
        for m in 1..=3 {
            f.insert(DependencyEdge::new(0, LabelId(0), m, 0.5))
                .unwrap();
        }
        let g = GnnGraph::from_forest(&f);
        assert!(g.edges().is_empty());
        assert!((0..3).all(|i| g.is_isolated(i)));
    }

    #[test]
    fn tree_words_have_at_most_one_parent() {
        let t = DependencyTree::new(
            3,
            vec![
                DependencyEdge::new(2, LabelId(0), 1, 0.5),
                DependencyEdge::new(0, LabelId(0), 2, 0.5),
                DependencyEdge::new(2, LabelId(1), 3, 0.5),
            ],
        )
        .unwrap();
        let g = GnnGraph::from_tree(&t);
        assert!((0..3).all(|i| g.parent_edges(i).count() <= 1));
        assert_eq!(g.child_edges(1).count(), 2);
    }

    #[test]
    fn duplicate_triples_yield_one_edge() {
        let mut f = DependencyForest::new(2);
        f.insert(DependencyEdge::new(1, LabelId(0), 2, 0.5))
            .unwrap();
        f.insert(DependencyEdge::new(1, LabelId(0), 2, 0.7))
            .unwrap();
        let g = GnnGraph::from_forest(&f);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.child_edges(0).count(), 1);
    }
}
