//! First-order projective decoding: Eisner's span-based dynamic program with
//! per-item K-best lists combined by cube pruning.
//!
//! Chart items over positions `0..=n` (0 is ROOT):
//!
//! - `CompleteRight[i][j]`: head `i`, every position in `(i, j]` attached inside.
//! - `CompleteLeft[i][j]`: head `j`, every position in `[i, j)` attached inside.
//! - `IncompleteRight[i][j]`: arc `i -> j` plus the material between them.
//! - `IncompleteLeft[i][j]`: arc `j -> i` plus the material between them.
//!
//! Each projective tree has exactly one derivation, so distinct derivations in
//! an item's list are distinct sub-structures.
//!
//! Hypotheses are totally ordered: higher score first, then the head sequence
//! over the item's covered modifiers, lexicographically smaller first. This is
//! the sorted `(modifier, head, label)` edge-list order restricted to one item,
//! since labels are a function of the arc.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Range;

use super::{rank_trees, ArcTable, SCORE_TIE_TOLERANCE};
use crate::arcs::ArcProbabilities;
use crate::error::{Error, Result};
use crate::structure::DependencyTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    CompleteRight = 0,
    CompleteLeft = 1,
    IncompleteRight = 2,
    IncompleteLeft = 3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Item {
    kind: Kind,
    i: usize,
    j: usize,
}

impl Item {
    fn new(kind: Kind, i: usize, j: usize) -> Self {
        Item { kind, i, j }
    }

    /// Sub-items combined at split `k`.
    fn parts(&self, k: usize) -> (Item, Item) {
        let Item { kind, i, j } = *self;
        match kind {
            Kind::IncompleteRight | Kind::IncompleteLeft => (
                Item::new(Kind::CompleteRight, i, k),
                Item::new(Kind::CompleteLeft, k + 1, j),
            ),
            Kind::CompleteRight => (
                Item::new(Kind::IncompleteRight, i, k),
                Item::new(Kind::CompleteRight, k, j),
            ),
            Kind::CompleteLeft => (
                Item::new(Kind::CompleteLeft, i, k),
                Item::new(Kind::IncompleteLeft, k, j),
            ),
        }
    }

    fn splits(&self) -> Range<usize> {
        match self.kind {
            Kind::CompleteRight => self.i + 1..self.j + 1,
            _ => self.i..self.j,
        }
    }

    /// The `(head, modifier)` arc this item introduces.
    fn arc(&self) -> Option<(usize, usize)> {
        match self.kind {
            Kind::IncompleteRight => Some((self.i, self.j)),
            Kind::IncompleteLeft => Some((self.j, self.i)),
            _ => None,
        }
    }

    /// Modifier positions whose heads the item fixes.
    fn covered(&self) -> Range<usize> {
        match self.kind {
            Kind::CompleteRight | Kind::IncompleteRight => self.i + 1..self.j + 1,
            Kind::CompleteLeft | Kind::IncompleteLeft => self.i..self.j,
        }
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Hyp {
    score: f64,
    split: u32,
    left: u32,
    right: u32,
}

/// A frontier entry: split `k`, ranks `a` and `b` into the two part lists.
#[derive(Clone, Copy, Debug)]
struct Candidate {
    score: f64,
    k: usize,
    a: usize,
    b: usize,
}

// The heap orders by score only; ties are resolved on pop.
impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score)
    }
}

struct Chart<'a> {
    n: usize,
    k_best: usize,
    arcs: &'a ArcTable,
    cells: Vec<Vec<Hyp>>,
}

impl<'a> Chart<'a> {
    fn new(n: usize, k_best: usize, arcs: &'a ArcTable) -> Self {
        let mut chart = Chart {
            n,
            k_best,
            arcs,
            cells: vec![Vec::new(); 4 * (n + 1) * (n + 1)],
        };
        let leaf = Hyp {
            score: 0.0,
            split: LEAF,
            left: LEAF,
            right: LEAF,
        };
        for i in 0..=n {
            for kind in [Kind::CompleteRight, Kind::CompleteLeft] {
                let idx = chart.index(Item::new(kind, i, i));
                chart.cells[idx].push(leaf);
            }
        }
        chart
    }

    fn index(&self, item: Item) -> usize {
        let w = self.n + 1;
        ((item.kind as usize) * w + item.i) * w + item.j
    }

    fn list(&self, item: Item) -> &[Hyp] {
        &self.cells[self.index(item)]
    }

    fn build(&mut self) {
        let n = self.n;
        for width in 1..=n {
            for i in 0..=n - width {
                let j = i + width;
                // Complete items consume incomplete items of the same span.
                for kind in [
                    Kind::IncompleteRight,
                    Kind::IncompleteLeft,
                    Kind::CompleteRight,
                    Kind::CompleteLeft,
                ] {
                    if i == 0 && matches!(kind, Kind::IncompleteLeft | Kind::CompleteLeft) {
                        continue; // ROOT never takes a head
                    }
                    let item = Item::new(kind, i, j);
                    let hyps = self.combine(item);
                    let idx = self.index(item);
                    self.cells[idx] = hyps;
                }
            }
        }
    }

    /// Lazy best-first enumeration of the item's K best combinations.
    fn combine(&self, item: Item) -> Vec<Hyp> {
        let arc_score = match item.arc() {
            Some((h, m)) => {
                let s = self.arcs.score(h, m);
                if s == f64::NEG_INFINITY {
                    return Vec::new();
                }
                s
            }
            None => 0.0,
        };

        let mut frontier = BinaryHeap::new();
        for k in item.splits() {
            let (l, r) = item.parts(k);
            if let (Some(lh), Some(rh)) = (self.list(l).first(), self.list(r).first()) {
                frontier.push(Candidate {
                    score: lh.score + rh.score + arc_score,
                    k,
                    a: 0,
                    b: 0,
                });
            }
        }

        let mut out = Vec::with_capacity(self.k_best);
        while out.len() < self.k_best {
            let Some(c) = self.pop_best(item, &mut frontier) else {
                break;
            };
            out.push(Hyp {
                score: c.score,
                split: c.k as u32,
                left: c.a as u32,
                right: c.b as u32,
            });

            let (l, r) = item.parts(c.k);
            let (left, right) = (self.list(l), self.list(r));
            // (a, b+1) always, (a+1, b) only from the first column: each
            // grid cell then has exactly one predecessor.
            if c.b + 1 < right.len() {
                frontier.push(Candidate {
                    score: left[c.a].score + right[c.b + 1].score + arc_score,
                    b: c.b + 1,
                    ..c
                });
            }
            if c.b == 0 && c.a + 1 < left.len() {
                frontier.push(Candidate {
                    score: left[c.a + 1].score + right[0].score + arc_score,
                    a: c.a + 1,
                    ..c
                });
            }
        }
        out
    }

    fn pop_best(&self, item: Item, frontier: &mut BinaryHeap<Candidate>) -> Option<Candidate> {
        let top = frontier.pop()?;
        let tied_with = |c: &Candidate, last: f64| last - c.score <= SCORE_TIE_TOLERANCE;
        if frontier.peek().is_none_or(|c| !tied_with(c, top.score)) {
            return Some(top);
        }

        let mut tied = vec![top];
        while let Some(c) = frontier
            .peek()
            .filter(|c| tied_with(c, tied[tied.len() - 1].score))
        {
            let c = *c;
            frontier.pop();
            tied.push(c);
        }
        let mut best = 0;
        for idx in 1..tied.len() {
            if self.compare_heads(item, &tied[idx], &tied[best]) == Ordering::Less {
                best = idx;
            }
        }
        let winner = tied.swap_remove(best);
        frontier.extend(tied);
        Some(winner)
    }

    fn compare_heads(&self, item: Item, x: &Candidate, y: &Candidate) -> Ordering {
        let mut hx = vec![0; self.n + 1];
        let mut hy = vec![0; self.n + 1];
        self.fill_candidate(item, x, &mut hx);
        self.fill_candidate(item, y, &mut hy);
        hx[item.covered()].cmp(&hy[item.covered()])
    }

    fn fill_candidate(&self, item: Item, c: &Candidate, heads: &mut [usize]) {
        let (l, r) = item.parts(c.k);
        self.fill_heads(l, c.a, heads);
        self.fill_heads(r, c.b, heads);
        if let Some((h, m)) = item.arc() {
            heads[m] = h;
        }
    }

    /// Write the heads fixed by hypothesis `rank` of `item` into `heads`.
    fn fill_heads(&self, item: Item, rank: usize, heads: &mut [usize]) {
        let hyp = self.list(item)[rank];
        if hyp.split == LEAF {
            return;
        }
        let candidate = Candidate {
            score: hyp.score,
            k: hyp.split as usize,
            a: hyp.left as usize,
            b: hyp.right as usize,
        };
        self.fill_candidate(item, &candidate, heads);
    }
}

/// The `k` highest-scoring distinct projective trees, best first.
///
/// Arc scores are the log-probability of each arc's best label, so trees
/// differ in structure, never only in labels. Multiple ROOT children are
/// allowed.
pub fn decode_kbest(probs: &ArcProbabilities, k: usize) -> Result<Vec<DependencyTree>> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    let uncovered = probs.uncovered_modifiers();
    if !uncovered.is_empty() {
        return Err(Error::UncoveredModifiers(uncovered));
    }

    let n = probs.n();
    let arcs = ArcTable::new(probs);
    let mut chart = Chart::new(n, k, &arcs);
    chart.build();

    let goal = Item::new(Kind::CompleteRight, 0, n);
    let mut trees: Vec<(f64, Vec<usize>, DependencyTree)> = (0..chart.list(goal).len())
        .map(|rank| {
            let mut heads = vec![0; n + 1];
            chart.fill_heads(goal, rank, &mut heads);
            let heads = heads[1..].to_vec();
            let tree = arcs.tree(&heads);
            (tree.log_score(), heads, tree)
        })
        .collect();
    if trees.is_empty() {
        return Err(Error::NoProjectiveTree);
    }

    // Chart scores were summed bottom-up; re-rank on the canonical
    // modifier-order sums so the output order is exactly the tie rule.
    rank_trees(&mut trees);
    // Expected no-op: derivations are unique per tree.
    let mut trees: Vec<(Vec<usize>, DependencyTree)> =
        trees.into_iter().map(|(_, h, t)| (h, t)).collect();
    trees.dedup_by(|(ha, _), (hb, _)| ha == hb);
    trees.truncate(k);
    Ok(trees.into_iter().map(|(_, t)| t).collect())
}

/// The highest-scoring projective tree.
pub fn decode_1best(probs: &ArcProbabilities) -> Result<DependencyTree> {
    decode_kbest(probs, 1).map(|mut trees| trees.swap_remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::LabelId;

    fn probs(n: usize, arcs: &[(usize, usize, f64)]) -> ArcProbabilities {
        let mut p = ArcProbabilities::new("t", n);
        for &(m, h, prob) in arcs {
            p.insert(m, h, LabelId(0), prob).unwrap();
        }
        p
    }

    #[test]
    fn dominant_arcs_force_the_tree() {
        let p = probs(2, &[(1, 0, 0.9), (2, 1, 0.8), (2, 0, 0.1), (1, 2, 0.05)]);
        let t = decode_1best(&p).unwrap();
        assert_eq!(t.heads(), vec![0, 1]);
        assert!((t.log_score() - (0.9f64.ln() + 0.8f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn single_token() {
        let t = decode_1best(&probs(1, &[(1, 0, 1.0)])).unwrap();
        assert_eq!(t.heads(), vec![0]);
        assert_eq!(t.log_score(), 0.0);
    }

    #[test]
    fn uncovered_modifier_is_reported() {
        let err = decode_1best(&probs(3, &[(1, 0, 1.0)])).unwrap_err();
        assert!(matches!(err, Error::UncoveredModifiers(ref v) if v == &[2, 3]));
    }

    #[test]
    fn cyclic_candidates_have_no_tree() {
        let err = decode_1best(&probs(2, &[(1, 2, 1.0), (2, 1, 1.0)])).unwrap_err();
        assert!(matches!(err, Error::NoProjectiveTree));
    }

    #[test]
    fn full_two_word_grid_has_three_trees() {
        let p = probs(2, &[(1, 0, 0.5), (1, 2, 0.5), (2, 0, 0.3), (2, 1, 0.7)]);
        let trees = decode_kbest(&p, 10).unwrap();
        let heads: Vec<_> = trees.iter().map(DependencyTree::heads).collect();
        // 0.5*0.7 = .35, 0.5*0.3 = .15 twice: tie broken by head vector
        assert_eq!(heads, vec![vec![0, 1], vec![0, 0], vec![2, 0]]);
    }

    #[test]
    fn exact_ties_follow_head_order() {
        // Every arc equally likely: all projective trees tie.
        let n = 3;
        let mut arcs = Vec::new();
        for m in 1..=n {
            for h in 0..=n {
                if h != m {
                    arcs.push((m, h, 0.25));
                }
            }
        }
        let trees = decode_kbest(&probs(n, &arcs), 100).unwrap();
        let heads: Vec<_> = trees.iter().map(DependencyTree::heads).collect();
        let mut sorted = heads.clone();
        sorted.sort();
        assert_eq!(heads, sorted);
        // projective trees over 3 words with ROOT at position 0
        assert_eq!(heads.len(), 12);
    }

    #[test]
    fn zero_k_rejected() {
        assert!(decode_kbest(&probs(1, &[(1, 0, 1.0)]), 0).is_err());
    }
}
