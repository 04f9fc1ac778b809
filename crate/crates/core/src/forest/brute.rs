//! Exhaustive K-best over head vectors; a reference for the chart decoder on
//! short sentences.

use super::{best_label, rank_trees};
use crate::arcs::ArcProbabilities;
use crate::error::{Error, Result};
use crate::structure::{DependencyEdge, DependencyTree};
use crate::vocab::LabelId;

pub const BRUTE_FORCE_MAX_LEN: usize = 8;

/// Enumerate every head vector, keep the acyclic projective ones, and return
/// the top `k` under the decoder's ordering (score, then head vector).
///
/// Head vectors are extended one modifier at a time and abandoned as soon as a
/// new arc crosses an earlier one; crossing arcs can never be part of a
/// projective tree rooted at position 0.
pub fn brute_force_kbest(probs: &ArcProbabilities, k: usize) -> Result<Vec<DependencyTree>> {
    let n = probs.n();
    if n > BRUTE_FORCE_MAX_LEN {
        return Err(Error::SizeGuard {
            n,
            max: BRUTE_FORCE_MAX_LEN,
        });
    }

    let mut labels: Vec<Vec<Option<(LabelId, f64)>>> = vec![vec![None; n + 1]; n + 1];
    for (m, row) in labels.iter_mut().enumerate().skip(1) {
        for (h, cell) in row.iter_mut().enumerate() {
            if h != m {
                *cell = best_label(probs, h, m);
            }
        }
    }

    let mut found: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut heads = Vec::with_capacity(n);
    extend(n, &labels, &mut heads, &mut found);

    let mut ranked: Vec<(f64, Vec<usize>, DependencyTree)> = found
        .into_iter()
        .map(|(_, heads)| {
            let edges = heads
                .iter()
                .enumerate()
                .map(|(idx, &h)| {
                    let m = idx + 1;
                    let (label, prob) = labels[m][h].expect("enumerated arcs exist");
                    DependencyEdge::new(h, label, m, prob)
                })
                .collect();
            DependencyTree::new(n, edges).map(|t| (t.log_score(), heads, t))
        })
        .collect::<Result<_>>()?;
    rank_trees(&mut ranked);
    ranked.truncate(k);
    Ok(ranked.into_iter().map(|(_, _, t)| t).collect())
}

fn extend(
    n: usize,
    labels: &[Vec<Option<(LabelId, f64)>>],
    heads: &mut Vec<usize>,
    found: &mut Vec<(f64, Vec<usize>)>,
) {
    let m = heads.len() + 1;
    if m > n {
        if is_tree(heads) {
            let score = heads
                .iter()
                .enumerate()
                .map(|(idx, &h)| labels[idx + 1][h].expect("arc exists").1.ln())
                .sum();
            found.push((score, heads.clone()));
        }
        return;
    }
    for h in 0..=n {
        if h == m || labels[m][h].is_none() {
            continue;
        }
        let crosses = heads
            .iter()
            .enumerate()
            .any(|(idx, &h2)| arcs_cross((h, m), (h2, idx + 1)));
        if crosses {
            continue;
        }
        heads.push(h);
        extend(n, labels, heads, found);
        heads.pop();
    }
}

fn arcs_cross(a: (usize, usize), b: (usize, usize)) -> bool {
    let (a0, a1) = (a.0.min(a.1), a.0.max(a.1));
    let (b0, b1) = (b.0.min(b.1), b.0.max(b.1));
    (a0 < b0 && b0 < a1 && a1 < b1) || (b0 < a0 && a0 < b1 && b1 < a1)
}

/// Acyclic, and every position strictly inside an arc descends from its head.
fn is_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    let head_of = |p: usize| heads[p - 1];
    let reaches_root = |start: usize| {
        let mut p = start;
        for _ in 0..=n {
            if p == 0 {
                return true;
            }
            p = head_of(p);
        }
        false
    };
    if !(1..=n).all(reaches_root) {
        return false;
    }
    let descends = |anc: usize, mut p: usize| loop {
        if p == anc {
            return true;
        }
        if p == 0 {
            return false;
        }
        p = head_of(p);
    };
    (1..=n).all(|m| {
        let h = head_of(m);
        (h.min(m) + 1..h.max(m)).all(|k| descends(h, k))
    })
}
