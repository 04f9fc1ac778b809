//! Forest diagnostics: density, oracle LAS and mention connectivity.

use crate::error::{Error, Result};
use crate::instance::{RelationInstance, Span};
use crate::structure::{DependencyForest, DependencyTree};

/// Edges per token.
pub fn forest_density(forest: &DependencyForest) -> f64 {
    forest.len() as f64 / forest.n() as f64
}

/// Fraction of gold labeled arcs present anywhere in the forest.
pub fn oracle_las(forest: &DependencyForest, gold: &DependencyTree) -> Result<f64> {
    if forest.n() != gold.n() {
        return Err(Error::LengthMismatch {
            expected: gold.n(),
            found: forest.n(),
        });
    }
    let hits = gold
        .edges()
        .iter()
        .filter(|e| forest.contains(e.head, e.label, e.modifier))
        .count();
    Ok(hits as f64 / gold.n() as f64)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Whether some token of `span1` and some token of `span2` share a connected
/// component of the forest's undirected word graph. Arcs from ROOT do not
/// connect words.
pub fn mention_connectivity(forest: &DependencyForest, span1: Span, span2: Span) -> bool {
    if span1.overlaps(&span2) {
        return true;
    }
    let n = forest.n();
    let mut parent: Vec<usize> = (0..=n).collect();
    for e in forest.edges().filter(|e| e.head != 0) {
        let (a, b) = (find(&mut parent, e.head), find(&mut parent, e.modifier));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let roots1: Vec<usize> = span1
        .positions()
        .filter(|&p| p <= n)
        .map(|p| find(&mut parent, p))
        .collect();
    span2
        .positions()
        .filter(|&p| p <= n)
        .any(|p| roots1.contains(&find(&mut parent, p)))
}

/// Aggregate statistics over a collection of forests.
#[derive(Clone, Debug, PartialEq)]
pub struct ForestStats {
    /// Mean edges per token.
    pub density: f64,
    /// Mean oracle LAS, when gold trees were supplied.
    pub oracle_las: Option<f64>,
    pub connected: Vec<bool>,
    pub connectivity_ratio: f64,
}

pub fn forest_stats(
    forests: &[DependencyForest],
    instances: &[RelationInstance],
    gold: Option<&[DependencyTree]>,
) -> Result<ForestStats> {
    if forests.len() != instances.len() {
        return Err(Error::Misaligned(format!(
            "{} forests for {} instances",
            forests.len(),
            instances.len()
        )));
    }
    if let Some(gold) = gold {
        if gold.len() != forests.len() {
            return Err(Error::Misaligned(format!(
                "{} gold trees for {} forests",
                gold.len(),
                forests.len()
            )));
        }
    }
    if forests.is_empty() {
        return Err(Error::EmptyInput("no forests".into()));
    }

    let count = forests.len() as f64;
    let density = forests.iter().map(forest_density).sum::<f64>() / count;
    let oracle_las = match gold {
        Some(gold) => {
            let mut total = 0.0;
            for (f, g) in forests.iter().zip(gold) {
                total += oracle_las(f, g)?;
            }
            Some(total / count)
        }
        None => None,
    };
    let connected: Vec<bool> = forests
        .iter()
        .zip(instances)
        .map(|(f, inst)| mention_connectivity(f, inst.mention1, inst.mention2))
        .collect();
    let connectivity_ratio = connected.iter().filter(|&&c| c).count() as f64 / count;

    Ok(ForestStats {
        density,
        oracle_las,
        connected,
        connectivity_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Sentence;
    use crate::structure::DependencyEdge;
    use crate::vocab::LabelId;

    fn edge(h: usize, m: usize) -> DependencyEdge {
        DependencyEdge::new(h, LabelId(0), m, 0.5)
    }

    fn forest(n: usize, arcs: &[(usize, usize)]) -> DependencyForest {
        let mut f = DependencyForest::new(n);
        for &(h, m) in arcs {
            f.insert(edge(h, m)).unwrap();
        }
        f
    }

    fn chain_tree() -> DependencyTree {
        DependencyTree::new(4, vec![edge(0, 1), edge(1, 2), edge(2, 3), edge(3, 4)]).unwrap()
    }

    fn instance(n: usize, s1: Span, s2: Span) -> RelationInstance {
        RelationInstance {
            sentence: Sentence::new("x", (0..n).map(|i| format!("w{i}")).collect()),
            mention1: s1,
            mention2: s2,
            ne_tags: None,
            relation: "None".into(),
        }
    }

    #[test]
    fn density_arithmetic() {
        assert_eq!(forest_density(&DependencyForest::new(5)), 0.0);
        let arcs: Vec<_> = (1..=6).flat_map(|m| [(0, m), ((m % 6) + 1, m)]).collect();
        assert_eq!(forest_density(&forest(6, &arcs)), 2.0);
    }

    #[test]
    fn oracle_las_counts_gold_arcs() {
        let gold = chain_tree();
        assert_eq!(
            oracle_las(&DependencyForest::from_tree(&gold), &gold).unwrap(),
            1.0
        );
        assert_eq!(oracle_las(&DependencyForest::new(4), &gold).unwrap(), 0.0);
        let partial = forest(4, &[(0, 1), (1, 2), (2, 3), (2, 4)]);
        assert_eq!(oracle_las(&partial, &gold).unwrap(), 0.75);
        assert!(oracle_las(&DependencyForest::new(3), &gold).is_err());
    }

    #[test]
    fn oracle_las_needs_matching_label() {
        let gold = chain_tree();
        let mut f = DependencyForest::new(4);
        f.insert(DependencyEdge::new(0, LabelId(1), 1, 0.5))
            .unwrap();
        assert_eq!(oracle_las(&f, &gold).unwrap(), 0.0);
    }

    #[test]
    fn connectivity_cases() {
        let empty = DependencyForest::new(3);
        assert!(mention_connectivity(
            &empty,
            Span::new(1, 3),
            Span::new(2, 3)
        ));
        assert!(!mention_connectivity(
            &empty,
            Span::single(1),
            Span::single(3)
        ));
        let chain = forest(3, &[(1, 2), (2, 3)]);
        assert!(mention_connectivity(
            &chain,
            Span::single(1),
            Span::single(3)
        ));
    }

    #[test]
    fn root_arcs_do_not_connect_words() {
        let f = forest(3, &[(0, 1), (0, 3)]);
        assert!(!mention_connectivity(&f, Span::single(1), Span::single(3)));
    }

    #[test]
    fn stats_over_a_collection() {
        let gold = chain_tree();
        let forests = vec![
            DependencyForest::from_tree(&gold),
            forest(
                4,
                &[
                    (0, 1),
                    (1, 2),
                    (2, 3),
                    (3, 4),
                    (0, 2),
                    (0, 3),
                    (0, 4),
                    (2, 1),
                ],
            ),
        ];
        let insts = vec![instance(4, Span::single(1), Span::single(4)); 2];
        let stats = forest_stats(&forests, &insts, Some(&[gold.clone(), gold])).unwrap();
        assert_eq!(stats.density, 1.5);
        assert_eq!(stats.oracle_las, Some(1.0));
        assert_eq!(stats.connectivity_ratio, 1.0);

        let empties = vec![DependencyForest::new(4); 2];
        let stats = forest_stats(&empties, &insts, None).unwrap();
        assert_eq!(stats.density, 0.0);
        assert_eq!(stats.connectivity_ratio, 0.0);
        assert_eq!(stats.oracle_las, None);
    }

    #[test]
    fn stats_reject_misaligned_inputs() {
        let insts = vec![instance(4, Span::single(1), Span::single(4))];
        assert!(forest_stats(&[], &insts, None).is_err());
    }
}
