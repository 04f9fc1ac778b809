use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records;
use crate::error::{Error, Result};
use crate::structure::{DependencyEdge, DependencyForest, DependencyTree};
use crate::vocab::LabelVocab;

/// One forest line; edges are `(head, label, modifier, prob)` in canonical
/// `(modifier, head, label)` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestRecord {
    pub id: String,
    pub n: usize,
    pub edges: Vec<(usize, String, usize, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedForest {
    pub id: String,
    pub forest: DependencyForest,
}

/// Line number, id, length and edges of one record.
type RawRecord = (usize, String, usize, Vec<DependencyEdge>);

fn parse_records(text: &str, vocab: &LabelVocab) -> Result<Vec<RawRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, raw) in records(text) {
        let at = |e: Error| Error::Parse {
            line,
            message: e.to_string(),
        };
        let rec: ForestRecord = serde_json::from_str(raw).map_err(|e| at(e.into()))?;
        if !seen.insert(rec.id.clone()) {
            return Err(at(Error::Misaligned(format!("duplicate id {}", rec.id))));
        }
        let edges = rec
            .edges
            .into_iter()
            .map(|(h, label, m, p)| {
                Ok(DependencyEdge::new(
                    h,
                    vocab.forward_label_id(&label)?,
                    m,
                    p,
                ))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(at)?;
        out.push((line, rec.id, rec.n, edges));
    }
    Ok(out)
}

pub fn forests_from_str(text: &str, vocab: &LabelVocab) -> Result<Vec<NamedForest>> {
    parse_records(text, vocab)?
        .into_iter()
        .map(|(line, id, n, edges)| {
            let mut forest = DependencyForest::new(n);
            for e in edges {
                let fresh = forest.insert(e).map_err(|err| Error::Parse {
                    line,
                    message: err.to_string(),
                })?;
                if !fresh {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "duplicate edge ({}, {}, {})",
                            e.head,
                            vocab.label_name(e.label),
                            e.modifier
                        ),
                    });
                }
            }
            Ok(NamedForest { id, forest })
        })
        .collect()
}

pub fn load_forests(path: &Path, vocab: &LabelVocab) -> Result<Vec<NamedForest>> {
    forests_from_str(&fs::read_to_string(path)?, vocab)
}

/// Gold trees share the forest format; each record must form a tree.
pub fn load_trees(path: &Path, vocab: &LabelVocab) -> Result<Vec<(String, DependencyTree)>> {
    parse_records(&fs::read_to_string(path)?, vocab)?
        .into_iter()
        .map(|(line, id, n, edges)| {
            DependencyTree::new(n, edges)
                .map(|t| (id, t))
                .map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Reorder `forests` to follow `ids`; every id must appear exactly once.
pub fn align_forests<'a>(
    ids: impl IntoIterator<Item = &'a str>,
    forests: Vec<NamedForest>,
) -> Result<Vec<DependencyForest>> {
    let mut by_id: HashMap<String, DependencyForest> =
        forests.into_iter().map(|f| (f.id, f.forest)).collect();
    let mut out = Vec::with_capacity(by_id.len());
    for id in ids {
        let forest = by_id
            .remove(id)
            .ok_or_else(|| Error::Misaligned(format!("no forest for instance {id}")))?;
        out.push(forest);
    }
    if let Some(extra) = by_id.keys().min() {
        return Err(Error::Misaligned(format!("forest {extra} has no instance")));
    }
    Ok(out)
}

fn record_line<'a>(
    id: &str,
    n: usize,
    edges: impl Iterator<Item = DependencyEdge> + 'a,
    vocab: &LabelVocab,
) -> Result<String> {
    let rec = ForestRecord {
        id: id.to_owned(),
        n,
        edges: edges
            .map(|e| {
                (
                    e.head,
                    vocab.label_name(e.label).to_owned(),
                    e.modifier,
                    e.prob,
                )
            })
            .collect(),
    };
    let mut line = serde_json::to_string(&rec)?;
    line.push('\n');
    Ok(line)
}

pub fn forests_to_string(forests: &[NamedForest], vocab: &LabelVocab) -> Result<String> {
    let mut out = String::new();
    for f in forests {
        out.push_str(&record_line(&f.id, f.forest.n(), f.forest.edges(), vocab)?);
    }
    Ok(out)
}

pub fn write_forests(forests: &[NamedForest], vocab: &LabelVocab, path: &Path) -> Result<()> {
    fs::write(path, forests_to_string(forests, vocab)?)?;
    Ok(())
}

pub fn trees_to_string(trees: &[(String, DependencyTree)], vocab: &LabelVocab) -> Result<String> {
    let mut out = String::new();
    for (id, t) in trees {
        out.push_str(&record_line(id, t.n(), t.edges().iter().copied(), vocab)?);
    }
    Ok(out)
}

pub fn write_trees(
    trees: &[(String, DependencyTree)],
    vocab: &LabelVocab,
    path: &Path,
) -> Result<()> {
    fs::write(path, trees_to_string(trees, vocab)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::LabelId;

    fn vocab() -> LabelVocab {
        LabelVocab::new(
            vec!["a".into(), "b".into()],
            vec!["None".into()],
            vec!["O".into()],
        )
        .unwrap()
    }

    #[test]
    fn empty_list_gives_empty_text() {
        assert_eq!(forests_to_string(&[], &vocab()).unwrap(), "");
    }

    #[test]
    fn canonical_order_and_round_trip() {
        let mut forest = DependencyForest::new(3);
        forest
            .insert(DependencyEdge::new(2, LabelId(1), 3, 0.123456789))
            .unwrap();
        forest
            .insert(DependencyEdge::new(0, LabelId(0), 2, 0.5))
            .unwrap();
        forest
            .insert(DependencyEdge::new(2, LabelId(0), 1, 1.0))
            .unwrap();
        let named = vec![NamedForest {
            id: "s".into(),
            forest,
        }];
        let text = forests_to_string(&named, &vocab()).unwrap();
        assert_eq!(
            text,
            "{\"id\":\"s\",\"n\":3,\"edges\":[[2,\"a\",1,1.0],[0,\"a\",2,0.5],[2,\"b\",3,0.123456789]]}\n"
        );
        let back = forests_from_str(&text, &vocab()).unwrap();
        assert_eq!(back, named);
    }

    #[test]
    fn duplicate_edges_are_rejected() {
        let text = "{\"id\":\"s\",\"n\":2,\"edges\":[[0,\"a\",1,0.5],[0,\"a\",1,0.5]]}";
        assert!(forests_from_str(text, &vocab()).is_err());
    }

    #[test]
    fn alignment_follows_ids() {
        let named = |id: &str, n| NamedForest {
            id: id.into(),
            forest: DependencyForest::new(n),
        };
        let aligned = align_forests(["b", "a"], vec![named("a", 1), named("b", 2)]).unwrap();
        assert_eq!(
            aligned.iter().map(DependencyForest::n).collect::<Vec<_>>(),
            [2, 1]
        );
        assert!(align_forests(["a", "c"], vec![named("a", 1), named("b", 2)]).is_err());
        assert!(align_forests(["a"], vec![named("a", 1), named("b", 2)]).is_err());
    }
}
