//! Seeded synthetic corpora with known gold trees and a simulated parser.
//!
//! Each sentence gets a random projective tree with one root. The first
//! mention is a random non-root word and the second mention is its gold
//! head, so the relation, a fixed function of the label on the arc between
//! them, can only be recovered through the dependency structure. Word forms
//! are drawn independently of the tree.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{write_arc_probs, write_corpus, write_trees, write_vocab};
use crate::arcs::ArcProbabilities;
use crate::error::{Error, Result};
use crate::instance::{RelationInstance, Sentence, Span};
use crate::seed::stream;
use crate::structure::{DependencyEdge, DependencyTree};
use crate::vocab::{LabelId, LabelVocab, NONE_RELATION, OUTSIDE_TAG};

pub const SYNTH_TAGS: [&str; 5] = [OUTSIDE_TAG, "B-CHEMICAL", "I-CHEMICAL", "B-GENE", "I-GENE"];

const LABEL_NAMES: [&str; 12] = [
    "root", "nsubj", "obj", "amod", "nmod", "advmod", "compound", "det", "case", "conj", "obl",
    "mark",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Dependency labels including `root`.
    pub num_labels: usize,
    /// Regular relation names; `None` is added.
    pub relations: Vec<String>,
    pub words: usize,
    /// Scale of the gold indicator: the gold arc scores `1 / temperature`.
    pub temperature: f64,
    /// Standard deviation of the Gaussian score noise.
    pub noise: f64,
    /// Arcs below this probability are not stored.
    pub floor: f64,
    pub seed: u64,
    /// Prefix of sentence ids.
    pub id_prefix: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            sentences: 100,
            min_len: 5,
            max_len: 12,
            num_labels: 8,
            relations: vec!["R1".into(), "R2".into(), "R3".into()],
            words: 50,
            temperature: 0.25,
            noise: 1.5,
            floor: super::STORAGE_FLOOR,
            seed: 0,
            id_prefix: "synth".into(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.min_len < 2 || self.min_len > self.max_len {
            return bad(format!(
                "lengths {}..={} need 2 <= min <= max",
                self.min_len, self.max_len
            ));
        }
        if self.num_labels < 2 {
            return bad("at least two dependency labels (root and one more) are needed".into());
        }
        if self.relations.is_empty() || self.relations.iter().any(|r| r == NONE_RELATION) {
            return bad("relations must be non-empty and exclude None".into());
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!("temperature {} must be positive", self.temperature));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise {} must be non-negative", self.noise));
        }
        if !(0.0..1.0).contains(&self.floor) {
            return bad(format!("floor {} not in [0, 1)", self.floor));
        }
        if self.words == 0 {
            return bad("word inventory is empty".into());
        }
        Ok(())
    }

    pub fn vocab(&self) -> Result<LabelVocab> {
        let labels: Vec<String> = (0..self.num_labels)
            .map(|i| {
                LABEL_NAMES
                    .get(i)
                    .map_or_else(|| format!("dep{i}"), |s| (*s).to_owned())
            })
            .collect();
        let mut relations = vec![NONE_RELATION.to_owned()];
        relations.extend(self.relations.iter().cloned());
        LabelVocab::new(
            labels,
            relations,
            SYNTH_TAGS.iter().map(|s| (*s).to_owned()).collect(),
        )
    }

    /// Relation name for a gold label on the arc between the mentions.
    fn relation_for(&self, label: LabelId) -> &str {
        let classes = self.relations.len() + 1;
        match (label.index() - 1) % classes {
            0 => NONE_RELATION,
            k => &self.relations[k - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub vocab: LabelVocab,
    pub instances: Vec<RelationInstance>,
    pub arcs: Vec<ArcProbabilities>,
    pub gold: Vec<DependencyTree>,
}

impl SynthData {
    /// Write `corpus.jsonl`, `arcs.jsonl`, `gold.jsonl` and `vocab.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_corpus(&self.instances, &dir.join("corpus.jsonl"))?;
        write_arc_probs(&self.arcs, &self.vocab, 0.0, &dir.join("arcs.jsonl"))?;
        let named: Vec<(String, DependencyTree)> = self
            .instances
            .iter()
            .zip(&self.gold)
            .map(|(i, t)| (i.id().to_owned(), t.clone()))
            .collect();
        write_trees(&named, &self.vocab, &dir.join("gold.jsonl"))?;
        write_vocab(&self.vocab, &dir.join("vocab.json"))
    }
}

/// Random projective head vector: pick a root inside the span, attach it to
/// `head`, and recurse on both sides.
fn random_heads(lo: usize, hi: usize, head: usize, heads: &mut [usize], rng: &mut impl Rng) {
    if lo > hi {
        return;
    }
    let r = rng.random_range(lo..=hi);
    heads[r] = head;
    if r > lo {
        random_heads(lo, r - 1, r, heads, rng);
    }
    random_heads(r + 1, hi, r, heads, rng);
}

fn sentence(
    spec: &SynthSpec,
    index: usize,
) -> Result<(RelationInstance, ArcProbabilities, DependencyTree)> {
    let mut rng: ChaCha8Rng = stream(spec.seed, &[index as u64]);
    let n = rng.random_range(spec.min_len..=spec.max_len);
    let mut heads = vec![0; n + 1];
    random_heads(1, n, 0, &mut heads, &mut rng);
    let labels: Vec<LabelId> = (0..=n)
        .map(|m| {
            if m == 0 || heads[m] == 0 {
                LabelId(0)
            } else {
                LabelId(rng.random_range(1..spec.num_labels as u32))
            }
        })
        .collect();
    let edges = (1..=n)
        .map(|m| DependencyEdge::new(heads[m], labels[m], m, 1.0))
        .collect();
    let gold = DependencyTree::new(n, edges)?;

    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut probs = ArcProbabilities::new(format!("{}-{index:05}", spec.id_prefix), n);
    for m in 1..=n {
        let mut cands = Vec::with_capacity(n * spec.num_labels);
        for h in (0..=n).filter(|&h| h != m) {
            for l in 0..spec.num_labels as u32 {
                let gold_arc = h == heads[m] && LabelId(l) == labels[m];
                let score = if gold_arc {
                    1.0 / spec.temperature
                } else {
                    0.0
                } + noise.sample(&mut rng);
                cands.push((h, LabelId(l), score));
            }
        }
        let max = cands.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = cands.iter().map(|c| (c.2 - max).exp()).sum();
        for (h, l, s) in cands {
            let p = (s - max).exp() / total;
            if p >= spec.floor && p > 0.0 {
                probs.insert(m, h, l, p)?;
            }
        }
    }

    let dependents: Vec<usize> = (1..=n).filter(|&m| heads[m] != 0).collect();
    let first = dependents[rng.random_range(0..dependents.len())];
    let second = heads[first];
    let mut tags = vec![OUTSIDE_TAG.to_owned(); n];
    tags[first - 1] = "B-CHEMICAL".into();
    tags[second - 1] = "B-GENE".into();
    let tokens = (0..n)
        .map(|_| format!("w{}", rng.random_range(0..spec.words)))
        .collect();
    let inst = RelationInstance {
        sentence: Sentence::new(probs.id(), tokens),
        mention1: Span::single(first),
        mention2: Span::single(second),
        ne_tags: Some(tags),
        relation: spec.relation_for(labels[first]).to_owned(),
    };
    Ok((inst, probs, gold))
}

/// Random sparse arc distribution over `n` words. Each `(head, label)`
/// candidate is kept with probability `keep`; the arc `m - 1 -> m` with label
/// 0 is always kept, so a projective tree exists. With `quantum`, raw weights
/// are rounded up to its multiples, which makes exact ties common.
pub fn random_arc_probs(
    id: impl Into<String>,
    n: usize,
    num_labels: usize,
    keep: f64,
    quantum: Option<f64>,
    rng: &mut impl Rng,
) -> ArcProbabilities {
    let mut probs = ArcProbabilities::new(id, n);
    for m in 1..=n {
        let mut cands = Vec::new();
        for h in (0..=n).filter(|&h| h != m) {
            for l in 0..num_labels as u32 {
                let forced = h + 1 == m && l == 0;
                if forced || rng.random_bool(keep) {
                    let u: f64 = rng.random_range(0.0..1.0);
                    let w = match quantum {
                        Some(q) => ((u / q).floor() + 1.0) * q,
                        None => u + 1e-3,
                    };
                    cands.push((h, LabelId(l), w));
                }
            }
        }
        let total: f64 = cands.iter().map(|c| c.2).sum::<f64>() * rng.random_range(1.0..1.5);
        for (h, l, w) in cands {
            probs
                .insert(m, h, l, w / total)
                .expect("candidates are distinct and valid");
        }
    }
    probs
}

/// Generate a corpus; sentences are independent streams of the seed, so
/// the result does not depend on generation order.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let vocab = spec.vocab()?;
    let rows: Vec<_> = (0..spec.sentences)
        .into_par_iter()
        .map(|i| sentence(spec, i))
        .collect::<Result<_>>()?;
    let mut data = SynthData {
        vocab,
        instances: Vec::with_capacity(rows.len()),
        arcs: Vec::with_capacity(rows.len()),
        gold: Vec::with_capacity(rows.len()),
    };
    for (inst, probs, gold) in rows {
        data.instances.push(inst);
        data.arcs.push(probs);
        data.gold.push(gold);
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_instance;

    fn small() -> SynthSpec {
        SynthSpec {
            sentences: 20,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn gold_trees_and_instances_are_valid() {
        let data = synth_generate(&small()).unwrap();
        for ((inst, gold), arcs) in data.instances.iter().zip(&data.gold).zip(&data.arcs) {
            assert!(validate_instance(inst, &data.vocab).is_empty());
            gold.validate().unwrap();
            assert_eq!(gold.heads()[inst.mention1.start - 1], inst.mention2.start);
            assert_eq!(arcs.n(), inst.sentence.len());
            assert_eq!(gold.edges().iter().filter(|e| e.head == 0).count(), 1);
        }
    }

    #[test]
    fn mass_is_one_without_floor() {
        let spec = SynthSpec {
            floor: 0.0,
            ..small()
        };
        let data = synth_generate(&spec).unwrap();
        for arcs in &data.arcs {
            for m in 1..=arcs.n() {
                assert!((arcs.mass(m) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(
            synth_generate(&small()).unwrap(),
            synth_generate(&small()).unwrap()
        );
        let other = SynthSpec { seed: 1, ..small() };
        assert_ne!(
            synth_generate(&small()).unwrap(),
            synth_generate(&other).unwrap()
        );
    }

    #[test]
    fn infeasible_specs() {
        for spec in [
            SynthSpec {
                min_len: 1,
                ..small()
            },
            SynthSpec {
                min_len: 9,
                max_len: 4,
                ..small()
            },
            SynthSpec {
                temperature: 0.0,
                ..small()
            },
            SynthSpec {
                num_labels: 1,
                ..small()
            },
        ] {
            assert!(synth_generate(&spec).is_err());
        }
    }
}
