//! Line-delimited JSON file formats and the synthetic corpus generator.
//!
//! Every file holds one JSON record per line in a fixed field order.
//! Floating-point values are written in their shortest round-trip decimal
//! form, so reading a file and writing it back reproduces it byte for byte.

mod arcfile;
mod corpus;
mod forestfile;
mod synth;

use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::vocab::LabelVocab;

pub use self::arcfile::{
    arc_probs_from_str, arc_probs_to_string, load_arc_probs, write_arc_probs, ArcRecord,
    STORAGE_FLOOR,
};
pub use self::corpus::{
    corpus_from_str, corpus_to_string, load_corpus, write_corpus, CorpusLoad, CorpusRecord,
    LoadMode, SkippedRecord,
};
pub use self::forestfile::{
    align_forests, forests_from_str, forests_to_string, load_forests, load_trees, trees_to_string,
    write_forests, write_trees, ForestRecord, NamedForest,
};
pub use self::synth::{random_arc_probs, synth_generate, SynthData, SynthSpec, SYNTH_TAGS};

pub fn load_vocab(path: &Path) -> Result<LabelVocab> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_vocab(vocab: &LabelVocab, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string(vocab)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Non-blank lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line))
        .filter(|(_, line)| !line.trim().is_empty())
}
