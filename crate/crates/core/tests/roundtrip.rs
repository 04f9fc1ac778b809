use depforest::forest::{decode_kbest, edgewise_forest, merge_trees};
use depforest::io::{
    arc_probs_from_str, arc_probs_to_string, corpus_from_str, corpus_to_string, forests_from_str,
    forests_to_string, random_arc_probs, synth_generate, LoadMode, NamedForest, SynthSpec,
};
use depforest::nn::{Model, ModelConfig, Structure};
use depforest::seed::stream;
use depforest::{ArcProbabilities, WordVocab};
use rand::Rng;

fn spec(seed: u64) -> SynthSpec {
    SynthSpec {
        sentences: 8,
        seed,
        floor: if seed.is_multiple_of(2) { 1e-4 } else { 0.0 },
        ..SynthSpec::default()
    }
}

#[test]
fn corpus_files_round_trip() {
    for seed in 0..100 {
        let data = synth_generate(&spec(seed)).unwrap();
        let text = corpus_to_string(&data.instances).unwrap();
        let back = corpus_from_str(&text, &data.vocab, LoadMode::FailFast).unwrap();
        assert!(back.skipped.is_empty());
        assert_eq!(back.instances, data.instances);
        assert_eq!(corpus_to_string(&back.instances).unwrap(), text);
    }
}

#[test]
fn arc_files_round_trip() {
    for seed in 0..100 {
        let data = synth_generate(&spec(seed)).unwrap();
        let mut probs = data.arcs.clone();
        let mut rng = stream(seed, &[9]);
        probs.push(random_arc_probs(
            "extra",
            6,
            data.vocab.num_labels(),
            0.5,
            None,
            &mut rng,
        ));
        let text = arc_probs_to_string(&probs, &data.vocab, 0.0).unwrap();
        let back = arc_probs_from_str(&text, &data.vocab).unwrap();
        assert_eq!(back, probs);
        assert_eq!(arc_probs_to_string(&back, &data.vocab, 0.0).unwrap(), text);
        for (a, b) in back.iter().zip(&probs) {
            for m in 1..=a.n() {
                for (x, y) in a.entries(m).iter().zip(b.entries(m)) {
                    assert_eq!(x.prob.to_bits(), y.prob.to_bits());
                }
            }
        }
    }
}

#[test]
fn storage_floor_drops_small_arcs() {
    let data = synth_generate(&spec(1)).unwrap();
    let text = arc_probs_to_string(&data.arcs, &data.vocab, 0.01).unwrap();
    let back: Vec<ArcProbabilities> = arc_probs_from_str(&text, &data.vocab).unwrap();
    for (a, b) in back.iter().zip(&data.arcs) {
        let kept = b.iter().filter(|(_, e)| e.prob >= 0.01).count();
        assert_eq!(a.num_entries(), kept);
    }
}

#[test]
fn forest_files_round_trip() {
    for seed in 0..100 {
        let data = synth_generate(&spec(seed)).unwrap();
        let mut rng = stream(seed, &[3]);
        let forests: Vec<NamedForest> = data
            .arcs
            .iter()
            .map(|p| {
                let forest = if rng.random_bool(0.5) {
                    edgewise_forest(p, rng.random_range(0.0..0.4))
                } else {
                    merge_trees(&decode_kbest(p, rng.random_range(1..6)).unwrap()).unwrap()
                };
                NamedForest {
                    id: p.id().to_owned(),
                    forest,
                }
            })
            .collect();
        let text = forests_to_string(&forests, &data.vocab).unwrap();
        let back = forests_from_str(&text, &data.vocab).unwrap();
        assert_eq!(back, forests);
        assert_eq!(forests_to_string(&back, &data.vocab).unwrap(), text);
    }
}

#[test]
fn checkpoints_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_generate(&spec(0)).unwrap();
    let words = WordVocab::from_tokens(
        data.instances
            .iter()
            .flat_map(|i| i.sentence.tokens.iter().map(String::as_str)),
    );
    let structures = [Structure::TextOnly, Structure::Tree, Structure::Forest];
    for seed in 0..100u64 {
        let config = ModelConfig {
            word_dim: 3 + (seed % 4) as usize,
            label_dim: 2 + (seed % 3) as usize,
            lstm_dim: 2 + (seed % 5) as usize,
            ner_head: seed % 2 == 0,
            weighted: seed % 3 != 0,
            structure: structures[(seed % 3) as usize],
            seed,
            ..ModelConfig::default()
        };
        let model = Model::new(
            config,
            data.vocab.clone(),
            words.clone(),
            &mut stream(seed, &[0]),
        )
        .unwrap();
        let path = dir.path().join(format!("m{seed}.json"));
        model.save(&path).unwrap();
        let back = Model::load(&path).unwrap();
        assert_eq!(back, model);
        let again = dir.path().join("again.json");
        back.save(&again).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }
}
