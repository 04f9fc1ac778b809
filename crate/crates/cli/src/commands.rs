use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use depforest::forest::{
    forest_density, forest_stats, generate_forests, ForestAlgorithm, ForestStats,
};
use depforest::io::{
    align_forests, load_arc_probs, load_corpus, load_forests, load_trees, load_vocab,
    synth_generate, write_forests, LoadMode, NamedForest, SynthSpec,
};
use depforest::nn::{Model, ModelConfig, Structure};
use depforest::train::{
    evaluate, gradcheck_suite, init_model, metric_log, predict_all, prepare_examples, timing_log,
    train as run_training, Example, TrainConfig,
};
use depforest::{
    DependencyForest, DependencyTree, LabelId, LabelVocab, RelationInstance, WordVocab,
};
use serde_json::json;

use crate::{
    Algo, EvalArgs, ForestArgs, GradcheckArgs, PredictArgs, StatsArgs, StructureArg, SynthArgs,
    TrainArgs,
};

fn corpus(path: &Path, vocab: &LabelVocab) -> Result<Vec<RelationInstance>> {
    let load = load_corpus(path, vocab, LoadMode::SkipInvalid)
        .with_context(|| format!("reading {}", path.display()))?;
    for s in &load.skipped {
        eprintln!(
            "warning: {}:{}: skipped: {}",
            path.display(),
            s.line,
            s.reason
        );
    }
    Ok(load.instances)
}

fn aligned_forests(
    path: &Path,
    vocab: &LabelVocab,
    instances: &[RelationInstance],
) -> Result<Vec<DependencyForest>> {
    let forests =
        load_forests(path, vocab).with_context(|| format!("reading {}", path.display()))?;
    align_forests(instances.iter().map(RelationInstance::id), forests)
        .with_context(|| format!("aligning {}", path.display()))
}

fn aligned_trees(
    path: &Path,
    vocab: &LabelVocab,
    instances: &[RelationInstance],
) -> Result<Vec<DependencyTree>> {
    let mut by_id: HashMap<String, DependencyTree> = load_trees(path, vocab)
        .with_context(|| format!("reading {}", path.display()))?
        .into_iter()
        .collect();
    instances
        .iter()
        .map(|inst| {
            by_id
                .remove(inst.id())
                .with_context(|| format!("no gold tree for instance {}", inst.id()))
        })
        .collect()
}

pub fn forest(args: ForestArgs) -> Result<()> {
    println!("config: {args:?}");
    let algo = match (args.algo, args.gamma, args.k) {
        (Algo::Edgewise, gamma, None) => ForestAlgorithm::Edgewise {
            gamma: gamma.unwrap_or(0.2),
        },
        (Algo::Kbest, None, k) => ForestAlgorithm::KBest { k: k.unwrap_or(10) },
        (Algo::Edgewise, _, Some(_)) => bail!("usage: --k applies to --algo kbest only"),
        (Algo::Kbest, Some(_), _) => bail!("usage: --gamma applies to --algo edgewise only"),
    };
    if let ForestAlgorithm::Edgewise { gamma } = algo {
        if !(0.0..=1.0).contains(&gamma) {
            bail!("usage: --gamma {gamma} not in [0, 1]");
        }
    }
    if let ForestAlgorithm::KBest { k: 0 } = algo {
        bail!("usage: --k must be at least 1");
    }
    let vocab =
        load_vocab(&args.vocab).with_context(|| format!("reading {}", args.vocab.display()))?;
    let mut probs = load_arc_probs(&args.arcs, &vocab)
        .with_context(|| format!("reading {}", args.arcs.display()))?;
    if let Some(eps) = args.fallback_eps {
        probs = probs
            .iter()
            .map(|p| p.with_fallback(eps, LabelId(0)))
            .collect::<depforest::Result<_>>()?;
    }
    let mut named = Vec::with_capacity(probs.len());
    for (p, forest) in probs.iter().zip(generate_forests(&probs, algo)) {
        let forest = forest.with_context(|| format!("sentence {}", p.id()))?;
        named.push(NamedForest {
            id: p.id().to_owned(),
            forest,
        });
    }
    write_forests(&named, &vocab, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let edges: usize = named.iter().map(|f| f.forest.len()).sum();
    let nodes: usize = named.iter().map(|f| f.forest.n()).sum();
    let mean = if named.is_empty() {
        0.0
    } else {
        named.iter().map(|f| forest_density(&f.forest)).sum::<f64>() / named.len() as f64
    };
    println!(
        "forests\t{}\nedges\t{edges}\ntokens\t{nodes}\n#Edge/#Node\t{mean:.2}",
        named.len()
    );
    Ok(())
}

/// One row per forest file; `LAS` is `-` without gold trees.
pub fn stats_table(rows: &[(String, ForestStats)]) -> String {
    let mut out = String::from("forests\t#Edge/#Node\tLAS\tConn. Ratio(%)\n");
    for (name, s) in rows {
        let las = s
            .oracle_las
            .map_or_else(|| "-".to_owned(), |l| format!("{:.1}", 100.0 * l));
        writeln!(
            out,
            "{name}\t{:.2}\t{las}\t{:.1}",
            s.density,
            100.0 * s.connectivity_ratio
        )
        .expect("writing to a string");
    }
    out
}

pub fn stats(args: StatsArgs) -> Result<()> {
    println!("config: {args:?}");
    let vocab =
        load_vocab(&args.vocab).with_context(|| format!("reading {}", args.vocab.display()))?;
    let instances = corpus(&args.corpus, &vocab)?;
    let gold = match &args.gold {
        Some(path) => Some(aligned_trees(path, &vocab, &instances)?),
        None => None,
    };
    let mut rows = Vec::with_capacity(args.forests.len());
    for path in &args.forests {
        let forests = aligned_forests(path, &vocab, &instances)?;
        let stats = forest_stats(&forests, &instances, gold.as_deref())?;
        rows.push((path.display().to_string(), stats));
    }
    print!("{}", stats_table(&rows));
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<()> {
    println!("config: {args:?}");
    let spec = SynthSpec {
        sentences: args.sentences,
        min_len: args.min_len,
        max_len: args.max_len,
        num_labels: args.labels,
        relations: args.relations,
        words: args.words,
        temperature: args.temperature,
        noise: args.noise,
        floor: args.floor,
        seed: args.seed,
        id_prefix: args.id_prefix,
    };
    let data = synth_generate(&spec)?;
    data.write(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("sentences\t{}", data.instances.len());
    Ok(())
}

impl From<StructureArg> for Structure {
    fn from(s: StructureArg) -> Self {
        match s {
            StructureArg::Textonly => Structure::TextOnly,
            StructureArg::Tree => Structure::Tree,
            StructureArg::Forest => Structure::Forest,
        }
    }
}

fn examples(
    model: &Model,
    corpus_path: &Path,
    forests: Option<&Path>,
    vocab: &LabelVocab,
) -> Result<(Vec<RelationInstance>, Vec<Example>)> {
    let instances = corpus(corpus_path, vocab)?;
    let structures = if model.config.structure.uses_graph() {
        let path = forests
            .with_context(|| format!("structure {} needs forests", model.config.structure))?;
        Some(aligned_forests(path, vocab, &instances)?)
    } else {
        None
    };
    let examples = prepare_examples(model, &instances, structures.as_deref())?;
    Ok((instances, examples))
}

pub fn train(args: TrainArgs) -> Result<()> {
    println!("config: {args:?}");
    let vocab =
        load_vocab(&args.vocab).with_context(|| format!("reading {}", args.vocab.display()))?;
    let train_instances = corpus(&args.train, &vocab)?;
    let words = WordVocab::from_tokens(
        train_instances
            .iter()
            .flat_map(|i| i.sentence.tokens.iter().map(String::as_str)),
    );
    let model_config = ModelConfig {
        word_dim: args.word_dim,
        label_dim: args.label_dim,
        lstm_dim: args.lstm_dim,
        steps: args.steps,
        dropout: args.dropout,
        weighted: args.weighted,
        ner_head: args.ner,
        freeze_embeddings: args.freeze_embeddings,
        structure: args.structure.into(),
        seed: args.seed,
    };
    model_config.validate()?;
    let train_config = TrainConfig {
        lr: args.lr,
        batch_size: args.batch_size,
        l2: args.l2,
        epochs: args.epochs,
        use_ner: args.ner,
        seed: args.seed,
        patience: args.patience,
    };
    train_config.validate()?;
    let model = init_model(model_config, vocab.clone(), words)?;
    let (_, train_set) = examples(&model, &args.train, args.train_forests.as_deref(), &vocab)?;
    let (_, dev_set) = examples(&model, &args.dev, args.dev_forests.as_deref(), &vocab)?;
    println!(
        "train\t{}\ndev\t{}\nparameters\t{}",
        train_set.len(),
        dev_set.len(),
        model.params.parameter_count()
    );

    let outcome = run_training(model, &train_set, &dev_set, &train_config, |r| {
        eprintln!(
            "epoch {:>3}  loss {:.6}  dev P {:.4} R {:.4} F1 {:.4}  {:.2}s",
            r.epoch, r.train_loss, r.dev.precision, r.dev.recall, r.dev.f1, r.wall_secs
        );
    })?;
    fs::write(&args.log, metric_log(&outcome.log))
        .with_context(|| format!("writing {}", args.log.display()))?;
    if let Some(path) = &args.timing {
        fs::write(path, timing_log(&outcome.log))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    outcome
        .best
        .save(&args.model_out)
        .with_context(|| format!("writing {}", args.model_out.display()))?;
    let best_f1 = outcome
        .log
        .iter()
        .find(|r| r.epoch == outcome.best_epoch)
        .map_or(0.0, |r| r.dev.f1);
    println!(
        "best_epoch\t{}\nbest_dev_f1\t{best_f1:.4}",
        outcome.best_epoch
    );
    Ok(())
}

fn load_model(path: &Path, vocab_path: &Path) -> Result<(Model, LabelVocab)> {
    let model = Model::load(path).with_context(|| format!("reading {}", path.display()))?;
    let vocab =
        load_vocab(vocab_path).with_context(|| format!("reading {}", vocab_path.display()))?;
    model.check_vocab(&vocab)?;
    Ok((model, vocab))
}

pub fn eval(args: EvalArgs) -> Result<()> {
    println!("config: {args:?}");
    let (model, vocab) = load_model(&args.model, &args.vocab)?;
    let (_, examples) = examples(&model, &args.corpus, args.forests.as_deref(), &vocab)?;
    let report = evaluate(&model, &examples, args.external_gold_count)?;
    println!(
        "precision\t{:.4}\nrecall\t{:.4}\nf1\t{:.4}",
        report.precision, report.recall, report.f1
    );
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    println!("config: {args:?}");
    let (model, vocab) = load_model(&args.model, &args.vocab)?;
    let (instances, examples) = examples(&model, &args.corpus, args.forests.as_deref(), &vocab)?;
    let predictions = predict_all(&model, &examples)?;
    let mut out = String::new();
    for (inst, (rel, prob)) in instances.iter().zip(predictions) {
        let line = json!({ "id": inst.id(), "relation": vocab.relations()[rel], "prob": prob });
        writeln!(out, "{line}").expect("writing to a string");
    }
    fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("predictions\t{}", instances.len());
    Ok(())
}

pub fn gradcheck(args: GradcheckArgs) -> Result<()> {
    println!("config: {args:?}");
    let results = gradcheck_suite(args.seed)?;
    let mut max = 0.0_f64;
    for (case, report) in &results {
        println!(
            "{}\t{:.3e}\t{}\t{}",
            case.name(),
            report.max_rel_error,
            report.worst,
            report.checked
        );
        max = max.max(report.max_rel_error);
    }
    println!("max_rel_error\t{max:.3e}");
    if max.is_nan() || max > args.tolerance {
        bail!(
            "relative gradient error {max:.3e} exceeds {:.1e}",
            args.tolerance
        );
    }
    Ok(())
}
