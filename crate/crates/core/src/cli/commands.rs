use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{
    corpus_vocabulary, generate_candidates, ingest_annotations, read_candidates, write_candidates, AnnotatedDocument,
    CandidateInstance, IngestResult, WordEmbeddings,
};
use crate::eval::{config_digest, format_table, micro_prf, micro_prf_mapped, write_report_json, MatchMode};
use crate::kb::{load_triples_mapped, merge_stores, tail_prediction, train_transe, EmbeddingTable, IdMapping, KnowledgeStore};
use crate::model::{attention_records, forward, Encoder, KnowledgeMode, MnmConfig, MnmParams, ModelInput};
use crate::pipeline::{
    aggregate_document, cross_validate, gold_pair_sets, merge, predict, read_pair_file, read_predictions,
    rule_prediction_set, train, write_loss_curve, write_predictions, ConfigResult, CvDocument, CvReport,
};
use crate::synth::mention_names;

use super::config::Loaded;
use super::topwords::{read_attention, top_weight_words, write_attention};
use super::{CliError, Command, ModelOverrides};

pub(super) fn dispatch(cmd: &Command) -> Result<(), CliError> {
    let mut l = load(cmd)?;
    match cmd {
        Command::KbTrain { epochs, .. } => {
            if let Some(e) = epochs {
                l.config.transe.epochs = *e;
            }
            finish_setup(&l, cmd)?;
            kb_train(&l)
        }
        Command::Preprocess { .. } => {
            finish_setup(&l, cmd)?;
            preprocess(&l)
        }
        Command::Train { model, epochs, .. } => {
            apply_model(&mut l, model);
            if let Some(e) = epochs {
                l.config.train.epochs = *e;
            }
            finish_setup(&l, cmd)?;
            train_cmd(&l)
        }
        Command::CrossValidate {
            model, epochs, folds, ..
        } => {
            apply_model(&mut l, model);
            if let Some(e) = epochs {
                l.config.train.epochs = *e;
            }
            if let Some(k) = folds {
                l.config.cv.folds = *k;
            }
            finish_setup(&l, cmd)?;
            cross_validate_cmd(&l)
        }
        Command::Predict { model, checkpoint, .. } => {
            apply_model(&mut l, model);
            finish_setup(&l, cmd)?;
            predict_cmd(&l, checkpoint.as_deref())
        }
        Command::Rules { threshold, .. } => {
            if let Some(t) = threshold {
                l.config.rules.threshold = *t;
            }
            finish_setup(&l, cmd)?;
            rules(&l)
        }
        Command::Merge { model, rules, out, .. } => {
            finish_setup(&l, cmd)?;
            merge_cmd(&l, model.as_deref(), rules.as_deref(), out.as_deref())
        }
        Command::Evaluate {
            predictions, gold, mode, ..
        } => {
            if let Some(m) = mode {
                l.config.eval.mode = (*m).into();
            }
            finish_setup(&l, cmd)?;
            evaluate(&l, predictions.as_deref(), gold.as_deref())
        }
        Command::AttentionDump { model, checkpoint, .. } => {
            apply_model(&mut l, model);
            finish_setup(&l, cmd)?;
            attention_dump(&l, checkpoint.as_deref())
        }
        Command::TopWords { k, input, .. } => {
            finish_setup(&l, cmd)?;
            top_words(&l, *k, input.as_deref())
        }
    }
}

fn load(cmd: &Command) -> Result<Loaded, CliError> {
    let common = cmd.common();
    let mut l = Loaded::read(&common.config)?;
    if let Some(dir) = &common.output_dir {
        l.config.output_dir = if dir.is_absolute() {
            dir.clone()
        } else {
            std::env::current_dir()?.join(dir)
        };
    }
    if let Some(s) = common.seed {
        l.config.transe.seed = s;
        l.config.model.seed = s;
        l.config.train.seed = s;
    }
    Ok(l)
}

fn apply_model(l: &mut Loaded, o: &ModelOverrides) {
    let m = &mut l.config.model;
    if let Some(v) = o.layers {
        m.layers = v;
    }
    if let Some(v) = o.variant {
        m.variant = v;
    }
    if let Some(v) = o.knowledge {
        m.knowledge = v;
    }
}

/// Creates the output directory and records the resolved config there.
fn finish_setup(l: &Loaded, cmd: &Command) -> Result<(), CliError> {
    let dir = l.resolve(&l.config.output_dir);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let text = l.config.to_toml()?;
    std::fs::write(l.out(&format!("{}.config.toml", cmd.name())), text)?;
    Ok(())
}

/// Digest of the resolved config; the output directory is left out so the
/// same experiment run in two places reports the same digest.
fn digest(l: &Loaded) -> Result<String, CliError> {
    let mut c = l.config.clone();
    c.output_dir = PathBuf::new();
    Ok(config_digest(&c.to_toml()?))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn with_context<E: Into<CliError>>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| match e.into() {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn read_docs(l: &Loaded) -> Result<IngestResult, CliError> {
    let p = l
        .config
        .paths
        .annotations
        .as_ref()
        .ok_or_else(|| CliError::Usage("paths.annotations is not set".into()))?;
    let path = l.resolve(p);
    ingest_annotations(open(&path)?).map_err(with_context(&path))
}

fn read_store(l: &Loaded) -> Result<KnowledgeStore, CliError> {
    let paths = &l.config.paths;
    if paths.triples.is_empty() {
        return Err(CliError::Usage("paths.triples is empty".into()));
    }
    let mapping = match &paths.id_mapping {
        Some(p) => {
            let path = l.resolve(p);
            Some(IdMapping::read(open(&path)?).map_err(with_context(&path))?)
        }
        None => None,
    };
    let mut store = KnowledgeStore::new();
    for p in &paths.triples {
        let path = l.resolve(p);
        let next = load_triples_mapped(open(&path)?, mapping.as_ref()).map_err(with_context(&path))?;
        store = merge_stores(&store, &next);
    }
    Ok(store)
}

/// Word vectors from `paths.word_vectors`, else the cached `words.vec` in
/// the output directory, else seeded random vectors over the corpus
/// vocabulary (written to `words.vec` for later commands).
fn words(l: &Loaded, docs: Option<&[AnnotatedDocument]>) -> Result<WordEmbeddings, CliError> {
    let dim = l.config.model.dim;
    let seed = l.config.model.seed;
    let (path, generated) = match &l.config.paths.word_vectors {
        Some(p) => (l.resolve(p), false),
        None => (l.out("words.vec"), true),
    };
    if path.exists() {
        let w = WordEmbeddings::read(open(&path)?, seed).map_err(with_context(&path))?;
        if w.dim() != dim {
            return Err(CliError::Usage(format!(
                "{} has dimension {}, model.dim is {dim}",
                path.display(),
                w.dim()
            )));
        }
        return Ok(w);
    }
    if !generated {
        return Err(CliError::Data(format!("cannot open {}: file not found", path.display())));
    }
    let owned;
    let docs = match docs {
        Some(d) => d,
        None => {
            owned = read_docs(l)?.documents;
            &owned
        }
    };
    let vocab = corpus_vocabulary(docs);
    let w = WordEmbeddings::random(vocab.iter().map(String::as_str), dim, seed)?;
    let mut f = create(&path)?;
    w.write(&mut f)?;
    f.flush()?;
    Ok(w)
}

fn kb_train(l: &Loaded) -> Result<(), CliError> {
    let store = read_store(l)?;
    let docs = match &l.config.paths.annotations {
        Some(_) => read_docs(l)?.documents,
        None => Vec::new(),
    };
    let words = words(l, Some(&docs))?;
    let names = mention_names(&docs);
    let model = train_transe(&store, &words, &names, &l.config.transe)?;
    std::fs::create_dir_all(l.out("kb"))?;
    model.entities.save(&l.out("kb/entities"))?;
    model.relations.save(&l.out("kb/relations"))?;
    let mut f = create(&l.out("kb/loss.tsv"))?;
    writeln!(f, "epoch\tloss\ttrain_loss")?;
    for (i, (a, b)) in model.epoch_losses.iter().zip(&model.train_losses).enumerate() {
        writeln!(f, "{}\t{a}\t{b}", i + 1)?;
    }
    f.flush()?;
    let report = tail_prediction(&store, &model, 1, l.config.transe.norm)?;
    let mut f = create(&l.out("kb/link_prediction.json"))?;
    serde_json::to_writer_pretty(&mut f, &report).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    let c = store.counts();
    println!(
        "kb-train: {} triples, {} entities, {} relations; final loss {:.6}; hits@1 {:.4}",
        c.triples,
        c.entities,
        c.relations,
        model.epoch_losses.last().copied().unwrap_or(0.0),
        report.hits_at_k
    );
    Ok(())
}

fn preprocess(l: &Loaded) -> Result<(), CliError> {
    let ingest = read_docs(l)?;
    let policy = &l.config.context;
    let candidates: Vec<CandidateInstance> = ingest
        .documents
        .par_iter()
        .map(|d| generate_candidates(d, policy))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let mut f = create(&l.out("candidates.jsonl"))?;
    write_candidates(&mut f, &candidates)?;
    f.flush()?;
    let positives = candidates.iter().filter(|c| c.label.map(|x| x.as_index()) == Some(1)).count();
    let labelled = candidates.iter().filter(|c| c.label.is_some()).count();
    println!(
        "preprocess: {} documents, {} mentions ({} dropped), {} candidates ({} positive, {} negative, {} unlabelled)",
        ingest.documents.len(),
        ingest.documents.iter().map(|d| d.mentions.len()).sum::<usize>(),
        ingest.dropped_mentions,
        candidates.len(),
        positives,
        labelled - positives,
        candidates.len() - labelled
    );
    Ok(())
}

fn read_candidate_file(l: &Loaded) -> Result<Vec<CandidateInstance>, CliError> {
    let path = l.out("candidates.jsonl");
    if !path.exists() {
        return Err(CliError::Data(format!("{} not found; run preprocess first", path.display())));
    }
    read_candidates(open(&path)?).map_err(with_context(&path))
}

/// Trained knowledge tables needed by `config.knowledge`.
struct KbTables {
    entities: Option<EmbeddingTable>,
    relations: Option<(KnowledgeStore, EmbeddingTable)>,
}

fn kb_tables(l: &Loaded, config: &MnmConfig) -> Result<KbTables, CliError> {
    let load = |name: &str| -> Result<EmbeddingTable, CliError> {
        let stem = l.out(name);
        let t = EmbeddingTable::load(&stem)
            .map_err(|e| CliError::Data(format!("{}: {e}; run kb-train first", stem.display())))?;
        if t.dim() != config.dim {
            return Err(CliError::Usage(format!(
                "{} has dimension {}, model.dim is {}",
                stem.display(),
                t.dim(),
                config.dim
            )));
        }
        Ok(t)
    };
    let entities = if config.knowledge.uses_kb_entities() {
        Some(load("kb/entities")?)
    } else {
        None
    };
    let relations = if config.knowledge.uses_relation() {
        Some((read_store(l)?, load("kb/relations")?))
    } else {
        None
    };
    Ok(KbTables { entities, relations })
}

fn encoder<'a>(config: &MnmConfig, words: &'a WordEmbeddings, kb: &'a KbTables) -> Result<Encoder<'a>, CliError> {
    Ok(Encoder::new(
        config.knowledge,
        words,
        kb.entities.as_ref(),
        kb.relations.as_ref().map(|(s, r)| (s, r)),
    )?)
}

fn labelled(encoder: &Encoder<'_>, candidates: &[CandidateInstance]) -> Result<Vec<(ModelInput, usize)>, CliError> {
    candidates
        .par_iter()
        .map(|c| {
            let label = c.label.ok_or_else(|| {
                CliError::Data(format!(
                    "candidate {} {} has no label; the annotation file carries no relation lines",
                    c.doc_id, c.pair
                ))
            })?;
            Ok((encoder.encode(c)?, label.as_index()))
        })
        .collect()
}

fn train_cmd(l: &Loaded) -> Result<(), CliError> {
    let config = &l.config.model;
    config.validate()?;
    let candidates = read_candidate_file(l)?;
    let words = words(l, None)?;
    let kb = kb_tables(l, config)?;
    let enc = encoder(config, &words, &kb)?;
    let data = labelled(&enc, &candidates)?;
    let outcome = train(MnmParams::init(config)?, &data, &l.config.train)?;
    let mut f = create(&l.out("model.ckpt"))?;
    outcome.params.write_checkpoint(&mut f)?;
    f.flush()?;
    let mut f = create(&l.out("loss.tsv"))?;
    write_loss_curve(&mut f, &outcome.loss_curve)?;
    f.flush()?;
    println!(
        "train: {} instances, {} epochs, final loss {:.6}",
        data.len(),
        outcome.loss_curve.len(),
        outcome.loss_curve.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

fn cross_validate_cmd(l: &Loaded) -> Result<(), CliError> {
    let grid = l.config.grid()?;
    for g in &grid {
        g.validate()?;
    }
    let docs = read_docs(l)?.documents;
    let candidates = read_candidate_file(l)?;
    let words = words(l, Some(&docs))?;
    // the union of what any grid entry needs
    let needs = MnmConfig {
        knowledge: KnowledgeMode::Full,
        ..l.config.model.clone()
    };
    let any_kb = grid.iter().any(|g| g.knowledge.uses_kb_entities() || g.knowledge.uses_relation());
    let kb = if any_kb {
        kb_tables(l, &needs)?
    } else {
        KbTables {
            entities: None,
            relations: None,
        }
    };
    let mut by_doc: BTreeMap<&str, Vec<&CandidateInstance>> = BTreeMap::new();
    for c in &candidates {
        by_doc.entry(&c.doc_id).or_default().push(c);
    }
    // encodings depend on the knowledge mode, so each grid entry gets its own
    let mut results: Vec<ConfigResult> = Vec::new();
    let mut selected = 0;
    for (gi, g) in grid.iter().enumerate() {
        let enc = encoder(g, &words, &kb)?;
        let cv_docs = docs
            .iter()
            .map(|d| {
                let gold = d.gold_pairs.clone().ok_or_else(|| {
                    CliError::Data(format!("document {} has no gold relations", d.doc_id))
                })?;
                let instances = by_doc
                    .get(d.doc_id.as_str())
                    .map(|cs| {
                        cs.iter()
                            .map(|c| {
                                let label = c.label.map(|x| x.as_index()).unwrap_or(0);
                                Ok((c.pair.clone(), enc.encode(c)?, label))
                            })
                            .collect::<Result<Vec<_>, CliError>>()
                    })
                    .transpose()?
                    .unwrap_or_default();
                Ok(CvDocument {
                    doc_id: d.doc_id.clone(),
                    gold,
                    instances,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let report = cross_validate(&cv_docs, l.config.cv.folds, std::slice::from_ref(g), &l.config.train)?;
        let r = report.results.into_iter().next().expect("one config");
        println!(
            "cross-validate: layers={} variant={} knowledge={} mean F1 {:.4}",
            g.layers,
            g.variant.name(),
            g.knowledge.name(),
            r.mean_f1
        );
        // first config wins ties
        if gi > 0 && r.mean_f1 > results[selected].mean_f1 {
            selected = gi;
        }
        results.push(r);
    }
    let report = CvReport { results, selected };
    let mut f = create(&l.out("cv.json"))?;
    serde_json::to_writer_pretty(&mut f, &report).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    let s = report.selected_config();
    println!(
        "cross-validate: selected layers={} variant={} knowledge={}",
        s.layers,
        s.variant.name(),
        s.knowledge.name()
    );
    Ok(())
}

/// Loads a checkpoint; its architecture must agree with `[model]` (seeds
/// may differ).
fn load_checkpoint(l: &Loaded, path: Option<&Path>) -> Result<MnmParams, CliError> {
    let path = path.map(Path::to_path_buf).unwrap_or_else(|| l.out("model.ckpt"));
    let mut f = open(&path)?;
    let params = MnmParams::read_checkpoint(&mut f, None).map_err(with_context(&path))?;
    let want = MnmConfig {
        seed: params.config.seed,
        ..l.config.model.clone()
    };
    if params.config != want {
        return Err(CliError::Usage(format!(
            "{} was trained with {:?}, the config asks for {:?}",
            path.display(),
            params.config,
            want
        )));
    }
    Ok(params)
}

fn predict_cmd(l: &Loaded, checkpoint: Option<&Path>) -> Result<(), CliError> {
    let params = load_checkpoint(l, checkpoint)?;
    let candidates = read_candidate_file(l)?;
    let words = words(l, None)?;
    let kb = kb_tables(l, &params.config)?;
    let enc = encoder(&params.config, &words, &kb)?;
    let instances = predict(&params, &enc, &candidates)?;
    let set = aggregate_document(&instances);
    let mut f = create(&l.out("predictions.tsv"))?;
    write_predictions(&mut f, &set)?;
    f.flush()?;
    println!(
        "predict: {} candidates, {} positive instances, {} document-level pairs",
        instances.len(),
        instances.iter().filter(|p| p.positive).count(),
        set.len()
    );
    Ok(())
}

fn rules(l: &Loaded) -> Result<(), CliError> {
    let docs = read_docs(l)?.documents;
    let set = rule_prediction_set(&docs, l.config.rules.threshold);
    let mut f = create(&l.out("rules.tsv"))?;
    write_predictions(&mut f, &set)?;
    f.flush()?;
    println!("rules: {} pairs over {} documents", set.len(), docs.len());
    Ok(())
}

fn merge_cmd(l: &Loaded, model: Option<&Path>, rules: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let model = model.map(Path::to_path_buf).unwrap_or_else(|| l.out("predictions.tsv"));
    let rules = rules.map(Path::to_path_buf).unwrap_or_else(|| l.out("rules.tsv"));
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| l.out("merged.tsv"));
    let a = read_predictions(open(&model)?).map_err(with_context(&model))?;
    let b = read_predictions(open(&rules)?).map_err(with_context(&rules))?;
    let merged = merge(&a, &b);
    let mut f = create(&out)?;
    write_predictions(&mut f, &merged)?;
    f.flush()?;
    println!("merge: {} + {} -> {} pairs", a.len(), b.len(), merged.len());
    Ok(())
}

fn evaluate(l: &Loaded, predictions: Option<&Path>, gold: Option<&Path>) -> Result<(), CliError> {
    let pred_path = predictions.map(Path::to_path_buf).unwrap_or_else(|| l.out("predictions.tsv"));
    let predicted = read_pair_file(open(&pred_path)?).map_err(with_context(&pred_path))?;
    let gold = match gold {
        Some(p) => read_pair_file(open(p)?).map_err(with_context(p))?,
        None => {
            let docs = read_docs(l)?.documents;
            if docs.iter().all(|d| d.gold_pairs.is_none()) {
                return Err(CliError::Data(
                    "the annotation file has no relation lines; pass --gold".into(),
                ));
            }
            gold_pair_sets(&docs)
        }
    };
    let mut report = match l.config.eval.mode {
        MatchMode::Exact => micro_prf(&gold, &predicted),
        MatchMode::Mapped => {
            let p = l
                .config
                .paths
                .eval_mapping
                .as_ref()
                .ok_or_else(|| CliError::Usage("eval.mode = \"mapped\" needs paths.eval_mapping".into()))?;
            let path = l.resolve(p);
            let mapping = IdMapping::read(open(&path)?).map_err(with_context(&path))?;
            micro_prf_mapped(&gold, &predicted, &mapping)
        }
    };
    report.config_digest = Some(digest(l)?);
    let mut f = create(&l.out("report.json"))?;
    write_report_json(&mut f, &report)?;
    f.flush()?;
    let table = format_table(&report);
    std::fs::write(l.out("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn attention_dump(l: &Loaded, checkpoint: Option<&Path>) -> Result<(), CliError> {
    let params = load_checkpoint(l, checkpoint)?;
    let candidates = read_candidate_file(l)?;
    let words = words(l, None)?;
    let kb = kb_tables(l, &params.config)?;
    let enc = encoder(&params.config, &words, &kb)?;
    let records = candidates
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let trace = forward(&params, &enc.encode(c)?)?;
            Ok(attention_records(i, c, &trace))
        })
        .collect::<Result<Vec<_>, CliError>>()?
        .concat();
    let mut f = create(&l.out("attention.jsonl"))?;
    write_attention(&mut f, &records)?;
    f.flush()?;
    println!("attention-dump: {} records for {} candidates", records.len(), candidates.len());
    Ok(())
}

fn top_words(l: &Loaded, k: usize, input: Option<&Path>) -> Result<(), CliError> {
    let path = input.map(Path::to_path_buf).unwrap_or_else(|| l.out("attention.jsonl"));
    let records = read_attention(open(&path)?).map_err(with_context(&path))?;
    let ranked = top_weight_words(&records, k);
    let mut f = create(&l.out("top_words.tsv"))?;
    writeln!(f, "word\tcount")?;
    for (w, c) in &ranked {
        writeln!(f, "{w}\t{c}")?;
        println!("{w}\t{c}");
    }
    f.flush()?;
    Ok(())
}
