//! Three interactive operations for the static page in `www/`:
//! the position-scaling curve, attention of a small model trained on the
//! keyword corpus over a typed sentence, and TransE on the lattice.
//! The plain functions are native Rust (and tested natively); the
//! `#[wasm_bindgen]` wrappers hand JSON strings to the page.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mnm_core::corpus::{
    build_context, corpus_vocabulary, generate_candidates, ingest_annotations, passes_distance_rules, tokenize,
    AnnotatedDocument, CandidateInstance, ContextPolicy, WordEmbeddings,
};
use mnm_core::kb::{tail_prediction, train_transe, KnowledgeStore, TransEConfig, WordSource};
use mnm_core::model::{forward, position_percentage, Encoder, KnowledgeMode, MnmConfig, MnmParams};
use mnm_core::pipeline::{train, TrainConfig};
use mnm_core::synth::{keyword_corpus, lattice_triples};
use mnm_core::GenePair;

/// Position percentage for every distance `0..=n` at layer `k` of `d`.
pub fn position_curve(n: usize, k: usize, d: usize) -> Result<Vec<f64>, String> {
    if k > d {
        return Err(format!("layer {k} is beyond the last layer {d}"));
    }
    (0..=n)
        .map(|p| position_percentage(p, n, k, d).map_err(|e| e.to_string()))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeDemo {
    /// `(name, x, y)`
    pub entities: Vec<(String, f64, f64)>,
    pub relations: Vec<(String, f64, f64)>,
    pub losses: Vec<f64>,
    pub hits_at_1: f64,
    pub mean_rank: f64,
}

struct NoWords;

impl WordSource for NoWords {
    fn dim(&self) -> usize {
        2
    }

    fn known(&self, _: &str) -> Option<&[f64]> {
        None
    }
}

/// TransE in two dimensions on the 6 × 5 lattice, so the learned
/// embedding can be drawn directly.
pub fn lattice_demo(epochs: usize, seed: u64) -> Result<LatticeDemo, String> {
    let store = KnowledgeStore::from_triples(&lattice_triples(200, seed)).map_err(|e| e.to_string())?;
    let cfg = TransEConfig {
        dim: 2,
        epochs,
        seed,
        ..TransEConfig::default()
    };
    let model = train_transe(&store, &NoWords, &Default::default(), &cfg).map_err(|e| e.to_string())?;
    let report = tail_prediction(&store, &model, 1, cfg.norm).map_err(|e| e.to_string())?;
    let points = |t: &mnm_core::kb::EmbeddingTable| {
        t.ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), t.row(i)[0], t.row(i)[1]))
            .collect()
    };
    Ok(LatticeDemo {
        entities: points(&model.entities),
        relations: points(&model.relations),
        losses: model.epoch_losses,
        hits_at_1: report.hits_at_k,
        mean_rank: report.mean_rank,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub tokens: Vec<String>,
    /// `pathways[p][layer][token]`
    pub weights: Vec<Vec<Vec<f64>>>,
    pub probability: f64,
    pub sentence_distance: usize,
    pub token_distance: usize,
    /// Whether the pair would become a candidate in the full pipeline.
    pub passes_rules: bool,
}

/// A two-layer model trained on the synthetic keyword corpus. Entities
/// are averaged word vectors, so it needs no knowledge base.
pub struct DemoModel {
    words: WordEmbeddings,
    params: MnmParams,
    pub loss_curve: Vec<f64>,
}

impl DemoModel {
    pub fn train(seed: u64, epochs: usize) -> Result<Self, String> {
        let (text, _) = keyword_corpus(200, seed);
        let docs = ingest_annotations(text.as_bytes()).map_err(|e| e.to_string())?.documents;
        let config = MnmConfig {
            layers: 2,
            dim: 16,
            knowledge: KnowledgeMode::AveragedEntities,
            seed,
            ..MnmConfig::default()
        };
        let vocab = corpus_vocabulary(&docs);
        let words = WordEmbeddings::random(vocab.iter().map(String::as_str), config.dim, seed).map_err(|e| e.to_string())?;
        let encoder = Encoder::new(config.knowledge, &words, None, None).map_err(|e| e.to_string())?;
        let data = docs
            .iter()
            .flat_map(|d| generate_candidates(d, &ContextPolicy::default()))
            .map(|c| Ok((encoder.encode(&c)?, c.label.map_or(0, |l| l.as_index()))))
            .collect::<Result<Vec<_>, mnm_core::model::ModelError>>()
            .map_err(|e| e.to_string())?;
        let train_cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 50,
            epochs,
            seed,
            ..TrainConfig::default()
        };
        let params = MnmParams::init(&config).map_err(|e| e.to_string())?;
        let outcome = train(params, &data, &train_cfg).map_err(|e| e.to_string())?;
        Ok(Self {
            words,
            params: outcome.params,
            loss_curve: outcome.loss_curve,
        })
    }

    /// Runs the model on the pair formed by the first whole-token
    /// occurrences of `gene1` and `gene2` in `text`.
    pub fn analyze(&self, text: &str, gene1: &str, gene2: &str) -> Result<Analysis, String> {
        if gene1 == gene2 {
            return Err("the two genes must differ".into());
        }
        let tokens = tokenize(text);
        let find = |g: &str| {
            tokens
                .iter()
                .find(|t| t.text == g)
                .ok_or_else(|| format!("{g:?} is not a token of the sentence"))
        };
        let (a, b) = (find(gene1)?, find(gene2)?);
        let mut raw: Vec<(usize, usize, String, String)> = [a, b]
            .iter()
            .map(|t| (t.start, t.end, t.text.clone(), t.text.clone()))
            .collect();
        raw.sort();
        // the whole text is the title; mention offsets are its char offsets
        let (doc, _) = AnnotatedDocument::build("demo", text, "", raw, None);
        if doc.mentions.len() != 2 {
            return Err("could not place both mentions".into());
        }
        let (m1, m2) = (&doc.mentions[0], &doc.mentions[1]);
        let sentence_distance = m1.sentence.abs_diff(m2.sentence);
        let token_distance = m2.unit - m1.unit;
        let context = build_context(&doc, m1.unit, m2.unit, &ContextPolicy::default());
        if context.is_empty() {
            return Err("nothing is left between and around the pair".into());
        }
        let candidate = CandidateInstance {
            doc_id: doc.doc_id.clone(),
            pair: GenePair::new(m1.gene_id.clone(), m2.gene_id.clone()),
            gene1: m1.gene_id.clone(),
            mention1: m1.text.clone(),
            gene2: m2.gene_id.clone(),
            mention2: m2.text.clone(),
            p1: m1.unit,
            p2: m2.unit,
            sentence_distance,
            token_distance,
            context,
            label: None,
        };
        let encoder = Encoder::new(self.params.config.knowledge, &self.words, None, None).map_err(|e| e.to_string())?;
        let trace = forward(&self.params, &encoder.encode(&candidate).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        Ok(Analysis {
            tokens: candidate.context.iter().map(|t| t.text.clone()).collect(),
            weights: trace
                .pathways
                .iter()
                .map(|p| p.iter().map(|l| l.weights.clone()).collect())
                .collect(),
            probability: trace.positive_probability(),
            sentence_distance,
            token_distance,
            passes_rules: passes_distance_rules(sentence_distance, token_distance),
        })
    }
}

fn to_js<T: Serialize>(v: Result<T, String>) -> Result<String, JsValue> {
    v.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = positionCurve)]
pub fn position_curve_js(n: usize, k: usize, d: usize) -> Result<String, JsValue> {
    to_js(position_curve(n, k, d))
}

#[wasm_bindgen(js_name = latticeDemo)]
pub fn lattice_demo_js(epochs: usize, seed: u32) -> Result<String, JsValue> {
    to_js(lattice_demo(epochs, u64::from(seed)))
}

#[wasm_bindgen(js_name = DemoModel)]
pub struct DemoModelJs(DemoModel);

#[wasm_bindgen(js_class = DemoModel)]
impl DemoModelJs {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, epochs: usize) -> Result<DemoModelJs, JsValue> {
        DemoModel::train(u64::from(seed), epochs)
            .map(DemoModelJs)
            .map_err(|e| JsValue::from_str(&e))
    }

    #[wasm_bindgen(js_name = finalLoss)]
    pub fn final_loss(&self) -> f64 {
        self.0.loss_curve.last().copied().unwrap_or(f64::NAN)
    }

    pub fn analyze(&self, text: &str, gene1: &str, gene2: &str) -> Result<String, JsValue> {
        to_js(self.0.analyze(text, gene1, gene2))
    }
}
