use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDocument, CandidateInstance};
use crate::eval::PairSets;
use crate::model::{forward, Encoder, MnmParams};
use crate::GenePair;

use super::PipelineError;

/// Instance-level model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancePrediction {
    pub doc_id: String,
    pub pair: GenePair,
    /// Probability of the positive class.
    pub probability: f64,
    pub positive: bool,
}

/// Scores every candidate; a candidate is positive when its positive-class
/// probability exceeds one half. Output order follows the input.
pub fn predict(
    params: &MnmParams,
    encoder: &Encoder<'_>,
    candidates: &[CandidateInstance],
) -> Result<Vec<InstancePrediction>, PipelineError> {
    candidates
        .par_iter()
        .map(|c| {
            let trace = forward(params, &encoder.encode(c)?)?;
            let probability = trace.positive_probability();
            Ok(InstancePrediction {
                doc_id: c.doc_id.clone(),
                pair: c.pair.clone(),
                probability,
                positive: probability > 0.5,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Model,
    Rule,
    Both,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Model => "model",
            Provenance::Rule => "rule",
            Provenance::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "model" => Some(Provenance::Model),
            "rule" => Some(Provenance::Rule),
            "both" => Some(Provenance::Both),
            _ => None,
        }
    }

    fn union(self, other: Self) -> Self {
        if self == other {
            self
        } else {
            Provenance::Both
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPrediction {
    pub probability: f64,
    pub provenance: Provenance,
}

/// Predicted positive pairs per document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub docs: BTreeMap<String, BTreeMap<GenePair, PairPrediction>>,
}

impl PredictionSet {
    pub fn insert(&mut self, doc_id: &str, pair: GenePair, prediction: PairPrediction) {
        let entry = self.docs.entry(doc_id.to_string()).or_default();
        match entry.get_mut(&pair) {
            Some(existing) => {
                existing.probability = existing.probability.max(prediction.probability);
                existing.provenance = existing.provenance.union(prediction.provenance);
            }
            None => {
                entry.insert(pair, prediction);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.docs.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pair_sets(&self) -> PairSets {
        self.docs
            .iter()
            .map(|(d, ps)| (d.clone(), ps.keys().cloned().collect()))
            .collect()
    }

    /// Every pair with the given probability and provenance.
    pub fn from_pair_sets(sets: &PairSets, probability: f64, provenance: Provenance) -> Self {
        let mut out = Self::default();
        for (doc, pairs) in sets {
            for p in pairs {
                out.insert(doc, p.clone(), PairPrediction { probability, provenance });
            }
        }
        out
    }
}

/// OR-aggregation: a (document, pair) is positive when any of its
/// instances is; the maximum instance probability is kept.
pub fn aggregate_document(predictions: &[InstancePrediction]) -> PredictionSet {
    let mut best: BTreeMap<(&str, &GenePair), (bool, f64)> = BTreeMap::new();
    for p in predictions {
        let e = best.entry((&p.doc_id, &p.pair)).or_insert((false, f64::NEG_INFINITY));
        e.0 |= p.positive;
        e.1 = e.1.max(p.probability);
    }
    let mut out = PredictionSet::default();
    for ((doc, pair), (positive, probability)) in best {
        if positive {
            out.insert(
                doc,
                pair.clone(),
                PairPrediction {
                    probability,
                    provenance: Provenance::Model,
                },
            );
        }
    }
    out
}

pub const DEFAULT_RULE_THRESHOLD: usize = 2;

/// Pairs of distinct gene ids co-mentioned in strictly more than
/// `threshold` sentences.
pub fn rule_pairs(doc: &AnnotatedDocument, threshold: usize) -> BTreeSet<GenePair> {
    let mut per_sentence: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for m in &doc.mentions {
        per_sentence.entry(m.sentence).or_default().insert(&m.gene_id);
    }
    let mut counts: BTreeMap<GenePair, usize> = BTreeMap::new();
    for ids in per_sentence.values() {
        let ids: Vec<&str> = ids.iter().copied().collect();
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                *counts.entry(GenePair::new(ids[i], ids[j])).or_default() += 1;
            }
        }
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c > threshold)
        .map(|(p, _)| p)
        .collect()
}

/// Rule pairs of every document, probability 1.
pub fn rule_prediction_set(docs: &[AnnotatedDocument], threshold: usize) -> PredictionSet {
    let per_doc: Vec<(String, BTreeSet<GenePair>)> = docs
        .par_iter()
        .map(|d| (d.doc_id.clone(), rule_pairs(d, threshold)))
        .collect();
    PredictionSet::from_pair_sets(&per_doc.into_iter().collect(), 1.0, Provenance::Rule)
}

/// Per-document union. A pair found by both sides gets provenance `both`
/// and the larger probability.
pub fn merge(a: &PredictionSet, b: &PredictionSet) -> PredictionSet {
    let mut out = a.clone();
    for (doc, pairs) in &b.docs {
        for (pair, p) in pairs {
            out.insert(doc, pair.clone(), *p);
        }
    }
    out
}

fn format_err(line: usize, reason: impl Into<String>) -> PipelineError {
    PipelineError::Format {
        line,
        reason: reason.into(),
    }
}

/// `doc_id<TAB>gene1<TAB>gene2<TAB>probability<TAB>provenance`, sorted by
/// document then pair.
pub fn write_predictions<W: Write>(w: &mut W, set: &PredictionSet) -> Result<(), PipelineError> {
    for (doc, pairs) in &set.docs {
        for (pair, p) in pairs {
            writeln!(
                w,
                "{doc}\t{}\t{}\t{}\t{}",
                pair.first(),
                pair.second(),
                p.probability,
                p.provenance.name()
            )?;
        }
    }
    Ok(())
}

fn parse_pair(line: usize, a: &str, b: &str) -> Result<GenePair, PipelineError> {
    if a.is_empty() || b.is_empty() {
        return Err(format_err(line, "empty gene id"));
    }
    let pair = GenePair::new(a, b);
    if pair.is_self_pair() {
        return Err(format_err(line, format!("self pair {a}-{a}")));
    }
    Ok(pair)
}

fn records<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, String), PipelineError>> {
    r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() || l.starts_with('#') => None,
        Ok(l) => Some(Ok((i + 1, l.trim_end_matches('\r').to_string()))),
        Err(e) => Some(Err(e.into())),
    })
}

pub fn read_predictions<R: BufRead>(r: R) -> Result<PredictionSet, PipelineError> {
    let mut out = PredictionSet::default();
    for rec in records(r) {
        let (line, text) = rec?;
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() != 5 {
            return Err(format_err(line, format!("expected 5 columns, found {}", cols.len())));
        }
        let pair = parse_pair(line, cols[1], cols[2])?;
        let probability: f64 = cols[3]
            .parse()
            .map_err(|_| format_err(line, format!("bad probability {:?}", cols[3])))?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(format_err(line, format!("probability {probability} outside [0, 1]")));
        }
        let provenance =
            Provenance::parse(cols[4]).ok_or_else(|| format_err(line, format!("bad provenance {:?}", cols[4])))?;
        out.insert(cols[0], pair, PairPrediction { probability, provenance });
    }
    Ok(out)
}

/// Gold or prediction pairs: 3 columns `doc gene1 gene2`, or the 5-column
/// prediction format (extra columns ignored).
pub fn read_pair_file<R: BufRead>(r: R) -> Result<PairSets, PipelineError> {
    let mut out = PairSets::new();
    for rec in records(r) {
        let (line, text) = rec?;
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() != 3 && cols.len() != 5 {
            return Err(format_err(line, format!("expected 3 or 5 columns, found {}", cols.len())));
        }
        let pair = parse_pair(line, cols[1], cols[2])?;
        out.entry(cols[0].to_string()).or_default().insert(pair);
    }
    Ok(out)
}

/// Gold pairs of annotated documents; documents without relation lines
/// are absent.
pub fn gold_pair_sets(docs: &[AnnotatedDocument]) -> PairSets {
    docs.iter()
        .filter_map(|d| d.gold_pairs.as_ref().map(|g| (d.doc_id.clone(), g.clone())))
        .collect()
}

/// `epoch<TAB>mean loss`, epochs counted from 1.
pub fn write_loss_curve<W: Write>(w: &mut W, curve: &[f64]) -> Result<(), PipelineError> {
    writeln!(w, "epoch\tloss")?;
    for (i, l) in curve.iter().enumerate() {
        writeln!(w, "{}\t{l}", i + 1)?;
    }
    Ok(())
}
