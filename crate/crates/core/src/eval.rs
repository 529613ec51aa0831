//! Micro-averaged precision, recall and F1 over per-document gene pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kb::IdMapping;
use crate::GenePair;

/// Document id → set of unordered gene pairs.
pub type PairSets = BTreeMap<String, BTreeSet<GenePair>>;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Mapped,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocConfusion {
    pub tp: BTreeSet<GenePair>,
    pub fp: BTreeSet<GenePair>,
    #[serde(rename = "fn")]
    pub fn_: BTreeSet<GenePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: MatchMode,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Pairs that collapsed to a self-pair under the ID mapping (gold plus
    /// predicted); always 0 in exact mode.
    pub dropped_self_pairs: usize,
    pub config_digest: Option<String>,
    pub per_doc: BTreeMap<String, DocConfusion>,
}

/// Precision, recall and F1 from pooled counts, 0 on a zero denominator.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Pools TP/FP/FN over every document of either side, then computes the
/// metrics once. Documents only in `predicted` contribute false positives.
pub fn micro_prf(gold: &PairSets, predicted: &PairSets) -> EvalReport {
    let empty = BTreeSet::new();
    let docs: BTreeSet<&String> = gold.keys().chain(predicted.keys()).collect();
    let mut per_doc = BTreeMap::new();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for doc in docs {
        let g = gold.get(doc).unwrap_or(&empty);
        let p = predicted.get(doc).unwrap_or(&empty);
        let c = DocConfusion {
            tp: g.intersection(p).cloned().collect(),
            fp: p.difference(g).cloned().collect(),
            fn_: g.difference(p).cloned().collect(),
        };
        tp += c.tp.len();
        fp += c.fp.len();
        fn_ += c.fn_.len();
        per_doc.insert(doc.clone(), c);
    }
    let (precision, recall, f1) = prf(tp, fp, fn_);
    EvalReport {
        mode: MatchMode::Exact,
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
        dropped_self_pairs: 0,
        config_digest: None,
        per_doc,
    }
}

/// Replaces both IDs by their group, re-canonicalises and deduplicates.
/// Returns the mapped set and how many pairs collapsed to a self-pair.
pub fn map_pairs(pairs: &BTreeSet<GenePair>, mapping: &IdMapping) -> (BTreeSet<GenePair>, usize) {
    let mut out = BTreeSet::new();
    let mut dropped = 0;
    for p in pairs {
        let mapped = GenePair::new(mapping.apply(p.first()), mapping.apply(p.second()));
        if mapped.is_self_pair() {
            dropped += 1;
        } else {
            out.insert(mapped);
        }
    }
    (out, dropped)
}

pub fn map_pair_sets(sets: &PairSets, mapping: &IdMapping) -> (PairSets, usize) {
    let mut dropped = 0;
    let out = sets
        .iter()
        .map(|(doc, pairs)| {
            let (m, d) = map_pairs(pairs, mapping);
            dropped += d;
            (doc.clone(), m)
        })
        .collect();
    (out, dropped)
}

/// `micro_prf` after mapping both sides through `mapping`.
pub fn micro_prf_mapped(gold: &PairSets, predicted: &PairSets, mapping: &IdMapping) -> EvalReport {
    let (g, dg) = map_pair_sets(gold, mapping);
    let (p, dp) = map_pair_sets(predicted, mapping);
    let mut report = micro_prf(&g, &p);
    report.mode = MatchMode::Mapped;
    report.dropped_self_pairs = dg + dp;
    report
}

/// Hex SHA-256 of a resolved configuration text.
pub fn config_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn write_report_json<W: Write>(w: &mut W, report: &EvalReport) -> Result<(), EvalError> {
    serde_json::to_writer_pretty(&mut *w, report)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_report_json<R: Read>(r: R) -> Result<EvalReport, EvalError> {
    Ok(serde_json::from_reader(r)?)
}

/// Percentages with two decimals, the way result tables usually print them.
pub fn format_table(report: &EvalReport) -> String {
    let mode = match report.mode {
        MatchMode::Exact => "exact",
        MatchMode::Mapped => "mapped",
    };
    let mut s = String::new();
    let _ = writeln!(s, "mode       {mode}");
    let _ = writeln!(s, "TP FP FN   {} {} {}", report.tp, report.fp, report.fn_);
    if report.mode == MatchMode::Mapped {
        let _ = writeln!(s, "self-pairs {}", report.dropped_self_pairs);
    }
    let _ = writeln!(s, "P      R      F");
    let _ = writeln!(
        s,
        "{:.2}  {:.2}  {:.2}",
        report.precision * 100.0,
        report.recall * 100.0,
        report.f1 * 100.0
    );
    if let Some(d) = &report.config_digest {
        let _ = writeln!(s, "config     {d}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(entries: &[(&str, &[(&str, &str)])]) -> PairSets {
        entries
            .iter()
            .map(|(d, ps)| (d.to_string(), ps.iter().map(|(a, b)| GenePair::new(*a, *b)).collect()))
            .collect()
    }

    #[test]
    fn perfect_and_empty() {
        let g = sets(&[("1", &[("a", "b"), ("c", "d")])]);
        let r = micro_prf(&g, &g);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        let r = micro_prf(&g, &PairSets::new());
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_one_two() {
        let g = sets(&[("1", &[("a", "b"), ("a", "c")]), ("2", &[("x", "y"), ("x", "z")])]);
        let p = sets(&[("1", &[("b", "a"), ("a", "c")]), ("3", &[("q", "r")])]);
        let r = micro_prf(&g, &p);
        assert_eq!((r.tp, r.fp, r.fn_), (2, 1, 2));
        assert!((r.precision - 0.6667).abs() < 1e-4);
        assert_eq!(r.recall, 0.5);
        assert!((r.f1 - 0.5714).abs() < 1e-4);
        assert_eq!(r.per_doc["3"].fp.len(), 1);
    }

    #[test]
    fn mapping_collapses_and_drops_self_pairs() {
        let pairs: BTreeSet<GenePair> = [GenePair::new("1", "2"), GenePair::new("1", "3"), GenePair::new("2", "3")]
            .into_iter()
            .collect();
        let (same, d) = map_pairs(&pairs, &IdMapping::default());
        assert_eq!((same, d), (pairs.clone(), 0));
        let m = IdMapping::from_pairs([("2", "H"), ("3", "H")]);
        let (mapped, dropped) = map_pairs(&pairs, &m);
        assert_eq!(mapped, [GenePair::new("1", "H")].into_iter().collect());
        assert_eq!(dropped, 1);
    }

    #[test]
    fn report_round_trips_and_formats() {
        let g = sets(&[("1", &[("a", "b"), ("c", "d"), ("e", "f")])]);
        let p = sets(&[("1", &[("a", "b"), ("x", "y")])]);
        let mut r = micro_prf(&g, &p);
        r.config_digest = Some(config_digest("x = 1\n"));
        let mut buf = Vec::new();
        write_report_json(&mut buf, &r).unwrap();
        assert_eq!(read_report_json(buf.as_slice()).unwrap(), r);
        let t = format_table(&r);
        assert!(t.contains("50.00  33.33  40.00"), "{t}");
    }

    #[test]
    fn paper_style_percentages() {
        let r = EvalReport {
            precision: 0.4032,
            recall: 0.3237,
            f1: 0.3591,
            ..micro_prf(&PairSets::new(), &PairSets::new())
        };
        assert!(format_table(&r).contains("40.32  32.37  35.91"));
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            config_digest("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
