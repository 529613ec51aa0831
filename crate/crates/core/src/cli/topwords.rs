use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::model::AttentionRecord;

use super::CliError;

pub const DEFAULT_TOP_WORDS: usize = 20;

/// For every (instance, pathway) take the token with the largest weight at
/// the last layer (earliest position on ties) and rank tokens by how often
/// they win; equal counts are ordered by the token text.
pub fn top_weight_words(records: &[AttentionRecord], k: usize) -> Vec<(String, usize)> {
    let mut last: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for r in records {
        let e = last.entry((r.instance, r.pathway)).or_insert(r.layer);
        *e = (*e).max(r.layer);
    }
    let mut best: BTreeMap<(usize, usize), &AttentionRecord> = BTreeMap::new();
    for r in records {
        let key = (r.instance, r.pathway);
        if r.layer != last[&key] {
            continue;
        }
        let e = best.entry(key).or_insert(r);
        if r.weight > e.weight || (r.weight == e.weight && r.position < e.position) {
            *e = r;
        }
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in best.values() {
        *counts.entry(&r.token).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(w, c)| (w.to_string(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

pub fn write_attention<W: Write>(w: &mut W, records: &[AttentionRecord]) -> Result<(), CliError> {
    for r in records {
        serde_json::to_writer(&mut *w, r).map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_attention<R: BufRead>(r: R) -> Result<Vec<AttentionRecord>, CliError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::Data(format!("attention record on line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}
