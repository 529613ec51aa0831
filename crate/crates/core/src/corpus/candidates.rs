use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::pair::GenePair;

use super::document::{AnnotatedDocument, UnitKind};
use super::tokenize::{is_numeric, is_special};
use super::CorpusError;

/// Placeholder for protein mentions other than the target pair.
pub const GENE_PLACEHOLDER: &str = "gene0";
/// Placeholder for numeric tokens.
pub const NUMBER_PLACEHOLDER: &str = "NUMBER";

/// Candidate rules: sentence distance below this bound...
pub const MAX_SENTENCE_DISTANCE_EXCLUSIVE: usize = 3;
/// ...and token distance strictly between these two.
pub const MIN_TOKEN_DISTANCE_EXCLUSIVE: usize = 3;
pub const MAX_TOKEN_DISTANCE_EXCLUSIVE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextToken {
    pub text: String,
    /// Unit index in the document before masking.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateInstance {
    pub doc_id: String,
    pub pair: GenePair,
    /// Gene id and surface text of the mention at `p1` (first in the text).
    pub gene1: String,
    pub mention1: String,
    pub gene2: String,
    pub mention2: String,
    pub p1: usize,
    pub p2: usize,
    pub sentence_distance: usize,
    pub token_distance: usize,
    pub context: Vec<ContextToken>,
    pub label: Option<Label>,
}

impl CandidateInstance {
    pub fn tokens(&self) -> Vec<&str> {
        self.context.iter().map(|t| t.text.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextPolicy {
    /// Expansion words on each side of the pair.
    pub window: usize,
    /// Tokens without alphanumeric characters that are kept anyway.
    pub keep_special: Vec<String>,
}

impl Default for ContextPolicy {
    fn default() -> Self {
        Self {
            window: 3,
            keep_special: Vec::new(),
        }
    }
}

/// Both candidate rules on a pair of unit positions.
pub fn passes_distance_rules(sentence_distance: usize, token_distance: usize) -> bool {
    sentence_distance < MAX_SENTENCE_DISTANCE_EXCLUSIVE
        && token_distance > MIN_TOKEN_DISTANCE_EXCLUSIVE
        && token_distance < MAX_TOKEN_DISTANCE_EXCLUSIVE
}

/// Masked context for the pair at unit positions `p1 < p2`: `window` units
/// before `p1`, the units strictly between, `window` units after `p2`,
/// truncated at the document bounds. Target mentions are removed, other
/// mentions become `gene0`, numbers become `NUMBER` and special tokens are
/// dropped unless listed in the keep-list.
pub fn build_context(
    doc: &AnnotatedDocument,
    p1: usize,
    p2: usize,
    policy: &ContextPolicy,
) -> Vec<ContextToken> {
    let n = doc.units.len();
    let before = p1.saturating_sub(policy.window)..p1;
    let between = (p1 + 1).min(p2)..p2;
    let after = (p2 + 1).min(n)..(p2 + 1 + policy.window).min(n);
    before
        .chain(between)
        .chain(after)
        .filter_map(|pos| {
            let unit = &doc.units[pos];
            let text = match unit.kind {
                UnitKind::Mention(_) => GENE_PLACEHOLDER.to_string(),
                UnitKind::Word if is_numeric(&unit.text) => NUMBER_PLACEHOLDER.to_string(),
                UnitKind::Word if is_special(&unit.text) => {
                    if policy.keep_special.iter().any(|k| k == &unit.text) {
                        unit.text.clone()
                    } else {
                        return None;
                    }
                }
                UnitKind::Word => unit.text.clone(),
            };
            Some(ContextToken {
                text,
                position: pos,
            })
        })
        .collect()
}

/// Every position-ordered mention pair with distinct gene ids that passes
/// both distance rules and keeps a non-empty context. Labels are set when the document has gold pairs.
pub fn generate_candidates(doc: &AnnotatedDocument, policy: &ContextPolicy) -> Vec<CandidateInstance> {
    let mut out = Vec::new();
    let mentions = &doc.mentions;
    for i in 0..mentions.len() {
        for j in (i + 1)..mentions.len() {
            let (a, b) = if mentions[i].unit <= mentions[j].unit {
                (&mentions[i], &mentions[j])
            } else {
                (&mentions[j], &mentions[i])
            };
            if a.gene_id == b.gene_id {
                continue;
            }
            let sentence_distance = a.sentence.abs_diff(b.sentence);
            let token_distance = b.unit - a.unit;
            if !passes_distance_rules(sentence_distance, token_distance) {
                continue;
            }
            let pair = GenePair::new(a.gene_id.clone(), b.gene_id.clone());
            let label = doc.gold_pairs.as_ref().map(|gold| {
                if gold.contains(&pair) {
                    Label::Positive
                } else {
                    Label::Negative
                }
            });
            let context = build_context(doc, a.unit, b.unit, policy);
            if context.is_empty() {
                // nothing for the memory to hold
                continue;
            }
            out.push(CandidateInstance {
                doc_id: doc.doc_id.clone(),
                gene1: a.gene_id.clone(),
                mention1: a.text.clone(),
                gene2: b.gene_id.clone(),
                mention2: b.text.clone(),
                p1: a.unit,
                p2: b.unit,
                sentence_distance,
                token_distance,
                context,
                pair,
                label,
            });
        }
    }
    out.sort_by_key(|c| (c.p1, c.p2));
    out
}

/// One JSON record per line.
pub fn write_candidates<W: Write>(w: &mut W, candidates: &[CandidateInstance]) -> Result<(), CorpusError> {
    for c in candidates {
        serde_json::to_writer(&mut *w, c)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_candidates<R: BufRead>(r: R) -> Result<Vec<CandidateInstance>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c = serde_json::from_str(&line).map_err(|e| CorpusError::Record {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ingest_annotations;

    fn doc(text: &str) -> AnnotatedDocument {
        ingest_annotations(text.as_bytes()).unwrap().documents.remove(0)
    }

    /// Builds a one-title document from words; `genes` marks (word index, id).
    fn words_doc(words: &[&str], genes: &[(usize, &str)], gold: Option<(&str, &str)>) -> AnnotatedDocument {
        let title = words.join(" ");
        let mut offsets = Vec::new();
        let mut pos = 0;
        for w in words {
            offsets.push(pos);
            pos += w.chars().count() + 1;
        }
        let mut s = format!("1|t|{title}\n1|a|\n");
        for (i, id) in genes {
            let start = offsets[*i];
            s.push_str(&format!("1\t{start}\t{}\t{}\tGene\t{id}\n", start + words[*i].chars().count(), words[*i]));
        }
        if let Some((a, b)) = gold {
            s.push_str(&format!("1\tPPIm\t{a}\t{b}\n"));
        }
        doc(&s)
    }

    #[test]
    fn pair_five_apart_gives_one_candidate() {
        let d = words_doc(&["GA", "strongly", "and", "directly", "binds", "GB", "today"], &[(0, "1"), (5, "2")], None);
        let c = generate_candidates(&d, &ContextPolicy::default());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].token_distance, 5);
        assert_eq!(c[0].label, None);
        assert_eq!(c[0].tokens(), vec!["strongly", "and", "directly", "binds", "today"]);
    }

    #[test]
    fn pair_two_apart_is_rejected() {
        let d = words_doc(&["GA", "binds", "GB"], &[(0, "1"), (2, "2")], None);
        assert!(generate_candidates(&d, &ContextPolicy::default()).is_empty());
    }

    #[test]
    fn pair_three_sentences_apart_is_rejected() {
        let d = doc("1|t|GA is here. One more. Two more. And GB now\n1|a|\n1\t0\t2\tGA\tGene\t1\n1\t36\t38\tGB\tGene\t2\n");
        assert_eq!(d.mentions[1].sentence - d.mentions[0].sentence, 3);
        assert!(generate_candidates(&d, &ContextPolicy::default()).is_empty());
    }

    #[test]
    fn same_gene_pairs_are_skipped() {
        let d = words_doc(&["GA", "a", "b", "c", "d", "GA"], &[(0, "1"), (5, "1")], None);
        assert!(generate_candidates(&d, &ContextPolicy::default()).is_empty());
    }

    #[test]
    fn window_within_bounds_gives_eleven_tokens() {
        let words: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let mut refs: Vec<&str> = words.iter().map(String::as_str).collect();
        refs[4] = "GA";
        refs[10] = "GB";
        let d = words_doc(&refs, &[(4, "1"), (10, "2")], None);
        let ctx = build_context(&d, 4, 10, &ContextPolicy::default());
        assert_eq!(ctx.len(), 11);
        let texts: Vec<&str> = ctx.iter().map(|t| t.text.as_str()).collect();
        assert!(!texts.contains(&"GA") && !texts.contains(&"GB"));
        assert_eq!(texts[0], "w1");
        assert_eq!(texts[10], "w13");
    }

    #[test]
    fn masking_numbers_and_specials() {
        let d = words_doc(
            &["GA", "with", "GC", "at", "3.5", "*", "binds", "GB", "x"],
            &[(0, "1"), (2, "3"), (7, "2")],
            Some(("2", "1")),
        );
        let c: Vec<_> = generate_candidates(&d, &ContextPolicy::default())
            .into_iter()
            .filter(|c| c.pair == GenePair::new("1", "2"))
            .collect();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].tokens(), vec!["with", "gene0", "at", "NUMBER", "binds", "x"]);
        assert_eq!(c[0].label, Some(Label::Positive));
        let keep = ContextPolicy {
            keep_special: vec!["*".into()],
            ..ContextPolicy::default()
        };
        assert!(build_context(&d, 0, 7, &keep).iter().any(|t| t.text == "*"));
    }

    #[test]
    fn candidate_dump_round_trip() {
        let d = words_doc(&["GA", "strongly", "and", "directly", "binds", "GB"], &[(0, "1"), (5, "2")], Some(("1", "2")));
        let c = generate_candidates(&d, &ContextPolicy::default());
        let mut buf = Vec::new();
        write_candidates(&mut buf, &c).unwrap();
        assert_eq!(read_candidates(buf.as_slice()).unwrap(), c);
    }
}
