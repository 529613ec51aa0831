//! Seeded synthetic data: the lattice knowledge base, the keyword corpus
//! used for overfitting checks and random annotated documents whose
//! mention layout is known independently of the parser.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::AnnotatedDocument;
use crate::kb::Triple;
use crate::numerics::{seeded_rng, Rng64};

pub const LATTICE_WIDTH: usize = 6;
pub const LATTICE_HEIGHT: usize = 5;
pub const LATTICE_RELATIONS: [(&str, usize, usize); 3] = [("east", 1, 0), ("north", 0, 1), ("northeast", 1, 1)];

pub fn lattice_entity(x: usize, y: usize) -> String {
    format!("n{x}_{y}")
}

/// `records` triples drawn with replacement from the translations of a
/// 6 × 5 grid (30 entities, 3 relations). Duplicates are kept; a store
/// built from them holds at most 69 distinct facts.
pub fn lattice_triples(records: usize, seed: u64) -> Vec<Triple> {
    let mut rng = seeded_rng(seed);
    (0..records)
        .map(|_| {
            let (name, dx, dy) = LATTICE_RELATIONS[rng.random_range(0..LATTICE_RELATIONS.len())];
            let x = rng.random_range(0..LATTICE_WIDTH - dx);
            let y = rng.random_range(0..LATTICE_HEIGHT - dy);
            Triple::new(lattice_entity(x, y), name, lattice_entity(x + dx, y + dy))
        })
        .collect()
}

const POSITIVE_TEMPLATES: [&str; 3] = [
    "{A} mutation abolishes binding to {B} in vitro.",
    "Mutant {A} disrupts the interaction with {B} in cells.",
    "The {A} variant impairs complex formation with {B} markedly.",
];

const NEGATIVE_TEMPLATES: [&str; 3] = [
    "{A} expression was measured alongside {B} in tissue.",
    "Levels of {A} and of the {B} protein were recorded separately.",
    "The {A} transcript was quantified next to {B} in serum.",
];

const FILLERS: [&str; 4] = [
    "Samples were collected from patients.",
    "We analysed sequencing data from two cohorts.",
    "Results were confirmed in replicate experiments.",
    "Clinical records were reviewed retrospectively.",
];

pub const KEYWORD_GENES: usize = 24;

pub fn keyword_gene_id(i: usize) -> String {
    (1001 + i).to_string()
}

pub fn keyword_gene_symbol(i: usize) -> String {
    format!("PRT{}", i + 1)
}

/// The keyword corpus: `docs` abstracts, each with exactly two gene
/// mentions in one template sentence. Even documents use an interaction
/// template and carry a gold relation; odd ones use a neutral template.
/// Returns the annotation text and the knowledge-base triples.
pub fn keyword_corpus(docs: usize, seed: u64) -> (String, Vec<Triple>) {
    let mut rng = seeded_rng(seed);
    let mut text = String::new();
    let mut triples = Vec::new();
    for d in 0..docs {
        let doc_id = format!("{}", 9000 + d);
        let a = rng.random_range(0..KEYWORD_GENES);
        let b = (a + rng.random_range(1..KEYWORD_GENES)) % KEYWORD_GENES;
        let positive = d % 2 == 0;
        let template = if positive {
            POSITIVE_TEMPLATES.choose(&mut rng)
        } else {
            NEGATIVE_TEMPLATES.choose(&mut rng)
        }
        .expect("non-empty");
        let title = format!("Protein variant report {}", d + 1);
        let lead = FILLERS.choose(&mut rng).expect("non-empty");
        let tail = FILLERS.choose(&mut rng).expect("non-empty");
        let (sa, sb) = (keyword_gene_symbol(a), keyword_gene_symbol(b));
        let sentence = template.replace("{A}", &sa).replace("{B}", &sb);
        let abstract_text = format!("{lead} {sentence} {tail}");
        let base = title.len() + 1 + lead.len() + 1;
        let pa = base + sentence.find(&sa).expect("placed");
        let pb = base + sentence.rfind(&sb).expect("placed");
        let (ia, ib) = (keyword_gene_id(a), keyword_gene_id(b));
        let _ = writeln!(text, "{doc_id}|t|{title}");
        let _ = writeln!(text, "{doc_id}|a|{abstract_text}");
        let _ = writeln!(text, "{doc_id}\t{pa}\t{}\t{sa}\tGene\t{ia}", pa + sa.len());
        let _ = writeln!(text, "{doc_id}\t{pb}\t{}\t{sb}\tGene\t{ib}", pb + sb.len());
        if positive {
            let _ = writeln!(text, "{doc_id}\tPPIm\t{ia}\t{ib}");
        }
        text.push('\n');
        // the knowledge base knows most interacting pairs and a few others
        if (positive && rng.random_bool(0.6)) || (!positive && rng.random_bool(0.1)) {
            triples.push(Triple::new(ia.clone(), "interacts_with", ib.clone()));
        }
        if rng.random_bool(0.3) {
            triples.push(Triple::new(ia, "coexpressed_with", ib));
        }
    }
    (text, triples)
}

pub const FIXTURE_DOCS: usize = 200;
pub const FIXTURE_SEED: u64 = 7;

/// Contents of the bundled `fixtures/` files that are generated rather
/// than written by hand: the keyword corpus, its knowledge base and a
/// gene → family mapping (three consecutive genes per family).
pub fn keyword_fixture_files() -> Vec<(&'static str, String)> {
    let (corpus, triples) = keyword_corpus(FIXTURE_DOCS, FIXTURE_SEED);
    let mut kb = String::new();
    for t in &triples {
        let _ = writeln!(kb, "{}\t{}\t{}", t.head, t.relation, t.tail);
    }
    let mut mapping = String::new();
    for i in 0..KEYWORD_GENES {
        let _ = writeln!(mapping, "{}\tfam{}", keyword_gene_id(i), i / 3);
    }
    vec![("corpus.pubtator", corpus), ("kb.tsv", kb), ("families.tsv", mapping)]
}

/// Where the generator put one mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedMention {
    pub gene_id: String,
    pub sentence: usize,
    /// Position in the unit sequence (title tokens included).
    pub unit: usize,
}

const WORDS: [&str; 16] = [
    "protein", "binds", "with", "mutant", "cells", "expression", "levels", "wild-type", "12", "3.5",
    "kinase", "domain", "was", "observed", "the", "complex",
];
const PUNCT: [&str; 3] = [",", "(", ")"];
const GENE_SYMBOLS: [&str; 6] = ["ABC1", "DEF2", "GHI3", "JKL4", "MNO5", "PQR6"];

/// A random document plus the independently tracked mention placement.
/// Every word is exactly one token and every sentence ends with a full
/// stop before a capitalised word, so sentence and unit indices can be
/// counted without the tokenizer.
pub fn random_document(rng: &mut Rng64, doc_id: &str, max_sentences: usize) -> (AnnotatedDocument, Vec<PlacedMention>) {
    let title = "Synthetic report";
    let title_units = 2;
    let genes = rng.random_range(2..=GENE_SYMBOLS.len());
    let mut abstract_text = String::new();
    let mut raw = Vec::new();
    let mut placed = Vec::new();
    let mut unit = title_units;
    let sentences = rng.random_range(1..=max_sentences);
    for s in 0..sentences {
        let len = rng.random_range(3..=25);
        for w in 0..len {
            if !abstract_text.is_empty() {
                abstract_text.push(' ');
            }
            let roll: f64 = rng.random();
            if roll < 0.2 {
                let g = rng.random_range(0..genes);
                let start = title.len() + 1 + abstract_text.len();
                abstract_text.push_str(GENE_SYMBOLS[g]);
                raw.push((start, start + GENE_SYMBOLS[g].len(), GENE_SYMBOLS[g].to_string(), format!("g{g}")));
                placed.push(PlacedMention {
                    gene_id: format!("g{g}"),
                    sentence: s + 1,
                    unit,
                });
            } else if roll < 0.28 && w > 0 {
                abstract_text.push_str(PUNCT.choose(rng).expect("non-empty"));
            } else {
                let word = WORDS.choose(rng).expect("non-empty");
                if w == 0 {
                    // capitalise so the previous full stop ends a sentence
                    abstract_text.push('S');
                    abstract_text.push_str(&word.replace(['-', '.'], ""));
                } else {
                    abstract_text.push_str(word);
                }
            }
            unit += 1;
        }
        abstract_text.push('.');
        unit += 1;
    }
    let (doc, dropped) = AnnotatedDocument::build(doc_id, title, &abstract_text, raw, None);
    debug_assert_eq!(dropped, 0);
    (doc, placed)
}

/// Several random documents with ids `r0`, `r1`, …
pub fn random_documents(count: usize, max_sentences: usize, seed: u64) -> Vec<(AnnotatedDocument, Vec<PlacedMention>)> {
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|i| random_document(&mut rng, &format!("r{i}"), max_sentences))
        .collect()
}

/// Gene id → first mention text of every annotated document; used as the
/// name table for knowledge-base initialisation.
pub fn mention_names(docs: &[AnnotatedDocument]) -> BTreeMap<String, String> {
    let mut names = BTreeMap::new();
    for d in docs {
        for m in &d.mentions {
            names.entry(m.gene_id.clone()).or_insert_with(|| m.text.clone());
        }
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_annotations, UnitKind};

    #[test]
    fn lattice_triples_are_translations() {
        let t = lattice_triples(200, 4);
        assert_eq!(t.len(), 200);
        for tr in &t {
            assert_ne!(tr.head, tr.tail);
        }
    }

    #[test]
    fn keyword_corpus_parses_cleanly() {
        let (text, triples) = keyword_corpus(40, 2);
        let r = ingest_annotations(text.as_bytes()).unwrap();
        assert_eq!(r.documents.len(), 40);
        assert_eq!(r.dropped_mentions, 0);
        assert!(r.documents.iter().all(|d| d.mentions.len() == 2 && d.gold_pairs.is_some()));
        assert_eq!(r.documents[0].gold_pairs.as_ref().unwrap().len(), 1);
        assert!(r.documents[1].gold_pairs.as_ref().unwrap().is_empty());
        assert!(!triples.is_empty());
    }

    #[test]
    fn placement_matches_the_parser() {
        for (doc, placed) in random_documents(200, 8, 9) {
            assert_eq!(doc.mentions.len(), placed.len(), "{}", doc.text);
            for (m, p) in doc.mentions.iter().zip(&placed) {
                assert_eq!((m.sentence, m.unit), (p.sentence, p.unit), "{}", doc.text);
                assert!(matches!(doc.units[m.unit].kind, UnitKind::Mention(_)));
            }
        }
    }
}
