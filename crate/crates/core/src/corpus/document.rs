use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::pair::GenePair;

use super::tokenize::{segment_at, Sentence, Token};
use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    /// Character offsets into the document text (title, one space, abstract).
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub gene_id: String,
    pub sentence: usize,
    /// Index of the unit standing for this mention.
    pub unit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitKind {
    Word,
    /// Index into `AnnotatedDocument::mentions`.
    Mention(usize),
}

/// One position of the document-global sequence in which every mention is
/// collapsed into a single unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub text: String,
    pub sentence: usize,
    pub kind: UnitKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
    pub mentions: Vec<EntityMention>,
    pub units: Vec<Unit>,
    pub gold_pairs: Option<BTreeSet<GenePair>>,
}

impl AnnotatedDocument {
    /// Segments `title` and `abstract_text`, splits tokens at mention
    /// boundaries and builds the unit sequence. Mentions must already be
    /// validated against the text and sorted by start; overlapping ones are
    /// dropped and counted.
    pub fn build(
        doc_id: impl Into<String>,
        title: &str,
        abstract_text: &str,
        raw_mentions: Vec<(usize, usize, String, String)>,
        gold_pairs: Option<BTreeSet<GenePair>>,
    ) -> (Self, usize) {
        let title_len = title.chars().count();
        let text = format!("{title} {abstract_text}");
        let mut sentences = segment_at(title, 0);
        sentences.extend(segment_at(abstract_text, title_len + 1));

        let mut dropped = 0;
        let mut spans: Vec<(usize, usize, String, String)> = Vec::new();
        for m in raw_mentions {
            if spans.last().is_some_and(|last| m.0 < last.1) {
                dropped += 1;
                continue;
            }
            spans.push(m);
        }

        let mut boundaries: Vec<usize> = spans.iter().flat_map(|m| [m.0, m.1]).collect();
        boundaries.sort_unstable();
        boundaries.dedup();
        let sentences: Vec<Sentence> = sentences
            .into_iter()
            .map(|s| split_tokens(s, &boundaries))
            .collect();

        let mut units = Vec::new();
        let mut mentions: Vec<EntityMention> = Vec::with_capacity(spans.len());
        let mut next = 0;
        for (si, sentence) in sentences.iter().enumerate() {
            for tok in sentence {
                while next < spans.len() && spans[next].1 <= tok.start {
                    if !emitted(&mentions, &spans[next]) {
                        // covers no token
                        dropped += 1;
                    }
                    next += 1;
                }
                match spans.get(next) {
                    Some(span) if tok.start >= span.0 && tok.end <= span.1 => {
                        if !emitted(&mentions, span) {
                            mentions.push(EntityMention {
                                start: span.0,
                                end: span.1,
                                text: span.2.clone(),
                                gene_id: span.3.clone(),
                                sentence: si,
                                unit: units.len(),
                            });
                            units.push(Unit {
                                text: span.2.clone(),
                                sentence: si,
                                kind: UnitKind::Mention(mentions.len() - 1),
                            });
                        }
                        if tok.end == span.1 {
                            next += 1;
                        }
                    }
                    _ => units.push(Unit {
                        text: tok.text.clone(),
                        sentence: si,
                        kind: UnitKind::Word,
                    }),
                }
            }
        }
        dropped += spans[next..]
            .iter()
            .filter(|s| !emitted(&mentions, s))
            .count();

        (
            Self {
                doc_id: doc_id.into(),
                text,
                sentences,
                mentions,
                units,
                gold_pairs,
            },
            dropped,
        )
    }
}

fn emitted(mentions: &[EntityMention], span: &(usize, usize, String, String)) -> bool {
    mentions.last().is_some_and(|m| m.start == span.0)
}

fn split_tokens(sentence: Sentence, boundaries: &[usize]) -> Sentence {
    let mut out = Vec::with_capacity(sentence.len());
    for tok in sentence {
        let inner: Vec<usize> = boundaries
            .iter()
            .copied()
            .filter(|&b| b > tok.start && b < tok.end)
            .collect();
        if inner.is_empty() {
            out.push(tok);
            continue;
        }
        let chars: Vec<char> = tok.text.chars().collect();
        let mut cuts = vec![tok.start];
        cuts.extend(inner);
        cuts.push(tok.end);
        for w in cuts.windows(2) {
            out.push(Token {
                text: chars[w[0] - tok.start..w[1] - tok.start].iter().collect(),
                start: w[0],
                end: w[1],
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestResult {
    pub documents: Vec<AnnotatedDocument>,
    /// Mentions dropped for span/text mismatch, overlap, or covering no token.
    pub dropped_mentions: usize,
}

#[derive(Default)]
struct Block {
    doc_id: Option<String>,
    title: Option<String>,
    abstract_text: Option<String>,
    mentions: Vec<(usize, usize, String, String)>,
    relations: BTreeSet<GenePair>,
    first_line: usize,
}

/// Parses PubTator-style blocks:
///
/// ```text
/// PMID|t|title
/// PMID|a|abstract
/// PMID<TAB>start<TAB>end<TAB>text<TAB>type<TAB>geneID
/// PMID<TAB>PPIm<TAB>geneID1<TAB>geneID2
/// ```
///
/// Blocks are separated by blank lines. Only mentions of type `Gene` are
/// kept. If the file carries at least one relation line, every document
/// gets a (possibly empty) gold pair set; otherwise none do.
pub fn ingest_annotations<R: BufRead>(reader: R) -> Result<IngestResult, CorpusError> {
    let mut blocks: Vec<Block> = Vec::new();
    let mut current = Block::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        let lineno = i + 1;
        if line.trim().is_empty() {
            if current.doc_id.is_some() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        if current.doc_id.is_none() {
            current.first_line = lineno;
        }
        parse_line(&mut current, line, lineno)?;
    }
    if current.doc_id.is_some() {
        blocks.push(current);
    }

    let labeled = blocks.iter().any(|b| !b.relations.is_empty());
    let mut documents = Vec::with_capacity(blocks.len());
    let mut dropped_mentions = 0;
    for block in blocks {
        let (doc, dropped) = finish_block(block, labeled)?;
        dropped_mentions += dropped;
        documents.push(doc);
    }
    Ok(IngestResult {
        documents,
        dropped_mentions,
    })
}

fn parse_line(block: &mut Block, line: &str, lineno: usize) -> Result<(), CorpusError> {
    let bad = |doc: &str, reason: String| CorpusError::Block {
        doc_id: doc.to_string(),
        line: lineno,
        reason,
    };
    let check_id = |block: &mut Block, id: &str| -> Result<(), CorpusError> {
        match &block.doc_id {
            Some(existing) if existing != id => Err(CorpusError::Block {
                doc_id: existing.clone(),
                line: lineno,
                reason: format!("line belongs to document {id:?}; missing blank line?"),
            }),
            Some(_) => Ok(()),
            None => {
                block.doc_id = Some(id.to_string());
                Ok(())
            }
        }
    };

    if let Some((id, rest)) = line.split_once('|') {
        if !line.contains('\t') || rest.starts_with("t|") || rest.starts_with("a|") {
            let (kind, body) = rest
                .split_once('|')
                .ok_or_else(|| bad(id, "expected PMID|t|title or PMID|a|abstract".into()))?;
            check_id(block, id)?;
            let slot = match kind {
                "t" => &mut block.title,
                "a" => &mut block.abstract_text,
                other => return Err(bad(id, format!("unknown section {other:?}"))),
            };
            if slot.is_some() {
                return Err(bad(id, format!("duplicate |{kind}| line")));
            }
            *slot = Some(body.to_string());
            return Ok(());
        }
    }

    let cols: Vec<&str> = line.split('\t').collect();
    let id = cols[0];
    if cols.len() == 4 && !cols[1].chars().all(|c| c.is_ascii_digit()) {
        check_id(block, id)?;
        if cols[2].is_empty() || cols[3].is_empty() {
            return Err(bad(id, "relation line with an empty gene id".into()));
        }
        block.relations.insert(GenePair::new(cols[2], cols[3]));
        return Ok(());
    }
    if cols.len() >= 5 {
        check_id(block, id)?;
        let start: usize = cols[1]
            .parse()
            .map_err(|_| bad(id, format!("bad start offset {:?}", cols[1])))?;
        let end: usize = cols[2]
            .parse()
            .map_err(|_| bad(id, format!("bad end offset {:?}", cols[2])))?;
        if end <= start {
            return Err(bad(id, format!("empty or reversed span {start}..{end}")));
        }
        let is_gene = cols[4].eq_ignore_ascii_case("gene");
        let gene_id = cols.get(5).map(|s| s.trim()).unwrap_or("");
        if is_gene && !gene_id.is_empty() {
            block
                .mentions
                .push((start, end, cols[3].to_string(), gene_id.to_string()));
        }
        return Ok(());
    }
    Err(bad(
        block.doc_id.as_deref().unwrap_or(id),
        format!("unrecognised line {line:?}"),
    ))
}

fn finish_block(block: Block, labeled: bool) -> Result<(AnnotatedDocument, usize), CorpusError> {
    let doc_id = block.doc_id.expect("block has an id");
    let title = block.title.ok_or_else(|| CorpusError::Block {
        doc_id: doc_id.clone(),
        line: block.first_line,
        reason: "missing |t| line".into(),
    })?;
    let abstract_text = block.abstract_text.unwrap_or_default();
    let title_len = title.chars().count();
    let text: Vec<char> = format!("{title} {abstract_text}").chars().collect();

    let mut mentions = block.mentions;
    mentions.sort_by_key(|m| (m.0, m.1));
    let mut dropped = 0;
    let mut valid = Vec::with_capacity(mentions.len());
    for m in mentions {
        if m.0 < title_len && m.1 > title_len {
            return Err(CorpusError::Block {
                doc_id,
                line: block.first_line,
                reason: format!(
                    "mention {}..{} overlaps the title/abstract boundary at {title_len}",
                    m.0, m.1
                ),
            });
        }
        let matches = m.1 <= text.len() && text[m.0..m.1].iter().collect::<String>() == m.2;
        if matches {
            valid.push(m);
        } else {
            dropped += 1;
        }
    }
    let gold = labeled.then_some(block.relations);
    let (doc, more) = AnnotatedDocument::build(doc_id, &title, &abstract_text, valid, gold);
    Ok((doc, dropped + more))
}
