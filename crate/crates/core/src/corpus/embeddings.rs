use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::kb::WordSource;
use crate::numerics::{init_params, seeded_rng, InitScheme, Matrix};

use super::candidates::{GENE_PLACEHOLDER, NUMBER_PLACEHOLDER};
use super::document::AnnotatedDocument;
use super::tokenize::word_tokens;
use super::CorpusError;

pub const UNKNOWN_TOKEN: &str = "<unk>";
pub const SPECIAL_TOKENS: [&str; 3] = [GENE_PLACEHOLDER, NUMBER_PLACEHOLDER, UNKNOWN_TOKEN];

/// Standard deviation of synthesised vectors.
const SYNTH_STD: f64 = 0.1;

/// Word vectors with the `gene0`, `NUMBER` and unknown-word entries always
/// present.
#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddings {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
}

impl WordEmbeddings {
    fn from_parts(mut words: Vec<String>, rows: Vec<Vec<f64>>, dim: usize, seed: u64) -> Result<Self, CorpusError> {
        let mut values: Vec<f64> = rows.into_iter().flatten().collect();
        let mut rng = seeded_rng(seed);
        let mut index: HashMap<String, usize> = HashMap::with_capacity(words.len() + 3);
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(CorpusError::Embeddings(format!("duplicate word {w:?}")));
            }
        }
        for special in SPECIAL_TOKENS {
            if !index.contains_key(special) {
                let v = init_params(1, dim, InitScheme::Normal { mean: 0.0, std: SYNTH_STD }, &mut rng)
                    .map_err(|e| CorpusError::Embeddings(e.to_string()))?;
                index.insert(special.to_string(), words.len());
                words.push(special.to_string());
                values.extend_from_slice(v.as_slice());
            }
        }
        let vectors = Matrix::from_vec(words.len(), dim, values)
            .map_err(|e| CorpusError::Embeddings(e.to_string()))?;
        Ok(Self { words, index, vectors })
    }

    /// Reads the text format: a `vocab_size dim` header, then
    /// `word v1 … v_dim` per line. Missing special tokens are drawn from a
    /// normal distribution seeded by `seed`.
    pub fn read<R: BufRead>(reader: R, seed: u64) -> Result<Self, CorpusError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| CorpusError::Embeddings("empty word-vector file".into()))??;
        let mut head = header.split_whitespace();
        let parse = |s: Option<&str>| s.and_then(|x| x.parse::<usize>().ok());
        let (Some(count), Some(dim)) = (parse(head.next()), parse(head.next())) else {
            return Err(CorpusError::Embeddings(format!("bad header {header:?}")));
        };
        if dim == 0 {
            return Err(CorpusError::Embeddings("dimension must be positive".into()));
        }
        let mut words = Vec::with_capacity(count);
        let mut rows = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|s| !s.is_empty());
            let word = parts.next().expect("non-empty line").to_string();
            let row: Vec<f64> = parts
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CorpusError::Embeddings(format!("line {}: {e}", i + 2)))?;
            if row.len() != dim {
                return Err(CorpusError::Embeddings(format!(
                    "line {}: word {word:?} has {} values, expected {dim}",
                    i + 2,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(CorpusError::Embeddings(format!("line {}: non-finite value", i + 2)));
            }
            words.push(word);
            rows.push(row);
        }
        if words.len() != count {
            return Err(CorpusError::Embeddings(format!(
                "header announces {count} words, file has {}",
                words.len()
            )));
        }
        Self::from_parts(words, rows, dim, seed)
    }

    /// Seeded random vectors for `vocab` (sorted, deduplicated) plus the
    /// special tokens. Used when no pre-trained vectors are supplied.
    pub fn random<'a, I>(vocab: I, dim: usize, seed: u64) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let words: Vec<String> = vocab
            .into_iter()
            .map(str::to_string)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter(|w| !SPECIAL_TOKENS.contains(&w.as_str()))
            .collect();
        let mut rng = seeded_rng(seed);
        let m = if words.is_empty() {
            Vec::new()
        } else {
            init_params(words.len(), dim, InitScheme::Normal { mean: 0.0, std: SYNTH_STD }, &mut rng)
                .map_err(|e| CorpusError::Embeddings(e.to_string()))?
                .into_vec()
        };
        let rows = m.chunks(dim).map(<[f64]>::to_vec).collect();
        Self::from_parts(words, rows, dim, seed.wrapping_add(1))
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<(), CorpusError> {
        writeln!(w, "{} {}", self.words.len(), self.dim())?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for v in self.vectors.row(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    /// Vocabulary size including the special tokens.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    fn find(&self, word: &str) -> Option<usize> {
        self.index
            .get(word)
            .or_else(|| self.index.get(&word.to_lowercase()))
            .copied()
    }

    /// Exact match, then lower-cased match, then the unknown-word vector.
    pub fn lookup(&self, word: &str) -> &[f64] {
        let i = self.find(word).unwrap_or(self.index[UNKNOWN_TOKEN]);
        self.vectors.row(i)
    }
}

/// Lower-cased unit texts and mention words of `docs`: the vocabulary that
/// random vectors are drawn for when no pre-trained file is given.
pub fn corpus_vocabulary(docs: &[AnnotatedDocument]) -> BTreeSet<String> {
    let mut vocab = BTreeSet::new();
    for d in docs {
        vocab.extend(d.units.iter().map(|u| u.text.to_lowercase()));
        for m in &d.mentions {
            vocab.extend(word_tokens(&m.text).into_iter().map(|w| w.to_lowercase()));
        }
    }
    vocab
}

impl WordSource for WordEmbeddings {
    fn dim(&self) -> usize {
        WordEmbeddings::dim(self)
    }

    fn known(&self, word: &str) -> Option<&[f64]> {
        if SPECIAL_TOKENS.contains(&word) {
            return None;
        }
        self.find(word).map(|i| self.vectors.row(i))
    }
}
