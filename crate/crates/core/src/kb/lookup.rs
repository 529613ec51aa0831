use crate::corpus::word_tokens;
use crate::numerics::mean_of;

use super::{EmbeddingTable, KnowledgeStore};

/// Read access to in-vocabulary word vectors. `known` returns `None` for
/// out-of-vocabulary words; no unknown-token substitution happens here.
pub trait WordSource {
    fn dim(&self) -> usize;
    fn known(&self, word: &str) -> Option<&[f64]>;
}

impl WordSource for EmbeddingTable {
    fn dim(&self) -> usize {
        EmbeddingTable::dim(self)
    }

    fn known(&self, word: &str) -> Option<&[f64]> {
        self.get(word)
    }
}

/// Mean of the known word vectors in `mention`; `None` when no word is known.
pub fn average_word_vector(mention: &str, words: &dyn WordSource) -> Option<Vec<f64>> {
    let tokens = word_tokens(mention);
    let vectors: Vec<&[f64]> = tokens.iter().filter_map(|w| words.known(w)).collect();
    mean_of(&vectors)
}

/// Trained vector when present, else the mention's averaged word vector,
/// else the zero vector.
pub fn entity_embedding(
    id: &str,
    trained: Option<&EmbeddingTable>,
    words: &dyn WordSource,
    mention: &str,
) -> Vec<f64> {
    if let Some(v) = trained.and_then(|t| t.get(id)) {
        return v.to_vec();
    }
    average_word_vector(mention, words).unwrap_or_else(|| vec![0.0; words.dim()])
}

/// Mean of the distinct relation vectors linking the unordered pair
/// `(a, b)`; the zero vector when the pair is absent from the store or
/// none of its relations has a vector.
pub fn pair_relation_embedding(
    a: &str,
    b: &str,
    store: &KnowledgeStore,
    relations: &EmbeddingTable,
) -> Vec<f64> {
    let vectors: Vec<&[f64]> = store
        .relations_between(a, b)
        .into_iter()
        .filter_map(|r| relations.get(r))
        .collect();
    mean_of(&vectors).unwrap_or_else(|| vec![0.0; relations.dim()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Triple;
    use crate::numerics::Matrix;

    fn words() -> EmbeddingTable {
        EmbeddingTable::new(
            vec!["alpha".into(), "beta".into()],
            Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 3.0, 0.0, -1.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn trained_vector_wins() {
        let trained = EmbeddingTable::new(vec!["g1".into()], Matrix::from_vec(1, 3, vec![9.0, 8.0, 7.0]).unwrap()).unwrap();
        assert_eq!(entity_embedding("g1", Some(&trained), &words(), "alpha"), vec![9.0, 8.0, 7.0]);
    }

    #[test]
    fn absent_entity_averages_words() {
        assert_eq!(entity_embedding("g2", None, &words(), "alpha beta"), vec![2.0, 1.0, 1.0]);
        assert_eq!(entity_embedding("g2", None, &words(), "gamma delta"), vec![0.0; 3]);
    }

    #[test]
    fn pair_relation_fallbacks() {
        let store = KnowledgeStore::from_triples(&[
            Triple::new("A", "r1", "B"),
            Triple::new("B", "r2", "A"),
            Triple::new("A", "r1", "C"),
        ])
        .unwrap();
        let rels = EmbeddingTable::new(
            vec!["r1".into(), "r2".into()],
            Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 3.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(pair_relation_embedding("A", "D", &store, &rels), vec![0.0, 0.0]);
        assert_eq!(pair_relation_embedding("C", "A", &store, &rels), vec![1.0, 0.0]);
        assert_eq!(pair_relation_embedding("A", "B", &store, &rels), vec![0.5, 1.5]);
    }
}
