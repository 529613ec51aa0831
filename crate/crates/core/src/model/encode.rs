//! Turning candidate instances into numeric model inputs.

use serde::{Deserialize, Serialize};

use crate::corpus::{CandidateInstance, WordEmbeddings};
use crate::kb::{entity_embedding, pair_relation_embedding, EmbeddingTable, KnowledgeStore};
use crate::numerics::Matrix;
use crate::GenePair;

use super::{ForwardTrace, KnowledgeMode, ModelError, ModelInput};

/// Lookup tables needed to encode instances for one knowledge mode.
#[derive(Clone, Copy)]
pub struct Encoder<'a> {
    pub mode: KnowledgeMode,
    pub words: &'a WordEmbeddings,
    /// Trained knowledge-base entity vectors.
    pub entities: Option<&'a EmbeddingTable>,
    /// Knowledge base and trained relation vectors.
    pub relations: Option<(&'a KnowledgeStore, &'a EmbeddingTable)>,
}

impl<'a> Encoder<'a> {
    /// Fails when the mode needs a table that was not supplied.
    pub fn new(
        mode: KnowledgeMode,
        words: &'a WordEmbeddings,
        entities: Option<&'a EmbeddingTable>,
        relations: Option<(&'a KnowledgeStore, &'a EmbeddingTable)>,
    ) -> Result<Self, ModelError> {
        if mode.uses_kb_entities() && entities.is_none() {
            return Err(ModelError::Config(format!(
                "knowledge mode {} needs trained entity vectors",
                mode.name()
            )));
        }
        if mode.uses_relation() && relations.is_none() {
            return Err(ModelError::Config(format!(
                "knowledge mode {} needs a knowledge base and relation vectors",
                mode.name()
            )));
        }
        Ok(Self {
            mode,
            words,
            entities,
            relations,
        })
    }

    pub fn encode(&self, c: &CandidateInstance) -> Result<ModelInput, ModelError> {
        let n = c.context.len();
        if n == 0 {
            return Err(ModelError::EmptySequence);
        }
        let d = self.words.dim();
        let mut values = Vec::with_capacity(n * d);
        for t in &c.context {
            values.extend_from_slice(self.words.lookup(&t.text));
        }
        let words = Matrix::from_vec(n, d, values)?;
        // distances live in document-unit coordinates; removed tokens can
        // push them past the context length
        let dist = |anchor: usize| -> Vec<usize> {
            c.context.iter().map(|t| t.position.abs_diff(anchor).min(n)).collect()
        };
        let kb = if self.mode.uses_kb_entities() { self.entities } else { None };
        let entities = [
            entity_embedding(&c.gene1, kb, self.words, &c.mention1),
            entity_embedding(&c.gene2, kb, self.words, &c.mention2),
        ];
        let relation = match (self.mode.uses_relation(), self.relations) {
            (true, Some((store, rel))) => Some(pair_relation_embedding(&c.gene1, &c.gene2, store, rel)),
            _ => None,
        };
        Ok(ModelInput {
            words,
            distances: [dist(c.p1), dist(c.p2)],
            entities,
            relation,
        })
    }
}

/// One attention weight, as exported for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    /// Index of the candidate in its input list.
    pub instance: usize,
    pub doc_id: String,
    pub pair: GenePair,
    pub pathway: usize,
    /// 1-based layer number.
    pub layer: usize,
    /// Index within the context.
    pub position: usize,
    pub token: String,
    pub weight: f64,
}

pub fn attention_records(instance: usize, c: &CandidateInstance, trace: &ForwardTrace) -> Vec<AttentionRecord> {
    let mut out = Vec::new();
    for (p, layers) in trace.pathways.iter().enumerate() {
        for (k, layer) in layers.iter().enumerate() {
            for (i, &w) in layer.weights.iter().enumerate() {
                out.push(AttentionRecord {
                    instance,
                    doc_id: c.doc_id.clone(),
                    pair: c.pair.clone(),
                    pathway: p + 1,
                    layer: k + 1,
                    position: i,
                    token: c.context[i].text.clone(),
                    weight: w,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ContextToken;
    use crate::kb::Triple;

    fn candidate() -> CandidateInstance {
        let tok = |text: &str, position| ContextToken { text: text.into(), position };
        CandidateInstance {
            doc_id: "d".into(),
            pair: GenePair::new("A", "B"),
            gene1: "A".into(),
            mention1: "alpha".into(),
            gene2: "B".into(),
            mention2: "beta".into(),
            p1: 3,
            p2: 8,
            sentence_distance: 0,
            token_distance: 5,
            context: vec![tok("x", 0), tok("binds", 4), tok("gene0", 6), tok("y", 12)],
            label: None,
        }
    }

    #[test]
    fn distances_are_absolute_and_clamped() {
        let words = WordEmbeddings::random(["x", "binds", "alpha", "beta"], 3, 1).unwrap();
        let enc = Encoder::new(KnowledgeMode::AveragedEntities, &words, None, None).unwrap();
        let input = enc.encode(&candidate()).unwrap();
        assert_eq!(input.distances[0], vec![3, 1, 3, 4]);
        assert_eq!(input.distances[1], vec![4, 4, 2, 4]);
        assert_eq!(input.words.row(3), words.lookup("<unk>"));
        assert_eq!(input.entities[0], words.lookup("alpha"));
        assert!(input.relation.is_none());
    }

    #[test]
    fn knowledge_modes_pick_their_sources() {
        let words = WordEmbeddings::random(["alpha", "beta"], 2, 1).unwrap();
        let ents = EmbeddingTable::new(vec!["A".into()], Matrix::from_vec(1, 2, vec![5.0, 5.0]).unwrap()).unwrap();
        let store = KnowledgeStore::from_triples(&[Triple::new("A", "binds", "B")]).unwrap();
        let rels = EmbeddingTable::new(vec!["binds".into()], Matrix::from_vec(1, 2, vec![1.0, -1.0]).unwrap()).unwrap();
        assert!(Encoder::new(KnowledgeMode::Full, &words, Some(&ents), None).is_err());
        assert!(Encoder::new(KnowledgeMode::TransEEntities, &words, None, None).is_err());
        let full = Encoder::new(KnowledgeMode::Full, &words, Some(&ents), Some((&store, &rels))).unwrap();
        let input = full.encode(&candidate()).unwrap();
        assert_eq!(input.entities[0], vec![5.0, 5.0]);
        assert_eq!(input.entities[1], words.lookup("beta"));
        assert_eq!(input.relation, Some(vec![1.0, -1.0]));
        let ae_tr = Encoder::new(KnowledgeMode::AveragedEntitiesWithRelation, &words, Some(&ents), Some((&store, &rels))).unwrap();
        assert_eq!(ae_tr.encode(&candidate()).unwrap().entities[0], words.lookup("alpha"));
    }
}
