use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::KbError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

/// A triple expressed through the store's dense indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdTriple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

/// Which entity slot a corruption replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptSide {
    Head,
    Tail,
    /// Head or tail with equal probability, re-drawn on every attempt.
    Either,
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct StoreCounts {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
}

/// Bidirectional string ↔ dense id index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Interner {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Interner {
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Deduplicated triple store with entity/relation indexes and an
/// unordered-pair → relations map.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeStore {
    entities: Interner,
    relations: Interner,
    triples: Vec<IdTriple>,
    members: HashSet<IdTriple>,
    pair_relations: HashMap<(usize, usize), BTreeSet<usize>>,
}

impl KnowledgeStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a triple; returns `false` if it was already present.
    pub fn insert(&mut self, triple: &Triple) -> Result<bool, KbError> {
        if triple.head.is_empty() || triple.relation.is_empty() || triple.tail.is_empty() {
            return Err(KbError::EmptyField(format!(
                "{}\t{}\t{}",
                triple.head, triple.relation, triple.tail
            )));
        }
        let id = IdTriple {
            head: self.entities.intern(&triple.head),
            relation: self.relations.intern(&triple.relation),
            tail: self.entities.intern(&triple.tail),
        };
        if !self.members.insert(id) {
            return Ok(false);
        }
        self.triples.push(id);
        let key = (id.head.min(id.tail), id.head.max(id.tail));
        self.pair_relations.entry(key).or_default().insert(id.relation);
        Ok(true)
    }

    pub fn from_triples<'a, I>(triples: I) -> Result<Self, KbError>
    where
        I: IntoIterator<Item = &'a Triple>,
    {
        let mut store = Self::new();
        for t in triples {
            store.insert(t)?;
        }
        Ok(store)
    }

    pub fn counts(&self) -> StoreCounts {
        StoreCounts {
            entities: self.entities.len(),
            relations: self.relations.len(),
            triples: self.triples.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn entities(&self) -> &Interner {
        &self.entities
    }

    pub fn relations(&self) -> &Interner {
        &self.relations
    }

    /// Triples in insertion order.
    pub fn id_triples(&self) -> &[IdTriple] {
        &self.triples
    }

    pub fn triple(&self, id: &IdTriple) -> Triple {
        Triple::new(
            self.entities.name(id.head),
            self.relations.name(id.relation),
            self.entities.name(id.tail),
        )
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.triples.iter().map(|t| self.triple(t))
    }

    pub fn triple_set(&self) -> BTreeSet<Triple> {
        self.triples().collect()
    }

    pub fn contains_ids(&self, t: &IdTriple) -> bool {
        self.members.contains(t)
    }

    pub fn contains(&self, t: &Triple) -> bool {
        match (
            self.entities.id(&t.head),
            self.relations.id(&t.relation),
            self.entities.id(&t.tail),
        ) {
            (Some(head), Some(relation), Some(tail)) => self.contains_ids(&IdTriple {
                head,
                relation,
                tail,
            }),
            _ => false,
        }
    }

    /// Distinct relation labels linking `a` and `b` in either direction,
    /// sorted by label.
    pub fn relations_between(&self, a: &str, b: &str) -> Vec<&str> {
        let (Some(x), Some(y)) = (self.entities.id(a), self.entities.id(b)) else {
            return Vec::new();
        };
        let mut labels: Vec<&str> = self
            .pair_relations
            .get(&(x.min(y), x.max(y)))
            .map(|rels| rels.iter().map(|&r| self.relations.name(r)).collect())
            .unwrap_or_default();
        labels.sort_unstable();
        labels
    }

    /// Triple-set union; `self`'s triples keep their order, new ones follow.
    pub fn merge(&self, other: &KnowledgeStore) -> KnowledgeStore {
        let mut merged = self.clone();
        for t in other.triples() {
            merged.insert(&t).expect("triples in a store are well-formed");
        }
        merged
    }

    /// Replaces the head or tail with another entity so that the result is
    /// not a known triple. Gives up after `max_attempts` draws.
    pub fn corrupt<R: Rng + ?Sized>(
        &self,
        t: &IdTriple,
        side: CorruptSide,
        rng: &mut R,
        max_attempts: usize,
    ) -> Result<IdTriple, KbError> {
        let n = self.entities.len();
        if n < 2 {
            return Err(KbError::DegenerateStore(format!(
                "corruption needs at least 2 entities, store has {n}"
            )));
        }
        for _ in 0..max_attempts {
            let replace_head = match side {
                CorruptSide::Head => true,
                CorruptSide::Tail => false,
                CorruptSide::Either => rng.random_bool(0.5),
            };
            let original = if replace_head { t.head } else { t.tail };
            // uniform over the n - 1 other entities
            let mut e = rng.random_range(0..n - 1);
            if e >= original {
                e += 1;
            }
            let candidate = if replace_head {
                IdTriple { head: e, ..*t }
            } else {
                IdTriple { tail: e, ..*t }
            };
            if !self.contains_ids(&candidate) {
                return Ok(candidate);
            }
        }
        Err(KbError::DegenerateStore(format!(
            "no valid corruption of {:?} after {max_attempts} attempts",
            self.triple(t)
        )))
    }
}

/// Free-function form of [`KnowledgeStore::merge`].
pub fn merge_stores(a: &KnowledgeStore, b: &KnowledgeStore) -> KnowledgeStore {
    a.merge(b)
}

/// Free-function form of [`KnowledgeStore::corrupt`] with the default bound
/// of 100 attempts.
pub fn corrupt_triple<R: Rng + ?Sized>(
    t: &IdTriple,
    store: &KnowledgeStore,
    side: CorruptSide,
    rng: &mut R,
) -> Result<IdTriple, KbError> {
    store.corrupt(t, side, rng, 100)
}

/// Identifier mapping applied to triple entities before loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMapping {
    map: BTreeMap<String, String>,
}

impl IdMapping {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        Self {
            map: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    /// Reads `source_id<TAB>target_id` lines; `#` starts a comment.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, KbError> {
        let mut map = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols.len() != 2 || cols.iter().any(|c| c.is_empty()) {
                return Err(KbError::Malformed {
                    line: i + 1,
                    content: trimmed.to_string(),
                    reason: "expected 2 tab-separated columns".into(),
                });
            }
            map.insert(cols[0].to_string(), cols[1].to_string());
        }
        Ok(Self { map })
    }

    /// Unmapped identifiers map to themselves.
    pub fn apply<'a>(&'a self, id: &'a str) -> &'a str {
        self.map.get(id).map(String::as_str).unwrap_or(id)
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.map.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Reads `head<TAB>relation<TAB>tail` lines into a deduplicated store.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_triples<R: BufRead>(reader: R) -> Result<KnowledgeStore, KbError> {
    load_triples_mapped(reader, None)
}

pub fn load_triples_mapped<R: BufRead>(
    reader: R,
    mapping: Option<&IdMapping>,
) -> Result<KnowledgeStore, KbError> {
    let mut store = KnowledgeStore::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != 3 || cols.iter().any(|c| c.trim().is_empty()) {
            return Err(KbError::Malformed {
                line: i + 1,
                content: trimmed.to_string(),
                reason: "expected head<TAB>relation<TAB>tail".into(),
            });
        }
        let (h, r, t) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
        let triple = match mapping {
            Some(m) => Triple::new(m.apply(h), r, m.apply(t)),
            None => Triple::new(h, r, t),
        };
        store.insert(&triple)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    fn store(triples: &[(&str, &str, &str)]) -> KnowledgeStore {
        let ts: Vec<Triple> = triples.iter().map(|(h, r, t)| Triple::new(*h, *r, *t)).collect();
        KnowledgeStore::from_triples(&ts).unwrap()
    }

    #[test]
    fn duplicates_collapse_on_load() {
        let text = "# comment\nA\tbinds\tB\nA\tbinds\tB\nB\tbinds\tC\nA\tbinds\tB\nC\tinhibits\tA\n";
        let s = load_triples(text.as_bytes()).unwrap();
        assert_eq!(
            s.counts(),
            StoreCounts {
                entities: 3,
                relations: 2,
                triples: 3
            }
        );
    }

    #[test]
    fn missing_tail_names_the_line() {
        let text = "A\tbinds\tB\nC\tbinds\n";
        match load_triples(text.as_bytes()) {
            Err(KbError::Malformed { line, content, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(content, "C\tbinds");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_store() {
        assert!(load_triples("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn mapping_is_applied_before_dedup() {
        let map = IdMapping::read("P1\tg1\nP2\tg2\n".as_bytes()).unwrap();
        let s = load_triples_mapped("P1\tr\tP2\ng1\tr\tg2\n".as_bytes(), Some(&map)).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.contains(&Triple::new("g1", "r", "g2")));
    }

    #[test]
    fn merge_disjoint_and_idempotent() {
        let a = store(&[("a", "r", "b"), ("b", "r", "c"), ("c", "r", "d")]);
        let b = store(&[("w", "s", "x"), ("x", "s", "y"), ("y", "s", "z"), ("z", "s", "w")]);
        assert_eq!(merge_stores(&a, &b).len(), 7);
        assert_eq!(merge_stores(&a, &a).len(), 3);
    }

    #[test]
    fn forced_corruption_in_two_entity_store() {
        let s = store(&[("A", "r", "B")]);
        let t = s.id_triples()[0];
        let c = corrupt_triple(&t, &s, CorruptSide::Head, &mut seeded_rng(1)).unwrap();
        assert_eq!(s.triple(&c), Triple::new("B", "r", "B"));
    }

    #[test]
    fn saturated_store_fails_after_bounded_attempts() {
        let s = store(&[("A", "r", "B"), ("B", "r", "B")]);
        let t = s.id_triples()[0];
        let err = corrupt_triple(&t, &s, CorruptSide::Head, &mut seeded_rng(3)).unwrap_err();
        assert!(matches!(err, KbError::DegenerateStore(_)));
    }

    #[test]
    fn relations_between_is_unordered() {
        let s = store(&[("A", "r1", "B"), ("B", "r2", "A"), ("A", "r1", "C")]);
        assert_eq!(s.relations_between("B", "A"), vec!["r1", "r2"]);
        assert!(s.relations_between("B", "C").is_empty());
        assert!(s.relations_between("B", "nope").is_empty());
    }
}
