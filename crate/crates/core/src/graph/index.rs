//! Embedded inverted index over the text fields of graph entities.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::types::{Entity, EntityId, EntityKind};
use crate::text::{normalize_phrase, term_tokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexField {
    Name,
    Alias,
    Definition,
    Keywords,
    Summary,
}

/// Tokenized text of one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedDoc {
    pub kind: EntityKind,
    pub name: String,
    pub fields: Vec<(IndexField, Vec<String>)>,
}

impl IndexedDoc {
    /// The indexable text of an entity, or `None` for entities without text
    /// fields (repositories, quality aggregates, vulnerabilities).
    pub fn from_entity(entity: &Entity) -> Option<IndexedDoc> {
        let (name, fields): (&str, Vec<(IndexField, String)>) = match entity {
            Entity::BaseModel(b) => {
                let mut f = vec![(IndexField::Name, b.name.clone())];
                f.extend(b.aliases.iter().map(|a| (IndexField::Alias, a.clone())));
                f.push((IndexField::Definition, b.definition.clone()));
                (&b.name, f)
            }
            Entity::Variation(v) => (
                &v.name,
                vec![
                    (IndexField::Name, v.name.clone()),
                    (IndexField::Definition, v.definition.clone()),
                ],
            ),
            Entity::Feature(f) => (
                &f.phrase,
                vec![
                    (IndexField::Name, f.phrase.clone()),
                    (IndexField::Definition, f.definition.clone().unwrap_or_default()),
                ],
            ),
            Entity::Library(l) => (
                &l.distribution_name,
                vec![
                    (IndexField::Name, l.distribution_name.clone()),
                    (IndexField::Keywords, l.keywords.join(" ")),
                    (IndexField::Summary, l.summary.clone()),
                ],
            ),
            Entity::Repository(_) | Entity::Quality(_) | Entity::Cve(_) => return None,
        };
        Some(IndexedDoc {
            kind: entity.kind(),
            name: normalize_phrase(name),
            fields: fields
                .into_iter()
                .map(|(f, text)| (f, term_tokens(&text)))
                .filter(|(_, toks)| !toks.is_empty())
                .collect(),
        })
    }

    fn tokens(&self) -> impl Iterator<Item = &String> {
        self.fields.iter().flat_map(|(_, t)| t.iter())
    }

    fn len(&self) -> usize {
        self.fields.iter().map(|(_, t)| t.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub id: EntityId,
    pub kind: EntityKind,
    pub name: String,
    pub score: f64,
}

/// Token → document postings plus the tokenized documents themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextIndex {
    docs: BTreeMap<EntityId, IndexedDoc>,
    postings: BTreeMap<String, BTreeSet<EntityId>>,
}

impl TextIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &BTreeMap<EntityId, IndexedDoc> {
        &self.docs
    }

    /// Indexes (or re-indexes) an entity; entities without text are ignored.
    pub fn index_entity(&mut self, entity: &Entity) {
        if let Some(doc) = IndexedDoc::from_entity(entity) {
            self.insert(entity.id().clone(), doc);
        }
    }

    pub fn insert(&mut self, id: EntityId, doc: IndexedDoc) {
        self.remove(&id);
        for tok in doc.tokens() {
            self.postings.entry(tok.clone()).or_default().insert(id.clone());
        }
        self.docs.insert(id, doc);
    }

    pub fn remove(&mut self, id: &EntityId) {
        if let Some(old) = self.docs.remove(id) {
            for tok in old.tokens() {
                if let Some(set) = self.postings.get_mut(tok) {
                    set.remove(id);
                    if set.is_empty() {
                        self.postings.remove(tok);
                    }
                }
            }
        }
    }

    /// Documents containing every token of `term` (conjunctive match).
    pub fn matching_docs(&self, term: &str) -> BTreeSet<EntityId> {
        let toks = term_tokens(term);
        let mut iter = toks.iter();
        let Some(first) = iter.next() else {
            return BTreeSet::new();
        };
        let mut acc = self.postings.get(first).cloned().unwrap_or_default();
        for t in iter {
            match self.postings.get(t) {
                Some(set) => acc.retain(|id| set.contains(id)),
                None => return BTreeSet::new(),
            }
        }
        acc
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.matching_docs(term).len()
    }

    /// Entities whose name normalizes to the same phrase as `name`.
    pub fn find_by_name(&self, name: &str) -> Vec<EntityId> {
        let wanted = normalize_phrase(name);
        self.matching_docs(name)
            .into_iter()
            .filter(|id| self.docs[id].name == wanted)
            .collect()
    }

    /// BM25 keyword search over all text of each entity.
    pub fn search(&self, query: &str, k: usize) -> Vec<SearchHit> {
        const K1: f64 = 1.2;
        const B: f64 = 0.75;
        let terms: BTreeSet<String> = term_tokens(query).into_iter().collect();
        if terms.is_empty() || self.docs.is_empty() {
            return Vec::new();
        }
        let n = self.docs.len() as f64;
        let total_len: usize = self.docs.values().map(IndexedDoc::len).sum();
        let avgdl = total_len as f64 / n;
        let mut scores: BTreeMap<&EntityId, f64> = BTreeMap::new();
        for term in &terms {
            let Some(post) = self.postings.get(term) else { continue };
            let df = post.len() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            for id in post {
                let doc = &self.docs[id];
                let tf = doc.tokens().filter(|t| *t == term).count() as f64;
                let dl = doc.len() as f64;
                let part = idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * dl / avgdl));
                *scores.entry(id).or_insert(0.0) += part;
            }
        }
        let mut hits: Vec<SearchHit> = scores
            .into_iter()
            .map(|(id, score)| SearchHit {
                id: id.clone(),
                kind: self.docs[id].kind,
                name: self.docs[id].name.clone(),
                score,
            })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
        hits.truncate(k);
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::types::{BaseModel, Feature, Library};

    fn index() -> TextIndex {
        let mut idx = TextIndex::new();
        idx.index_entity(&BaseModel::new("Regression", "Predicts continuous targets").into());
        idx.index_entity(&Feature::new("L2 penalties").into());
        let mut lib = Library::new("scikit-learn");
        lib.summary = "Machine learning in Python".into();
        lib.keywords = vec!["regression".into()];
        idx.index_entity(&lib.into());
        idx
    }

    #[test]
    fn conjunctive_frequency() {
        let idx = index();
        assert_eq!(idx.document_frequency("regression"), 2);
        assert_eq!(idx.document_frequency("l2 penalty"), 1);
        assert_eq!(idx.document_frequency("penalty regression"), 0);
        assert_eq!(idx.document_frequency(""), 0);
    }

    #[test]
    fn exact_name_lookup() {
        let idx = index();
        assert_eq!(idx.find_by_name("regression"), vec![BaseModel::id_for("Regression")]);
        assert_eq!(idx.find_by_name("Scikit-Learn").len(), 1);
    }

    #[test]
    fn reindex_replaces_postings() {
        let mut idx = index();
        let mut lib = Library::new("scikit-learn");
        lib.summary = "Tools".into();
        idx.index_entity(&lib.into());
        assert_eq!(idx.document_frequency("machine"), 0);
        assert_eq!(idx.document_frequency("regression"), 1);
    }

    #[test]
    fn search_ranks_by_bm25() {
        let idx = index();
        let hits = idx.search("regression", 5);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].kind, EntityKind::BaseModel);
    }
}
