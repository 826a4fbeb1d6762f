//! Integrity checks over a whole graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::index::IndexedDoc;
use super::types::*;
use super::KnowledgeGraph;
use crate::text::normalize_phrase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Invariant,
    DanglingReference,
    EdgeMismatch,
    DuplicateName,
    IndexMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub entity: String,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{:?}]: {}", self.entity, self.kind, self.message)
    }
}

/// Type-level invariants of a single entity, independent of the rest of the
/// graph. An empty result means the entity is well formed.
pub fn entity_problems(entity: &Entity) -> Vec<String> {
    let mut out = Vec::new();
    let bad_evidence = |ev: &[EvidenceRef]| ev.iter().any(|e| !e.is_well_formed());
    match entity {
        Entity::BaseModel(b) => {
            if b.name.trim().is_empty() {
                out.push("empty name".into());
            } else if b.id != BaseModel::id_for(&b.name) {
                out.push("id does not match name".into());
            }
        }
        Entity::Variation(v) => {
            if v.name.trim().is_empty() {
                out.push("empty name".into());
            } else if v.id != ModelVariation::id_for(&v.base_id, &v.name) {
                out.push("id does not match (base, name)".into());
            }
            if bad_evidence(&v.evidence) {
                out.push("malformed evidence".into());
            }
        }
        Entity::Feature(f) => {
            if f.phrase.is_empty() {
                out.push("empty phrase".into());
            } else if normalize_phrase(&f.phrase) != f.phrase {
                out.push("phrase is not normalized".into());
            } else if f.id != Feature::id_for(&f.phrase) {
                out.push("id does not match phrase".into());
            }
        }
        Entity::Library(l) => {
            if l.distribution_name.is_empty() {
                out.push("empty distribution name".into());
            } else if normalize_distribution_name(&l.distribution_name) != l.distribution_name {
                out.push("distribution name is not normalized".into());
            } else if l.id != Library::id_for(&l.distribution_name) {
                out.push("id does not match distribution name".into());
            }
            if !(0.0..=1.0).contains(&l.ai_score) {
                out.push(format!("ai_score {} outside [0, 1]", l.ai_score));
            }
            if bad_evidence(&l.evidence) {
                out.push("malformed evidence".into());
            }
        }
        Entity::Repository(r) => {
            if r.name.trim().is_empty() {
                out.push("empty name".into());
            }
            if r.id != Repository::id_for(&r.url) {
                out.push("id does not match url".into());
            }
            if r.updated_at < r.created_at {
                out.push("updated_at precedes created_at".into());
            }
        }
        Entity::Quality(q) => {
            if q.attribute.trim().is_empty() {
                out.push("empty attribute".into());
            } else if q.id != QualityAggregate::id_for(&q.variation_id, &q.library_id, &q.attribute) {
                out.push("id does not match triple".into());
            }
            if !(-1.0..=1.0).contains(&q.score) {
                out.push(format!("score {} outside [-1, 1]", q.score));
            }
            if q.review_count < 1 {
                out.push("review_count must be at least 1".into());
            }
            if bad_evidence(&q.evidence) {
                out.push("malformed evidence".into());
            }
        }
        Entity::Cve(c) => {
            if c.id.as_str().trim().is_empty() {
                out.push("empty id".into());
            }
            if c.affected_version_range.trim().is_empty() {
                out.push("empty affected version range".into());
            }
        }
    }
    out
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, entity: impl fmt::Display, kind: ViolationKind, message: impl Into<String>) {
        self.0.push(Violation {
            entity: entity.to_string(),
            kind,
            message: message.into(),
        });
    }
}

/// All integrity violations in `graph`, sorted. A graph produced only through
/// [`KnowledgeGraph::upsert`] always validates to an empty list.
pub fn validate(graph: &KnowledgeGraph) -> Vec<Violation> {
    let t = graph.tables();
    let mut c = Collector(Vec::new());

    for e in t.entities() {
        for p in entity_problems(&e) {
            c.push(e.id(), ViolationKind::Invariant, p);
        }
    }

    // Referential integrity of relationship fields.
    for v in t.variations.values() {
        if !t.base_models.contains_key(&v.base_id) {
            c.push(&v.id, ViolationKind::DanglingReference, format!("base {}", v.base_id));
        }
        for f in &v.feature_ids {
            if !t.features.contains_key(f) {
                c.push(&v.id, ViolationKind::DanglingReference, format!("feature {f}"));
            }
        }
    }
    for l in t.libraries.values() {
        for v in &l.supported_variation_ids {
            if !t.variations.contains_key(v) {
                c.push(&l.id, ViolationKind::DanglingReference, format!("variation {v}"));
            }
        }
        for cv in &l.cve_ids {
            if !t.cves.contains_key(cv) {
                c.push(&l.id, ViolationKind::DanglingReference, format!("vulnerability {cv}"));
            }
        }
    }
    for cv in t.cves.values() {
        if !t.libraries.contains_key(&cv.library_id) {
            c.push(&cv.id, ViolationKind::DanglingReference, format!("library {}", cv.library_id));
        }
    }
    for q in t.quality.values() {
        if !t.variations.contains_key(&q.variation_id) {
            c.push(&q.id, ViolationKind::DanglingReference, format!("variation {}", q.variation_id));
        }
        if !t.libraries.contains_key(&q.library_id) {
            c.push(&q.id, ViolationKind::DanglingReference, format!("library {}", q.library_id));
        }
    }

    // Edges and fields must describe the same relation.
    let mut expected: BTreeSet<EdgeKey> = BTreeSet::new();
    let key = |kind, from: &EntityId, to: &EntityId| EdgeKey {
        kind,
        from: from.clone(),
        to: to.clone(),
    };
    for v in t.variations.values() {
        expected.insert(key(EdgeKind::BaseVariation, &v.base_id, &v.id));
        for f in &v.feature_ids {
            expected.insert(key(EdgeKind::VariationFeature, &v.id, f));
        }
    }
    for l in t.libraries.values() {
        for v in &l.supported_variation_ids {
            expected.insert(key(EdgeKind::LibraryVariation, &l.id, v));
        }
        for cv in &l.cve_ids {
            expected.insert(key(EdgeKind::LibraryCve, &l.id, cv));
        }
    }
    for cv in t.cves.values() {
        expected.insert(key(EdgeKind::LibraryCve, &cv.library_id, &cv.id));
    }
    for r in t.repositories.values() {
        for name in &r.dependency_names {
            let lib = Library::id_for(name);
            if t.libraries.contains_key(&lib) {
                expected.insert(key(EdgeKind::RepoLibrary, &r.id, &lib));
            }
        }
    }
    for (k, e) in &t.edges {
        if *k != e.key() {
            c.push(&k.from, ViolationKind::EdgeMismatch, "edge stored under the wrong key");
        }
        let (fk, tk) = k.kind.endpoint_kinds();
        if !t.has(fk, &k.from) || !t.has(tk, &k.to) {
            c.push(&k.from, ViolationKind::DanglingReference, format!("{:?} edge to {}", k.kind, k.to));
        }
        if e.evidence.iter().any(|ev| !ev.is_well_formed()) {
            c.push(&k.from, ViolationKind::Invariant, format!("malformed evidence on {:?} edge to {}", k.kind, k.to));
        }
        if !expected.contains(k) {
            c.push(&k.from, ViolationKind::EdgeMismatch, format!("{:?} edge to {} has no field counterpart", k.kind, k.to));
        }
    }
    for k in &expected {
        if !t.edges.contains_key(k) {
            c.push(&k.from, ViolationKind::EdgeMismatch, format!("missing {:?} edge to {}", k.kind, k.to));
        }
    }

    // Names: base names unique case-insensitively; variation names unique per base.
    let mut bases: BTreeMap<String, &EntityId> = BTreeMap::new();
    for b in t.base_models.values() {
        if let Some(prev) = bases.insert(b.name.to_lowercase(), &b.id) {
            c.push(&b.id, ViolationKind::DuplicateName, format!("base name also used by {prev}"));
        }
    }
    let mut vars: BTreeMap<(&EntityId, String), &EntityId> = BTreeMap::new();
    for v in t.variations.values() {
        if let Some(prev) = vars.insert((&v.base_id, v.name.to_lowercase()), &v.id) {
            c.push(&v.id, ViolationKind::DuplicateName, format!("variation name also used by {prev}"));
        }
    }

    // The index must reflect the tables exactly.
    let index = graph.index();
    let mut indexed = 0usize;
    for e in t.entities() {
        if let Some(doc) = IndexedDoc::from_entity(&e) {
            indexed += 1;
            if index.docs().get(e.id()) != Some(&doc) {
                c.push(e.id(), ViolationKind::IndexMismatch, "index entry is stale or missing");
            }
        }
    }
    if indexed != index.len() {
        c.push("index", ViolationKind::IndexMismatch, format!("{} documents for {indexed} entities", index.len()));
    }

    c.0.sort();
    c.0
}
