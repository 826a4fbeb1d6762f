use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::types::*;
use super::validate::entity_problems;
use super::{GraphTables, KnowledgeGraph};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChangeCounts {
    pub entities: usize,
    pub edges: usize,
}

impl ChangeCounts {
    pub fn total(&self) -> usize {
        self.entities + self.edges
    }
}

/// A batch item that was not applied, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub subject: String,
    pub reason: String,
}

/// Outcome of one [`KnowledgeGraph::upsert`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChangeSummary {
    pub inserted: ChangeCounts,
    pub updated: ChangeCounts,
    pub rejected: Vec<Rejection>,
}

impl ChangeSummary {
    /// True when nothing was inserted, updated or rejected.
    pub fn is_noop(&self) -> bool {
        self.inserted.total() == 0 && self.updated.total() == 0 && self.rejected.is_empty()
    }

    /// `(inserted, updated, rejected)` item counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.inserted.total(), self.updated.total(), self.rejected.len())
    }

    fn reject(&mut self, subject: impl Into<String>, reason: impl Into<String>) {
        self.rejected.push(Rejection {
            subject: subject.into(),
            reason: reason.into(),
        });
    }

    pub fn absorb(&mut self, other: ChangeSummary) {
        self.inserted.entities += other.inserted.entities;
        self.inserted.edges += other.inserted.edges;
        self.updated.entities += other.updated.entities;
        self.updated.edges += other.updated.edges;
        self.rejected.extend(other.rejected);
    }
}

/// Merge policy for an incoming record onto an existing one with the same id.
/// Every implementation is idempotent: `merge(merge(a, b), b) == merge(a, b)`.
trait Merge {
    fn merge_from(&mut self, incoming: &Self);
}

impl Merge for BaseModel {
    fn merge_from(&mut self, incoming: &Self) {
        if !incoming.definition.is_empty() {
            self.definition = incoming.definition.clone();
        }
        self.aliases.extend(incoming.aliases.iter().cloned());
    }
}

impl Merge for ModelVariation {
    fn merge_from(&mut self, incoming: &Self) {
        if !incoming.definition.is_empty() {
            self.definition = incoming.definition.clone();
        }
        self.feature_ids.extend(incoming.feature_ids.iter().cloned());
        merge_evidence(&mut self.evidence, &incoming.evidence);
    }
}

impl Merge for Feature {
    fn merge_from(&mut self, incoming: &Self) {
        if incoming.definition.is_some() {
            self.definition = incoming.definition.clone();
        }
    }
}

impl Merge for Library {
    fn merge_from(&mut self, incoming: &Self) {
        // Registry-derived fields are only replaced by a record that carries
        // registry metadata (a version); edge-only stubs leave them alone.
        if !incoming.version.is_empty() {
            self.summary = incoming.summary.clone();
            self.homepage = incoming.homepage.clone();
            self.keywords = incoming.keywords.clone();
            self.classifiers = incoming.classifiers.clone();
            self.version = incoming.version.clone();
            self.ai_related = incoming.ai_related;
            self.ai_score = incoming.ai_score;
            self.ai_basis = incoming.ai_basis;
        }
        if incoming.popularity.is_some() {
            self.popularity = incoming.popularity;
        }
        self.supported_variation_ids
            .extend(incoming.supported_variation_ids.iter().cloned());
        self.cve_ids.extend(incoming.cve_ids.iter().cloned());
        merge_evidence(&mut self.evidence, &incoming.evidence);
    }
}

impl Merge for Repository {
    fn merge_from(&mut self, incoming: &Self) {
        let deps: BTreeSet<String> = self
            .dependency_names
            .union(&incoming.dependency_names)
            .cloned()
            .collect();
        *self = incoming.clone();
        self.dependency_names = deps;
    }
}

impl Merge for QualityAggregate {
    fn merge_from(&mut self, incoming: &Self) {
        *self = incoming.clone();
    }
}

impl Merge for CveRecord {
    fn merge_from(&mut self, incoming: &Self) {
        *self = incoming.clone();
    }
}

/// Inserts or merges `incoming` into `table`. Returns (inserted, updated).
fn merge_into<T: Merge + Clone + PartialEq>(
    table: &mut BTreeMap<EntityId, T>,
    id: &EntityId,
    incoming: &T,
) -> (bool, bool) {
    match table.get_mut(id) {
        None => {
            table.insert(id.clone(), incoming.clone());
            (true, false)
        }
        Some(existing) => {
            let mut merged = existing.clone();
            merged.merge_from(incoming);
            if merged != *existing {
                *existing = merged;
                (false, true)
            } else {
                (false, false)
            }
        }
    }
}

/// Entities of one batch, deduplicated by id and grouped by kind.
#[derive(Default)]
struct Staged {
    bases: BTreeMap<EntityId, BaseModel>,
    variations: BTreeMap<EntityId, ModelVariation>,
    features: BTreeMap<EntityId, Feature>,
    libraries: BTreeMap<EntityId, Library>,
    repositories: BTreeMap<EntityId, Repository>,
    quality: BTreeMap<EntityId, QualityAggregate>,
    cves: BTreeMap<EntityId, CveRecord>,
}

fn stage<T: Merge + Clone>(table: &mut BTreeMap<EntityId, T>, id: &EntityId, e: &T) {
    match table.get_mut(id) {
        Some(existing) => existing.merge_from(e),
        None => {
            table.insert(id.clone(), e.clone());
        }
    }
}

impl Staged {
    fn has(&self, tables: &GraphTables, kind: EntityKind, id: &EntityId) -> bool {
        tables.has(kind, id)
            || match kind {
                EntityKind::BaseModel => self.bases.contains_key(id),
                EntityKind::Variation => self.variations.contains_key(id),
                EntityKind::Feature => self.features.contains_key(id),
                EntityKind::Library => self.libraries.contains_key(id),
                EntityKind::Repository => self.repositories.contains_key(id),
                EntityKind::Quality => self.quality.contains_key(id),
                EntityKind::Cve => self.cves.contains_key(id),
            }
    }
}

fn edge_label(kind: EdgeKind, from: &EntityId, to: &EntityId) -> String {
    format!("edge {:?} {from} -> {to}", kind)
}

impl KnowledgeGraph {
    /// Applies a batch of entities and edges.
    ///
    /// Edges may reference entities elsewhere in the same batch. Entities
    /// that violate a type invariant or miss a mandatory reference are
    /// rejected; dangling optional references and explicit edges are
    /// rejected individually while the rest of the batch is applied.
    pub fn upsert(&mut self, batch: &Batch) -> ChangeSummary {
        let mut summary = ChangeSummary::default();
        let mut staged = Staged::default();

        for entity in &batch.entities {
            let problems = entity_problems(entity);
            if !problems.is_empty() {
                summary.reject(
                    format!("{} {}", entity.kind().tag(), entity.id()),
                    problems.join("; "),
                );
                continue;
            }
            let id = entity.id().clone();
            match entity {
                Entity::BaseModel(e) => stage(&mut staged.bases, &id, e),
                Entity::Variation(e) => stage(&mut staged.variations, &id, e),
                Entity::Feature(e) => stage(&mut staged.features, &id, e),
                Entity::Library(e) => stage(&mut staged.libraries, &id, e),
                Entity::Repository(e) => stage(&mut staged.repositories, &id, e),
                Entity::Quality(e) => stage(&mut staged.quality, &id, e),
                Entity::Cve(e) => stage(&mut staged.cves, &id, e),
            }
        }

        // Mandatory references, resolved in dependency order.
        let tables = &self.tables;
        let bad_vars: Vec<EntityId> = staged
            .variations
            .values()
            .filter(|v| !staged.has(tables, EntityKind::BaseModel, &v.base_id))
            .map(|v| v.id.clone())
            .collect();
        for id in bad_vars {
            let v = staged.variations.remove(&id).expect("staged");
            summary.reject(
                format!("variation {id}"),
                format!("base_id {} does not resolve ({})", v.base_id,
                    edge_label(EdgeKind::BaseVariation, &v.base_id, &id)),
            );
        }
        let bad_cves: Vec<EntityId> = staged
            .cves
            .values()
            .filter(|c| !staged.has(tables, EntityKind::Library, &c.library_id))
            .map(|c| c.id.clone())
            .collect();
        for id in bad_cves {
            let c = staged.cves.remove(&id).expect("staged");
            summary.reject(format!("cve {id}"), format!("library_id {} does not resolve", c.library_id));
        }
        let bad_quality: Vec<EntityId> = staged
            .quality
            .values()
            .filter(|q| {
                !staged.has(tables, EntityKind::Variation, &q.variation_id)
                    || !staged.has(tables, EntityKind::Library, &q.library_id)
            })
            .map(|q| q.id.clone())
            .collect();
        for id in bad_quality {
            let q = staged.quality.remove(&id).expect("staged");
            summary.reject(
                format!("quality {id}"),
                format!(
                    "triple ({}, {}, {}) does not resolve",
                    q.variation_id, q.library_id, q.attribute
                ),
            );
        }

        // Optional references: drop dangling ones individually.
        let var_ids: Vec<EntityId> = staged.variations.keys().cloned().collect();
        for vid in var_ids {
            let dangling: Vec<EntityId> = staged.variations[&vid]
                .feature_ids
                .iter()
                .filter(|f| !staged.has(tables, EntityKind::Feature, f))
                .cloned()
                .collect();
            for f in dangling {
                staged.variations.get_mut(&vid).unwrap().feature_ids.remove(&f);
                summary.reject(edge_label(EdgeKind::VariationFeature, &vid, &f), "feature does not resolve");
            }
        }
        let lib_ids: Vec<EntityId> = staged.libraries.keys().cloned().collect();
        for lid in lib_ids {
            let dangling_vars: Vec<EntityId> = staged.libraries[&lid]
                .supported_variation_ids
                .iter()
                .filter(|v| !staged.has(tables, EntityKind::Variation, v))
                .cloned()
                .collect();
            for v in dangling_vars {
                staged.libraries.get_mut(&lid).unwrap().supported_variation_ids.remove(&v);
                summary.reject(edge_label(EdgeKind::LibraryVariation, &lid, &v), "variation does not resolve");
            }
            let dangling_cves: Vec<EntityId> = staged.libraries[&lid]
                .cve_ids
                .iter()
                .filter(|c| !staged.has(tables, EntityKind::Cve, c))
                .cloned()
                .collect();
            for c in dangling_cves {
                staged.libraries.get_mut(&lid).unwrap().cve_ids.remove(&c);
                summary.reject(edge_label(EdgeKind::LibraryCve, &lid, &c), "vulnerability does not resolve");
            }
        }

        // Derived (weak) edges from relationship fields.
        let mut weak: Vec<Edge> = Vec::new();
        for v in staged.variations.values() {
            weak.push(Edge::new(EdgeKind::BaseVariation, v.base_id.clone(), v.id.clone()));
            for f in &v.feature_ids {
                weak.push(Edge::new(EdgeKind::VariationFeature, v.id.clone(), f.clone()));
            }
        }
        for l in staged.libraries.values() {
            for v in &l.supported_variation_ids {
                weak.push(Edge::new(EdgeKind::LibraryVariation, l.id.clone(), v.clone()));
            }
            for c in &l.cve_ids {
                weak.push(Edge::new(EdgeKind::LibraryCve, l.id.clone(), c.clone()));
            }
        }
        for c in staged.cves.values() {
            weak.push(Edge::new(EdgeKind::LibraryCve, c.library_id.clone(), c.id.clone()));
        }

        // Explicit edges: endpoints must resolve against graph + batch.
        let mut strong: Vec<&Edge> = Vec::new();
        for e in &batch.edges {
            let (from_kind, to_kind) = e.kind.endpoint_kinds();
            let label = edge_label(e.kind, &e.from, &e.to);
            if !staged.has(tables, from_kind, &e.from) || !staged.has(tables, to_kind, &e.to) {
                summary.reject(label, "dangling reference");
                continue;
            }
            if e.evidence.iter().any(|ev| !ev.is_well_formed()) {
                summary.reject(label, "malformed evidence");
                continue;
            }
            if e.kind == EdgeKind::BaseVariation {
                let base_of = staged
                    .variations
                    .get(&e.to)
                    .or_else(|| tables.variations.get(&e.to))
                    .map(|v| &v.base_id);
                if base_of != Some(&e.from) {
                    summary.reject(label, "conflicts with the variation's base_id");
                    continue;
                }
            }
            strong.push(e);
        }

        // Apply entities.
        let mut reindex: Vec<EntityId> = Vec::new();
        macro_rules! apply_table {
            ($staged:expr, $table:expr, $index:expr) => {
                for (id, e) in $staged.iter() {
                    let (ins, upd) = merge_into(&mut $table, id, e);
                    if ins {
                        summary.inserted.entities += 1;
                    }
                    if upd {
                        summary.updated.entities += 1;
                    }
                    if (ins || upd) && $index {
                        reindex.push(id.clone());
                    }
                }
            };
        }
        apply_table!(staged.bases, self.tables.base_models, true);
        apply_table!(staged.features, self.tables.features, true);
        apply_table!(staged.variations, self.tables.variations, true);
        apply_table!(staged.libraries, self.tables.libraries, true);
        apply_table!(staged.repositories, self.tables.repositories, false);
        apply_table!(staged.cves, self.tables.cves, false);
        apply_table!(staged.quality, self.tables.quality, false);

        // Apply edges: weak ones only ensure existence, strong ones merge.
        let mut touched: Vec<EdgeKey> = Vec::new();
        for e in weak {
            let key = e.key();
            if !self.tables.edges.contains_key(&key) {
                self.tables.edges.insert(key.clone(), e);
                summary.inserted.edges += 1;
            }
            touched.push(key);
        }
        // Repeats of a key inside one batch collapse first (last weight,
        // evidence union), so applying the batch twice is a no-op.
        let mut collapsed: Vec<Edge> = Vec::new();
        let mut slot: BTreeMap<EdgeKey, usize> = BTreeMap::new();
        for e in strong {
            match slot.get(&e.key()) {
                Some(&i) => {
                    collapsed[i].weight = e.weight;
                    merge_evidence(&mut collapsed[i].evidence, &e.evidence);
                }
                None => {
                    slot.insert(e.key(), collapsed.len());
                    collapsed.push(e.clone());
                }
            }
        }
        for e in &collapsed {
            let key = e.key();
            match self.tables.edges.get_mut(&key) {
                None => {
                    self.tables.edges.insert(key.clone(), e.clone());
                    summary.inserted.edges += 1;
                }
                Some(existing) => {
                    let mut merged = existing.clone();
                    merged.weight = e.weight;
                    merge_evidence(&mut merged.evidence, &e.evidence);
                    if merged != *existing {
                        *existing = merged;
                        summary.updated.edges += 1;
                    }
                }
            }
            touched.push(key);
        }
        for key in &touched {
            self.sync_fields(key);
        }

        // Repository dependency edges follow library existence.
        let mut repo_edges: Vec<Edge> = Vec::new();
        for repo in self.tables.repositories.values() {
            for name in &repo.dependency_names {
                let lib = Library::id_for(name);
                if self.tables.libraries.contains_key(&lib) {
                    repo_edges.push(Edge::new(EdgeKind::RepoLibrary, repo.id.clone(), lib));
                }
            }
        }
        for e in repo_edges {
            let key = e.key();
            if !self.tables.edges.contains_key(&key) {
                self.tables.edges.insert(key, e);
                summary.inserted.edges += 1;
            }
        }

        for id in reindex {
            if let Some(e) = self.tables.entity(&id) {
                self.index.index_entity(&e);
            }
        }
        summary
    }

    /// Mirrors an edge into the relationship field of its source entity.
    fn sync_fields(&mut self, key: &EdgeKey) {
        let t = &mut self.tables;
        match key.kind {
            EdgeKind::BaseVariation => {}
            EdgeKind::VariationFeature => {
                if let Some(v) = t.variations.get_mut(&key.from) {
                    v.feature_ids.insert(key.to.clone());
                }
            }
            EdgeKind::LibraryVariation => {
                if let Some(l) = t.libraries.get_mut(&key.from) {
                    l.supported_variation_ids.insert(key.to.clone());
                }
            }
            EdgeKind::LibraryCve => {
                if let Some(l) = t.libraries.get_mut(&key.from) {
                    l.cve_ids.insert(key.to.clone());
                }
            }
            EdgeKind::RepoLibrary => {
                let name = t.libraries.get(&key.to).map(|l| l.distribution_name.clone());
                if let (Some(r), Some(name)) = (t.repositories.get_mut(&key.from), name) {
                    r.dependency_names.insert(name);
                }
            }
        }
    }
}
