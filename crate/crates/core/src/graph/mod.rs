//! Typed knowledge graph with an embedded text index.
//!
//! Entities are keyed by content-derived ids, so independent ingestion runs
//! converge on the same identifiers. The store is update-only: [`KnowledgeGraph::upsert`]
//! inserts or merges, never deletes. Relationship fields on entities
//! (`base_id`, `feature_ids`, `supported_variation_ids`, `cve_ids`,
//! `dependency_names`) are mirrored one-to-one by the edge table.

pub mod index;
pub mod snapshot;
mod store;
pub mod types;
mod upsert;
pub mod validate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

pub use index::{IndexField, IndexedDoc, SearchHit, TextIndex};
pub use store::GraphStore;
pub use types::*;
pub use upsert::{ChangeCounts, ChangeSummary, Rejection};
pub use validate::{Violation, ViolationKind};

use crate::error::{Error, Result};

/// Raw entity and edge tables. Constructing a graph from tables performs no
/// validation; use [`validate::validate`] to check integrity.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GraphTables {
    pub base_models: BTreeMap<EntityId, BaseModel>,
    pub variations: BTreeMap<EntityId, ModelVariation>,
    pub features: BTreeMap<EntityId, Feature>,
    pub libraries: BTreeMap<EntityId, Library>,
    pub repositories: BTreeMap<EntityId, Repository>,
    pub quality: BTreeMap<EntityId, QualityAggregate>,
    pub cves: BTreeMap<EntityId, CveRecord>,
    pub edges: BTreeMap<EdgeKey, Edge>,
}

impl GraphTables {
    pub fn entity_count(&self) -> usize {
        self.base_models.len()
            + self.variations.len()
            + self.features.len()
            + self.libraries.len()
            + self.repositories.len()
            + self.quality.len()
            + self.cves.len()
    }

    /// Every entity, ordered by kind then id.
    pub fn entities(&self) -> Vec<Entity> {
        let mut out: Vec<Entity> = Vec::with_capacity(self.entity_count());
        out.extend(self.base_models.values().cloned().map(Entity::from));
        out.extend(self.variations.values().cloned().map(Entity::from));
        out.extend(self.features.values().cloned().map(Entity::from));
        out.extend(self.libraries.values().cloned().map(Entity::from));
        out.extend(self.repositories.values().cloned().map(Entity::from));
        out.extend(self.quality.values().cloned().map(Entity::from));
        out.extend(self.cves.values().cloned().map(Entity::from));
        out
    }

    pub fn kind_of(&self, id: &EntityId) -> Option<EntityKind> {
        if self.base_models.contains_key(id) {
            Some(EntityKind::BaseModel)
        } else if self.variations.contains_key(id) {
            Some(EntityKind::Variation)
        } else if self.features.contains_key(id) {
            Some(EntityKind::Feature)
        } else if self.libraries.contains_key(id) {
            Some(EntityKind::Library)
        } else if self.repositories.contains_key(id) {
            Some(EntityKind::Repository)
        } else if self.quality.contains_key(id) {
            Some(EntityKind::Quality)
        } else if self.cves.contains_key(id) {
            Some(EntityKind::Cve)
        } else {
            None
        }
    }

    pub fn has(&self, kind: EntityKind, id: &EntityId) -> bool {
        match kind {
            EntityKind::BaseModel => self.base_models.contains_key(id),
            EntityKind::Variation => self.variations.contains_key(id),
            EntityKind::Feature => self.features.contains_key(id),
            EntityKind::Library => self.libraries.contains_key(id),
            EntityKind::Repository => self.repositories.contains_key(id),
            EntityKind::Quality => self.quality.contains_key(id),
            EntityKind::Cve => self.cves.contains_key(id),
        }
    }

    pub fn entity(&self, id: &EntityId) -> Option<Entity> {
        match self.kind_of(id)? {
            EntityKind::BaseModel => self.base_models.get(id).cloned().map(Entity::from),
            EntityKind::Variation => self.variations.get(id).cloned().map(Entity::from),
            EntityKind::Feature => self.features.get(id).cloned().map(Entity::from),
            EntityKind::Library => self.libraries.get(id).cloned().map(Entity::from),
            EntityKind::Repository => self.repositories.get(id).cloned().map(Entity::from),
            EntityKind::Quality => self.quality.get(id).cloned().map(Entity::from),
            EntityKind::Cve => self.cves.get(id).cloned().map(Entity::from),
        }
    }
}

/// The knowledge graph: entity/edge tables plus the text index over them.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    tables: GraphTables,
    index: TextIndex,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.tables == other.tables
    }
}

/// Entities and edges reachable from a root within a hop limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subgraph {
    pub root: EntityId,
    pub depth: usize,
    pub entities: Vec<Entity>,
    pub edges: Vec<Edge>,
}

impl Subgraph {
    pub fn node_ids(&self) -> BTreeSet<EntityId> {
        self.entities.iter().map(|e| e.id().clone()).collect()
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps existing tables and builds the index. No integrity checks.
    pub fn from_tables(tables: GraphTables) -> Self {
        let mut index = TextIndex::new();
        for e in tables.entities() {
            index.index_entity(&e);
        }
        KnowledgeGraph { tables, index }
    }

    pub fn tables(&self) -> &GraphTables {
        &self.tables
    }

    pub fn into_tables(self) -> GraphTables {
        self.tables
    }

    pub fn index(&self) -> &TextIndex {
        &self.index
    }

    pub fn is_empty(&self) -> bool {
        self.tables.entity_count() == 0 && self.tables.edges.is_empty()
    }

    pub fn entity(&self, id: &EntityId) -> Option<Entity> {
        self.tables.entity(id)
    }

    pub fn base_model(&self, id: &EntityId) -> Option<&BaseModel> {
        self.tables.base_models.get(id)
    }

    pub fn variation(&self, id: &EntityId) -> Option<&ModelVariation> {
        self.tables.variations.get(id)
    }

    pub fn feature(&self, id: &EntityId) -> Option<&Feature> {
        self.tables.features.get(id)
    }

    pub fn library(&self, id: &EntityId) -> Option<&Library> {
        self.tables.libraries.get(id)
    }

    pub fn library_by_name(&self, name: &str) -> Option<&Library> {
        self.tables.libraries.get(&Library::id_for(name))
    }

    pub fn edge(&self, kind: EdgeKind, from: &EntityId, to: &EntityId) -> Option<&Edge> {
        self.tables.edges.get(&EdgeKey {
            kind,
            from: from.clone(),
            to: to.clone(),
        })
    }

    /// Quality aggregates attached to one (variation, library) pair, ordered
    /// by attribute.
    pub fn quality_for(&self, variation: &EntityId, library: &EntityId) -> Vec<&QualityAggregate> {
        let mut out: Vec<&QualityAggregate> = self
            .tables
            .quality
            .values()
            .filter(|q| &q.variation_id == variation && &q.library_id == library)
            .collect();
        out.sort_by(|a, b| a.attribute.cmp(&b.attribute));
        out
    }

    /// Supported (variation, library) pairs in key order.
    pub fn variation_library_pairs(&self) -> Vec<(&ModelVariation, &Library)> {
        self.tables
            .edges
            .values()
            .filter(|e| e.kind == EdgeKind::LibraryVariation)
            .filter_map(|e| Some((self.variation(&e.to)?, self.library(&e.from)?)))
            .collect()
    }

    /// Entities reachable from `root` within `depth` hops, treating edges as
    /// undirected. The result contains every edge between its nodes.
    pub fn get_subgraph(&self, root: &EntityId, depth: usize) -> Result<Subgraph> {
        if self.tables.kind_of(root).is_none() {
            return Err(Error::NotFound(format!("entity {root}")));
        }
        let mut adjacency: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
        for e in self.tables.edges.values() {
            adjacency.entry(&e.from).or_default().push(&e.to);
            adjacency.entry(&e.to).or_default().push(&e.from);
        }
        let mut seen: BTreeSet<EntityId> = BTreeSet::from([root.clone()]);
        let mut queue = VecDeque::from([(root, 0usize)]);
        while let Some((node, d)) = queue.pop_front() {
            if d == depth {
                continue;
            }
            for next in adjacency.get(node).into_iter().flatten() {
                if self.tables.kind_of(next).is_some() && seen.insert((*next).clone()) {
                    queue.push_back((next, d + 1));
                }
            }
        }
        let mut entities: Vec<Entity> = seen.iter().filter_map(|id| self.entity(id)).collect();
        entities.sort_by(|a, b| a.kind().cmp(&b.kind()).then_with(|| a.id().cmp(b.id())));
        let edges = self
            .tables
            .edges
            .values()
            .filter(|e| seen.contains(&e.from) && seen.contains(&e.to))
            .cloned()
            .collect();
        Ok(Subgraph {
            root: root.clone(),
            depth,
            entities,
            edges,
        })
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate::validate(self)
    }
}
