use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::text::{collapse_whitespace, normalize_phrase};

/// Opaque, content-derived entity identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    /// `{prefix}-{first 16 hex chars of sha256(kind \0 parts...)}`.
    pub fn derive(kind: EntityKind, parts: &[&str]) -> Self {
        let mut h = Sha256::new();
        h.update(kind.tag().as_bytes());
        for p in parts {
            h.update([0u8]);
            h.update(p.as_bytes());
        }
        let digest = hex::encode(h.finalize());
        EntityId(format!("{}-{}", kind.prefix(), &digest[..16]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    BaseModel,
    Variation,
    Feature,
    Library,
    Repository,
    Quality,
    Cve,
}

impl EntityKind {
    pub fn tag(self) -> &'static str {
        match self {
            EntityKind::BaseModel => "base_model",
            EntityKind::Variation => "variation",
            EntityKind::Feature => "feature",
            EntityKind::Library => "library",
            EntityKind::Repository => "repository",
            EntityKind::Quality => "quality",
            EntityKind::Cve => "cve",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            EntityKind::BaseModel => "base",
            EntityKind::Variation => "var",
            EntityKind::Feature => "feat",
            EntityKind::Library => "lib",
            EntityKind::Repository => "repo",
            EntityKind::Quality => "qual",
            EntityKind::Cve => "cve",
        }
    }
}

/// Verbatim provenance for an extracted fact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EvidenceRef {
    pub source_url: String,
    pub fragment: String,
    pub retrieved_at: DateTime<Utc>,
}

impl EvidenceRef {
    pub fn new(source_url: impl Into<String>, fragment: impl Into<String>, retrieved_at: DateTime<Utc>) -> Self {
        EvidenceRef {
            source_url: source_url.into(),
            fragment: fragment.into(),
            retrieved_at,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        !self.fragment.trim().is_empty() && is_well_formed_url(&self.source_url)
    }
}

pub(crate) fn is_well_formed_url(s: &str) -> bool {
    match url::Url::parse(s) {
        Ok(u) => matches!(u.scheme(), "http" | "https" | "file") && (u.has_host() || u.scheme() == "file"),
        Err(_) => false,
    }
}

/// Appends the evidence entries of `incoming` that are not in `existing`.
pub(crate) fn merge_evidence(existing: &mut Vec<EvidenceRef>, incoming: &[EvidenceRef]) {
    for e in incoming {
        if !existing.contains(e) {
            existing.push(e.clone());
        }
    }
}

/// Canonical model family, e.g. "Regression".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    pub id: EntityId,
    pub name: String,
    pub definition: String,
    pub aliases: BTreeSet<String>,
}

impl BaseModel {
    pub fn new(name: &str, definition: &str) -> Self {
        BaseModel {
            id: Self::id_for(name),
            name: collapse_whitespace(name),
            definition: definition.to_string(),
            aliases: BTreeSet::new(),
        }
    }

    pub fn with_aliases<I: IntoIterator<Item = S>, S: Into<String>>(mut self, aliases: I) -> Self {
        self.aliases = aliases.into_iter().map(Into::into).collect();
        self
    }

    pub fn id_for(name: &str) -> EntityId {
        EntityId::derive(EntityKind::BaseModel, &[&collapse_whitespace(name).to_lowercase()])
    }
}

/// A named specialization of a base model, e.g. "Ridge Regression".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVariation {
    pub id: EntityId,
    pub name: String,
    pub base_id: EntityId,
    pub definition: String,
    pub feature_ids: BTreeSet<EntityId>,
    pub evidence: Vec<EvidenceRef>,
}

impl ModelVariation {
    pub fn new(name: &str, base_id: &EntityId, definition: &str) -> Self {
        ModelVariation {
            id: Self::id_for(base_id, name),
            name: collapse_whitespace(name),
            base_id: base_id.clone(),
            definition: definition.to_string(),
            feature_ids: BTreeSet::new(),
            evidence: Vec::new(),
        }
    }

    pub fn id_for(base_id: &EntityId, name: &str) -> EntityId {
        EntityId::derive(
            EntityKind::Variation,
            &[base_id.as_str(), &collapse_whitespace(name).to_lowercase()],
        )
    }
}

/// A capability or constraint phrase attached to variations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub id: EntityId,
    pub phrase: String,
    pub definition: Option<String>,
}

impl Feature {
    pub fn new(phrase: &str) -> Self {
        let phrase = normalize_phrase(phrase);
        Feature {
            id: Self::id_for(&phrase),
            phrase,
            definition: None,
        }
    }

    pub fn id_for(phrase: &str) -> EntityId {
        EntityId::derive(EntityKind::Feature, &[&normalize_phrase(phrase)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Popularity {
    pub stars: u64,
    pub forks: u64,
}

/// How a library's AI-relatedness was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AiBasis {
    Tag,
    Heuristic,
    #[default]
    None,
}

/// A registry distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Library {
    pub id: EntityId,
    pub distribution_name: String,
    pub summary: String,
    pub homepage: Option<String>,
    pub keywords: Vec<String>,
    pub classifiers: Vec<String>,
    pub version: String,
    pub ai_related: bool,
    pub ai_score: f64,
    pub ai_basis: AiBasis,
    pub supported_variation_ids: BTreeSet<EntityId>,
    pub cve_ids: BTreeSet<EntityId>,
    pub popularity: Option<Popularity>,
    pub evidence: Vec<EvidenceRef>,
}

impl Library {
    pub fn new(distribution_name: &str) -> Self {
        Library {
            id: Self::id_for(distribution_name),
            distribution_name: normalize_distribution_name(distribution_name),
            summary: String::new(),
            homepage: None,
            keywords: Vec::new(),
            classifiers: Vec::new(),
            version: String::new(),
            ai_related: false,
            ai_score: 0.0,
            ai_basis: AiBasis::None,
            supported_variation_ids: BTreeSet::new(),
            cve_ids: BTreeSet::new(),
            popularity: None,
            evidence: Vec::new(),
        }
    }

    pub fn id_for(distribution_name: &str) -> EntityId {
        EntityId::derive(EntityKind::Library, &[&normalize_distribution_name(distribution_name)])
    }
}

/// Registry name normalization: lowercase, runs of `-`, `_`, `.` become `-`.
pub fn normalize_distribution_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut prev_sep = false;
    for c in name.trim().chars() {
        if matches!(c, '-' | '_' | '.') {
            if !prev_sep {
                out.push('-');
            }
            prev_sep = true;
        } else {
            out.extend(c.to_lowercase());
            prev_sep = false;
        }
    }
    out
}

/// A source repository that imports libraries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repository {
    pub id: EntityId,
    pub name: String,
    pub url: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub stars: u64,
    #[serde(default)]
    pub forks: u64,
    #[serde(default)]
    pub size_kb: u64,
    #[serde(default)]
    pub language: String,
    #[serde(default)]
    pub contributors: u64,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub dependency_names: BTreeSet<String>,
}

impl Repository {
    pub fn id_for(url: &str) -> EntityId {
        EntityId::derive(EntityKind::Repository, &[&url.trim().trim_end_matches('/').to_lowercase()])
    }
}

/// Confidence-weighted sentiment for one (variation, library, attribute).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityAggregate {
    pub id: EntityId,
    pub variation_id: EntityId,
    pub library_id: EntityId,
    pub attribute: String,
    pub score: f64,
    pub review_count: u64,
    pub evidence: Vec<EvidenceRef>,
}

impl QualityAggregate {
    pub fn id_for(variation_id: &EntityId, library_id: &EntityId, attribute: &str) -> EntityId {
        EntityId::derive(
            EntityKind::Quality,
            &[variation_id.as_str(), library_id.as_str(), &attribute.to_lowercase()],
        )
    }
}

/// A known vulnerability affecting a library version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CveRecord {
    pub id: EntityId,
    pub library_id: EntityId,
    pub affected_version_range: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    BaseVariation,
    VariationFeature,
    LibraryVariation,
    LibraryCve,
    RepoLibrary,
}

impl EdgeKind {
    pub fn endpoint_kinds(self) -> (EntityKind, EntityKind) {
        match self {
            EdgeKind::BaseVariation => (EntityKind::BaseModel, EntityKind::Variation),
            EdgeKind::VariationFeature => (EntityKind::Variation, EntityKind::Feature),
            EdgeKind::LibraryVariation => (EntityKind::Library, EntityKind::Variation),
            EdgeKind::LibraryCve => (EntityKind::Library, EntityKind::Cve),
            EdgeKind::RepoLibrary => (EntityKind::Repository, EntityKind::Library),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub kind: EdgeKind,
    pub from: EntityId,
    pub to: EntityId,
}

/// A labeled edge. `weight` is a co-occurrence count where meaningful, 1
/// otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub from: EntityId,
    pub to: EntityId,
    pub weight: u32,
    pub evidence: Vec<EvidenceRef>,
}

impl Edge {
    pub fn new(kind: EdgeKind, from: EntityId, to: EntityId) -> Self {
        Edge {
            kind,
            from,
            to,
            weight: 1,
            evidence: Vec::new(),
        }
    }

    pub fn with_weight(mut self, weight: u32) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_evidence(mut self, evidence: Vec<EvidenceRef>) -> Self {
        self.evidence = evidence;
        self
    }

    pub fn key(&self) -> EdgeKey {
        EdgeKey {
            kind: self.kind,
            from: self.from.clone(),
            to: self.to.clone(),
        }
    }
}

/// Any storable entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Entity {
    BaseModel(BaseModel),
    Variation(ModelVariation),
    Feature(Feature),
    Library(Library),
    Repository(Repository),
    Quality(QualityAggregate),
    Cve(CveRecord),
}

impl Entity {
    pub fn id(&self) -> &EntityId {
        match self {
            Entity::BaseModel(e) => &e.id,
            Entity::Variation(e) => &e.id,
            Entity::Feature(e) => &e.id,
            Entity::Library(e) => &e.id,
            Entity::Repository(e) => &e.id,
            Entity::Quality(e) => &e.id,
            Entity::Cve(e) => &e.id,
        }
    }

    pub fn kind(&self) -> EntityKind {
        match self {
            Entity::BaseModel(_) => EntityKind::BaseModel,
            Entity::Variation(_) => EntityKind::Variation,
            Entity::Feature(_) => EntityKind::Feature,
            Entity::Library(_) => EntityKind::Library,
            Entity::Repository(_) => EntityKind::Repository,
            Entity::Quality(_) => EntityKind::Quality,
            Entity::Cve(_) => EntityKind::Cve,
        }
    }

    /// Human-readable label used in diagnostics and subgraph views.
    pub fn label(&self) -> &str {
        match self {
            Entity::BaseModel(e) => &e.name,
            Entity::Variation(e) => &e.name,
            Entity::Feature(e) => &e.phrase,
            Entity::Library(e) => &e.distribution_name,
            Entity::Repository(e) => &e.name,
            Entity::Quality(e) => &e.attribute,
            Entity::Cve(e) => e.id.as_str(),
        }
    }
}

/// A batch of entities and explicit edges submitted to [`crate::graph::KnowledgeGraph::upsert`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub entities: Vec<Entity>,
    pub edges: Vec<Edge>,
}

impl Batch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entity: impl Into<Entity>) -> &mut Self {
        self.entities.push(entity.into());
        self
    }

    pub fn edge(&mut self, edge: Edge) -> &mut Self {
        self.edges.push(edge);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.edges.is_empty()
    }

    pub fn extend(&mut self, other: Batch) {
        self.entities.extend(other.entities);
        self.edges.extend(other.edges);
    }
}

macro_rules! entity_from {
    ($($ty:ty => $variant:ident),* $(,)?) => {
        $(impl From<$ty> for Entity {
            fn from(e: $ty) -> Self {
                Entity::$variant(e)
            }
        })*
    };
}

entity_from! {
    BaseModel => BaseModel,
    ModelVariation => Variation,
    Feature => Feature,
    Library => Library,
    Repository => Repository,
    QualityAggregate => Quality,
    CveRecord => Cve,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_content_derived_and_case_insensitive() {
        assert_eq!(BaseModel::id_for("Regression"), BaseModel::id_for("regression"));
        assert_ne!(BaseModel::id_for("Regression"), BaseModel::id_for("Transformer"));
        assert!(BaseModel::id_for("Regression").as_str().starts_with("base-"));
        assert_eq!(Library::id_for("Scikit_Learn"), Library::id_for("scikit-learn"));
    }

    #[test]
    fn distribution_names_normalize() {
        assert_eq!(normalize_distribution_name("Foo__Bar.baz"), "foo-bar-baz");
    }

    #[test]
    fn evidence_url_check() {
        let t = chrono::DateTime::<Utc>::from_timestamp(0, 0).unwrap();
        assert!(EvidenceRef::new("https://example.org/a", "x", t).is_well_formed());
        assert!(!EvidenceRef::new("not a url", "x", t).is_well_formed());
        assert!(!EvidenceRef::new("https://example.org/a", "  ", t).is_well_formed());
    }
}
