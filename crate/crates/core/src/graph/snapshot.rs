//! Deterministic JSON-lines snapshots with a checksummed manifest.
//!
//! One file per table, one record per line, records sorted by id and keys in
//! declaration order. Writing the same graph twice gives byte-identical
//! files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::types::*;
use super::{GraphTables, KnowledgeGraph};

pub const FORMAT: &str = "modelselect-snapshot/1";
pub const MANIFEST: &str = "manifest.json";

pub const BASE_MODELS: &str = "base_models.jsonl";
pub const VARIATIONS: &str = "variations.jsonl";
pub const FEATURES: &str = "features.jsonl";
pub const LIBRARIES: &str = "libraries.jsonl";
pub const REPOSITORIES: &str = "repositories.jsonl";
pub const QUALITY: &str = "quality.jsonl";
pub const CVES: &str = "cves.jsonl";
pub const EDGES: &str = "edges.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: checksum mismatch (manifest {expected}, actual {actual})")]
    Checksum {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    /// Hash over all file checksums; identifies the snapshot contents.
    pub version: String,
    pub files: Vec<ManifestFile>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn jsonl<'a, T: Serialize + 'a>(records: impl Iterator<Item = &'a T>) -> (String, usize) {
    let mut out = String::new();
    let mut n = 0;
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("graph records serialize"));
        out.push('\n');
        n += 1;
    }
    (out, n)
}

/// Serialized snapshot: `(file name, contents)` pairs plus the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub files: Vec<(String, String)>,
    pub manifest: Manifest,
}

impl Encoded {
    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn encode(graph: &KnowledgeGraph) -> Encoded {
    let t = graph.tables();
    let tables = [
        (BASE_MODELS, jsonl(t.base_models.values())),
        (VARIATIONS, jsonl(t.variations.values())),
        (FEATURES, jsonl(t.features.values())),
        (LIBRARIES, jsonl(t.libraries.values())),
        (REPOSITORIES, jsonl(t.repositories.values())),
        (QUALITY, jsonl(t.quality.values())),
        (CVES, jsonl(t.cves.values())),
        (EDGES, jsonl(t.edges.values())),
    ];
    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut all = Sha256::new();
    for (name, (body, records)) in tables {
        let sum = sha256_hex(body.as_bytes());
        all.update(name.as_bytes());
        all.update([0u8]);
        all.update(sum.as_bytes());
        entries.push(ManifestFile {
            name: name.to_string(),
            records,
            sha256: sum,
        });
        files.push((name.to_string(), body));
    }
    Encoded {
        files,
        manifest: Manifest {
            format: FORMAT.to_string(),
            version: hex::encode(all.finalize())[..16].to_string(),
            files: entries,
        },
    }
}

/// Snapshot version of a graph without writing it.
pub fn version_of(graph: &KnowledgeGraph) -> String {
    encode(graph).manifest.version
}

pub fn write(graph: &KnowledgeGraph, dir: &Path) -> Result<Manifest, SnapshotError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SnapshotError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let enc = encode(graph);
    for (name, body) in &enc.files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
    }
    // The manifest goes last so a torn write never looks complete.
    let path = dir.join(MANIFEST);
    let tmp = dir.join(format!("{MANIFEST}.tmp"));
    fs::write(&tmp, enc.manifest_json()).map_err(io(&tmp))?;
    fs::rename(&tmp, &path).map_err(io(&path))?;
    Ok(enc.manifest)
}

fn parse_lines<T: DeserializeOwned>(file: &str, body: &str) -> Result<Vec<T>, SnapshotError> {
    body.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SnapshotError::Parse {
                file: file.to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn keyed<T>(file: &str, records: Vec<T>, id: impl Fn(&T) -> &EntityId) -> Result<std::collections::BTreeMap<EntityId, T>, SnapshotError> {
    let mut out = std::collections::BTreeMap::new();
    for (i, r) in records.into_iter().enumerate() {
        let key = id(&r).clone();
        if out.insert(key.clone(), r).is_some() {
            return Err(SnapshotError::Parse {
                file: file.to_string(),
                line: i + 1,
                message: format!("duplicate id {key}"),
            });
        }
    }
    Ok(out)
}

/// Decodes snapshot files, verifying each against the manifest checksums.
pub fn decode(manifest: &Manifest, read: impl Fn(&str) -> Result<String, SnapshotError>) -> Result<KnowledgeGraph, SnapshotError> {
    if manifest.format != FORMAT {
        return Err(SnapshotError::Manifest(format!("unsupported format {:?}", manifest.format)));
    }
    let body = |name: &str| -> Result<String, SnapshotError> {
        let entry = manifest
            .files
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| SnapshotError::Manifest(format!("missing entry for {name}")))?;
        let body = read(name)?;
        let actual = sha256_hex(body.as_bytes());
        if actual != entry.sha256 {
            return Err(SnapshotError::Checksum {
                file: name.to_string(),
                expected: entry.sha256.clone(),
                actual,
            });
        }
        Ok(body)
    };
    let mut tables = GraphTables {
        base_models: keyed(BASE_MODELS, parse_lines(BASE_MODELS, &body(BASE_MODELS)?)?, |e: &BaseModel| &e.id)?,
        variations: keyed(VARIATIONS, parse_lines(VARIATIONS, &body(VARIATIONS)?)?, |e: &ModelVariation| &e.id)?,
        features: keyed(FEATURES, parse_lines(FEATURES, &body(FEATURES)?)?, |e: &Feature| &e.id)?,
        libraries: keyed(LIBRARIES, parse_lines(LIBRARIES, &body(LIBRARIES)?)?, |e: &Library| &e.id)?,
        repositories: keyed(REPOSITORIES, parse_lines(REPOSITORIES, &body(REPOSITORIES)?)?, |e: &Repository| &e.id)?,
        quality: keyed(QUALITY, parse_lines(QUALITY, &body(QUALITY)?)?, |e: &QualityAggregate| &e.id)?,
        cves: keyed(CVES, parse_lines(CVES, &body(CVES)?)?, |e: &CveRecord| &e.id)?,
        edges: Default::default(),
    };
    let edges: Vec<Edge> = parse_lines(EDGES, &body(EDGES)?)?;
    for (i, e) in edges.into_iter().enumerate() {
        if tables.edges.insert(e.key(), e).is_some() {
            return Err(SnapshotError::Parse {
                file: EDGES.to_string(),
                line: i + 1,
                message: "duplicate edge".into(),
            });
        }
    }
    Ok(KnowledgeGraph::from_tables(tables))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, SnapshotError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|source| SnapshotError::Io { path, source })?;
    serde_json::from_str(&text).map_err(|e| SnapshotError::Manifest(e.to_string()))
}

/// Loads a snapshot directory. Integrity is checked by checksum only; call
/// [`KnowledgeGraph::validate`] for semantic checks.
pub fn read(dir: &Path) -> Result<KnowledgeGraph, SnapshotError> {
    let manifest = read_manifest(dir)?;
    decode(&manifest, |name| {
        let path = dir.join(name);
        fs::read_to_string(&path).map_err(|source| SnapshotError::Io { path, source })
    })
}
