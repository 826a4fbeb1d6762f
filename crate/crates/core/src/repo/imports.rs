//! Line-oriented import scanner and manifest readers.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{RepoSnapshotEntry, SourceFile};
use crate::graph::{normalize_distribution_name, EntityId};

/// One import statement occurrence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ImportRecord {
    pub repo_id: EntityId,
    pub import_root: String,
    pub source_path: String,
    pub line_number: usize,
}

/// An import root and the 1-based line it was found on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportHit {
    pub root: String,
    pub line: usize,
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

fn first_segment(module: &str) -> Option<String> {
    let root = module.split('.').next()?.trim();
    is_identifier(root).then(|| root.to_string())
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn statement_roots(stmt: &str, out: &mut Vec<String>) {
    let stmt = stmt.trim();
    if let Some(rest) = stmt.strip_prefix("import ") {
        for item in rest.trim_start_matches('(').trim_end_matches(')').split(',') {
            let module = item.split_whitespace().next().unwrap_or("");
            if let Some(root) = first_segment(module) {
                out.push(root);
            }
        }
    } else if let Some(rest) = stmt.strip_prefix("from ") {
        let mut parts = rest.split_whitespace();
        let module = parts.next().unwrap_or("");
        if parts.next() != Some("import") || module.starts_with('.') {
            return;
        }
        if let Some(root) = first_segment(module) {
            out.push(root);
        }
    }
}

/// Every import statement root in `text`, in order, with its line number.
/// Comment lines, triple-quoted blocks and relative imports are skipped.
pub fn scan_imports(text: &str) -> Vec<ImportHit> {
    let mut out = Vec::new();
    let mut open: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(delim) = open {
            if line.matches(delim).count() % 2 == 1 {
                open = None;
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        for delim in ["\"\"\"", "'''"] {
            if line.matches(delim).count() % 2 == 1 {
                open = Some(delim);
            }
        }
        if line.starts_with("\"\"\"") || line.starts_with("'''") {
            continue;
        }
        let mut roots = Vec::new();
        for stmt in strip_comment(line).split(';') {
            statement_roots(stmt, &mut roots);
        }
        out.extend(roots.into_iter().map(|root| ImportHit { root, line: i + 1 }));
    }
    out
}

/// Distinct import roots of a source text.
pub fn parse_imports(text: &str) -> BTreeSet<String> {
    scan_imports(text).into_iter().map(|h| h.root).collect()
}

/// Distribution name at the start of a requirement specifier
/// (`pandas>=1.0`, `torch[cuda]; python_version>'3'`).
pub fn requirement_name(spec: &str) -> Option<String> {
    let spec = spec.trim();
    let end = spec
        .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')))
        .unwrap_or(spec.len());
    let name = &spec[..end];
    (!name.is_empty() && name.chars().next().is_some_and(|c| c.is_ascii_alphanumeric()))
        .then(|| normalize_distribution_name(name))
}

pub fn parse_requirements(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| strip_comment(l).trim())
        .filter(|l| !l.is_empty() && !l.starts_with('-') && !l.contains("://"))
        .filter_map(requirement_name)
        .collect()
}

/// `[project].dependencies` and `[tool.poetry.dependencies]` of a
/// pyproject file. Unparseable files yield nothing.
pub fn parse_pyproject(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let Ok(doc) = text.parse::<toml::Table>() else {
        return out;
    };
    if let Some(deps) = doc
        .get("project")
        .and_then(|p| p.get("dependencies"))
        .and_then(|d| d.as_array())
    {
        out.extend(deps.iter().filter_map(|d| d.as_str()).filter_map(requirement_name));
    }
    if let Some(deps) = doc
        .get("tool")
        .and_then(|t| t.get("poetry"))
        .and_then(|p| p.get("dependencies"))
        .and_then(|d| d.as_table())
    {
        out.extend(
            deps.keys()
                .filter(|k| k.as_str() != "python")
                .filter_map(|k| requirement_name(k)),
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractionLimits {
    pub max_files: usize,
    pub max_bytes_per_file: usize,
}

impl Default for ExtractionLimits {
    fn default() -> Self {
        ExtractionLimits {
            max_files: 2_000,
            max_bytes_per_file: 1 << 20,
        }
    }
}

/// Result of scanning one repository.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Dependencies {
    /// Third-party import roots (local packages removed).
    pub import_roots: BTreeSet<String>,
    /// Distribution names declared in manifests.
    pub manifest_names: BTreeSet<String>,
    pub records: Vec<ImportRecord>,
    /// A file or byte limit cut the scan short.
    pub truncated: bool,
}

impl Dependencies {
    /// Import roots and manifest names together.
    pub fn all_names(&self) -> BTreeSet<String> {
        self.import_roots.union(&self.manifest_names).cloned().collect()
    }
}

fn file_name(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

/// Names the repository defines itself: package directories (those with an
/// `__init__.py`) and module file stems.
pub fn local_roots(files: &[SourceFile]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for f in files {
        let path = f.path.as_str();
        if !path.ends_with(".py") {
            continue;
        }
        let mut parts: Vec<&str> = path.split('/').collect();
        let name = parts.pop().unwrap_or_default();
        if name == "__init__.py" {
            if let Some(dir) = parts.last() {
                out.insert(dir.to_string());
            }
        } else if let Some(stem) = name.strip_suffix(".py") {
            out.insert(stem.to_string());
        }
    }
    out
}

fn truncate_at_boundary(text: &str, max: usize) -> (&str, bool) {
    if text.len() <= max {
        return (text, false);
    }
    let mut end = max;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    (&text[..end], true)
}

/// Scans at most `limits.max_files` Python files in path order, plus
/// dependency manifests when `include_manifests` is set.
pub fn extract_dependencies(
    entry: &RepoSnapshotEntry,
    limits: ExtractionLimits,
    include_manifests: bool,
) -> Dependencies {
    let mut files: Vec<&SourceFile> = entry.file_tree.iter().collect();
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let locals = local_roots(&entry.file_tree);
    let mut deps = Dependencies::default();

    let sources: Vec<&&SourceFile> = files.iter().filter(|f| f.path.ends_with(".py")).collect();
    if sources.len() > limits.max_files {
        deps.truncated = true;
    }
    for f in sources.into_iter().take(limits.max_files) {
        let (text, cut) = truncate_at_boundary(&f.text, limits.max_bytes_per_file);
        deps.truncated |= cut;
        for hit in scan_imports(text) {
            if locals.contains(&hit.root) {
                continue;
            }
            deps.import_roots.insert(hit.root.clone());
            deps.records.push(ImportRecord {
                repo_id: entry.metadata.id.clone(),
                import_root: hit.root,
                source_path: f.path.clone(),
                line_number: hit.line,
            });
        }
    }
    if include_manifests {
        for f in &files {
            let name = file_name(&f.path);
            if name == "requirements.txt" {
                deps.manifest_names.extend(parse_requirements(&f.text));
            } else if name == "pyproject.toml" {
                deps.manifest_names.extend(parse_pyproject(&f.text));
            }
        }
    }
    deps
}
