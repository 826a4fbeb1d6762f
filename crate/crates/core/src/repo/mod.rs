//! Repository ingestion: snapshot loading, median-threshold filtering,
//! taxonomy categorization and dependency extraction.

pub mod github;
pub mod imports;
pub mod resolve;

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{DateTime, Months, Utc};
use serde::{Deserialize, Serialize};

pub use imports::{extract_dependencies, parse_imports, Dependencies, ExtractionLimits, ImportRecord};
pub use resolve::{ImportResolverTables, RegistryLookup, Resolution, Resolver};

use crate::error::{Error, Result};
use crate::graph::Repository;
use crate::text::{count_token_runs, term_tokens};

/// `metadata.json` of a repository snapshot: [`Repository`] without the
/// derived id and dependency set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoMetadata {
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
}

impl RepoMetadata {
    pub fn into_repository(self) -> Repository {
        Repository {
            id: Repository::id_for(&self.url),
            name: self.name,
            url: self.url,
            description: self.description,
            stars: self.stars,
            forks: self.forks,
            size_kb: self.size_kb,
            language: self.language,
            contributors: self.contributors,
            created_at: self.created_at,
            updated_at: self.updated_at,
            topics: self.topics,
            categories: Vec::new(),
            dependency_names: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    /// Forward-slash path relative to the repository root.
    pub path: String,
    pub text: String,
    /// The file was not valid UTF-8 and was decoded lossily.
    pub lossy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepoSnapshotEntry {
    pub metadata: Repository,
    pub file_tree: Vec<SourceFile>,
}

fn is_relevant(path: &str) -> bool {
    path.ends_with(".py") || path.ends_with("requirements.txt") || path.ends_with("pyproject.toml")
}

/// Loads one repository directory: `metadata.json` plus the source and
/// manifest files below it, in path order.
pub fn load_entry(dir: &Path) -> Result<RepoSnapshotEntry> {
    let meta_path = dir.join("metadata.json");
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: RepoMetadata = serde_json::from_str(&text)
        .map_err(|e| Error::parse(&meta_path, e.line(), e.to_string()))?;
    let mut files = Vec::new();
    for item in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let item = item.map_err(|e| Error::io(dir, e.into()))?;
        if !item.file_type().is_file() {
            continue;
        }
        let rel = item
            .path()
            .strip_prefix(dir)
            .expect("walk stays below root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if !is_relevant(&rel) {
            continue;
        }
        let bytes = std::fs::read(item.path()).map_err(|e| Error::io(item.path(), e))?;
        let (text, lossy) = match String::from_utf8(bytes) {
            Ok(t) => (t, false),
            Err(e) => (String::from_utf8_lossy(e.as_bytes()).into_owned(), true),
        };
        files.push(SourceFile { path: rel, text, lossy });
    }
    Ok(RepoSnapshotEntry {
        metadata: meta.into_repository(),
        file_tree: files,
    })
}

/// Loads every repository directory under `root`, sorted by directory name.
pub fn load_snapshot_archive(root: &Path) -> Result<Vec<RepoSnapshotEntry>> {
    let mut dirs: Vec<_> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|d| d.ok())
        .map(|d| d.path())
        .filter(|p| p.join("metadata.json").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_entry(d)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopularityField {
    Stars,
    Forks,
    Contributors,
}

impl PopularityField {
    fn value(self, r: &Repository) -> u64 {
        match self {
            PopularityField::Stars => r.stars,
            PopularityField::Forks => r.forks,
            PopularityField::Contributors => r.contributors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub popularity_fields: Vec<PopularityField>,
    pub min_fields_at_median: usize,
    pub recency_window_months: u32,
    pub min_size_kb: Option<u64>,
    pub max_size_kb: Option<u64>,
    pub reference_date: DateTime<Utc>,
}

impl FilterPolicy {
    pub fn new(reference_date: DateTime<Utc>) -> Self {
        FilterPolicy {
            popularity_fields: vec![
                PopularityField::Stars,
                PopularityField::Forks,
                PopularityField::Contributors,
            ],
            min_fields_at_median: 2,
            recency_window_months: 36,
            min_size_kb: None,
            max_size_kb: None,
            reference_date,
        }
    }

    fn check(&self) -> Result<()> {
        let fields: BTreeSet<_> = self.popularity_fields.iter().collect();
        if self.min_fields_at_median < 1 || self.min_fields_at_median > fields.len() {
            return Err(Error::InvalidArgument(format!(
                "min_fields_at_median must be between 1 and {}",
                fields.len()
            )));
        }
        Ok(())
    }
}

/// Lower-middle median: element `(n - 1) / 2` of the sorted values.
pub fn lower_median(values: &[u64]) -> Option<u64> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.get(v.len().checked_sub(1)? / 2).copied()
}

/// Keeps repositories that reach the corpus median on enough popularity
/// fields, were updated recently and fall within the size bounds. Output
/// preserves input order.
pub fn filter_repositories(repos: &[Repository], policy: &FilterPolicy) -> Result<Vec<Repository>> {
    if repos.is_empty() {
        return Err(Error::InvalidArgument("cannot compute medians of an empty repository list".into()));
    }
    policy.check()?;
    let fields: BTreeSet<PopularityField> = policy.popularity_fields.iter().copied().collect();
    let medians: Vec<(PopularityField, u64)> = fields
        .iter()
        .map(|f| {
            let values: Vec<u64> = repos.iter().map(|r| f.value(r)).collect();
            (*f, lower_median(&values).expect("non-empty"))
        })
        .collect();
    let cutoff = policy
        .reference_date
        .checked_sub_months(Months::new(policy.recency_window_months))
        .unwrap_or(DateTime::<Utc>::MIN_UTC);
    Ok(repos
        .iter()
        .filter(|r| {
            let at_median = medians.iter().filter(|(f, m)| f.value(r) >= *m).count();
            at_median >= policy.min_fields_at_median
                && r.updated_at >= cutoff
                && policy.min_size_kb.is_none_or(|min| r.size_kb >= min)
                && policy.max_size_kb.is_none_or(|max| r.size_kb <= max)
        })
        .cloned()
        .collect())
}

/// Taxonomy terms found as whole words in the name, description and
/// topics, most frequent first; ties keep taxonomy order.
pub fn categorize_repository(repo: &Repository, taxonomy: &[String]) -> Vec<String> {
    let mut text = format!("{} {}", repo.name, repo.description);
    for t in &repo.topics {
        text.push(' ');
        text.push_str(t);
    }
    let tokens = term_tokens(&text);
    let mut hits: Vec<(usize, usize, &String)> = taxonomy
        .iter()
        .enumerate()
        .map(|(i, term)| (count_token_runs(&tokens, &term_tokens(term)), i, term))
        .filter(|(n, _, _)| *n > 0)
        .collect();
    hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    hits.into_iter().map(|(_, _, t)| t.clone()).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn repo(name: &str, stars: u64, forks: u64, contributors: u64) -> Repository {
        let t = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        RepoMetadata {
            name: name.into(),
            url: format!("https://github.com/example/{name}"),
            description: String::new(),
            stars,
            forks,
            size_kb: 100,
            language: "Python".into(),
            contributors,
            created_at: t,
            updated_at: t,
            topics: vec![],
        }
        .into_repository()
    }

    pub(crate) fn entry(files: &[(&str, &str)]) -> RepoSnapshotEntry {
        RepoSnapshotEntry {
            metadata: repo("fixture", 1, 1, 1),
            file_tree: files
                .iter()
                .map(|(p, t)| SourceFile { path: p.to_string(), text: t.to_string(), lossy: false })
                .collect(),
        }
    }

    fn policy(fields: Vec<PopularityField>, min: usize) -> FilterPolicy {
        FilterPolicy {
            popularity_fields: fields,
            min_fields_at_median: min,
            ..FilterPolicy::new(Utc.with_ymd_and_hms(2025, 6, 30, 0, 0, 0).unwrap())
        }
    }

    #[test]
    fn median_is_lower_middle() {
        assert_eq!(lower_median(&[4, 1, 3, 2]), Some(2));
        assert_eq!(lower_median(&[5]), Some(5));
        assert_eq!(lower_median(&[]), None);
    }

    #[test]
    fn single_field_stars() {
        let repos = vec![repo("a", 1, 0, 0), repo("b", 5, 0, 0), repo("c", 10, 0, 0)];
        let kept = filter_repositories(&repos, &policy(vec![PopularityField::Stars], 1)).unwrap();
        let names: Vec<_> = kept.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, vec!["b", "c"]);
    }

    #[test]
    fn eleven_repo_fixture() {
        // stars   : 3 8 1 9 4 7 2 6 5 10 0 -> sorted median (index 5) = 5
        // forks   : 1 6 0 2 9 5 3 8 4 7 10 -> median 5
        // contribs: 2 2 9 1 3 4 8 1 0 7 5  -> sorted 0 1 1 2 2 3 4 5 7 8 9, median 3
        let stars = [3, 8, 1, 9, 4, 7, 2, 6, 5, 10, 0];
        let forks = [1, 6, 0, 2, 9, 5, 3, 8, 4, 7, 10];
        let contribs = [2, 2, 9, 1, 3, 4, 8, 1, 0, 7, 5];
        let repos: Vec<_> = (0..11)
            .map(|i| repo(&format!("r{i}"), stars[i], forks[i], contribs[i]))
            .collect();
        // Count fields at or above median (s>=5, f>=5, c>=3):
        // r0 0, r1 2 (s,f), r2 1, r3 1, r4 2 (f,c), r5 3, r6 1, r7 2 (s,f),
        // r8 1, r9 3, r10 2 (f,c)  -> with min 3: r5, r9; with min 2: 6 repos.
        let p3 = policy(FilterPolicy::new(Utc::now()).popularity_fields, 3);
        let kept: Vec<_> = filter_repositories(&repos, &p3).unwrap().into_iter().map(|r| r.name).collect();
        assert_eq!(kept, vec!["r5", "r9"]);
        let mut p2 = p3.clone();
        p2.min_fields_at_median = 2;
        p2.max_size_kb = Some(1000);
        let mut repos2 = repos.clone();
        repos2[1].size_kb = 5000;
        repos2[4].updated_at = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        repos2[4].created_at = repos2[4].updated_at;
        let kept: Vec<_> = filter_repositories(&repos2, &p2).unwrap().into_iter().map(|r| r.name).collect();
        assert_eq!(kept, vec!["r5", "r7", "r9", "r10"]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(filter_repositories(&[], &FilterPolicy::new(Utc::now())).is_err());
    }

    #[test]
    fn bad_policy_is_an_error() {
        let repos = vec![repo("a", 1, 0, 0)];
        assert!(filter_repositories(&repos, &policy(vec![PopularityField::Stars], 2)).is_err());
    }

    #[test]
    fn categorize_examples() {
        let tax: Vec<String> = ["deep learning", "image segmentation", "robotics", "learning"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut r = repo("seg", 0, 0, 0);
        r.description = "deep learning for image segmentation".into();
        assert_eq!(categorize_repository(&r, &tax[..3]), vec!["deep learning", "image segmentation"]);
        let empty = repo("x", 0, 0, 0);
        assert!(categorize_repository(&empty, &tax[..3]).is_empty());
        let mut t = repo("y", 0, 0, 0);
        t.description = "transfer-learning toolkit".into();
        assert_eq!(categorize_repository(&t, &tax[3..]), vec!["learning"]);
        let mut u = repo("z", 0, 0, 0);
        u.description = "unlearning things".into();
        assert!(categorize_repository(&u, &tax[3..]).is_empty());
    }

    #[test]
    fn categorize_ranks_by_count() {
        let tax: Vec<String> = vec!["robotics".into(), "deep learning".into()];
        let mut r = repo("deep-learning-robotics", 0, 0, 0);
        r.description = "Deep learning models.".into();
        assert_eq!(categorize_repository(&r, &tax), vec!["deep learning", "robotics"]);
    }
}
