//! Batch orchestration of the four ingestion pipelines.
//!
//! Every stage is a function over plain inputs so the CLI can run them one
//! at a time against a data directory, and [`run_corpus`] can chain them in
//! memory. Libraries are always processed in name order, so a run over the
//! same inputs yields the same snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Resources;
use crate::error::{Error, Result};
use crate::extract::{extract_library, extraction_batch, LibraryExtraction};
use crate::graph::{snapshot, Batch, ChangeSummary, EntityId, KnowledgeGraph, Library, QualityAggregate, Repository};
use crate::http::{HttpClient, LiveTransport, ReplayStore};
use crate::library::{ingest_library, CrawlLimits, CrawledPage, LibraryRecord, LibrarySources, OsvClient, RegistryClient};
use crate::provider::{Backend, BackendKind, ChatBackend, HeuristicBackend};
use crate::quality::{aggregate_pair, classify_sentences, harvest_reviews, ReviewSource, WeightedMean};
use crate::repo::{
    categorize_repository, extract_dependencies, filter_repositories, ExtractionLimits, FilterPolicy, RegistryLookup,
    RepoSnapshotEntry, Resolver,
};

pub const PAGES_FILE: &str = "pages.jsonl";
pub const TWO_WAY_FILE: &str = "two_way_index.jsonl";

/// How outbound requests are served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HttpMode {
    Offline,
    Record,
    Live,
}

fn default_true() -> bool {
    true
}

fn default_registry() -> String {
    RegistryClient::PUBLIC.to_string()
}

fn default_osv() -> String {
    OsvClient::PUBLIC.to_string()
}

fn default_min_fields() -> usize {
    2
}

fn default_window() -> u32 {
    36
}

/// `corpus.toml`: where a corpus keeps its inputs, relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    /// Reference date for recency filtering and evidence timestamps.
    pub as_of: DateTime<Utc>,
    pub repos: PathBuf,
    pub replay: PathBuf,
    #[serde(default)]
    pub reviews: Option<PathBuf>,
    #[serde(default)]
    pub forum_base: Option<String>,
    #[serde(default = "default_registry")]
    pub registry_base: String,
    #[serde(default = "default_osv")]
    pub osv_base: String,
    #[serde(default = "default_true")]
    pub include_manifests: bool,
    #[serde(default = "default_min_fields")]
    pub min_fields_at_median: usize,
    #[serde(default = "default_window")]
    pub recency_window_months: u32,
    #[serde(default)]
    pub max_doc_urls: Option<usize>,
    /// Overrides `provider.toml`.
    #[serde(default)]
    pub backend: Option<BackendKind>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl CorpusConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: CorpusConfig = toml::from_str(&text).map_err(|e| Error::Config {
            name: path.display().to_string(),
            message: e.to_string(),
        })?;
        cfg.root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(cfg)
    }

    pub fn path(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn filter_policy(&self) -> FilterPolicy {
        let mut p = FilterPolicy::new(self.as_of);
        p.min_fields_at_median = self.min_fields_at_median;
        p.recency_window_months = self.recency_window_months;
        p
    }
}

/// Shared settings for a run.
pub struct Runner {
    pub resources: Resources,
    pub http: HttpClient,
    pub backend: Box<dyn Backend>,
    pub votes: usize,
    pub retrieved_at: DateTime<Utc>,
    pub registry_base: String,
    pub osv_base: String,
    pub include_manifests: bool,
    pub crawl: CrawlLimits,
    pub limits: ExtractionLimits,
    pub policy: FilterPolicy,
}

pub fn http_client(mode: HttpMode, replay_dir: &Path, timeout_secs: u64) -> HttpClient {
    let store = ReplayStore::new(replay_dir);
    let live = || Arc::new(LiveTransport::new(Duration::from_secs(timeout_secs), 4.0));
    match mode {
        HttpMode::Offline => HttpClient::offline(store),
        HttpMode::Record => HttpClient::record(store, live()),
        HttpMode::Live => HttpClient::live(live()),
    }
}

pub fn make_backend(kind: BackendKind, resources: &Resources, replay_dir: &Path) -> Box<dyn Backend> {
    let cfg = &resources.provider;
    match kind {
        BackendKind::Heuristic => Box::new(HeuristicBackend::new(resources.heuristic.clone())),
        BackendKind::Replay => Box::new(ChatBackend::new(
            http_client(HttpMode::Offline, replay_dir, cfg.timeout_secs),
            cfg,
            resources.prompts.clone(),
        )),
        BackendKind::Live => Box::new(ChatBackend::new(
            http_client(HttpMode::Record, replay_dir, cfg.timeout_secs),
            cfg,
            resources.prompts.clone(),
        )),
    }
}

impl Runner {
    /// Runner for a corpus: HTTP from its replay store in `mode`, evidence
    /// stamped with the corpus date.
    pub fn for_corpus(corpus: &CorpusConfig, resources: Resources, mode: HttpMode) -> Self {
        let replay = corpus.path(&corpus.replay);
        let kind = corpus.backend.unwrap_or(resources.provider.backend);
        let backend = make_backend(kind, &resources, &replay);
        let mut crawl = CrawlLimits::default();
        if let Some(n) = corpus.max_doc_urls {
            crawl.max_urls = n;
        }
        Runner {
            http: http_client(mode, &replay, resources.provider.timeout_secs),
            votes: resources.provider.votes,
            resources,
            backend,
            retrieved_at: corpus.as_of,
            registry_base: corpus.registry_base.clone(),
            osv_base: corpus.osv_base.clone(),
            include_manifests: corpus.include_manifests,
            crawl,
            limits: ExtractionLimits::default(),
            policy: corpus.filter_policy(),
        }
    }
}

/// Output of the repository stage.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RepoStage {
    /// Kept repositories with categories and resolved distributions.
    pub repositories: Vec<Repository>,
    pub dropped: Vec<String>,
    /// Import roots that resolved to nothing, per repository name.
    pub unresolved: BTreeMap<String, BTreeSet<String>>,
}

impl RepoStage {
    pub fn distributions(&self) -> BTreeSet<String> {
        self.repositories.iter().flat_map(|r| r.dependency_names.iter().cloned()).collect()
    }

    pub fn batch(&self) -> Batch {
        let mut b = Batch::new();
        for r in &self.repositories {
            b.push(r.clone());
        }
        b
    }
}

/// Pipeline 1: filter, categorize, extract and resolve dependencies.
pub fn stage_repos(entries: &[RepoSnapshotEntry], run: &Runner) -> Result<RepoStage> {
    if entries.is_empty() {
        return Ok(RepoStage::default());
    }
    let metas: Vec<Repository> = entries.iter().map(|e| e.metadata.clone()).collect();
    let kept: BTreeSet<EntityId> = filter_repositories(&metas, &run.policy)?.into_iter().map(|r| r.id).collect();
    let registry = RegistryClient::new(&run.http, &run.registry_base);
    let resolver = Resolver::new(&run.resources.resolver, Some(&registry as &dyn RegistryLookup));
    let mut stage = RepoStage::default();
    for e in entries {
        if !kept.contains(&e.metadata.id) {
            stage.dropped.push(e.metadata.name.clone());
            continue;
        }
        let mut repo = e.metadata.clone();
        repo.categories = categorize_repository(&repo, &run.resources.taxonomy);
        let deps = extract_dependencies(e, run.limits, run.include_manifests);
        if deps.truncated {
            tracing::warn!(repo = %repo.name, "dependency scan hit a file or size limit");
        }
        for name in deps.all_names() {
            match resolver.resolve(&name).distribution() {
                Some(d) => {
                    repo.dependency_names.insert(d.to_string());
                }
                None if !run.resources.resolver.stdlib.contains(&name) => {
                    stage.unresolved.entry(repo.name.clone()).or_default().insert(name);
                }
                None => {}
            }
        }
        stage.repositories.push(repo);
    }
    Ok(stage)
}

/// Pipeline 2 over `names` in sorted order. Distributions the registry does
/// not know, or whose fetch failed, are reported and skipped.
pub fn stage_libraries(names: &BTreeSet<String>, run: &Runner) -> (Vec<LibraryRecord>, Vec<String>) {
    let src = LibrarySources {
        http: &run.http,
        registry_base: &run.registry_base,
        osv_base: &run.osv_base,
        crawl: run.crawl,
        lexicon: &run.resources.ai_lexicon,
    };
    let names: Vec<&String> = names.iter().collect();
    let results: Vec<(String, std::result::Result<Option<LibraryRecord>, String>)> = names
        .par_iter()
        .map(|n| (n.to_string(), ingest_library(n, &src).map_err(|e| e.to_string())))
        .collect();
    let mut records = Vec::new();
    let mut notices = Vec::new();
    for (name, r) in results {
        match r {
            Ok(Some(rec)) => records.push(rec),
            Ok(None) => notices.push(format!("{name}: not in registry")),
            Err(e) => {
                tracing::warn!(library = %name, error = %e, "library ingestion failed");
                notices.push(format!("{name}: {e}"));
            }
        }
    }
    (records, notices)
}

pub fn library_batch(records: &[LibraryRecord], retrieved_at: DateTime<Utc>) -> Batch {
    let mut b = Batch::new();
    for r in records {
        b.extend(r.to_batch(retrieved_at));
    }
    b
}

/// One documentation page of a library, as kept between stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRecord {
    pub library_id: EntityId,
    pub url: String,
    pub text: String,
}

/// Pages of AI-related libraries only; the others are not mined.
pub fn pages_of(records: &[LibraryRecord], retrieved_at: DateTime<Utc>) -> Vec<PageRecord> {
    records
        .iter()
        .filter(|r| r.classification.ai_related)
        .flat_map(|r| {
            let id = r.library(retrieved_at).id;
            r.pages.iter().map(move |p| PageRecord { library_id: id.clone(), url: p.url.clone(), text: p.text.clone() })
        })
        .collect()
}

pub fn write_pages(path: &Path, pages: &[PageRecord]) -> Result<()> {
    let mut out = String::new();
    for p in pages {
        out.push_str(&serde_json::to_string(p).expect("page serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_pages(path: &Path) -> Result<Vec<PageRecord>> {
    crate::eval::read_jsonl(path)
}

/// Pipeline 3: mines each library's pages, library by library in id order.
pub fn stage_extract(pages: &[PageRecord], run: &Runner) -> Result<(Vec<LibraryExtraction>, Batch)> {
    let mut by_lib: BTreeMap<&EntityId, Vec<CrawledPage>> = BTreeMap::new();
    for p in pages {
        by_lib.entry(&p.library_id).or_default().push(CrawledPage { url: p.url.clone(), text: p.text.clone() });
    }
    let mut extractions = Vec::new();
    for (lib, pages) in by_lib {
        let ex = extract_library(lib, &pages, run.backend.as_ref(), run.votes, &run.resources.chunking, run.retrieved_at)?;
        extractions.push(ex);
    }
    let batch = extraction_batch(&extractions, &run.resources.base_lexicon);
    Ok((extractions, batch))
}

/// Pipeline 4: reviews for every supported (variation, library) pair.
pub fn stage_quality(graph: &KnowledgeGraph, reviews: &dyn ReviewSource, run: &Runner) -> Result<Vec<QualityAggregate>> {
    let pairs: Vec<(&crate::graph::ModelVariation, &Library)> = graph.variation_library_pairs();
    let per_pair: Vec<Result<Vec<QualityAggregate>>> = pairs
        .par_iter()
        .map(|(v, l)| {
            let found = harvest_reviews(&v.name, &l.distribution_name, reviews)?;
            let mut records = Vec::new();
            for r in &found {
                records.extend(classify_sentences(r, run.backend.as_ref(), run.votes, &run.resources.attributes, run.retrieved_at)?);
            }
            Ok(aggregate_pair(&v.id, &l.id, &records, &WeightedMean))
        })
        .collect();
    let mut out = Vec::new();
    for p in per_pair {
        out.extend(p?);
    }
    Ok(out)
}

pub fn quality_batch(aggregates: &[QualityAggregate]) -> Batch {
    let mut b = Batch::new();
    for a in aggregates {
        b.push(a.clone());
    }
    b
}

/// Summary of a full run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub repositories_kept: usize,
    pub repositories_dropped: Vec<String>,
    pub unresolved_imports: BTreeMap<String, BTreeSet<String>>,
    pub libraries: usize,
    pub ai_libraries: usize,
    pub library_notices: Vec<String>,
    pub pages: usize,
    pub variations: usize,
    pub quality_aggregates: usize,
    pub rejected: Vec<String>,
}

fn absorb(report: &mut RunReport, s: ChangeSummary) {
    report.rejected.extend(s.rejected.into_iter().map(|r| format!("{}: {}", r.subject, r.reason)));
}

/// Opens the review source configured for a corpus.
pub fn review_source<'a>(corpus: &CorpusConfig, http: &'a HttpClient) -> Result<Box<dyn ReviewSource + 'a>> {
    match (&corpus.reviews, &corpus.forum_base) {
        (Some(p), _) => Ok(Box::new(crate::quality::OfflineReviews::load(&corpus.path(p))?)),
        (None, Some(base)) => Ok(Box::new(crate::quality::ForumClient::new(http, base, "forum"))),
        (None, None) => Ok(Box::new(crate::quality::OfflineReviews::default())),
    }
}

/// All four pipelines in memory.
pub fn run_corpus(corpus: &CorpusConfig, run: &Runner) -> Result<(KnowledgeGraph, RunReport)> {
    let entries = crate::repo::load_snapshot_archive(&corpus.path(&corpus.repos))?;
    let mut graph = KnowledgeGraph::new();
    let mut report = RunReport::default();

    let repos = stage_repos(&entries, run)?;
    report.repositories_kept = repos.repositories.len();
    report.repositories_dropped = repos.dropped.clone();
    report.unresolved_imports = repos.unresolved.clone();

    let (records, notices) = stage_libraries(&repos.distributions(), run);
    report.libraries = records.len();
    report.ai_libraries = records.iter().filter(|r| r.classification.ai_related).count();
    report.library_notices = notices;
    absorb(&mut report, graph.upsert(&library_batch(&records, run.retrieved_at)));
    absorb(&mut report, graph.upsert(&repos.batch()));

    let pages = pages_of(&records, run.retrieved_at);
    report.pages = pages.len();
    let (_, batch) = stage_extract(&pages, run)?;
    absorb(&mut report, graph.upsert(&batch));
    report.variations = graph.tables().variations.len();

    let source = review_source(corpus, &run.http)?;
    let aggs = stage_quality(&graph, source.as_ref(), run)?;
    report.quality_aggregates = aggs.len();
    absorb(&mut report, graph.upsert(&quality_batch(&aggs)));
    Ok((graph, report))
}

/// Loads the snapshot in `dir`, or an empty graph when there is none yet.
pub fn load_or_empty(dir: &Path) -> Result<KnowledgeGraph> {
    if dir.join(snapshot::MANIFEST).is_file() {
        Ok(snapshot::read(dir)?)
    } else {
        Ok(KnowledgeGraph::new())
    }
}
