//! Library ingestion: registry metadata, AI-relatedness, vulnerabilities and
//! documentation pages for the extraction pipeline.

mod classify;
pub mod crawl;
pub mod html;
pub mod osv;
pub mod registry;

use chrono::{DateTime, Utc};
use serde::Serialize;

pub use classify::{classify_ai_related, AiClassification, AiLexicon};
pub use crawl::{collect_documentation_urls, CrawlLimits, CrawledPage};
pub use osv::OsvClient;
pub use registry::{RegistryClient, RegistryMetadata};

use crate::graph::{Batch, CveRecord, EvidenceRef, Library};
use crate::http::{HttpClient, HttpError};

/// Endpoints and knobs for [`ingest_library`].
pub struct LibrarySources<'a> {
    pub http: &'a HttpClient,
    pub registry_base: &'a str,
    pub osv_base: &'a str,
    pub crawl: CrawlLimits,
    pub lexicon: &'a AiLexicon,
}

/// Everything pipeline 2 learned about one distribution.
#[derive(Debug, Clone, Serialize)]
pub struct LibraryRecord {
    pub registry_url: String,
    pub metadata: RegistryMetadata,
    pub classification: AiClassification,
    pub cves: Vec<CveRecord>,
    pub pages: Vec<CrawledPage>,
}

impl LibraryRecord {
    pub fn library(&self, retrieved_at: DateTime<Utc>) -> Library {
        let m = &self.metadata;
        let mut lib = Library::new(&m.distribution_name);
        lib.summary = m.summary.clone();
        lib.homepage = m.homepage.clone();
        lib.keywords = m.keywords.clone();
        lib.classifiers = m.classifiers.clone();
        lib.version = m.version.clone();
        lib.ai_related = self.classification.ai_related;
        lib.ai_score = self.classification.score;
        lib.ai_basis = self.classification.basis;
        lib.cve_ids = self.cves.iter().map(|c| c.id.clone()).collect();
        let fragment = if m.summary.trim().is_empty() {
            format!("{} {}", m.distribution_name, m.version)
        } else {
            m.summary.clone()
        };
        lib.evidence = vec![EvidenceRef::new(&self.registry_url, fragment, retrieved_at)];
        lib
    }

    /// Library plus its vulnerability records.
    pub fn to_batch(&self, retrieved_at: DateTime<Utc>) -> Batch {
        let mut b = Batch::new();
        for c in &self.cves {
            b.push(c.clone());
        }
        b.push(self.library(retrieved_at));
        b
    }
}

/// Runs the whole library pipeline for one distribution. `Ok(None)` when
/// the registry has no record. A failed vulnerability query is logged and
/// leaves the list empty.
pub fn ingest_library(name: &str, src: &LibrarySources<'_>) -> Result<Option<LibraryRecord>, HttpError> {
    let registry = RegistryClient::new(src.http, src.registry_base);
    let Some(metadata) = registry.fetch(name)? else {
        return Ok(None);
    };
    let pages = collect_documentation_urls(&metadata, src.http, src.crawl);
    let seeds = crawl::seed_urls(&metadata);
    let homepage_text = pages
        .iter()
        .find(|p| seeds.first() == Some(&p.url))
        .map(|p| p.text.as_str());
    let classification = classify_ai_related(&metadata, src.lexicon, homepage_text);
    let cves = match OsvClient::new(src.http, src.osv_base).fetch(&metadata.distribution_name, &metadata.version) {
        Ok(c) => c,
        Err(e) => {
            tracing::warn!(library = %metadata.distribution_name, error = %e, "vulnerability query failed");
            Vec::new()
        }
    };
    Ok(Some(LibraryRecord {
        registry_url: registry.url_for(&metadata.distribution_name),
        metadata,
        classification,
        cves,
        pages,
    }))
}
