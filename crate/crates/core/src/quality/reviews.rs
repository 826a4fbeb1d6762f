//! Review sources: an offline JSONL corpus and a generic forum search API.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::http::{HttpClient, HttpError};
use crate::text::{contains_token_run, term_tokens};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub source: String,
    pub url: String,
    pub body: String,
    pub created_at: DateTime<Utc>,
}

impl Review {
    /// The id is derived from the url.
    pub fn new(source: &str, url: &str, body: &str, created_at: DateTime<Utc>) -> Self {
        Review {
            id: review_id(url),
            source: source.to_string(),
            url: url.to_string(),
            body: body.to_string(),
            created_at,
        }
    }
}

/// `rev-{first 16 hex chars of sha256(url)}`.
pub fn review_id(url: &str) -> String {
    let digest = hex::encode(Sha256::digest(url.trim().as_bytes()));
    format!("rev-{}", &digest[..16])
}

/// Anything that answers a free-text query with candidate posts.
pub trait ReviewSource: Sync {
    fn search(&self, query: &str) -> Result<Vec<Review>>;
}

#[derive(Deserialize)]
struct CorpusLine {
    source: String,
    url: String,
    body: String,
    created_at: DateTime<Utc>,
}

/// `reviews.jsonl`: one `{source, url, body, created_at}` object per line.
/// Search returns the whole corpus; filtering happens in [`harvest_reviews`].
#[derive(Debug, Clone, Default)]
pub struct OfflineReviews {
    pub reviews: Vec<Review>,
}

impl OfflineReviews {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut reviews = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: CorpusLine = serde_json::from_str(line).map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
            reviews.push(Review::new(&l.source, &l.url, &l.body, l.created_at));
        }
        Ok(OfflineReviews { reviews })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }
}

impl ReviewSource for OfflineReviews {
    fn search(&self, _query: &str) -> Result<Vec<Review>> {
        Ok(self.reviews.clone())
    }
}

#[derive(Deserialize)]
struct SearchResponse {
    #[serde(default)]
    items: Vec<SearchItem>,
}

#[derive(Deserialize)]
struct SearchItem {
    url: String,
    body: String,
    created_at: DateTime<Utc>,
}

/// `GET {base}/search?q=...` returning `{items: [{url, body, created_at}]}`.
pub struct ForumClient<'a> {
    http: &'a HttpClient,
    base: String,
    source: String,
}

impl<'a> ForumClient<'a> {
    pub fn new(http: &'a HttpClient, base: &str, source: &str) -> Self {
        ForumClient {
            http,
            base: base.trim_end_matches('/').to_string(),
            source: source.to_string(),
        }
    }
}

impl ReviewSource for ForumClient<'_> {
    fn search(&self, query: &str) -> Result<Vec<Review>> {
        let mut url = url::Url::parse(&format!("{}/search", self.base))
            .map_err(|e| Error::InvalidArgument(format!("forum base: {e}")))?;
        url.query_pairs_mut().append_pair("q", query);
        let url = url.to_string();
        let resp = self.http.get(&url)?;
        if !resp.is_success() {
            return Err(HttpError::Status { url, status: resp.status }.into());
        }
        let parsed: SearchResponse =
            serde_json::from_str(&resp.body).map_err(|e| HttpError::protocol(&url, e.to_string(), &resp.body))?;
        Ok(parsed
            .items
            .into_iter()
            .map(|i| Review::new(&self.source, &i.url, &i.body, i.created_at))
            .collect())
    }
}

/// Posts that mention both names, deduplicated by url in source order.
pub fn harvest_reviews(variation: &str, library: &str, source: &dyn ReviewSource) -> Result<Vec<Review>> {
    if variation.trim().is_empty() || library.trim().is_empty() {
        return Err(Error::InvalidArgument("variation and library names must be non-empty".into()));
    }
    let v = term_tokens(variation);
    let l = term_tokens(library);
    let mut out: Vec<Review> = Vec::new();
    for r in source.search(&format!("{variation} {library}"))? {
        let body = term_tokens(&r.body);
        if contains_token_run(&body, &v) && contains_token_run(&body, &l) && !out.iter().any(|o| o.url == r.url) {
            out.push(r);
        }
    }
    Ok(out)
}
