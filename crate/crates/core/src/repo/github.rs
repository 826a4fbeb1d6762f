//! Live hosting-platform client (GitHub-compatible REST API).

use serde::Deserialize;

use super::{ExtractionLimits, RepoMetadata, RepoSnapshotEntry, SourceFile};
use crate::error::{Error, Result};
use crate::http::{HttpClient, HttpError, Request};

pub const TOKEN_ENV: &str = "MODELSELECT_GH_TOKEN";

#[derive(Debug, Deserialize)]
struct ApiRepo {
    name: String,
    html_url: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    stargazers_count: u64,
    #[serde(default)]
    forks_count: u64,
    #[serde(default)]
    size: u64,
    #[serde(default)]
    language: Option<String>,
    created_at: chrono::DateTime<chrono::Utc>,
    pushed_at: Option<chrono::DateTime<chrono::Utc>>,
    updated_at: chrono::DateTime<chrono::Utc>,
    #[serde(default)]
    topics: Vec<String>,
    default_branch: String,
}

#[derive(Debug, Deserialize)]
struct ApiTree {
    tree: Vec<ApiTreeItem>,
    #[serde(default)]
    truncated: bool,
}

#[derive(Debug, Deserialize)]
struct ApiTreeItem {
    path: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    size: u64,
}

pub struct GithubClient<'a> {
    http: &'a HttpClient,
    api_base: String,
    raw_base: String,
    token: Option<String>,
}

impl<'a> GithubClient<'a> {
    pub fn new(http: &'a HttpClient, api_base: &str, raw_base: &str, token: Option<String>) -> Self {
        GithubClient {
            http,
            api_base: api_base.trim_end_matches('/').to_string(),
            raw_base: raw_base.trim_end_matches('/').to_string(),
            token,
        }
    }

    /// Client for the public service, reading the token from the environment.
    pub fn from_env(http: &'a HttpClient) -> Self {
        Self::new(
            http,
            "https://api.github.com",
            "https://raw.githubusercontent.com",
            std::env::var(TOKEN_ENV).ok(),
        )
    }

    fn get_json<T: for<'de> Deserialize<'de>>(&self, url: &str) -> Result<T> {
        let mut req = Request::get(url).header("accept", "application/vnd.github+json");
        if let Some(t) = &self.token {
            req = req.header("authorization", &format!("Bearer {t}"));
        }
        let resp = self.http.send(&req)?;
        if resp.status == 404 {
            return Err(Error::NotFound(url.to_string()));
        }
        if !resp.is_success() {
            return Err(HttpError::Status { url: url.into(), status: resp.status }.into());
        }
        serde_json::from_str(&resp.body)
            .map_err(|e| HttpError::protocol(url, e.to_string(), &resp.body).into())
    }

    /// Metadata of `owner/name`. The contributor count is capped at 100
    /// (one page).
    pub fn fetch_metadata(&self, full_name: &str) -> Result<(RepoMetadata, String)> {
        let api: ApiRepo = self.get_json(&format!("{}/repos/{full_name}", self.api_base))?;
        let contributors: Vec<serde_json::Value> = self
            .get_json(&format!("{}/repos/{full_name}/contributors?per_page=100&anon=1", self.api_base))
            .unwrap_or_default();
        let meta = RepoMetadata {
            name: api.name,
            url: api.html_url,
            description: api.description.unwrap_or_default(),
            stars: api.stargazers_count,
            forks: api.forks_count,
            size_kb: api.size,
            language: api.language.unwrap_or_default(),
            contributors: contributors.len() as u64,
            created_at: api.created_at,
            updated_at: api.pushed_at.unwrap_or(api.updated_at).max(api.created_at),
            topics: api.topics,
        };
        Ok((meta, api.default_branch))
    }

    /// Metadata plus Python sources and manifests, within `limits`.
    pub fn fetch_entry(&self, full_name: &str, limits: ExtractionLimits) -> Result<RepoSnapshotEntry> {
        let (meta, branch) = self.fetch_metadata(full_name)?;
        let tree: ApiTree = self.get_json(&format!(
            "{}/repos/{full_name}/git/trees/{branch}?recursive=1",
            self.api_base
        ))?;
        if tree.truncated {
            tracing::warn!(repo = full_name, "file tree listing truncated by the server");
        }
        let mut paths: Vec<&ApiTreeItem> = tree
            .tree
            .iter()
            .filter(|i| i.kind == "blob" && super::is_relevant(&i.path))
            .filter(|i| i.size as usize <= limits.max_bytes_per_file)
            .collect();
        paths.sort_by(|a, b| a.path.cmp(&b.path));
        let mut files = Vec::new();
        let mut sources = 0;
        for item in paths {
            if item.path.ends_with(".py") {
                // One extra file so the extractor can notice the limit.
                if sources > limits.max_files {
                    continue;
                }
                sources += 1;
            }
            let url = format!("{}/{full_name}/{branch}/{}", self.raw_base, item.path);
            match self.http.get(&url) {
                Ok(r) if r.is_success() => files.push(SourceFile {
                    path: item.path.clone(),
                    text: r.body,
                    lossy: false,
                }),
                Ok(r) => tracing::warn!(%url, status = r.status, "skipping file"),
                Err(e) => tracing::warn!(%url, error = %e, "skipping file"),
            }
        }
        Ok(RepoSnapshotEntry {
            metadata: meta.into_repository(),
            file_tree: files,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{Response, Transport};
    use std::sync::Arc;

    struct Canned;

    impl Transport for Canned {
        fn send(&self, req: &Request) -> std::result::Result<Response, HttpError> {
            let body = if req.url.ends_with("/repos/ex/demo") {
                r#"{"name":"demo","html_url":"https://github.com/ex/demo","description":"d","stargazers_count":5,
                   "forks_count":2,"size":10,"language":"Python","created_at":"2023-01-01T00:00:00Z",
                   "pushed_at":"2024-01-01T00:00:00Z","updated_at":"2024-02-01T00:00:00Z","topics":["ml"],
                   "default_branch":"main"}"#
            } else if req.url.contains("/contributors") {
                "[{},{},{}]"
            } else if req.url.contains("/git/trees/") {
                r#"{"tree":[{"path":"a.py","type":"blob","size":12},{"path":"README.md","type":"blob","size":3},
                   {"path":"requirements.txt","type":"blob","size":6}]}"#
            } else if req.url.ends_with("/a.py") {
                "import numpy"
            } else if req.url.ends_with("/requirements.txt") {
                "pandas"
            } else {
                return Ok(Response { status: 404, body: String::new() });
            };
            Ok(Response { status: 200, body: body.to_string() })
        }
    }

    #[test]
    fn fetches_entry() {
        let http = HttpClient::live(Arc::new(Canned));
        let gh = GithubClient::new(&http, "https://api.example", "https://raw.example", None);
        let e = gh.fetch_entry("ex/demo", ExtractionLimits::default()).unwrap();
        assert_eq!(e.metadata.contributors, 3);
        assert_eq!(e.file_tree.len(), 2);
        let d = super::super::extract_dependencies(&e, ExtractionLimits::default(), true);
        assert_eq!(d.all_names().len(), 2);
        assert!(matches!(gh.fetch_metadata("ex/missing"), Err(Error::NotFound(_))));
    }
}
