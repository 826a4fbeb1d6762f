//! PyPI-compatible JSON API client.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::normalize_distribution_name;
use crate::http::{HttpClient, HttpError};
use crate::repo::RegistryLookup;

/// Normalized registry record for one distribution.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegistryMetadata {
    pub distribution_name: String,
    pub summary: String,
    pub homepage: Option<String>,
    pub keywords: Vec<String>,
    pub classifiers: Vec<String>,
    pub version: String,
    pub project_urls: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct ApiResponse {
    info: ApiInfo,
}

#[derive(Deserialize)]
struct ApiInfo {
    name: String,
    #[serde(default)]
    summary: Option<String>,
    #[serde(default)]
    home_page: Option<String>,
    #[serde(default)]
    keywords: Option<String>,
    #[serde(default)]
    classifiers: Vec<String>,
    #[serde(default)]
    version: Option<String>,
    #[serde(default)]
    project_urls: Option<BTreeMap<String, Option<String>>>,
}

fn present(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty() && !v.eq_ignore_ascii_case("unknown") && !v.eq_ignore_ascii_case("none"))
}

/// Keywords are comma separated when any comma is present, otherwise
/// whitespace separated.
pub fn split_keywords(raw: &str) -> Vec<String> {
    let parts: Vec<&str> = if raw.contains(',') {
        raw.split(',').collect()
    } else {
        raw.split_whitespace().collect()
    };
    let mut out: Vec<String> = Vec::new();
    for p in parts.into_iter().map(str::trim).filter(|p| !p.is_empty()) {
        if !out.iter().any(|k| k == p) {
            out.push(p.to_string());
        }
    }
    out
}

/// Parses a registry JSON document.
pub fn parse_registry_json(url: &str, body: &str) -> Result<RegistryMetadata, HttpError> {
    let api: ApiResponse =
        serde_json::from_str(body).map_err(|e| HttpError::protocol(url, e.to_string(), body))?;
    let info = api.info;
    let name = normalize_distribution_name(&info.name);
    if name.is_empty() {
        return Err(HttpError::protocol(url, "empty distribution name", body));
    }
    let version = present(info.version).unwrap_or_default();
    if version.is_empty() {
        return Err(HttpError::protocol(url, "record without a version", body));
    }
    let project_urls = info
        .project_urls
        .unwrap_or_default()
        .into_iter()
        .filter_map(|(k, v)| present(v).map(|v| (k, v)))
        .collect();
    Ok(RegistryMetadata {
        distribution_name: name,
        summary: info.summary.map(|s| s.trim().to_string()).unwrap_or_default(),
        homepage: present(info.home_page),
        keywords: info.keywords.as_deref().map(split_keywords).unwrap_or_default(),
        classifiers: info.classifiers,
        version,
        project_urls,
    })
}

pub struct RegistryClient<'a> {
    http: &'a HttpClient,
    base: String,
}

impl<'a> RegistryClient<'a> {
    pub const PUBLIC: &'static str = "https://pypi.org";

    pub fn new(http: &'a HttpClient, base: &str) -> Self {
        RegistryClient {
            http,
            base: base.trim_end_matches('/').to_string(),
        }
    }

    pub fn url_for(&self, name: &str) -> String {
        format!("{}/pypi/{}/json", self.base, normalize_distribution_name(name))
    }

    /// `Ok(None)` when the registry has no such distribution.
    pub fn fetch(&self, name: &str) -> Result<Option<RegistryMetadata>, HttpError> {
        let url = self.url_for(name);
        let resp = self.http.get(&url)?;
        match resp.status {
            404 => Ok(None),
            s if (200..300).contains(&s) => parse_registry_json(&url, &resp.body).map(Some),
            status => Err(HttpError::Status { url, status }),
        }
    }
}

impl RegistryLookup for RegistryClient<'_> {
    fn exists(&self, name: &str) -> Result<bool, HttpError> {
        let url = self.url_for(name);
        let resp = self.http.get(&url)?;
        match resp.status {
            404 => Ok(false),
            s if (200..300).contains(&s) => Ok(true),
            status => Err(HttpError::Status { url, status }),
        }
    }
}
