//! OSV-compatible vulnerability query client.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::graph::{normalize_distribution_name, CveRecord, EntityId, Library};
use crate::http::{HttpClient, HttpError, Request};

#[derive(Deserialize)]
struct QueryResponse {
    #[serde(default)]
    vulns: Vec<Vuln>,
}

#[derive(Deserialize)]
struct Vuln {
    id: String,
    #[serde(default)]
    affected: Vec<Affected>,
}

#[derive(Deserialize)]
struct Affected {
    #[serde(default)]
    package: Option<Package>,
    #[serde(default)]
    ranges: Vec<Range>,
    #[serde(default)]
    versions: Vec<String>,
}

#[derive(Deserialize)]
struct Package {
    name: String,
}

#[derive(Deserialize)]
struct Range {
    #[serde(default)]
    events: Vec<BTreeMap<String, String>>,
}

/// Request body for `(name, version)`. Key order is fixed so replay keys
/// are stable.
pub fn query_body(name: &str, version: &str) -> String {
    serde_json::json!({
        "package": {"ecosystem": "PyPI", "name": normalize_distribution_name(name)},
        "version": version,
    })
    .to_string()
}

/// Human-readable range: `>=a,<b` per interval joined by ` || `.
fn describe(affected: &[&Affected], version: &str) -> String {
    let mut parts: Vec<String> = Vec::new();
    for a in affected {
        for r in &a.ranges {
            let mut lower: Option<&str> = None;
            for ev in &r.events {
                if let Some(i) = ev.get("introduced") {
                    lower = Some(i);
                }
                let upper = ev.get("fixed").map(|f| format!("<{f}")).or_else(|| ev.get("last_affected").map(|f| format!("<={f}")));
                if let Some(u) = upper {
                    parts.push(match lower.take() {
                        Some(l) if l != "0" => format!(">={l},{u}"),
                        _ => u,
                    });
                }
            }
            if let Some(l) = lower {
                parts.push(if l == "0" { "*".to_string() } else { format!(">={l}") });
            }
        }
    }
    parts.dedup();
    if parts.is_empty() {
        format!("=={version}")
    } else {
        parts.join(" || ")
    }
}

pub struct OsvClient<'a> {
    http: &'a HttpClient,
    base: String,
}

impl<'a> OsvClient<'a> {
    pub const PUBLIC: &'static str = "https://api.osv.dev";

    pub fn new(http: &'a HttpClient, base: &str) -> Self {
        OsvClient {
            http,
            base: base.trim_end_matches('/').to_string(),
        }
    }

    /// Vulnerabilities affecting exactly `name==version`, deduplicated and
    /// sorted by id.
    pub fn fetch(&self, name: &str, version: &str) -> Result<Vec<CveRecord>, HttpError> {
        let url = format!("{}/v1/query", self.base);
        let resp = self.http.send(&Request::post_json(&url, query_body(name, version)))?;
        if !resp.is_success() {
            return Err(HttpError::Status { url, status: resp.status });
        }
        let parsed: QueryResponse =
            serde_json::from_str(&resp.body).map_err(|e| HttpError::protocol(&url, e.to_string(), &resp.body))?;
        let norm = normalize_distribution_name(name);
        let library_id = Library::id_for(&norm);
        let mut by_id: BTreeMap<String, String> = BTreeMap::new();
        for v in &parsed.vulns {
            let id = v.id.trim();
            if id.is_empty() {
                return Err(HttpError::protocol(&url, "vulnerability without id", &resp.body));
            }
            if by_id.contains_key(id) {
                continue;
            }
            let ours: Vec<&Affected> = v
                .affected
                .iter()
                .filter(|a| a.package.as_ref().is_none_or(|p| normalize_distribution_name(&p.name) == norm))
                .collect();
            let range = if ours.iter().any(|a| a.versions.iter().any(|x| x == version)) && ours.iter().all(|a| a.ranges.is_empty()) {
                format!("=={version}")
            } else {
                describe(&ours, version)
            };
            by_id.insert(id.to_string(), range);
        }
        Ok(by_id
            .into_iter()
            .map(|(id, affected_version_range)| CveRecord {
                id: EntityId(id),
                library_id: library_id.clone(),
                affected_version_range,
            })
            .collect())
    }
}
