//! Breadth-first documentation crawler.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use url::Url;

use super::html;
use super::RegistryMetadata;
use crate::http::HttpClient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlLimits {
    pub max_urls: usize,
    pub same_site_only: bool,
}

impl Default for CrawlLimits {
    fn default() -> Self {
        CrawlLimits {
            max_urls: 20,
            same_site_only: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawledPage {
    pub url: String,
    pub text: String,
}

const BINARY_EXTENSIONS: &[&str] = &[
    ".png", ".jpg", ".jpeg", ".gif", ".svg", ".ico", ".pdf", ".zip", ".gz", ".tar", ".whl",
    ".egg", ".css", ".js", ".woff", ".woff2", ".ttf", ".mp4", ".webp", ".ipynb", ".json",
];

fn canonical(url: &Url) -> Option<String> {
    if !matches!(url.scheme(), "http" | "https" | "file") {
        return None;
    }
    let mut u = url.clone();
    u.set_fragment(None);
    let path = u.path().to_ascii_lowercase();
    if BINARY_EXTENSIONS.iter().any(|e| path.ends_with(e)) {
        return None;
    }
    Some(u.to_string())
}

/// Seeds: the homepage, then project URLs in key order, deduplicated.
pub fn seed_urls(meta: &RegistryMetadata) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for raw in meta.homepage.iter().chain(meta.project_urls.values()) {
        if let Some(c) = Url::parse(raw).ok().as_ref().and_then(canonical) {
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    out
}

/// Fetches up to `limits.max_urls` pages in FIFO order, following links in
/// document order. Failed fetches are skipped and do not count.
pub fn collect_documentation_urls(meta: &RegistryMetadata, http: &HttpClient, limits: CrawlLimits) -> Vec<CrawledPage> {
    let seeds = seed_urls(meta);
    let hosts: BTreeSet<String> = seeds
        .iter()
        .filter_map(|s| Url::parse(s).ok())
        .map(|u| u.host_str().unwrap_or("").to_ascii_lowercase())
        .collect();
    let mut queue: VecDeque<String> = seeds.iter().cloned().collect();
    let mut seen: HashSet<String> = seeds.iter().cloned().collect();
    let mut pages = Vec::new();
    let max = limits.max_urls.max(1);
    while let Some(url) = queue.pop_front() {
        if pages.len() >= max {
            break;
        }
        let body = match http.get(&url) {
            Ok(r) if r.is_success() => r.body,
            Ok(r) => {
                tracing::warn!(%url, status = r.status, "documentation page skipped");
                continue;
            }
            Err(e) => {
                tracing::warn!(%url, error = %e, "documentation page skipped");
                continue;
            }
        };
        let page = html::extract(&body);
        let Ok(base) = Url::parse(&url) else { continue };
        for link in &page.links {
            let Some(next) = base.join(link).ok().as_ref().and_then(canonical) else {
                continue;
            };
            if limits.same_site_only {
                let host = Url::parse(&next)
                    .ok()
                    .map(|u| u.host_str().unwrap_or("").to_ascii_lowercase())
                    .unwrap_or_default();
                if !hosts.contains(&host) {
                    continue;
                }
            }
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
        pages.push(CrawledPage { url, text: page.text });
    }
    if pages.is_empty() && !seeds.is_empty() {
        tracing::warn!(library = %meta.distribution_name, "no documentation seed reachable");
    }
    pages
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::http::{HttpError, Request, Response, Transport};
    use std::collections::HashMap;
    use std::sync::Arc;

    /// Serves a fixed map of url → body; anything else is a 404.
    pub struct Site(pub HashMap<String, String>);

    impl Transport for Site {
        fn send(&self, req: &Request) -> Result<Response, HttpError> {
            Ok(match self.0.get(&req.url) {
                Some(b) => Response { status: 200, body: b.clone() },
                None => Response { status: 404, body: String::new() },
            })
        }
    }

    fn site() -> HttpClient {
        let pages = [
            ("https://docs.ex/", r#"<p>Home</p><a href="b.html">b</a><a href="c.html#top">c</a><a href="https://other.ex/x">x</a>"#),
            ("https://docs.ex/b.html", r#"<p>B</p><a href="d.html">d</a><a href="/">home</a>"#),
            ("https://docs.ex/c.html", r#"<p>C</p><a href="e.html">e</a><a href="logo.png">img</a>"#),
            ("https://docs.ex/d.html", "<p>D</p>"),
            ("https://docs.ex/e.html", "<p>E</p>"),
            ("https://other.ex/x", "<p>X</p>"),
        ];
        let map = pages.iter().map(|(u, b)| (u.to_string(), b.to_string())).collect();
        HttpClient::live(Arc::new(Site(map)))
    }

    fn meta(home: &str) -> RegistryMetadata {
        RegistryMetadata {
            distribution_name: "ex".into(),
            homepage: Some(home.into()),
            version: "1".into(),
            ..Default::default()
        }
    }

    fn urls(pages: &[CrawledPage]) -> Vec<&str> {
        pages.iter().map(|p| p.url.as_str()).collect()
    }

    #[test]
    fn bfs_order_and_cap() {
        let http = site();
        let got = collect_documentation_urls(&meta("https://docs.ex/"), &http, CrawlLimits { max_urls: 3, same_site_only: true });
        assert_eq!(urls(&got), vec!["https://docs.ex/", "https://docs.ex/b.html", "https://docs.ex/c.html"]);
        assert!(got[1].text.starts_with("B\n"));
        let all = collect_documentation_urls(&meta("https://docs.ex/"), &http, CrawlLimits { max_urls: 10, same_site_only: true });
        assert_eq!(all.len(), 5);
        let open = collect_documentation_urls(&meta("https://docs.ex/"), &http, CrawlLimits { max_urls: 10, same_site_only: false });
        assert_eq!(open.len(), 6);
    }

    #[test]
    fn leaf_homepage_and_unreachable_seed() {
        let http = site();
        let got = collect_documentation_urls(&meta("https://docs.ex/d.html"), &http, CrawlLimits::default());
        assert_eq!(urls(&got), vec!["https://docs.ex/d.html"]);
        assert!(collect_documentation_urls(&meta("https://nowhere.ex/"), &http, CrawlLimits::default()).is_empty());
    }
}
