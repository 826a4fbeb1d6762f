use serde::{Deserialize, Serialize};

use crate::graph::EntityId;
use crate::text::collapse_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentChunk {
    pub library_id: EntityId,
    pub source_url: String,
    pub text: String,
    pub position: usize,
}

const NAV_SEPARATORS: &[char] = &['|', '»', '›', '·', '•'];

/// A run of short link labels such as "Home | Install | API".
fn is_navigation(par: &str) -> bool {
    let parts: Vec<&str> = par.split(NAV_SEPARATORS).map(str::trim).filter(|p| !p.is_empty()).collect();
    parts.len() >= 3 && parts.iter().all(|p| p.split_whitespace().count() <= 3 && !p.ends_with('.'))
}

fn is_code_line(line: &str) -> bool {
    let l = line.trim_start();
    l.starts_with(">>>") || l.starts_with("...") || l.starts_with("$ ") || l.starts_with("In [")
}

/// Cleaned paragraphs of a page: fenced code, prompt lines and navigation
/// runs removed, blank-line separated blocks joined into single lines,
/// blocks shorter than `min_chars` dropped.
pub fn segment(raw: &str, min_chars: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut par: Vec<&str> = Vec::new();
    let mut in_fence = false;
    let flush = |par: &mut Vec<&str>, out: &mut Vec<String>| {
        let text = collapse_whitespace(&par.join(" "));
        par.clear();
        if text.chars().count() >= min_chars && !is_navigation(&text) {
            out.push(text);
        }
    };
    for line in raw.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            flush(&mut par, &mut out);
            continue;
        }
        if in_fence || is_code_line(line) {
            continue;
        }
        if line.trim().is_empty() {
            flush(&mut par, &mut out);
        } else {
            par.push(line);
        }
    }
    flush(&mut par, &mut out);
    out
}

pub fn chunk_page(library_id: &EntityId, url: &str, raw: &str, min_chars: usize) -> Vec<DocumentChunk> {
    segment(raw, min_chars)
        .into_iter()
        .enumerate()
        .map(|(position, text)| DocumentChunk {
            library_id: library_id.clone(),
            source_url: url.to_string(),
            text,
            position,
        })
        .collect()
}
