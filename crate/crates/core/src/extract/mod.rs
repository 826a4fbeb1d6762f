//! Documentation mining: noun phrases labeled as models or features,
//! co-occurrence links between them, and clustering under base models.

mod cluster;
mod segment;
mod two_way;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cluster::{cluster_variations, BaseEntry, BaseLexicon};
pub use segment::{chunk_page, segment, DocumentChunk};
pub use two_way::{build_two_way_index, TwoWayIndex};

use crate::graph::{Batch, BaseModel, Edge, EdgeKind, EntityId, EvidenceRef, Feature, ModelVariation};
use crate::library::CrawledPage;
use crate::provider::{label, Backend, LabelTask, ProviderError, FEATURE, MODEL};
use crate::text::{noun_phrases_max, split_sentences};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoOccurrenceScope {
    Chunk,
    Sentence,
}

/// `chunking.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkingConfig {
    pub min_chunk_chars: usize,
    pub co_occurrence_scope: CoOccurrenceScope,
    pub max_phrase_tokens: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        ChunkingConfig {
            min_chunk_chars: 20,
            co_occurrence_scope: CoOccurrenceScope::Chunk,
            max_phrase_tokens: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounPhraseCandidate {
    pub phrase: String,
    pub source_url: String,
    pub position: usize,
    /// Byte offsets into the chunk text.
    pub span: (usize, usize),
}

pub fn extract_noun_phrases(chunk: &DocumentChunk, max_tokens: usize) -> Vec<NounPhraseCandidate> {
    noun_phrases_max(&chunk.text, max_tokens)
        .into_iter()
        .map(|p| NounPhraseCandidate {
            phrase: p.phrase,
            source_url: chunk.source_url.clone(),
            position: chunk.position,
            span: (p.start, p.end),
        })
        .collect()
}

/// The sentence of `text` containing byte offset `at`.
fn sentence_at(text: &str, at: usize) -> &str {
    split_sentences(text)
        .into_iter()
        .find(|(s, e)| *s <= at && at < *e)
        .map(|(s, e)| &text[s..e])
        .unwrap_or(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhraseLabel {
    Model,
    Feature,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCandidate {
    pub phrase: String,
    /// Surface form of the first occurrence.
    pub surface: String,
    pub label: PhraseLabel,
    pub confidence: f64,
    pub definition: Option<String>,
    pub evidence: EvidenceRef,
}

/// Labels one candidate in its chunk; models also get a definition.
pub fn label_and_define(
    candidate: &NounPhraseCandidate,
    chunk: &DocumentChunk,
    backend: &dyn Backend,
    votes: usize,
    retrieved_at: DateTime<Utc>,
) -> Result<LabeledCandidate, ProviderError> {
    let r = label(&LabelTask::phrase_label(&chunk.text, &candidate.phrase), backend, votes)?;
    let lbl = match r.answer.as_str() {
        MODEL => PhraseLabel::Model,
        FEATURE => PhraseLabel::Feature,
        _ => PhraseLabel::Neither,
    };
    let definition = if lbl == PhraseLabel::Model {
        let d = label(&LabelTask::definition(&chunk.text, &candidate.phrase), backend, votes)?;
        Some(d.answer).filter(|a| !a.trim().is_empty())
    } else {
        None
    };
    let (s, e) = candidate.span;
    Ok(LabeledCandidate {
        phrase: candidate.phrase.clone(),
        surface: chunk.text[s..e].to_string(),
        label: lbl,
        confidence: r.confidence,
        definition,
        evidence: EvidenceRef::new(&chunk.source_url, sentence_at(&chunk.text, s), retrieved_at),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoOccurrence {
    pub model: String,
    pub feature: String,
    pub weight: u32,
    pub evidence: Vec<EvidenceRef>,
}

/// Model–feature pairs sharing a scope unit; weight counts the units.
pub fn map_model_features(
    chunks: &[DocumentChunk],
    candidates: &[Vec<NounPhraseCandidate>],
    labels: &BTreeMap<String, PhraseLabel>,
    scope: CoOccurrenceScope,
    retrieved_at: DateTime<Utc>,
) -> Vec<CoOccurrence> {
    let mut acc: BTreeMap<(String, String), CoOccurrence> = BTreeMap::new();
    for (chunk, cands) in chunks.iter().zip(candidates) {
        let units: Vec<(usize, usize)> = match scope {
            CoOccurrenceScope::Chunk => vec![(0, chunk.text.len())],
            CoOccurrenceScope::Sentence => split_sentences(&chunk.text),
        };
        for (us, ue) in units {
            let inside = |c: &&NounPhraseCandidate| c.span.0 >= us && c.span.1 <= ue;
            let of = |want: PhraseLabel| -> Vec<&NounPhraseCandidate> {
                let mut v: Vec<&NounPhraseCandidate> =
                    cands.iter().filter(inside).filter(|c| labels.get(&c.phrase) == Some(&want)).collect();
                v.dedup_by(|a, b| a.phrase == b.phrase);
                v
            };
            let models = of(PhraseLabel::Model);
            let features = of(PhraseLabel::Feature);
            for m in &models {
                for f in &features {
                    let ev = EvidenceRef::new(&chunk.source_url, sentence_at(&chunk.text, f.span.0), retrieved_at);
                    let entry = acc.entry((m.phrase.clone(), f.phrase.clone())).or_insert_with(|| CoOccurrence {
                        model: m.phrase.clone(),
                        feature: f.phrase.clone(),
                        weight: 0,
                        evidence: Vec::new(),
                    });
                    entry.weight += 1;
                    if !entry.evidence.contains(&ev) {
                        entry.evidence.push(ev);
                    }
                }
            }
        }
    }
    acc.into_values().collect()
}

/// Result of pipeline 3 for one library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryExtraction {
    pub library_id: EntityId,
    pub chunk_count: usize,
    /// One labeled record per distinct phrase, in first-seen order.
    pub labeled: Vec<LabeledCandidate>,
    pub cooccurrences: Vec<CoOccurrence>,
}

impl LibraryExtraction {
    pub fn models(&self) -> impl Iterator<Item = &LabeledCandidate> {
        self.labeled.iter().filter(|l| l.label == PhraseLabel::Model)
    }
}

/// Segments the pages, labels each distinct phrase once (in the chunk of its
/// first occurrence) and maps co-occurrences.
pub fn extract_library(
    library_id: &EntityId,
    pages: &[CrawledPage],
    backend: &dyn Backend,
    votes: usize,
    cfg: &ChunkingConfig,
    retrieved_at: DateTime<Utc>,
) -> Result<LibraryExtraction, ProviderError> {
    let chunks: Vec<DocumentChunk> = pages
        .iter()
        .flat_map(|p| chunk_page(library_id, &p.url, &p.text, cfg.min_chunk_chars))
        .collect();
    let candidates: Vec<Vec<NounPhraseCandidate>> =
        chunks.iter().map(|c| extract_noun_phrases(c, cfg.max_phrase_tokens)).collect();
    let mut first: Vec<(&NounPhraseCandidate, &DocumentChunk)> = Vec::new();
    let mut seen = BTreeSet::new();
    for (chunk, cands) in chunks.iter().zip(&candidates) {
        for c in cands {
            if seen.insert(c.phrase.as_str()) {
                first.push((c, chunk));
            }
        }
    }
    let labeled: Vec<LabeledCandidate> = first
        .par_iter()
        .map(|(c, chunk)| label_and_define(c, chunk, backend, votes, retrieved_at))
        .collect::<Result<_, _>>()?;
    let labels: BTreeMap<String, PhraseLabel> = labeled.iter().map(|l| (l.phrase.clone(), l.label)).collect();
    let cooccurrences = map_model_features(&chunks, &candidates, &labels, cfg.co_occurrence_scope, retrieved_at);
    Ok(LibraryExtraction {
        library_id: library_id.clone(),
        chunk_count: chunks.len(),
        labeled,
        cooccurrences,
    })
}

/// Title-cased display name; tokens written in capitals keep them.
pub fn display_name(phrase: &str, surface: &str) -> String {
    let surface_words: Vec<&str> = surface.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
    phrase
        .split(' ')
        .enumerate()
        .map(|(i, w)| {
            let upper = surface_words
                .get(i)
                .is_some_and(|s| s.len() > 1 && s.chars().all(|c| !c.is_lowercase()) && s.chars().any(char::is_alphabetic));
            if upper {
                w.to_uppercase()
            } else {
                let mut cs = w.chars();
                cs.next().map(|f| f.to_uppercase().chain(cs).collect()).unwrap_or_default()
            }
        })
        .collect::<Vec<String>>()
        .join(" ")
}

/// Graph writes for a set of library extractions. Extractions are merged in
/// the given order: the first definition and display name of a phrase win,
/// co-occurrence weights add up.
pub fn extraction_batch(extractions: &[LibraryExtraction], lexicon: &BaseLexicon) -> Batch {
    struct Var {
        name: String,
        definition: String,
        evidence: Vec<EvidenceRef>,
    }
    let mut vars: BTreeMap<String, Var> = BTreeMap::new();
    let mut lib_edges: BTreeMap<(EntityId, String), Vec<EvidenceRef>> = BTreeMap::new();
    let mut co: BTreeMap<(String, String), (u32, Vec<EvidenceRef>)> = BTreeMap::new();
    for ex in extractions {
        for m in ex.models() {
            let v = vars.entry(m.phrase.clone()).or_insert_with(|| Var {
                name: display_name(&m.phrase, &m.surface),
                definition: String::new(),
                evidence: Vec::new(),
            });
            if v.definition.is_empty() {
                v.definition = m.definition.clone().unwrap_or_default();
            }
            if !v.evidence.contains(&m.evidence) {
                v.evidence.push(m.evidence.clone());
            }
            lib_edges.entry((ex.library_id.clone(), m.phrase.clone())).or_default().push(m.evidence.clone());
        }
        for c in &ex.cooccurrences {
            let e = co.entry((c.model.clone(), c.feature.clone())).or_default();
            e.0 += c.weight;
            for ev in &c.evidence {
                if !e.1.contains(ev) {
                    e.1.push(ev.clone());
                }
            }
        }
    }
    let assignment = cluster_variations(vars.keys().map(String::as_str), lexicon);
    let mut batch = Batch::new();
    let mut bases: BTreeMap<&str, BaseModel> = BTreeMap::new();
    let mut var_ids: BTreeMap<&str, EntityId> = BTreeMap::new();
    for (phrase, v) in &vars {
        let base_name = assignment[phrase].as_str();
        let base = bases.entry(base_name).or_insert_with(|| match lexicon.entry(base_name) {
            Some(entry) => entry.to_base_model(),
            None => BaseModel::new(base_name, ""),
        });
        let mut mv = ModelVariation::new(&v.name, &base.id, &v.definition);
        mv.evidence = v.evidence.clone();
        var_ids.insert(phrase, mv.id.clone());
        batch.push(mv);
    }
    for b in bases.into_values() {
        batch.push(b);
    }
    let mut features = BTreeSet::new();
    for ((model, feature), (weight, evidence)) in &co {
        let f = Feature::new(feature);
        if features.insert(f.id.clone()) {
            batch.push(f.clone());
        }
        batch.edge(
            Edge::new(EdgeKind::VariationFeature, var_ids[model.as_str()].clone(), f.id)
                .with_weight(*weight)
                .with_evidence(evidence.clone()),
        );
    }
    for ((lib, phrase), evidence) in lib_edges {
        batch.edge(Edge::new(EdgeKind::LibraryVariation, lib, var_ids[phrase.as_str()].clone()).with_evidence(evidence));
    }
    batch
}
