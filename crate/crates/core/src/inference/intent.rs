use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ConfigDir;
use crate::error::{Error, Result};
use crate::graph::TextIndex;
use crate::text::{content_words_outside, noun_phrases, normalize_phrase, term_tokens};

/// `synonyms.tsv`: term, expansion, weight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynonymTable {
    pub entries: BTreeMap<String, Vec<(String, f64)>>,
}

impl SynonymTable {
    pub fn load(cfg: &ConfigDir) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (i, row) in cfg.tsv("synonyms.tsv", 3)?.into_iter().enumerate() {
            let weight: f64 = row[2]
                .parse()
                .ok()
                .filter(|w: &f64| w.is_finite() && *w > 0.0 && *w <= 1.0)
                .ok_or_else(|| Error::parse("synonyms.tsv", i + 1, format!("weight {:?} not in (0, 1]", row[2])))?;
            entries
                .entry(normalize_phrase(&row[0]))
                .or_default()
                .push((normalize_phrase(&row[1]), weight));
        }
        Ok(SynonymTable { entries })
    }

    pub fn expansions(&self, term: &str) -> &[(String, f64)] {
        self.entries.get(term).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermOrigin {
    User,
    Synonym,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: String,
    pub weight: f64,
    pub origin: TermOrigin,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub raw: Vec<String>,
    pub pruned: Vec<String>,
    pub enriched: Vec<WeightedTerm>,
}

impl KeywordSet {
    /// Builds a keyword set from explicit user terms, bypassing pruning.
    pub fn from_terms<'a>(terms: impl IntoIterator<Item = &'a str>) -> Self {
        let mut ks = KeywordSet::default();
        for t in terms {
            let n = normalize_phrase(t);
            if !n.is_empty() && !ks.raw.contains(&n) {
                ks.raw.push(n.clone());
                ks.pruned.push(n.clone());
                ks.enriched.push(WeightedTerm { term: n, weight: 1.0, origin: TermOrigin::User });
            }
        }
        ks
    }

    /// Distinct terms with their maximum weight, sorted by term.
    pub fn term_weights(&self) -> BTreeMap<&str, f64> {
        let mut out: BTreeMap<&str, f64> = BTreeMap::new();
        for t in &self.enriched {
            let w = out.entry(&t.term).or_insert(0.0);
            *w = w.max(t.weight);
        }
        out
    }
}

/// Keywords from an intent paragraph: noun phrases and remaining content
/// words in text order, minus stopwords and terms that match fewer than
/// `rarity_floor` indexed documents, plus synonym expansions.
pub fn interpret_intent(
    text: &str,
    stoplist: &[String],
    synonyms: &SynonymTable,
    index: &TextIndex,
    rarity_floor: usize,
) -> Result<KeywordSet> {
    if text.trim().is_empty() {
        return Err(Error::InvalidArgument("empty intent".into()));
    }
    let phrases = noun_phrases(text);
    let mut spans = phrases.clone();
    spans.extend(content_words_outside(text, &phrases));
    spans.sort_by_key(|p| p.start);
    let mut raw: Vec<String> = Vec::new();
    for p in spans {
        if !p.phrase.is_empty() && !raw.contains(&p.phrase) {
            raw.push(p.phrase);
        }
    }
    let is_stop = |term: &str| term_tokens(term).iter().all(|t| stoplist.iter().any(|s| s == t));
    let pruned: Vec<String> = raw
        .iter()
        .filter(|t| !is_stop(t))
        .filter(|t| index.document_frequency(t) >= rarity_floor)
        .cloned()
        .collect();
    if pruned.is_empty() {
        return Err(Error::InvalidArgument(
            "unintelligible intent: no usable keywords, please rephrase with model, task or data terms".into(),
        ));
    }
    let mut enriched: Vec<WeightedTerm> = pruned
        .iter()
        .map(|t| WeightedTerm { term: t.clone(), weight: 1.0, origin: TermOrigin::User })
        .collect();
    for t in &pruned {
        for (exp, w) in synonyms.expansions(t) {
            if !enriched.iter().any(|e| &e.term == exp) {
                enriched.push(WeightedTerm { term: exp.clone(), weight: *w, origin: TermOrigin::Synonym });
            }
        }
    }
    Ok(KeywordSet { raw, pruned, enriched })
}
