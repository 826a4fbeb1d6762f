//! Community reviews mapped onto product-quality attributes.

mod aggregate;
pub mod reviews;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use aggregate::{Aggregator, Weighted, WeightedMean};
pub use reviews::{harvest_reviews, ForumClient, OfflineReviews, Review, ReviewSource};

use crate::config::ConfigDir;
use crate::error::{Error, Result};
use crate::graph::{Batch, ChangeSummary, EntityId, EvidenceRef, KnowledgeGraph, QualityAggregate};
use crate::provider::{label, Backend, LabelTask, ProviderError, NEGATIVE, POSITIVE};
use crate::text::split_sentences;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub definition: String,
}

/// Quality characteristics, in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSet {
    #[serde(rename = "attribute")]
    pub attributes: Vec<Attribute>,
}

impl AttributeSet {
    pub fn load(cfg: &ConfigDir) -> Result<Self> {
        let set: AttributeSet = cfg.toml("quality_attributes.toml")?;
        let mut names: Vec<&str> = set.attributes.iter().map(|a| a.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != set.attributes.len() || names.is_empty() {
            return Err(Error::Config {
                name: "quality_attributes.toml".into(),
                message: "attribute names must be unique and non-empty".into(),
            });
        }
        Ok(set)
    }

    pub fn names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.attributes.iter().any(|a| a.name == name)
    }

    /// One `name: definition` line per attribute, used as prompt context.
    pub fn glossary(&self) -> String {
        self.attributes
            .iter()
            .map(|a| format!("{}: {}", a.name, a.definition))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentRecord {
    pub review_id: String,
    pub sentence: String,
    pub polarity: i8,
    pub confidence: f64,
    pub attribute: String,
    pub evidence: EvidenceRef,
}

/// Splits a review into sentences and keeps the opinionated ones that map
/// to an attribute.
pub fn classify_sentences(
    review: &Review,
    backend: &dyn Backend,
    votes: usize,
    attributes: &AttributeSet,
    retrieved_at: DateTime<Utc>,
) -> Result<Vec<SentimentRecord>, ProviderError> {
    let names = attributes.names();
    let glossary = attributes.glossary();
    let mut out = Vec::new();
    for (s, e) in split_sentences(&review.body) {
        let sentence = &review.body[s..e];
        let sent = label(&LabelTask::sentiment(&review.body, sentence), backend, votes)?;
        let polarity = match sent.answer.as_str() {
            POSITIVE => 1,
            NEGATIVE => -1,
            _ => continue,
        };
        let attr = label(&LabelTask::quality_map(&glossary, sentence, &names), backend, votes)?;
        if !attributes.contains(&attr.answer) {
            continue;
        }
        out.push(SentimentRecord {
            review_id: review.id.clone(),
            sentence: sentence.to_string(),
            polarity,
            confidence: sent.confidence,
            attribute: attr.answer,
            evidence: EvidenceRef::new(&review.url, sentence, retrieved_at),
        });
    }
    Ok(out)
}

/// One aggregate for a key triple; `None` without records.
pub fn aggregate_quality(
    variation_id: &EntityId,
    library_id: &EntityId,
    attribute: &str,
    records: &[SentimentRecord],
    aggregator: &dyn Aggregator,
) -> Option<QualityAggregate> {
    let weighted: Vec<Weighted> = records
        .iter()
        .map(|r| Weighted { polarity: r.polarity, confidence: r.confidence })
        .collect();
    let score = aggregator.aggregate(&weighted)?;
    let mut evidence: Vec<EvidenceRef> = Vec::new();
    for r in records {
        if !evidence.contains(&r.evidence) {
            evidence.push(r.evidence.clone());
        }
    }
    evidence.sort();
    Some(QualityAggregate {
        id: QualityAggregate::id_for(variation_id, library_id, attribute),
        variation_id: variation_id.clone(),
        library_id: library_id.clone(),
        attribute: attribute.to_string(),
        score,
        review_count: records.len() as u64,
        evidence,
    })
}

/// Groups records by attribute and aggregates each group.
pub fn aggregate_pair(
    variation_id: &EntityId,
    library_id: &EntityId,
    records: &[SentimentRecord],
    aggregator: &dyn Aggregator,
) -> Vec<QualityAggregate> {
    let mut groups: BTreeMap<&str, Vec<SentimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.attribute).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .filter_map(|(a, rs)| aggregate_quality(variation_id, library_id, a, &rs, aggregator))
        .collect()
}

/// Upserts aggregates; unresolved key triples come back as rejections.
pub fn attach_quality(graph: &mut KnowledgeGraph, aggregates: &[QualityAggregate]) -> ChangeSummary {
    let mut b = Batch::new();
    for a in aggregates {
        b.push(a.clone());
    }
    graph.upsert(&b)
}
