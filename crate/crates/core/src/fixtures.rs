//! Small hand-built graphs used by tests, the FFI crate and the CLI demo.
//!
//! The regression graph has one base model, two variations with three
//! features each and one library supporting both variations: ten nodes.

use chrono::{DateTime, TimeZone, Utc};

use crate::graph::{
    Batch, BaseModel, EvidenceRef, Feature, KnowledgeGraph, Library, ModelVariation, QualityAggregate,
};

pub const DOC_URL: &str = "https://scikit-learn.org/stable/modules/linear_model.html";

pub fn fixture_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 6, 30, 0, 0, 0).unwrap()
}

fn evidence(fragment: &str) -> EvidenceRef {
    EvidenceRef::new(DOC_URL, fragment, fixture_time())
}

const RIDGE_DEF: &str = "Ridge regression adds an L2 penalty on the coefficients, which shrinks them and handles multicollinearity with a closed-form solution.";
const ROBUST_DEF: &str = "Robust multivariate regression fits several response variables at once while resisting outliers and heavy-tailed noise.";

pub fn regression_base() -> BaseModel {
    BaseModel::new(
        "Regression",
        "Regression models predict a continuous target variable from input features.",
    )
    .with_aliases(["regression model", "regressor"])
}

pub fn ridge() -> ModelVariation {
    let mut v = ModelVariation::new("Ridge Regression", &regression_base().id, RIDGE_DEF);
    v.evidence.push(evidence(RIDGE_DEF));
    v
}

pub fn robust() -> ModelVariation {
    let mut v = ModelVariation::new("Robust Multivariate Regression", &regression_base().id, ROBUST_DEF);
    v.evidence.push(evidence(ROBUST_DEF));
    v
}

pub fn scikit_learn() -> Library {
    let mut lib = Library::new("scikit-learn");
    lib.summary = "A set of python modules for machine learning and data mining".into();
    lib.homepage = Some("https://scikit-learn.org".into());
    lib.keywords = vec!["machine learning".into(), "regression".into(), "classification".into()];
    lib.classifiers = vec!["Topic :: Scientific/Engineering :: Artificial Intelligence".into()];
    lib.version = "1.5.0".into();
    lib.ai_related = true;
    lib.ai_score = 1.0;
    lib.ai_basis = crate::graph::AiBasis::Tag;
    lib.evidence.push(EvidenceRef::new(
        "https://pypi.org/pypi/scikit-learn/json",
        "A set of python modules for machine learning and data mining",
        fixture_time(),
    ));
    lib
}

pub const RIDGE_FEATURES: [&str; 3] = ["l2 penalty", "multicollinearity handling", "closed-form solution"];
pub const ROBUST_FEATURES: [&str; 3] = ["outlier resistance", "multivariate response", "heavy-tailed noise"];

/// Base, both variations and scikit-learn supporting them; no features.
pub fn regression_core_batch() -> Batch {
    let mut lib = scikit_learn();
    let (ridge, robust) = (ridge(), robust());
    lib.supported_variation_ids.insert(ridge.id.clone());
    lib.supported_variation_ids.insert(robust.id.clone());
    let mut b = Batch::new();
    b.push(regression_base()).push(ridge).push(robust).push(lib);
    b
}

/// The full ten-node graph as a batch.
pub fn regression_graph_batch() -> Batch {
    let mut b = Batch::new();
    let mut ridge = ridge();
    let mut robust = robust();
    for (v, feats) in [(&mut ridge, RIDGE_FEATURES), (&mut robust, ROBUST_FEATURES)] {
        for f in feats {
            let feat = Feature::new(f);
            v.feature_ids.insert(feat.id.clone());
            b.push(feat);
        }
    }
    let mut lib = scikit_learn();
    lib.supported_variation_ids.insert(ridge.id.clone());
    lib.supported_variation_ids.insert(robust.id.clone());
    b.push(regression_base()).push(ridge).push(robust).push(lib);
    b
}

pub fn regression_graph() -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    let s = g.upsert(&regression_graph_batch());
    debug_assert!(s.rejected.is_empty());
    g
}

/// Three quality aggregates for the regression graph.
pub fn quality_batch() -> Batch {
    let lib = scikit_learn().id;
    let rows = [
        (ridge().id, "performance efficiency", 0.6, 3, "Ridge in scikit-learn is fast even on wide data."),
        (ridge().id, "interaction capability", 0.3333333333333333, 3, "The Ridge API in scikit-learn is easy to use."),
        (robust().id, "reliability", -0.5, 2, "Robust regression in scikit-learn crashed on sparse input."),
    ];
    let mut b = Batch::new();
    for (var, attr, score, count, fragment) in rows {
        b.push(QualityAggregate {
            id: QualityAggregate::id_for(&var, &lib, attr),
            variation_id: var,
            library_id: lib.clone(),
            attribute: attr.to_string(),
            score,
            review_count: count,
            evidence: vec![EvidenceRef::new("https://forum.example.org/t/1", fragment, fixture_time())],
        });
    }
    b
}

pub fn regression_graph_with_quality() -> KnowledgeGraph {
    let mut g = regression_graph();
    let s = g.upsert(&quality_batch());
    debug_assert_eq!(s.inserted.entities, 3);
    g
}
