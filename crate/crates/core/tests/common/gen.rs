//! Random graph strategies.

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use proptest::sample::subsequence;

use modelselect::graph::{
    AiBasis, Batch, BaseModel, CveRecord, Edge, EdgeKind, EvidenceRef, Feature, Library, ModelVariation, Popularity,
    QualityAggregate, Repository,
};
use modelselect::KnowledgeGraph;

/// Small vocabulary so that queries hit and scores tie.
pub const WORDS: &[&str] = &[
    "ridge", "robust", "lasso", "tree", "forest", "kernel", "penalty", "noise", "outlier", "sparse", "regression",
    "classifier", "network", "boosting", "fast", "image", "text",
];
pub const HEADS: &[&str] = &["Regression", "Classifier", "Network", "Tree"];
pub const ATTRS: &[&str] = &["performance efficiency", "reliability", "interaction capability", "security"];
pub const SCORES: &[f64] = &[-1.0, -0.5, 0.0, 0.25, 0.5, 1.0];

fn words(max: usize) -> impl Strategy<Value = Vec<&'static str>> {
    proptest::collection::vec(proptest::sample::select(WORDS), 0..=max)
}

fn phrase(min: usize, max: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(WORDS), min..=max).prop_map(|w| w.join(" "))
}

fn evidence(n: u32) -> EvidenceRef {
    EvidenceRef::new(
        format!("https://docs.example.org/p{n}.html"),
        format!("fragment {n}"),
        Utc.with_ymd_and_hms(2025, 1, 1 + (n % 28), 0, 0, 0).unwrap(),
    )
}

#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub bases: Vec<(usize, Vec<&'static str>, Vec<&'static str>)>,
    pub variations: Vec<(usize, String, Vec<&'static str>, Vec<usize>)>,
    pub features: Vec<String>,
    pub libraries: Vec<(Vec<&'static str>, Vec<&'static str>, Vec<usize>)>,
    pub quality: Vec<(usize, usize, usize, usize, u64)>,
    pub repos: Vec<(u64, Vec<usize>)>,
    pub cves: Vec<(usize, u32)>,
}

/// Graph specs with at most 50 nodes, repositories and CVEs included when
/// `full` is set.
pub fn graph_spec(full: bool) -> impl Strategy<Value = GraphSpec> {
    let bases = proptest::collection::vec((0..HEADS.len(), words(2), words(5)), 1..=3);
    let features = proptest::collection::vec(phrase(1, 2), 0..=6);
    (bases, features).prop_flat_map(move |(bases, features)| {
        let nb = bases.len();
        let nf = features.len().max(1);
        let variations = proptest::collection::vec(
            (0..nb, phrase(1, 2), words(6), proptest::collection::vec(0..nf, 0..=3)),
            1..=8,
        );
        (Just(bases), Just(features), variations).prop_flat_map(move |(bases, features, variations)| {
            let nv = variations.len();
            let libraries = proptest::collection::vec(
                (words(3), words(5), subsequence((0..nv).collect::<Vec<_>>(), 0..=nv)),
                1..=4,
            );
            (Just(bases), Just(features), Just(variations), libraries).prop_flat_map(
                move |(bases, features, variations, libraries)| {
                    let nl = libraries.len();
                    let quality = proptest::collection::vec(
                        (0..nv, 0..nl, 0..ATTRS.len(), 0..SCORES.len(), 1u64..5),
                        0..=12,
                    );
                    let repos = if full {
                        proptest::collection::vec((0u64..500, subsequence((0..nl).collect::<Vec<_>>(), 0..=nl)), 0..=4).boxed()
                    } else {
                        Just(Vec::new()).boxed()
                    };
                    let cves = if full {
                        proptest::collection::vec((0..nl, 0u32..9999), 0..=3).boxed()
                    } else {
                        Just(Vec::new()).boxed()
                    };
                    (Just(bases), Just(features), Just(variations), Just(libraries), quality, repos, cves).prop_map(
                        |(bases, features, variations, libraries, quality, repos, cves)| GraphSpec {
                            bases,
                            variations,
                            features,
                            libraries,
                            quality,
                            repos,
                            cves,
                        },
                    )
                },
            )
        })
    })
}

impl GraphSpec {
    pub fn batch(&self) -> Batch {
        let mut b = Batch::new();
        let bases: Vec<BaseModel> = self
            .bases
            .iter()
            .enumerate()
            .map(|(i, (head, aliases, def))| {
                BaseModel::new(&format!("{} {i}", HEADS[*head]), &def.join(" "))
                    .with_aliases(aliases.iter().map(|a| format!("{a} {}", HEADS[*head].to_lowercase())))
            })
            .collect();
        let features: Vec<Feature> = self.features.iter().map(|f| Feature::new(f)).collect();
        let mut vars: Vec<ModelVariation> = Vec::new();
        for (i, (base, name, def, feats)) in self.variations.iter().enumerate() {
            let base = &bases[*base];
            let mut v = ModelVariation::new(&format!("{name} {}", base.name), &base.id, &def.join(" "));
            if vars.iter().any(|x| x.id == v.id) {
                continue;
            }
            v.evidence.push(evidence(i as u32));
            for f in feats {
                if let Some(feat) = features.get(*f) {
                    v.feature_ids.insert(feat.id.clone());
                    b.edge(
                        Edge::new(EdgeKind::VariationFeature, v.id.clone(), feat.id.clone())
                            .with_weight(1 + *f as u32)
                            .with_evidence(vec![evidence(100 + *f as u32)]),
                    );
                }
            }
            vars.push(v);
        }
        let mut libs: Vec<Library> = Vec::new();
        for (i, (kw, summary, supported)) in self.libraries.iter().enumerate() {
            let mut l = Library::new(&format!("lib-{}", (b'a' + i as u8) as char));
            l.keywords = kw.iter().map(|s| s.to_string()).collect();
            l.summary = summary.join(" ");
            l.version = format!("1.{i}.0");
            l.ai_related = i % 2 == 0;
            l.ai_score = if l.ai_related { 1.0 } else { 0.25 };
            l.ai_basis = if l.ai_related { AiBasis::Tag } else { AiBasis::Heuristic };
            l.evidence.push(evidence(200 + i as u32));
            for s in supported {
                if let Some(v) = vars.get(*s) {
                    l.supported_variation_ids.insert(v.id.clone());
                }
            }
            libs.push(l);
        }
        for (li, n) in &self.cves {
            let lib = &mut libs[*li];
            let id = modelselect::graph::EntityId::from(format!("GHSA-{n:04}").as_str());
            lib.cve_ids.insert(id.clone());
            b.push(CveRecord { id, library_id: lib.id.clone(), affected_version_range: format!("<{}", lib.version) });
        }
        for (i, (stars, deps)) in self.repos.iter().enumerate() {
            let url = format!("https://github.com/ex/r{i}");
            let created = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
            b.push(Repository {
                id: Repository::id_for(&url),
                name: format!("r{i}"),
                url,
                description: String::new(),
                stars: *stars,
                forks: stars / 3,
                size_kb: 10,
                language: "Python".into(),
                contributors: 1 + stars % 7,
                created_at: created,
                updated_at: created,
                topics: vec![],
                categories: vec![],
                dependency_names: deps.iter().map(|d| libs[*d].distribution_name.clone()).collect(),
            });
            if let Some(l) = deps.first() {
                libs[*l].popularity = Some(Popularity { stars: *stars, forks: stars / 3 });
            }
        }
        for (vi, li, ai, si, count) in &self.quality {
            let (Some(v), Some(l)) = (vars.get(*vi), libs.get(*li)) else { continue };
            let attr = ATTRS[*ai];
            b.push(QualityAggregate {
                id: QualityAggregate::id_for(&v.id, &l.id, attr),
                variation_id: v.id.clone(),
                library_id: l.id.clone(),
                attribute: attr.to_string(),
                score: SCORES[*si],
                review_count: *count,
                evidence: vec![evidence(300 + *count as u32)],
            });
        }
        for x in bases {
            b.push(x);
        }
        for x in features {
            b.push(x);
        }
        for x in vars {
            b.push(x);
        }
        for x in libs {
            b.push(x);
        }
        b
    }

    pub fn graph(&self) -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        g.upsert(&self.batch());
        g
    }
}
