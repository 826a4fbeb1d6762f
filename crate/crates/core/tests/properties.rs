mod common;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use common::gen::{graph_spec, ATTRS, WORDS};
use modelselect::config::{ConfigDir, Resources};
use modelselect::eval::{coverage_at_k, prf1, CaseStudy, NameMatcher, Target};
use modelselect::extract::{build_two_way_index, chunk_page, cluster_variations, extract_noun_phrases, BaseLexicon};
use modelselect::graph::{EntityId, IndexedDoc};
use modelselect::inference::{recommend, IntentQuery, RankingContext};
use modelselect::library::{classify_ai_related, AiLexicon, RegistryMetadata};
use modelselect::provider::{fuse, label, Backend, FusePolicy, HeuristicBackend, HeuristicLexicon, LabelTask, ProviderError};
use modelselect::quality::{aggregate_quality, classify_sentences, AttributeSet, Review, WeightedMean};
use modelselect::repo::imports::scan_imports;
use modelselect::repo::{filter_repositories, FilterPolicy, RepoMetadata};
use modelselect::text::normalize_phrase;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, rng_seed: RngSeed::Fixed(0x6d73), ..ProptestConfig::default() }
}

fn ctx() -> RankingContext {
    RankingContext::from_resources(&Resources::bundled())
}

fn intent() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(WORDS), 1..=4).prop_map(|w| w.join(" "))
}

fn weights() -> impl Strategy<Value = BTreeMap<String, f64>> {
    proptest::collection::btree_map(proptest::sample::select(ATTRS).prop_map(String::from), 0u8..4, 0..=3)
        .prop_map(|m| m.into_iter().map(|(a, w)| (a, f64::from(w))).collect())
}

fn ids(r: &[modelselect::inference::ScoredCandidate]) -> Vec<(EntityId, EntityId)> {
    r.iter().map(|c| (c.variation_id.clone(), c.library_id.clone())).collect()
}

// knowledge graph ----------------------------------------------------------

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn subgraph_grows_with_depth(spec in graph_spec(true), pick in any::<prop::sample::Index>()) {
        let g = spec.graph();
        let all: Vec<EntityId> = g.tables().entities().iter().map(|e| e.id().clone()).collect();
        let root = pick.get(&all);
        let zero = g.get_subgraph(root, 0).unwrap().node_ids();
        prop_assert_eq!(zero, BTreeSet::from([root.clone()]));
        let mut prev = BTreeSet::new();
        for d in 0..=6 {
            let nodes = g.get_subgraph(root, d).unwrap().node_ids();
            prop_assert!(prev.is_subset(&nodes), "depth {} lost nodes", d);
            prev = nodes;
        }
    }

    #[test]
    fn index_holds_every_named_entity(spec in graph_spec(true)) {
        let g = spec.graph();
        let mut expected = BTreeSet::new();
        for e in g.tables().entities() {
            if let Some(doc) = IndexedDoc::from_entity(&e) {
                prop_assert!(g.index().find_by_name(&doc.name).contains(e.id()), "{} not found by {:?}", e.id(), doc.name);
                expected.insert(e.id().clone());
            }
        }
        let indexed: BTreeSet<EntityId> = g.index().docs().keys().cloned().collect();
        prop_assert_eq!(indexed, expected);
    }

    #[test]
    fn two_way_index_is_a_transpose(spec in graph_spec(false)) {
        let idx = build_two_way_index(&spec.graph());
        prop_assert!(idx.is_transpose());
    }
}

// inference ----------------------------------------------------------------

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn top_k_is_a_prefix_of_top_k_plus_one(spec in graph_spec(false), text in intent(), k in 1usize..8, w in weights()) {
        let g = spec.graph();
        let c = ctx();
        let mut q = IntentQuery::new(&text, k);
        q.quality_weights = w;
        let Ok(short) = recommend(&g, &q, &c) else { return Ok(()) };
        q.k = k + 1;
        let long = recommend(&g, &q, &c).unwrap();
        prop_assert!(long.results.len() <= k + 1);
        prop_assert_eq!(&long.results[..short.results.len()], &short.results[..]);
    }

    #[test]
    fn scaling_weights_keeps_the_order(spec in graph_spec(false), text in intent(), w in weights(), exp in -2i32..=3) {
        let g = spec.graph();
        let c = ctx();
        let mut q = IntentQuery::new(&text, 8);
        q.quality_weights = w.clone();
        let Ok(base) = recommend(&g, &q, &c) else { return Ok(()) };
        // Powers of two scale exactly, so the bonus is bit-identical.
        let s = 2f64.powi(exp);
        q.quality_weights = w.iter().map(|(a, x)| (a.clone(), x * s)).collect();
        let scaled = recommend(&g, &q, &c).unwrap();
        prop_assert_eq!(ids(&base.results), ids(&scaled.results));
    }

    #[test]
    fn zero_weights_rank_by_relevance(spec in graph_spec(false), text in intent()) {
        let g = spec.graph();
        let c = ctx();
        let mut q = IntentQuery::new(&text, 8);
        let Ok(plain) = recommend(&g, &q, &c) else { return Ok(()) };
        q.quality_weights = ATTRS.iter().map(|a| (a.to_string(), 0.0)).collect();
        let zeroed = recommend(&g, &q, &c).unwrap();
        prop_assert_eq!(&plain.results, &zeroed.results);
        for r in &plain.results {
            prop_assert_eq!(r.final_score, r.relevance);
        }
    }

    #[test]
    fn recommend_is_deterministic(spec in graph_spec(false), text in intent(), w in weights()) {
        let g = spec.graph();
        let c = ctx();
        let mut q = IntentQuery::new(&text, 5);
        q.quality_weights = w;
        let a = recommend(&g, &q, &c).map(|r| serde_json::to_string(&r).unwrap()).ok();
        let b = recommend(&g.clone(), &q, &c).map(|r| serde_json::to_string(&r).unwrap()).ok();
        prop_assert_eq!(a, b);
    }
}

// repo ingest --------------------------------------------------------------

fn repo() -> impl Strategy<Value = modelselect::graph::Repository> {
    (0u64..1000, 0u64..200, 0u64..40, 0u32..60, 1u64..5000, "[a-z]{3,8}").prop_map(|(stars, forks, contributors, age, size, name)| {
        RepoMetadata {
            name: name.clone(),
            url: format!("https://github.com/org/{name}"),
            description: String::new(),
            stars,
            forks,
            size_kb: size,
            language: "Python".into(),
            contributors,
            created_at: Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(),
            updated_at: Utc.with_ymd_and_hms(2025, 6, 1, 0, 0, 0).unwrap() - chrono::Months::new(age),
            topics: vec![],
        }
        .into_repository()
    })
}

fn policy() -> FilterPolicy {
    FilterPolicy::new(Utc.with_ymd_and_hms(2025, 6, 30, 0, 0, 0).unwrap())
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn filter_is_a_permutation_invariant_subset(repos in proptest::collection::vec(repo(), 1..20).prop_shuffle(), seed in any::<u64>()) {
        let kept = filter_repositories(&repos, &policy()).unwrap();
        for r in &kept {
            prop_assert!(repos.contains(r));
        }
        let mut shuffled = repos.clone();
        shuffled.rotate_left((seed as usize) % repos.len());
        shuffled.reverse();
        let again = filter_repositories(&shuffled, &policy()).unwrap();
        let a: BTreeSet<_> = kept.iter().map(|r| r.id.clone()).collect();
        let b: BTreeSet<_> = again.iter().map(|r| r.id.clone()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn stricter_filter_keeps_fewer(repos in proptest::collection::vec(repo(), 1..20)) {
        let mut p = policy();
        let mut prev: Option<BTreeSet<EntityId>> = None;
        for m in 1..=3 {
            p.min_fields_at_median = m;
            let kept: BTreeSet<EntityId> = filter_repositories(&repos, &p).unwrap().into_iter().map(|r| r.id).collect();
            if let Some(prev) = &prev {
                prop_assert!(kept.is_subset(prev), "min_fields_at_median {} grew the kept set", m);
            }
            prev = Some(kept);
        }
    }
}

fn python_line() -> impl Strategy<Value = String> {
    let module = prop_oneof![Just("numpy"), Just("pandas"), Just("sklearn.linear_model"), Just("torch.nn"), Just("os.path")];
    prop_oneof![
        module.clone().prop_map(|m| format!("import {m}")),
        module.clone().prop_map(|m| format!("import {m} as alias")),
        module.clone().prop_map(|m| format!("from {m} import thing")),
        module.prop_map(|m| format!("    import {m}  # nested")),
        Just("from . import local".to_string()),
        Just("# import commented".to_string()),
        Just("x = compute(1, 2)".to_string()),
        Just("\"\"\"".to_string()),
        Just(String::new()),
    ]
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn import_hits_point_at_their_line(lines in proptest::collection::vec(python_line(), 0..30)) {
        let text = lines.join("\n");
        let hits = scan_imports(&text);
        prop_assert_eq!(&hits, &scan_imports(&text));
        let source: Vec<&str> = text.lines().collect();
        for h in hits {
            prop_assert!(h.line >= 1);
            prop_assert!(source[h.line - 1].contains(&h.root), "line {} lacks {}", h.line, h.root);
        }
    }
}

// library ingest -----------------------------------------------------------

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn ai_score_is_bounded_and_monotone(words in proptest::collection::vec(proptest::sample::select(WORDS), 0..12), pick in any::<prop::sample::Index>()) {
        let lex = AiLexicon::load(&ConfigDir::bundled()).unwrap();
        let meta = |summary: String, classifiers: Vec<String>| RegistryMetadata {
            distribution_name: "x".into(),
            summary,
            classifiers,
            version: "1".into(),
            ..Default::default()
        };
        let summary = words.join(" ");
        let base = classify_ai_related(&meta(summary.clone(), vec![]), &lex, None);
        prop_assert!((0.0..=1.0).contains(&base.score));
        let strong = pick.get(&lex.strong_terms);
        let more = classify_ai_related(&meta(format!("{summary} {strong}"), vec![]), &lex, None);
        prop_assert!(more.score >= base.score);
        let marker = pick.get(&lex.classifier_markers);
        let tagged = classify_ai_related(&meta(summary, vec![format!("Topic :: {marker}")]), &lex, None);
        prop_assert_eq!(tagged.score, 1.0);
    }
}

// extraction provider ------------------------------------------------------

struct Scripted(Vec<String>);

impl Backend for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn answer(&self, _task: &LabelTask, vote: usize) -> Result<String, ProviderError> {
        Ok(self.0[vote].clone())
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn label_confidence_is_the_answer_frequency(
        answers in proptest::collection::vec(prop_oneof![Just("Model"), Just("Feature"), Just("Neither")], 1..=3)
            .prop_flat_map(|a| (0usize..4).prop_flat_map(move |n| proptest::collection::vec(proptest::sample::select(a.clone()), 2 * n + 1)))
    ) {
        let votes = answers.len();
        let backend = Scripted(answers.iter().map(|s| s.to_string()).collect());
        let r = label(&LabelTask::phrase_label("ctx", "ridge regression"), &backend, votes).unwrap();
        prop_assert_eq!(r.votes.len(), votes);
        let n = r.votes.iter().filter(|v| **v == r.answer).count();
        prop_assert_eq!(r.confidence, n as f64 / votes as f64);
        for a in &r.votes {
            prop_assert!(r.votes.iter().filter(|v| *v == a).count() <= n);
        }
    }

    #[test]
    fn union_covers_and_intersection_is_covered(
        sets in proptest::collection::vec(proptest::collection::btree_set(0u8..12, 0..8), 2..5)
    ) {
        let union = fuse(&sets, FusePolicy::Union).unwrap();
        let inter = fuse(&sets, FusePolicy::Intersection).unwrap();
        let major = fuse(&sets, FusePolicy::Majority).unwrap();
        for s in &sets {
            prop_assert!(s.is_subset(&union));
            prop_assert!(inter.is_subset(s));
        }
        prop_assert!(inter.is_subset(&major) && major.is_subset(&union));
    }
}

#[test]
fn label_rejects_even_votes() {
    let backend = Scripted(vec!["Model".into(); 4]);
    assert!(label(&LabelTask::phrase_label("ctx", "x"), &backend, 4).is_err());
    assert!(label(&LabelTask::phrase_label("ctx", "x"), &backend, 0).is_err());
}

// model extraction ---------------------------------------------------------

fn paragraph() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        prop_oneof![
            proptest::sample::select(WORDS).prop_map(String::from),
            Just("the".to_string()),
            Just("a".to_string()),
            Just("uses".to_string()),
            Just("is".to_string()),
            Just("effective.".to_string()),
            Just("Ridge".to_string()),
        ],
        0..25,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn chunks_and_phrases_are_well_formed(pars in proptest::collection::vec(paragraph(), 0..6), min in 1usize..40) {
        let page = pars.join("\n\n");
        let lib = EntityId::from("lib:x");
        let chunks = chunk_page(&lib, "https://docs.example.org/", &page, min);
        let positions: BTreeSet<usize> = chunks.iter().map(|c| c.position).collect();
        prop_assert_eq!(positions.len(), chunks.len());
        for c in &chunks {
            prop_assert!(!c.text.is_empty() && c.text.chars().count() >= min);
            for p in extract_noun_phrases(c, 8) {
                let (s, e) = p.span;
                prop_assert!(s < e && e <= c.text.len() && c.text.is_char_boundary(s) && c.text.is_char_boundary(e));
                let n = p.phrase.split_whitespace().count();
                prop_assert!((1..=8).contains(&n), "phrase {:?} has {} tokens", p.phrase, n);
                prop_assert_eq!(&p.phrase, &normalize_phrase(&c.text[s..e]));
            }
        }
    }

    #[test]
    fn clustering_is_total_and_stable(phrases in proptest::collection::vec(intent(), 0..10)) {
        let lex = BaseLexicon::load(&ConfigDir::bundled()).unwrap();
        let a = cluster_variations(phrases.iter().map(String::as_str), &lex);
        let keys: BTreeSet<&String> = phrases.iter().collect();
        prop_assert_eq!(a.keys().collect::<BTreeSet<_>>(), keys);
        let b = cluster_variations(phrases.iter().rev().map(String::as_str), &lex);
        prop_assert_eq!(a, b);
    }
}

// quality ------------------------------------------------------------------

fn review_body() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        prop_oneof![
            Just("Training was painfully slow on CPU."),
            Just("The API is intuitive and the docs are great."),
            Just("It works."),
            Just("Memory use is terrible for big inputs."),
            Just("Results were stable and reliable across runs."),
            Just("Installation failed twice."),
        ],
        0..6,
    )
    .prop_map(|s| s.join(" "))
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn sentiment_records_quote_the_review(body in review_body()) {
        let backend = HeuristicBackend::new(HeuristicLexicon::load(&ConfigDir::bundled()).unwrap());
        let attrs = AttributeSet::load(&ConfigDir::bundled()).unwrap();
        let review = Review {
            id: "r1".into(),
            source: "forum".into(),
            url: "https://forum.example.org/t/1".into(),
            body: body.clone(),
            created_at: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
        };
        let at = Utc.with_ymd_and_hms(2025, 6, 30, 0, 0, 0).unwrap();
        let records = classify_sentences(&review, &backend, 3, &attrs, at).unwrap();
        for r in &records {
            prop_assert!(body.contains(&r.evidence.fragment));
            prop_assert!(attrs.contains(&r.attribute));
            prop_assert!(r.polarity == 1 || r.polarity == -1);
        }
        let v = EntityId::from("var:x");
        let l = EntityId::from("lib:x");
        let mut by_attr: BTreeMap<&str, Vec<_>> = BTreeMap::new();
        for r in &records {
            by_attr.entry(r.attribute.as_str()).or_default().push(r.clone());
        }
        for (attr, rs) in by_attr {
            let agg = aggregate_quality(&v, &l, attr, &rs, &WeightedMean).unwrap();
            prop_assert_eq!(agg.review_count, rs.len() as u64);
        }
    }
}

// evaluation ---------------------------------------------------------------

const NAMES: &[&str] = &["ridge", "lasso", "svm", "random forest", "xgboost", "bert", "u-net"];

fn names(min: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(proptest::sample::select(NAMES).prop_map(String::from), min..5)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn precision_and_recall_swap(a in names(1), b in names(1)) {
        let exact = NameMatcher::new(&[], 1.0);
        let ab = prf1(&a, &b, &exact).unwrap();
        let ba = prf1(&b, &a, &exact).unwrap();
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
    }

    #[test]
    fn coverage_ignores_case_order(rows in proptest::collection::vec((names(1), names(0)), 1..10), k in 1usize..6) {
        let matcher = NameMatcher::default();
        let cases: Vec<CaseStudy> = rows
            .iter()
            .enumerate()
            .map(|(i, (gold, _))| CaseStudy {
                case_id: format!("c{i:02}"),
                domain: "d".into(),
                rationale: "r".into(),
                gold_models: gold.clone(),
                gold_libraries: vec![],
                source_ref: String::new(),
            })
            .collect();
        let system: BTreeMap<String, Vec<String>> =
            rows.iter().enumerate().map(|(i, (_, recs))| (format!("c{i:02}"), recs.clone())).collect();
        let fwd = coverage_at_k(&system, &cases, Target::Models, k, &matcher).unwrap();
        let rev: Vec<CaseStudy> = cases.iter().rev().cloned().collect();
        let back = coverage_at_k(&system, &rev, Target::Models, k, &matcher).unwrap();
        prop_assert_eq!(fwd.value, back.value);
        prop_assert_eq!(fwd.numerator, back.numerator);
    }
}
