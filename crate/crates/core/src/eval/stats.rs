use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::graph::{EntityId, KnowledgeGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub repositories: usize,
    pub libraries: usize,
    pub ai_libraries: usize,
    pub base_models: usize,
    pub variations: usize,
    pub features: usize,
    pub quality_aggregates: usize,
    pub cves: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub totals: Totals,
    /// Base model name and the number of libraries supporting at least one
    /// of its variations.
    pub base_support: Vec<(String, usize)>,
    pub variations_per_base: Vec<(String, usize)>,
    pub models_per_library: Vec<(String, usize)>,
}

fn ranked(m: BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = m.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

pub fn corpus_stats(graph: &KnowledgeGraph) -> CorpusStats {
    let t = graph.tables();
    let totals = Totals {
        repositories: t.repositories.len(),
        libraries: t.libraries.len(),
        ai_libraries: t.libraries.values().filter(|l| l.ai_related).count(),
        base_models: t.base_models.len(),
        variations: t.variations.len(),
        features: t.features.len(),
        quality_aggregates: t.quality.len(),
        cves: t.cves.len(),
        edges: t.edges.len(),
    };
    let base_name = |id: &EntityId| t.base_models.get(id).map(|b| b.name.clone()).unwrap_or_else(|| id.to_string());
    let mut supporters: BTreeMap<String, BTreeSet<&EntityId>> =
        t.base_models.values().map(|b| (b.name.clone(), BTreeSet::new())).collect();
    let mut per_base: BTreeMap<String, usize> = t.base_models.values().map(|b| (b.name.clone(), 0)).collect();
    for v in t.variations.values() {
        *per_base.entry(base_name(&v.base_id)).or_default() += 1;
    }
    let mut per_lib = BTreeMap::new();
    for l in t.libraries.values() {
        per_lib.insert(l.distribution_name.clone(), l.supported_variation_ids.len());
        for vid in &l.supported_variation_ids {
            if let Some(v) = t.variations.get(vid) {
                supporters.entry(base_name(&v.base_id)).or_default().insert(&l.id);
            }
        }
    }
    CorpusStats {
        totals,
        base_support: ranked(supporters.into_iter().map(|(k, s)| (k, s.len())).collect()),
        variations_per_base: ranked(per_base),
        models_per_library: ranked(per_lib),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::regression_graph;

    #[test]
    fn regression_fixture() {
        let s = corpus_stats(&regression_graph());
        assert_eq!(s.totals.libraries, 1);
        assert_eq!(s.totals.variations, 2);
        assert_eq!(s.models_per_library, vec![("scikit-learn".to_string(), 2)]);
        assert_eq!(s.base_support[0].1, 1);
        assert_eq!(s.variations_per_base.iter().map(|x| x.1).sum::<usize>(), 2);
    }
}
