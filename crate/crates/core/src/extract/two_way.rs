use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::graph::{EdgeKind, EntityId, KnowledgeGraph};

/// Library ↔ variation lookup in both directions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TwoWayIndex {
    pub library_to_variations: BTreeMap<EntityId, BTreeSet<EntityId>>,
    pub variation_to_libraries: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

#[derive(Serialize)]
struct ExportRecord<'a> {
    library: &'a str,
    variations: Vec<&'a str>,
}

impl TwoWayIndex {
    pub fn is_transpose(&self) -> bool {
        let mut t: BTreeMap<EntityId, BTreeSet<EntityId>> =
            self.variation_to_libraries.keys().map(|k| (k.clone(), BTreeSet::new())).collect();
        for (l, vs) in &self.library_to_variations {
            for v in vs {
                t.entry(v.clone()).or_default().insert(l.clone());
            }
        }
        t == self.variation_to_libraries
    }

    /// `two_way_index.jsonl`: one `{library, variations}` record per library,
    /// by name, sorted.
    pub fn to_jsonl(&self, graph: &KnowledgeGraph) -> String {
        let mut recs: Vec<ExportRecord> = self
            .library_to_variations
            .iter()
            .filter_map(|(l, vs)| {
                let lib = graph.library(l)?;
                let mut variations: Vec<&str> =
                    vs.iter().filter_map(|v| graph.variation(v)).map(|v| v.name.as_str()).collect();
                variations.sort();
                Some(ExportRecord { library: &lib.distribution_name, variations })
            })
            .collect();
        recs.sort_by(|a, b| a.library.cmp(b.library));
        recs.iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect()
    }
}

/// Every library and variation of the graph with its library–variation edges.
pub fn build_two_way_index(graph: &KnowledgeGraph) -> TwoWayIndex {
    let t = graph.tables();
    let mut idx = TwoWayIndex {
        library_to_variations: t.libraries.keys().map(|k| (k.clone(), BTreeSet::new())).collect(),
        variation_to_libraries: t.variations.keys().map(|k| (k.clone(), BTreeSet::new())).collect(),
    };
    for k in t.edges.keys().filter(|k| k.kind == EdgeKind::LibraryVariation) {
        idx.library_to_variations.entry(k.from.clone()).or_default().insert(k.to.clone());
        idx.variation_to_libraries.entry(k.to.clone()).or_default().insert(k.from.clone());
    }
    idx
}
