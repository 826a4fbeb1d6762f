use std::sync::{Arc, Mutex, RwLock};

use super::types::Batch;
use super::{ChangeSummary, KnowledgeGraph};

/// Shared graph handle: many concurrent readers, one writer at a time.
///
/// Readers take an immutable snapshot (`Arc`) and never observe a partially
/// applied batch; a write clones the current graph, applies the batch and
/// swaps the new graph in.
#[derive(Debug, Default)]
pub struct GraphStore {
    current: RwLock<Arc<KnowledgeGraph>>,
    writer: Mutex<()>,
}

impl GraphStore {
    pub fn new(graph: KnowledgeGraph) -> Self {
        GraphStore {
            current: RwLock::new(Arc::new(graph)),
            writer: Mutex::new(()),
        }
    }

    pub fn snapshot(&self) -> Arc<KnowledgeGraph> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn apply(&self, batch: &Batch) -> ChangeSummary {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut next = (*self.snapshot()).clone();
        let summary = next.upsert(batch);
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        summary
    }

    pub fn replace(&self, graph: KnowledgeGraph) {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(graph);
    }
}
