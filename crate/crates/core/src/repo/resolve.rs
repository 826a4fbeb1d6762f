use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::RwLock;

use serde::Serialize;

use crate::config::ConfigDir;
use crate::error::Result;
use crate::graph::normalize_distribution_name;
use crate::http::HttpError;

/// Answers whether a registry has a distribution of the given name.
pub trait RegistryLookup: Sync {
    fn exists(&self, distribution_name: &str) -> Result<bool, HttpError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "name", rename_all = "snake_case")]
pub enum Resolution {
    Distribution(String),
    Stdlib,
    Unresolved,
}

impl Resolution {
    pub fn distribution(&self) -> Option<&str> {
        match self {
            Resolution::Distribution(d) => Some(d),
            _ => None,
        }
    }
}

/// Bundled lookup tables used by [`Resolver`].
#[derive(Debug, Clone, Default)]
pub struct ImportResolverTables {
    pub mapping: BTreeMap<String, String>,
    pub stdlib: BTreeSet<String>,
    pub known: BTreeSet<String>,
}

impl ImportResolverTables {
    pub fn load(cfg: &ConfigDir) -> Result<Self> {
        Ok(ImportResolverTables {
            mapping: cfg
                .tsv("import_to_dist.map", 2)?
                .into_iter()
                .map(|r| (r[0].clone(), normalize_distribution_name(&r[1])))
                .collect(),
            stdlib: cfg.lines("python_stdlib.txt")?.into_iter().collect(),
            known: cfg
                .lines("known_distributions.txt")?
                .iter()
                .map(|n| normalize_distribution_name(n))
                .collect(),
        })
    }
}

/// Maps import roots to registry distributions.
///
/// Order: bundled mapping table, standard-library check, then identity when
/// the registry confirms the name. Without a reachable registry the bundled
/// known-distribution list stands in for it. Answers are cached.
pub struct Resolver<'a> {
    tables: &'a ImportResolverTables,
    registry: Option<&'a dyn RegistryLookup>,
    cache: RwLock<HashMap<String, Resolution>>,
}

impl<'a> Resolver<'a> {
    pub fn new(tables: &'a ImportResolverTables, registry: Option<&'a dyn RegistryLookup>) -> Self {
        Resolver {
            tables,
            registry,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn resolve(&self, import_root: &str) -> Resolution {
        if let Some(hit) = self.cache.read().unwrap_or_else(|e| e.into_inner()).get(import_root) {
            return hit.clone();
        }
        let r = self.resolve_uncached(import_root);
        self.cache
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(import_root.to_string(), r.clone());
        r
    }

    fn resolve_uncached(&self, root: &str) -> Resolution {
        if let Some(d) = self.tables.mapping.get(root) {
            return Resolution::Distribution(d.clone());
        }
        if self.tables.stdlib.contains(root) {
            return Resolution::Stdlib;
        }
        let name = normalize_distribution_name(root);
        let confirmed = match self.registry.map(|r| r.exists(&name)) {
            Some(Ok(found)) => found,
            Some(Err(e)) => {
                tracing::debug!(%root, error = %e, "registry unavailable, using bundled list");
                self.tables.known.contains(&name)
            }
            None => self.tables.known.contains(&name),
        };
        if confirmed {
            Resolution::Distribution(name)
        } else {
            Resolution::Unresolved
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Fake {
        names: &'static [&'static str],
        calls: AtomicUsize,
        down: bool,
    }

    impl RegistryLookup for Fake {
        fn exists(&self, name: &str) -> Result<bool, HttpError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.down {
                return Err(HttpError::Transport { url: name.into(), message: "down".into() });
            }
            Ok(self.names.contains(&name))
        }
    }

    fn tables() -> ImportResolverTables {
        ImportResolverTables::load(&ConfigDir::bundled()).unwrap()
    }

    #[test]
    fn mapping_identity_and_unresolved() {
        let t = tables();
        let reg = Fake { names: &["torch", "huggingface-hub"], calls: AtomicUsize::new(0), down: false };
        let r = Resolver::new(&t, Some(&reg));
        assert_eq!(r.resolve("sklearn"), Resolution::Distribution("scikit-learn".into()));
        assert_eq!(r.resolve("cv2"), Resolution::Distribution("opencv-python".into()));
        assert_eq!(r.resolve("torch"), Resolution::Distribution("torch".into()));
        assert_eq!(r.resolve("os"), Resolution::Stdlib);
        assert_eq!(r.resolve("notapkg"), Resolution::Unresolved);
        r.resolve("torch");
        assert_eq!(reg.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn registry_down_falls_back_to_known_list() {
        let t = tables();
        let reg = Fake { names: &[], calls: AtomicUsize::new(0), down: true };
        let r = Resolver::new(&t, Some(&reg));
        assert_eq!(r.resolve("numpy"), Resolution::Distribution("numpy".into()));
        assert_eq!(r.resolve("notapkg"), Resolution::Unresolved);
    }
}
