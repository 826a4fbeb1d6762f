//! Bundled configuration and lexicon files.
//!
//! Every file has a compiled-in default. A config directory may override any
//! of them by containing a file with the same name.

use std::borrow::Cow;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::extract::{BaseLexicon, ChunkingConfig};
use crate::inference::{RankingConfig, SynonymTable};
use crate::library::AiLexicon;
use crate::provider::{HeuristicLexicon, PromptSet, ProviderConfig};
use crate::quality::AttributeSet;
use crate::repo::ImportResolverTables;

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        fn bundled(name: &str) -> Option<&'static str> {
            match name {
                $($name => Some(include_str!(concat!("../resources/", $name))),)*
                _ => None,
            }
        }
        /// Names of all bundled resource files.
        pub const BUNDLED_FILES: &[&str] = &[$($name),*];
    };
}

bundled!(
    "ranking.toml",
    "stoplist.txt",
    "synonyms.tsv",
    "base_lexicon.toml",
    "ai_lexicon.toml",
    "quality_attributes.toml",
    "heuristic_lexicon.toml",
    "chunking.toml",
    "provider.toml",
    "taxonomy_terms.txt",
    "import_to_dist.map",
    "known_distributions.txt",
    "python_stdlib.txt",
    "name_aliases.tsv",
    "prompts/phrase_label.v1.txt",
    "prompts/definition.v1.txt",
    "prompts/sentiment.v1.txt",
    "prompts/quality_map.v1.txt",
);

/// Where to look for resource overrides.
#[derive(Debug, Clone, Default)]
pub struct ConfigDir {
    dir: Option<PathBuf>,
}

impl ConfigDir {
    /// Bundled defaults only.
    pub fn bundled() -> Self {
        ConfigDir { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        ConfigDir { dir: Some(dir.into()) }
    }

    pub fn path(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Raw text of a resource: the override if present, else the default.
    pub fn text(&self, name: &str) -> Result<Cow<'static, str>> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            if path.is_file() {
                return std::fs::read_to_string(&path)
                    .map(Cow::Owned)
                    .map_err(|e| Error::io(path, e));
            }
        }
        bundled(name).map(Cow::Borrowed).ok_or_else(|| Error::Config {
            name: name.to_string(),
            message: "no such resource".into(),
        })
    }

    pub fn toml<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let text = self.text(name)?;
        toml::from_str(&text).map_err(|e| Error::Config {
            name: name.to_string(),
            message: e.to_string(),
        })
    }

    /// Non-empty lines with `#` comments removed.
    pub fn lines(&self, name: &str) -> Result<Vec<String>> {
        Ok(content_lines(&self.text(name)?)
            .map(|(_, l)| l.to_string())
            .collect())
    }

    /// Tab-separated rows with exactly `columns` fields.
    pub fn tsv(&self, name: &str, columns: usize) -> Result<Vec<Vec<String>>> {
        let text = self.text(name)?;
        content_lines(&text)
            .map(|(line, l)| {
                let fields: Vec<String> = l.split('\t').map(|f| f.trim().to_string()).collect();
                if fields.len() != columns || fields.iter().any(String::is_empty) {
                    Err(Error::parse(name, line, format!("expected {columns} tab-separated fields")))
                } else {
                    Ok(fields)
                }
            })
            .collect()
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Every parsed resource, loaded once and shared by the pipelines.
#[derive(Debug, Clone)]
pub struct Resources {
    pub ranking: RankingConfig,
    pub stoplist: Vec<String>,
    pub synonyms: SynonymTable,
    pub base_lexicon: BaseLexicon,
    pub ai_lexicon: AiLexicon,
    pub attributes: AttributeSet,
    pub heuristic: HeuristicLexicon,
    pub chunking: ChunkingConfig,
    pub provider: ProviderConfig,
    pub prompts: PromptSet,
    pub taxonomy: Vec<String>,
    pub resolver: ImportResolverTables,
    pub name_aliases: Vec<(String, String)>,
}

impl Resources {
    pub fn load(cfg: &ConfigDir) -> Result<Self> {
        Ok(Resources {
            ranking: cfg.toml("ranking.toml")?,
            stoplist: cfg.lines("stoplist.txt")?,
            synonyms: SynonymTable::load(cfg)?,
            base_lexicon: BaseLexicon::load(cfg)?,
            ai_lexicon: AiLexicon::load(cfg)?,
            attributes: AttributeSet::load(cfg)?,
            heuristic: HeuristicLexicon::load(cfg)?,
            chunking: cfg.toml("chunking.toml")?,
            provider: cfg.toml("provider.toml")?,
            prompts: PromptSet::load(cfg)?,
            taxonomy: cfg.lines("taxonomy_terms.txt")?,
            resolver: ImportResolverTables::load(cfg)?,
            name_aliases: cfg
                .tsv("name_aliases.tsv", 2)?
                .into_iter()
                .map(|mut r| {
                    let canonical = r.pop().unwrap_or_default();
                    (r.pop().unwrap_or_default(), canonical)
                })
                .collect(),
        })
    }

    pub fn bundled() -> Self {
        Self::load(&ConfigDir::bundled()).expect("bundled resources parse")
    }
}
