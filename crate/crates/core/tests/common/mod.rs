#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use std::fs;
use std::path::{Path, PathBuf};

use modelselect::config::Resources;
use modelselect::graph::snapshot;
use modelselect::pipeline::{run_corpus, CorpusConfig, HttpMode, Runner};
use modelselect::KnowledgeGraph;

pub const BLESS_ENV: &str = "MODELSELECT_BLESS";

pub fn minicorpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus")
}

pub fn golden_dir() -> PathBuf {
    minicorpus().join("golden")
}

pub fn corpus() -> CorpusConfig {
    CorpusConfig::load(&minicorpus().join("corpus.toml")).expect("corpus.toml loads")
}

pub fn offline_runner(corpus: &CorpusConfig) -> Runner {
    Runner::for_corpus(corpus, Resources::bundled(), HttpMode::Offline)
}

/// All four pipelines over the mini corpus, offline.
pub fn run_minicorpus() -> KnowledgeGraph {
    let c = corpus();
    run_corpus(&c, &offline_runner(&c)).expect("minicorpus runs").0
}

pub fn golden_graph() -> KnowledgeGraph {
    snapshot::read(&golden_dir()).expect("golden snapshot reads")
}

/// Files of a snapshot directory, sorted by name.
pub fn snapshot_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

/// Names of files whose bytes differ, plus files present on one side only.
pub fn diff_dirs(a: &Path, b: &Path) -> Vec<String> {
    let fa = snapshot_files(a);
    let fb = snapshot_files(b);
    let mut names: Vec<&String> = fa.iter().chain(&fb).map(|(n, _)| n).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| fa.iter().find(|(x, _)| x == *n).map(|(_, b)| b) != fb.iter().find(|(x, _)| x == *n).map(|(_, b)| b))
        .cloned()
        .collect()
}

pub fn bless_requested() -> bool {
    std::env::var(BLESS_ENV).is_ok_and(|v| v == "1")
}
