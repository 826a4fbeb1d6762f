//! Evidence-driven AI model and library recommendation.
//!
//! The crate is organized around the knowledge graph in [`graph`]. Four
//! ingestion pipelines feed it:
//!
//! 1. [`repo`] crawls repository snapshots and extracts imported libraries,
//! 2. [`library`] enriches those libraries with registry metadata,
//!    vulnerabilities and documentation pages,
//! 3. [`extract`] mines documentation for model variations and features,
//! 4. [`quality`] maps community review sentiment onto quality attributes.
//!
//! [`inference`] answers intent queries against the graph, [`eval`] computes
//! coverage/overlap/precision-recall reports, and [`api`] plus the
//! `modelselect` binary expose everything over HTTP and the command line.

pub mod api;
pub mod config;
pub mod error;
pub mod eval;
pub mod extract;
pub mod fixtures;
pub mod graph;
pub mod http;
pub mod inference;
pub mod library;
pub mod pipeline;
pub mod provider;
pub mod quality;
pub mod repo;
pub mod text;

pub use error::{Error, Result};
pub use graph::{GraphStore, KnowledgeGraph};
