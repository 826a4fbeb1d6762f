use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use modelselect::api::server::{self, ServerOptions};
use modelselect::api::{canonical_json, recommend_response, AppState, RecommendResponse};
use modelselect::config::{ConfigDir, Resources};
use modelselect::eval::{
    corpus_stats, coverage_at_k, load_cases, overlap_percent, read_jsonl, run_experiment, BaselineRecord, CorpusStats,
    ExperimentConfig, ExperimentTable, MetricReport, NameMatcher, Target,
};
use modelselect::extract::build_two_way_index;
use modelselect::graph::snapshot;
use modelselect::inference::{IntentQuery, RankingContext};
use modelselect::pipeline::{self, CorpusConfig, HttpMode, Runner};
use modelselect::KnowledgeGraph;

#[derive(Parser)]
#[command(name = "modelselect", version, about = "Recommend AI models and libraries from an evidence graph")]
struct Cli {
    /// Snapshot directory read and written by every command.
    #[arg(long, global = true, env = "MODELSELECT_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    /// Directory with resource overrides (ranking.toml, lexicons, prompts).
    #[arg(long, global = true, env = "MODELSELECT_CONFIG_DIR")]
    config_dir: Option<PathBuf>,
    /// Log more; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct CorpusArgs {
    /// corpus.toml describing the inputs.
    #[arg(long, env = "MODELSELECT_CORPUS")]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "offline")]
    http: HttpArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum HttpArg {
    Offline,
    Record,
    Live,
}

impl From<HttpArg> for HttpMode {
    fn from(h: HttpArg) -> Self {
        match h {
            HttpArg::Offline => HttpMode::Offline,
            HttpArg::Record => HttpMode::Record,
            HttpArg::Live => HttpMode::Live,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ingest repositories or libraries.
    Ingest {
        #[command(subcommand)]
        what: IngestWhat,
    },
    /// Mine model variations and features from library documentation.
    Extract {
        #[command(subcommand)]
        what: ExtractWhat,
    },
    /// Aggregate review sentiment into quality scores.
    Assess {
        #[command(subcommand)]
        what: AssessWhat,
    },
    /// Validate the snapshot and write the two-way library/variation index.
    BuildIndex,
    /// Run all four pipelines over a corpus into the data directory.
    Run {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Recommend (variation, library) pairs for an intent.
    Query(QueryArgs),
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = server::PORT_ENV, default_value_t = server::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = server::CORS_ENV)]
        cors_origin: Option<String>,
        /// Static UI assets served under /ui/.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Coverage, overlap and precision/recall reports.
    Eval(EvalArgs),
    /// Corpus statistics of the snapshot.
    Stats {
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

#[derive(Subcommand)]
enum IngestWhat {
    Repos(CorpusArgs),
    Libraries(CorpusArgs),
}

#[derive(Subcommand)]
enum ExtractWhat {
    Models(CorpusArgs),
}

#[derive(Subcommand)]
enum AssessWhat {
    Quality(CorpusArgs),
}

#[derive(Args)]
struct QueryArgs {
    intent: String,
    #[arg(short, long, value_parser = parse_k)]
    k: Option<usize>,
    /// Feature every result must have; repeatable.
    #[arg(long = "require")]
    required_features: Vec<String>,
    /// Quality weight as `attribute=weight`; repeatable.
    #[arg(long = "weight", value_parser = parse_weight)]
    quality_weights: Vec<(String, f64)>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct EvalArgs {
    /// Case studies; coverage@k of the snapshot's recommendations.
    #[arg(long)]
    cases: Option<PathBuf>,
    #[arg(long, default_value_t = 10, value_parser = parse_k)]
    k: usize,
    /// Recorded baseline recommendations; overlap per baseline system.
    #[arg(long)]
    baselines: Option<PathBuf>,
    /// Experiment config (toml) for precision/recall/F1.
    #[arg(long)]
    experiment: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn parse_weight(s: &str) -> Result<(String, f64), String> {
    let (a, w) = s.rsplit_once('=').ok_or_else(|| format!("expected attribute=weight, got {s:?}"))?;
    let w: f64 = w.trim().parse().map_err(|_| format!("weight in {s:?} is not a number"))?;
    Ok((a.trim().to_string(), w))
}

fn parse_k(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("k must be a positive integer, got {s:?}")),
    }
}

fn resources(cli: &Cli) -> anyhow::Result<Resources> {
    Ok(match &cli.config_dir {
        Some(d) => Resources::load(&ConfigDir::at(d))?,
        None => Resources::bundled(),
    })
}

fn load_graph(dir: &Path) -> anyhow::Result<KnowledgeGraph> {
    if !dir.join(snapshot::MANIFEST).is_file() {
        bail!("no snapshot in {}", dir.display());
    }
    Ok(snapshot::read(dir)?)
}

fn save_graph(graph: &KnowledgeGraph, dir: &Path) -> anyhow::Result<()> {
    let m = snapshot::write(graph, dir)?;
    eprintln!("snapshot {} written to {}", m.version, dir.display());
    Ok(())
}

fn runner(cli: &Cli, c: &CorpusArgs) -> anyhow::Result<(CorpusConfig, Runner)> {
    let corpus = CorpusConfig::load(&c.corpus)?;
    let run = Runner::for_corpus(&corpus, resources(cli)?, c.http.into());
    Ok((corpus, run))
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    emit(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn stats_table(s: &CorpusStats) -> String {
    let t = &s.totals;
    let mut out = String::new();
    for (name, n) in [
        ("repositories", t.repositories),
        ("libraries", t.libraries),
        ("ai libraries", t.ai_libraries),
        ("base models", t.base_models),
        ("variations", t.variations),
        ("features", t.features),
        ("quality aggregates", t.quality_aggregates),
        ("cves", t.cves),
        ("edges", t.edges),
    ] {
        out.push_str(&format!("{name:<20} {n:>8}\n"));
    }
    for (title, rows) in [
        ("libraries supporting each base model", &s.base_support),
        ("variations per base model", &s.variations_per_base),
        ("models per library", &s.models_per_library),
    ] {
        out.push_str(&format!("\n{title}\n"));
        for (name, n) in rows {
            out.push_str(&format!("  {name:<40} {n:>6}\n"));
        }
    }
    out
}

fn query_table(r: &RecommendResponse) -> String {
    let mut out = format!("keywords: {}\n", r.keywords.pruned.join(", "));
    out.push_str(&format!("{:>4}  {:<36} {:<20} {:<20} {:>8}  quality\n", "rank", "variation", "base", "library", "score"));
    for x in &r.results {
        let q: Vec<String> = x.quality.iter().map(|q| format!("{} {:+.2}", q.attribute, q.score)).collect();
        out.push_str(&format!(
            "{:>4}  {:<36} {:<20} {:<20} {:>8.4}  {}\n",
            x.rank,
            x.variation.name,
            x.variation.base,
            x.library.name,
            x.final_score,
            q.join("; ")
        ));
    }
    out
}

#[derive(Serialize)]
struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage: Option<MetricReport>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    overlap: BTreeMap<String, MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    experiment: Option<ExperimentTable>,
}

/// Top-k distinct variation names the snapshot recommends for each case.
fn system_recs(
    graph: &KnowledgeGraph,
    ctx: &RankingContext,
    cases: &[modelselect::eval::CaseStudy],
    k: usize,
) -> BTreeMap<String, Vec<String>> {
    cases
        .iter()
        .map(|c| {
            let mut names: Vec<String> = Vec::new();
            match modelselect::inference::recommend(graph, &IntentQuery::new(&c.rationale, k.max(1) * 4), ctx) {
                Ok(r) => {
                    for x in r.results {
                        if !names.contains(&x.variation_name) {
                            names.push(x.variation_name);
                        }
                    }
                }
                Err(e) => tracing::warn!(case = %c.case_id, error = %e, "no recommendations"),
            }
            names.truncate(k);
            (c.case_id.clone(), names)
        })
        .collect()
}

fn eval(cli: &Cli, a: &EvalArgs) -> anyhow::Result<()> {
    let res = resources(cli)?;
    let matcher = NameMatcher::new(&res.name_aliases, 0.9);
    let mut report = EvalReport { coverage: None, overlap: BTreeMap::new(), experiment: None };
    if a.cases.is_none() && a.baselines.is_none() && a.experiment.is_none() {
        bail!("nothing to evaluate: pass --cases, --baselines or --experiment");
    }
    if let Some(path) = &a.cases {
        let cases = load_cases(path)?;
        let graph = load_graph(&cli.data_dir)?;
        let ctx = RankingContext::from_resources(&res);
        let system = system_recs(&graph, &ctx, &cases, a.k);
        report.coverage = Some(coverage_at_k(&system, &cases, Target::Models, a.k, &matcher)?);
        if let Some(bp) = &a.baselines {
            let rows: Vec<BaselineRecord> = read_jsonl(bp)?;
            let mut by_system: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
            for r in rows {
                by_system.entry(r.system).or_default().insert(r.case_id, r.models);
            }
            for (name, recs) in by_system {
                report.overlap.insert(name, overlap_percent(&recs, &system, &matcher)?);
            }
        }
    } else if a.baselines.is_some() {
        bail!("--baselines needs --cases");
    }
    if let Some(path) = &a.experiment {
        let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
        let cfg: ExperimentConfig = toml::from_str(&text).with_context(|| path.display().to_string())?;
        let cfg = cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        report.experiment = Some(run_experiment(&cfg, &matcher)?);
    }
    match a.format {
        Format::Json => print_json(&report),
        Format::Table => {
            let mut text = String::new();
            if let Some(c) = &report.coverage {
                text += &(c.line() + "\n");
            }
            for (name, o) in &report.overlap {
                text += &(MetricReport { metric: format!("overlap {name}"), ..o.clone() }.line() + "\n");
            }
            if let Some(e) = &report.experiment {
                text += &e.to_text();
            }
            emit(&text)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let data = &cli.data_dir;
    match &cli.command {
        Command::Ingest { what: IngestWhat::Repos(c) } => {
            let (corpus, run) = runner(cli, c)?;
            let entries = modelselect::repo::load_snapshot_archive(&corpus.path(&corpus.repos))?;
            let stage = pipeline::stage_repos(&entries, &run)?;
            let mut g = pipeline::load_or_empty(data)?;
            g.upsert(&stage.batch());
            eprintln!("kept {} repositories, dropped {}", stage.repositories.len(), stage.dropped.len());
            save_graph(&g, data)
        }
        Command::Ingest { what: IngestWhat::Libraries(c) } => {
            let (_, run) = runner(cli, c)?;
            let mut g = load_graph(data)?;
            let names: BTreeSet<String> =
                g.tables().repositories.values().flat_map(|r| r.dependency_names.iter().cloned()).collect();
            let (records, notices) = pipeline::stage_libraries(&names, &run);
            for n in &notices {
                eprintln!("note: {n}");
            }
            g.upsert(&pipeline::library_batch(&records, run.retrieved_at));
            // Repository edges appear once their libraries exist.
            let mut repos = modelselect::graph::Batch::new();
            for r in g.tables().repositories.values() {
                repos.push(r.clone());
            }
            g.upsert(&repos);
            std::fs::create_dir_all(data)?;
            pipeline::write_pages(&data.join(pipeline::PAGES_FILE), &pipeline::pages_of(&records, run.retrieved_at))?;
            eprintln!("ingested {} libraries", records.len());
            save_graph(&g, data)
        }
        Command::Extract { what: ExtractWhat::Models(c) } => {
            let (_, run) = runner(cli, c)?;
            let mut g = load_graph(data)?;
            let pages = pipeline::read_pages(&data.join(pipeline::PAGES_FILE))?;
            let (ex, batch) = pipeline::stage_extract(&pages, &run)?;
            let s = g.upsert(&batch);
            eprintln!("mined {} libraries; {} entities inserted", ex.len(), s.inserted.entities);
            save_graph(&g, data)
        }
        Command::Assess { what: AssessWhat::Quality(c) } => {
            let (corpus, run) = runner(cli, c)?;
            let mut g = load_graph(data)?;
            let source = pipeline::review_source(&corpus, &run.http)?;
            let aggs = pipeline::stage_quality(&g, source.as_ref(), &run)?;
            let s = g.upsert(&pipeline::quality_batch(&aggs));
            eprintln!("{} quality aggregates, {} rejected", aggs.len(), s.rejected.len());
            save_graph(&g, data)
        }
        Command::BuildIndex => {
            let g = load_graph(data)?;
            let violations = g.validate();
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("{}: {}", v.entity, v.message);
                }
                bail!("{} integrity violations", violations.len());
            }
            let two_way = build_two_way_index(&g);
            std::fs::write(data.join(pipeline::TWO_WAY_FILE), two_way.to_jsonl(&g))?;
            save_graph(&g, data)
        }
        Command::Run { corpus: c } => {
            let (corpus, run) = runner(cli, c)?;
            let (g, report) = pipeline::run_corpus(&corpus, &run)?;
            eprintln!("{}", serde_json::to_string_pretty(&report)?);
            save_graph(&g, data)
        }
        Command::Query(q) => {
            let res = resources(cli)?;
            let ctx = RankingContext::from_resources(&res);
            let g = load_graph(data)?;
            let query = IntentQuery {
                text: q.intent.clone(),
                k: q.k.unwrap_or(ctx.ranking.default_k),
                required_features: q.required_features.iter().cloned().collect(),
                quality_weights: q.quality_weights.iter().cloned().collect(),
            };
            let r = recommend_response(&g, &query, &ctx)?;
            match q.format {
                Format::Json => emit(&(canonical_json(&r) + "\n")),
                Format::Table => emit(&query_table(&r)),
            }
        }
        Command::Serve { port, host, cors_origin, ui_dir } => {
            let res = resources(cli)?;
            let graph = match load_graph(data) {
                Ok(g) => Some(g),
                Err(e) => {
                    tracing::warn!(error = %e, "starting without a graph");
                    None
                }
            };
            let state = Arc::new(AppState::new(graph, RankingContext::from_resources(&res)));
            let addr: SocketAddr = format!("{host}:{port}").parse().context("listen address")?;
            let opts = ServerOptions { cors_origin: cors_origin.clone(), ui_dir: ui_dir.clone() };
            tokio::runtime::Runtime::new()?.block_on(server::serve(state, addr, opts))?;
            Ok(())
        }
        Command::Eval(a) => eval(cli, a),
        Command::Stats { format } => {
            let s = corpus_stats(&load_graph(data)?);
            match format {
                Format::Json => print_json(&s),
                Format::Table => emit(&stats_table(&s)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level)),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
