//! `govaudit` subcommands. Each one reads and writes plain files so a run
//! can be resumed or inspected at any stage.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use govaudit_core::corpus::commoncrawl::{IndexClient, IndexConfig, DEFAULT_DATA_BASE, DEFAULT_INDEX_BASE};
use govaudit_core::corpus::ingest::{ingest_urls, read_url_list, IngestOptions};
use govaudit_core::corpus::{
    build_corpus, corpus_name_from_path, read_corpus, read_corpus_dir, read_documents, tokenizer_by_name,
    write_corpus, write_documents, Role,
};
use govaudit_core::evalkit::files::{
    read_annotations, read_differences, read_prevalence, read_queries, read_responses, write_differences,
    write_responses, write_tallies,
};
use govaudit_core::evalkit::{
    ablation_effect, control_id, prevalence_correlation, run_evaluation, tally, CodeClass, GroupBy, GroupKey, Phase,
};
use govaudit_core::leakage::{load_families, read_records, run_matrix, Comparator, MatrixOptions, ReticenceConfig, TemplateId};
use govaudit_core::model::train::{pretrain, PretrainConfig};
use govaudit_core::model::{open_generator, open_model, GenerationParams, LocalModel, ModelKind, NeuralLm, NeuralLmConfig, Vocab};
use govaudit_core::report::build_report;
use govaudit_core::unlearn::{parse_weights, run_unlearning, RunDirectory, UnlearningConfig};
use log::{info, warn};

#[derive(Debug, Parser)]
#[command(name = "govaudit", version, about = "Measure how much language models rely on a corpus of web pages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch the newest capture before a cutoff for each URL from CommonCrawl.
    Ingest(IngestArgs),
    /// Chunk ingested documents into a target or safe corpus.
    BuildCorpus(BuildCorpusArgs),
    /// Train a fresh local model on one or more corpora.
    Pretrain(PretrainArgs),
    /// Ablate a target corpus from a local model.
    Unlearn(UnlearnArgs),
    /// Answer the evaluation queries with a model.
    Evaluate(EvaluateArgs),
    /// Serve blinded responses to annotators over HTTP.
    AnnotateServe(AnnotateServeArgs),
    /// Count error codes per model or per query.
    Tally(TallyArgs),
    /// Correlate per-query differences with topic prevalence.
    Correlate(CorrelateArgs),
    /// Run the leakage probe grid.
    Probe(ProbeArgs),
    /// Build figure data, images and tables from a run directory.
    Report(ReportArgs),
    /// Serve saved pages through a local CommonCrawl-compatible index.
    MockCommoncrawl(MockArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// URL list: one URL per line, optional tab-separated topic.
    #[arg(long)]
    pub urls: PathBuf,
    /// Only captures taken before this date (YYYY-MM-DD).
    #[arg(long, default_value = "2024-04-01")]
    pub before: NaiveDate,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = DEFAULT_INDEX_BASE)]
    pub index_base: String,
    #[arg(long, default_value = DEFAULT_DATA_BASE)]
    pub data_base: String,
    #[arg(long, default_value_t = 4)]
    pub parallelism: usize,
    /// Minimum milliseconds between requests to one host.
    #[arg(long, default_value_t = 500)]
    pub host_delay_ms: u64,
    #[arg(long, default_value_t = 2)]
    pub retries: usize,
}

#[derive(Debug, Args)]
pub struct BuildCorpusArgs {
    /// An ingest directory or a documents file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub role: Role,
    #[arg(long, default_value_t = 512)]
    pub chunk_len: usize,
    #[arg(long, default_value = "words")]
    pub tokenizer: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[arg(long = "corpus", required = true)]
    pub corpora: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "tiny-lm")]
    pub model_id: String,
    #[arg(long, default_value_t = 1000)]
    pub vocab: usize,
    #[arg(long, default_value_t = 3000)]
    pub steps: usize,
    #[arg(long, default_value_t = 5e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct UnlearnArgs {
    /// Weights directory of a local model.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub safe: PathBuf,
    /// forget,mismatch,preserve
    #[arg(long, default_value = "0.25,0,1", value_parser = parse_weights)]
    pub weights: [f64; 3],
    #[arg(long, default_value_t = 2e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub kl_alarm: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Weights directory, scripted response file or model spec.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub phase: Phase,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub max_new_tokens: usize,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AnnotateServeArgs {
    /// Response files (pre and post); may be repeated.
    #[arg(long = "responses", required = true)]
    pub responses: Vec<PathBuf>,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Append-only annotation log; replayed if it exists.
    #[arg(long, default_value = "annotations.store.jsonl")]
    pub store: PathBuf,
    /// Seed for the task order (ignored when the store already has one).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Static UI bundle served at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TallyArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub by: GroupBy,
    /// Evaluation set; adds zero rows for uncoded queries and names the control.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// With `--by query`, write per-query type 2 differences here.
    #[arg(long)]
    pub diffs_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub diffs: PathBuf,
    #[arg(long)]
    pub prevalence: PathBuf,
    /// Control query id, excluded from the correlation.
    #[arg(long)]
    pub control: Option<u32>,
    /// Read the control id from an evaluation set instead.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// TOML file of model families.
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,1,5")]
    pub shots: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "a,b,c,d")]
    pub templates: Vec<TemplateId>,
    #[arg(long)]
    pub out: PathBuf,
    /// Accept values within this relative distance (e.g. 0.005).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// TOML file with a `phrases` list overriding the reticence phrases.
    #[arg(long)]
    pub reticence: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub max_attempts: usize,
    #[arg(long, default_value_t = 0)]
    pub min_interval_ms: u64,
    #[arg(long, default_value_t = 32)]
    pub max_new_tokens: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MockArgs {
    /// `index.tsv` listing the saved pages.
    #[arg(long)]
    pub pages: PathBuf,
    #[arg(long, default_value_t = 8090)]
    pub port: u16,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::BuildCorpus(a) => build(a),
        Command::Pretrain(a) => pretrain_cmd(a),
        Command::Unlearn(a) => unlearn(a),
        Command::Evaluate(a) => evaluate(a),
        Command::AnnotateServe(a) => annotate_serve(a),
        Command::Tally(a) => tally_cmd(a),
        Command::Correlate(a) => correlate(a),
        Command::Probe(a) => probe(a),
        Command::Report(a) => report(a),
        Command::MockCommoncrawl(a) => mock(a),
    }
}

/// File written by `ingest` inside its output directory.
pub const INGESTED_FILE: &str = "ingested.corpus.jsonl";

fn ingest(a: IngestArgs) -> Result<()> {
    let entries = read_url_list(&a.urls).with_context(|| format!("reading {}", a.urls.display()))?;
    if entries.is_empty() {
        bail!("{} lists no URLs", a.urls.display());
    }
    let client = IndexClient::new(IndexConfig {
        index_base: a.index_base,
        data_base: a.data_base,
        ..IndexConfig::default()
    })?;
    let opts = IngestOptions {
        parallelism: a.parallelism,
        host_delay: Duration::from_millis(a.host_delay_ms),
        retries: a.retries,
        ..IngestOptions::new(a.before)
    };
    let outcomes = ingest_urls(&client, &entries, &opts);
    std::fs::create_dir_all(&a.out)?;
    let mut report = String::from("url\tstatus\tcrawl\ttimestamp\terror\n");
    let mut docs = Vec::new();
    for o in outcomes {
        let (crawl, ts) = o
            .capture
            .as_ref()
            .map_or((String::new(), String::new()), |c| (c.crawl_id.clone(), c.timestamp.clone()));
        match o.result {
            Ok(doc) => {
                report.push_str(&format!("{}\tok\t{crawl}\t{ts}\t\n", o.entry.url));
                docs.push(doc);
            }
            Err(e) => {
                warn!("{}: {e}", o.entry.url);
                report.push_str(&format!("{}\tfailed\t{crawl}\t{ts}\t{e}\n", o.entry.url));
            }
        }
    }
    std::fs::write(a.out.join("ingest_report.tsv"), report)?;
    if docs.is_empty() {
        bail!("no URL could be fetched; see {}", a.out.join("ingest_report.tsv").display());
    }
    write_documents(&a.out.join(INGESTED_FILE), &docs)?;
    info!("ingested {} of {} URLs into {}", docs.len(), entries.len(), a.out.display());
    Ok(())
}

fn build(a: BuildCorpusArgs) -> Result<()> {
    let docs = if a.input.is_dir() {
        read_corpus_dir(&a.input)?
    } else {
        read_documents(&a.input)?
    };
    let tokenizer = tokenizer_by_name(&a.tokenizer)?;
    let corpus = build_corpus(corpus_name_from_path(&a.out), docs, a.role, a.chunk_len, tokenizer.as_ref())?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_corpus(&a.out, &corpus)?;
    info!(
        "{:?} corpus {}: {} documents, {} chunks",
        a.role,
        a.out.display(),
        corpus.documents.len(),
        corpus.chunks.len()
    );
    Ok(())
}

fn pretrain_cmd(a: PretrainArgs) -> Result<()> {
    let mut texts = Vec::new();
    for p in &a.corpora {
        let c = read_corpus(p).with_context(|| format!("reading {}", p.display()))?;
        texts.extend(c.chunks.into_iter().map(|ch| ch.text));
    }
    let vocab = Vocab::build(texts.iter().map(String::as_str), a.vocab);
    let mut lm: NeuralLm<f64> = NeuralLm::new(vocab, NeuralLmConfig::default(), a.seed);
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let losses = pretrain(
        &mut lm,
        &refs,
        &PretrainConfig {
            steps: a.steps,
            learning_rate: a.lr,
            batch_size: a.batch,
            seed: a.seed,
        },
    )?;
    if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
        info!("training loss {first:.3} -> {last:.3}");
    }
    let path = LocalModel::new(a.model_id, ModelKind::Base, lm).save(&a.out)?;
    info!("saved {}", path.display());
    Ok(())
}

fn unlearn(a: UnlearnArgs) -> Result<()> {
    let mut model = open_model(&a.model)?.into_trainable()?;
    let target = read_corpus(&a.target).with_context(|| format!("reading {}", a.target.display()))?;
    let safe = read_corpus(&a.safe).with_context(|| format!("reading {}", a.safe.display()))?;
    let [f, m, p] = a.weights;
    let config = UnlearningConfig {
        learning_rate: a.lr,
        max_steps: a.steps,
        batch_size: a.batch,
        seed: a.seed,
        checkpoint_every: a.checkpoint_every,
        kl_alarm_threshold: a.kl_alarm,
        ..UnlearningConfig::default()
    }
    .with_weights(f, m, p);
    let info = model.info().clone();
    let mut dir = RunDirectory::create(&a.out, &info.model_id, info.kind)?;
    let run = match run_unlearning(&mut model.lm, &info.model_id, &target, &safe, &config, &mut dir) {
        Ok(run) => run,
        Err(govaudit_core::unlearn::UnlearnError::Diverged { step, partial }) => {
            dir.write_run(&partial)?;
            bail!("unlearning diverged at step {step}; partial telemetry in {}", a.out.display());
        }
        Err(e) => return Err(e.into()),
    };
    dir.write_run(&run)?;
    model.save(&a.out.join("final"))?;
    if let Some(s) = &run.summary {
        info!(
            "target CE {:.4} -> {:.4}, mean safe KL {:.4}, {} alarm steps",
            s.initial_target_loss, s.final_target_loss, s.mean_safe_kl, s.alarm_steps
        );
        println!("{}", serde_json::to_string_pretty(s)?);
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let model = open_generator(&a.model)?;
    let queries = read_queries(&a.queries)?;
    let params = GenerationParams {
        max_new_tokens: a.max_new_tokens,
        temperature: a.temperature,
        seed: a.seed,
    };
    let records = run_evaluation(model.as_ref(), &queries, a.phase, &params);
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        warn!("{failed} of {} queries failed to generate", records.len());
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_responses(&a.out, &records)?;
    info!("{} {} responses from {} -> {}", records.len(), a.phase, model.info().model_id, a.out.display());
    Ok(())
}

fn annotate_serve(a: AnnotateServeArgs) -> Result<()> {
    let queries = read_queries(&a.queries)?;
    let mut responses = Vec::new();
    for p in &a.responses {
        responses.extend(read_responses(p).with_context(|| format!("reading {}", p.display()))?);
    }
    let session = govaudit_annotate::Session::open(&a.store, &responses, &queries, a.seed)?;
    let token = std::env::var(govaudit_annotate::TOKEN_ENV).ok();
    if token.is_none() {
        warn!("{} is not set; the API is open to anyone who can reach it", govaudit_annotate::TOKEN_ENV);
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().context("bad --host/--port")?;
    let total = session.tasks().len();
    let state = govaudit_annotate::AppState::new(session, token);
    govaudit_annotate::serve_blocking(state, a.ui_dir, addr, |bound| {
        // The first stdout line is the address, for scripts that pass --port 0.
        println!("listening on http://{bound}");
        info!("{total} tasks, store {}", a.store.display());
    })?;
    Ok(())
}

fn tally_cmd(a: TallyArgs) -> Result<()> {
    let annotations = read_annotations(&a.annotations)?;
    let queries = match &a.queries {
        Some(p) => read_queries(p)?,
        None => Vec::new(),
    };
    let universe: Vec<GroupKey> = match a.by {
        GroupBy::Query => queries.iter().map(|q| GroupKey::Query(q.id)).collect(),
        GroupBy::Model => Vec::new(),
    };
    let tallies = tally(&annotations, a.by, universe)?;
    println!("group\tphase\ttype1\ttype2\ttype2*");
    for t in &tallies {
        println!(
            "{}\t{}\t{}\t{}\t{}",
            t.group,
            t.phase,
            t.count(CodeClass::Type1),
            t.count(CodeClass::Type2),
            t.count(CodeClass::Type2Star)
        );
    }
    if let Some(out) = &a.out {
        write_tallies(out, &tallies)?;
    }
    if a.by == GroupBy::Query {
        let effect = ablation_effect(&tallies, control_id(&queries))?;
        if let Some(g) = &effect.guard {
            println!(
                "control query {}: difference {}, intrusiveness guard {}",
                g.query_id,
                g.difference,
                if g.passed { "passed" } else { "FAILED" }
            );
        }
        if let Some(out) = &a.diffs_out {
            write_differences(out, &effect.differences)?;
        }
    } else if a.diffs_out.is_some() {
        bail!("--diffs-out needs --by query");
    }
    Ok(())
}

fn correlate(a: CorrelateArgs) -> Result<()> {
    let diffs = read_differences(&a.diffs)?;
    let prevalence = read_prevalence(&a.prevalence)?;
    let control = match (a.control, &a.queries) {
        (Some(c), _) => Some(c),
        (None, Some(q)) => control_id(&read_queries(q)?),
        (None, None) => None,
    };
    let (result, points) = prevalence_correlation::<f64>(&diffs, &prevalence, control)?;
    println!(
        "r = {:.4}, n = {}, t = {:.4}, p = {:.3e} ({})",
        result.r,
        result.n,
        result.t,
        result.p_value,
        if result.significant() { "significant at 0.05" } else { "not significant at 0.05" }
    );
    if let Some(out) = &a.out {
        let json = serde_json::json!({ "correlation": result, "points": points });
        std::fs::write(out, serde_json::to_string_pretty(&json)?)?;
    }
    Ok(())
}

fn probe(a: ProbeArgs) -> Result<()> {
    let records = read_records(&a.records)?;
    let families = load_families(&a.models)?;
    let opts = MatrixOptions {
        shots: a.shots,
        templates: a.templates,
        comparator: a.tolerance.map_or(Comparator::Exact, |relative| Comparator::Tolerance { relative }),
        reticence: match &a.reticence {
            Some(p) => ReticenceConfig::load(p)?,
            None => ReticenceConfig::default(),
        },
        params: GenerationParams {
            max_new_tokens: a.max_new_tokens,
            ..GenerationParams::default()
        },
        max_attempts: a.max_attempts,
        min_interval: Duration::from_millis(a.min_interval_ms),
    };
    let matrix = run_matrix(&records, &families, &opts)?;
    std::fs::create_dir_all(&a.out)?;
    matrix.write_json(&a.out.join("matrix.json"))?;
    matrix.write_csv(&a.out.join("matrix.csv"))?;
    let c = &matrix.counts;
    println!(
        "non-control: {} recalled, {} not recalled, {} reticent, {} failed of {}",
        c.non_control.recalled,
        c.non_control.not_recalled,
        c.non_control.reticent,
        c.non_control.failed,
        c.non_control.total()
    );
    println!(
        "control: {} recalled, {} not recalled, {} reticent, {} failed of {}",
        c.control.recalled,
        c.control.not_recalled,
        c.control.reticent,
        c.control.failed,
        c.control.total()
    );
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let summary = build_report(&a.run, &a.out)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn mock(a: MockArgs) -> Result<()> {
    let pages = govaudit_mockcc::load_pages(&a.pages)?;
    let server = govaudit_mockcc::spawn(govaudit_mockcc::fixture_crawls(&pages), a.port, Vec::new())?;
    println!("listening on {}", server.base_url());
    println!("use --index-base {} --data-base {}", server.index_base(), server.data_base());
    server.wait();
    Ok(())
}
