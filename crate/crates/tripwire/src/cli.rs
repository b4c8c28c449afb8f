//! Command-line driver. Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use tripwire_core::graph::{build_graph, eigenvector_centrality, influencers, CentralityParams, EdgeSelection};
use tripwire_core::keywords::{keyword_bias, mention_scan, word_tree, Direction, KeywordConfig};
use tripwire_core::{balance, cross_domain_eval, cross_validate, username_cues, Corpus, Label, LinearModel, TrainConfig};

use crate::config::{ServiceConfig, CONFIG_ENV};
use crate::highlight::score_text;
use crate::ingest::{ingest_csv, write_corpus, write_row_errors, Ingested};
use crate::model_file::{load_model, save_model};
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tripwire", version, about = "Character-trigram SVM detector for jihadist hate speech")]
pub struct Cli {
    /// Print JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus CSV and report row errors and label counts.
    Ingest(IngestArgs),
    /// Train a model and write it to a file.
    Train(TrainCmd),
    /// Score a text, a corpus CSV or a directory of text files.
    Predict(PredictArgs),
    /// Stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Chi-squared keyword bias between HATE and SAFE.
    Keywords(KeywordArgs),
    /// Concordance tree around a keyword.
    Tree(TreeArgs),
    /// Place mentions and username cues.
    Scan(ScanArgs),
    /// Influencer detection on a relation graph.
    Graph(GraphArgs),
    /// Run the HTTP scoring and moderation service.
    Serve(ServeArgs),
}

fn parse_label(s: &str) -> Result<Label, String> {
    s.to_ascii_uppercase().parse().map_err(|_| format!("expected HATE, SAFE or UNLABELED, got {s:?}"))
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Corpus CSV: id,author,text[,date][,label][,lang].
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Label for rows without one.
    #[arg(long, value_parser = parse_label, default_value = "UNLABELED")]
    default_label: Label,
    /// Subsample the majority class to the minority size with this seed.
    #[arg(long, value_name = "SEED")]
    balance: Option<u64>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Soft-margin penalty.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Stopping tolerance on the projected gradient.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Keep trigrams seen in at least this many training documents.
    #[arg(long, default_value_t = 1)]
    min_df: usize,
}

impl SolverArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig { c: self.c, tolerance: self.tol, max_iterations: self.max_iter, seed: self.seed }
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Rewrite the accepted rows in canonical six-column form.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// Write row errors as JSON lines here instead of stderr.
    #[arg(long, value_name = "FILE")]
    errors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainCmd {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_name = "MODEL")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
struct PredictArgs {
    #[arg(long, value_name = "MODEL")]
    model: PathBuf,
    #[arg(long, group = "source")]
    text: Option<String>,
    /// Corpus CSV to score row by row.
    #[arg(long = "in", value_name = "CSV", group = "source")]
    input: Option<PathBuf>,
    /// Directory scanned recursively; each UTF-8 file is scored as one text.
    #[arg(long, value_name = "DIR", group = "source")]
    in_dir: Option<PathBuf>,
    /// With --in: evaluate against the labels instead of listing scores.
    #[arg(long, requires = "input")]
    eval: bool,
    #[arg(long, value_parser = parse_label, default_value = "UNLABELED")]
    default_label: Label,
    /// Number of explaining trigrams for --text.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct KeywordArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Minimum number of documents containing a word.
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    significant_only: bool,
    /// Also write the report as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Side {
    Left,
    Right,
}

#[derive(Debug, Args)]
struct TreeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    keyword: String,
    #[arg(long, value_enum, default_value = "right")]
    direction: Side,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Restrict to records with this label.
    #[arg(long, value_parser = parse_label)]
    label: Option<Label>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("scan").required(true).multiple(true))]
struct ScanArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// CSV of name[,place]; counts documents mentioning each place.
    #[arg(long, value_name = "CSV", group = "scan")]
    gazetteer: Option<PathBuf>,
    /// Report authors whose usernames carry profile cues.
    #[arg(long, group = "scan")]
    cues: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphKind {
    Cites,
    Knows,
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum GraphFormat {
    Table,
    Dot,
    Json,
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// CSV of src,dst,kind with kind in {knows, cites}.
    #[arg(long, value_name = "CSV")]
    edges: PathBuf,
    #[arg(long, value_enum, default_value = "cites")]
    kind: GraphKind,
    #[arg(long, default_value_t = 0.15)]
    damping: f64,
    /// Keep nodes with centrality strictly above this.
    #[arg(long, default_value_t = 0.25)]
    threshold: f64,
    /// Highlight nodes with centrality strictly above this.
    #[arg(long, default_value_t = 0.5)]
    highlight: f64,
    #[arg(long, value_enum, default_value = "table")]
    format: GraphFormat,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// key=value config file; defaults to $TRIPWIRE_CONFIG.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "MODEL")]
    model: Option<PathBuf>,
    #[arg(long, value_name = "ADDR")]
    bind: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<f64>,
    /// Append-only review log.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
    #[arg(long)]
    token: Option<String>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = execute(&cli, &mut out).and_then(|()| out.flush().map_err(Into::into));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            drop(out);
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let json = cli.json;
    match &cli.command {
        Command::Ingest(a) => ingest(a, json, out),
        Command::Train(a) => train(a, json, out),
        Command::Predict(a) => predict(a, json, out),
        Command::Cv(a) => cv(a, json, out),
        Command::Keywords(a) => keywords(a, json, out),
        Command::Tree(a) => tree(a, json, out),
        Command::Scan(a) => scan(a, json, out),
        Command::Graph(a) => graph(a, json, out),
        Command::Serve(a) => serve(a),
    }
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read_input(path: &Path, default_label: Label) -> anyhow::Result<Ingested> {
    ingest_csv(path, default_label).with_context(|| format!("reading {}", path.display()))
}

/// Reads a corpus, reports bad rows on stderr and applies `--balance`.
fn load_corpus(args: &CorpusArgs) -> anyhow::Result<Corpus> {
    let ingested = read_input(&args.input, args.default_label)?;
    write_row_errors(io::stderr().lock(), &ingested.errors)?;
    if ingested.corpus.is_empty() {
        bail!("{} contains no usable records", args.input.display());
    }
    match args.balance {
        Some(seed) => Ok(balance(&ingested.corpus, seed)?),
        None => Ok(ingested.corpus),
    }
}

fn ingest(a: &IngestArgs, json: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut ingested = read_input(&a.corpus.input, a.corpus.default_label)?;
    match &a.errors {
        Some(path) => write_row_errors(File::create(path)?, &ingested.errors)?,
        None => write_row_errors(io::stderr().lock(), &ingested.errors)?,
    }
    if let Some(seed) = a.corpus.balance {
        ingested.corpus = balance(&ingested.corpus, seed)?;
    }
    if let Some(path) = &a.out {
        let file = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        write_corpus(file, ingested.corpus.records())?;
    }
    let counts = ingested.corpus.counts();
    let summary = json!({
        "documents": ingested.corpus.len(),
        "hate": counts.hate,
        "safe": counts.safe,
        "unlabeled": counts.unlabeled,
        "errors": ingested.errors.len(),
        "duplicates": ingested.duplicates.len(),
    });
    if json {
        print_json(out, &summary)?;
    } else {
        writeln!(
            out,
            "{} documents ({} HATE, {} SAFE, {} unlabeled), {} bad rows, {} duplicates",
            ingested.corpus.len(),
            counts.hate,
            counts.safe,
            counts.unlabeled,
            ingested.errors.len(),
            ingested.duplicates.len()
        )?;
    }
    Ok(())
}

fn train(a: &TrainCmd, json: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let (model, stats) = LinearModel::fit(&corpus, &a.solver.config(), a.solver.min_df)?;
    save_model(&model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if !stats.converged {
        eprintln!("warning: solver stopped after {} epochs without converging", stats.epochs);
    }
    if json {
        print_json(
            out,
            &json!({
                "documents": corpus.len(),
                "features": model.vocabulary().len(),
                "epochs": stats.epochs,
                "converged": stats.converged,
                "bias": model.bias(),
            }),
        )
    } else {
        writeln!(
            out,
            "trained on {} documents, {} features, {} epochs{}",
            corpus.len(),
            model.vocabulary().len(),
            stats.epochs,
            if stats.converged { "" } else { " (not converged)" }
        )?;
        Ok(())
    }
}

#[derive(Serialize)]
struct FileScore {
    path: String,
    label: Label,
    score: f64,
    low_confidence: bool,
}

fn predict(a: &PredictArgs, json: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    if let Some(text) = &a.text {
        let s = score_text(&model, text, a.top);
        if json {
            return print_json(
                out,
                &json!({
                    "label": s.prediction.label,
                    "score": s.prediction.score,
                    "low_confidence": s.prediction.low_confidence,
                    "normalized": s.normalized,
                    "top_features": s.top_features,
                }),
            );
        }
        writeln!(
            out,
            "{} {:.6}{}",
            s.prediction.label,
            s.prediction.score,
            if s.prediction.low_confidence { " (low confidence)" } else { "" }
        )?;
        for f in &s.top_features {
            writeln!(out, "  {:?} {:+.6}", f.trigram, f.contribution)?;
        }
        return Ok(());
    }
    if let Some(path) = &a.input {
        let ingested = read_input(path, a.default_label)?;
        write_row_errors(io::stderr().lock(), &ingested.errors)?;
        if a.eval {
            let report = cross_domain_eval(&model, &ingested.corpus)?;
            return if json {
                print_json(out, &report)
            } else {
                out.write_all(report::domain_table(&report).as_bytes())?;
                Ok(())
            };
        }
        let rows: Vec<_> = ingested
            .corpus
            .iter()
            .map(|r| {
                let p = model.predict(&r.text);
                json!({ "id": r.id, "label": p.label, "score": p.score, "low_confidence": p.low_confidence })
            })
            .collect();
        if json {
            return print_json(out, &rows);
        }
        for (r, row) in ingested.corpus.iter().zip(&rows) {
            writeln!(out, "{}\t{}\t{:.6}", r.id, row["label"].as_str().unwrap_or_default(), row["score"].as_f64().unwrap_or_default())?;
        }
        return Ok(());
    }
    let dir = a.in_dir.as_ref().expect("clap enforces one source");
    let mut scores = Vec::new();
    let mut skipped = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", dir.display()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        match fs::read(path).map(String::from_utf8) {
            Ok(Ok(text)) => {
                let p = model.predict(&text);
                scores.push(FileScore {
                    path: path.display().to_string(),
                    label: p.label,
                    score: p.score,
                    low_confidence: p.low_confidence,
                });
            }
            Ok(Err(_)) => skipped.push(path.display().to_string()),
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        }
    }
    scores.sort_by(|a, b| b.score.total_cmp(&a.score));
    if json {
        return print_json(out, &json!({ "files": scores, "skipped": skipped }));
    }
    for s in &scores {
        writeln!(out, "{}\t{:.6}\t{}", s.label, s.score, s.path)?;
    }
    for path in &skipped {
        eprintln!("skipped (not UTF-8): {path}");
    }
    Ok(())
}

fn cv(a: &CvArgs, json: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let report = cross_validate(&corpus, a.k, &a.solver.config(), a.solver.min_df)?;
    if json {
        print_json(out, &report)
    } else {
        out.write_all(report::cv_table(&report).as_bytes())?;
        Ok(())
    }
}

fn keywords(a: &KeywordArgs, json: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let config = KeywordConfig { alpha: a.alpha, min_count: a.min_count };
    let mut stats = keyword_bias(&corpus, &config)?;
    if a.significant_only {
        stats.retain(|s| s.significant);
    }
    if let Some(top) = a.top {
        stats.truncate(top);
    }
    if let Some(path) = &a.csv {
        report::write_keywords_csv(File::create(path).with_context(|| format!("creating {}", path.display()))?, &stats)?;
    }
    if json {
        print_json(out, &stats)
    } else {
        out.write_all(report::keywords_table(&stats).as_bytes())?;
        Ok(())
    }
}

fn tree(a: &TreeArgs, json: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut corpus = load_corpus(&a.corpus)?;
    if let Some(label) = a.label {
        corpus = Corpus::from_records(corpus.with_label(label).cloned().collect())?;
    }
    let direction = match a.direction {
        Side::Left => Direction::Left,
        Side::Right => Direction::Right,
    };
    let tree = word_tree(&corpus, &a.keyword, direction, a.depth)?;
    if json {
        print_json(out, &tree)
    } else {
        out.write_all(report::word_tree_text(&tree).as_bytes())?;
        Ok(())
    }
}

fn scan(a: &ScanArgs, json: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let mut result = serde_json::Map::new();
    if let Some(path) = &a.gazetteer {
        let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
        let gazetteer = report::read_gazetteer(file)?;
        let counts = mention_scan(&corpus, gazetteer.iter().map(|(n, p)| (n.as_str(), p.as_str())));
        if !json {
            writeln!(out, "PLACE\tDOCUMENTS")?;
            let mut ranked: Vec<_> = counts.iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
            for (place, n) in ranked {
                writeln!(out, "{place}\t{n}")?;
            }
        }
        result.insert("mentions".into(), serde_json::to_value(&counts)?);
    }
    if a.cues {
        let authors: std::collections::BTreeSet<&str> = corpus.iter().map(|r| r.author.as_str()).collect();
        let flagged: Vec<_> = authors.iter().map(|a| username_cues(a)).filter(|r| !r.is_empty()).collect();
        let mut by_cue: BTreeMap<&str, usize> = BTreeMap::new();
        for report in &flagged {
            for cue in &report.cues {
                *by_cue.entry(cue.as_str()).or_default() += 1;
            }
        }
        if !json {
            writeln!(out, "{} of {} authors carry username cues", flagged.len(), authors.len())?;
            for report in &flagged {
                let cues: Vec<&str> = report.cues.iter().map(|c| c.as_str()).collect();
                writeln!(out, "  {}\t{}", report.username, cues.join(","))?;
            }
        }
        result.insert(
            "cues".into(),
            json!({ "authors": authors.len(), "flagged": flagged, "by_cue": by_cue }),
        );
    }
    if json {
        print_json(out, &result)?;
    }
    Ok(())
}

fn graph(a: &GraphArgs, json: bool, out: &mut dyn Write) -> anyhow::Result<()> {
    let file = File::open(&a.edges).with_context(|| format!("reading {}", a.edges.display()))?;
    let (edges, errors) = report::read_edges(file);
    write_row_errors(io::stderr().lock(), &errors)?;
    let (graph, built) = build_graph(edges);
    for (index, reason) in &built.errors {
        eprintln!("edge {}: {reason}", index + 1);
    }
    let selection = match a.kind {
        GraphKind::Cites => EdgeSelection::Cites,
        GraphKind::Knows => EdgeSelection::Knows,
        GraphKind::Combined => EdgeSelection::Combined,
    };
    let params = CentralityParams { damping: a.damping, highlight: a.highlight, ..CentralityParams::default() };
    let centrality = eigenvector_centrality(&graph, selection, &params)?;
    if !centrality.converged {
        eprintln!("warning: centrality did not converge in {} iterations", centrality.iterations);
    }
    let kept = influencers(&graph, &centrality, a.threshold, a.highlight)?;
    let format = if json { GraphFormat::Json } else { a.format };
    let rendered = match format {
        GraphFormat::Dot => report::influencers_dot(&kept),
        GraphFormat::Json => serde_json::to_string_pretty(&report::influencers_json(&kept))? + "\n",
        GraphFormat::Table => {
            let mut s = format!("{} nodes, {} kept above {}\n", graph.node_count(), kept.nodes.len(), a.threshold);
            for n in &kept.nodes {
                s.push_str(&format!("{:.4}\t{}{}\n", n.centrality, n.name, if n.highlighted { "\t*" } else { "" }));
            }
            s
        }
    };
    match &a.out {
        Some(path) => fs::write(path, rendered).with_context(|| format!("writing {}", path.display()))?,
        None => out.write_all(rendered.as_bytes())?,
    }
    Ok(())
}

fn serve(a: &ServeArgs) -> anyhow::Result<()> {
    let mut config = ServiceConfig::default();
    let path = a.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(path) = path {
        let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
        config = config.merge_str(&text).with_context(|| format!("in {}", path.display()))?;
    }
    if let Some(model) = &a.model {
        config.model = Some(model.clone());
    }
    if let Some(bind) = &a.bind {
        config.bind = bind.clone();
    }
    if let Some(t) = a.threshold {
        config.threshold = t;
    }
    if let Some(log) = &a.log {
        config.log = log.clone();
    }
    if let Some(token) = &a.token {
        config.token = Some(token.clone());
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::service::serve(config))
}
