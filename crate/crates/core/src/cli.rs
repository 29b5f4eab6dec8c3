//! Command-line front end: five subcommands covering the whole pipeline.
//!
//! * `prepare`   — clean text and write the document-term matrix
//! * `train`     — fit a boosted classifier, with cross-validated early stopping
//! * `evaluate`  — score a fitted model against hand labels
//! * `analyze`   — label a corpus and report per-group shares with intervals
//! * `agreement` — intercoder reliability between every pair of coders
//!
//! Outputs carry no timestamps or machine identifiers: rerunning a command
//! with the same inputs and seed reproduces every output byte for byte.
//!
//! Exit codes: 0 success, 2 configuration or I/O problem, 3 invalid data or
//! parameter values, 4 internal invariant violation (a bug).

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::analyze::{self, AnalyzeError};
use crate::config::{ConfigError, Partition, RunConfig};
use crate::corpus::{self, ColumnMap, Corpus, CorpusError, SplitSpec};
use crate::dtm::{DocTermMatrix, DtmError};
use crate::gbt::{self, BoostedModel, GbtError};
use crate::metrics::{ConfusionMatrix, MetricsError};
use crate::reliability::{self, ReliabilityError};
use crate::textprep::CleanConfig;

#[derive(Parser)]
#[command(
    name = "repclass",
    version,
    about = "Supervised tweet classification: clean, train, evaluate, analyze"
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags below override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed overriding `[train] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory overriding `[paths] out_dir` (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Stop-word list file overriding the bundled list.
    #[arg(long, global = true, value_name = "FILE")]
    pub stoplist: Option<PathBuf>,
    /// Keep link tokens instead of stripping them.
    #[arg(long, global = true)]
    pub no_strip_urls: bool,
    /// Stemmer: `porter` or `none`.
    #[arg(long, global = true, value_name = "NAME")]
    pub stemmer: Option<String>,
    /// Input column holding the document id.
    #[arg(long, global = true, value_name = "NAME")]
    pub id_column: Option<String>,
    /// Input column holding the group.
    #[arg(long, global = true, value_name = "NAME")]
    pub group_column: Option<String>,
    /// Input column holding the text.
    #[arg(long, global = true, value_name = "NAME")]
    pub text_column: Option<String>,
    /// Input column holding the hand label.
    #[arg(long, global = true, value_name = "NAME")]
    pub label_column: Option<String>,
    /// Input column holding the coder name.
    #[arg(long, global = true, value_name = "NAME")]
    pub coder_column: Option<String>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Clean the corpus and write the document-term matrix.
    Prepare {
        /// Input CSV; defaults to `[paths] input`.
        input: Option<PathBuf>,
    },
    /// Fit a boosted classifier on the training split.
    Train {
        /// Input CSV; defaults to `[paths] input`.
        input: Option<PathBuf>,
    },
    /// Score a fitted model against hand labels.
    Evaluate {
        /// Input CSV; defaults to `[paths] input`.
        input: Option<PathBuf>,
        /// Fitted model; defaults to `[paths] model`, then `OUT_DIR/model.json`.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Which documents to score: `test` (held-out split) or `all`.
        #[arg(long, value_name = "WHICH")]
        partition: Option<String>,
    },
    /// Label a corpus and report per-group positive shares.
    Analyze {
        /// Input CSV; defaults to `[paths] input`.
        input: Option<PathBuf>,
        /// Fitted model; defaults to `[paths] model`, then `OUT_DIR/model.json`.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
    },
    /// Intercoder agreement between every pair of coders.
    Agreement {
        /// Input CSV; defaults to `[paths] input`.
        input: Option<PathBuf>,
    },
}

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: bad configuration, unreadable or unwritable files.
    Config(String),
    /// Exit 3: data that fails validation, or parameters the data rejects.
    Data(String),
    /// Exit 4: a broken internal invariant — a bug, not a user error.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Internal(m) => write!(f, "internal error: {m}"),
            _ => f.write_str(self.message()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid { .. } => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DtmError> for CliError {
    fn from(e: DtmError) -> Self {
        match e {
            DtmError::Write(_) | DtmError::Io(_) => CliError::Config(e.to_string()),
            // We always build ids and token lists side by side; a mismatch
            // here cannot come from user data.
            DtmError::IdMismatch { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GbtError> for CliError {
    fn from(e: GbtError) -> Self {
        match e {
            GbtError::Io(_) => CliError::Config(e.to_string()),
            // Rows are projected through the model's own vocabulary, so an
            // out-of-range term index means the projection is broken.
            GbtError::TermOutOfRange { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ReliabilityError> for CliError {
    fn from(e: ReliabilityError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<AnalyzeError> for CliError {
    fn from(e: AnalyzeError) -> Self {
        match e {
            AnalyzeError::Gbt(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

/// Parse arguments from the process environment, run, and return the exit
/// code. Errors are printed to stderr.
pub fn run() -> u8 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let ctx = Context::resolve(&cli.globals)?;
    match &cli.command {
        Command::Prepare { input } => cmd_prepare(&ctx, input.as_deref()),
        Command::Train { input } => cmd_train(&ctx, input.as_deref()),
        Command::Evaluate {
            input,
            model,
            partition,
        } => cmd_evaluate(&ctx, input.as_deref(), model.as_deref(), partition.as_deref()),
        Command::Analyze { input, model } => {
            cmd_analyze(&ctx, input.as_deref(), model.as_deref())
        }
        Command::Agreement { input } => cmd_agreement(&ctx, input.as_deref()),
    }
}

/// Configuration after every command-line override is applied.
struct Context {
    config: RunConfig,
    out_dir: PathBuf,
    columns: ColumnMap,
    clean: CleanConfig,
}

impl Context {
    fn resolve(globals: &GlobalArgs) -> Result<Context, CliError> {
        let mut config = match &globals.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = globals.seed {
            config.train.seed = seed;
        }
        if let Some(path) = &globals.stoplist {
            config.clean.stoplist = Some(path.clone());
        }
        if globals.no_strip_urls {
            config.clean.strip_urls = false;
        }
        if let Some(name) = &globals.stemmer {
            config.clean.stemmer = name.clone();
        }
        for (override_value, target) in [
            (&globals.id_column, &mut config.columns.id),
            (&globals.group_column, &mut config.columns.group),
            (&globals.text_column, &mut config.columns.text),
            (&globals.label_column, &mut config.columns.label),
            (&globals.coder_column, &mut config.columns.coder),
        ] {
            if let Some(name) = override_value {
                *target = name.clone();
            }
        }
        let out_dir = globals
            .out_dir
            .clone()
            .or_else(|| config.paths.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let columns = config.columns.to_column_map();
        let clean = config.clean.to_clean_config()?;
        Ok(Context {
            config,
            out_dir,
            columns,
            clean,
        })
    }

    fn input_path(&self, positional: Option<&Path>) -> Result<PathBuf, CliError> {
        positional
            .map(Path::to_path_buf)
            .or_else(|| self.config.paths.input.clone())
            .ok_or_else(|| {
                CliError::Config(
                    "no input CSV: pass INPUT on the command line or set [paths] input".into(),
                )
            })
    }

    fn model_path(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.config.paths.model.clone())
            .unwrap_or_else(|| self.out_dir.join("model.json"))
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir).map_err(|e| {
            CliError::Config(format!(
                "cannot create output directory {}: {e}",
                self.out_dir.display()
            ))
        })
    }

    fn load_corpus(&self, input: Option<&Path>) -> Result<Corpus, CliError> {
        let path = self.input_path(input)?;
        Ok(corpus::load_csv(&path, &self.columns)?)
    }

    /// The coder whose labels are ground truth: configured, or the first in
    /// sorted order.
    fn truth_coder(&self, corpus: &Corpus) -> Result<String, CliError> {
        if let Some(coder) = &self.config.corpus.coder {
            return Ok(coder.clone());
        }
        corpus
            .coders()
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Data("the corpus carries no coder labels".into()))
    }

    /// Sample (if configured) and split, exactly as `train` does, so any
    /// command can reconstruct the same partition from the same inputs.
    fn sample_and_split(&self, corpus: Corpus) -> Result<(Corpus, Corpus, Corpus), CliError> {
        let seed = self.config.train.seed;
        let sampled = match self.config.corpus.sample_size {
            Some(n) => corpus::sample(&corpus, n, seed)?,
            None => corpus,
        };
        let (train_part, test_part) = corpus::split(
            &sampled,
            SplitSpec {
                train_fraction: self.config.corpus.train_fraction,
                seed,
            },
        )?;
        Ok((sampled, train_part, test_part))
    }

    fn build_matrix(&self, part: &Corpus) -> Result<DocTermMatrix, CliError> {
        let tokens = part.clean_texts(&self.clean);
        let matrix = crate::dtm::build(part.doc_ids(), &tokens)?;
        Ok(matrix.prune(self.config.dtm.max_sparsity)?)
    }
}

fn write_csv_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    let io_err = |e: csv::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
    writer.write_record(header).map_err(io_err)?;
    for row in rows {
        writer.write_record(row).map_err(io_err)?;
    }
    writer.flush().map_err(|e| {
        CliError::Config(format!("cannot write {}: {e}", path.display()))
    })
}

fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

fn cmd_prepare(ctx: &Context, input: Option<&Path>) -> Result<(), CliError> {
    let corpus = ctx.load_corpus(input)?;
    if corpus.is_empty() {
        return Err(CliError::Data("the corpus has no documents".into()));
    }
    let tokens = corpus.clean_texts(&ctx.clean);
    let matrix = crate::dtm::build(corpus.doc_ids(), &tokens)?;
    let pruned = matrix.prune(ctx.config.dtm.max_sparsity)?;

    ctx.ensure_out_dir()?;
    write_csv_rows(
        &ctx.out_dir.join("cleaned.csv"),
        &["doc_id", "group", "tokens"],
        corpus.docs.iter().zip(&tokens).map(|(d, t)| {
            vec![d.doc.id.clone(), d.doc.group.clone(), t.join(" ")]
        }),
    )?;
    let dtm_path = ctx.out_dir.join("dtm.csv");
    let file = fs::File::create(&dtm_path)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", dtm_path.display())))?;
    pruned.write_triplets(file)?;
    let vocab_path = ctx.out_dir.join("vocabulary.csv");
    let file = fs::File::create(&vocab_path)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", vocab_path.display())))?;
    pruned.write_vocabulary(file)?;

    println!(
        "prepared {} documents: {} terms kept of {} ({} replaced byte sequences)",
        pruned.n_docs(),
        pruned.n_terms(),
        matrix.n_terms(),
        corpus.utf8_replacements,
    );
    Ok(())
}

fn cmd_train(ctx: &Context, input: Option<&Path>) -> Result<(), CliError> {
    let corpus = ctx.load_corpus(input)?;
    let (_, train_part, test_part) = ctx.sample_and_split(corpus)?;
    let coder = ctx.truth_coder(&train_part)?;
    let target = ctx.config.corpus.target_category()?;
    let labels = corpus::binary_labels(&train_part, target, &coder)?;
    let matrix = ctx.build_matrix(&train_part)?;
    let params = ctx.config.train.to_params()?;

    let folds = ctx.config.train.folds;
    let mut curve_rows: Vec<(u32, String, f64)> = Vec::new();
    let model = match folds {
        0 => {
            let model = gbt::train(&matrix, &labels, &params)?;
            for (i, &loss) in model.curve.train.iter().enumerate() {
                curve_rows.push((i as u32 + 1, "train".into(), loss));
            }
            println!(
                "trained {} model: {} rounds, no early stopping",
                params.loss,
                model.n_trees()
            );
            model
        }
        1 => {
            return Err(CliError::Data(
                "folds must be 0 (no early stopping) or at least 2".into(),
            ))
        }
        k => {
            let cv = gbt::cross_validate(&matrix, &labels, &params, k)?;
            for (i, &loss) in cv.mean_curve.iter().enumerate() {
                curve_rows.push((i as u32 + 1, "cv_mean".into(), loss));
            }
            for (f, curve) in cv.fold_curves.iter().enumerate() {
                for (i, &loss) in curve.iter().enumerate() {
                    curve_rows.push((i as u32 + 1, format!("fold_{}", f + 1), loss));
                }
            }
            for (i, &loss) in cv.model.curve.train.iter().enumerate() {
                curve_rows.push((i as u32 + 1, "train".into(), loss));
            }
            println!(
                "trained {} model: kept round {} of {} by {}-fold cross-validation",
                params.loss, cv.best_iteration, params.n_rounds, k
            );
            cv.model
        }
    };

    ctx.ensure_out_dir()?;
    model.save(&ctx.model_path(None))?;
    write_csv_rows(
        &ctx.out_dir.join("curve.csv"),
        &["round", "source", "loss"],
        curve_rows
            .into_iter()
            .map(|(round, source, loss)| vec![round.to_string(), source, fmt_f64(loss)]),
    )?;
    write_csv_rows(
        &ctx.out_dir.join("importance.csv"),
        &["rank", "term", "mean_gain"],
        model
            .feature_importance()
            .into_iter()
            .enumerate()
            .map(|(i, (term, gain))| vec![(i + 1).to_string(), term, fmt_f64(gain)]),
    )?;
    write_csv_rows(
        &ctx.out_dir.join("split.csv"),
        &["doc_id", "partition"],
        train_part
            .docs
            .iter()
            .map(|d| (d.doc.id.clone(), "train"))
            .chain(test_part.docs.iter().map(|d| (d.doc.id.clone(), "test")))
            .map(|(id, part)| vec![id, part.to_string()]),
    )?;
    Ok(())
}

fn cmd_evaluate(
    ctx: &Context,
    input: Option<&Path>,
    model_flag: Option<&Path>,
    partition_flag: Option<&str>,
) -> Result<(), CliError> {
    let partition = match partition_flag {
        Some(text) => Partition::from_str(text).map_err(CliError::Data)?,
        None => ctx.config.evaluate.partition()?,
    };
    let corpus = ctx.load_corpus(input)?;
    let (sampled, _, test_part) = ctx.sample_and_split(corpus)?;
    let scored = match partition {
        Partition::Test => test_part,
        Partition::All => sampled,
    };
    if scored.is_empty() {
        return Err(CliError::Data("no documents to evaluate".into()));
    }
    let coder = ctx.truth_coder(&scored)?;
    let target = ctx.config.corpus.target_category()?;
    let truth = corpus::binary_labels(&scored, target, &coder)?;
    let model = BoostedModel::load(&ctx.model_path(model_flag))?;
    let predicted = analyze::classify_corpus(&scored, &model, &ctx.clean)?;
    let cells = ConfusionMatrix::from_pairs(&truth, &predicted)?;
    let report = cells.report();

    ctx.ensure_out_dir()?;
    let mut rows: Vec<Vec<String>> = vec![
        vec!["n".into(), cells.total().to_string()],
        vec!["true_pos".into(), cells.true_pos.to_string()],
        vec!["false_pos".into(), cells.false_pos.to_string()],
        vec!["false_neg".into(), cells.false_neg.to_string()],
        vec!["true_neg".into(), cells.true_neg.to_string()],
        vec!["accuracy".into(), fmt_f64(report.accuracy)],
        vec![
            "no_information_rate".into(),
            fmt_f64(report.no_information_rate),
        ],
        vec!["precision".into(), fmt_f64(report.precision)],
        vec!["precision_defined".into(), report.precision_defined.to_string()],
        vec!["recall".into(), fmt_f64(report.recall)],
        vec!["recall_defined".into(), report.recall_defined.to_string()],
        vec!["f1".into(), fmt_f64(report.f1)],
        vec!["f1_defined".into(), report.f1_defined.to_string()],
    ];
    for note in &report.footnotes {
        rows.push(vec!["footnote".into(), note.clone()]);
    }
    write_csv_rows(&ctx.out_dir.join("metrics.csv"), &["metric", "value"], rows)?;

    println!(
        "evaluated {} documents: accuracy {:.4}, precision {:.4}, recall {:.4}, F1 {:.4}",
        cells.total(),
        report.accuracy,
        report.precision,
        report.recall,
        report.f1
    );
    for note in &report.footnotes {
        println!("note: {note}");
    }
    Ok(())
}

fn cmd_analyze(
    ctx: &Context,
    input: Option<&Path>,
    model_flag: Option<&Path>,
) -> Result<(), CliError> {
    let corpus = ctx.load_corpus(input)?;
    if corpus.is_empty() {
        return Err(CliError::Data("the corpus has no documents".into()));
    }
    let model = BoostedModel::load(&ctx.model_path(model_flag))?;
    let probabilities = analyze::score_corpus(&corpus, &model, &ctx.clean)?;
    let labels: Vec<u32> = probabilities
        .iter()
        .map(|&p| model.label_from_proba(p))
        .collect();
    let groups: Vec<String> = corpus.docs.iter().map(|d| d.doc.group.clone()).collect();
    let confidence = ctx.config.analyze.confidence;
    let method = ctx.config.analyze.method()?;
    let shares = analyze::group_shares(&groups, &labels, confidence, method)?;

    ctx.ensure_out_dir()?;
    write_csv_rows(
        &ctx.out_dir.join("labels.csv"),
        &["doc_id", "group", "probability", "label"],
        corpus
            .docs
            .iter()
            .zip(probabilities.iter().zip(&labels))
            .map(|(d, (&p, &l))| {
                vec![
                    d.doc.id.clone(),
                    d.doc.group.clone(),
                    fmt_f64(p),
                    l.to_string(),
                ]
            }),
    )?;
    write_csv_rows(
        &ctx.out_dir.join("groups.csv"),
        &[
            "rank",
            "group",
            "n_docs",
            "n_positive",
            "share",
            "lower",
            "upper",
        ],
        shares.iter().map(|s| {
            vec![
                s.rank.to_string(),
                s.group.clone(),
                s.n_docs.to_string(),
                s.n_positive.to_string(),
                fmt_f64(s.share),
                fmt_f64(s.lower),
                fmt_f64(s.upper),
            ]
        }),
    )?;

    let positives: u64 = labels.iter().map(|&l| u64::from(l)).sum();
    println!(
        "labeled {} documents ({} positive) across {} groups",
        corpus.len(),
        positives,
        shares.len()
    );
    Ok(())
}

fn cmd_agreement(ctx: &Context, input: Option<&Path>) -> Result<(), CliError> {
    let corpus = ctx.load_corpus(input)?;
    let coders = corpus.coders();
    if coders.len() < 2 {
        return Err(CliError::Data(format!(
            "agreement needs at least two coders, found {}",
            coders.len()
        )));
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut pair_summaries = Vec::new();
    for (i, coder_a) in coders.iter().enumerate() {
        for coder_b in &coders[i + 1..] {
            let sheet_a = reliability::sheet_from_corpus(&corpus, coder_a)?;
            let sheet_b = reliability::sheet_from_corpus(&corpus, coder_b)?;
            let report = reliability::agreement_report(&sheet_a, &sheet_b)?;
            let mut push = |measure: &str, category: &str, value: String| {
                rows.push(vec![
                    coder_a.clone(),
                    coder_b.clone(),
                    measure.to_string(),
                    category.to_string(),
                    value,
                ]);
            };
            push("n_shared", "", report.n_shared.to_string());
            push("overall", "", fmt_f64(report.overall));
            for row in &report.per_category {
                push("category_agreement", row.category.as_str(), fmt_f64(row.agreement));
            }
            push("cohen_kappa", "", fmt_f64(report.kappa));
            pair_summaries.push(format!(
                "{coder_a}/{coder_b}: overall {:.4}, kappa {:.4} over {} shared",
                report.overall, report.kappa, report.n_shared
            ));
        }
    }

    ctx.ensure_out_dir()?;
    write_csv_rows(
        &ctx.out_dir.join("agreement.csv"),
        &["coder_a", "coder_b", "measure", "category", "value"],
        rows,
    )?;
    for line in pair_summaries {
        println!("{line}");
    }
    Ok(())
}
