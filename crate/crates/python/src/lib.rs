//! Python bindings for the repclass toolkit: text cleaning, sparse
//! document-term matrices, boosted-tree training with cross-validated
//! early stopping, evaluation, intercoder agreement, and group shares.
//!
//! The module mirrors the Rust API closely; every function is a thin
//! wrapper that converts arguments, delegates, and converts errors to
//! `ValueError` (or `OSError` for file problems).

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use repclass_core::analyze::{self, IntervalMethod};
use repclass_core::corpus::{self, Category, ColumnMap, Document, LabeledDocument, SplitSpec};
use repclass_core::dtm;
use repclass_core::gbt::{self, BoostedModel, GbtError, Loss, TrainParams};
use repclass_core::metrics::{ConfusionMatrix, EvalReport};
use repclass_core::reliability;
use repclass_core::textprep::{self, CleanConfig, StemmerKind};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn corpus_err(e: corpus::CorpusError) -> PyErr {
    match &e {
        corpus::CorpusError::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn gbt_err(e: GbtError) -> PyErr {
    match &e {
        GbtError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn parse_category(name: &str) -> PyResult<Category> {
    name.parse::<Category>().map_err(value_err)
}

fn parse_method(name: &str) -> PyResult<IntervalMethod> {
    match name.trim().to_lowercase().as_str() {
        "normal" => Ok(IntervalMethod::Normal),
        "wilson" => Ok(IntervalMethod::Wilson),
        other => Err(value_err(format!(
            "unknown interval method {other:?}; use \"normal\" or \"wilson\""
        ))),
    }
}

fn build_clean_config(
    stopwords: Option<Vec<String>>,
    strip_urls: bool,
    keep_tag_bodies: bool,
    stemmer: &str,
) -> PyResult<CleanConfig> {
    let stemmer: StemmerKind = stemmer.parse().map_err(value_err)?;
    let stoplist = match stopwords {
        Some(words) => textprep::parse_stoplist(&words.join("\n")),
        None => textprep::default_stoplist(),
    };
    Ok(CleanConfig {
        stoplist,
        strip_urls,
        keep_hash_mention_bodies: keep_tag_bodies,
        stemmer,
    })
}

/// A reusable text-cleaning configuration.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Cleaner {
    config: CleanConfig,
}

#[pymethods]
impl Cleaner {
    #[new]
    #[pyo3(signature = (*, stopwords=None, strip_urls=true, keep_tag_bodies=true, stemmer="porter"))]
    fn new(
        stopwords: Option<Vec<String>>,
        strip_urls: bool,
        keep_tag_bodies: bool,
        stemmer: &str,
    ) -> PyResult<Self> {
        Ok(Cleaner {
            config: build_clean_config(stopwords, strip_urls, keep_tag_bodies, stemmer)?,
        })
    }

    /// Tokenize, filter, and stem one text.
    fn clean(&self, text: &str) -> Vec<String> {
        textprep::clean(text, &self.config)
    }
}

fn config_of(cleaner: Option<Cleaner>) -> CleanConfig {
    cleaner.map_or_else(CleanConfig::default, |c| c.config)
}

/// A collection of documents, each with an id, a group, a text, and any
/// number of coder labels.
#[pyclass]
struct Corpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl Corpus {
    /// Load a corpus from a CSV file with configurable column names.
    #[staticmethod]
    #[pyo3(signature = (path, *, id_column="id", group_column="group", text_column="text", label_column="label", coder_column="coder"))]
    fn load(
        path: PathBuf,
        id_column: &str,
        group_column: &str,
        text_column: &str,
        label_column: &str,
        coder_column: &str,
    ) -> PyResult<Self> {
        let columns = ColumnMap {
            id: id_column.into(),
            group: group_column.into(),
            text: text_column.into(),
            label: Some(label_column.into()),
            coder: Some(coder_column.into()),
        };
        let inner = corpus::load_csv(&path, &columns).map_err(corpus_err)?;
        Ok(Corpus { inner })
    }

    /// Build an unlabeled corpus from parallel id/group/text lists.
    #[staticmethod]
    fn from_rows(ids: Vec<String>, groups: Vec<String>, texts: Vec<String>) -> PyResult<Self> {
        if ids.len() != groups.len() || ids.len() != texts.len() {
            return Err(value_err(format!(
                "ids, groups, and texts must have equal lengths ({}, {}, {})",
                ids.len(),
                groups.len(),
                texts.len()
            )));
        }
        let docs = ids
            .into_iter()
            .zip(groups)
            .zip(texts)
            .map(|((id, group), text)| LabeledDocument {
                doc: Document { id, group, text },
                labels: vec![],
            })
            .collect();
        Ok(Corpus {
            inner: corpus::Corpus {
                docs,
                utf8_replacements: 0,
            },
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn doc_ids(&self) -> Vec<String> {
        self.inner.doc_ids()
    }

    /// Distinct group names, sorted.
    fn groups(&self) -> Vec<String> {
        self.inner.groups()
    }

    /// Distinct coder names appearing in any label, sorted.
    fn coders(&self) -> Vec<String> {
        self.inner.coders()
    }

    #[getter]
    fn utf8_replacements(&self) -> usize {
        self.inner.utf8_replacements
    }

    /// Draw `n` distinct documents uniformly at random, keeping order.
    fn sample(&self, n: usize, seed: u64) -> PyResult<Self> {
        let inner = corpus::sample(&self.inner, n, seed).map_err(corpus_err)?;
        Ok(Corpus { inner })
    }

    /// Random train/test split; the train side holds
    /// `floor(len * train_fraction)` documents.
    fn split(&self, train_fraction: f64, seed: u64) -> PyResult<(Corpus, Corpus)> {
        let (a, b) = corpus::split(
            &self.inner,
            SplitSpec {
                train_fraction,
                seed,
            },
        )
        .map_err(corpus_err)?;
        Ok((Corpus { inner: a }, Corpus { inner: b }))
    }

    /// 1.0 where `coder` assigned `target`, else 0.0; errors when the coder
    /// left any document unlabeled.
    fn binary_labels(&self, target: &str, coder: &str) -> PyResult<Vec<f64>> {
        let target = parse_category(target)?;
        corpus::binary_labels(&self.inner, target, coder).map_err(corpus_err)
    }

    /// Clean every document text with the given (or default) configuration.
    #[pyo3(signature = (cleaner=None))]
    fn clean_texts(&self, cleaner: Option<Cleaner>) -> Vec<Vec<String>> {
        self.inner.clean_texts(&config_of(cleaner))
    }
}

/// A sparse document-term matrix over a sorted vocabulary.
#[pyclass]
struct DocTermMatrix {
    inner: dtm::DocTermMatrix,
}

#[pymethods]
impl DocTermMatrix {
    /// Build a matrix from per-document token lists; the vocabulary is the
    /// sorted set of all tokens.
    #[staticmethod]
    fn build(doc_ids: Vec<String>, docs_tokens: Vec<Vec<String>>) -> PyResult<Self> {
        let inner = dtm::build(doc_ids, &docs_tokens).map_err(value_err)?;
        Ok(DocTermMatrix { inner })
    }

    /// Drop terms absent from more than `max_sparsity` of the documents.
    #[pyo3(signature = (max_sparsity=0.95))]
    fn prune(&self, max_sparsity: f64) -> PyResult<Self> {
        let inner = self.inner.prune(max_sparsity).map_err(value_err)?;
        Ok(DocTermMatrix { inner })
    }

    /// Project new documents onto this matrix's vocabulary; unseen tokens
    /// are dropped.
    fn project(&self, doc_ids: Vec<String>, docs_tokens: Vec<Vec<String>>) -> PyResult<Self> {
        let inner =
            dtm::project_all(doc_ids, &docs_tokens, &self.inner.vocab).map_err(value_err)?;
        Ok(DocTermMatrix { inner })
    }

    #[getter]
    fn n_docs(&self) -> usize {
        self.inner.n_docs()
    }

    #[getter]
    fn n_terms(&self) -> usize {
        self.inner.n_terms()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.inner.vocab.fingerprint()
    }

    fn doc_ids(&self) -> Vec<String> {
        self.inner.doc_ids.clone()
    }

    /// `(term, document_frequency)` pairs in vocabulary (sorted) order.
    fn vocabulary(&self) -> Vec<(String, u32)> {
        self.inner
            .vocab
            .iter()
            .map(|(term, df)| (term.to_string(), df))
            .collect()
    }

    /// One document's `(term_index, count)` pairs, term indices ascending.
    fn row(&self, index: usize) -> PyResult<Vec<(u32, u32)>> {
        self.inner
            .rows
            .get(index)
            .cloned()
            .ok_or_else(|| value_err(format!("row {index} out of range")))
    }
}

fn build_params(
    loss: &str,
    n_rounds: u32,
    learning_rate: f64,
    max_depth: u32,
    min_node_weight: f64,
    positive_class_weight: Option<f64>,
    threshold: f64,
    seed: u64,
) -> PyResult<TrainParams> {
    let loss: Loss = loss.parse().map_err(value_err)?;
    Ok(TrainParams {
        loss,
        n_rounds,
        learning_rate,
        max_depth,
        min_node_weight,
        positive_class_weight,
        threshold,
        seed,
    })
}

/// A fitted boosted-tree model.
#[pyclass]
struct Model {
    inner: BoostedModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = BoostedModel::load(&path).map_err(gbt_err)?;
        Ok(Model { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = BoostedModel::from_json(text).map_err(gbt_err)?;
        Ok(Model { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(gbt_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(gbt_err)
    }

    #[getter]
    fn loss(&self) -> String {
        self.inner.loss().to_string()
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.params.threshold
    }

    #[getter]
    fn base_score(&self) -> f64 {
        self.inner.base_score
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.n_trees()
    }

    #[getter]
    fn vocab_fingerprint(&self) -> String {
        self.inner.vocab_fingerprint.clone()
    }

    /// Per-round training loss.
    #[getter]
    fn train_curve(&self) -> Vec<f64> {
        self.inner.curve.train.clone()
    }

    /// Per-round holdout loss, when one was tracked.
    #[getter]
    fn holdout_curve(&self) -> Option<Vec<f64>> {
        self.inner.curve.holdout.clone()
    }

    /// 1-based round with the lowest holdout loss, when one was tracked.
    #[getter]
    fn best_iteration(&self) -> Option<u32> {
        self.inner.curve.best_iteration()
    }

    fn check_matrix(&self, matrix: &DocTermMatrix) -> PyResult<()> {
        let found = matrix.inner.vocab.fingerprint();
        if found != self.inner.vocab_fingerprint {
            return Err(gbt_err(GbtError::FingerprintMismatch {
                expected: self.inner.vocab_fingerprint.clone(),
                found,
            }));
        }
        Ok(())
    }

    /// Positive-class probability per row (logistic loss only); the matrix
    /// vocabulary must match the training vocabulary.
    fn predict_proba(&self, matrix: &DocTermMatrix) -> PyResult<Vec<f64>> {
        self.check_matrix(matrix)?;
        self.inner.predict_proba(&matrix.inner.rows).map_err(gbt_err)
    }

    /// Hard 0/1 label per row at the model threshold.
    fn predict_labels(&self, matrix: &DocTermMatrix) -> PyResult<Vec<u32>> {
        analyze::classify_matrix(&matrix.inner, &self.inner).map_err(value_err)
    }

    /// Raw additive score per row (any loss).
    fn predict_score(&self, matrix: &DocTermMatrix) -> PyResult<Vec<f64>> {
        self.check_matrix(matrix)?;
        Ok(matrix
            .inner
            .rows
            .iter()
            .map(|row| self.inner.score_row(row))
            .collect())
    }

    /// Clean and score a whole corpus, returning probabilities.
    #[pyo3(signature = (corpus, cleaner=None))]
    fn score_corpus(&self, corpus: &Corpus, cleaner: Option<Cleaner>) -> PyResult<Vec<f64>> {
        analyze::score_corpus(&corpus.inner, &self.inner, &config_of(cleaner)).map_err(value_err)
    }

    /// Clean and label a whole corpus at the model threshold.
    #[pyo3(signature = (corpus, cleaner=None))]
    fn classify_corpus(&self, corpus: &Corpus, cleaner: Option<Cleaner>) -> PyResult<Vec<u32>> {
        analyze::classify_corpus(&corpus.inner, &self.inner, &config_of(cleaner)).map_err(value_err)
    }

    /// `(term, mean split gain)` pairs, best first; unused terms omitted.
    fn feature_importance(&self) -> Vec<(String, f64)> {
        self.inner.feature_importance()
    }

    /// Treat each tree as one vote over a single tokenized document:
    /// probabilities per tree, the votes, and the majority label.
    fn per_tree_view<'py>(
        &self,
        py: Python<'py>,
        tokens: Vec<String>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let row = dtm::project(&tokens, &self.inner.vocabulary);
        let view = self.inner.per_tree_view(&row).map_err(gbt_err)?;
        let out = PyDict::new(py);
        out.set_item("probabilities", view.probabilities)?;
        out.set_item("votes", view.votes)?;
        out.set_item("positive_votes", view.positive_votes)?;
        out.set_item("vote_share", view.vote_share)?;
        out.set_item("majority_label", view.majority_label)?;
        Ok(out)
    }
}

/// Early-stopping search output: per-fold curves, their mean, the chosen
/// round, and the model refit on all rows at that length.
#[pyclass]
struct CvResult {
    #[pyo3(get)]
    model: Py<Model>,
    #[pyo3(get)]
    best_iteration: u32,
    #[pyo3(get)]
    mean_curve: Vec<f64>,
    #[pyo3(get)]
    fold_curves: Vec<Vec<f64>>,
}

/// Stem one lowercase word.
#[pyfunction]
fn stem(word: &str) -> String {
    textprep::stem(word)
}

/// The built-in stop-word list, sorted.
#[pyfunction]
fn default_stopwords() -> Vec<String> {
    let mut words: Vec<String> = textprep::default_stoplist().into_iter().collect();
    words.sort();
    words
}

/// Tokenize, filter, and stem one text.
#[pyfunction]
#[pyo3(signature = (text, *, stopwords=None, strip_urls=true, keep_tag_bodies=true, stemmer="porter"))]
fn clean(
    text: &str,
    stopwords: Option<Vec<String>>,
    strip_urls: bool,
    keep_tag_bodies: bool,
    stemmer: &str,
) -> PyResult<Vec<String>> {
    let config = build_clean_config(stopwords, strip_urls, keep_tag_bodies, stemmer)?;
    Ok(textprep::clean(text, &config))
}

/// Train a boosted-tree model; optionally track a holdout loss curve.
#[pyfunction]
#[pyo3(signature = (matrix, labels, *, holdout_matrix=None, holdout_labels=None,
    loss="logistic", n_rounds=100, learning_rate=0.3, max_depth=6,
    min_node_weight=1.0, positive_class_weight=None, threshold=0.5, seed=0,
    parallel=true))]
#[allow(clippy::too_many_arguments)]
fn train(
    matrix: &DocTermMatrix,
    labels: Vec<f64>,
    holdout_matrix: Option<&DocTermMatrix>,
    holdout_labels: Option<Vec<f64>>,
    loss: &str,
    n_rounds: u32,
    learning_rate: f64,
    max_depth: u32,
    min_node_weight: f64,
    positive_class_weight: Option<f64>,
    threshold: f64,
    seed: u64,
    parallel: bool,
) -> PyResult<Model> {
    let params = build_params(
        loss,
        n_rounds,
        learning_rate,
        max_depth,
        min_node_weight,
        positive_class_weight,
        threshold,
        seed,
    )?;
    let holdout = match (holdout_matrix, &holdout_labels) {
        (Some(m), Some(l)) => Some((&m.inner, l.as_slice())),
        (None, None) => None,
        _ => {
            return Err(value_err(
                "holdout_matrix and holdout_labels must be given together",
            ))
        }
    };
    let inner = gbt::train_with(&matrix.inner, &labels, holdout, &params, parallel)
        .map_err(gbt_err)?;
    Ok(Model { inner })
}

/// Pick the boosting length by k-fold cross-validation, then refit on all
/// rows at that length.
#[pyfunction]
#[pyo3(signature = (matrix, labels, *, folds=5, loss="logistic", n_rounds=100,
    learning_rate=0.3, max_depth=6, min_node_weight=1.0,
    positive_class_weight=None, threshold=0.5, seed=0))]
#[allow(clippy::too_many_arguments)]
fn cross_validate(
    py: Python<'_>,
    matrix: &DocTermMatrix,
    labels: Vec<f64>,
    folds: usize,
    loss: &str,
    n_rounds: u32,
    learning_rate: f64,
    max_depth: u32,
    min_node_weight: f64,
    positive_class_weight: Option<f64>,
    threshold: f64,
    seed: u64,
) -> PyResult<CvResult> {
    let params = build_params(
        loss,
        n_rounds,
        learning_rate,
        max_depth,
        min_node_weight,
        positive_class_weight,
        threshold,
        seed,
    )?;
    let cv = gbt::cross_validate(&matrix.inner, &labels, &params, folds).map_err(gbt_err)?;
    Ok(CvResult {
        model: Py::new(py, Model { inner: cv.model })?,
        best_iteration: cv.best_iteration,
        mean_curve: cv.mean_curve,
        fold_curves: cv.fold_curves,
    })
}

fn report_dict<'py>(py: Python<'py>, report: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    let cells = PyDict::new(py);
    cells.set_item("true_pos", report.cells.true_pos)?;
    cells.set_item("false_pos", report.cells.false_pos)?;
    cells.set_item("false_neg", report.cells.false_neg)?;
    cells.set_item("true_neg", report.cells.true_neg)?;
    out.set_item("cells", cells)?;
    out.set_item("n", report.cells.total())?;
    out.set_item("accuracy", report.accuracy)?;
    out.set_item("no_information_rate", report.no_information_rate)?;
    out.set_item("precision", report.precision)?;
    out.set_item("precision_defined", report.precision_defined)?;
    out.set_item("recall", report.recall)?;
    out.set_item("recall_defined", report.recall_defined)?;
    out.set_item("f1", report.f1)?;
    out.set_item("f1_defined", report.f1_defined)?;
    out.set_item("footnotes", report.footnotes.clone())?;
    Ok(out)
}

/// Compare 0/1 truth and predictions: confusion cells, accuracy, the
/// no-information rate, precision, recall, and F1 (0.0 with a `..._defined`
/// flag cleared where a denominator is empty).
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    truth: Vec<f64>,
    predicted: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cells = ConfusionMatrix::from_pairs(&truth, &predicted).map_err(value_err)?;
    report_dict(py, &cells.report())
}

/// Agreement between two coders over their shared documents: the overall
/// rate, Cohen's kappa, and a per-category rate restricted to documents
/// where at least one of the two used the category.
#[pyfunction]
fn agreement<'py>(
    py: Python<'py>,
    corpus: &Corpus,
    coder_a: &str,
    coder_b: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let sheet_a = reliability::sheet_from_corpus(&corpus.inner, coder_a).map_err(value_err)?;
    let sheet_b = reliability::sheet_from_corpus(&corpus.inner, coder_b).map_err(value_err)?;
    let report = reliability::agreement_report(&sheet_a, &sheet_b).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("n_shared", report.n_shared)?;
    out.set_item("overall", report.overall)?;
    out.set_item("kappa", report.kappa)?;
    let rows: Vec<Bound<'py, PyDict>> = report
        .per_category
        .iter()
        .map(|row| {
            let entry = PyDict::new(py);
            entry.set_item("category", row.category.as_str())?;
            entry.set_item("agreement", row.agreement)?;
            entry.set_item("union_count", row.union_count)?;
            Ok(entry)
        })
        .collect::<PyResult<_>>()?;
    out.set_item("per_category", rows)?;
    Ok(out)
}

/// Confidence interval for a share of `n` observations, clipped to [0, 1].
#[pyfunction]
#[pyo3(signature = (share, n, *, confidence=0.95, method="normal"))]
fn interval(share: f64, n: u64, confidence: f64, method: &str) -> PyResult<(f64, f64)> {
    analyze::interval(share, n, confidence, parse_method(method)?).map_err(value_err)
}

/// Positive-label share per group with confidence bounds, ranked by share
/// descending (ties by name).
#[pyfunction]
#[pyo3(signature = (groups, labels, *, confidence=0.95, method="normal"))]
fn group_shares<'py>(
    py: Python<'py>,
    groups: Vec<String>,
    labels: Vec<u32>,
    confidence: f64,
    method: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let shares = analyze::group_shares(&groups, &labels, confidence, parse_method(method)?)
        .map_err(value_err)?;
    shares
        .iter()
        .map(|s| {
            let entry = PyDict::new(py);
            entry.set_item("rank", s.rank)?;
            entry.set_item("group", &s.group)?;
            entry.set_item("n_docs", s.n_docs)?;
            entry.set_item("n_positive", s.n_positive)?;
            entry.set_item("share", s.share)?;
            entry.set_item("lower", s.lower)?;
            entry.set_item("upper", s.upper)?;
            Ok(entry)
        })
        .collect()
}

#[pymodule]
fn repclass(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Cleaner>()?;
    m.add_class::<Corpus>()?;
    m.add_class::<DocTermMatrix>()?;
    m.add_class::<Model>()?;
    m.add_class::<CvResult>()?;
    m.add_function(wrap_pyfunction!(stem, m)?)?;
    m.add_function(wrap_pyfunction!(default_stopwords, m)?)?;
    m.add_function(wrap_pyfunction!(clean, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(agreement, m)?)?;
    m.add_function(wrap_pyfunction!(interval, m)?)?;
    m.add_function(wrap_pyfunction!(group_shares, m)?)?;
    Ok(())
}
