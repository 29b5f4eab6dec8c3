//! Documents, hand-coded labels, and corpus-level operations.
//!
//! A corpus is an ordered set of documents with unique ids; each document may
//! carry labels from several coders (at most one per coder). Corpora load
//! from RFC-4180 CSV with a configurable column mapping and re-emit to the
//! same schema. Sampling and train/test splitting are seeded: both shuffle
//! with a ChaCha8 generator keyed by the caller's seed, so a given
//! (data, seed) pair reproduces exactly.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::textprep::{clean_lossy, CleanConfig};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("missing required column {name:?}")]
    MissingColumn { name: String },
    #[error("label column {label:?} is mapped but coder column is not")]
    LabelWithoutCoder { label: String },
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: unknown category {value:?}")]
    UnknownCategory { row: usize, value: String },
    #[error("row {row}: duplicate id {id:?} for coder {coder:?}")]
    DuplicateLabel { row: usize, id: String, coder: String },
    #[error("row {row}: id {id:?} reappears with different text or group")]
    ConflictingDuplicate { row: usize, id: String },
    #[error("document {id:?} has no label from coder {coder:?}")]
    MissingLabel { id: String, coder: String },
    #[error("sample size {n} out of range (corpus has {size} documents)")]
    SampleSize { n: usize, size: usize },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    TrainFraction(f64),
}

/// The five hand-coding categories.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
pub enum Category {
    Performative,
    Moral,
    Procedural,
    Technical,
    None,
}

impl Category {
    /// All categories in their fixed reporting order.
    pub const ALL: [Category; 5] = [
        Category::Performative,
        Category::Moral,
        Category::Procedural,
        Category::Technical,
        Category::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Performative => "Performative",
            Category::Moral => "Moral",
            Category::Procedural => "Procedural",
            Category::Technical => "Technical",
            Category::None => "None",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    /// Case-insensitive, whitespace-tolerant parse ("Moral ", "moral").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "performative" => Ok(Category::Performative),
            "moral" => Ok(Category::Moral),
            "procedural" => Ok(Category::Procedural),
            "technical" => Ok(Category::Technical),
            "none" => Ok(Category::None),
            other => Err(other.to_string()),
        }
    }
}

/// One coder's category assignment for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub coder: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub group: String,
    pub text: String,
}

/// A document plus its labels, at most one per coder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDocument {
    pub doc: Document,
    pub labels: Vec<Label>,
}

impl LabeledDocument {
    /// The category `coder` assigned, if any.
    pub fn label_by(&self, coder: &str) -> Option<Category> {
        self.labels
            .iter()
            .find(|l| l.coder == coder)
            .map(|l| l.category)
    }
}

/// Ordered documents with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub docs: Vec<LabeledDocument>,
    /// Invalid UTF-8 sequences replaced while loading text fields.
    pub utf8_replacements: usize,
}

/// Maps the fixed corpus schema onto a file's column names. Label and coder
/// are optional as a pair: mapping a label column without a coder column is
/// rejected at load time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub id: String,
    pub group: String,
    pub text: String,
    pub label: Option<String>,
    pub coder: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            id: "id".into(),
            group: "group".into(),
            text: "text".into(),
            label: Some("label".into()),
            coder: Some("coder".into()),
        }
    }
}

/// Seeded split specification: `train = floor(fraction * n)` documents after
/// a full shuffle, the rest are the test side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// All coder names appearing in any label, sorted.
    pub fn coders(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .docs
            .iter()
            .flat_map(|d| d.labels.iter().map(|l| l.coder.as_str()))
            .collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// All group names, sorted.
    pub fn groups(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.docs.iter().map(|d| d.doc.group.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Clean every document text with the same configuration.
    pub fn clean_texts(&self, config: &CleanConfig) -> Vec<Vec<String>> {
        self.docs
            .iter()
            .map(|d| clean_lossy(d.doc.text.as_bytes(), config).0)
            .collect()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.doc.id.clone()).collect()
    }
}

/// Unwrap IO failures hidden inside csv errors so callers can tell an
/// unreadable file apart from malformed contents.
fn csv_error(path: &Path, source: csv::Error) -> CorpusError {
    if source.is_io_error() {
        match source.into_kind() {
            csv::ErrorKind::Io(source) => CorpusError::Io {
                path: path.to_path_buf(),
                source,
            },
            _ => unreachable!("is_io_error guarantees an IO kind"),
        }
    } else {
        CorpusError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Load a corpus from CSV.
///
/// One document per distinct id, in first-appearance order. A repeated id is
/// accepted only when text and group are identical and the row contributes a
/// label from a coder not yet seen for that document — that is how multi-coder
/// sheets are stored in a flat file. Text fields tolerate invalid UTF-8
/// (sequences are replaced and counted); all other fields must be valid.
pub fn load_csv(path: &Path, columns: &ColumnMap) -> Result<Corpus, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|source| csv_error(path, source))?;

    let headers = reader
        .headers()
        .map_err(|source| csv_error(path, source))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = find(&columns.id).ok_or_else(|| CorpusError::MissingColumn {
        name: columns.id.clone(),
    })?;
    let group_col = find(&columns.group).ok_or_else(|| CorpusError::MissingColumn {
        name: columns.group.clone(),
    })?;
    let text_col = find(&columns.text).ok_or_else(|| CorpusError::MissingColumn {
        name: columns.text.clone(),
    })?;
    // Label/coder are attached only when both columns are present; a default
    // mapping quietly tolerates their absence, an explicit one does not.
    let default_map = ColumnMap::default();
    let label_col = match &columns.label {
        Some(name) => match find(name) {
            Some(i) => Some(i),
            None if columns.label == default_map.label => None,
            None => return Err(CorpusError::MissingColumn { name: name.clone() }),
        },
        None => None,
    };
    let coder_col = match &columns.coder {
        Some(name) => match find(name) {
            Some(i) => Some(i),
            None if columns.coder == default_map.coder => None,
            None => return Err(CorpusError::MissingColumn { name: name.clone() }),
        },
        None => None,
    };
    if let (Some(_), None) = (label_col, coder_col) {
        return Err(CorpusError::LabelWithoutCoder {
            label: columns.label.clone().unwrap_or_default(),
        });
    }

    let mut docs: Vec<LabeledDocument> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut utf8_replacements = 0usize;
    let mut record = csv::ByteRecord::new();
    let mut row = 1usize; // header is row 1
    loop {
        match reader.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(source) => return Err(csv_error(path, source)),
        }
        row += 1;
        let strict = |col: usize, what: &str| -> Result<String, CorpusError> {
            let bytes = record.get(col).unwrap_or_default();
            String::from_utf8(bytes.to_vec()).map_err(|_| CorpusError::MalformedRow {
                row,
                reason: format!("{what} field is not valid UTF-8"),
            })
        };
        let id = strict(id_col, "id")?;
        if id.trim().is_empty() {
            return Err(CorpusError::MalformedRow {
                row,
                reason: "empty id".into(),
            });
        }
        let group = strict(group_col, "group")?;
        let text_bytes = record.get(text_col).unwrap_or_default();
        let text = match std::str::from_utf8(text_bytes) {
            Ok(valid) => valid.to_string(),
            Err(_) => {
                let lossy = String::from_utf8_lossy(text_bytes).into_owned();
                utf8_replacements += lossy.matches('\u{FFFD}').count();
                lossy
            }
        };

        let label = match (label_col, coder_col) {
            (Some(lc), Some(cc)) => {
                let raw = strict(lc, "label")?;
                if raw.trim().is_empty() {
                    None
                } else {
                    let category = Category::from_str(&raw)
                        .map_err(|value| CorpusError::UnknownCategory { row, value })?;
                    let coder = strict(cc, "coder")?;
                    if coder.trim().is_empty() {
                        return Err(CorpusError::MalformedRow {
                            row,
                            reason: "label present but coder empty".into(),
                        });
                    }
                    Some(Label {
                        coder: coder.trim().to_string(),
                        category,
                    })
                }
            }
            _ => None,
        };

        match index_of.entry(id.clone()) {
            Entry::Vacant(slot) => {
                slot.insert(docs.len());
                docs.push(LabeledDocument {
                    doc: Document { id, group, text },
                    labels: label.into_iter().collect(),
                });
            }
            Entry::Occupied(slot) => {
                let existing = &mut docs[*slot.get()];
                if existing.doc.group != group || existing.doc.text != text {
                    return Err(CorpusError::ConflictingDuplicate { row, id });
                }
                let Some(label) = label else {
                    return Err(CorpusError::DuplicateLabel {
                        row,
                        id,
                        coder: String::new(),
                    });
                };
                if existing.label_by(&label.coder).is_some() {
                    return Err(CorpusError::DuplicateLabel {
                        row,
                        id,
                        coder: label.coder,
                    });
                }
                existing.labels.push(label);
            }
        }
    }

    Ok(Corpus {
        docs,
        utf8_replacements,
    })
}

/// Re-emit a corpus to the same CSV schema: one row per label, or a single
/// row with empty label/coder for unlabeled documents.
pub fn write_csv(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let mut writer = csv::Writer::from_path(path).map_err(|source| CorpusError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let io_err = |source: csv::Error| CorpusError::Csv {
        path: path.to_path_buf(),
        source,
    };
    writer
        .write_record(["id", "group", "text", "label", "coder"])
        .map_err(io_err)?;
    for doc in &corpus.docs {
        if doc.labels.is_empty() {
            writer
                .write_record([&doc.doc.id, &doc.doc.group, &doc.doc.text, "", ""])
                .map_err(io_err)?;
        } else {
            for label in &doc.labels {
                writer
                    .write_record([
                        doc.doc.id.as_str(),
                        doc.doc.group.as_str(),
                        doc.doc.text.as_str(),
                        label.category.as_str(),
                        label.coder.as_str(),
                    ])
                    .map_err(io_err)?;
            }
        }
    }
    writer.flush().map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Draw `n` distinct documents uniformly at random, keeping corpus order.
pub fn sample(corpus: &Corpus, n: usize, seed: u64) -> Result<Corpus, CorpusError> {
    if n == 0 || n > corpus.len() {
        return Err(CorpusError::SampleSize {
            n,
            size: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    indices.shuffle(&mut rng);
    let mut chosen: Vec<usize> = indices.into_iter().take(n).collect();
    chosen.sort_unstable();
    Ok(Corpus {
        docs: chosen.into_iter().map(|i| corpus.docs[i].clone()).collect(),
        utf8_replacements: 0,
    })
}

/// Split into train and test by seeded shuffle; sizes are
/// `floor(fraction * n)` and the remainder.
pub fn split(corpus: &Corpus, spec: SplitSpec) -> Result<(Corpus, Corpus), CorpusError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(CorpusError::TrainFraction(spec.train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    indices.shuffle(&mut rng);
    let train_n = (spec.train_fraction * corpus.len() as f64).floor() as usize;
    let pick = |idx: &[usize]| Corpus {
        docs: idx.iter().map(|&i| corpus.docs[i].clone()).collect(),
        utf8_replacements: 0,
    };
    Ok((pick(&indices[..train_n]), pick(&indices[train_n..])))
}

/// 1 if `coder` assigned `target` to the document, 0 if they assigned another
/// category, error if they did not label it.
pub fn binarize(
    doc: &LabeledDocument,
    target: Category,
    coder: &str,
) -> Result<u8, CorpusError> {
    match doc.label_by(coder) {
        Some(category) => Ok(u8::from(category == target)),
        None => Err(CorpusError::MissingLabel {
            id: doc.doc.id.clone(),
            coder: coder.to_string(),
        }),
    }
}

/// [`binarize`] across a whole corpus, as the float labels the trainer takes.
pub fn binary_labels(
    corpus: &Corpus,
    target: Category,
    coder: &str,
) -> Result<Vec<f64>, CorpusError> {
    corpus
        .docs
        .iter()
        .map(|d| binarize(d, target, coder).map(f64::from))
        .collect()
}
