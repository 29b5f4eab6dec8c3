//! Corpus-scale labeling and per-group share estimates.
//!
//! Once a classifier is fit, the full corpus gets machine labels and each
//! group's positive share is reported with a binomial confidence interval.
//! The default interval is the normal approximation `p ± z·sqrt(p(1-p)/n)`
//! clipped to [0, 1]; the Wilson score interval is available for small
//! groups or extreme shares, where the approximation is loose.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::dtm;
use crate::gbt::{BoostedModel, GbtError};
use crate::textprep::CleanConfig;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error(
        "unsupported confidence level {given}; use 0.90, 0.95, or 0.99"
    )]
    UnsupportedConfidence { given: f64 },
    #[error("share {share} is not a proportion in [0, 1]")]
    InvalidShare { share: f64 },
    #[error("interval needs a positive sample size")]
    EmptySample,
    #[error("{groups} group names but {labels} labels")]
    LengthMismatch { groups: usize, labels: usize },
    #[error(transparent)]
    Gbt(#[from] GbtError),
}

/// Which binomial interval to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    #[default]
    Normal,
    Wilson,
}

/// Two-sided critical value for the supported confidence levels.
pub fn z_value(confidence: f64) -> Result<f64, AnalyzeError> {
    let table = [(0.90, 1.645), (0.95, 1.96), (0.99, 2.576)];
    for (level, z) in table {
        if (confidence - level).abs() < 1e-9 {
            return Ok(z);
        }
    }
    Err(AnalyzeError::UnsupportedConfidence { given: confidence })
}

/// Confidence interval for a binomial share, clipped to [0, 1].
pub fn interval(
    share: f64,
    n: u64,
    confidence: f64,
    method: IntervalMethod,
) -> Result<(f64, f64), AnalyzeError> {
    if n == 0 {
        return Err(AnalyzeError::EmptySample);
    }
    if !(0.0..=1.0).contains(&share) {
        return Err(AnalyzeError::InvalidShare { share });
    }
    let z = z_value(confidence)?;
    let n = n as f64;
    let (lower, upper) = match method {
        IntervalMethod::Normal => {
            let half = z * (share * (1.0 - share) / n).sqrt();
            (share - half, share + half)
        }
        IntervalMethod::Wilson => {
            let z2 = z * z;
            let denom = 1.0 + z2 / n;
            let center = (share + z2 / (2.0 * n)) / denom;
            let half = z * (share * (1.0 - share) / n + z2 / (4.0 * n * n)).sqrt() / denom;
            (center - half, center + half)
        }
    };
    Ok((lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0)))
}

/// One group's positive share and its interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupShare {
    /// 1-based position after sorting by share descending, name ascending.
    pub rank: u32,
    pub group: String,
    pub n_docs: u64,
    pub n_positive: u64,
    pub share: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Aggregate binary labels per group and rank the groups by positive share
/// (descending, ties broken by group name).
pub fn group_shares(
    groups: &[String],
    labels: &[u32],
    confidence: f64,
    method: IntervalMethod,
) -> Result<Vec<GroupShare>, AnalyzeError> {
    if groups.len() != labels.len() {
        return Err(AnalyzeError::LengthMismatch {
            groups: groups.len(),
            labels: labels.len(),
        });
    }
    z_value(confidence)?;
    let mut counts: std::collections::BTreeMap<&str, (u64, u64)> = Default::default();
    for (group, &label) in groups.iter().zip(labels) {
        let entry = counts.entry(group).or_insert((0, 0));
        entry.0 += 1;
        entry.1 += u64::from(label != 0);
    }
    let mut shares: Vec<GroupShare> = counts
        .into_iter()
        .map(|(group, (n_docs, n_positive))| {
            let share = n_positive as f64 / n_docs as f64;
            let (lower, upper) = interval(share, n_docs, confidence, method)?;
            Ok(GroupShare {
                rank: 0,
                group: group.to_string(),
                n_docs,
                n_positive,
                share,
                lower,
                upper,
            })
        })
        .collect::<Result<_, AnalyzeError>>()?;
    shares.sort_by(|a, b| {
        b.share
            .partial_cmp(&a.share)
            .expect("shares are finite")
            .then_with(|| a.group.cmp(&b.group))
    });
    for (i, share) in shares.iter_mut().enumerate() {
        share.rank = i as u32 + 1;
    }
    Ok(shares)
}

/// Positive-class probability for every document: clean, project onto the
/// model's own vocabulary, and score. Documents are processed in parallel
/// but returned in corpus order.
pub fn score_corpus(
    corpus: &Corpus,
    model: &BoostedModel,
    clean: &CleanConfig,
) -> Result<Vec<f64>, AnalyzeError> {
    let rows: Vec<dtm::SparseRow> = corpus
        .docs
        .par_iter()
        .map(|d| {
            let (tokens, _) = crate::textprep::clean_lossy(d.doc.text.as_bytes(), clean);
            dtm::project(&tokens, &model.vocabulary)
        })
        .collect();
    Ok(model.predict_proba(&rows)?)
}

/// Machine-label every document: [`score_corpus`] thresholded by the model.
pub fn classify_corpus(
    corpus: &Corpus,
    model: &BoostedModel,
    clean: &CleanConfig,
) -> Result<Vec<u32>, AnalyzeError> {
    Ok(score_corpus(corpus, model, clean)?
        .into_iter()
        .map(|p| model.label_from_proba(p))
        .collect())
}

/// Like [`classify_corpus`] for an already-built matrix. The matrix must
/// carry the vocabulary the model was trained on; the fingerprints are
/// compared to catch silent misalignment.
pub fn classify_matrix(
    matrix: &dtm::DocTermMatrix,
    model: &BoostedModel,
) -> Result<Vec<u32>, AnalyzeError> {
    let found = matrix.vocab.fingerprint();
    if found != model.vocab_fingerprint {
        return Err(AnalyzeError::Gbt(GbtError::FingerprintMismatch {
            expected: model.vocab_fingerprint.clone(),
            found,
        }));
    }
    Ok(model.predict_label(&matrix.rows)?)
}
