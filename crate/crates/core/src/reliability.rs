//! Intercoder reliability between two hand-coded label sheets.
//!
//! Agreement is computed over the documents both coders labeled. The overall
//! rate is plain percent agreement on that intersection. Per-category rates
//! restrict to the documents where at least one of the two coders used the
//! category — the union denominator — so a category neither coder touched on
//! a document does not inflate its agreement. Chance-corrected agreement is
//! Cohen's kappa with marginals estimated from the same intersection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Category, Corpus};

#[derive(Debug, Error)]
pub enum ReliabilityError {
    #[error("the two sheets share no document ids")]
    EmptyIntersection,
    #[error("coder {coder:?} labeled no documents in the corpus")]
    EmptySheet { coder: String },
}

/// One coder's labels, keyed by document id. Ordered so iteration (and
/// everything derived from it) is deterministic.
pub type CodingSheet = BTreeMap<String, Category>;

/// Extract one coder's sheet from a corpus, keeping only the documents that
/// coder labeled.
pub fn sheet_from_corpus(corpus: &Corpus, coder: &str) -> Result<CodingSheet, ReliabilityError> {
    let sheet: CodingSheet = corpus
        .docs
        .iter()
        .filter_map(|d| d.label_by(coder).map(|c| (d.doc.id.clone(), c)))
        .collect();
    if sheet.is_empty() {
        return Err(ReliabilityError::EmptySheet {
            coder: coder.to_string(),
        });
    }
    Ok(sheet)
}

/// Label pairs on the shared documents, in id order.
fn shared_pairs(a: &CodingSheet, b: &CodingSheet) -> Vec<(Category, Category)> {
    a.iter()
        .filter_map(|(id, &ca)| b.get(id).map(|&cb| (ca, cb)))
        .collect()
}

/// Fraction of shared documents on which the coders agree.
pub fn overall_agreement(a: &CodingSheet, b: &CodingSheet) -> Result<f64, ReliabilityError> {
    let pairs = shared_pairs(a, b);
    if pairs.is_empty() {
        return Err(ReliabilityError::EmptyIntersection);
    }
    let matches = pairs.iter().filter(|(ca, cb)| ca == cb).count();
    Ok(matches as f64 / pairs.len() as f64)
}

/// Agreement on one category over the documents where either coder used it:
/// `|both used it| / |either used it|`. `None` when neither coder used the
/// category on any shared document.
pub fn category_agreement(
    a: &CodingSheet,
    b: &CodingSheet,
    category: Category,
) -> Result<Option<f64>, ReliabilityError> {
    let pairs = shared_pairs(a, b);
    if pairs.is_empty() {
        return Err(ReliabilityError::EmptyIntersection);
    }
    let (matches, union) = category_cells(&pairs, category);
    Ok((union > 0).then(|| matches as f64 / union as f64))
}

fn category_cells(pairs: &[(Category, Category)], category: Category) -> (u64, u64) {
    let mut matches = 0;
    let mut union = 0;
    for &(ca, cb) in pairs {
        let in_a = ca == category;
        let in_b = cb == category;
        if in_a || in_b {
            union += 1;
        }
        if in_a && in_b {
            matches += 1;
        }
    }
    (matches, union)
}

/// Cohen's kappa over the shared documents.
pub fn cohen_kappa(a: &CodingSheet, b: &CodingSheet) -> Result<f64, ReliabilityError> {
    let pairs = shared_pairs(a, b);
    if pairs.is_empty() {
        return Err(ReliabilityError::EmptyIntersection);
    }
    let n = pairs.len() as f64;
    let observed = pairs.iter().filter(|(ca, cb)| ca == cb).count() as f64 / n;
    let mut expected = 0.0;
    for category in Category::ALL {
        let pa = pairs.iter().filter(|(ca, _)| *ca == category).count() as f64 / n;
        let pb = pairs.iter().filter(|(_, cb)| *cb == category).count() as f64 / n;
        expected += pa * pb;
    }
    // Degenerate marginals (everything in one identical category) force
    // observed == expected == 1; call that perfect agreement.
    if expected >= 1.0 - 1e-12 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Agreement for one category, with the union count backing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAgreement {
    pub category: Category,
    pub agreement: f64,
    /// Shared documents where at least one coder used the category.
    pub union_count: u64,
}

/// Everything about one coder pair in a single pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Shared documents the rates are computed over.
    pub n_shared: u64,
    pub overall: f64,
    pub kappa: f64,
    /// One row per category either coder used, in category declaration order.
    pub per_category: Vec<CategoryAgreement>,
}

pub fn agreement_report(
    a: &CodingSheet,
    b: &CodingSheet,
) -> Result<AgreementReport, ReliabilityError> {
    let pairs = shared_pairs(a, b);
    if pairs.is_empty() {
        return Err(ReliabilityError::EmptyIntersection);
    }
    let per_category = Category::ALL
        .into_iter()
        .filter_map(|category| {
            let (matches, union) = category_cells(&pairs, category);
            (union > 0).then(|| CategoryAgreement {
                category,
                agreement: matches as f64 / union as f64,
                union_count: union,
            })
        })
        .collect();
    Ok(AgreementReport {
        n_shared: pairs.len() as u64,
        overall: overall_agreement(a, b)?,
        kappa: cohen_kappa(a, b)?,
        per_category,
    })
}
