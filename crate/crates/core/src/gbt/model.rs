//! Fitted model: scoring, persistence, and inspection views.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::loss::{sigmoid, Loss};
use super::train::TrainParams;
use super::tree::Tree;
use super::GbtError;
use crate::dtm::{SparseRow, Vocabulary};

/// Bumped only when the on-disk JSON layout changes incompatibly.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-round mean loss, weighted the same way training was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub train: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout: Option<Vec<f64>>,
}

impl TrainingCurve {
    /// One-based round with the lowest held-out loss, earliest on ties.
    /// `None` when no held-out set was tracked or no rounds were run.
    pub fn best_iteration(&self) -> Option<u32> {
        let holdout = self.holdout.as_ref()?;
        let mut best: Option<(u32, f64)> = None;
        for (i, &loss) in holdout.iter().enumerate() {
            let round = i as u32 + 1;
            if best.is_none_or(|(_, current)| loss < current) {
                best = Some((round, loss));
            }
        }
        best.map(|(round, _)| round)
    }
}

/// A boosted additive model over term-presence trees. The vocabulary rides
/// along so new text can be projected without the training artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub format_version: u32,
    pub params: TrainParams,
    pub base_score: f64,
    pub vocab_fingerprint: String,
    pub vocabulary: Vocabulary,
    pub trees: Vec<Tree>,
    pub curve: TrainingCurve,
}

/// What each tree would say on its own about one document: the probability
/// implied by that single tree added to the base score, and whether it votes
/// past the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PerTreeView {
    pub probabilities: Vec<f64>,
    pub votes: Vec<bool>,
    pub positive_votes: u32,
    pub vote_share: f64,
    /// Strict-majority label; a tie counts as negative.
    pub majority_label: u32,
}

impl BoostedModel {
    pub fn loss(&self) -> Loss {
        self.params.loss
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Raw additive score for one sparse row.
    pub fn score_row(&self, row: &[(u32, u32)]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        self.base_score + self.params.learning_rate * sum
    }

    /// Raw scores for a batch of rows.
    pub fn predict_score(&self, rows: &[SparseRow]) -> Vec<f64> {
        rows.iter().map(|r| self.score_row(r)).collect()
    }

    /// Positive-class probabilities; only the logistic loss defines them.
    pub fn predict_proba(&self, rows: &[SparseRow]) -> Result<Vec<f64>, GbtError> {
        self.require_logistic()?;
        Ok(rows.iter().map(|r| sigmoid(self.score_row(r))).collect())
    }

    /// The label a probability maps to: positive when strictly above the
    /// threshold stored in the parameters.
    pub fn label_from_proba(&self, probability: f64) -> u32 {
        u32::from(probability > self.params.threshold)
    }

    /// Hard labels for a batch of rows, via [`Self::label_from_proba`].
    pub fn predict_label(&self, rows: &[SparseRow]) -> Result<Vec<u32>, GbtError> {
        Ok(self
            .predict_proba(rows)?
            .into_iter()
            .map(|p| self.label_from_proba(p))
            .collect())
    }

    /// Break one prediction apart into per-tree votes.
    pub fn per_tree_view(&self, row: &[(u32, u32)]) -> Result<PerTreeView, GbtError> {
        self.require_logistic()?;
        let threshold = self.params.threshold;
        let probabilities: Vec<f64> = self
            .trees
            .iter()
            .map(|t| sigmoid(self.base_score + self.params.learning_rate * t.predict_row(row)))
            .collect();
        let votes: Vec<bool> = probabilities.iter().map(|&p| p > threshold).collect();
        let positive_votes = votes.iter().filter(|&&v| v).count() as u32;
        let n = votes.len() as u32;
        let vote_share = if n == 0 {
            0.0
        } else {
            f64::from(positive_votes) / f64::from(n)
        };
        let majority_label = u32::from(2 * positive_votes > n);
        Ok(PerTreeView {
            probabilities,
            votes,
            positive_votes,
            vote_share,
            majority_label,
        })
    }

    /// Terms ranked by mean split gain, descending; ties break on the term
    /// string ascending. Terms never split on are omitted.
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        let n_terms = self.vocabulary.len();
        let mut gain_sum = vec![0.0f64; n_terms];
        let mut splits = vec![0u32; n_terms];
        for tree in &self.trees {
            for (term, gain) in tree.split_gains() {
                gain_sum[term as usize] += gain;
                splits[term as usize] += 1;
            }
        }
        let mut ranked: Vec<(String, f64)> = (0..n_terms)
            .filter(|&i| splits[i] > 0)
            .map(|i| {
                (
                    self.vocabulary.term(i).to_string(),
                    gain_sum[i] / f64::from(splits[i]),
                )
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite gains")
                .then_with(|| a.0.cmp(&b.0))
        });
        ranked
    }

    /// Serialize to pretty JSON. Field order is fixed by the struct layout,
    /// so identical models produce identical bytes.
    pub fn to_json(&self) -> Result<String, GbtError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn save(&self, path: &Path) -> Result<(), GbtError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<BoostedModel, GbtError> {
        let model: BoostedModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(GbtError::FormatVersion {
                found: model.format_version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        let recomputed = model.vocabulary.fingerprint();
        if recomputed != model.vocab_fingerprint {
            return Err(GbtError::FingerprintMismatch {
                expected: model.vocab_fingerprint,
                found: recomputed,
            });
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<BoostedModel, GbtError> {
        BoostedModel::from_json(&fs::read_to_string(path)?)
    }

    fn require_logistic(&self) -> Result<(), GbtError> {
        if self.params.loss == Loss::Logistic {
            Ok(())
        } else {
            Err(GbtError::ProbabilityRequiresLogistic {
                loss: self.params.loss,
            })
        }
    }
}
