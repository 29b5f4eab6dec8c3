//! Boosting loop: stagewise tree fitting on gradient statistics.

use serde::{Deserialize, Serialize};

use super::loss::{weighted_mean_loss, Loss, PROB_CLAMP};
use super::model::{BoostedModel, TrainingCurve, MODEL_FORMAT_VERSION};
use super::tree::{grow_tree, weighted_median, ColumnIndex, LeafFit, Tree};
use super::GbtError;
use crate::dtm::DocTermMatrix;

/// Knobs for one training run. The defaults are the ones every command-line
/// entry point starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub loss: Loss,
    /// Number of boosting rounds (trees). Zero yields a base-score-only model.
    pub n_rounds: u32,
    pub learning_rate: f64,
    pub max_depth: u32,
    /// Minimum curvature sum a node and each of its children must keep.
    pub min_node_weight: f64,
    /// Weight multiplier for positive examples under the logistic loss.
    /// `None` resolves to `negatives / positives` so both classes carry
    /// equal total weight; the resolved value is stored in the fitted model.
    pub positive_class_weight: Option<f64>,
    /// Probability cut for labeling: positive when strictly above.
    pub threshold: f64,
    /// Seed for every randomized step downstream (fold shuffling).
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            loss: Loss::default(),
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            min_node_weight: 1.0,
            positive_class_weight: None,
            threshold: 0.5,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<(), GbtError> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(GbtError::InvalidParam {
                what: format!(
                    "learning_rate must lie in (0, 1], got {}",
                    self.learning_rate
                ),
            });
        }
        if self.max_depth == 0 {
            return Err(GbtError::InvalidParam {
                what: "max_depth must be at least 1".into(),
            });
        }
        if !(self.min_node_weight >= 0.0 && self.min_node_weight.is_finite()) {
            return Err(GbtError::InvalidParam {
                what: format!(
                    "min_node_weight must be finite and non-negative, got {}",
                    self.min_node_weight
                ),
            });
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(GbtError::InvalidParam {
                what: format!("threshold must lie in (0, 1), got {}", self.threshold),
            });
        }
        if let Some(w) = self.positive_class_weight {
            if !(w > 0.0 && w.is_finite()) {
                return Err(GbtError::InvalidParam {
                    what: format!(
                        "positive_class_weight must be finite and positive, got {w}"
                    ),
                });
            }
            if self.loss != Loss::Logistic {
                return Err(GbtError::InvalidParam {
                    what: "positive_class_weight requires the logistic loss".into(),
                });
            }
        }
        Ok(())
    }
}

/// Fit a boosted model, scanning split candidates in parallel.
pub fn train(
    matrix: &DocTermMatrix,
    labels: &[f64],
    params: &TrainParams,
) -> Result<BoostedModel, GbtError> {
    train_with(matrix, labels, None, params, true)
}

/// Fit a boosted model with full control: an optional held-out set tracked in
/// the loss curve, and a switch between the parallel and serial candidate
/// scans (both produce bit-identical models).
pub fn train_with(
    matrix: &DocTermMatrix,
    labels: &[f64],
    holdout: Option<(&DocTermMatrix, &[f64])>,
    params: &TrainParams,
    parallel: bool,
) -> Result<BoostedModel, GbtError> {
    params.validate()?;
    let n = matrix.n_docs();
    if n == 0 {
        return Err(GbtError::EmptyTrainingSet);
    }
    if labels.len() != n {
        return Err(GbtError::LengthMismatch {
            rows: n,
            labels: labels.len(),
        });
    }
    check_rows(matrix)?;
    check_labels(params.loss, labels)?;
    if params.loss == Loss::Logistic {
        let positives = labels.iter().filter(|&&y| y == 1.0).count();
        if positives == 0 || positives == n {
            return Err(GbtError::SingleClass);
        }
    }
    if let Some((held_matrix, held_labels)) = holdout {
        if held_labels.len() != held_matrix.n_docs() {
            return Err(GbtError::LengthMismatch {
                rows: held_matrix.n_docs(),
                labels: held_labels.len(),
            });
        }
        check_rows(held_matrix)?;
        check_labels(params.loss, held_labels)?;
        let expected = matrix.vocab.fingerprint();
        let found = held_matrix.vocab.fingerprint();
        if expected != found {
            return Err(GbtError::FingerprintMismatch { expected, found });
        }
    }

    // Resolve the class weight once and persist it so a reloaded model does
    // not depend on the training labels to reproduce its own weighting.
    let mut stored = params.clone();
    let weights: Vec<f64> = if params.loss == Loss::Logistic {
        let positives = labels.iter().filter(|&&y| y == 1.0).count() as f64;
        let negatives = n as f64 - positives;
        let w = params.positive_class_weight.unwrap_or(negatives / positives);
        stored.positive_class_weight = Some(w);
        labels.iter().map(|&y| if y == 1.0 { w } else { 1.0 }).collect()
    } else {
        vec![1.0; n]
    };
    let held_weights: Option<Vec<f64>> = holdout.map(|(_, held_labels)| {
        let w = stored.positive_class_weight.unwrap_or(1.0);
        if params.loss == Loss::Logistic {
            held_labels
                .iter()
                .map(|&y| if y == 1.0 { w } else { 1.0 })
                .collect()
        } else {
            vec![1.0; held_labels.len()]
        }
    });

    let base_score = base_score(params.loss, labels, &weights);
    let mut scores = vec![base_score; n];
    let mut held_scores: Option<Vec<f64>> =
        holdout.map(|(held_matrix, _)| vec![base_score; held_matrix.n_docs()]);

    let columns = ColumnIndex::new(&matrix.rows, matrix.n_terms());
    let mut trees: Vec<Tree> = Vec::with_capacity(params.n_rounds as usize);
    let mut train_curve = Vec::with_capacity(params.n_rounds as usize);
    let mut holdout_curve: Option<Vec<f64>> = holdout.map(|_| Vec::new());

    let mut grad = vec![0.0; n];
    let mut curv = vec![0.0; n];
    let mut residuals = vec![0.0; n];
    for _ in 0..params.n_rounds {
        for i in 0..n {
            grad[i] = weights[i] * params.loss.gradient(labels[i], scores[i]);
            // The absolute loss has no usable curvature; unit curvature turns
            // the split statistics into weighted sign averages and the leaves
            // are refit by median below.
            curv[i] = match params.loss {
                Loss::Absolute => weights[i],
                _ => weights[i] * params.loss.curvature(labels[i], scores[i]),
            };
        }
        let leaf_fit = match params.loss {
            Loss::Absolute => {
                for i in 0..n {
                    residuals[i] = labels[i] - scores[i];
                }
                LeafFit::WeightedMedian {
                    residuals: &residuals,
                    weights: &weights,
                }
            }
            _ => LeafFit::Newton,
        };
        let tree = grow_tree(
            &columns,
            n,
            &grad,
            &curv,
            leaf_fit,
            params.max_depth,
            params.min_node_weight,
            parallel,
        );
        for (score, row) in scores.iter_mut().zip(&matrix.rows) {
            *score += params.learning_rate * tree.predict_row(row);
        }
        train_curve.push(weighted_mean_loss(params.loss, labels, &scores, &weights));
        if let (Some(held_scores), Some((held_matrix, held_labels)), Some(held_weights)) =
            (&mut held_scores, holdout, &held_weights)
        {
            for (score, row) in held_scores.iter_mut().zip(&held_matrix.rows) {
                *score += params.learning_rate * tree.predict_row(row);
            }
            holdout_curve.as_mut().expect("holdout curve").push(
                weighted_mean_loss(params.loss, held_labels, held_scores, held_weights),
            );
        }
        trees.push(tree);
    }

    Ok(BoostedModel {
        format_version: MODEL_FORMAT_VERSION,
        params: stored,
        base_score,
        vocab_fingerprint: matrix.vocab.fingerprint(),
        vocabulary: matrix.vocab.clone(),
        trees,
        curve: TrainingCurve {
            train: train_curve,
            holdout: holdout_curve,
        },
    })
}

fn check_rows(matrix: &DocTermMatrix) -> Result<(), GbtError> {
    let n_terms = matrix.n_terms();
    for (r, row) in matrix.rows.iter().enumerate() {
        if let Some(&(term, _)) = row.iter().find(|&&(c, _)| c as usize >= n_terms) {
            return Err(GbtError::TermOutOfRange {
                row: r,
                term,
                n_terms,
            });
        }
    }
    Ok(())
}

fn check_labels(loss: Loss, labels: &[f64]) -> Result<(), GbtError> {
    for (i, &y) in labels.iter().enumerate() {
        if !y.is_finite() {
            return Err(GbtError::NonFiniteLabel { index: i, value: y });
        }
        if loss == Loss::Logistic && y != 0.0 && y != 1.0 {
            return Err(GbtError::NonBinaryLabel { index: i, value: y });
        }
    }
    Ok(())
}

/// The constant model minimizing the weighted loss: mean for squared, lower
/// weighted median for absolute, log-odds of the weighted prevalence for
/// logistic.
fn base_score(loss: Loss, labels: &[f64], weights: &[f64]) -> f64 {
    match loss {
        Loss::Squared => {
            let total: f64 = weights.iter().sum();
            let mean: f64 = labels.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total;
            mean
        }
        Loss::Absolute => {
            let rows: Vec<u32> = (0..labels.len() as u32).collect();
            weighted_median(&rows, labels, weights)
        }
        Loss::Logistic => {
            let total: f64 = weights.iter().sum();
            let p = labels.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total;
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            (p / (1.0 - p)).ln()
        }
    }
}
