//! Classifier and regression evaluation.
//!
//! Everything reduces to the four cells of a binary confusion matrix. Ratios
//! with empty denominators (no predicted positives, no actual positives) are
//! reported as 0.0 with an explicit `*_defined = false` flag rather than NaN,
//! so downstream tables stay numeric and the caller can still tell the two
//! situations apart.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{truth} truth labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label at index {index} is {value}; binary metrics need 0 or 1")]
    NonBinaryLabel { index: usize, value: f64 },
    #[error("no label pairs to evaluate")]
    Empty,
}

/// Counts of prediction/truth combinations, positives first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

/// A benchmark tabulation of these exact cells circulates with a quoted
/// accuracy of 69.1%, while the cells themselves imply 70.0%; reports flag
/// the discrepancy so the two sources are not silently conflated.
const BENCHMARK_CELLS: ConfusionMatrix = ConfusionMatrix {
    true_pos: 13,
    false_pos: 2,
    false_neg: 16,
    true_neg: 29,
};

impl ConfusionMatrix {
    /// Tally truth/prediction pairs. Accepts any numeric label type; every
    /// value must be exactly 0 or 1.
    pub fn from_pairs<A, B>(truth: &[A], predicted: &[B]) -> Result<ConfusionMatrix, MetricsError>
    where
        A: Copy + Into<f64>,
        B: Copy + Into<f64>,
    {
        if truth.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                truth: truth.len(),
                predicted: predicted.len(),
            });
        }
        if truth.is_empty() {
            return Err(MetricsError::Empty);
        }
        let mut cells = ConfusionMatrix {
            true_pos: 0,
            false_pos: 0,
            false_neg: 0,
            true_neg: 0,
        };
        for (index, (&t, &p)) in truth.iter().zip(predicted).enumerate() {
            let t: f64 = t.into();
            let p: f64 = p.into();
            for value in [t, p] {
                if value != 0.0 && value != 1.0 {
                    return Err(MetricsError::NonBinaryLabel { index, value });
                }
            }
            match (t == 1.0, p == 1.0) {
                (true, true) => cells.true_pos += 1,
                (false, true) => cells.false_pos += 1,
                (true, false) => cells.false_neg += 1,
                (false, false) => cells.true_neg += 1,
            }
        }
        Ok(cells)
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }

    /// Share of the majority class: the accuracy of always predicting it.
    pub fn no_information_rate(&self) -> f64 {
        let positives = self.true_pos + self.false_neg;
        let negatives = self.false_pos + self.true_neg;
        positives.max(negatives) as f64 / self.total() as f64
    }

    /// Full report with definedness flags and any applicable footnotes.
    pub fn report(&self) -> EvalReport {
        let predicted_pos = self.true_pos + self.false_pos;
        let actual_pos = self.true_pos + self.false_neg;
        let (precision, precision_defined) = ratio(self.true_pos, predicted_pos);
        let (recall, recall_defined) = ratio(self.true_pos, actual_pos);
        let (f1, f1_defined) = if precision + recall > 0.0 {
            (2.0 * precision * recall / (precision + recall), true)
        } else {
            (0.0, false)
        };
        let mut footnotes = Vec::new();
        if *self == BENCHMARK_CELLS {
            footnotes.push(
                "these cells match a benchmark tabulation quoted with 69.1% accuracy; \
                 the cells themselves imply 70.0%"
                    .to_string(),
            );
        }
        EvalReport {
            cells: *self,
            accuracy: self.accuracy(),
            no_information_rate: self.no_information_rate(),
            precision,
            precision_defined,
            recall,
            recall_defined,
            f1,
            f1_defined,
            footnotes,
        }
    }
}

fn ratio(numerator: u64, denominator: u64) -> (f64, bool) {
    if denominator == 0 {
        (0.0, false)
    } else {
        (numerator as f64 / denominator as f64, true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cells: ConfusionMatrix,
    pub accuracy: f64,
    pub no_information_rate: f64,
    pub precision: f64,
    pub precision_defined: bool,
    pub recall: f64,
    pub recall_defined: bool,
    pub f1: f64,
    pub f1_defined: bool,
    pub footnotes: Vec<String>,
}

/// Mean squared error.
pub fn mse(truth: &[f64], predictions: &[f64]) -> Result<f64, MetricsError> {
    paired(truth, predictions)?;
    let n = truth.len() as f64;
    Ok(truth
        .iter()
        .zip(predictions)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / n)
}

/// Root mean squared error.
pub fn rmse(truth: &[f64], predictions: &[f64]) -> Result<f64, MetricsError> {
    Ok(mse(truth, predictions)?.sqrt())
}

/// Mean absolute error.
pub fn mae(truth: &[f64], predictions: &[f64]) -> Result<f64, MetricsError> {
    paired(truth, predictions)?;
    let n = truth.len() as f64;
    Ok(truth
        .iter()
        .zip(predictions)
        .map(|(t, p)| (t - p).abs())
        .sum::<f64>()
        / n)
}

fn paired(truth: &[f64], predictions: &[f64]) -> Result<(), MetricsError> {
    if truth.len() != predictions.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            predicted: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}
