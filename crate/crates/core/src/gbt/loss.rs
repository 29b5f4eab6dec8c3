//! Training losses and their derivatives.
//!
//! Boosting works on a raw additive score; for the logistic loss the score is
//! a log-odds that [`sigmoid`] maps to a probability, for the regression
//! losses the score is the prediction itself. Gradients and curvatures are
//! the true derivatives of [`Loss::evaluate_score`] with respect to the score,
//! so they can be checked against finite differences.

use serde::{Deserialize, Serialize};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Squared,
    Absolute,
    #[default]
    Logistic,
}

impl Loss {
    /// Per-example loss at a prediction: the squared or absolute residual, or
    /// the cross-entropy against a probability.
    pub fn evaluate(self, truth: f64, prediction: f64) -> f64 {
        match self {
            Loss::Squared => (truth - prediction).powi(2),
            Loss::Absolute => (truth - prediction).abs(),
            Loss::Logistic => {
                let p = clamp_prob(prediction);
                -(truth * p.ln() + (1.0 - truth) * (1.0 - p).ln())
            }
        }
    }

    /// Per-example loss at a raw score (log-odds for the logistic loss).
    pub fn evaluate_score(self, truth: f64, score: f64) -> f64 {
        match self {
            Loss::Logistic => self.evaluate(truth, sigmoid(score)),
            _ => self.evaluate(truth, score),
        }
    }

    /// d/dscore of [`Loss::evaluate_score`]. For the absolute loss this is the
    /// subgradient, zero exactly at the kink.
    pub fn gradient(self, truth: f64, score: f64) -> f64 {
        match self {
            Loss::Squared => 2.0 * (score - truth),
            Loss::Absolute => {
                if score == truth {
                    0.0
                } else {
                    (score - truth).signum()
                }
            }
            Loss::Logistic => sigmoid(score) - truth,
        }
    }

    /// d²/dscore² of [`Loss::evaluate_score`]. The absolute loss is flat away
    /// from the kink, so its curvature is zero; the trainer substitutes unit
    /// curvature when aggregating split statistics.
    pub fn curvature(self, _truth: f64, score: f64) -> f64 {
        match self {
            Loss::Squared => 2.0,
            Loss::Absolute => 0.0,
            Loss::Logistic => {
                let p = sigmoid(score);
                p * (1.0 - p)
            }
        }
    }

    /// Map a raw score to the reported prediction (probability for logistic).
    pub fn transform(self, score: f64) -> f64 {
        match self {
            Loss::Logistic => sigmoid(score),
            _ => score,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Loss::Squared => "squared",
            Loss::Absolute => "absolute",
            Loss::Logistic => "logistic",
        }
    }
}

impl std::fmt::Display for Loss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Loss {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "squared" => Ok(Loss::Squared),
            "absolute" => Ok(Loss::Absolute),
            "logistic" => Ok(Loss::Logistic),
            other => Err(format!(
                "unknown loss {other:?} (expected squared, absolute, or logistic)"
            )),
        }
    }
}

/// Mean of per-example score losses under example weights.
pub fn weighted_mean_loss(loss: Loss, truth: &[f64], scores: &[f64], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&y, &s), &w) in truth.iter().zip(scores).zip(weights) {
        num += w * loss.evaluate_score(y, s);
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}
