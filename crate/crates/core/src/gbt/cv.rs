//! Cross-validated early stopping: pick the boosting round that minimizes the
//! fold-mean held-out loss, then refit on everything with that many rounds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::Loss;
use super::model::BoostedModel;
use super::train::{train_with, TrainParams};
use super::GbtError;
use crate::dtm::DocTermMatrix;

/// How many reshuffles to attempt before giving up on folds that cover both
/// classes.
const MAX_FOLD_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone)]
pub struct CvResult {
    /// Model refit on all rows with `best_iteration` rounds.
    pub model: BoostedModel,
    /// Held-out loss per round, one curve per fold.
    pub fold_curves: Vec<Vec<f64>>,
    /// Unweighted mean of the fold curves, round by round.
    pub mean_curve: Vec<f64>,
    /// One-based round minimizing `mean_curve`, earliest on ties.
    pub best_iteration: u32,
}

/// `cross_validate` with the parallel candidate scan.
pub fn cross_validate(
    matrix: &DocTermMatrix,
    labels: &[f64],
    params: &TrainParams,
    k: usize,
) -> Result<CvResult, GbtError> {
    cross_validate_with(matrix, labels, params, k, true)
}

/// Run k-fold early stopping. Folds are a seeded shuffle of the row order cut
/// into `k` nearly equal parts (the first `n % k` folds take one extra row).
/// Under the logistic loss every fold must contain both classes; the shuffle
/// is retried with stepped seeds a bounded number of times before failing.
pub fn cross_validate_with(
    matrix: &DocTermMatrix,
    labels: &[f64],
    params: &TrainParams,
    k: usize,
    parallel: bool,
) -> Result<CvResult, GbtError> {
    params.validate()?;
    if k < 2 {
        return Err(GbtError::InvalidFoldCount { k });
    }
    let n = matrix.n_docs();
    if n < k {
        return Err(GbtError::InvalidFoldCount { k });
    }
    if labels.len() != n {
        return Err(GbtError::LengthMismatch {
            rows: n,
            labels: labels.len(),
        });
    }
    if params.n_rounds == 0 {
        return Err(GbtError::InvalidParam {
            what: "cross-validation needs at least one boosting round".into(),
        });
    }

    // Resolve the class weight on the full data so every fold trains and
    // scores under the same weighting as the final refit.
    let mut resolved = params.clone();
    if params.loss == Loss::Logistic {
        let positives = labels.iter().filter(|&&y| y == 1.0).count();
        let negatives = n - positives;
        if positives < k || negatives < k {
            return Err(GbtError::FoldConstruction {
                k,
                positives,
                negatives,
            });
        }
        if resolved.positive_class_weight.is_none() {
            resolved.positive_class_weight = Some(negatives as f64 / positives as f64);
        }
    }

    let folds = build_folds(n, k, params.seed, |fold| {
        params.loss != Loss::Logistic || covers_both_classes(fold, labels)
    })
    .ok_or_else(|| {
        let positives = labels.iter().filter(|&&y| y == 1.0).count();
        GbtError::FoldConstruction {
            k,
            positives,
            negatives: n - positives,
        }
    })?;

    let mut fold_curves = Vec::with_capacity(k);
    for fold in &folds {
        let held_out: Vec<usize> = fold.iter().map(|&i| i as usize).collect();
        let mut in_fold = vec![false; n];
        for &i in &held_out {
            in_fold[i] = true;
        }
        let kept: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();

        let train_matrix = matrix.select_rows(&kept);
        let train_labels: Vec<f64> = kept.iter().map(|&i| labels[i]).collect();
        let held_matrix = matrix.select_rows(&held_out);
        let held_labels: Vec<f64> = held_out.iter().map(|&i| labels[i]).collect();
        let fitted = train_with(
            &train_matrix,
            &train_labels,
            Some((&held_matrix, &held_labels)),
            &resolved,
            parallel,
        )?;
        fold_curves.push(fitted.curve.holdout.expect("holdout curve tracked"));
    }

    let rounds = params.n_rounds as usize;
    let mut mean_curve = vec![0.0; rounds];
    for curve in &fold_curves {
        for (m, &l) in mean_curve.iter_mut().zip(curve) {
            *m += l;
        }
    }
    for m in &mut mean_curve {
        *m /= k as f64;
    }
    let best_iteration = mean_curve
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, &l)| match best {
            Some((_, b)) if l >= b => best,
            _ => Some((i, l)),
        })
        .map(|(i, _)| i as u32 + 1)
        .expect("at least one round");

    let final_params = TrainParams {
        n_rounds: best_iteration,
        ..resolved
    };
    let model = train_with(matrix, labels, None, &final_params, parallel)?;
    Ok(CvResult {
        model,
        fold_curves,
        mean_curve,
        best_iteration,
    })
}

/// Shuffle `0..n` with stepped seeds until `accept` passes on every fold.
fn build_folds(
    n: usize,
    k: usize,
    seed: u64,
    accept: impl Fn(&[u32]) -> bool,
) -> Option<Vec<Vec<u32>>> {
    for attempt in 0..MAX_FOLD_ATTEMPTS {
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        order.shuffle(&mut rng);
        let folds = cut_folds(&order, n, k);
        if folds.iter().all(|f| accept(f)) {
            return Some(folds);
        }
    }
    None
}

/// Cut a shuffled order into `k` contiguous folds; the first `n % k` folds
/// carry `n / k + 1` rows, the rest `n / k`.
fn cut_folds(order: &[u32], n: usize, k: usize) -> Vec<Vec<u32>> {
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[at..at + size].to_vec());
        at += size;
    }
    folds
}

fn covers_both_classes(fold: &[u32], labels: &[f64]) -> bool {
    let mut pos = false;
    let mut neg = false;
    for &i in fold {
        if labels[i as usize] == 1.0 {
            pos = true;
        } else {
            neg = true;
        }
    }
    pos && neg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtm;

    fn matrix_of(docs: &[&str]) -> DocTermMatrix {
        let tokens: Vec<Vec<String>> = docs
            .iter()
            .map(|d| d.split_whitespace().map(str::to_string).collect())
            .collect();
        let ids = (0..docs.len()).map(|i| format!("d{i}")).collect();
        dtm::build(ids, &tokens).unwrap()
    }

    #[test]
    fn fold_sizes_differ_by_at_most_one_and_cover_everything() {
        for (n, k) in [(10, 3), (12, 4), (7, 2), (9, 9)] {
            let folds = build_folds(n, k, 0, |_| true).unwrap();
            assert_eq!(folds.len(), k);
            let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            assert_eq!(sizes.iter().sum::<usize>(), n);
            sizes.sort();
            assert!(sizes[k - 1] - sizes[0] <= 1);
            assert_eq!(sizes[k - 1], n / k + usize::from(n % k != 0));
            let mut all: Vec<u32> = folds.concat();
            all.sort();
            assert_eq!(all, (0..n as u32).collect::<Vec<_>>());
        }
    }

    #[test]
    fn folds_are_seed_deterministic() {
        let a = build_folds(20, 4, 7, |_| true).unwrap();
        let b = build_folds(20, 4, 7, |_| true).unwrap();
        let c = build_folds(20, 4, 8, |_| true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejecting_shuffles_steps_the_seed() {
        // Accept only folds whose first entry is even: forces retries but
        // still terminates on some attempt.
        let folds = build_folds(8, 2, 0, |f| f[0] % 2 == 0);
        assert!(folds.is_some());
    }

    #[test]
    fn cv_picks_a_round_and_refits_with_it() {
        let docs = [
            "yes a", "yes b", "yes c", "yes d", "yes e", "yes f", "no a", "no b", "no c", "no d",
            "no e", "no f",
        ];
        let matrix = matrix_of(&docs);
        let labels: Vec<f64> = (0..12).map(|i| f64::from(i < 6)).collect();
        let params = TrainParams {
            n_rounds: 10,
            max_depth: 2,
            min_node_weight: 0.0,
            ..TrainParams::default()
        };
        let result = cross_validate(&matrix, &labels, &params, 3).unwrap();
        assert_eq!(result.fold_curves.len(), 3);
        assert_eq!(result.mean_curve.len(), 10);
        assert!(result.best_iteration >= 1 && result.best_iteration <= 10);
        assert_eq!(result.model.n_trees(), result.best_iteration as usize);
        assert_eq!(
            result.model.params.n_rounds, result.best_iteration,
            "refit must use the selected round count"
        );
        // The mean curve is the plain average of the fold curves.
        for r in 0..10 {
            let mean: f64 = result.fold_curves.iter().map(|c| c[r]).sum::<f64>() / 3.0;
            assert!((result.mean_curve[r] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn too_few_of_one_class_is_a_construction_error() {
        let matrix = matrix_of(&["a", "b", "c", "d", "e", "f"]);
        let labels = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let err = cross_validate(&matrix, &labels, &TrainParams::default(), 3).unwrap_err();
        match err {
            GbtError::FoldConstruction { k, positives, negatives } => {
                assert_eq!((k, positives, negatives), (3, 1, 5));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn degenerate_fold_counts_are_rejected() {
        let matrix = matrix_of(&["a", "b", "c"]);
        let labels = [1.0, 0.0, 1.0];
        for k in [0, 1, 4] {
            let err = cross_validate(&matrix, &labels, &TrainParams::default(), k).unwrap_err();
            assert!(matches!(err, GbtError::InvalidFoldCount { .. }), "k={k}");
        }
    }
}
