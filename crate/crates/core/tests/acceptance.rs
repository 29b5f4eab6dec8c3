//! Acceptance suite: every release-blocking behavior, one test per
//! criterion, each printing a single PASS/FAIL line (run with
//! `cargo test --test acceptance -- --nocapture` to see them all).
//!
//! Tolerances and runtime caps are pinned in the assertions themselves.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use repclass_core::analyze::{self, IntervalMethod};
use repclass_core::corpus::{self, Category, ColumnMap, SplitSpec};
use repclass_core::dtm::{self, DocTermMatrix};
use repclass_core::gbt::{
    self, cross_validate, grow_tree, train_with, BoostedModel, ColumnIndex, LeafFit, Loss, Node,
    Tree, TrainParams, TrainingCurve, MIN_SPLIT_GAIN, MODEL_FORMAT_VERSION,
};
use repclass_core::metrics::ConfusionMatrix;
use repclass_core::textprep::{self, CleanConfig};

fn criterion(name: &str, run: impl FnOnce() -> Result<String, String>) {
    match run() {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(detail) => {
            println!("FAIL {name}: {detail}");
            panic!("{name}: {detail}");
        }
    }
}

fn data(file: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(file)
}

fn check(ok: bool, what: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

/// The benchmark 60-document confusion matrix and its quoted ratios.
#[test]
fn acceptance_01_confusion_matrix_oracle() {
    criterion("01 confusion-matrix-oracle", || {
        let start = Instant::now();
        let cells = ConfusionMatrix {
            true_pos: 13,
            false_pos: 2,
            false_neg: 16,
            true_neg: 29,
        };
        let r = cells.report();
        let within = |got: f64, want: f64| (got - want).abs() <= 0.0005;
        check(within(r.precision, 0.8667), &format!("precision {}", r.precision))?;
        check(within(r.recall, 0.4483), &format!("recall {}", r.recall))?;
        check(within(r.f1, 0.5907), &format!("f1 {}", r.f1))?;
        check(
            within(r.no_information_rate, 0.5167),
            &format!("no-information rate {}", r.no_information_rate),
        )?;
        check(within(r.accuracy, 0.7000), &format!("accuracy {}", r.accuracy))?;
        check(
            r.footnotes.iter().any(|n| n.contains("69.1%") && n.contains("70.0%")),
            "missing accuracy-discrepancy footnote",
        )?;
        let secs = start.elapsed().as_secs_f64();
        check(secs < 1.0, &format!("took {secs:.2}s, cap 1s"))?;
        Ok(format!(
            "precision {:.4} recall {:.4} f1 {:.4} nir {:.4} accuracy {:.4}, footnote flagged",
            r.precision, r.recall, r.f1, r.no_information_rate, r.accuracy
        ))
    });
}

/// A coder predicting no positives at all: exact zeros with explicit flags.
#[test]
fn acceptance_02_degenerate_predictions() {
    criterion("02 degenerate-predictions", || {
        let cells = ConfusionMatrix {
            true_pos: 0,
            false_pos: 0,
            false_neg: 29,
            true_neg: 31,
        };
        let r = cells.report();
        check(r.precision == 0.0, &format!("precision {}", r.precision))?;
        check(!r.precision_defined, "precision should be flagged undefined")?;
        check(r.recall == 0.0, &format!("recall {}", r.recall))?;
        check(r.recall_defined, "recall 0/29 is defined")?;
        check(r.f1 == 0.0, &format!("f1 {}", r.f1))?;
        check(!r.f1_defined, "f1 should be flagged undefined")?;
        Ok("precision 0 (undefined), recall 0, f1 0 (undefined)".into())
    });
}

/// Per-tree vote view over the seven reference probabilities.
#[test]
fn acceptance_03_per_tree_votes() {
    criterion("03 per-tree-votes", || {
        let probabilities = [0.60, 0.55, 0.80, 0.70, 0.45, 0.32, 0.39];
        let empty = dtm::build(vec![], &[]).map_err(|e| e.to_string())?;
        let params = TrainParams {
            learning_rate: 1.0,
            n_rounds: probabilities.len() as u32,
            ..TrainParams::default()
        };
        let model = BoostedModel {
            format_version: MODEL_FORMAT_VERSION,
            params,
            base_score: 0.0,
            vocab_fingerprint: empty.vocab.fingerprint(),
            vocabulary: empty.vocab,
            trees: probabilities
                .iter()
                .map(|&p: &f64| Tree {
                    nodes: vec![Node::Leaf {
                        value: (p / (1.0 - p)).ln(),
                    }],
                })
                .collect(),
            curve: TrainingCurve {
                train: vec![],
                holdout: None,
            },
        };
        let view = model.per_tree_view(&[]).map_err(|e| e.to_string())?;
        for (got, want) in view.probabilities.iter().zip(probabilities) {
            check(
                (got - want).abs() < 1e-12,
                &format!("tree probability {got} vs {want}"),
            )?;
        }
        check(view.positive_votes == 4, &format!("votes {}", view.positive_votes))?;
        check(
            (view.vote_share - 0.571).abs() <= 0.001,
            &format!("vote share {}", view.vote_share),
        )?;
        check(view.majority_label == 1, "majority should be positive")?;
        Ok(format!("4/7 votes, share {:.4}, majority positive", view.vote_share))
    });
}

/// The grown root split equals brute-force enumeration on random problems.
#[test]
fn acceptance_04_root_split_matches_brute_force() {
    criterion("04 root-split-oracle", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for case in 0..200 {
            let n_terms = rng.random_range(1..=8usize);
            let n_rows = rng.random_range(2..=30usize);
            let rows: Vec<Vec<(u32, u32)>> = (0..n_rows)
                .map(|_| {
                    let mut row = Vec::new();
                    for t in 0..n_terms as u32 {
                        if rng.random_bool(0.4) {
                            row.push((t, rng.random_range(1..=3u32)));
                        }
                    }
                    row
                })
                .collect();
            let grad: Vec<f64> = (0..n_rows).map(|_| rng.random_range(-2.0..2.0)).collect();
            let curv: Vec<f64> = (0..n_rows).map(|_| rng.random_range(0.1..2.0)).collect();

            let columns = ColumnIndex::new(&rows, n_terms);
            let tree = grow_tree(&columns, n_rows, &grad, &curv, LeafFit::Newton, 1, 0.0, true);

            // Exhaustive reference: try every term, keep the first maximum.
            let score = |g: f64, h: f64| if h > 0.0 { g * g / h } else { 0.0 };
            let g_sum: f64 = grad.iter().sum();
            let h_sum: f64 = curv.iter().sum();
            let mut best: Option<(u32, f64)> = None;
            for term in 0..n_terms as u32 {
                let present: Vec<usize> = (0..n_rows)
                    .filter(|&r| rows[r].iter().any(|&(t, _)| t == term))
                    .collect();
                if present.is_empty() || present.len() == n_rows {
                    continue;
                }
                let gp: f64 = present.iter().map(|&r| grad[r]).sum();
                let hp: f64 = present.iter().map(|&r| curv[r]).sum();
                let gain =
                    0.5 * (score(gp, hp) + score(g_sum - gp, h_sum - hp) - score(g_sum, h_sum));
                if gain > MIN_SPLIT_GAIN && best.is_none_or(|(_, b)| gain > b) {
                    best = Some((term, gain));
                }
            }

            match (&tree.nodes[0], best) {
                (Node::Split { term, gain, .. }, Some((want_term, want_gain))) => {
                    check(
                        *term == want_term,
                        &format!("case {case}: split term {term} vs {want_term}"),
                    )?;
                    check(
                        (gain - want_gain).abs() < 1e-12,
                        &format!("case {case}: gain {gain} vs {want_gain}"),
                    )?;
                }
                (Node::Leaf { .. }, None) => {}
                (node, want) => {
                    return Err(format!("case {case}: grew {node:?} but reference was {want:?}"))
                }
            }
        }
        let secs = start.elapsed().as_secs_f64();
        check(secs < 10.0, &format!("took {secs:.2}s, cap 10s"))?;
        Ok(format!("200/200 random problems agree ({secs:.2}s)"))
    });
}

/// Analytic loss derivatives match central finite differences.
#[test]
fn acceptance_05_loss_derivatives() {
    criterion("05 loss-derivatives", || {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let h = 1e-5;
        let rel = |got: f64, want: f64| {
            if want.abs() < 1e-8 {
                got.abs()
            } else {
                (got - want).abs() / want.abs()
            }
        };
        let mut points = 0;
        for loss in [Loss::Squared, Loss::Absolute, Loss::Logistic] {
            for _ in 0..100 {
                let (truth, score) = match loss {
                    Loss::Logistic => (f64::from(rng.random_bool(0.5)), rng.random_range(-4.0..4.0)),
                    _ => (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
                };
                // Keep the two-sided stencil away from the absolute-loss kink.
                if loss == Loss::Absolute && (score - truth).abs() < 1e-3 {
                    continue;
                }
                let fd_grad = (loss.evaluate_score(truth, score + h)
                    - loss.evaluate_score(truth, score - h))
                    / (2.0 * h);
                let grad = loss.gradient(truth, score);
                check(
                    rel(fd_grad, grad) < 1e-6,
                    &format!("{loss} gradient at y={truth} u={score}: fd {fd_grad} vs {grad}"),
                )?;
                let fd_curv =
                    (loss.gradient(truth, score + h) - loss.gradient(truth, score - h)) / (2.0 * h);
                let curv = loss.curvature(truth, score);
                check(
                    rel(fd_curv, curv) < 1e-6,
                    &format!("{loss} curvature at y={truth} u={score}: fd {fd_curv} vs {curv}"),
                )?;
                points += 1;
            }
        }
        Ok(format!("{points} random points across three losses"))
    });
}

fn load_split_binarize(
    file: &str,
    seed: u64,
) -> Result<(corpus::Corpus, corpus::Corpus, Vec<f64>, Vec<f64>), String> {
    let corpus = corpus::load_csv(&data(file), &ColumnMap::default()).map_err(|e| e.to_string())?;
    let (train_part, test_part) = corpus::split(
        &corpus,
        SplitSpec {
            train_fraction: 0.7,
            seed,
        },
    )
    .map_err(|e| e.to_string())?;
    let train_labels = corpus::binary_labels(&train_part, Category::Performative, "expert")
        .map_err(|e| e.to_string())?;
    let test_labels = corpus::binary_labels(&test_part, Category::Performative, "expert")
        .map_err(|e| e.to_string())?;
    Ok((train_part, test_part, train_labels, test_labels))
}

fn build_pruned(part: &corpus::Corpus, clean: &CleanConfig) -> Result<DocTermMatrix, String> {
    let tokens = part.clean_texts(clean);
    let matrix = dtm::build(part.doc_ids(), &tokens).map_err(|e| e.to_string())?;
    matrix.prune(0.95).map_err(|e| e.to_string())
}

/// The planted synthetic corpus is learned to F1 >= 0.90 at the
/// cross-validated round, and the planted stem dominates importance.
#[test]
fn acceptance_06_planted_corpus_learning() {
    criterion("06 planted-corpus-learning", || {
        let start = Instant::now();
        let clean = CleanConfig::default();
        let (train_part, test_part, train_labels, test_labels) =
            load_split_binarize("planted_500.csv", 5)?;
        let matrix = build_pruned(&train_part, &clean)?;
        let params = TrainParams {
            n_rounds: 80,
            seed: 5,
            ..TrainParams::default()
        };
        let cv = cross_validate(&matrix, &train_labels, &params, 5).map_err(|e| e.to_string())?;
        let predicted =
            analyze::classify_corpus(&test_part, &cv.model, &clean).map_err(|e| e.to_string())?;
        let cells =
            ConfusionMatrix::from_pairs(&test_labels, &predicted).map_err(|e| e.to_string())?;
        let f1 = cells.report().f1;
        check(f1 >= 0.90, &format!("held-out f1 {f1:.4} < 0.90"))?;
        let importance = cv.model.feature_importance();
        let top = importance.first().map(|(t, _)| t.as_str()).unwrap_or("");
        check(top == "grant", &format!("top importance term {top:?}, expected \"grant\""))?;
        let secs = start.elapsed().as_secs_f64();
        check(secs < 30.0, &format!("took {secs:.2}s, cap 30s"))?;
        Ok(format!(
            "f1 {f1:.4} at round {} of {}, \"grant\" ranks first ({secs:.1}s)",
            cv.best_iteration, params.n_rounds
        ))
    });
}

/// The overfitting fixture: held-out loss bottoms out strictly before the
/// last round while training loss never increases.
#[test]
fn acceptance_07_overfit_curve_shape() {
    criterion("07 overfit-curve-shape", || {
        let clean = CleanConfig::default();
        let (train_part, test_part, train_labels, test_labels) =
            load_split_binarize("overfit_120.csv", 0)?;
        let matrix = build_pruned(&train_part, &clean)?;
        let held = dtm::project_all(
            test_part.doc_ids(),
            &test_part.clean_texts(&clean),
            &matrix.vocab,
        )
        .map_err(|e| e.to_string())?;
        let params = TrainParams {
            n_rounds: 60,
            max_depth: 4,
            seed: 0,
            ..TrainParams::default()
        };
        let model = train_with(
            &matrix,
            &train_labels,
            Some((&held, &test_labels)),
            &params,
            true,
        )
        .map_err(|e| e.to_string())?;
        let train_curve = &model.curve.train;
        for (i, w) in train_curve.windows(2).enumerate() {
            check(
                w[1] <= w[0] + 1e-9,
                &format!("training loss rose at round {}: {} -> {}", i + 1, w[0], w[1]),
            )?;
        }
        let best = model
            .curve
            .best_iteration()
            .ok_or("no held-out curve tracked")?;
        check(
            best < params.n_rounds,
            &format!("held-out argmin {best} is not strictly before round {}", params.n_rounds),
        )?;
        let holdout = model.curve.holdout.as_ref().unwrap();
        Ok(format!(
            "held-out minimum at round {best} of {} ({:.4} vs {:.4} at the end), training loss non-increasing",
            params.n_rounds,
            holdout[best as usize - 1],
            holdout.last().unwrap()
        ))
    });
}

/// Squared-error risk decomposes into variance + bias^2 + noise.
#[test]
fn acceptance_08_bias_variance_decomposition() {
    criterion("08 bias-variance-decomposition", || {
        let start = Instant::now();
        let n_features = 6usize;
        let n_train = 150usize;
        let n_test = 40usize;
        let n_models = 200usize;
        let sigma = 0.5;
        let truth = |x: &[bool]| {
            1.5 * f64::from(x[0]) - 1.0 * f64::from(x[1]) + 0.5 * f64::from(x[2] && x[3])
        };
        let feature_tokens = |x: &[bool]| -> Vec<String> {
            x.iter()
                .enumerate()
                .filter(|&(_, &on)| on)
                .map(|(j, _)| format!("f{j}"))
                .collect()
        };

        let mut rng = ChaCha8Rng::seed_from_u64(80);
        let noise = Normal::new(0.0, sigma).unwrap();
        let draw = |rng: &mut ChaCha8Rng| -> Vec<bool> {
            (0..n_features).map(|_| rng.random_bool(0.5)).collect()
        };
        let test_points: Vec<Vec<bool>> = (0..n_test).map(|_| draw(&mut rng)).collect();
        let test_tokens: Vec<Vec<String>> =
            test_points.iter().map(|x| feature_tokens(x)).collect();
        let test_ids: Vec<String> = (0..n_test).map(|i| format!("x{i}")).collect();

        let params = TrainParams {
            loss: Loss::Squared,
            n_rounds: 30,
            max_depth: 3,
            ..TrainParams::default()
        };
        // predictions[t][i]: model t's output at test point i; fresh_sq
        // accumulates (fresh noisy target - prediction)^2 for the left side.
        let mut predictions = vec![vec![0.0; n_test]; n_models];
        let mut fresh_sq = 0.0;
        for t in 0..n_models {
            let xs: Vec<Vec<bool>> = (0..n_train).map(|_| draw(&mut rng)).collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|x| truth(x) + noise.sample(&mut rng))
                .collect();
            let tokens: Vec<Vec<String>> = xs.iter().map(|x| feature_tokens(x)).collect();
            let ids: Vec<String> = (0..n_train).map(|i| format!("d{i}")).collect();
            let matrix = dtm::build(ids, &tokens).map_err(|e| e.to_string())?;
            let model = gbt::train(&matrix, &ys, &params).map_err(|e| e.to_string())?;
            let held = dtm::project_all(test_ids.clone(), &test_tokens, &matrix.vocab)
                .map_err(|e| e.to_string())?;
            for (i, row) in held.rows.iter().enumerate() {
                let predicted = model.score_row(row);
                predictions[t][i] = predicted;
                let fresh = truth(&test_points[i]) + noise.sample(&mut rng);
                fresh_sq += (fresh - predicted) * (fresh - predicted);
            }
        }
        let lhs = fresh_sq / (n_models * n_test) as f64;

        let mut rhs = 0.0;
        for i in 0..n_test {
            let mean: f64 = (0..n_models).map(|t| predictions[t][i]).sum::<f64>() / n_models as f64;
            let var: f64 = (0..n_models)
                .map(|t| (predictions[t][i] - mean) * (predictions[t][i] - mean))
                .sum::<f64>()
                / n_models as f64;
            let bias = mean - truth(&test_points[i]);
            rhs += var + bias * bias + sigma * sigma;
        }
        rhs /= n_test as f64;

        let rel = (lhs - rhs).abs() / rhs;
        check(
            rel <= 0.05,
            &format!("risk {lhs:.5} vs variance+bias^2+noise {rhs:.5}: off by {:.2}%", rel * 100.0),
        )?;
        let secs = start.elapsed().as_secs_f64();
        check(secs < 60.0, &format!("took {secs:.2}s, cap 60s"))?;
        Ok(format!(
            "risk {lhs:.5} = var+bias^2+noise {rhs:.5} within {:.2}% ({secs:.1}s)",
            rel * 100.0
        ))
    });
}

/// Same seed, same bytes: the train command and the parallel scan.
#[test]
fn acceptance_09_determinism() {
    criterion("09 determinism", || {
        // The command twice into separate directories.
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config_path = dir.path().join("run.toml");
        std::fs::write(
            &config_path,
            format!(
                "[paths]\ninput = {:?}\n\n[corpus]\ntarget = \"Performative\"\ncoder = \"expert\"\n\n[train]\nn_rounds = 12\nfolds = 3\nseed = 9\n",
                data("planted_500.csv")
            ),
        )
        .map_err(|e| e.to_string())?;
        let run = |out: &Path| -> Result<(), String> {
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_repclass"))
                .args(["--config", config_path.to_str().unwrap(), "--out-dir"])
                .arg(out)
                .arg("train")
                .stdout(std::process::Stdio::null())
                .status()
                .map_err(|e| e.to_string())?;
            check(status.success(), &format!("train exited with {status}"))
        };
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        run(&out_a)?;
        run(&out_b)?;
        let bytes_a = std::fs::read(out_a.join("model.json")).map_err(|e| e.to_string())?;
        let bytes_b = std::fs::read(out_b.join("model.json")).map_err(|e| e.to_string())?;
        check(bytes_a == bytes_b, "model files differ between identical runs")?;

        // Parallel and serial split scans, byte-compared as JSON.
        let clean = CleanConfig::default();
        let (train_part, _, train_labels, _) = load_split_binarize("planted_500.csv", 9)?;
        let matrix = build_pruned(&train_part, &clean)?;
        let params = TrainParams {
            n_rounds: 10,
            ..TrainParams::default()
        };
        let parallel = train_with(&matrix, &train_labels, None, &params, true)
            .map_err(|e| e.to_string())?;
        let serial = train_with(&matrix, &train_labels, None, &params, false)
            .map_err(|e| e.to_string())?;
        let json_a = parallel.to_json().map_err(|e| e.to_string())?;
        let json_b = serial.to_json().map_err(|e| e.to_string())?;
        check(json_a == json_b, "parallel and serial training disagree")?;
        Ok(format!(
            "command reruns byte-identical ({} bytes); parallel == serial ({} bytes)",
            bytes_a.len(),
            json_a.len()
        ))
    });
}

/// Full conformance against the published stemmer vocabulary.
#[test]
fn acceptance_10_stemmer_conformance() {
    criterion("10 stemmer-conformance", || {
        let voc = std::fs::read_to_string(data("porter/voc.txt")).map_err(|e| e.to_string())?;
        let out = std::fs::read_to_string(data("porter/output.txt")).map_err(|e| e.to_string())?;
        let mut total = 0u32;
        let mut mismatches = 0u32;
        for (word, want) in voc.lines().zip(out.lines()) {
            total += 1;
            if textprep::stem(word.trim()) != want.trim() {
                mismatches += 1;
            }
        }
        check(total == 23_531, &format!("expected 23531 pairs, saw {total}"))?;
        check(mismatches == 0, &format!("{mismatches} mismatches of {total}"))?;
        Ok(format!("{total} of {total} reference pairs stem exactly"))
    });
}

/// The share interval oracle, and width scaling as 1/sqrt(n).
#[test]
fn acceptance_11_interval_oracle() {
    criterion("11 interval-oracle", || {
        let (lower, upper) =
            analyze::interval(0.32, 200, 0.95, IntervalMethod::Normal).map_err(|e| e.to_string())?;
        check(
            (lower - 0.2553).abs() <= 0.0001,
            &format!("lower bound {lower}"),
        )?;
        check(
            (upper - 0.3847).abs() <= 0.0001,
            &format!("upper bound {upper}"),
        )?;
        let mut scaled = Vec::new();
        for n in [50u64, 200, 800] {
            let (lo, hi) =
                analyze::interval(0.32, n, 0.95, IntervalMethod::Normal).map_err(|e| e.to_string())?;
            scaled.push((hi - lo) * (n as f64).sqrt());
        }
        for pair in scaled.windows(2) {
            let rel = (pair[0] - pair[1]).abs() / pair[0];
            check(
                rel <= 0.01,
                &format!("width x sqrt(n) drifts {:.3}%: {scaled:?}", rel * 100.0),
            )?;
        }
        Ok(format!(
            "interval ({lower:.4}, {upper:.4}); width x sqrt(n) constant at {:.4}",
            scaled[0]
        ))
    });
}

/// Splitting the 199-document coded corpus at 0.7 leaves 60 test documents.
#[test]
fn acceptance_12_split_sizes() {
    criterion("12 split-sizes", || {
        let corpus =
            corpus::load_csv(&data("coded_199.csv"), &ColumnMap::default()).map_err(|e| e.to_string())?;
        check(corpus.len() == 199, &format!("corpus has {} documents", corpus.len()))?;
        let (train_part, test_part) = corpus::split(
            &corpus,
            SplitSpec {
                train_fraction: 0.7,
                seed: 0,
            },
        )
        .map_err(|e| e.to_string())?;
        check(train_part.len() == 139, &format!("train side {}", train_part.len()))?;
        check(test_part.len() == 60, &format!("test side {}", test_part.len()))?;
        Ok("199 documents split 139 train / 60 test at fraction 0.7".into())
    });
}
