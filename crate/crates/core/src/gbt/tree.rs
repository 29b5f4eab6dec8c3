//! Regression trees over binary term-presence splits.
//!
//! Every split asks one question — does the document contain the term at all
//! (count >= 1)? Rows lacking the term take the `absent` branch, which is the
//! default direction for anything unseen. Growing is exhaustive greedy
//! search: each node scores every term by the gradient-statistics gain
//! `(G_L²/H_L + G_R²/H_R - G_P²/H_P) / 2` and keeps the best strictly
//! positive candidate, ties going to the lowest term index. The candidate
//! scan may run across terms in parallel; per-term statistics always
//! accumulate in ascending row order and the reduction walks terms in index
//! order, so parallel and serial runs are bit-identical.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtm::SparseRow;

/// Gains at or below this floor count as zero: exact zero-gain configurations
/// can round to ±1e-16 under floating-point summation and must not split.
pub const MIN_SPLIT_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        term: u32,
        gain: f64,
        absent: u32,
        present: u32,
    },
    Leaf {
        value: f64,
    },
}

/// One boosting stage: nodes in preorder with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Walk the tree for one sparse row.
    pub fn predict_row(&self, row: &[(u32, u32)]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    term,
                    absent,
                    present,
                    ..
                } => {
                    let has = row.binary_search_by_key(term, |e| e.0).is_ok();
                    at = if has { *present } else { *absent } as usize;
                }
            }
        }
    }

    /// Split gains by term index, for importance accounting.
    pub fn split_gains(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.nodes.iter().filter_map(|node| match node {
            Node::Split { term, gain, .. } => Some((*term, *gain)),
            Node::Leaf { .. } => None,
        })
    }
}

/// Column-major presence index: for each term, the ascending row numbers that
/// contain it. Built once per training set and shared across rounds.
pub struct ColumnIndex {
    cols: Vec<Vec<u32>>,
}

impl ColumnIndex {
    pub fn new(rows: &[SparseRow], n_terms: usize) -> Self {
        let mut cols = vec![Vec::new(); n_terms];
        for (r, row) in rows.iter().enumerate() {
            for &(c, _) in row {
                cols[c as usize].push(r as u32);
            }
        }
        ColumnIndex { cols }
    }

    pub fn n_terms(&self) -> usize {
        self.cols.len()
    }
}

/// How leaf values are fitted once a node stops splitting.
#[derive(Clone, Copy)]
pub enum LeafFit<'a> {
    /// The Newton step `-G/H` (for the squared loss this is the mean
    /// residual).
    Newton,
    /// The weighted lower median of the residuals in the node, for the
    /// absolute loss where curvature carries no information.
    WeightedMedian {
        residuals: &'a [f64],
        weights: &'a [f64],
    },
}

/// Grow one tree by exhaustive greedy search.
///
/// `grad` and `curv` are per-row gradient and curvature already multiplied by
/// the example weights. A candidate split is admissible when both children
/// keep a curvature sum of at least `min_node_weight`; a node whose own sum
/// falls below the floor, or that sits at `max_depth`, becomes a leaf.
#[allow(clippy::too_many_arguments)]
pub fn grow_tree(
    columns: &ColumnIndex,
    n_rows: usize,
    grad: &[f64],
    curv: &[f64],
    leaf_fit: LeafFit<'_>,
    max_depth: u32,
    min_node_weight: f64,
    parallel: bool,
) -> Tree {
    assert_eq!(grad.len(), n_rows, "one gradient per row");
    assert_eq!(curv.len(), n_rows, "one curvature per row");
    let mut grower = Grower {
        columns,
        grad,
        curv,
        leaf_fit,
        max_depth,
        min_node_weight,
        parallel,
        nodes: Vec::new(),
        mark: vec![0; n_rows],
        next_mark: 0,
    };
    let rows: Vec<u32> = (0..n_rows as u32).collect();
    grower.grow_node(rows, 0);
    Tree {
        nodes: grower.nodes,
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    term: u32,
    gain: f64,
}

struct Grower<'a> {
    columns: &'a ColumnIndex,
    grad: &'a [f64],
    curv: &'a [f64],
    leaf_fit: LeafFit<'a>,
    max_depth: u32,
    min_node_weight: f64,
    parallel: bool,
    nodes: Vec<Node>,
    mark: Vec<u32>,
    next_mark: u32,
}

fn score(g: f64, h: f64) -> f64 {
    if h > 0.0 {
        g * g / h
    } else {
        0.0
    }
}

impl Grower<'_> {
    fn grow_node(&mut self, rows: Vec<u32>, depth: u32) -> u32 {
        let mark = self.fresh_mark();
        let mut g_sum = 0.0;
        let mut h_sum = 0.0;
        for &r in &rows {
            self.mark[r as usize] = mark;
            g_sum += self.grad[r as usize];
            h_sum += self.curv[r as usize];
        }

        if depth >= self.max_depth || h_sum < self.min_node_weight {
            return self.push_leaf(&rows, g_sum, h_sum);
        }
        let Some(best) = self.find_best_split(rows.len(), mark, g_sum, h_sum) else {
            return self.push_leaf(&rows, g_sum, h_sum);
        };

        // Partition in ascending row order: re-mark the present rows, then
        // whatever kept the node mark is the absent side.
        let present_mark = self.fresh_mark();
        let mut present = Vec::new();
        for &r in &self.columns.cols[best.term as usize] {
            if self.mark[r as usize] == mark {
                self.mark[r as usize] = present_mark;
                present.push(r);
            }
        }
        let absent: Vec<u32> = rows
            .into_iter()
            .filter(|&r| self.mark[r as usize] == mark)
            .collect();

        let at = self.nodes.len() as u32;
        self.nodes.push(Node::Split {
            term: best.term,
            gain: best.gain,
            absent: 0,
            present: 0,
        });
        let absent_child = self.grow_node(absent, depth + 1);
        let present_child = self.grow_node(present, depth + 1);
        if let Node::Split {
            absent, present, ..
        } = &mut self.nodes[at as usize]
        {
            *absent = absent_child;
            *present = present_child;
        }
        at
    }

    fn find_best_split(
        &self,
        node_size: usize,
        mark: u32,
        g_sum: f64,
        h_sum: f64,
    ) -> Option<Candidate> {
        let parent_score = score(g_sum, h_sum);
        let evaluate = |term: usize| -> Option<Candidate> {
            let mut g_present = 0.0;
            let mut h_present = 0.0;
            let mut n_present = 0usize;
            for &r in &self.columns.cols[term] {
                if self.mark[r as usize] == mark {
                    g_present += self.grad[r as usize];
                    h_present += self.curv[r as usize];
                    n_present += 1;
                }
            }
            if n_present == 0 || n_present == node_size {
                return None;
            }
            let g_absent = g_sum - g_present;
            let h_absent = h_sum - h_present;
            if h_present < self.min_node_weight || h_absent < self.min_node_weight {
                return None;
            }
            let gain = 0.5 * (score(g_present, h_present) + score(g_absent, h_absent) - parent_score);
            (gain > MIN_SPLIT_GAIN).then_some(Candidate {
                term: term as u32,
                gain,
            })
        };

        let candidates: Vec<Option<Candidate>> = if self.parallel {
            (0..self.columns.n_terms())
                .into_par_iter()
                .map(evaluate)
                .collect()
        } else {
            (0..self.columns.n_terms()).map(evaluate).collect()
        };

        // Fixed-order reduction: scanning by term index keeps ties on the
        // lowest term and makes the parallel scan equal the serial one.
        let mut best: Option<Candidate> = None;
        for candidate in candidates.into_iter().flatten() {
            let better = match &best {
                Some(current) => candidate.gain > current.gain,
                None => true,
            };
            if better {
                best = Some(candidate);
            }
        }
        best
    }

    fn push_leaf(&mut self, rows: &[u32], g_sum: f64, h_sum: f64) -> u32 {
        let value = match self.leaf_fit {
            LeafFit::Newton => {
                if h_sum > 0.0 {
                    -g_sum / h_sum
                } else {
                    0.0
                }
            }
            LeafFit::WeightedMedian { residuals, weights } => {
                weighted_median(rows, residuals, weights)
            }
        };
        let at = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf { value });
        at
    }

    fn fresh_mark(&mut self) -> u32 {
        self.next_mark += 1;
        self.next_mark
    }
}

/// Lower weighted median: the smallest value whose cumulative weight reaches
/// half the total.
pub(crate) fn weighted_median(rows: &[u32], residuals: &[f64], weights: &[f64]) -> f64 {
    let mut pairs: Vec<(f64, f64)> = rows
        .iter()
        .map(|&r| (residuals[r as usize], weights[r as usize]))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite residuals"));
    let total: f64 = pairs.iter().map(|&(_, w)| w).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let half = total / 2.0;
    let mut cum = 0.0;
    for (value, weight) in pairs {
        cum += weight;
        if cum >= half {
            return value;
        }
    }
    0.0
}
