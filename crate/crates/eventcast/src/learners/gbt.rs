//! Gradient-boosted trees with the multiclass softmax objective.
//!
//! Each boosting round computes class probabilities from the accumulated
//! scores, then grows one regression tree per class on that class's
//! gradient/hessian pairs:
//!
//! * gradient  `g_i = p_ik - [y_i = k]`
//! * hessian   `h_i = p_ik (1 - p_ik)`
//! * split gain `(G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)) / 2`
//! * leaf value `-G/(H+lambda)`, shrunk by the learning rate
//!
//! Splits happen only when the gain is positive and both children carry at
//! least `min_child_weight` of hessian mass. The per-round training log-loss
//! is recorded on the model so descent is checkable after the fact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Tree, TreeNode, NO_CHILD};
use super::{normalize_importances, LearnerParams};
use crate::encode::DiscreteView;

/// A boosted multiclass model: `rounds[r][k]` is round `r`'s tree for class
/// `k`, on top of per-class prior log scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_score: Vec<f64>,
    pub rounds: Vec<Vec<Tree>>,
    pub learning_rate: f64,
    pub lambda: f64,
    /// Training log-loss before any rounds and after each round.
    pub train_loss: Vec<f64>,
    pub importances: Vec<f64>,
}

impl GbtModel {
    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Raw per-class scores for one row.
    pub fn scores(&self, row: &[u32]) -> Vec<f64> {
        let mut scores = self.base_score.clone();
        for round in &self.rounds {
            for (k, tree) in round.iter().enumerate() {
                scores[k] += tree.leaf_for(row)[0];
            }
        }
        scores
    }

    pub fn proba(&self, row: &[u32]) -> Vec<f64> {
        let mut scores = self.scores(row);
        softmax_inplace(&mut scores);
        scores
    }
}

/// Numerically safe softmax (max subtraction).
pub fn softmax_inplace(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Multiclass log-loss of one score vector against a class label.
pub fn multiclass_log_loss(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln() + max;
    log_sum - scores[label]
}

/// The gradient and hessian of [`multiclass_log_loss`] with respect to the
/// score vector: exactly what each boosting round feeds its trees.
pub fn softmax_grad_hess(scores: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
    let mut p = scores.to_vec();
    softmax_inplace(&mut p);
    let grad = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| pk - f64::from(u8::from(k == label)))
        .collect();
    let hess = p.iter().map(|&pk| pk * (1.0 - pk)).collect();
    (grad, hess)
}

struct GradSplit {
    feature: usize,
    threshold: u32,
    gain: f64,
    left_sum: (f64, f64),
    right_sum: (f64, f64),
}

fn score_part(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn best_split_for_feature(
    view: &DiscreteView<'_>,
    rows: &[u32],
    grad: &[f64],
    hess: &[f64],
    feature: usize,
    parent: (f64, f64),
    params: &LearnerParams,
) -> Option<GradSplit> {
    let card = view.cardinalities[feature] as usize;
    if card < 2 {
        return None;
    }
    let column = view.columns[feature];
    let mut hist_g = vec![0.0f64; card + 1];
    let mut hist_h = vec![0.0f64; card + 1];
    let mut hist_n = vec![0u32; card + 1];
    for &row in rows {
        let code = column[row as usize] as usize;
        hist_g[code] += grad[row as usize];
        hist_h[code] += hess[row as usize];
        hist_n[code] += 1;
    }

    let (g_total, h_total) = parent;
    let parent_score = score_part(g_total, h_total, params.lambda);
    let mut best: Option<GradSplit> = None;
    let mut g_left = 0.0;
    let mut h_left = 0.0;
    let mut n_left = 0u32;
    for threshold in 0..card.saturating_sub(1) {
        g_left += hist_g[threshold];
        h_left += hist_h[threshold];
        n_left += hist_n[threshold];
        if hist_n[threshold] == 0 && threshold > 0 {
            continue;
        }
        if n_left == 0 || n_left == rows.len() as u32 {
            continue;
        }
        let h_right = h_total - h_left;
        if h_left < params.min_child_weight || h_right < params.min_child_weight {
            continue;
        }
        let g_right = g_total - g_left;
        let gain = 0.5
            * (score_part(g_left, h_left, params.lambda)
                + score_part(g_right, h_right, params.lambda)
                - parent_score);
        if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(GradSplit {
                feature,
                threshold: threshold as u32,
                gain,
                left_sum: (g_left, h_left),
                right_sum: (g_right, h_right),
            });
        }
    }
    best
}

fn leaf_value(g: f64, h: f64, params: &LearnerParams) -> f64 {
    let denom = h + params.lambda;
    if denom <= 1e-12 {
        0.0
    } else {
        -g / denom * params.learning_rate
    }
}

#[allow(clippy::too_many_arguments)]
fn grow_node(
    view: &DiscreteView<'_>,
    rows: Vec<u32>,
    sums: (f64, f64),
    depth: usize,
    grad: &[f64],
    hess: &[f64],
    params: &LearnerParams,
    importances: &mut [f64],
    nodes: &mut Vec<TreeNode>,
) -> u32 {
    let make_leaf = |sums: (f64, f64)| TreeNode {
        feature: 0,
        threshold: 0,
        left: NO_CHILD,
        right: NO_CHILD,
        leaf: vec![leaf_value(sums.0, sums.1, params)],
    };
    if depth >= params.max_depth || rows.len() < 2 {
        let idx = nodes.len() as u32;
        nodes.push(make_leaf(sums));
        return idx;
    }

    let find = |feature: usize| {
        best_split_for_feature(view, &rows, grad, hess, feature, sums, params)
    };
    let splits: Vec<Option<GradSplit>> = if rows.len() >= 8192 && view.columns.len() > 1 {
        (0..view.columns.len()).into_par_iter().map(find).collect()
    } else {
        (0..view.columns.len()).map(find).collect()
    };
    let best = splits
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.gain > a.gain { b } else { a });

    let Some(best) = best else {
        let idx = nodes.len() as u32;
        nodes.push(make_leaf(sums));
        return idx;
    };
    importances[best.feature] += best.gain;

    let column = view.columns[best.feature];
    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
        .iter()
        .partition(|&&row| column[row as usize] <= best.threshold);

    let idx = nodes.len();
    nodes.push(TreeNode {
        feature: best.feature as u32,
        threshold: best.threshold,
        left: NO_CHILD,
        right: NO_CHILD,
        leaf: Vec::new(),
    });
    let left = grow_node(
        view, left_rows, best.left_sum, depth + 1, grad, hess, params, importances, nodes,
    );
    let right = grow_node(
        view, right_rows, best.right_sum, depth + 1, grad, hess, params, importances, nodes,
    );
    nodes[idx].left = left;
    nodes[idx].right = right;
    idx as u32
}

pub(super) fn train(view: &DiscreteView<'_>, params: &LearnerParams) -> GbtModel {
    let n = view.n_rows;
    let c = view.n_classes;

    let mut counts = vec![0.0f64; c];
    for &label in view.labels {
        counts[label as usize] += 1.0;
    }
    let base_score: Vec<f64> = counts
        .iter()
        .map(|&cnt| (cnt / n as f64).max(1e-12).ln())
        .collect();

    // scores[k * n + i]: class-major accumulated scores
    let mut scores: Vec<f64> = Vec::with_capacity(c * n);
    for &base in &base_score {
        scores.extend(std::iter::repeat_n(base, n));
    }

    let mut probs = vec![0.0f64; c * n];
    let mut rounds = Vec::with_capacity(params.n_rounds);
    let mut train_loss = Vec::with_capacity(params.n_rounds + 1);
    let mut importances = vec![0.0f64; view.columns.len()];

    for _round in 0..params.n_rounds {
        train_loss.push(loss_and_probs(&scores, view.labels, n, c, &mut probs));

        // One regression tree per class, all against this round's probs.
        let per_class: Vec<(Tree, Vec<f64>)> = (0..c)
            .into_par_iter()
            .map(|k| {
                let pk = &probs[k * n..(k + 1) * n];
                let mut grad = Vec::with_capacity(n);
                let mut hess = Vec::with_capacity(n);
                let mut g_sum = 0.0;
                let mut h_sum = 0.0;
                for (i, &p) in pk.iter().enumerate() {
                    let g = p - f64::from(u8::from(view.labels[i] as usize == k));
                    let h = p * (1.0 - p);
                    g_sum += g;
                    h_sum += h;
                    grad.push(g);
                    hess.push(h);
                }
                let mut nodes = Vec::new();
                let mut local_importance = vec![0.0f64; view.columns.len()];
                let rows: Vec<u32> = (0..n as u32).collect();
                grow_node(
                    view,
                    rows,
                    (g_sum, h_sum),
                    0,
                    &grad,
                    &hess,
                    params,
                    &mut local_importance,
                    &mut nodes,
                );
                (Tree { nodes }, local_importance)
            })
            .collect();

        let mut round_trees = Vec::with_capacity(c);
        for (k, (tree, local_importance)) in per_class.into_iter().enumerate() {
            apply_tree(&tree, view, &mut scores[k * n..(k + 1) * n]);
            for (dst, src) in importances.iter_mut().zip(&local_importance) {
                *dst += src;
            }
            round_trees.push(tree);
            let _ = k;
        }
        rounds.push(round_trees);
    }
    train_loss.push(loss_and_probs(&scores, view.labels, n, c, &mut probs));

    normalize_importances(&mut importances);
    GbtModel {
        base_score,
        rounds,
        learning_rate: params.learning_rate,
        lambda: params.lambda,
        train_loss,
        importances,
    }
}

/// Mean log-loss over the dataset; also refreshes the class-major
/// probability buffer.
fn loss_and_probs(scores: &[f64], labels: &[u32], n: usize, c: usize, probs: &mut [f64]) -> f64 {
    let loss_total: f64 = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..c).map(|k| scores[k * n + i]).collect();
            let loss = multiclass_log_loss(&row, labels[i] as usize);
            softmax_inplace(&mut row);
            for (k, &p) in row.iter().enumerate() {
                probs[k * n + i] = p;
            }
            loss
        })
        .sum();
    loss_total / n as f64
}

/// Add a regression tree's leaf values onto one class's score column.
fn apply_tree(tree: &Tree, view: &DiscreteView<'_>, scores: &mut [f64]) {
    let mut row = Vec::with_capacity(view.columns.len());
    for (i, slot) in scores.iter_mut().enumerate() {
        row.clear();
        row.extend(view.columns.iter().map(|col| col[i]));
        *slot += tree.leaf_for(&row)[0];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::fixtures::discrete_dataset;
    use crate::learners::{train_gbt, LearnerInner, LearnerParams};

    fn gbt_of(model: &crate::learners::LearnerModel) -> &GbtModel {
        match &model.inner {
            LearnerInner::Gbt(m) => m,
            _ => panic!("expected gbt"),
        }
    }

    #[test]
    fn zero_rounds_predicts_class_priors() {
        let ds = discrete_dataset(vec![("x", vec![0, 1, 2, 3])], vec![0, 0, 0, 1], 2);
        let params = LearnerParams {
            n_rounds: 0,
            ..LearnerParams::default()
        };
        let model = train_gbt(&ds, &params).unwrap();
        let p = model.predict_proba_row(&[2]).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-9, "{p:?}");
        assert!((p[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn constant_feature_first_round_stays_at_priors() {
        // With one constant feature no split is possible, and the root leaf
        // value is -sum(g)/(sum(h)+lambda). At the prior scores sum(g) = 0
        // for every class, so all first-round leaves are exactly 0.
        let ds = discrete_dataset(vec![("x", vec![0, 0, 0, 0])], vec![1, 1, 1, 0], 2);
        let params = LearnerParams {
            n_rounds: 1,
            lambda: 0.0,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            ..LearnerParams::default()
        };
        let model = train_gbt(&ds, &params).unwrap();
        let gbt = gbt_of(&model);
        for tree in &gbt.rounds[0] {
            assert_eq!(tree.nodes.len(), 1);
            assert!(
                tree.nodes[0].leaf[0].abs() < 1e-12,
                "leaf {}",
                tree.nodes[0].leaf[0]
            );
        }
    }

    #[test]
    fn hand_computed_split_and_leaves() {
        // Two balanced classes split perfectly by x <= 1. Priors are equal,
        // so p = 0.5 everywhere; for the class-0 tree the left child has
        // g = 2*(0.5 - 1) = -1, h = 2*0.25 = 0.5, leaf = +2; right mirrors.
        let ds = discrete_dataset(vec![("x", vec![0, 1, 2, 3])], vec![0, 0, 1, 1], 2);
        let params = LearnerParams {
            n_rounds: 1,
            lambda: 0.0,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            ..LearnerParams::default()
        };
        let model = train_gbt(&ds, &params).unwrap();
        let gbt = gbt_of(&model);
        let class0 = &gbt.rounds[0][0];
        assert_eq!(class0.nodes[0].threshold, 1);
        let left = &class0.nodes[class0.nodes[0].left as usize];
        let right = &class0.nodes[class0.nodes[0].right as usize];
        assert!((left.leaf[0] - 2.0).abs() < 1e-9, "left {}", left.leaf[0]);
        assert!((right.leaf[0] + 2.0).abs() < 1e-9);
        // gain = (G_L^2/H_L + G_R^2/H_R - 0) / 2 = (2 + 2) / 2 = 2
        let p = model.predict_proba_row(&[0]).unwrap();
        let expected = (2.0f64).exp() / ((2.0f64).exp() + (-2.0f64).exp());
        assert!((p[0] - expected).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn train_loss_is_non_increasing() {
        let mut rng = crate::rng::StreamRng::new(4);
        let n = 300;
        let x1: Vec<u32> = (0..n).map(|_| rng.below(6) as u32).collect();
        let x2: Vec<u32> = (0..n).map(|_| rng.below(4) as u32).collect();
        let labels: Vec<u32> = x1
            .iter()
            .zip(&x2)
            .map(|(&a, &b)| {
                let noisy = rng.below(10) == 0;
                if noisy {
                    rng.below(3) as u32
                } else {
                    (a / 2 + b / 2).min(2)
                }
            })
            .collect();
        let ds = discrete_dataset(vec![("x1", x1), ("x2", x2)], labels, 3);
        let params = LearnerParams {
            n_rounds: 40,
            ..LearnerParams::default()
        };
        let model = train_gbt(&ds, &params).unwrap();
        let gbt = gbt_of(&model);
        assert_eq!(gbt.train_loss.len(), 41);
        for w in gbt.train_loss.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "loss increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = crate::rng::StreamRng::new(12);
        for _ in 0..50 {
            let c = 2 + rng.index(4);
            let scores: Vec<f64> = (0..c).map(|_| rng.f64() * 3.0 - 1.5).collect();
            let label = rng.index(c);
            let (grad, hess) = softmax_grad_hess(&scores, label);
            let h = 1e-5;
            for k in 0..c {
                let mut plus = scores.clone();
                plus[k] += h;
                let mut minus = scores.clone();
                minus[k] -= h;
                let fd_grad = (multiclass_log_loss(&plus, label)
                    - multiclass_log_loss(&minus, label))
                    / (2.0 * h);
                let rel = (grad[k] - fd_grad).abs() / fd_grad.abs().max(1e-8);
                assert!(rel < 1e-6, "grad[{k}] {} vs fd {fd_grad}", grad[k]);
                assert!(hess[k] > 0.0);
            }
        }
    }

    #[test]
    fn every_round_has_one_tree_per_class() {
        let x: Vec<u32> = (0..30).map(|i| i % 3).collect();
        let labels = x.clone();
        let ds = discrete_dataset(vec![("x", x)], labels, 3);
        let params = LearnerParams {
            n_rounds: 5,
            ..LearnerParams::default()
        };
        let model = train_gbt(&ds, &params).unwrap();
        let gbt = gbt_of(&model);
        assert_eq!(gbt.rounds.len(), 5);
        assert!(gbt.rounds.iter().all(|r| r.len() == 3));
        // separable: near-perfect training predictions
        assert_eq!(model.predict_dataset(&ds).unwrap(), ds.labels);
    }

    #[test]
    fn thread_count_does_not_change_the_model() {
        let mut rng = crate::rng::StreamRng::new(15);
        let n = 500;
        let x1: Vec<u32> = (0..n).map(|_| rng.below(9) as u32).collect();
        let x2: Vec<u32> = (0..n).map(|_| rng.below(6) as u32).collect();
        let labels: Vec<u32> = x1.iter().map(|&v| v / 3).collect();
        let ds = discrete_dataset(vec![("x1", x1), ("x2", x2)], labels, 3);
        let params = LearnerParams {
            n_rounds: 12,
            ..LearnerParams::default()
        };
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| train_gbt(&ds, &params).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| train_gbt(&ds, &params).unwrap());
        assert_eq!(serial, parallel);
    }

    #[test]
    fn importance_lands_on_the_informative_feature() {
        let mut rng = crate::rng::StreamRng::new(8);
        let n = 400;
        let signal: Vec<u32> = (0..n).map(|_| rng.below(4) as u32).collect();
        let noise: Vec<u32> = (0..n).map(|_| rng.below(4) as u32).collect();
        let labels: Vec<u32> = signal.iter().map(|&v| u32::from(v >= 2)).collect();
        let ds = discrete_dataset(vec![("noise", noise), ("signal", signal)], labels, 2);
        let params = LearnerParams {
            n_rounds: 10,
            ..LearnerParams::default()
        };
        let model = train_gbt(&ds, &params).unwrap();
        let imp = model.feature_importance().unwrap();
        assert!(imp[1] > 0.9, "importances {imp:?}");
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
