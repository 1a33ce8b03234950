//! Flat binary trees and the CART classification trainer.
//!
//! The split search is exact: for every candidate feature a per-code
//! histogram is built over the node's rows and every threshold between
//! observed codes is scored. Classification splits maximize Gini impurity
//! decrease; ties go to the lowest feature index, then the lowest threshold,
//! which keeps training independent of scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{normalize_importances, LearnerParams};
use crate::encode::DiscreteView;
use crate::rng::StreamRng;

/// Sentinel child index marking a leaf.
pub const NO_CHILD: u32 = u32::MAX;

/// One node of a flat tree. Internal nodes route `code <= threshold` left;
/// leaves carry a per-class score vector (a single value for gbt trees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: u32,
    pub threshold: u32,
    pub left: u32,
    pub right: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub leaf: Vec<f64>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.left == NO_CHILD
    }

    fn leaf_node(values: Vec<f64>) -> TreeNode {
        TreeNode {
            feature: 0,
            threshold: 0,
            left: NO_CHILD,
            right: NO_CHILD,
            leaf: values,
        }
    }
}

/// A binary decision tree stored as a flat node array, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Walk a row of codes to its leaf scores.
    #[inline]
    pub fn leaf_for(&self, row: &[u32]) -> &[f64] {
        let mut idx = 0usize;
        loop {
            let node = &self.nodes[idx];
            if node.is_leaf() {
                return &node.leaf;
            }
            idx = if row[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    /// Depth of the tree (a lone leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            let node = &nodes[idx];
            if node.is_leaf() {
                0
            } else {
                1 + walk(nodes, node.left as usize).max(walk(nodes, node.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }
}

/// A single CART tree with leaf class distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub tree: Tree,
    pub importances: Vec<f64>,
}

impl TreeModel {
    pub fn proba(&self, row: &[u32]) -> Vec<f64> {
        self.tree.leaf_for(row).to_vec()
    }
}

/// Shared growing configuration for single trees and forest members.
pub(super) struct GrowCfg {
    pub max_depth: usize,
    pub min_child_rows: f64,
    /// Features drawn uniformly per split; `None` searches all of them.
    pub features_per_split: Option<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: u32,
    decrease: f64,
}

fn gini_term(counts: &[f64], total: f64) -> f64 {
    // total * gini(counts) = total - sum(c^2)/total
    if total <= 0.0 {
        return 0.0;
    }
    total - counts.iter().map(|c| c * c).sum::<f64>() / total
}

/// Best threshold for one feature over the node's rows, or None when no
/// split produces two large-enough children with positive impurity decrease.
fn best_split_for_feature(
    view: &DiscreteView<'_>,
    rows: &[u32],
    feature: usize,
    parent_gini_mass: f64,
    min_child_rows: f64,
) -> Option<(u32, f64)> {
    let card = view.cardinalities[feature] as usize;
    if card < 2 {
        return None;
    }
    let n_classes = view.n_classes;
    let column = view.columns[feature];
    let mut hist = vec![0.0f64; (card + 1) * n_classes];
    for &row in rows {
        let code = column[row as usize] as usize;
        hist[code * n_classes + view.labels[row as usize] as usize] += 1.0;
    }

    let total = rows.len() as f64;
    let mut left_counts = vec![0.0f64; n_classes];
    let mut left_total = 0.0f64;
    let mut right_counts = vec![0.0f64; n_classes];
    for (k, rc) in right_counts.iter_mut().enumerate() {
        for code in 0..=card {
            *rc += hist[code * n_classes + k];
        }
    }

    let mut best: Option<(u32, f64)> = None;
    for threshold in 0..card.saturating_sub(1) {
        let slot = &hist[threshold * n_classes..(threshold + 1) * n_classes];
        let moved: f64 = slot.iter().sum();
        if moved > 0.0 {
            left_total += moved;
            for k in 0..n_classes {
                left_counts[k] += slot[k];
                right_counts[k] -= slot[k];
            }
        }
        if left_total < min_child_rows || (total - left_total) < min_child_rows {
            continue;
        }
        if moved == 0.0 && threshold > 0 {
            // same partition as the previous threshold
            continue;
        }
        if left_total == 0.0 || left_total == total {
            continue;
        }
        let children = gini_term(&left_counts, left_total)
            + gini_term(&right_counts, total - left_total);
        let decrease = (parent_gini_mass - children) / total;
        if decrease > 1e-12 && best.is_none_or(|(_, d)| decrease > d) {
            best = Some((threshold as u32, decrease));
        }
    }
    best
}

/// Grow a classification tree. `importances` accumulates row-weighted
/// impurity decrease per feature; `n_total` is the training-set size that
/// weights it.
pub(super) fn grow_classification(
    view: &DiscreteView<'_>,
    rows: Vec<u32>,
    cfg: &GrowCfg,
    rng: Option<&mut StreamRng>,
    importances: &mut [f64],
    n_total: f64,
) -> Tree {
    let mut nodes = Vec::new();
    let mut rng = rng;
    grow_node(view, rows, 0, cfg, &mut rng, importances, n_total, &mut nodes);
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn grow_node(
    view: &DiscreteView<'_>,
    rows: Vec<u32>,
    depth: usize,
    cfg: &GrowCfg,
    rng: &mut Option<&mut StreamRng>,
    importances: &mut [f64],
    n_total: f64,
    nodes: &mut Vec<TreeNode>,
) -> u32 {
    let n_classes = view.n_classes;
    let mut counts = vec![0.0f64; n_classes];
    for &row in &rows {
        counts[view.labels[row as usize] as usize] += 1.0;
    }
    let total = rows.len() as f64;
    let make_leaf = |counts: &[f64]| -> TreeNode {
        TreeNode::leaf_node(counts.iter().map(|c| c / total).collect())
    };

    let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
    if depth >= cfg.max_depth || pure || total < 2.0 * cfg.min_child_rows {
        let idx = nodes.len() as u32;
        nodes.push(make_leaf(&counts));
        return idx;
    }

    let candidates: Vec<usize> = match (cfg.features_per_split, rng.as_deref_mut()) {
        (Some(k), Some(rng)) => rng.sample_indices(view.columns.len(), k.min(view.columns.len())),
        _ => (0..view.columns.len()).collect(),
    };

    let parent_mass = gini_term(&counts, total);
    let find = |&feature: &usize| {
        best_split_for_feature(view, &rows, feature, parent_mass, cfg.min_child_rows)
            .map(|(threshold, decrease)| BestSplit {
                feature,
                threshold,
                decrease,
            })
    };
    // Parallel search pays off only on big nodes; candidate order and the
    // fixed reduction below keep the result identical either way.
    let splits: Vec<Option<BestSplit>> = if rows.len() >= 8192 && candidates.len() > 1 {
        candidates.par_iter().map(find).collect()
    } else {
        candidates.iter().map(find).collect()
    };
    let best = splits.into_iter().flatten().reduce(|a, b| {
        if b.decrease > a.decrease {
            b
        } else {
            a
        }
    });

    let Some(best) = best else {
        let idx = nodes.len() as u32;
        nodes.push(make_leaf(&counts));
        return idx;
    };

    importances[best.feature] += best.decrease * total / n_total;

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
    let left = grow_node(view, left_rows, depth + 1, cfg, rng, importances, n_total, nodes);
    let right = grow_node(view, right_rows, depth + 1, cfg, rng, importances, n_total, nodes);
    nodes[idx].left = left;
    nodes[idx].right = right;
    idx as u32
}

pub(super) fn train(view: &DiscreteView<'_>, params: &LearnerParams) -> TreeModel {
    let cfg = GrowCfg {
        max_depth: params.max_depth,
        min_child_rows: params.min_child_weight,
        features_per_split: None,
    };
    let mut importances = vec![0.0; view.columns.len()];
    let rows: Vec<u32> = (0..view.n_rows as u32).collect();
    let n_total = view.n_rows as f64;
    let tree = grow_classification(view, rows, &cfg, None, &mut importances, n_total);
    normalize_importances(&mut importances);
    TreeModel { tree, importances }
}

#[cfg(test)]
mod tests {
    use crate::learners::fixtures::{discrete_dataset, xor_dataset};
    use crate::learners::{train_tree, LearnerParams};

    #[test]
    fn separable_single_feature_needs_one_split() {
        // value < 5 => class 0, else class 1
        let codes: Vec<u32> = (0..10).collect();
        let labels: Vec<u32> = codes.iter().map(|&v| u32::from(v >= 5)).collect();
        let ds = discrete_dataset(vec![("x", codes.clone())], labels.clone(), 2);
        let model = train_tree(&ds, &LearnerParams::default()).unwrap();
        let preds = model.predict_dataset(&ds).unwrap();
        assert_eq!(preds, labels);
        if let crate::learners::LearnerInner::Tree(t) = &model.inner {
            assert_eq!(t.tree.depth(), 1);
            assert_eq!(t.tree.nodes[0].threshold, 4);
            // single split carries all the importance
            assert_eq!(t.importances, vec![1.0]);
        } else {
            panic!("expected a tree");
        }
    }

    #[test]
    fn constant_labels_yield_single_leaf() {
        let ds = discrete_dataset(vec![("x", vec![0, 1, 2, 3])], vec![1, 1, 1, 1], 2);
        let model = train_tree(&ds, &LearnerParams::default()).unwrap();
        if let crate::learners::LearnerInner::Tree(t) = &model.inner {
            assert_eq!(t.tree.nodes.len(), 1);
            assert!(t.importances.iter().all(|&v| v == 0.0));
        } else {
            panic!("expected a tree");
        }
        assert_eq!(model.predict_row(&[2]).unwrap(), 1);
    }

    #[test]
    fn xor_of_thresholds_is_solved_at_depth_two() {
        let ds = xor_dataset();
        let model = train_tree(&ds, &LearnerParams::default()).unwrap();
        let preds = model.predict_dataset(&ds).unwrap();
        assert_eq!(preds, ds.labels, "XOR fixture must be fit exactly");
        if let crate::learners::LearnerInner::Tree(t) = &model.inner {
            assert_eq!(t.tree.depth(), 2);
        } else {
            panic!("expected a tree");
        }
    }

    #[test]
    fn empty_dataset_errors() {
        let ds = discrete_dataset(vec![("x", vec![])], vec![], 2);
        assert!(train_tree(&ds, &LearnerParams::default()).is_err());
    }

    #[test]
    fn depth_limit_is_respected() {
        let mut rng = crate::rng::StreamRng::new(9);
        let codes: Vec<u32> = (0..200).map(|_| rng.below(20) as u32).collect();
        let labels: Vec<u32> = (0..200).map(|_| rng.below(4) as u32).collect();
        let ds = discrete_dataset(vec![("x", codes)], labels, 4);
        let params = LearnerParams {
            max_depth: 3,
            ..LearnerParams::default()
        };
        let model = train_tree(&ds, &params).unwrap();
        if let crate::learners::LearnerInner::Tree(t) = &model.inner {
            assert!(t.tree.depth() <= 3);
        } else {
            panic!("expected a tree");
        }
    }

    #[test]
    fn thread_count_does_not_change_the_tree() {
        // enough rows to trip the parallel split-search path
        let mut rng = crate::rng::StreamRng::new(44);
        let n = 20_000;
        let cols: Vec<(&str, Vec<u32>)> = vec![
            ("a", (0..n).map(|_| rng.below(30) as u32).collect()),
            ("b", (0..n).map(|_| rng.below(12) as u32).collect()),
            ("c", (0..n).map(|_| rng.below(7) as u32).collect()),
        ];
        let labels: Vec<u32> = (0..n)
            .map(|i| (cols[0].1[i] / 10 + cols[1].1[i] / 6) % 3)
            .collect();
        let ds = discrete_dataset(cols, labels, 3);
        let params = LearnerParams {
            max_depth: 4,
            ..LearnerParams::default()
        };
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| train_tree(&ds, &params).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| train_tree(&ds, &params).unwrap());
        assert_eq!(serial, parallel);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let ds = xor_dataset();
        let model = train_tree(&ds, &LearnerParams::default()).unwrap();
        for row in [[0u32, 0], [0, 3], [3, 0], [3, 3]] {
            let p = model.predict_proba_row(&row).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn feature_count_mismatch_is_rejected() {
        let ds = xor_dataset();
        let model = train_tree(&ds, &LearnerParams::default()).unwrap();
        assert!(model.predict_proba_row(&[0]).is_err());
        // code beyond the reserved bucket
        assert!(model.predict_proba_row(&[9, 0]).is_err());
        // reserved bucket itself is fine
        assert!(model.predict_proba_row(&[4, 4]).is_ok());
    }
}
