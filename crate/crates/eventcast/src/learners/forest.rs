//! Random forest: bootstrapped CART trees with per-split feature
//! subsampling. Each tree owns an RNG substream derived from its index, so
//! training across a thread pool yields the same forest as a serial run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_classification, GrowCfg, Tree};
use super::{normalize_importances, LearnerParams};
use crate::encode::DiscreteView;
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub importances: Vec<f64>,
}

impl ForestModel {
    /// Mean of the member trees' leaf class distributions.
    pub fn proba(&self, row: &[u32]) -> Vec<f64> {
        let n_classes = self.trees[0].leaf_for(row).len();
        let mut acc = vec![0.0f64; n_classes];
        for tree in &self.trees {
            for (slot, &p) in acc.iter_mut().zip(tree.leaf_for(row)) {
                *slot += p;
            }
        }
        let scale = 1.0 / self.trees.len() as f64;
        for slot in &mut acc {
            *slot *= scale;
        }
        acc
    }
}

pub(super) fn train(view: &DiscreteView<'_>, params: &LearnerParams) -> ForestModel {
    let n = view.n_rows;
    let d = view.columns.len();
    let features_per_split = (d as f64).sqrt().ceil() as usize;
    let root = StreamRng::new(params.seed).derive("forest");

    let per_tree: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = root.derive_indexed("tree", t as u64);
            let rows: Vec<u32> = if params.bootstrap {
                (0..n).map(|_| rng.below(n as u64) as u32).collect()
            } else {
                (0..n as u32).collect()
            };
            let cfg = GrowCfg {
                max_depth: params.max_depth,
                min_child_rows: params.min_child_weight,
                features_per_split: Some(features_per_split),
            };
            let mut importances = vec![0.0f64; d];
            let tree =
                grow_classification(view, rows, &cfg, Some(&mut rng), &mut importances, n as f64);
            (tree, importances)
        })
        .collect();

    let mut importances = vec![0.0f64; d];
    let mut trees = Vec::with_capacity(params.n_trees);
    for (tree, local) in per_tree {
        for (dst, src) in importances.iter_mut().zip(&local) {
            *dst += src;
        }
        trees.push(tree);
    }
    normalize_importances(&mut importances);
    ForestModel { trees, importances }
}

#[cfg(test)]
mod tests {
    use crate::learners::fixtures::{discrete_dataset, xor_dataset};
    use crate::learners::{train_forest, train_tree, LearnerParams};

    #[test]
    fn degenerate_forest_equals_single_tree() {
        let ds = xor_dataset();
        let forest_params = LearnerParams {
            n_trees: 1,
            bootstrap: false,
            ..LearnerParams::default()
        };
        // one tree, no bootstrap, and all features considered per split
        // (sqrt(2) rounds up to 2): identical predictions to plain CART
        let forest = train_forest(&ds, &forest_params).unwrap();
        let tree = train_tree(&ds, &LearnerParams::default()).unwrap();
        assert_eq!(
            forest.predict_dataset(&ds).unwrap(),
            tree.predict_dataset(&ds).unwrap()
        );
    }

    #[test]
    fn forest_fits_separable_data() {
        let mut rng = crate::rng::StreamRng::new(21);
        let n = 240;
        let x: Vec<u32> = (0..n).map(|_| rng.below(12) as u32).collect();
        let y: Vec<u32> = x.iter().map(|&v| v / 4).collect();
        let noise: Vec<u32> = (0..n).map(|_| rng.below(5) as u32).collect();
        let ds = discrete_dataset(vec![("x", x), ("noise", noise)], y, 3);
        let params = LearnerParams {
            n_trees: 25,
            ..LearnerParams::default()
        };
        let model = train_forest(&ds, &params).unwrap();
        let preds = model.predict_dataset(&ds).unwrap();
        let correct = preds.iter().zip(&ds.labels).filter(|(a, b)| a == b).count();
        assert_eq!(correct, n, "forest should fit separable training data");
    }

    #[test]
    fn same_seed_same_model_bytes() {
        let ds = xor_dataset();
        let params = LearnerParams {
            n_trees: 12,
            ..LearnerParams::default()
        };
        let a = train_forest(&ds, &params).unwrap();
        let b = train_forest(&ds, &params).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
        let different_seed = LearnerParams { seed: 1, ..params };
        let c = train_forest(&ds, &different_seed).unwrap();
        assert_ne!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&c).unwrap()
        );
    }

    #[test]
    fn thread_count_does_not_change_the_forest() {
        let ds = xor_dataset();
        let params = LearnerParams {
            n_trees: 16,
            ..LearnerParams::default()
        };
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| train_forest(&ds, &params).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| train_forest(&ds, &params).unwrap());
        assert_eq!(serial, parallel);
    }
}
