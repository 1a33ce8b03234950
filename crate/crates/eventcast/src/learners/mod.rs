//! Multiclass classifiers over ordinal-coded features.
//!
//! Four learners cover the model-selection phase: a CART decision tree,
//! a random forest, gradient-boosted trees with a softmax objective, and
//! categorical naive Bayes. All splits are ordinal threshold splits on
//! integer codes (`code <= threshold` goes left); nothing is one-hot
//! expanded. Training is deterministic for a given seed regardless of the
//! worker-thread count.

mod bundle;
mod forest;
mod gbt;
mod nbayes;
mod tree;

pub use bundle::{load_model, save_model, ModelBundle};
pub use forest::ForestModel;
pub use gbt::{multiclass_log_loss, softmax_grad_hess, GbtModel};
pub use nbayes::NaiveBayesModel;
pub use tree::{Tree, TreeModel, TreeNode, NO_CHILD};

use serde::{Deserialize, Serialize};

use crate::encode::{DiscreteView, EncodedDataset, FeatureMeta};
use crate::error::{Error, Result};

/// Which learner to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Tree,
    Forest,
    Gbt,
    NBayes,
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            LearnerKind::Tree => "tree",
            LearnerKind::Forest => "forest",
            LearnerKind::Gbt => "gbt",
            LearnerKind::NBayes => "nbayes",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(LearnerKind::Tree),
            "forest" => Ok(LearnerKind::Forest),
            "gbt" => Ok(LearnerKind::Gbt),
            "nbayes" => Ok(LearnerKind::NBayes),
            other => Err(Error::config(format!(
                "unknown learner {other:?}; expected tree|forest|gbt|nbayes"
            ))),
        }
    }
}

/// Hyper-parameters shared across the learners; each learner reads the
/// fields that concern it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub max_depth: usize,
    /// Boosting rounds (gbt).
    pub n_rounds: usize,
    /// Shrinkage applied to gbt leaf values.
    pub learning_rate: f64,
    /// L2 regularization on gbt leaf weights.
    pub lambda: f64,
    /// Minimum child weight: rows for trees/forests, hessian mass for gbt.
    pub min_child_weight: f64,
    /// Trees in a forest. Per-split feature subsampling is fixed at
    /// ceil(sqrt(n_features)).
    pub n_trees: usize,
    pub bootstrap: bool,
    /// Laplace smoothing for naive Bayes.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            max_depth: 6,
            n_rounds: 100,
            learning_rate: 0.3,
            lambda: 1.0,
            min_child_weight: 1.0,
            n_trees: 100,
            bootstrap: true,
            alpha: 1.0,
            seed: 0,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.max_depth as f64, "max_depth"),
            (self.learning_rate, "learning_rate"),
            (self.n_trees as f64, "n_trees"),
        ];
        for (v, name) in positive {
            if v <= 0.0 {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        let nonnegative = [
            (self.lambda, "lambda"),
            (self.min_child_weight, "min_child_weight"),
            (self.alpha, "alpha"),
        ];
        for (v, name) in nonnegative {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::config(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Feature layout a model was trained on; checked again at predict time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub class_names: Vec<String>,
    pub features: Vec<FeatureMeta>,
    pub params: LearnerParams,
    /// Hash over feature names, kinds, and cardinalities.
    pub fingerprint: u64,
}

impl ModelMeta {
    pub fn new(
        class_names: Vec<String>,
        features: Vec<FeatureMeta>,
        params: LearnerParams,
    ) -> ModelMeta {
        let fingerprint = fingerprint(&features, &class_names);
        ModelMeta {
            class_names,
            features,
            params,
            fingerprint,
        }
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Check that a row of codes is shaped for this model: right length,
    /// every code within the column's domain or its reserved bucket.
    pub fn check_row(&self, row: &[u32]) -> Result<()> {
        if row.len() != self.features.len() {
            return Err(Error::data(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.features.len()
            )));
        }
        for (code, meta) in row.iter().zip(&self.features) {
            if *code > meta.cardinality() {
                return Err(Error::data(format!(
                    "code {code} in column {:?} is beyond the reserved bucket {}",
                    meta.name,
                    meta.cardinality()
                )));
            }
        }
        Ok(())
    }

    fn check_view(&self, view: &DiscreteView<'_>) -> Result<()> {
        if view.columns.len() != self.features.len() {
            return Err(Error::data(format!(
                "dataset has {} features, model expects {}",
                view.columns.len(),
                self.features.len()
            )));
        }
        let expected = fingerprint_parts(
            view.names.iter().copied(),
            view.cardinalities.iter().copied(),
            self.class_names.iter().map(|s| s.as_str()),
        );
        if expected != self.fingerprint {
            return Err(Error::data(
                "dataset feature layout does not match the model fingerprint".to_string(),
            ));
        }
        Ok(())
    }
}

/// Stable hash over the feature layout and class list.
pub fn fingerprint(features: &[FeatureMeta], class_names: &[String]) -> u64 {
    fingerprint_parts(
        features.iter().map(|f| f.name.as_str()),
        features.iter().map(|f| f.cardinality()),
        class_names.iter().map(|s| s.as_str()),
    )
}

fn fingerprint_parts<'a>(
    names: impl Iterator<Item = &'a str>,
    cards: impl Iterator<Item = u32>,
    classes: impl Iterator<Item = &'a str>,
) -> u64 {
    let mut text = String::new();
    for (name, card) in names.zip(cards) {
        text.push_str(name);
        text.push('\x1f');
        text.push_str(&card.to_string());
        text.push('\x1e');
    }
    text.push('\x1d');
    for class in classes {
        text.push_str(class);
        text.push('\x1e');
    }
    crate::rng::hash_bytes(text.as_bytes())
}

/// A trained classifier with its layout metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerModel {
    pub meta: ModelMeta,
    pub inner: LearnerInner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum LearnerInner {
    Tree(TreeModel),
    Forest(ForestModel),
    Gbt(GbtModel),
    NBayes(NaiveBayesModel),
}

impl LearnerModel {
    pub fn kind(&self) -> LearnerKind {
        match &self.inner {
            LearnerInner::Tree(_) => LearnerKind::Tree,
            LearnerInner::Forest(_) => LearnerKind::Forest,
            LearnerInner::Gbt(_) => LearnerKind::Gbt,
            LearnerInner::NBayes(_) => LearnerKind::NBayes,
        }
    }

    /// Per-class probabilities for one row of codes. Rows are validated
    /// against the training layout first.
    pub fn predict_proba_row(&self, row: &[u32]) -> Result<Vec<f64>> {
        self.meta.check_row(row)?;
        Ok(self.proba_unchecked(row))
    }

    /// Probability vector without the per-row shape check; used on bulk
    /// paths that validate the whole container once.
    #[inline]
    pub fn proba_unchecked(&self, row: &[u32]) -> Vec<f64> {
        match &self.inner {
            LearnerInner::Tree(m) => m.proba(row),
            LearnerInner::Forest(m) => m.proba(row),
            LearnerInner::Gbt(m) => m.proba(row),
            LearnerInner::NBayes(m) => m.proba(row),
        }
    }

    /// Class code for one row: argmax probability, ties to the lowest code.
    pub fn predict_row(&self, row: &[u32]) -> Result<u32> {
        let probs = self.predict_proba_row(row)?;
        Ok(argmax(&probs))
    }

    /// Predict every row of a discrete dataset.
    pub fn predict_dataset(&self, dataset: &EncodedDataset) -> Result<Vec<u32>> {
        let view = dataset.discrete_view()?;
        self.meta.check_view(&view)?;
        let mut out = Vec::with_capacity(view.n_rows);
        let mut row = Vec::with_capacity(view.columns.len());
        for i in 0..view.n_rows {
            row.clear();
            row.extend(view.columns.iter().map(|col| col[i]));
            out.push(argmax(&self.proba_unchecked(&row)));
        }
        Ok(out)
    }

    /// Per-class probabilities for every row of a discrete dataset.
    pub fn predict_proba_dataset(&self, dataset: &EncodedDataset) -> Result<Vec<Vec<f64>>> {
        let view = dataset.discrete_view()?;
        self.meta.check_view(&view)?;
        let mut out = Vec::with_capacity(view.n_rows);
        let mut row = Vec::with_capacity(view.columns.len());
        for i in 0..view.n_rows {
            row.clear();
            row.extend(view.columns.iter().map(|col| col[i]));
            out.push(self.proba_unchecked(&row));
        }
        Ok(out)
    }

    /// Normalized per-feature importance: total split gain for gbt, total
    /// impurity decrease for tree and forest. Naive Bayes has no notion of
    /// split importance.
    pub fn feature_importance(&self) -> Result<Vec<f64>> {
        match &self.inner {
            LearnerInner::Tree(m) => Ok(m.importances.clone()),
            LearnerInner::Forest(m) => Ok(m.importances.clone()),
            LearnerInner::Gbt(m) => Ok(m.importances.clone()),
            LearnerInner::NBayes(_) => Err(Error::config(
                "naive Bayes has no feature importances".to_string(),
            )),
        }
    }
}

/// Index of the largest value, ties broken toward the lowest index.
#[inline]
pub fn argmax(values: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as u32
}

/// Normalize importances to sum to 1; all-zero stays all-zero.
pub(crate) fn normalize_importances(raw: &mut [f64]) {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        for v in raw.iter_mut() {
            *v /= total;
        }
    }
}

fn check_trainable(view: &DiscreteView<'_>) -> Result<()> {
    if view.n_rows == 0 {
        return Err(Error::data("cannot train on an empty dataset".to_string()));
    }
    if view.columns.is_empty() {
        return Err(Error::data("cannot train with zero features".to_string()));
    }
    if view.n_classes < 2 {
        return Err(Error::data(
            "training needs at least two classes in the schema".to_string(),
        ));
    }
    Ok(())
}

/// Train a learner of the given kind.
pub fn train(
    kind: LearnerKind,
    dataset: &EncodedDataset,
    params: &LearnerParams,
) -> Result<LearnerModel> {
    params.validate()?;
    let view = dataset.discrete_view()?;
    check_trainable(&view)?;
    let meta = ModelMeta::new(
        dataset.class_names.clone(),
        dataset.features.iter().map(|f| f.meta.clone()).collect(),
        params.clone(),
    );
    let inner = match kind {
        LearnerKind::Tree => LearnerInner::Tree(tree::train(&view, params)),
        LearnerKind::Forest => LearnerInner::Forest(forest::train(&view, params)),
        LearnerKind::Gbt => LearnerInner::Gbt(gbt::train(&view, params)),
        LearnerKind::NBayes => LearnerInner::NBayes(nbayes::train(&view, params)),
    };
    Ok(LearnerModel { meta, inner })
}

/// Train a CART decision tree (Gini impurity, exact ordinal split search).
pub fn train_tree(dataset: &EncodedDataset, params: &LearnerParams) -> Result<LearnerModel> {
    train(LearnerKind::Tree, dataset, params)
}

/// Train a random forest: bootstrapped rows, per-split feature subsampling.
pub fn train_forest(dataset: &EncodedDataset, params: &LearnerParams) -> Result<LearnerModel> {
    train(LearnerKind::Forest, dataset, params)
}

/// Train gradient-boosted trees with the multiclass softmax objective.
pub fn train_gbt(dataset: &EncodedDataset, params: &LearnerParams) -> Result<LearnerModel> {
    train(LearnerKind::Gbt, dataset, params)
}

/// Train categorical naive Bayes with Laplace smoothing.
pub fn train_nbayes(dataset: &EncodedDataset, params: &LearnerParams) -> Result<LearnerModel> {
    train(LearnerKind::NBayes, dataset, params)
}
