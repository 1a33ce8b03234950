//! Categorical naive Bayes with Laplace smoothing.
//!
//! Per class and feature, `P(code | class) = (count + alpha) / (class_count
//! + alpha * (cardinality + 1))`; the `+ 1` covers the reserved bucket for
//! values first seen at predict time. Log-likelihoods are floored at
//! `ln(1e-12)` so alpha = 0 stays finite.

use serde::{Deserialize, Serialize};

use super::LearnerParams;
use crate::encode::DiscreteView;

const LOG_FLOOR: f64 = -27.631021115928547; // ln(1e-12)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub class_log_prior: Vec<f64>,
    /// `log_likelihood[feature][class * (card + 1) + code]`.
    pub log_likelihood: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl NaiveBayesModel {
    pub fn proba(&self, row: &[u32]) -> Vec<f64> {
        let c = self.class_log_prior.len();
        let mut log_post = self.class_log_prior.clone();
        for (feature, &code) in row.iter().enumerate() {
            let table = &self.log_likelihood[feature];
            let buckets = table.len() / c;
            for (k, slot) in log_post.iter_mut().enumerate() {
                *slot += table[k * buckets + code as usize];
            }
        }
        super::gbt::softmax_inplace(&mut log_post);
        log_post
    }
}

pub(super) fn train(view: &DiscreteView<'_>, params: &LearnerParams) -> NaiveBayesModel {
    let c = view.n_classes;
    let n = view.n_rows;
    let alpha = params.alpha;

    let mut class_counts = vec![0.0f64; c];
    for &label in view.labels {
        class_counts[label as usize] += 1.0;
    }
    let class_log_prior = class_counts
        .iter()
        .map(|&cnt| (cnt / n as f64).max(1e-12).ln())
        .collect();

    let log_likelihood = view
        .columns
        .iter()
        .enumerate()
        .map(|(f, column)| {
            let buckets = view.cardinalities[f] as usize + 1;
            let mut counts = vec![0.0f64; c * buckets];
            for (i, &code) in column.iter().enumerate() {
                counts[view.labels[i] as usize * buckets + code as usize] += 1.0;
            }
            let mut table = vec![0.0f64; c * buckets];
            for k in 0..c {
                let denom = class_counts[k] + alpha * buckets as f64;
                for b in 0..buckets {
                    let p = if denom > 0.0 {
                        (counts[k * buckets + b] + alpha) / denom
                    } else {
                        0.0
                    };
                    table[k * buckets + b] = p.ln().max(LOG_FLOOR);
                }
            }
            table
        })
        .collect();

    NaiveBayesModel {
        class_log_prior,
        log_likelihood,
        alpha,
    }
}
