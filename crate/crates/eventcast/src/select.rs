//! Feature extraction: chi-squared scoring, score scaling, top-k selection,
//! and the two elimination sweeps (k-best and recursive).
//!
//! The default chi-squared statistic is the frequency form used by k-best
//! selectors in the usual ML toolkits: per feature, the observed value is the
//! per-class sum of the (nonnegative) codes, the expected value splits the
//! grand total by class frequency, and the score is `sum (O-E)^2 / E`. A
//! contingency-table variant over (class, code) cells is available but off by
//! default.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::EncodedDataset;
use crate::error::{Error, Result};
use crate::eval::{confusion, metrics};
use crate::learners::{train_gbt, LearnerModel, LearnerParams};
use crate::rng::StreamRng;

/// Scored feature: raw statistic, `[0.1, 0.9]` scaled value, and rank
/// (1 = highest score).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub score: f64,
    pub scaled: f64,
    pub rank: usize,
    /// The feature was all-zero, so its score of 0 is vacuous.
    pub all_zero: bool,
}

/// Per-feature scores in original column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScoreTable {
    pub rows: Vec<FeatureScore>,
}

impl FeatureScoreTable {
    /// Column indices ordered best-first (ties keep column order).
    pub fn ranked_indices(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by(|&a, &b| {
            self.rows[b]
                .score
                .partial_cmp(&self.rows[a].score)
                .expect("chi2 scores are finite")
                .then(a.cmp(&b))
        });
        order
    }

    /// CSV in the three-column score-table layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,kbest_score,softmax\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.name, row.score, row.scaled));
        }
        out
    }
}

/// Which chi-squared statistic to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chi2Variant {
    /// Per-class sums of feature values (k-best selector lineage).
    #[default]
    Frequency,
    /// Classic (class, code) contingency table.
    Contingency,
}

impl std::str::FromStr for Chi2Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(Chi2Variant::Frequency),
            "contingency" => Ok(Chi2Variant::Contingency),
            other => Err(Error::config(format!(
                "unknown chi2 variant {other:?}; expected frequency|contingency"
            ))),
        }
    }
}

/// Chi-squared scores for every feature (frequency form).
pub fn chi2_scores(dataset: &EncodedDataset) -> Result<FeatureScoreTable> {
    chi2_scores_with(dataset, Chi2Variant::Frequency)
}

/// Chi-squared scores with an explicit variant.
pub fn chi2_scores_with(
    dataset: &EncodedDataset,
    variant: Chi2Variant,
) -> Result<FeatureScoreTable> {
    let view = dataset.discrete_view()?;
    if view.n_rows == 0 {
        return Err(Error::data("cannot score an empty dataset".to_string()));
    }
    let observed_classes = {
        let mut seen = vec![false; view.n_classes];
        for &l in view.labels {
            seen[l as usize] = true;
        }
        seen
    };
    if observed_classes.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::data(
            "chi-squared scoring needs at least two observed classes".to_string(),
        ));
    }

    let mut class_counts = vec![0.0f64; view.n_classes];
    for &l in view.labels {
        class_counts[l as usize] += 1.0;
    }
    let n = view.n_rows as f64;

    let scores: Vec<(f64, bool)> = view
        .columns
        .iter()
        .map(|column| match variant {
            Chi2Variant::Frequency => {
                let mut observed = vec![0.0f64; view.n_classes];
                for (i, &code) in column.iter().enumerate() {
                    observed[view.labels[i] as usize] += f64::from(code);
                }
                let total: f64 = observed.iter().sum();
                if total == 0.0 {
                    return (0.0, true);
                }
                let score = observed
                    .iter()
                    .zip(&class_counts)
                    .map(|(&o, &count)| {
                        let expected = count / n * total;
                        if expected > 0.0 {
                            (o - expected).powi(2) / expected
                        } else {
                            0.0
                        }
                    })
                    .sum();
                (score, false)
            }
            Chi2Variant::Contingency => {
                let card = column.iter().copied().max().unwrap_or(0) as usize + 1;
                let mut cells = vec![0.0f64; view.n_classes * card];
                for (i, &code) in column.iter().enumerate() {
                    cells[view.labels[i] as usize * card + code as usize] += 1.0;
                }
                let mut code_totals = vec![0.0f64; card];
                for k in 0..view.n_classes {
                    for (code, total) in code_totals.iter_mut().enumerate() {
                        *total += cells[k * card + code];
                    }
                }
                let all_zero = column.iter().all(|&c| c == 0);
                let score = (0..view.n_classes)
                    .flat_map(|k| (0..card).map(move |code| (k, code)))
                    .map(|(k, code)| {
                        let expected = class_counts[k] * code_totals[code] / n;
                        if expected > 0.0 {
                            (cells[k * card + code] - expected).powi(2) / expected
                        } else {
                            0.0
                        }
                    })
                    .sum();
                (score, all_zero)
            }
        })
        .collect();

    let raw: Vec<f64> = scores.iter().map(|&(s, _)| s).collect();
    let scaled = scale_scores(&raw);
    let mut rows: Vec<FeatureScore> = dataset
        .features
        .iter()
        .zip(scores)
        .zip(scaled)
        .map(|((feature, (score, all_zero)), scaled)| FeatureScore {
            name: feature.meta.name.clone(),
            score,
            scaled,
            rank: 0,
            all_zero,
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        rows[b]
            .score
            .partial_cmp(&rows[a].score)
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    for (rank, idx) in order.into_iter().enumerate() {
        rows[idx].rank = rank + 1;
    }
    Ok(FeatureScoreTable { rows })
}

/// Affine map of scores onto `[0.1, 0.9]`: `0.1 + 0.8 (s - min) / (max -
/// min)`. All-equal inputs map to 0.5.
pub fn scale_scores(scores: &[f64]) -> Vec<f64> {
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores.is_empty() || max == min {
        return vec![0.5; scores.len()];
    }
    scores
        .iter()
        .map(|&s| 0.1 + 0.8 * (s - min) / (max - min))
        .collect()
}

/// Keep the `k` highest-chi-squared features, ties broken by column order.
/// Selected columns keep their original relative order.
pub fn select_k_best(dataset: &EncodedDataset, k: usize) -> Result<EncodedDataset> {
    let table = chi2_scores(dataset)?;
    select_k_from(dataset, &table, k)
}

/// Top-k selection against an already computed score table.
pub fn select_k_from(
    dataset: &EncodedDataset,
    table: &FeatureScoreTable,
    k: usize,
) -> Result<EncodedDataset> {
    if k == 0 || k > dataset.n_features() {
        return Err(Error::config(format!(
            "k must be in 1..={}, got {k}",
            dataset.n_features()
        )));
    }
    let mut chosen: Vec<usize> = table.ranked_indices().into_iter().take(k).collect();
    chosen.sort_unstable();
    Ok(dataset.select_columns(&chosen))
}

/// One row of a feature-count sweep: macro metrics at `k` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Render sweep rows with the fixed header `k,accuracy,precision,recall,f1`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,accuracy,precision,recall,f1\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.k, row.accuracy, row.precision, row.recall, row.f1
        ));
    }
    out
}

fn eval_on(
    model: &LearnerModel,
    test: &EncodedDataset,
    k: usize,
) -> Result<SweepRow> {
    let predictions = model.predict_dataset(test)?;
    let report = metrics(&confusion(&test.labels, &predictions, &test.class_names)?)?;
    Ok(SweepRow {
        k,
        accuracy: report.accuracy,
        precision: report.macro_precision,
        recall: report.macro_recall,
        f1: report.macro_f1,
    })
}

/// Train/evaluate a gbt at every `k` in `ks`, selecting the top-k features
/// by chi-squared score fitted on the training split only. The jobs are
/// independent, so they run in parallel; each derives its own seed from
/// `(params.seed, k)`.
pub fn kbest_sweep(
    train: &EncodedDataset,
    test: &EncodedDataset,
    params: &LearnerParams,
    ks: &[usize],
) -> Result<Vec<SweepRow>> {
    let table = chi2_scores(train)?;
    let root = StreamRng::new(params.seed);
    let mut rows = ks
        .par_iter()
        .map(|&k| {
            let train_k = select_k_from(train, &table, k)?;
            let test_k = select_k_from(test, &table, k)?;
            let job_params = LearnerParams {
                seed: root.derive_indexed("sweep/kbest", k as u64).seed(),
                ..params.clone()
            };
            let model = train_gbt(&train_k, &job_params)?;
            eval_on(&model, &test_k, k)
        })
        .collect::<Result<Vec<SweepRow>>>()?;
    rows.sort_by_key(|r| r.k);
    Ok(rows)
}

/// Recursive feature elimination: train a gbt, record metrics, drop the
/// `step` least-important features, and repeat down to a floor of 5
/// features. Returns the elimination order (weakest first, covering every
/// feature) and the metric rows from widest to narrowest.
pub fn rfe_sweep(
    train: &EncodedDataset,
    test: &EncodedDataset,
    params: &LearnerParams,
    step: usize,
) -> Result<(Vec<String>, Vec<SweepRow>)> {
    const FLOOR: usize = 5;
    if step == 0 {
        return Err(Error::config("rfe step must be at least 1".to_string()));
    }
    let root = StreamRng::new(params.seed);
    let mut current: Vec<usize> = (0..train.n_features()).collect();
    let mut eliminated: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    let names = train.feature_names();
    for iteration in 0.. {
        let train_cur = train.select_columns(&current);
        let test_cur = test.select_columns(&current);
        let job_params = LearnerParams {
            seed: root.derive_indexed("sweep/rfe", iteration).seed(),
            ..params.clone()
        };
        let model = train_gbt(&train_cur, &job_params)?;
        rows.push(eval_on(&model, &test_cur, current.len())?);
        if current.len() <= FLOOR {
            // remaining features join the order weakest-first
            let importance = model.feature_importance()?;
            let mut rest: Vec<usize> = (0..current.len()).collect();
            rest.sort_by(|&a, &b| {
                importance[a]
                    .partial_cmp(&importance[b])
                    .expect("finite importance")
                    .then(a.cmp(&b))
            });
            eliminated.extend(rest.into_iter().map(|i| names[current[i]].clone()));
            break;
        }
        let importance = model.feature_importance()?;
        let mut by_weakness: Vec<usize> = (0..current.len()).collect();
        by_weakness.sort_by(|&a, &b| {
            importance[a]
                .partial_cmp(&importance[b])
                .expect("finite importance")
                .then(a.cmp(&b))
        });
        let drop_now = step.min(current.len() - FLOOR);
        let dropped: Vec<usize> = by_weakness[..drop_now].to_vec();
        eliminated.extend(dropped.iter().map(|&i| names[current[i]].clone()));
        let keep: Vec<usize> = (0..current.len()).filter(|i| !dropped.contains(i)).collect();
        current = keep.into_iter().map(|i| current[i]).collect();
    }
    Ok((eliminated, rows))
}

/// Wrap a model's importances in the standard score-table shape.
pub fn importance_table(model: &LearnerModel) -> Result<FeatureScoreTable> {
    let importance = model.feature_importance()?;
    let scaled = scale_scores(&importance);
    let mut rows: Vec<FeatureScore> = model
        .meta
        .features
        .iter()
        .zip(&importance)
        .zip(scaled)
        .map(|((meta, &score), scaled)| FeatureScore {
            name: meta.name.clone(),
            score,
            scaled,
            rank: 0,
            all_zero: score == 0.0,
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        rows[b]
            .score
            .partial_cmp(&rows[a].score)
            .expect("finite importance")
            .then(a.cmp(&b))
    });
    for (rank, idx) in order.into_iter().enumerate() {
        rows[idx].rank = rank + 1;
    }
    Ok(FeatureScoreTable { rows })
}
