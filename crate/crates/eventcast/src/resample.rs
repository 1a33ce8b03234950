//! Class-imbalance mitigation on training data.
//!
//! Undersampling thins every class that exceeds a cap relative to the rarest
//! class; oversampling pads rare classes with duplicated rows of their own
//! class. Both are plain row selection — features here are categorical codes,
//! so interpolated synthetic rows would be meaningless. Evaluation data must
//! never pass through here.

use serde::{Deserialize, Serialize};

use crate::encode::EncodedDataset;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Resampling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    #[default]
    None,
    Under,
    Over,
    Hybrid,
}

impl std::str::FromStr for ResampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ResampleMode::None),
            "under" => Ok(ResampleMode::Under),
            "over" => Ok(ResampleMode::Over),
            "hybrid" => Ok(ResampleMode::Hybrid),
            other => Err(Error::config(format!(
                "unknown resample mode {other:?}; expected none|under|over|hybrid"
            ))),
        }
    }
}

/// Resampling parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub mode: ResampleMode,
    /// Largest allowed majority:minority count ratio after undersampling.
    pub majority_cap_ratio: f64,
    /// Oversample each minority up to this fraction of the majority count.
    pub minority_target_ratio: f64,
    pub seed: u64,
}

impl Default for ResamplePlan {
    fn default() -> Self {
        ResamplePlan {
            mode: ResampleMode::None,
            majority_cap_ratio: 10.0,
            minority_target_ratio: 0.1,
            seed: 0,
        }
    }
}

impl ResamplePlan {
    fn validate(&self) -> Result<()> {
        if self.mode == ResampleMode::None {
            return Ok(());
        }
        if self.majority_cap_ratio < 1.0 {
            return Err(Error::config(format!(
                "resample.majority_cap_ratio must be >= 1, got {}",
                self.majority_cap_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.minority_target_ratio) {
            return Err(Error::config(format!(
                "resample.minority_target_ratio must be in [0, 1], got {}",
                self.minority_target_ratio
            )));
        }
        Ok(())
    }
}

fn rows_by_class(dataset: &EncodedDataset) -> Vec<Vec<usize>> {
    let mut per_class = vec![Vec::new(); dataset.n_classes()];
    for (row, &label) in dataset.labels.iter().enumerate() {
        per_class[label as usize].push(row);
    }
    per_class
}

/// Thin every class whose count exceeds `majority_cap_ratio` times the
/// rarest class down to exactly that cap (rounded down), keeping rows chosen
/// uniformly without replacement.
pub fn undersample(dataset: &EncodedDataset, plan: &ResamplePlan) -> Result<EncodedDataset> {
    plan.validate()?;
    if !matches!(plan.mode, ResampleMode::Under | ResampleMode::Hybrid) {
        return Err(Error::config(format!(
            "undersample called with mode {:?}",
            plan.mode
        )));
    }
    let per_class = rows_by_class(dataset);
    let present: Vec<usize> = per_class.iter().map(Vec::len).filter(|&n| n > 0).collect();
    if present.len() < 2 {
        return Err(Error::data(
            "undersampling needs at least two observed classes".to_string(),
        ));
    }
    let min_count = *present.iter().min().expect("nonempty");
    let cap = (plan.majority_cap_ratio * min_count as f64).floor() as usize;

    let mut rng = StreamRng::new(plan.seed).derive("resample/under");
    let mut keep = Vec::new();
    for (class, rows) in per_class.iter().enumerate() {
        if rows.len() > cap {
            let mut class_rng = rng.derive_indexed("class", class as u64);
            let chosen = class_rng.sample_indices(rows.len(), cap);
            keep.extend(chosen.into_iter().map(|i| rows[i]));
        } else {
            keep.extend_from_slice(rows);
        }
    }
    let _ = rng.next_u64();
    keep.sort_unstable();
    Ok(dataset.subset_rows(&keep))
}

/// Pad every class below `minority_target_ratio` times the majority count
/// with duplicates of its own rows, drawn uniformly with replacement. All
/// original rows are retained.
pub fn oversample(dataset: &EncodedDataset, plan: &ResamplePlan) -> Result<EncodedDataset> {
    plan.validate()?;
    if !matches!(plan.mode, ResampleMode::Over | ResampleMode::Hybrid) {
        return Err(Error::config(format!(
            "oversample called with mode {:?}",
            plan.mode
        )));
    }
    let per_class = rows_by_class(dataset);
    let majority = per_class.iter().map(Vec::len).max().unwrap_or(0);
    let target = (plan.minority_target_ratio * majority as f64).ceil() as usize;

    let rng = StreamRng::new(plan.seed).derive("resample/over");
    let mut rows: Vec<usize> = (0..dataset.n_rows).collect();
    for (class, class_rows) in per_class.iter().enumerate() {
        if class_rows.len() >= target {
            continue;
        }
        if class_rows.is_empty() {
            return Err(Error::data(format!(
                "class {:?} has no rows to duplicate",
                dataset.class_names[class]
            )));
        }
        let mut class_rng = rng.derive_indexed("class", class as u64);
        for _ in 0..target - class_rows.len() {
            rows.push(class_rows[class_rng.index(class_rows.len())]);
        }
    }
    Ok(dataset.subset_rows(&rows))
}

/// Apply a plan to a training split: `none` is the identity, `hybrid` caps
/// the majority first and then pads minorities.
pub fn resample(dataset: &EncodedDataset, plan: &ResamplePlan) -> Result<EncodedDataset> {
    match plan.mode {
        ResampleMode::None => Ok(dataset.clone()),
        ResampleMode::Under => undersample(dataset, plan),
        ResampleMode::Over => oversample(dataset, plan),
        ResampleMode::Hybrid => {
            let thinned = undersample(dataset, plan)?;
            oversample(&thinned, plan)
        }
    }
}
