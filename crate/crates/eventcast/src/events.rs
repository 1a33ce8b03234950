//! The event space: every representable combination of the selected
//! features' observed codes.
//!
//! Its exact size is the big-integer product of the per-feature domain
//! sizes, which overflows machine words almost immediately — a few dozen
//! discretized flow features already give 10^50-scale spaces. Small spaces
//! are enumerated exhaustively in mixed-radix order; large ones are sampled
//! coordinate-wise. A forecast classifies those events and reports each
//! attack class's share of the space, both raw and multiplied by the model's
//! holdout accuracy (the weighted values compensate for classifier error and
//! deliberately do not form a distribution).

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::EncodedDataset;
use crate::error::{Error, Result};
use crate::learners::{LearnerModel, ModelBundle};
use crate::rng::StreamRng;

/// Default enumeration cutoff: spaces larger than this are sampled.
pub const DEFAULT_ENUM_LIMIT: u64 = 10_000_000;
/// Default sample size for spaces above the cutoff.
pub const DEFAULT_SAMPLE_SIZE: usize = 1_000_000;

/// Samples per RNG substream chunk. Sampling derives one substream per
/// chunk, so the stream of events is identical for any worker count.
const SAMPLE_CHUNK: usize = 8192;

/// One feature's observed domain inside the event space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDomain {
    pub name: String,
    /// Distinct codes observed in training, ascending.
    pub codes: Vec<u32>,
    /// How often each code was observed (parallel to `codes`); powers the
    /// optional empirical-marginal sampling mode.
    pub counts: Vec<u64>,
}

/// The discrete event space spanned by a feature list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpaceSpec {
    pub features: Vec<EventDomain>,
}

/// How sampled coordinates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMode {
    /// Every code of a domain equally likely.
    #[default]
    Uniform,
    /// Codes weighted by their observed training frequency.
    Empirical,
}

impl std::str::FromStr for MarginalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(MarginalMode::Uniform),
            "empirical" => Ok(MarginalMode::Empirical),
            other => Err(Error::config(format!(
                "unknown marginal mode {other:?}; expected uniform|empirical"
            ))),
        }
    }
}

impl EventSpaceSpec {
    /// Exact number of events: the product of the domain sizes.
    pub fn size(&self) -> BigUint {
        self.features
            .iter()
            .fold(BigUint::from(1u32), |acc, f| acc * f.codes.len())
    }

    /// Size as `f64` when it fits, for quick order-of-magnitude displays.
    pub fn size_f64(&self) -> f64 {
        self.features
            .iter()
            .fold(1.0f64, |acc, f| acc * f.codes.len() as f64)
    }

    /// log10 of the size (sum of domain logs, safe at any scale).
    pub fn size_log10(&self) -> f64 {
        self.features
            .iter()
            .map(|f| (f.codes.len() as f64).log10())
            .sum()
    }

    /// Scientific-notation rendering of the exact size, e.g. `4.33e+51`.
    pub fn size_scientific(&self) -> String {
        let digits = self.size().to_string();
        let exp = digits.len() - 1;
        if digits.len() == 1 {
            return digits;
        }
        let mantissa: String = digits.chars().take(3).collect();
        format!("{}.{}e+{}", &mantissa[..1], &mantissa[1..], exp)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }
}

/// Collect the observed domains of the selected features from a dataset.
pub fn extract_domains(dataset: &EncodedDataset, selected: &[String]) -> Result<EventSpaceSpec> {
    if selected.is_empty() {
        return Err(Error::config(
            "event space needs at least one feature".to_string(),
        ));
    }
    let mut features = Vec::with_capacity(selected.len());
    for name in selected {
        let idx = dataset
            .feature_index(name)
            .ok_or_else(|| Error::data(format!("dataset has no feature named {name:?}")))?;
        let column = dataset.codes(idx)?;
        if column.is_empty() {
            return Err(Error::data(format!("feature {name:?} has no rows")));
        }
        let mut histogram: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
        for &code in column {
            *histogram.entry(code).or_insert(0) += 1;
        }
        features.push(EventDomain {
            name: name.clone(),
            codes: histogram.keys().copied().collect(),
            counts: histogram.values().copied().collect(),
        });
    }
    Ok(EventSpaceSpec { features })
}

/// Domains straight from a model bundle (no dataset needed at predict time).
pub fn domains_from_bundle(bundle: &ModelBundle) -> Result<EventSpaceSpec> {
    let spec = bundle.space.as_ref().ok_or_else(|| {
        Error::bundle("bundle carries no training domains; retrain to forecast".to_string())
    })?;
    if spec.feature_names() != bundle.selected_features {
        return Err(Error::bundle(
            "bundle domains do not line up with its feature list".to_string(),
        ));
    }
    Ok(spec.clone())
}

/// Enumerate every event exactly once, last coordinate fastest (odometer
/// order). Refuses spaces larger than `limit`.
pub fn enumerate_events(
    spec: &EventSpaceSpec,
    limit: u64,
) -> Result<impl Iterator<Item = Vec<u32>> + '_> {
    let size = spec.size();
    if size > BigUint::from(limit) {
        return Err(Error::SpaceTooLarge {
            size: spec.size_scientific(),
            limit,
        });
    }
    let total: u64 = size.try_into().expect("size <= limit fits in u64");
    let radices: Vec<usize> = spec.features.iter().map(|f| f.codes.len()).collect();
    let mut odometer = vec![0usize; radices.len()];
    let mut remaining = total;
    Ok(std::iter::from_fn(move || {
        if remaining == 0 {
            return None;
        }
        remaining -= 1;
        let event: Vec<u32> = spec
            .features
            .iter()
            .zip(&odometer)
            .map(|(f, &i)| f.codes[i])
            .collect();
        for pos in (0..odometer.len()).rev() {
            odometer[pos] += 1;
            if odometer[pos] < radices[pos] {
                break;
            }
            odometer[pos] = 0;
        }
        Some(event)
    }))
}

/// Draw `n` independent events; each coordinate is sampled from its own
/// domain, uniformly or by empirical weight. The stream depends only on the
/// seed, not on how work is scheduled.
pub fn sample_events(
    spec: &EventSpaceSpec,
    n: usize,
    seed: u64,
    mode: MarginalMode,
) -> Vec<Vec<u32>> {
    let mut events = Vec::with_capacity(n);
    let cumulative: Vec<Vec<u64>> = match mode {
        MarginalMode::Uniform => Vec::new(),
        MarginalMode::Empirical => spec
            .features
            .iter()
            .map(|f| {
                let mut acc = 0u64;
                f.counts
                    .iter()
                    .map(|&c| {
                        acc += c;
                        acc
                    })
                    .collect()
            })
            .collect(),
    };
    let root = StreamRng::new(seed).derive("events/sample");
    for chunk_start in (0..n).step_by(SAMPLE_CHUNK) {
        let mut rng = root.derive_indexed("chunk", (chunk_start / SAMPLE_CHUNK) as u64);
        let chunk_len = SAMPLE_CHUNK.min(n - chunk_start);
        for _ in 0..chunk_len {
            let event = spec
                .features
                .iter()
                .enumerate()
                .map(|(f, domain)| match mode {
                    MarginalMode::Uniform => domain.codes[rng.index(domain.codes.len())],
                    MarginalMode::Empirical => {
                        let cum = &cumulative[f];
                        let total = *cum.last().expect("nonempty domain");
                        let draw = rng.below(total);
                        let idx = cum.partition_point(|&c| c <= draw);
                        domain.codes[idx]
                    }
                })
                .collect();
            events.push(event);
        }
    }
    events
}

/// How a forecast covered the space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMode {
    Exhaustive,
    Sampled,
}

/// Per-class share of the event space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub class: String,
    /// Fraction of classified events landing in this class; sums to 1.
    pub event_fraction: f64,
    /// `model_accuracy * event_fraction` — compensates for classifier error
    /// but does not renormalize.
    pub weighted: f64,
    /// Binomial standard error of the fraction (0 in exhaustive mode).
    pub standard_error: f64,
}

/// The end product of the pipeline: a probability estimate over future
/// attack classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackForecast {
    pub mode: ForecastMode,
    pub sample_count: u64,
    pub model_accuracy: f64,
    pub space_size: String,
    pub space_log10: f64,
    pub classes: Vec<ClassShare>,
}

impl AttackForecast {
    /// Class with the largest share of the space.
    pub fn argmax_class(&self) -> &str {
        let mut best = 0usize;
        for (i, share) in self.classes.iter().enumerate().skip(1) {
            if share.event_fraction > self.classes[best].event_fraction {
                best = i;
            }
        }
        &self.classes[best].class
    }

    /// CSV rendering: `class,fraction,weighted,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,fraction,weighted,stderr\n");
        for share in &self.classes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                share.class, share.event_fraction, share.weighted, share.standard_error
            ));
        }
        out
    }
}

/// Forecast settings; defaults match the documented limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastConfig {
    /// Enumerate exhaustively up to this many events.
    pub enum_limit: u64,
    /// Sample size used above the limit.
    pub n_samples: usize,
    pub marginal: MarginalMode,
    pub seed: u64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            enum_limit: DEFAULT_ENUM_LIMIT,
            n_samples: DEFAULT_SAMPLE_SIZE,
            marginal: MarginalMode::Uniform,
            seed: 0,
        }
    }
}

/// Classify the event space and report each class's share.
///
/// Spaces up to `cfg.enum_limit` events are enumerated exhaustively
/// (standard errors are then 0); larger spaces are sampled `cfg.n_samples`
/// times. `accuracy` is the model's holdout accuracy used for weighting.
pub fn forecast(
    model: &LearnerModel,
    spec: &EventSpaceSpec,
    accuracy: f64,
    cfg: &ForecastConfig,
) -> Result<AttackForecast> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::config(format!(
            "accuracy must be in [0, 1], got {accuracy}"
        )));
    }
    let model_features: Vec<&str> = model.meta.features.iter().map(|f| f.name.as_str()).collect();
    let spec_features: Vec<&str> = spec.features.iter().map(|f| f.name.as_str()).collect();
    if model_features != spec_features {
        return Err(Error::data(format!(
            "event space features {spec_features:?} do not match model features {model_features:?}"
        )));
    }

    let n_classes = model.meta.n_classes();
    let exhaustive = spec.size() <= BigUint::from(cfg.enum_limit);
    let (counts, total) = if exhaustive {
        let events: Vec<Vec<u32>> = enumerate_events(spec, cfg.enum_limit)?.collect();
        (classify_counts(model, &events, n_classes)?, events.len())
    } else {
        let events = sample_events(spec, cfg.n_samples, cfg.seed, cfg.marginal);
        (classify_counts(model, &events, n_classes)?, events.len())
    };

    if total == 0 {
        return Err(Error::invariant("no events were classified".to_string()));
    }
    let classes = model
        .meta
        .class_names
        .iter()
        .zip(&counts)
        .map(|(name, &count)| {
            let fraction = count as f64 / total as f64;
            ClassShare {
                class: name.clone(),
                event_fraction: fraction,
                weighted: accuracy * fraction,
                standard_error: if exhaustive {
                    0.0
                } else {
                    (fraction * (1.0 - fraction) / total as f64).sqrt()
                },
            }
        })
        .collect();
    Ok(AttackForecast {
        mode: if exhaustive {
            ForecastMode::Exhaustive
        } else {
            ForecastMode::Sampled
        },
        sample_count: total as u64,
        model_accuracy: accuracy,
        space_size: spec.size_scientific(),
        space_log10: spec.size_log10(),
        classes,
    })
}

/// Per-class prediction counts over a batch of events. Chunks are classified
/// in parallel and reduced in chunk order.
fn classify_counts(
    model: &LearnerModel,
    events: &[Vec<u32>],
    n_classes: usize,
) -> Result<Vec<u64>> {
    if let Some(event) = events.first() {
        model.meta.check_row(event)?;
    }
    let chunk_counts: Vec<Vec<u64>> = events
        .par_chunks(SAMPLE_CHUNK)
        .map(|chunk| {
            let mut counts = vec![0u64; n_classes];
            for event in chunk {
                let probs = model.proba_unchecked(event);
                counts[crate::learners::argmax(&probs) as usize] += 1;
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; n_classes];
    for chunk in chunk_counts {
        for (dst, src) in counts.iter_mut().zip(chunk) {
            *dst += src;
        }
    }
    Ok(counts)
}
