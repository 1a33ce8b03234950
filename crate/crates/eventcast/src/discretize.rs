//! Log/sig discretization of continuous features.
//!
//! Each continuous column is replaced by two discrete ones: the decimal order
//! of magnitude (`<name> log`) and the leading significant digit
//! (`<name> sig`). Zero is its own `(0, 0)` point, which is unambiguous
//! because a positive value always has a leading digit in 1..=9. This trades
//! an unbounded raw domain for at most `(max_mag - min_mag + 2) * 10`
//! distinct pairs, which is what keeps the downstream event space tractable.
//! Constant columns are then removed by the variance filter.

use serde::{Deserialize, Serialize};

use crate::encode::{Codebook, EncodedDataset, Feature, FeatureData, FeatureKind, FeatureMeta};
use crate::error::{Error, Result};

/// Magnitude and leading digit of a nonnegative decimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogSigPair {
    /// `floor(log10 x)` for positive x, 0 for x = 0.
    pub mag: i32,
    /// Leading significant digit, 1..=9; 0 only for x = 0.
    pub sig: u8,
}

/// Decompose `x >= 0` into its magnitude and leading digit.
pub fn log_sig(x: f64) -> Result<LogSigPair> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::data(format!(
            "log/sig needs a finite nonnegative value, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(LogSigPair { mag: 0, sig: 0 });
    }
    let mut mag = x.log10().floor() as i32;
    // log10 rounding can land one step off near exact powers; nudge until
    // 10^mag <= x < 10^(mag+1) holds.
    while pow10(mag) > x {
        mag -= 1;
    }
    while pow10(mag + 1) <= x {
        mag += 1;
    }
    let mut sig = (x / pow10(mag)).floor() as u8;
    sig = sig.clamp(1, 9);
    Ok(LogSigPair { mag, sig })
}

#[inline]
fn pow10(exp: i32) -> f64 {
    10f64.powi(exp)
}

/// Observed magnitude range of one source column, fixed at fit time so the
/// transform replays identically on unseen data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStat {
    pub name: String,
    pub min_mag: i32,
    pub max_mag: i32,
}

impl SourceStat {
    /// Shifted magnitude code: 0 for zero values, `mag - min_mag + 1`
    /// otherwise. Magnitudes outside the fitted range get the reserved code.
    pub fn mag_code(&self, pair: LogSigPair, is_zero: bool) -> u32 {
        if is_zero {
            return 0;
        }
        if pair.mag < self.min_mag || pair.mag > self.max_mag {
            return (self.max_mag - self.min_mag + 2) as u32;
        }
        (pair.mag - self.min_mag + 1) as u32
    }
}

/// Everything needed to replay preprocessing on unseen rows: magnitude
/// ranges, the variances seen at filter time, and which columns were removed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscretizerState {
    pub sources: Vec<SourceStat>,
    pub variance_threshold: f64,
    /// `(feature name, empirical variance)` for every expanded column.
    pub variances: Vec<(String, f64)>,
    pub dropped_features: Vec<String>,
}

/// Replace every passthrough column with its log/sig pair, fitting magnitude
/// ranges from the data. Datasets without passthrough columns pass through
/// unchanged.
pub fn expand_log_sig(dataset: &EncodedDataset) -> Result<(Vec<SourceStat>, EncodedDataset)> {
    let mut sources = Vec::new();
    let mut features = Vec::with_capacity(dataset.features.len());
    for feature in &dataset.features {
        match &feature.data {
            FeatureData::Codes(_) => features.push(feature.clone()),
            FeatureData::Raw(values) => {
                let mut min_mag = i32::MAX;
                let mut max_mag = i32::MIN;
                let mut pairs = Vec::with_capacity(values.len());
                for &x in values {
                    let pair = log_sig(x)?;
                    if x > 0.0 {
                        min_mag = min_mag.min(pair.mag);
                        max_mag = max_mag.max(pair.mag);
                    }
                    pairs.push((pair, x == 0.0));
                }
                if min_mag > max_mag {
                    // all-zero column
                    min_mag = 0;
                    max_mag = 0;
                }
                let stat = SourceStat {
                    name: feature.meta.name.clone(),
                    min_mag,
                    max_mag,
                };
                push_pair_columns(&mut features, &stat, &pairs);
                sources.push(stat);
            }
        }
    }
    let expanded = EncodedDataset {
        n_rows: dataset.n_rows,
        features,
        labels: dataset.labels.clone(),
        class_names: dataset.class_names.clone(),
    };
    Ok((sources, expanded))
}

/// Replay a fitted expansion on another dataset (e.g. the test split).
pub fn apply_log_sig(dataset: &EncodedDataset, sources: &[SourceStat]) -> Result<EncodedDataset> {
    let mut features = Vec::with_capacity(dataset.features.len());
    for feature in &dataset.features {
        match &feature.data {
            FeatureData::Codes(_) => features.push(feature.clone()),
            FeatureData::Raw(values) => {
                let stat = sources
                    .iter()
                    .find(|s| s.name == feature.meta.name)
                    .ok_or_else(|| {
                        Error::data(format!(
                            "no fitted magnitude range for column {:?}",
                            feature.meta.name
                        ))
                    })?;
                let pairs = values
                    .iter()
                    .map(|&x| log_sig(x).map(|p| (p, x == 0.0)))
                    .collect::<Result<Vec<_>>>()?;
                push_pair_columns(&mut features, stat, &pairs);
            }
        }
    }
    Ok(EncodedDataset {
        n_rows: dataset.n_rows,
        features,
        labels: dataset.labels.clone(),
        class_names: dataset.class_names.clone(),
    })
}

fn push_pair_columns(features: &mut Vec<Feature>, stat: &SourceStat, pairs: &[(LogSigPair, bool)]) {
    let mag_codes = pairs
        .iter()
        .map(|&(pair, is_zero)| stat.mag_code(pair, is_zero))
        .collect();
    let sig_codes = pairs.iter().map(|&(pair, _)| u32::from(pair.sig)).collect();
    features.push(Feature {
        meta: FeatureMeta {
            name: format!("{} log", stat.name),
            kind: FeatureKind::Mag,
            codebook: Codebook::MagRange {
                min_mag: stat.min_mag,
                max_mag: stat.max_mag,
            },
        },
        data: FeatureData::Codes(mag_codes),
    });
    features.push(Feature {
        meta: FeatureMeta {
            name: format!("{} sig", stat.name),
            kind: FeatureKind::Sig,
            codebook: Codebook::Digits,
        },
        data: FeatureData::Codes(sig_codes),
    });
}

/// Empirical (population) variance of one column.
fn column_variance(data: &FeatureData) -> f64 {
    let n = data.len();
    if n == 0 {
        return 0.0;
    }
    let values = |i: usize| -> f64 {
        match data {
            FeatureData::Codes(v) => f64::from(v[i]),
            FeatureData::Raw(v) => v[i],
        }
    };
    let mean = (0..n).map(values).sum::<f64>() / n as f64;
    (0..n).map(|i| (values(i) - mean).powi(2)).sum::<f64>() / n as f64
}

/// Result of a variance filter pass.
#[derive(Debug, Clone)]
pub struct VarianceFilterOutcome {
    /// `(feature name, empirical variance)` for every input column.
    pub variances: Vec<(String, f64)>,
    /// Names of the removed columns.
    pub dropped: Vec<String>,
    pub dataset: EncodedDataset,
}

/// Remove features whose empirical variance is at or below `threshold`.
pub fn variance_filter(dataset: &EncodedDataset, threshold: f64) -> Result<VarianceFilterOutcome> {
    if threshold < 0.0 {
        return Err(Error::config(format!(
            "variance threshold must be nonnegative, got {threshold}"
        )));
    }
    let variances: Vec<(String, f64)> = dataset
        .features
        .iter()
        .map(|f| (f.meta.name.clone(), column_variance(&f.data)))
        .collect();
    let keep: Vec<usize> = variances
        .iter()
        .enumerate()
        .filter(|(_, (_, v))| *v > threshold)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::data(
            "variance filter removed every feature".to_string(),
        ));
    }
    let dropped = variances
        .iter()
        .enumerate()
        .filter(|(i, _)| !keep.contains(i))
        .map(|(_, (n, _))| n.clone())
        .collect();
    Ok(VarianceFilterOutcome {
        dataset: dataset.select_columns(&keep),
        variances,
        dropped,
    })
}

/// Fitted discretization pipeline: expansion plus variance filtering.
pub struct Discretizer;

impl Discretizer {
    /// Fit on the training split and transform it.
    pub fn fit_transform(
        dataset: &EncodedDataset,
        variance_threshold: f64,
    ) -> Result<(DiscretizerState, EncodedDataset)> {
        let (sources, expanded) = expand_log_sig(dataset)?;
        let outcome = variance_filter(&expanded, variance_threshold)?;
        Ok((
            DiscretizerState {
                sources,
                variance_threshold,
                variances: outcome.variances,
                dropped_features: outcome.dropped,
            },
            outcome.dataset,
        ))
    }

    /// Replay a fitted state on another dataset.
    pub fn transform(state: &DiscretizerState, dataset: &EncodedDataset) -> Result<EncodedDataset> {
        let expanded = apply_log_sig(dataset, &state.sources)?;
        let keep: Vec<usize> = expanded
            .features
            .iter()
            .enumerate()
            .filter(|(_, f)| !state.dropped_features.contains(&f.meta.name))
            .map(|(i, _)| i)
            .collect();
        if keep.is_empty() {
            return Err(Error::data(
                "replayed variance filter removed every feature".to_string(),
            ));
        }
        Ok(expanded.select_columns(&keep))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_maps_to_the_reserved_point() {
        assert_eq!(log_sig(0.0).unwrap(), LogSigPair { mag: 0, sig: 0 });
    }

    #[test]
    fn worked_examples() {
        assert_eq!(log_sig(3456.0).unwrap(), LogSigPair { mag: 3, sig: 3 });
        assert_eq!(log_sig(0.042).unwrap(), LogSigPair { mag: -2, sig: 4 });
        assert_eq!(log_sig(1.0).unwrap(), LogSigPair { mag: 0, sig: 1 });
        assert_eq!(log_sig(9.999).unwrap(), LogSigPair { mag: 0, sig: 9 });
        assert_eq!(log_sig(10.0).unwrap(), LogSigPair { mag: 1, sig: 1 });
        assert_eq!(log_sig(1000.0).unwrap(), LogSigPair { mag: 3, sig: 1 });
        assert_eq!(log_sig(0.1).unwrap(), LogSigPair { mag: -1, sig: 1 });
    }

    #[test]
    fn negative_and_non_finite_rejected() {
        assert!(log_sig(-0.5).is_err());
        assert!(log_sig(f64::NAN).is_err());
        assert!(log_sig(f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn bracket_invariant(exp in -6.0f64..12.0, frac in 0.0f64..1.0) {
            let x = 10f64.powf(exp) * (1.0 + 8.999 * frac);
            let p = log_sig(x).unwrap();
            prop_assert!((1..=9).contains(&p.sig));
            let low = f64::from(p.sig) * pow10(p.mag);
            let high = f64::from(p.sig + 1) * pow10(p.mag);
            prop_assert!(low <= x && x < high, "{x} not in [{low}, {high})");
            // One significant digit keeps relative error under 100%.
            prop_assert!((x - low) / x < 1.0);
        }

        #[test]
        fn monotone_in_lexicographic_order(a in 1e-6f64..1e12, b in 1e-6f64..1e12) {
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            let px = log_sig(x).unwrap();
            let py = log_sig(y).unwrap();
            prop_assert!((px.mag, px.sig) <= (py.mag, py.sig));
        }
    }

    fn raw_dataset(cols: Vec<(&str, FeatureData)>, labels: Vec<u32>) -> EncodedDataset {
        let n = labels.len();
        EncodedDataset {
            n_rows: n,
            features: cols
                .into_iter()
                .map(|(name, data)| Feature {
                    meta: FeatureMeta {
                        name: name.to_string(),
                        kind: match data {
                            FeatureData::Raw(_) => FeatureKind::Passthrough,
                            FeatureData::Codes(_) => FeatureKind::Categorical,
                        },
                        codebook: match &data {
                            FeatureData::Raw(_) => Codebook::None,
                            FeatureData::Codes(v) => Codebook::Strings {
                                values: (0..=v.iter().copied().max().unwrap_or(0))
                                    .map(|c| c.to_string())
                                    .collect(),
                            },
                        },
                    },
                    data,
                })
                .collect(),
            labels,
            class_names: vec!["a".to_string(), "b".to_string()],
        }
    }

    #[test]
    fn one_passthrough_becomes_two_columns() {
        let ds = raw_dataset(
            vec![
                ("c1", FeatureData::Codes(vec![0, 1, 0])),
                ("dur", FeatureData::Raw(vec![0.0, 35.0, 0.2])),
                ("c2", FeatureData::Codes(vec![1, 0, 1])),
            ],
            vec![0, 1, 0],
        );
        let (sources, out) = expand_log_sig(&ds).unwrap();
        assert_eq!(out.n_features(), 4);
        assert_eq!(
            out.feature_names(),
            vec!["c1", "dur log", "dur sig", "c2"]
        );
        assert!(out.is_discrete());
        assert_eq!(sources, vec![SourceStat { name: "dur".into(), min_mag: -1, max_mag: 1 }]);
        // 0.0 -> code 0; 35 -> mag 1 -> code 3; 0.2 -> mag -1 -> code 1.
        assert_eq!(out.codes(1).unwrap(), &[0, 3, 1]);
        assert_eq!(out.codes(2).unwrap(), &[0, 3, 2]);
        // Cardinalities stay within the advertised bound.
        let mag_card = out.features[1].meta.cardinality();
        let sig_card = out.features[2].meta.cardinality();
        assert!(mag_card * sig_card <= (1 - (-1i32) + 2) as u32 * 10);
    }

    #[test]
    fn transform_replays_ranges_and_reserves_outliers() {
        let train = raw_dataset(
            vec![("dur", FeatureData::Raw(vec![1.0, 99.0]))],
            vec![0, 1],
        );
        let (sources, _) = expand_log_sig(&train).unwrap();
        let test = raw_dataset(
            vec![("dur", FeatureData::Raw(vec![5000.0, 3.0, 0.0]))],
            vec![0, 1, 0],
        );
        let out = apply_log_sig(&test, &sources).unwrap();
        // Fitted range is mags 0..=1, cardinality 3; 5000 has mag 3 -> reserved code 3.
        assert_eq!(out.codes(0).unwrap(), &[3, 1, 0]);
    }

    #[test]
    fn variance_filter_drops_constants_keeps_balanced() {
        let ds = raw_dataset(
            vec![
                ("const", FeatureData::Codes(vec![2, 2, 2, 2])),
                ("bal", FeatureData::Codes(vec![0, 1, 0, 1])),
            ],
            vec![0, 1, 0, 1],
        );
        let outcome = variance_filter(&ds, 0.0).unwrap();
        assert_eq!(outcome.dataset.n_features(), 1);
        assert_eq!(outcome.dataset.feature_names(), vec!["bal"]);
        assert_eq!(outcome.dropped, vec!["const".to_string()]);
        assert_eq!(outcome.variances[0].1, 0.0);
        assert!((outcome.variances[1].1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn removing_everything_is_an_error() {
        let ds = raw_dataset(
            vec![("const", FeatureData::Codes(vec![1, 1]))],
            vec![0, 1],
        );
        assert!(variance_filter(&ds, 0.0).is_err());
    }

    #[test]
    fn fit_transform_then_transform_agree_on_training_data() {
        let ds = raw_dataset(
            vec![
                ("dur", FeatureData::Raw(vec![0.5, 120.0, 3.0, 0.0])),
                ("flag", FeatureData::Codes(vec![0, 1, 1, 0])),
                ("stuck", FeatureData::Codes(vec![3, 3, 3, 3])),
            ],
            vec![0, 1, 1, 0],
        );
        let (state, fitted) = Discretizer::fit_transform(&ds, 0.0).unwrap();
        let replayed = Discretizer::transform(&state, &ds).unwrap();
        assert_eq!(fitted, replayed);
        assert!(state.dropped_features.contains(&"stuck".to_string()));
    }
}
