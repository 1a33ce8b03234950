//! Ordinal encoding of raw flow tables into dense integer codes.
//!
//! Categorical columns get codes assigned in a fixed observed-value order so
//! that re-encoding the same table is byte-identical everywhere: values are
//! ordered numerically when every distinct value parses as a number (count
//! columns keep a threshold-friendly order that way) and lexicographically
//! otherwise. Numeric columns pass through as decimals until the discretizer
//! replaces them. Values first seen at predict time map to one reserved code
//! per column, equal to the column's cardinality.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::ColumnKind;
use crate::table::{RawColumn, RawFlowTable};

/// What an encoded feature column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Dense codes over an observed categorical domain.
    Categorical,
    /// Decimal order of magnitude of a source numeric column.
    Mag,
    /// Leading significant digit of a source numeric column.
    Sig,
    /// Raw decimals awaiting discretization.
    Passthrough,
}

/// Decode table for one feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Codebook {
    /// `code -> original string`, in code order.
    Strings { values: Vec<String> },
    /// Magnitude codes: 0 is reserved for zero values, code `c >= 1` decodes
    /// to magnitude `min_mag + c - 1`.
    MagRange { min_mag: i32, max_mag: i32 },
    /// Leading-digit codes 0..=9, identity-mapped.
    Digits,
    /// No codes yet (passthrough columns).
    None,
}

impl Codebook {
    /// Number of assigned codes; the reserved unseen-value code sits one past
    /// this.
    pub fn cardinality(&self) -> u32 {
        match self {
            Codebook::Strings { values } => values.len() as u32,
            Codebook::MagRange { min_mag, max_mag } => (max_mag - min_mag + 2) as u32,
            Codebook::Digits => 10,
            Codebook::None => 0,
        }
    }

    /// Human-readable decode of a code, if this book covers it.
    pub fn decode(&self, code: u32) -> Option<String> {
        match self {
            Codebook::Strings { values } => values.get(code as usize).cloned(),
            Codebook::MagRange { min_mag, max_mag } => {
                if code == 0 {
                    Some("0".to_string())
                } else {
                    let mag = min_mag + code as i32 - 1;
                    (mag <= *max_mag).then(|| format!("1e{mag}"))
                }
            }
            Codebook::Digits => (code < 10).then(|| code.to_string()),
            Codebook::None => None,
        }
    }
}

/// Per-feature metadata carried alongside the code matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    pub codebook: Codebook,
}

impl FeatureMeta {
    pub fn cardinality(&self) -> u32 {
        self.codebook.cardinality()
    }
}

/// One encoded feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub meta: FeatureMeta,
    pub data: FeatureData,
}

/// Column storage: dense codes, or raw decimals for passthrough columns.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureData {
    Codes(Vec<u32>),
    Raw(Vec<f64>),
}

impl FeatureData {
    pub fn len(&self) -> usize {
        match self {
            FeatureData::Codes(v) => v.len(),
            FeatureData::Raw(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense feature matrix with label vector and per-feature metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub n_rows: usize,
    pub features: Vec<Feature>,
    pub labels: Vec<u32>,
    pub class_names: Vec<String>,
}

/// Borrowed all-discrete view used by learners and selectors.
pub struct DiscreteView<'a> {
    pub n_rows: usize,
    pub columns: Vec<&'a [u32]>,
    pub cardinalities: Vec<u32>,
    pub names: Vec<&'a str>,
    pub labels: &'a [u32],
    pub n_classes: usize,
}

impl EncodedDataset {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.meta.name == name)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.meta.name.clone()).collect()
    }

    /// Codes of one column; error if it is still passthrough.
    pub fn codes(&self, idx: usize) -> Result<&[u32]> {
        match &self.features[idx].data {
            FeatureData::Codes(v) => Ok(v),
            FeatureData::Raw(_) => Err(Error::invariant(format!(
                "feature {:?} is still a passthrough column",
                self.features[idx].meta.name
            ))),
        }
    }

    /// True when no passthrough columns remain.
    pub fn is_discrete(&self) -> bool {
        self.features
            .iter()
            .all(|f| matches!(f.data, FeatureData::Codes(_)))
    }

    /// All-discrete borrowed view; error if any passthrough column remains.
    pub fn discrete_view(&self) -> Result<DiscreteView<'_>> {
        let mut columns = Vec::with_capacity(self.features.len());
        for (i, f) in self.features.iter().enumerate() {
            match &f.data {
                FeatureData::Codes(v) => columns.push(v.as_slice()),
                FeatureData::Raw(_) => {
                    return Err(Error::data(format!(
                        "feature {:?} (index {i}) is continuous; run the discretizer first",
                        f.meta.name
                    )));
                }
            }
        }
        Ok(DiscreteView {
            n_rows: self.n_rows,
            cardinalities: self.features.iter().map(|f| f.meta.cardinality()).collect(),
            names: self
                .features
                .iter()
                .map(|f| f.meta.name.as_str())
                .collect(),
            columns,
            labels: &self.labels,
            n_classes: self.class_names.len(),
        })
    }

    /// Structural invariants. With `allow_reserved`, codes equal to a
    /// column's cardinality (the unseen-value bucket) are accepted, as
    /// happens in transformed test data.
    pub fn validate(&self, allow_reserved: bool) -> Result<()> {
        if self.labels.len() != self.n_rows {
            return Err(Error::invariant("label vector length != row count"));
        }
        let c = self.class_names.len() as u32;
        if let Some(bad) = self.labels.iter().find(|&&l| l >= c) {
            return Err(Error::invariant(format!("label code {bad} out of range")));
        }
        for f in &self.features {
            if f.data.len() != self.n_rows {
                return Err(Error::invariant(format!(
                    "column {:?} length != row count",
                    f.meta.name
                )));
            }
            if let FeatureData::Codes(codes) = &f.data {
                let card = f.meta.cardinality();
                let limit = if allow_reserved { card + 1 } else { card };
                if let Some(bad) = codes.iter().find(|&&v| v >= limit) {
                    return Err(Error::invariant(format!(
                        "column {:?} holds code {bad} >= limit {limit}",
                        f.meta.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Gather a row subset (duplicates allowed) into a new dataset.
    pub fn subset_rows(&self, rows: &[usize]) -> EncodedDataset {
        let features = self
            .features
            .iter()
            .map(|f| Feature {
                meta: f.meta.clone(),
                data: match &f.data {
                    FeatureData::Codes(v) => {
                        FeatureData::Codes(rows.iter().map(|&r| v[r]).collect())
                    }
                    FeatureData::Raw(v) => FeatureData::Raw(rows.iter().map(|&r| v[r]).collect()),
                },
            })
            .collect();
        EncodedDataset {
            n_rows: rows.len(),
            features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Keep only the named columns, preserving this dataset's column order.
    pub fn select_columns(&self, indices: &[usize]) -> EncodedDataset {
        EncodedDataset {
            n_rows: self.n_rows,
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Per-class row counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_names.len()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// One row's codes gathered into a buffer (columns must be discrete).
    pub fn row_codes(&self, row: usize, buf: &mut Vec<u32>) {
        buf.clear();
        for f in &self.features {
            match &f.data {
                FeatureData::Codes(v) => buf.push(v[row]),
                FeatureData::Raw(_) => panic!("row_codes on a passthrough column"),
            }
        }
    }
}

/// Fitted per-column code maps, replayable on unseen tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Encoder {
    /// `(name, kind, codebook values)` for every non-drop feature column.
    pub columns: Vec<EncoderColumn>,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderColumn {
    pub name: String,
    pub kind: ColumnKind,
    /// Sorted distinct values for categorical columns, empty for numeric.
    pub values: Vec<String>,
}

/// Order distinct category strings: numeric ascending when every value
/// parses as a finite number (ties broken lexicographically), plain
/// lexicographic otherwise.
fn order_categories(mut values: Vec<String>) -> Vec<String> {
    let parsed: Option<Vec<f64>> = values
        .iter()
        .map(|v| match v.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => None,
        })
        .collect();
    match parsed {
        Some(nums) => {
            let mut pairs: Vec<(f64, String)> = nums.into_iter().zip(values).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
            pairs.into_iter().map(|(_, s)| s).collect()
        }
        None => {
            values.sort_unstable();
            values
        }
    }
}

impl Encoder {
    /// Fit code maps on a table: distinct categorical values per column and
    /// the class list (from the schema when pinned, otherwise observed).
    pub fn fit(table: &RawFlowTable) -> Result<Encoder> {
        let mut columns = Vec::new();
        for (ci, (name, kind)) in table.schema.columns.iter().enumerate() {
            match kind {
                ColumnKind::Drop | ColumnKind::Label => continue,
                ColumnKind::Categorical => {
                    let raw = match &table.columns[ci] {
                        RawColumn::Text(v) => v,
                        RawColumn::Number(_) => {
                            return Err(Error::invariant(format!(
                                "categorical column {name:?} parsed as numbers"
                            )));
                        }
                    };
                    let mut distinct: Vec<String> = raw.clone();
                    distinct.sort_unstable();
                    distinct.dedup();
                    columns.push(EncoderColumn {
                        name: name.clone(),
                        kind: *kind,
                        values: order_categories(distinct),
                    });
                }
                ColumnKind::Numeric => columns.push(EncoderColumn {
                    name: name.clone(),
                    kind: *kind,
                    values: Vec::new(),
                }),
            }
        }

        let class_names = match &table.schema.label_classes {
            Some(classes) => classes.clone(),
            None => {
                let mut distinct: Vec<String> = table.labels().to_vec();
                distinct.sort_unstable();
                distinct.dedup();
                distinct
            }
        };
        if table.row_count > 0 {
            let mut observed: Vec<&String> = table.labels().iter().collect();
            observed.sort_unstable();
            observed.dedup();
            if observed.len() < 2 {
                return Err(Error::data(format!(
                    "label column has a single distinct value {:?}; nothing to learn",
                    observed.first().map(|s| s.as_str()).unwrap_or("")
                )));
            }
        }
        Ok(Encoder {
            columns,
            class_names,
        })
    }

    /// Apply the fitted maps. Categorical values unseen at fit time get the
    /// reserved code (the column's cardinality); unknown label values are an
    /// error.
    pub fn transform(&self, table: &RawFlowTable) -> Result<EncodedDataset> {
        let mut features = Vec::with_capacity(self.columns.len());
        for col in &self.columns {
            let ci = table.column_index(&col.name).ok_or_else(|| {
                Error::data(format!("table lacks column {:?}", col.name))
            })?;
            match col.kind {
                ColumnKind::Categorical => {
                    let raw = match &table.columns[ci] {
                        RawColumn::Text(v) => v,
                        RawColumn::Number(_) => {
                            return Err(Error::invariant(format!(
                                "categorical column {:?} parsed as numbers",
                                col.name
                            )));
                        }
                    };
                    let reserved = col.values.len() as u32;
                    let map: HashMap<&str, u32> = col
                        .values
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.as_str(), i as u32))
                        .collect();
                    let codes = raw
                        .iter()
                        .map(|v| map.get(v.as_str()).copied().unwrap_or(reserved))
                        .collect();
                    features.push(Feature {
                        meta: FeatureMeta {
                            name: col.name.clone(),
                            kind: FeatureKind::Categorical,
                            codebook: Codebook::Strings {
                                values: col.values.clone(),
                            },
                        },
                        data: FeatureData::Codes(codes),
                    });
                }
                ColumnKind::Numeric => {
                    let raw = match &table.columns[ci] {
                        RawColumn::Number(v) => v.clone(),
                        RawColumn::Text(_) => {
                            return Err(Error::invariant(format!(
                                "numeric column {:?} stored as text",
                                col.name
                            )));
                        }
                    };
                    features.push(Feature {
                        meta: FeatureMeta {
                            name: col.name.clone(),
                            kind: FeatureKind::Passthrough,
                            codebook: Codebook::None,
                        },
                        data: FeatureData::Raw(raw),
                    });
                }
                _ => unreachable!("encoder holds feature columns only"),
            }
        }

        let class_map: HashMap<&str, u32> = self
            .class_names
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i as u32))
            .collect();
        let labels = table
            .labels()
            .iter()
            .map(|v| {
                class_map.get(v.as_str()).copied().ok_or_else(|| {
                    Error::data(format!("label value {v:?} is not in the class list"))
                })
            })
            .collect::<Result<Vec<u32>>>()?;

        Ok(EncodedDataset {
            n_rows: table.row_count,
            features,
            labels,
            class_names: self.class_names.clone(),
        })
    }
}

/// Fit on a table and encode it in one step.
pub fn ordinal_encode(table: &RawFlowTable) -> Result<(Encoder, EncodedDataset)> {
    let encoder = Encoder::fit(table)?;
    let dataset = encoder.transform(table)?;
    Ok((encoder, dataset))
}
