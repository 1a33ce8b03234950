//! Dataset schemas: which CSV columns are features, what kind they are, and
//! which column carries the attack class.
//!
//! Two flow-record layouts ship as built-ins (`unsw-nb15`, `cicids-17`) and
//! `infer` deduces kinds from the file itself: a column whose every cell
//! parses as a finite number is numeric, anything else is categorical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a CSV column participates in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Discrete values (strings or small integers) mapped to dense codes.
    Categorical,
    /// Continuous values, later replaced by magnitude/leading-digit features.
    Numeric,
    /// The attack-class column.
    Label,
    /// Identity-like columns (row ids, addresses) removed during encoding.
    Drop,
}

/// A named column layout for one dataset family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    /// `(column name, kind)` in file order.
    pub columns: Vec<(String, ColumnKind)>,
    /// Fixed class list; `None` means classes are taken from the data.
    pub label_classes: Option<Vec<String>>,
}

impl DatasetSchema {
    /// Count of feature columns (neither label nor dropped).
    pub fn n_features(&self) -> usize {
        self.columns
            .iter()
            .filter(|(_, k)| matches!(k, ColumnKind::Categorical | ColumnKind::Numeric))
            .count()
    }

    /// Name of the label column.
    pub fn label_column(&self) -> &str {
        self.columns
            .iter()
            .find(|(_, k)| *k == ColumnKind::Label)
            .map(|(n, _)| n.as_str())
            .expect("schema validated to hold exactly one label column")
    }

    /// Check the structural invariants: unique names, exactly one label.
    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config(format!(
                "schema {:?} has duplicate column names",
                self.name
            )));
        }
        let labels = self
            .columns
            .iter()
            .filter(|(_, k)| *k == ColumnKind::Label)
            .count();
        if labels != 1 {
            return Err(Error::config(format!(
                "schema {:?} must have exactly one label column, found {labels}",
                self.name
            )));
        }
        Ok(())
    }
}

/// Result of resolving a schema name: either a fully specified layout or a
/// request to infer one from the file (with the label column to look for).
#[derive(Debug, Clone)]
pub enum SchemaSpec {
    Fixed(DatasetSchema),
    Infer { label_column: String },
}

/// Resolve a schema by name.
///
/// `label_column` is only consulted for `"infer"`; built-ins carry their own.
pub fn resolve_schema(name: &str, label_column: Option<&str>) -> Result<SchemaSpec> {
    match name {
        "unsw-nb15" => Ok(SchemaSpec::Fixed(unsw_nb15())),
        "cicids-17" => Ok(SchemaSpec::Fixed(cicids_17())),
        "infer" => {
            let label = label_column.ok_or_else(|| {
                Error::config("schema \"infer\" needs a label column name".to_string())
            })?;
            Ok(SchemaSpec::Infer {
                label_column: label.to_string(),
            })
        }
        other => Err(Error::config(format!(
            "unknown schema {other:?}; known: unsw-nb15, cicids-17, infer"
        ))),
    }
}

/// UNSW-NB15 as published in the official train/test split CSVs: 45 columns,
/// of which 42 are usable features. `id` is a row counter and `label` is the
/// binary duplicate of `attack_cat`; both are dropped. Count-valued columns
/// keep their observed discrete domain; the 16 wide-range columns (durations,
/// byte counts, rates, jitter, TCP state) are marked numeric for
/// discretization.
pub fn unsw_nb15() -> DatasetSchema {
    use ColumnKind::*;
    let columns = vec![
        ("id", Drop),
        ("dur", Numeric),
        ("proto", Categorical),
        ("service", Categorical),
        ("state", Categorical),
        ("spkts", Categorical),
        ("dpkts", Categorical),
        ("sbytes", Numeric),
        ("dbytes", Numeric),
        ("rate", Numeric),
        ("sttl", Categorical),
        ("dttl", Categorical),
        ("sload", Numeric),
        ("dload", Numeric),
        ("sloss", Categorical),
        ("dloss", Categorical),
        ("sinpkt", Numeric),
        ("dinpkt", Numeric),
        ("sjit", Numeric),
        ("djit", Numeric),
        ("swin", Categorical),
        ("stcpb", Numeric),
        ("dtcpb", Numeric),
        ("dwin", Categorical),
        ("tcprtt", Numeric),
        ("synack", Numeric),
        ("ackdat", Numeric),
        ("smean", Categorical),
        ("dmean", Categorical),
        ("trans_depth", Categorical),
        ("response_body_len", Numeric),
        ("ct_srv_src", Categorical),
        ("ct_state_ttl", Categorical),
        ("ct_dst_ltm", Categorical),
        ("ct_src_dport_ltm", Categorical),
        ("ct_dst_sport_ltm", Categorical),
        ("ct_dst_src_ltm", Categorical),
        ("is_ftp_login", Categorical),
        ("ct_ftp_cmd", Categorical),
        ("ct_flw_http_mthd", Categorical),
        ("ct_src_ltm", Categorical),
        ("ct_srv_dst", Categorical),
        ("is_sm_ips_ports", Categorical),
        ("attack_cat", Label),
        ("label", Drop),
    ];
    DatasetSchema {
        name: "unsw-nb15".to_string(),
        columns: columns
            .into_iter()
            .map(|(n, k)| (n.to_string(), k))
            .collect(),
        label_classes: Some(
            [
                "Analysis",
                "Backdoor",
                "DoS",
                "Exploits",
                "Fuzzers",
                "Generic",
                "Normal",
                "Reconnaissance",
                "Shellcode",
                "Worms",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ),
    }
}

/// CICIDS-17 in the per-flow CSV layout: 78 features plus `Label`. Flag
/// counts, ports, and the two columns that legitimately carry -1 sentinels
/// are categorical; the remaining wide-range statistics are numeric.
pub fn cicids_17() -> DatasetSchema {
    use ColumnKind::*;
    let categorical = [
        "Destination Port",
        "Fwd PSH Flags",
        "Bwd PSH Flags",
        "Fwd URG Flags",
        "Bwd URG Flags",
        "FIN Flag Count",
        "SYN Flag Count",
        "RST Flag Count",
        "PSH Flag Count",
        "ACK Flag Count",
        "URG Flag Count",
        "CWE Flag Count",
        "ECE Flag Count",
        "Down/Up Ratio",
        "Init_Win_bytes_forward",
        "Init_Win_bytes_backward",
        "act_data_pkt_fwd",
        "min_seg_size_forward",
    ];
    let all = [
        "Destination Port",
        "Flow Duration",
        "Total Fwd Packets",
        "Total Backward Packets",
        "Total Length of Fwd Packets",
        "Total Length of Bwd Packets",
        "Fwd Packet Length Max",
        "Fwd Packet Length Min",
        "Fwd Packet Length Mean",
        "Fwd Packet Length Std",
        "Bwd Packet Length Max",
        "Bwd Packet Length Min",
        "Bwd Packet Length Mean",
        "Bwd Packet Length Std",
        "Flow Bytes/s",
        "Flow Packets/s",
        "Flow IAT Mean",
        "Flow IAT Std",
        "Flow IAT Max",
        "Flow IAT Min",
        "Fwd IAT Total",
        "Fwd IAT Mean",
        "Fwd IAT Std",
        "Fwd IAT Max",
        "Fwd IAT Min",
        "Bwd IAT Total",
        "Bwd IAT Mean",
        "Bwd IAT Std",
        "Bwd IAT Max",
        "Bwd IAT Min",
        "Fwd PSH Flags",
        "Bwd PSH Flags",
        "Fwd URG Flags",
        "Bwd URG Flags",
        "Fwd Header Length",
        "Bwd Header Length",
        "Fwd Packets/s",
        "Bwd Packets/s",
        "Min Packet Length",
        "Max Packet Length",
        "Packet Length Mean",
        "Packet Length Std",
        "Packet Length Variance",
        "FIN Flag Count",
        "SYN Flag Count",
        "RST Flag Count",
        "PSH Flag Count",
        "ACK Flag Count",
        "URG Flag Count",
        "CWE Flag Count",
        "ECE Flag Count",
        "Down/Up Ratio",
        "Average Packet Size",
        "Avg Fwd Segment Size",
        "Avg Bwd Segment Size",
        "Fwd Header Length.1",
        "Fwd Avg Bytes/Bulk",
        "Fwd Avg Packets/Bulk",
        "Fwd Avg Bulk Rate",
        "Bwd Avg Bytes/Bulk",
        "Bwd Avg Packets/Bulk",
        "Bwd Avg Bulk Rate",
        "Subflow Fwd Packets",
        "Subflow Fwd Bytes",
        "Subflow Bwd Packets",
        "Subflow Bwd Bytes",
        "Init_Win_bytes_forward",
        "Init_Win_bytes_backward",
        "act_data_pkt_fwd",
        "min_seg_size_forward",
        "Active Mean",
        "Active Std",
        "Active Max",
        "Active Min",
        "Idle Mean",
        "Idle Std",
        "Idle Max",
        "Idle Min",
    ];
    let mut columns: Vec<(String, ColumnKind)> = all
        .iter()
        .map(|&n| {
            let kind = if categorical.contains(&n) {
                Categorical
            } else {
                Numeric
            };
            (n.to_string(), kind)
        })
        .collect();
    columns.push(("Label".to_string(), Label));
    DatasetSchema {
        name: "cicids-17".to_string(),
        columns,
        label_classes: None,
    }
}

/// Build a concrete schema from a CSV header plus per-column "does every
/// cell parse as a number" evidence gathered by the loader.
pub fn infer_schema(
    header: &[String],
    all_numeric: &[bool],
    label_column: &str,
) -> Result<DatasetSchema> {
    if header.len() != all_numeric.len() {
        return Err(Error::invariant(
            "header and numeric evidence lengths differ".to_string(),
        ));
    }
    if !header.iter().any(|h| h == label_column) {
        return Err(Error::data(format!(
            "inferred schema lacks the label column {label_column:?}"
        )));
    }
    let columns = header
        .iter()
        .zip(all_numeric)
        .map(|(name, &numeric)| {
            let kind = if name == label_column {
                ColumnKind::Label
            } else if numeric {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            };
            (name.clone(), kind)
        })
        .collect();
    let schema = DatasetSchema {
        name: "inferred".to_string(),
        columns,
        label_classes: None,
    };
    schema.validate()?;
    Ok(schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsw_has_42_features_and_10_classes() {
        let schema = unsw_nb15();
        schema.validate().unwrap();
        assert_eq!(schema.n_features(), 42);
        assert_eq!(schema.label_classes.as_ref().unwrap().len(), 10);
        assert_eq!(schema.label_column(), "attack_cat");
    }

    #[test]
    fn cicids_has_78_features() {
        let schema = cicids_17();
        schema.validate().unwrap();
        assert_eq!(schema.n_features(), 78);
    }

    #[test]
    fn unknown_schema_is_a_config_error() {
        let err = resolve_schema("kdd99", None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn infer_requires_label_name() {
        assert!(matches!(
            resolve_schema("infer", None),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            resolve_schema("infer", Some("attack_cat")),
            Ok(SchemaSpec::Infer { .. })
        ));
    }

    #[test]
    fn inferred_two_column_file_has_one_numeric_feature() {
        let header = vec!["x".to_string(), "attack_cat".to_string()];
        let schema = infer_schema(&header, &[true, false], "attack_cat").unwrap();
        assert_eq!(schema.n_features(), 1);
        assert_eq!(schema.columns[0].1, ColumnKind::Numeric);
    }

    #[test]
    fn inferred_schema_missing_label_errors() {
        let header = vec!["x".to_string(), "y".to_string()];
        let err = infer_schema(&header, &[true, true], "attack_cat").unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn duplicate_columns_rejected() {
        let schema = DatasetSchema {
            name: "bad".to_string(),
            columns: vec![
                ("a".to_string(), ColumnKind::Numeric),
                ("a".to_string(), ColumnKind::Label),
            ],
            label_classes: None,
        };
        assert!(schema.validate().is_err());
    }
}
