//! CSV ingestion into a column-oriented table.
//!
//! Rows whose numeric cells fail to parse as finite nonnegative decimals are
//! corrupt: they are removed and counted, never imputed. A file that loses
//! more than half of its rows this way almost certainly has the wrong schema,
//! so that is reported as an error rather than a warning.

use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::{ColumnKind, DatasetSchema, SchemaSpec, infer_schema};

/// One parsed column: text for categorical/label/drop kinds, decimals for
/// numeric kinds.
#[derive(Debug, Clone)]
pub enum RawColumn {
    Text(Vec<String>),
    Number(Vec<f64>),
}

impl RawColumn {
    pub fn len(&self) -> usize {
        match self {
            RawColumn::Text(v) => v.len(),
            RawColumn::Number(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dataset CSV parsed against a schema, kept column-oriented.
#[derive(Debug, Clone)]
pub struct RawFlowTable {
    pub schema: DatasetSchema,
    /// Aligned with `schema.columns`.
    pub columns: Vec<RawColumn>,
    pub row_count: usize,
    /// Rows removed because a numeric cell was corrupt.
    pub dropped_rows: usize,
}

impl RawFlowTable {
    /// Column index by name.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.columns.iter().position(|(n, _)| n == name)
    }

    /// The label column's raw strings.
    pub fn labels(&self) -> &[String] {
        let idx = self
            .schema
            .columns
            .iter()
            .position(|(_, k)| *k == ColumnKind::Label)
            .expect("validated schema has a label column");
        match &self.columns[idx] {
            RawColumn::Text(v) => v,
            RawColumn::Number(_) => unreachable!("label columns are stored as text"),
        }
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return None;
    }
    match trimmed.parse::<f64>() {
        // Negative values are rejected rather than clamped; the discretizer
        // has no representation for them.
        Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
        _ => None,
    }
}

/// Load a CSV file against a resolved schema.
///
/// The header must contain exactly the schema's column names (any order).
/// With `SchemaSpec::Infer`, column kinds are deduced first: a column is
/// numeric when every cell of every row parses as a finite nonnegative
/// decimal, categorical otherwise.
pub fn load_csv(path: impl AsRef<Path>, spec: &SchemaSpec) -> Result<RawFlowTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: missing header: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::data(format!(
            "{}: missing or empty header row",
            path.display()
        )));
    }

    let mut records: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        records.push(rec);
    }

    let schema = match spec {
        SchemaSpec::Fixed(schema) => {
            schema.validate()?;
            schema.clone()
        }
        SchemaSpec::Infer { label_column } => {
            let all_numeric: Vec<bool> = (0..header.len())
                .map(|col| {
                    !records.is_empty()
                        && records
                            .iter()
                            .all(|rec| rec.get(col).and_then(parse_cell).is_some())
                })
                .collect();
            infer_schema(&header, &all_numeric, label_column)?
        }
    };

    // Map each schema column to its position in the file, order-insensitive.
    let mut field_of_column = Vec::with_capacity(schema.columns.len());
    for (name, _) in &schema.columns {
        let pos = header.iter().position(|h| h == name).ok_or_else(|| {
            Error::data(format!(
                "{}: header lacks schema column {name:?}",
                path.display()
            ))
        })?;
        field_of_column.push(pos);
    }
    if header.len() != schema.columns.len() {
        let extra: Vec<&String> = header
            .iter()
            .filter(|h| !schema.columns.iter().any(|(n, _)| n == *h))
            .collect();
        return Err(Error::data(format!(
            "{}: header columns {extra:?} are not in schema {:?}",
            path.display(),
            schema.name
        )));
    }

    let mut columns: Vec<RawColumn> = schema
        .columns
        .iter()
        .map(|(_, kind)| match kind {
            ColumnKind::Numeric => RawColumn::Number(Vec::new()),
            _ => RawColumn::Text(Vec::new()),
        })
        .collect();

    let total_rows = records.len();
    let mut dropped = 0usize;
    let mut parsed_row: Vec<f64> = vec![0.0; schema.columns.len()];
    'rows: for rec in &records {
        if rec.len() != header.len() {
            dropped += 1;
            continue;
        }
        for (ci, (_, kind)) in schema.columns.iter().enumerate() {
            if *kind == ColumnKind::Numeric {
                match parse_cell(&rec[field_of_column[ci]]) {
                    Some(v) => parsed_row[ci] = v,
                    None => {
                        dropped += 1;
                        continue 'rows;
                    }
                }
            }
        }
        for (ci, (_, kind)) in schema.columns.iter().enumerate() {
            match (&mut columns[ci], kind) {
                (RawColumn::Number(col), _) => col.push(parsed_row[ci]),
                (RawColumn::Text(col), _) => {
                    col.push(rec[field_of_column[ci]].trim().to_string());
                }
            }
            let _ = kind;
        }
    }

    if total_rows > 0 && dropped * 2 > total_rows {
        return Err(Error::data(format!(
            "{}: {dropped} of {total_rows} rows were corrupt; the schema {:?} \
             probably does not match this file",
            path.display(),
            schema.name
        )));
    }

    Ok(RawFlowTable {
        row_count: total_rows - dropped,
        dropped_rows: dropped,
        schema,
        columns,
    })
}
