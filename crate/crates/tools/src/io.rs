//! CSV datasets, schema files and JSON output.
//!
//! CSV: UTF-8, comma separated, header line first, `.` decimal point. Labels
//! are `-1`/`+1`; `0`/`1` is accepted and remapped to `-1`/`+1`. Values are
//! written with Rust's shortest round-trip formatting, so writing and
//! re-reading a dataset reproduces it exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use recourse_core::dataset::{Dataset, Label};
use recourse_core::schema::{Feature, FeatureSchema};
use serde::{Deserialize, Serialize};

use crate::{ToolError, ToolResult};

/// `{"features": [...], "label": "<column>"}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaFile {
    pub features: Vec<Feature>,
    pub label: String,
}

impl SchemaFile {
    pub fn new(schema: &FeatureSchema, label: &str) -> Self {
        Self { features: schema.features().to_vec(), label: label.to_string() }
    }

    pub fn schema(&self) -> ToolResult<FeatureSchema> {
        if self.features.is_empty() {
            return Err(ToolError::Format("schema lists no features".into()));
        }
        if self.features.iter().any(|f| f.name == self.label) {
            return Err(ToolError::Format(format!("label `{}` is also a feature name", self.label)));
        }
        Ok(FeatureSchema::new(self.features.clone())?)
    }
}

pub fn read_schema(path: &Path) -> ToolResult<SchemaFile> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    let file: SchemaFile =
        serde_json::from_str(&text).map_err(|e| ToolError::Format(format!("{}: {e}", path.display())))?;
    file.schema()?;
    Ok(file)
}

pub fn write_schema(path: &Path, file: &SchemaFile) -> ToolResult<()> {
    write_json(path, file)
}

pub fn read_csv(reader: impl Read, schema: &FeatureSchema, label_column: &str) -> ToolResult<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| ToolError::Format(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ToolError::Format(format!("missing column {name:?}")))
    };
    let feature_cols: Vec<usize> = schema.names().map(column).collect::<ToolResult<_>>()?;
    let label_col = column(label_column)?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| ToolError::Format(format!("row {i}: {e}")))?;
        let cell = |c: usize| record.get(c).map(str::trim).unwrap_or("");
        let row = feature_cols
            .iter()
            .zip(schema.names())
            .map(|(&c, name)| {
                cell(c)
                    .parse::<f64>()
                    .map_err(|_| ToolError::Format(format!("row {i}, feature {name}: cannot parse {:?}", cell(c))))
            })
            .collect::<ToolResult<Vec<f64>>>()?;
        let raw = cell(label_col);
        let label = raw
            .parse::<i64>()
            .ok()
            .and_then(Label::from_value)
            .ok_or_else(|| ToolError::Format(format!("row {i}: label {raw:?} is not one of -1, 0, 1")))?;
        rows.push(row);
        labels.push(label);
    }
    Ok(Dataset::new(schema.clone(), rows, labels)?)
}

pub fn load_csv(path: &Path, schema: &FeatureSchema, label_column: &str) -> ToolResult<Dataset> {
    let file = fs::File::open(path).map_err(|e| ToolError::io(path, e))?;
    read_csv(file, schema, label_column)
}

pub fn write_csv_to(writer: impl Write, data: &Dataset, label_column: &str) -> ToolResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.schema().names().collect();
    header.push(label_column);
    w.write_record(&header).map_err(|e| ToolError::Format(e.to_string()))?;
    for (row, label) in data.rows().zip(data.labels()) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(i8::from(*label).to_string());
        w.write_record(&record).map_err(|e| ToolError::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| ToolError::Format(e.to_string()))?;
    Ok(())
}

pub fn write_csv(path: &Path, data: &Dataset, label_column: &str) -> ToolResult<()> {
    let file = fs::File::create(path).map_err(|e| ToolError::io(path, e))?;
    write_csv_to(file, data, label_column)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> ToolResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| ToolError::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> ToolResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| ToolError::io(parent, e))?;
    }
    fs::write(path, to_json(value)?).map_err(|e| ToolError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> ToolResult<T> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ToolError::Format(format!("{}: {e}", path.display())))
}

/// Writes a table of string cells as CSV.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> ToolResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| ToolError::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| ToolError::io(path, e))?;
    w.write_record(header).map_err(|e| ToolError::io(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| ToolError::io(path, e))?;
    }
    w.flush().map_err(|e| ToolError::io(path, e))
}
