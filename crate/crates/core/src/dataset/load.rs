//! CSV ingestion driven by a JSON schema.
//!
//! Dialect: comma separated, mandatory header row, UTF-8, `.` as decimal
//! point. An empty cell is a missing value; missing protected values become
//! [`UNSPECIFIED`], missing features or labels are load errors.
//!
//! Schema document:
//!
//! ```json
//! {
//!   "spec_version": "1.0",
//!   "task": "adoption",
//!   "columns": { "f1": "feature", "label_1": "label", "gender": "protected", "id": "ignore" },
//!   "levels": { "gender": ["female", "male"] }
//! }
//! ```
//!
//! Every CSV column needs a role. Blocks keep the CSV header order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Dataset, ProtectedAttribute, TaskKind, UNSPECIFIED};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Feature,
    Label,
    Protected,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "default_schema_version")]
    pub spec_version: String,
    #[serde(default)]
    pub task: TaskKind,
    pub columns: BTreeMap<String, ColumnRole>,
    #[serde(default)]
    pub levels: BTreeMap<String, Vec<String>>,
}

fn default_schema_version() -> String {
    SCHEMA_VERSION.to_string()
}

impl Schema {
    /// Schema for the column layout produced by [`write_csv`].
    pub fn for_dataset(ds: &Dataset) -> Schema {
        let mut columns = BTreeMap::new();
        for f in ds.feature_names() {
            columns.insert(f.clone(), ColumnRole::Feature);
        }
        for l in ds.label_names() {
            columns.insert(l.clone(), ColumnRole::Label);
        }
        let mut levels = BTreeMap::new();
        for a in ds.protected() {
            columns.insert(a.name.clone(), ColumnRole::Protected);
            levels.insert(a.name.clone(), a.levels.clone());
        }
        Schema {
            spec_version: SCHEMA_VERSION.to_string(),
            task: ds.task(),
            columns,
            levels,
        }
    }
}

pub fn read_schema(path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_reader(file, schema)
}

pub(crate) fn load_reader<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();

    for name in schema.columns.keys() {
        if !header.contains(name) {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }
    for name in schema.levels.keys() {
        if schema.columns.get(name) != Some(&ColumnRole::Protected) {
            return Err(Error::UnknownAttribute(name.clone()));
        }
    }
    let mut roles = Vec::with_capacity(header.len());
    for h in &header {
        match schema.columns.get(h) {
            Some(r) => roles.push(*r),
            None => return Err(Error::UnassignedColumn(h.clone())),
        }
    }
    let cols_of = |role: ColumnRole| -> Vec<usize> {
        roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == role)
            .map(|(i, _)| i)
            .collect()
    };
    let feature_cols = cols_of(ColumnRole::Feature);
    let label_cols = cols_of(ColumnRole::Label);
    let protected_cols = cols_of(ColumnRole::Protected);

    let mut features: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut raw_protected: Vec<Vec<Option<String>>> = vec![Vec::new(); protected_cols.len()];
    let mut n = 0usize;
    for record in rdr.records() {
        let record = record?;
        let row = n;
        let numeric = |col: usize, role: &'static str| -> Result<f64> {
            let cell = record.get(col).unwrap_or("").trim();
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    role,
                    column: header[col].clone(),
                    row,
                });
            }
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::NonNumeric {
                    role,
                    column: header[col].clone(),
                    row,
                    value: cell.to_string(),
                })
        };
        for &c in &feature_cols {
            features.push(numeric(c, "feature")?);
        }
        for &c in &label_cols {
            let v = numeric(c, "label")?;
            if schema.task.is_classification() && v != 0.0 && v != 1.0 {
                return Err(Error::NonBinaryLabel {
                    column: header[c].clone(),
                    row,
                    value: v,
                });
            }
            targets.push(v);
        }
        for (slot, &c) in protected_cols.iter().enumerate() {
            let cell = record.get(c).unwrap_or("").trim();
            raw_protected[slot].push(if cell.is_empty() {
                None
            } else {
                Some(cell.to_string())
            });
        }
        n += 1;
    }

    let features = DMatrix::from_row_slice(n, feature_cols.len(), &features);
    let targets = DMatrix::from_row_slice(n, label_cols.len(), &targets);
    let protected = protected_cols
        .iter()
        .zip(&raw_protected)
        .map(|(&c, raw)| {
            let declared = schema.levels.get(&header[c]).map(|v| v.as_slice());
            ProtectedAttribute::from_raw(&header[c], raw, declared)
        })
        .collect::<Result<Vec<_>>>()?;
    let name_list = |cols: &[usize]| cols.iter().map(|&c| header[c].clone()).collect();
    Dataset::new(
        features,
        name_list(&feature_cols),
        targets,
        name_list(&label_cols),
        protected,
        schema.task,
    )
}

/// Writes features, labels, then protected columns. [`UNSPECIFIED`] is
/// written as an empty cell. Floats use the shortest round-trip form, so
/// reloading reproduces the dataset exactly.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let bytes = to_csv_bytes(ds)?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn to_csv_bytes(ds: &Dataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = Vec::new();
    header.extend(ds.feature_names().iter().map(|s| s.as_str()));
    header.extend(ds.label_names().iter().map(|s| s.as_str()));
    header.extend(ds.protected().iter().map(|a| a.name.as_str()));
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..ds.n_rows() {
        record.clear();
        record.extend(ds.features().row(i).iter().map(|v| format!("{v}")));
        record.extend(ds.targets().row(i).iter().map(|v| format!("{v}")));
        for a in ds.protected() {
            let level = a.level_of(i);
            record.push(if level == UNSPECIFIED {
                String::new()
            } else {
                level.to_string()
            });
        }
        w.write_record(&record)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(task: TaskKind, cols: &[(&str, ColumnRole)]) -> Schema {
        Schema {
            spec_version: SCHEMA_VERSION.into(),
            task,
            columns: cols.iter().map(|(n, r)| (n.to_string(), *r)).collect(),
            levels: BTreeMap::new(),
        }
    }

    #[test]
    fn four_rows_with_one_missing_protected_cell() {
        let csv = "f1,f2,y,gender\n1,2,0,male\n3,4,1,\n5,6,1,female\n7,8,0,male\n";
        let s = schema(
            TaskKind::Adoption,
            &[
                ("f1", ColumnRole::Feature),
                ("f2", ColumnRole::Feature),
                ("y", ColumnRole::Label),
                ("gender", ColumnRole::Protected),
            ],
        );
        let ds = load_reader(csv.as_bytes(), &s).unwrap();
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.attribute("gender").unwrap().level_of(1), UNSPECIFIED);
    }

    #[test]
    fn text_feature_is_rejected() {
        let csv = "f1,name,y,g\n1,bob,0,a\n";
        let s = schema(
            TaskKind::Adoption,
            &[
                ("f1", ColumnRole::Feature),
                ("name", ColumnRole::Feature),
                ("y", ColumnRole::Label),
                ("g", ColumnRole::Protected),
            ],
        );
        let err = load_reader(csv.as_bytes(), &s).unwrap_err();
        assert!(
            matches!(
                err,
                Error::NonNumeric {
                    role: "feature",
                    ..
                }
            ),
            "{err}"
        );
        assert!(err.to_string().contains("non-numeric feature"));
    }

    #[test]
    fn unknown_and_unassigned_columns() {
        let csv = "f1,y,g\n1,0,a\n";
        let mut s = schema(
            TaskKind::Adoption,
            &[
                ("f1", ColumnRole::Feature),
                ("y", ColumnRole::Label),
                ("g", ColumnRole::Protected),
                ("ghost", ColumnRole::Feature),
            ],
        );
        assert!(matches!(
            load_reader(csv.as_bytes(), &s).unwrap_err(),
            Error::UnknownColumn(c) if c == "ghost"
        ));
        s.columns.remove("ghost");
        s.columns.remove("g");
        assert!(matches!(
            load_reader(csv.as_bytes(), &s).unwrap_err(),
            Error::UnassignedColumn(c) if c == "g"
        ));
    }

    #[test]
    fn classification_label_outside_binary() {
        let csv = "f1,y,g\n1,0.5,a\n";
        let s = schema(
            TaskKind::Adoption,
            &[
                ("f1", ColumnRole::Feature),
                ("y", ColumnRole::Label),
                ("g", ColumnRole::Protected),
            ],
        );
        assert!(matches!(
            load_reader(csv.as_bytes(), &s).unwrap_err(),
            Error::NonBinaryLabel { .. }
        ));
        let s = Schema {
            task: TaskKind::Spending,
            ..s
        };
        assert_eq!(
            load_reader(csv.as_bytes(), &s).unwrap().targets()[(0, 0)],
            0.5
        );
    }

    #[test]
    fn ragged_csv_is_malformed() {
        let csv = "f1,y,g\n1,0\n";
        let s = schema(
            TaskKind::Adoption,
            &[
                ("f1", ColumnRole::Feature),
                ("y", ColumnRole::Label),
                ("g", ColumnRole::Protected),
            ],
        );
        assert!(matches!(
            load_reader(csv.as_bytes(), &s).unwrap_err(),
            Error::Csv(_)
        ));
    }

    #[test]
    fn paper_shaped_header() {
        let mut header: Vec<String> = (1..=20).map(|j| format!("f{j}")).collect();
        header.extend((1..=9).map(|k| format!("label_{k}")));
        header.extend(["gender", "ethnicity", "age"].map(String::from));
        let mut row: Vec<String> = (0..29).map(|j| (j % 2).to_string()).collect();
        row.extend(["female", "", "over_40"].map(String::from));
        let csv = format!("{}\n{}\n", header.join(","), row.join(","));
        let mut columns = BTreeMap::new();
        for h in &header[..20] {
            columns.insert(h.clone(), ColumnRole::Feature);
        }
        for h in &header[20..29] {
            columns.insert(h.clone(), ColumnRole::Label);
        }
        for h in &header[29..] {
            columns.insert(h.clone(), ColumnRole::Protected);
        }
        let s = Schema {
            spec_version: SCHEMA_VERSION.into(),
            task: TaskKind::Adoption,
            columns,
            levels: BTreeMap::new(),
        };
        let ds = load_reader(csv.as_bytes(), &s).unwrap();
        assert_eq!(
            (ds.n_features(), ds.n_labels(), ds.protected().len()),
            (20, 9, 3)
        );
    }
}
