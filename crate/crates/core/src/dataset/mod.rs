//! Tabular datasets with features, multi-label targets and protected attributes.
//!
//! A [`Dataset`] is immutable once built. Missing protected values are mapped
//! to the explicit [`UNSPECIFIED`] level at construction time, so no row is
//! ever dropped for missing demographics.

mod encoding;
mod groups;
mod load;
mod presets;
mod quality;
mod split;
mod synth;

pub(crate) use encoding::hstack;
pub use encoding::{EncodedAttribute, OneHotEncoding};
pub use groups::{derive_intersections, GroupKey, IntersectionIndex, DEFAULT_MIN_SUPPORT};
pub use load::{load_csv, read_schema, write_csv, ColumnRole, Schema, SCHEMA_VERSION};
pub use quality::{
    data_quality_report, CorrelatedPair, GroupSize, LabelSummary, QualityOptions, QualityReport,
    UnspecifiedRate,
};
pub use split::{split, split_indices};
pub use synth::{
    generate_synthetic, AttributeSpec, ConditionalRate, CorrelationSpec, LabelSignal, ModeSpec,
    ProxyTarget, SpendSpec, SynthConfig, SYNTH_VERSION,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level name given to missing protected values.
pub const UNSPECIFIED: &str = "unspecified";

/// Which kind of targets a dataset carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Binary adoption labels, one classification problem per label.
    #[default]
    #[serde(alias = "classification")]
    Adoption,
    /// Real-valued spend amounts, one regression problem per label.
    #[serde(alias = "regression")]
    Spending,
}

impl TaskKind {
    pub fn is_classification(self) -> bool {
        matches!(self, TaskKind::Adoption)
    }
}

/// A categorical protected column. `codes[i]` indexes into `levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedAttribute {
    pub name: String,
    pub levels: Vec<String>,
    pub codes: Vec<u32>,
}

impl ProtectedAttribute {
    /// Builds a column from raw values. Empty strings and `None` become
    /// [`UNSPECIFIED`]. When `declared` is `None` the level set is the sorted
    /// distinct observed values. [`UNSPECIFIED`] is appended if absent.
    pub fn from_raw<S: AsRef<str>>(
        name: &str,
        raw: &[Option<S>],
        declared: Option<&[String]>,
    ) -> Result<Self> {
        let mut levels: Vec<String> = match declared {
            Some(d) => d.to_vec(),
            None => {
                let mut seen: Vec<String> = raw
                    .iter()
                    .filter_map(|v| v.as_ref().map(|s| s.as_ref().trim().to_string()))
                    .filter(|s| !s.is_empty())
                    .collect();
                seen.sort();
                seen.dedup();
                seen
            }
        };
        if !levels.iter().any(|l| l == UNSPECIFIED) {
            levels.push(UNSPECIFIED.to_string());
        }
        let unspecified = levels.iter().position(|l| l == UNSPECIFIED).unwrap() as u32;
        let mut codes = Vec::with_capacity(raw.len());
        for (row, v) in raw.iter().enumerate() {
            let v = v.as_ref().map(|s| s.as_ref().trim()).unwrap_or("");
            if v.is_empty() {
                codes.push(unspecified);
                continue;
            }
            match levels.iter().position(|l| l == v) {
                Some(c) => codes.push(c as u32),
                None => {
                    return Err(Error::config(format!(
                    "value {v:?} at row {row} of protected column {name:?} is not a declared level"
                )))
                }
            }
        }
        Ok(ProtectedAttribute {
            name: name.to_string(),
            levels,
            codes,
        })
    }

    pub fn level_of(&self, row: usize) -> &str {
        &self.levels[self.codes[row] as usize]
    }

    pub fn unspecified_code(&self) -> u32 {
        self.levels.iter().position(|l| l == UNSPECIFIED).unwrap() as u32
    }

    pub fn level_code(&self, level: &str) -> Option<u32> {
        self.levels
            .iter()
            .position(|l| l == level)
            .map(|c| c as u32)
    }

    /// Indicator vector `1.0` where the row has `level`.
    pub fn indicator(&self, level: &str) -> Result<Vec<f64>> {
        let code = self
            .level_code(level)
            .ok_or_else(|| Error::config(format!("{:?} has no level {level:?}", self.name)))?;
        Ok(self
            .codes
            .iter()
            .map(|&c| if c == code { 1.0 } else { 0.0 })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    targets: DMatrix<f64>,
    protected: Vec<ProtectedAttribute>,
    task: TaskKind,
    feature_names: Vec<String>,
    label_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: DMatrix<f64>,
        feature_names: Vec<String>,
        targets: DMatrix<f64>,
        label_names: Vec<String>,
        protected: Vec<ProtectedAttribute>,
        task: TaskKind,
    ) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::Insufficient("dataset has no rows".into()));
        }
        if features.ncols() == 0 || targets.ncols() == 0 || protected.is_empty() {
            return Err(Error::Insufficient(
                "dataset needs at least one feature, one label and one protected attribute".into(),
            ));
        }
        if targets.nrows() != n || protected.iter().any(|a| a.codes.len() != n) {
            return Err(Error::shape("all blocks must have the same row count"));
        }
        if feature_names.len() != features.ncols() || label_names.len() != targets.ncols() {
            return Err(Error::shape("column names do not match block widths"));
        }
        for (j, name) in feature_names.iter().enumerate() {
            if let Some(row) = features.column(j).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonNumeric {
                    role: "feature",
                    column: name.clone(),
                    row,
                    value: features[(row, j)].to_string(),
                });
            }
        }
        for (k, name) in label_names.iter().enumerate() {
            for (row, &v) in targets.column(k).iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        role: "label",
                        column: name.clone(),
                        row,
                        value: v.to_string(),
                    });
                }
                if task.is_classification() && v != 0.0 && v != 1.0 {
                    return Err(Error::NonBinaryLabel {
                        column: name.clone(),
                        row,
                        value: v,
                    });
                }
            }
        }
        for attr in &protected {
            if attr.level_code(UNSPECIFIED).is_none() {
                return Err(Error::config(format!(
                    "protected attribute {:?} lacks the {UNSPECIFIED:?} level",
                    attr.name
                )));
            }
            if attr.codes.iter().any(|&c| c as usize >= attr.levels.len()) {
                return Err(Error::config(format!(
                    "protected attribute {:?} has codes outside its level set",
                    attr.name
                )));
            }
        }
        Ok(Dataset {
            features,
            targets,
            protected,
            task,
            feature_names,
            label_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.targets.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn label(&self, k: usize) -> Vec<f64> {
        self.targets.column(k).iter().copied().collect()
    }

    pub fn protected(&self) -> &[ProtectedAttribute] {
        &self.protected
    }

    pub fn attribute(&self, name: &str) -> Result<&ProtectedAttribute> {
        self.protected
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.protected.iter().map(|a| a.name.clone()).collect()
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// New dataset holding `rows` in the given order. Level sets are kept.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let features = self.features.select_rows(rows.iter());
        let targets = self.targets.select_rows(rows.iter());
        let protected = self
            .protected
            .iter()
            .map(|a| ProtectedAttribute {
                name: a.name.clone(),
                levels: a.levels.clone(),
                codes: rows.iter().map(|&r| a.codes[r]).collect(),
            })
            .collect();
        Dataset {
            features,
            targets,
            protected,
            task: self.task,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let attr = ProtectedAttribute::from_raw("g", &[Some("a"), None, Some("b"), Some("")], None)
            .unwrap();
        Dataset::new(
            DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]),
            vec!["f".into()],
            DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 1.0, 0.0]),
            vec!["y".into()],
            vec![attr],
            TaskKind::Adoption,
        )
        .unwrap()
    }

    #[test]
    fn missing_protected_values_become_unspecified() {
        let ds = tiny();
        let g = ds.attribute("g").unwrap();
        assert_eq!(g.levels, vec!["a", "b", UNSPECIFIED]);
        assert_eq!(g.level_of(1), UNSPECIFIED);
        assert_eq!(g.level_of(3), UNSPECIFIED);
        assert_eq!(ds.n_rows(), 4);
    }

    #[test]
    fn rejects_non_binary_classification_labels() {
        let attr = ProtectedAttribute::from_raw("g", &[Some("a"), Some("b")], None).unwrap();
        let err = Dataset::new(
            DMatrix::from_row_slice(2, 1, &[1.0, 2.0]),
            vec!["f".into()],
            DMatrix::from_row_slice(2, 1, &[0.0, 2.0]),
            vec!["y".into()],
            vec![attr],
            TaskKind::Adoption,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonBinaryLabel { .. }));
    }

    #[test]
    fn undeclared_level_is_an_error() {
        let declared = vec!["a".to_string()];
        let err = ProtectedAttribute::from_raw("g", &[Some("z")], Some(&declared)).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn select_rows_keeps_level_sets() {
        let ds = tiny();
        let sub = ds.select_rows(&[2, 0]);
        assert_eq!(sub.n_rows(), 2);
        assert_eq!(sub.features()[(0, 0)], 3.0);
        assert_eq!(sub.attribute("g").unwrap().levels.len(), 3);
    }
}
