use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Dummy coding of one protected attribute. The first level in the declared
/// level order is the dropped reference; one column per remaining level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedAttribute {
    pub name: String,
    pub dropped: String,
    pub columns: Vec<String>,
}

/// Stable one-hot encoding of protected attributes with reference dropping.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OneHotEncoding {
    pub attributes: Vec<EncodedAttribute>,
}

impl OneHotEncoding {
    pub fn new(ds: &Dataset, attrs: &[String]) -> Result<Self> {
        let attributes = attrs
            .iter()
            .map(|name| {
                let attr = ds.attribute(name)?;
                let (first, rest) = attr
                    .levels
                    .split_first()
                    .ok_or_else(|| Error::config(format!("attribute {name:?} has no levels")))?;
                Ok(EncodedAttribute {
                    name: name.clone(),
                    dropped: first.clone(),
                    columns: rest.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OneHotEncoding { attributes })
    }

    /// Like [`OneHotEncoding::new`] but restricted to levels observed in
    /// `ds`, so no dummy column is identically zero.
    pub fn observed(ds: &Dataset, attrs: &[String]) -> Result<Self> {
        let attributes = attrs
            .iter()
            .map(|name| {
                let attr = ds.attribute(name)?;
                let mut seen = vec![false; attr.levels.len()];
                for &c in &attr.codes {
                    seen[c as usize] = true;
                }
                let mut levels = attr
                    .levels
                    .iter()
                    .zip(&seen)
                    .filter(|(_, s)| **s)
                    .map(|(l, _)| l.clone());
                let dropped = levels.next().ok_or_else(|| {
                    Error::Insufficient(format!("attribute {name:?} has no rows"))
                })?;
                Ok(EncodedAttribute {
                    name: name.clone(),
                    dropped,
                    columns: levels.collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OneHotEncoding { attributes })
    }

    pub fn width(&self) -> usize {
        self.attributes.iter().map(|a| a.columns.len()).sum()
    }

    /// Column names `attribute=level`.
    pub fn column_names(&self) -> Vec<String> {
        self.attributes
            .iter()
            .flat_map(|a| a.columns.iter().map(move |l| format!("{}={}", a.name, l)))
            .collect()
    }

    pub fn transform(&self, ds: &Dataset) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(ds.n_rows(), self.width());
        let mut offset = 0;
        for enc in &self.attributes {
            let attr = ds.attribute(&enc.name)?;
            for row in 0..ds.n_rows() {
                let level = attr.level_of(row);
                if let Some(j) = enc.columns.iter().position(|c| c == level) {
                    out[(row, offset + j)] = 1.0;
                } else if level != enc.dropped {
                    return Err(Error::config(format!(
                        "level {level:?} of {:?} is not in the encoding",
                        enc.name
                    )));
                }
            }
            offset += enc.columns.len();
        }
        Ok(out)
    }
}

/// `[left | right]`.
pub(crate) fn hstack(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let n = left.nrows();
    let mut out = DMatrix::zeros(n, left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols())
        .copy_from(right);
    out
}
