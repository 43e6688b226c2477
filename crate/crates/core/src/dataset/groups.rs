use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_SUPPORT: usize = 30;

/// One level per selected attribute, e.g. `male|over_40|white`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey(pub Vec<String>);

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("|"))
    }
}

/// Partition of the rows into intersectional groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionIndex {
    attributes: Vec<String>,
    groups: Vec<GroupKey>,
    members: Vec<Vec<usize>>,
    row_group: Vec<usize>,
    min_support: usize,
    flagged: Vec<bool>,
}

impl IntersectionIndex {
    /// Builds an index from a per-row group id. Group ids must be dense
    /// `0..keys.len()`, and every group must be non-empty.
    pub fn from_assignments(
        attributes: Vec<String>,
        keys: Vec<GroupKey>,
        row_group: Vec<usize>,
        min_support: usize,
    ) -> Result<Self> {
        let mut members = vec![Vec::new(); keys.len()];
        for (row, &g) in row_group.iter().enumerate() {
            members
                .get_mut(g)
                .ok_or_else(|| Error::shape(format!("group id {g} out of range")))?
                .push(row);
        }
        if let Some(g) = members.iter().position(|m| m.is_empty()) {
            return Err(Error::Insufficient(format!(
                "group {} has no rows",
                keys[g]
            )));
        }
        let flagged = members.iter().map(|m| m.len() < min_support).collect();
        Ok(IntersectionIndex {
            attributes,
            groups: keys,
            members,
            row_group,
            min_support,
            flagged,
        })
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn groups(&self) -> &[GroupKey] {
        &self.groups
    }

    pub fn group_names(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.to_string()).collect()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_rows(&self) -> usize {
        self.row_group.len()
    }

    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[g]
    }

    pub fn group_of(&self, row: usize) -> usize {
        self.row_group[row]
    }

    pub fn row_groups(&self) -> &[usize] {
        &self.row_group
    }

    pub fn size(&self, g: usize) -> usize {
        self.members[g].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.len()).collect()
    }

    pub fn min_support(&self) -> usize {
        self.min_support
    }

    pub fn is_flagged(&self, g: usize) -> bool {
        self.flagged[g]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flagged
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.to_string() == name)
    }

    /// Largest group; ties go to the earlier group.
    pub fn largest(&self) -> usize {
        let mut best = 0;
        for g in 1..self.groups.len() {
            if self.size(g) > self.size(best) {
                best = g;
            }
        }
        best
    }
}

/// Groups rows by the joint levels of `attrs`. Only observed combinations
/// become groups, ordered lexicographically by level order of each attribute.
pub fn derive_intersections(
    ds: &Dataset,
    attrs: &[String],
    min_support: usize,
) -> Result<IntersectionIndex> {
    if attrs.is_empty() {
        return Err(Error::config("at least one attribute is required"));
    }
    let columns = attrs
        .iter()
        .map(|a| ds.attribute(a))
        .collect::<Result<Vec<_>>>()?;
    let mut by_codes: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for row in 0..ds.n_rows() {
        let codes: Vec<u32> = columns.iter().map(|c| c.codes[row]).collect();
        by_codes.entry(codes).or_default().push(row);
    }
    let mut keys = Vec::with_capacity(by_codes.len());
    let mut row_group = vec![0usize; ds.n_rows()];
    for (g, (codes, rows)) in by_codes.iter().enumerate() {
        keys.push(GroupKey(
            codes
                .iter()
                .zip(&columns)
                .map(|(&c, col)| col.levels[c as usize].clone())
                .collect(),
        ));
        for &r in rows {
            row_group[r] = g;
        }
    }
    IntersectionIndex::from_assignments(attrs.to_vec(), keys, row_group, min_support)
}
