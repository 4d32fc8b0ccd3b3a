//! Small ordered vertex-set types shared by the graph and vine modules.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered set of vertex labels. Labels are arbitrary `u32` identifiers;
/// files produced by this crate use 1-based labels `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarSet(BTreeSet<u32>);

impl VarSet {
    pub fn new() -> Self {
        VarSet(BTreeSet::new())
    }

    pub fn from_slice(labels: &[u32]) -> Self {
        VarSet(labels.iter().copied().collect())
    }

    pub fn singleton(v: u32) -> Self {
        VarSet(BTreeSet::from([v]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: u32) -> bool {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: u32) -> bool {
        self.0.remove(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.0.iter().copied().collect()
    }

    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn intersection(&self, other: &VarSet) -> VarSet {
        VarSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        VarSet(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &VarSet) -> VarSet {
        VarSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn with(&self, v: u32) -> VarSet {
        let mut s = self.clone();
        s.insert(v);
        s
    }

    pub fn without(&self, v: u32) -> VarSet {
        let mut s = self.clone();
        s.remove(v);
        s
    }

    /// The single element of a one-element set.
    pub fn only(&self) -> Option<u32> {
        if self.0.len() == 1 {
            self.0.first().copied()
        } else {
            None
        }
    }
}

impl FromIterator<u32> for VarSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        VarSet(iter.into_iter().collect())
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// The vertex set `V = {1, .., d}` (or any list of distinct labels) over
/// which structures are defined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet {
    labels: Vec<u32>,
}

impl VertexSet {
    /// Build from a list of labels; rejects empty lists and duplicates.
    pub fn new(labels: Vec<u32>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("vertex set must be nonempty".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::InvalidInput(
                "vertex set contains duplicate labels".into(),
            ));
        }
        Ok(VertexSet { labels: sorted })
    }

    /// The standard vertex set `1..=d`.
    pub fn standard(d: usize) -> Self {
        VertexSet {
            labels: (1..=d as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn contains(&self, v: u32) -> bool {
        self.labels.binary_search(&v).is_ok()
    }

    /// Position of a label within the sorted label list. Model evaluation
    /// uses this to map vertex labels to point coordinates.
    pub fn index_of(&self, v: u32) -> Option<usize> {
        self.labels.binary_search(&v).ok()
    }

    pub fn as_varset(&self) -> VarSet {
        VarSet::from_slice(&self.labels)
    }
}
