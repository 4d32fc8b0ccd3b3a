//! File formats: JSON structure and model files, CSV data tables.
//!
//! Structure file: `{"vertices":[...], "clusters":[[...],...],
//! "edges":[[i,j],...]}` with 1-based vertex labels; `edges` holds 0-based
//! indices into `clusters` and may be omitted, in which case a
//! maximum-weight spanning tree over the intersection sizes is derived.
//!
//! Model file: `{"vertices":[...], "trees":[...], "pair_copulas":[...]}`
//! with one tree entry per level (the first entry lists the first tree's
//! edges as 2-element clusters) and one pair-copula record
//! `{"a":..,"b":..,"S":[..],"family":"..","parameter":..}` per link.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family};
use crate::error::{Error, Result};
use crate::graph::{build_junction_tree, CherryTree, JunctionTree};
use crate::set::{VarSet, VertexSet};
use crate::vine::{build_cherry_vine, EdgeLabel, VineModel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureFile {
    pub vertices: Vec<u32>,
    pub clusters: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
}

impl StructureFile {
    pub fn from_junction_tree(jt: &JunctionTree) -> Self {
        StructureFile {
            vertices: jt.vertices().labels().to_vec(),
            clusters: jt.clusters().iter().map(|c| c.to_vec()).collect(),
            edges: Some(jt.tree_edges().iter().map(|e| (e.i, e.j)).collect()),
        }
    }

    pub fn hypergraph(&self) -> Result<(VertexSet, Vec<VarSet>)> {
        let vertices = VertexSet::new(self.vertices.clone())?;
        let clusters = self
            .clusters
            .iter()
            .map(|c| VarSet::from_slice(c))
            .collect();
        Ok((vertices, clusters))
    }

    /// Build the junction tree: from the stored edges when present,
    /// otherwise derived by maximum-weight spanning tree.
    pub fn junction_tree(&self) -> Result<JunctionTree> {
        let (vertices, clusters) = self.hypergraph()?;
        match &self.edges {
            Some(edges) => JunctionTree::new(vertices, clusters, edges.clone()),
            None => build_junction_tree(&vertices, &clusters),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeFile {
    pub clusters: Vec<Vec<u32>>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairCopulaFile {
    pub a: u32,
    pub b: u32,
    #[serde(rename = "S")]
    pub s: Vec<u32>,
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub vertices: Vec<u32>,
    /// One entry per tree level T_1..T_{d-1}; the first entry's clusters
    /// are the first tree's edges and its edge list is empty.
    pub trees: Vec<TreeFile>,
    pub pair_copulas: Vec<PairCopulaFile>,
}

impl ModelFile {
    pub fn from_model(m: &VineModel) -> Self {
        let structure = m.structure();
        let mut trees = Vec::new();
        trees.push(TreeFile {
            clusters: structure
                .first_tree()
                .iter()
                .map(|&(a, b)| vec![a, b])
                .collect(),
            edges: Vec::new(),
        });
        for tree in structure.trees() {
            trees.push(TreeFile {
                clusters: tree.clusters().iter().map(|c| c.to_vec()).collect(),
                edges: tree.tree_edges().iter().map(|e| (e.i, e.j)).collect(),
            });
        }
        let pair_copulas = m
            .pair_copulas()
            .map(|(label, copula)| PairCopulaFile {
                a: label.a,
                b: label.b,
                s: label.cond.to_vec(),
                family: copula.family().name().to_string(),
                parameter: copula.parameter(),
            })
            .collect();
        ModelFile {
            vertices: structure.vertices().labels().to_vec(),
            trees,
            pair_copulas,
        }
    }

    pub fn to_model(&self) -> Result<VineModel> {
        let vertices = VertexSet::new(self.vertices.clone())?;
        let d = vertices.len();
        if self.trees.len() != (d - 1).max(1) {
            return Err(Error::Structure(format!(
                "model file has {} tree entries, expected {}",
                self.trees.len(),
                (d - 1).max(1)
            )));
        }
        let mut first_tree = Vec::new();
        for cluster in &self.trees[0].clusters {
            if cluster.len() != 2 {
                return Err(Error::Structure(
                    "first tree entry must list 2-element clusters".into(),
                ));
            }
            first_tree.push((cluster[0], cluster[1]));
        }
        let mut trees = Vec::new();
        for (i, entry) in self.trees.iter().enumerate().skip(1) {
            let order = i + 1;
            let clusters: Vec<VarSet> =
                entry.clusters.iter().map(|c| VarSet::from_slice(c)).collect();
            let jt = JunctionTree::new(vertices.clone(), clusters, entry.edges.clone())?;
            trees.push(CherryTree::new(order, jt)?);
        }
        let structure = build_cherry_vine(vertices, first_tree, trees)?;
        let mut assignments = Vec::with_capacity(self.pair_copulas.len());
        for pc in &self.pair_copulas {
            let family: Family = pc.family.parse()?;
            let copula = BivariateCopula::new(family, pc.parameter)?;
            assignments.push((
                EdgeLabel {
                    a: pc.a.min(pc.b),
                    b: pc.a.max(pc.b),
                    cond: VarSet::from_slice(&pc.s),
                },
                copula,
            ));
        }
        VineModel::new(structure, assignments)
    }
}

/// Serialize any of the JSON file types with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// A CSV data table: header row plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DataTable {
    pub fn d(&self) -> usize {
        self.headers.len()
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }
}

/// Read a CSV file with a header row; every body cell must parse as a
/// float. Parse failures report 1-based row/column positions (the header
/// is row 1).
pub fn read_csv_data(path: &Path) -> Result<DataTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers.is_empty() {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "empty header row".into(),
        });
    }
    let mut rows = Vec::new();
    for (ridx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: ridx + 2,
                column: record.len(),
                message: format!("expected {} fields, got {}", headers.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(headers.len());
        for (cidx, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row: ridx + 2,
                column: cidx + 1,
                message: format!("'{field}' is not a number"),
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    Ok(DataTable { headers, rows })
}

/// Write a CSV table with 17 significant digits per value, enough to
/// round-trip any f64 exactly.
pub fn write_csv_data(path: &Path, headers: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(headers)?;
    for row in rows {
        let fields: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

/// 17-significant-digit decimal rendering.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}
