use std::fs;
use std::path::Path;

use super::{DatasetBundle, Graph};
use crate::error::{Result, SgclError};
use crate::numerics::DenseMatrix;

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_err(line: usize, message: impl Into<String>) -> SgclError {
    SgclError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `src dst` lines (0-indexed, single space separated).
pub fn parse_edges(text: &str) -> Result<Vec<(usize, usize, usize)>> {
    let mut edges = Vec::new();
    for (line, l) in lines(text) {
        let mut parts = l.split(' ');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(line, format!("expected \"src dst\", got {l:?}")));
        };
        let u = a
            .parse::<usize>()
            .map_err(|e| parse_err(line, format!("{a:?}: {e}")))?;
        let v = b
            .parse::<usize>()
            .map_err(|e| parse_err(line, format!("{b:?}: {e}")))?;
        edges.push((line, u, v));
    }
    Ok(edges)
}

/// Parses a header-less CSV of real numbers, one row per node.
pub fn parse_features(text: &str) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, l) in lines(text) {
        let mut count = 0;
        for field in l.split(',') {
            let field = field.trim();
            let v = field
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("{field:?}: {e}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, "non-finite feature value"));
            }
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(parse_err(line, format!("{count} columns, expected {c}")));
            }
            _ => {}
        }
        rows += 1;
    }
    DenseMatrix::from_vec(rows, cols.unwrap_or(0), data)
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    lines(text)
        .map(|(line, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|e| parse_err(line, format!("{l:?}: {e}")))
        })
        .collect()
}

/// Loads an edge list, feature CSV and label file. The node count is the
/// number of feature rows; edges are symmetrised and deduplicated.
pub fn load_dataset(
    edge_path: impl AsRef<Path>,
    feature_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
) -> Result<DatasetBundle> {
    let edges = parse_edges(&fs::read_to_string(edge_path)?)?;
    let features = parse_features(&fs::read_to_string(feature_path)?)?;
    let labels = parse_labels(&fs::read_to_string(label_path)?)?;
    bundle_from_parts(edges, features, labels)
}

pub(crate) fn bundle_from_parts(
    edges: Vec<(usize, usize, usize)>,
    features: DenseMatrix,
    labels: Vec<usize>,
) -> Result<DatasetBundle> {
    let n = features.rows();
    if labels.len() != n {
        return Err(SgclError::Consistency(format!(
            "{} labels but {n} feature rows",
            labels.len()
        )));
    }
    if let Some((line, u, v)) = edges.iter().find(|(_, u, v)| *u >= n || *v >= n) {
        return Err(SgclError::Consistency(format!(
            "edge ({u}, {v}) on line {line} references a node beyond the {n} feature rows"
        )));
    }
    let graph = Graph::from_undirected_edges(n, edges.into_iter().map(|(_, u, v)| (u, v)))?;
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
    DatasetBundle::new(graph, features, labels, num_classes)
}
