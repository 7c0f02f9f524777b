//! Graphs, datasets, synthetic generation and data splits.

mod io;
mod sbm;
mod split;

pub use io::{load_dataset, parse_edges, parse_features, parse_labels};
pub use sbm::{generate_sbm, SbmConfig};
pub use split::{random_split, SplitSpec};

use crate::error::{Result, SgclError};
use crate::numerics::{CsrMatrix, DenseMatrix};

/// Unweighted graph in compressed-row form. Undirected graphs store both
/// directions of every edge. Self-loops are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl Graph {
    /// Builds an undirected graph from an edge list: both directions are
    /// stored, duplicates and self-loops are dropped.
    pub fn from_undirected_edges(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut directed = Vec::new();
        for (line, (u, v)) in edges.into_iter().enumerate() {
            for x in [u, v] {
                if x >= num_nodes {
                    return Err(SgclError::Range {
                        index: x,
                        limit: num_nodes,
                        line: line + 1,
                    });
                }
            }
            if u != v {
                directed.push((u, v));
                directed.push((v, u));
            }
        }
        Ok(Self::from_sorted_directed(num_nodes, directed))
    }

    fn from_sorted_directed(num_nodes: usize, mut directed: Vec<(usize, usize)>) -> Self {
        directed.sort_unstable();
        directed.dedup();
        let mut row_offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in &directed {
            row_offsets[u + 1] += 1;
        }
        for i in 0..num_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = directed.into_iter().map(|(_, v)| v).collect();
        Self {
            num_nodes,
            row_offsets,
            col_indices,
        }
    }

    /// Builds directly from CSR arrays, checking every structural invariant.
    pub fn from_csr(num_nodes: usize, row_offsets: Vec<usize>, col_indices: Vec<usize>) -> Result<Self> {
        let g = Self {
            num_nodes,
            row_offsets,
            col_indices,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes;
        let bad = |m: &str| Err(SgclError::Consistency(format!("graph: {m}")));
        if self.row_offsets.len() != n + 1 || self.row_offsets[0] != 0 {
            return bad("row offsets have wrong length or start");
        }
        if self.row_offsets[n] != self.col_indices.len() {
            return bad("last row offset differs from edge count");
        }
        if self.row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("row offsets decrease");
        }
        for u in 0..n {
            let nbrs = self.neighbors(u);
            if nbrs.iter().any(|&v| v >= n) {
                return bad("column index out of range");
            }
            if nbrs.windows(2).any(|w| w[0] >= w[1]) {
                return bad("row is unsorted or has duplicate entries");
            }
            if nbrs.contains(&u) {
                return bad("self-loop stored");
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of stored (directed) entries.
    pub fn num_entries(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row_offsets[u + 1] - self.row_offsets[u]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|u| self.degree(u)).collect()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in CSR order.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| u < v)
                .map(move |&v| (u, v))
        })
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.num_nodes).all(|u| self.neighbors(u).iter().all(|&v| self.has_edge(v, u)))
    }

    pub fn to_dense_adjacency(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.num_nodes, self.num_nodes);
        for u in 0..self.num_nodes {
            for &v in self.neighbors(u) {
                a[(u, v)] = 1.0;
            }
        }
        a
    }
}

/// GCN propagation matrix `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃` the degree
/// matrix of `A + I`.
pub fn normalized_adjacency(graph: &Graph) -> CsrMatrix {
    let n = graph.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| 1.0 / ((graph.degree(u) + 1) as f64).sqrt())
        .collect();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(graph.num_entries() + n);
    let mut values = Vec::with_capacity(graph.num_entries() + n);
    row_offsets.push(0);
    for u in 0..n {
        let nbrs = graph.neighbors(u);
        let split = nbrs.partition_point(|&v| v < u);
        let cols = nbrs[..split]
            .iter()
            .copied()
            .chain(std::iter::once(u))
            .chain(nbrs[split..].iter().copied());
        for v in cols {
            col_indices.push(v);
            values.push(inv_sqrt[u] * inv_sqrt[v]);
        }
        row_offsets.push(col_indices.len());
    }
    CsrMatrix::new(n, n, row_offsets, col_indices, values).expect("valid by construction")
}

/// Graph, node features and labels of one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl DatasetBundle {
    pub fn new(graph: Graph, features: DenseMatrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let b = Self {
            graph,
            features,
            labels,
            num_classes,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_nodes();
        if self.features.rows() != n {
            return Err(SgclError::Consistency(format!(
                "{} feature rows for {n} nodes",
                self.features.rows()
            )));
        }
        if self.labels.len() != n {
            return Err(SgclError::Consistency(format!(
                "{} labels for {n} nodes",
                self.labels.len()
            )));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(SgclError::Consistency(format!(
                "label {l} not below class count {}",
                self.num_classes
            )));
        }
        self.features.ensure_finite("features")
    }
}
