//! Rows of the self-loop normalized adjacency `(D_in + I)^-1/2 (A + I) (D_out + I)^-1/2`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, input_err, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;

/// Entry of the normalized adjacency for an edge (or self-loop) with the
/// given degrees. Degrees exclude the self-loop.
#[inline]
pub fn norm_entry(d_in: usize, d_out: usize) -> f64 {
    1.0 / libm::sqrt(((d_in + 1) * (d_out + 1)) as f64)
}

/// Sparse row with strictly increasing column indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseRow {
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }

    pub fn get(&self, col: usize) -> f64 {
        match self.cols.binary_search(&col) {
            Ok(k) => self.vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cols.iter().copied().zip(self.vals.iter().copied())
    }

    pub fn to_dense(&self, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        for (c, v) in self.iter() {
            out[c] = v;
        }
        out
    }

    /// `‖self - other‖²` over the union of supports.
    pub fn dist_sq(&self, other: &SparseRow) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.nnz() || j < other.nnz() {
            let ci = self.cols.get(i).copied().unwrap_or(usize::MAX);
            let cj = other.cols.get(j).copied().unwrap_or(usize::MAX);
            let d = if ci == cj {
                let d = self.vals[i] - other.vals[j];
                i += 1;
                j += 1;
                d
            } else if ci < cj {
                i += 1;
                self.vals[i - 1]
            } else {
                j += 1;
                other.vals[j - 1]
            };
            acc += d * d;
        }
        acc
    }
}

/// Where a set of rows came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Full,
    Mini {
        batch_size: usize,
        fanout: usize,
        seed: u64,
        iteration: u64,
    },
}

/// A set of normalized adjacency rows of width `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjRows {
    width: usize,
    row_ids: Vec<usize>,
    rows: Vec<SparseRow>,
    provenance: Provenance,
}

impl AdjRows {
    pub fn new(
        width: usize,
        row_ids: Vec<usize>,
        rows: Vec<SparseRow>,
        provenance: Provenance,
    ) -> Result<Self> {
        if row_ids.len() != rows.len() {
            return Err(dim_err!("{} row ids for {} rows", row_ids.len(), rows.len()));
        }
        if let Some(c) = rows.iter().flat_map(|r| r.cols.iter()).find(|&&c| c >= width) {
            return Err(dim_err!("column {} outside row width {}", c, width));
        }
        Ok(Self {
            width,
            row_ids,
            rows,
            provenance,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row(&self, k: usize) -> &SparseRow {
        &self.rows[k]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Position of `node` among the row ids.
    pub fn position(&self, node: usize) -> Option<usize> {
        self.row_ids.iter().position(|&r| r == node)
    }

    /// Aggregated features `ã_i X` for every row, as an `m × r` matrix.
    pub fn aggregate(&self, features: &Matrix) -> Result<Matrix> {
        if features.rows() != self.width {
            return Err(dim_err!(
                "feature matrix has {} rows but adjacency width is {}",
                features.rows(),
                self.width
            ));
        }
        let r = features.cols();
        let mut out = Matrix::zeros(self.rows.len(), r);
        for (k, row) in self.rows.iter().enumerate() {
            let dst = out.row_mut(k);
            for (c, v) in row.iter() {
                for (d, x) in dst.iter_mut().zip(features.row(c)) {
                    *d += v * x;
                }
            }
        }
        Ok(out)
    }
}

/// Rows of the full-graph normalized adjacency for `nodes`, in the given order.
pub fn normalized_rows_full(graph: &Graph, nodes: &[usize]) -> Result<AdjRows> {
    let n = graph.num_nodes();
    let mut rows = Vec::with_capacity(nodes.len());
    for &i in nodes {
        if i >= n {
            return Err(input_err!("node {} out of range for {} nodes", i, n));
        }
        let di = graph.degree(i);
        let mut cols: Vec<usize> = Vec::with_capacity(di + 1);
        cols.extend_from_slice(graph.neighbors(i));
        let at = cols.partition_point(|&c| c < i);
        cols.insert(at, i);
        let vals = cols
            .iter()
            .map(|&j| norm_entry(di, graph.degree(j)))
            .collect();
        rows.push(SparseRow { cols, vals });
    }
    AdjRows::new(n, nodes.to_vec(), rows, Provenance::Full)
}
