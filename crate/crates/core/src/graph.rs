//! Undirected attributed graphs stored in compressed sparse row form.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{dim_err, input_err, Result};
use crate::linalg::Matrix;
use crate::rng::{self, Domain};

/// Immutable undirected graph with node features, labels and a train/test split.
///
/// Both directions of every edge are stored. Self-loops are never stored;
/// normalization adds them.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_classes: usize,
    features: Matrix,
    labels: Vec<usize>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    train_mask: Vec<bool>,
    test_mask: Vec<bool>,
}

/// Per-node degree counts. For undirected graphs both vectors coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeInfo {
    pub in_deg: Vec<usize>,
    pub out_deg: Vec<usize>,
}

impl DegreeInfo {
    pub fn d_max(&self) -> usize {
        self.in_deg.iter().copied().max().unwrap_or(0)
    }
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Every node starts in the training set; use [`Graph::with_masks`] or
    /// [`split_train_test`] to carve out a test set.
    pub fn new(
        num_classes: usize,
        features: Matrix,
        labels: Vec<usize>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let n = features.rows();
        if labels.len() != n {
            return Err(dim_err!("{} labels for {} nodes", labels.len(), n));
        }
        if num_classes == 0 {
            return Err(input_err!("number of classes must be at least 1"));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(input_err!(
                "label {} of node {} outside [0, {})",
                y,
                i,
                num_classes
            ));
        }
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(input_err!("edge ({}, {}) references a node >= {}", u, v, n));
            }
            if u == v {
                return Err(input_err!("self-loop on node {} is not allowed", u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(input_err!("duplicate edge ({}, {})", u.min(w[0]), u.max(w[0])));
            }
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Ok(Self {
            num_classes,
            features,
            labels,
            offsets,
            neighbors,
            train_mask: vec![true; n],
            test_mask: vec![false; n],
        })
    }

    /// Replaces the split. Masks must be disjoint and the training set nonempty.
    pub fn with_masks(mut self, train_mask: Vec<bool>, test_mask: Vec<bool>) -> Result<Self> {
        let n = self.num_nodes();
        if train_mask.len() != n || test_mask.len() != n {
            return Err(dim_err!("mask lengths must equal node count {}", n));
        }
        if let Some(i) = (0..n).find(|&i| train_mask[i] && test_mask[i]) {
            return Err(input_err!("node {} is in both the train and test sets", i));
        }
        if !train_mask.iter().any(|&t| t) {
            return Err(input_err!("training set is empty"));
        }
        self.train_mask = train_mask;
        self.test_mask = test_mask;
        Ok(self)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Sorted neighbor list of `node`.
    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn degrees(&self) -> DegreeInfo {
        let deg: Vec<usize> = (0..self.num_nodes()).map(|i| self.degree(i)).collect();
        DegreeInfo {
            in_deg: deg.clone(),
            out_deg: deg,
        }
    }

    /// Maximum degree over the whole graph, test nodes included.
    pub fn d_max(&self) -> usize {
        (0..self.num_nodes()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Undirected edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn train_mask(&self) -> &[bool] {
        &self.train_mask
    }

    pub fn test_mask(&self) -> &[bool] {
        &self.test_mask
    }

    /// Training node ids in ascending order.
    pub fn train_nodes(&self) -> Vec<usize> {
        mask_ids(&self.train_mask)
    }

    /// Test node ids in ascending order.
    pub fn test_nodes(&self) -> Vec<usize> {
        mask_ids(&self.test_mask)
    }

    pub fn num_train(&self) -> usize {
        self.train_mask.iter().filter(|&&t| t).count()
    }

    pub fn num_test(&self) -> usize {
        self.test_mask.iter().filter(|&&t| t).count()
    }
}

fn mask_ids(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect()
}

/// Randomly assigns `round(train_fraction * n)` nodes to training and the rest to test.
pub fn split_train_test(graph: &Graph, train_fraction: f64, seed: u64) -> Result<Graph> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(input_err!(
            "train fraction {} must lie strictly between 0 and 1",
            train_fraction
        ));
    }
    let n = graph.num_nodes();
    let n_train = libm::round(train_fraction * n as f64) as usize;
    if n_train == 0 || n_train >= n {
        return Err(input_err!(
            "train fraction {} on {} nodes leaves an empty split",
            train_fraction,
            n
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, Domain::Split, 0, 0));
    let mut train = vec![false; n];
    for &i in &order[..n_train] {
        train[i] = true;
    }
    let test = train.iter().map(|t| !t).collect();
    graph.clone().with_masks(train, test)
}
