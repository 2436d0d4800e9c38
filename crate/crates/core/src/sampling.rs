//! Batch selection and uniform neighbor sampling.
//!
//! Each node's neighbor sample is a pure function of `(seed, iteration, node)`.
//! Taken over all nodes these samples define a directed *sampled graph* in
//! which node `u` receives messages from its sampled set `S_u`. Mini-batch
//! rows are rows of that graph's self-loop normalized adjacency:
//!
//! * `d_in(i) = |S_i|`
//! * `d_out(j) = |{u ∈ N(j) : j ∈ S_u}|`
//!
//! The batch only selects which rows are materialized. When the fan-out is
//! at least the maximum degree every node keeps all of its neighbors, so the
//! rows coincide bit-for-bit with full-graph rows for any batch.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::adj::{norm_entry, AdjRows, Provenance, SparseRow};
use crate::error::{input_err, Result};
use crate::graph::Graph;
use crate::rng::{self, Domain};

/// How mini-batch rows are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Degrees of the sampled graph.
    #[default]
    SampledGraph,
    /// Full-graph degrees; mini rows are then a column subset of full rows.
    FullDegrees,
    /// Out-degrees counted over the batch only: `d_out(j)` is the number of
    /// targets that sampled `j`. Rows then depend on the batch.
    BatchTargets,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub batch_size: usize,
    pub fanout: usize,
    pub seed: u64,
    /// Coupled batches: the batch of size `b` is a prefix of the batch of
    /// any larger size under the same seed and iteration.
    pub nested: bool,
    pub normalization: Normalization,
}

impl SamplerConfig {
    pub fn new(batch_size: usize, fanout: usize, seed: u64) -> Self {
        Self {
            batch_size,
            fanout,
            seed,
            nested: false,
            normalization: Normalization::SampledGraph,
        }
    }

    pub fn nested(mut self, nested: bool) -> Self {
        self.nested = nested;
        self
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let n_train = graph.num_train();
        if self.batch_size == 0 || self.batch_size > n_train {
            return Err(input_err!(
                "batch size {} must lie in [1, {}]",
                self.batch_size,
                n_train
            ));
        }
        if self.fanout == 0 {
            return Err(input_err!("fan-out must be at least 1"));
        }
        Ok(())
    }
}

/// A sampled mini-batch.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatch {
    pub target_nodes: Vec<usize>,
    pub adj: AdjRows,
    /// Sorted sampled neighbors of each target.
    pub sampled_neighbors: Vec<Vec<usize>>,
}

/// Draws `b` distinct training nodes for `iteration`.
pub fn sample_batch(graph: &Graph, config: &SamplerConfig, iteration: u64) -> Result<Vec<usize>> {
    config.validate(graph)?;
    let train = graph.train_nodes();
    let b = config.batch_size;
    if config.nested {
        let mut rng = rng::stream(config.seed, Domain::Batch, iteration, 0);
        let mut order = train;
        order.shuffle(&mut rng);
        order.truncate(b);
        Ok(order)
    } else {
        let mut rng = rng::stream(config.seed, Domain::Batch, iteration, b as u64);
        Ok(index::sample(&mut rng, train.len(), b)
            .into_iter()
            .map(|k| train[k])
            .collect())
    }
}

/// Uniform sample of `min(deg, fanout)` neighbors of `node`, sorted.
pub fn neighbor_sample(graph: &Graph, node: usize, fanout: usize, seed: u64, iteration: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(fanout.min(graph.degree(node)));
    neighbor_sample_into(graph, node, fanout, seed, iteration, &mut out);
    out
}

/// Appends the sorted sample of `node` to `out`.
fn neighbor_sample_into(
    graph: &Graph,
    node: usize,
    fanout: usize,
    seed: u64,
    iteration: u64,
    out: &mut Vec<usize>,
) {
    let nbrs = graph.neighbors(node);
    let d = nbrs.len();
    if d <= fanout {
        out.extend_from_slice(nbrs);
        return;
    }
    let mut rng = rng::stream(seed, Domain::Neighbors, iteration, node as u64);
    // Floyd's subset sampling over neighbor positions.
    let start = out.len();
    for j in d - fanout..d {
        let t = rng.gen_range(0..=j);
        let pos = if out[start..].contains(&t) { j } else { t };
        out.push(pos);
    }
    let picked = &mut out[start..];
    picked.sort_unstable();
    for p in picked.iter_mut() {
        *p = nbrs[*p];
    }
}

const UNSAMPLED: usize = usize::MAX;

/// Lazily evaluated sampled graph for one `(seed, iteration)`.
struct SampledGraph<'g> {
    graph: &'g Graph,
    fanout: usize,
    seed: u64,
    iteration: u64,
    /// Start of each node's sample in `arena`, or `UNSAMPLED`.
    start: Vec<usize>,
    arena: Vec<usize>,
    out_deg: Vec<usize>,
}

impl<'g> SampledGraph<'g> {
    fn new(graph: &'g Graph, fanout: usize, seed: u64, iteration: u64) -> Self {
        let n = graph.num_nodes();
        Self {
            graph,
            fanout,
            seed,
            iteration,
            start: vec![UNSAMPLED; n],
            arena: Vec::with_capacity((n * fanout).min(2 * graph.num_edges())),
            out_deg: vec![UNSAMPLED; n],
        }
    }

    fn sample(&mut self, u: usize) -> &[usize] {
        let len = self.graph.degree(u).min(self.fanout);
        if self.start[u] == UNSAMPLED {
            self.start[u] = self.arena.len();
            neighbor_sample_into(
                self.graph,
                u,
                self.fanout,
                self.seed,
                self.iteration,
                &mut self.arena,
            );
        }
        &self.arena[self.start[u]..self.start[u] + len]
    }

    fn receives_from(&mut self, u: usize, j: usize) -> bool {
        if self.graph.degree(u) <= self.fanout {
            return true;
        }
        self.sample(u).binary_search(&j).is_ok()
    }

    fn out_degree(&mut self, j: usize) -> usize {
        if self.out_deg[j] != UNSAMPLED {
            return self.out_deg[j];
        }
        let graph = self.graph;
        let d = graph
            .neighbors(j)
            .iter()
            .filter(|&&u| self.receives_from(u, j))
            .count();
        self.out_deg[j] = d;
        d
    }
}

/// Samples neighbors for `targets` and builds their mini-batch rows.
pub fn sample_neighbors(
    graph: &Graph,
    targets: &[usize],
    fanout: usize,
    seed: u64,
    iteration: u64,
) -> Result<MiniBatch> {
    sample_neighbors_with(
        graph,
        targets,
        fanout,
        seed,
        iteration,
        Normalization::SampledGraph,
    )
}

pub fn sample_neighbors_with(
    graph: &Graph,
    targets: &[usize],
    fanout: usize,
    seed: u64,
    iteration: u64,
    normalization: Normalization,
) -> Result<MiniBatch> {
    if targets.is_empty() {
        return Err(input_err!("mini-batch needs at least one target node"));
    }
    if fanout == 0 {
        return Err(input_err!("fan-out must be at least 1"));
    }
    let n = graph.num_nodes();
    if let Some(&t) = targets.iter().find(|&&t| t >= n) {
        return Err(input_err!("target node {} out of range for {} nodes", t, n));
    }
    let mut sampled = SampledGraph::new(graph, fanout, seed, iteration);
    let batch_out = if normalization == Normalization::BatchTargets {
        let mut counts = vec![0usize; n];
        for &i in targets {
            for &j in sampled.sample(i) {
                counts[j] += 1;
            }
        }
        counts
    } else {
        Vec::new()
    };
    let mut rows = Vec::with_capacity(targets.len());
    let mut sampled_neighbors = Vec::with_capacity(targets.len());
    for &i in targets {
        let picked = sampled.sample(i).to_vec();
        let mut cols = picked.clone();
        let at = cols.partition_point(|&c| c < i);
        cols.insert(at, i);
        let vals = match normalization {
            Normalization::SampledGraph => {
                let d_in = picked.len();
                cols.iter()
                    .map(|&j| norm_entry(d_in, sampled.out_degree(j)))
                    .collect()
            }
            Normalization::FullDegrees => {
                let d_in = graph.degree(i);
                cols.iter()
                    .map(|&j| norm_entry(d_in, graph.degree(j)))
                    .collect()
            }
            Normalization::BatchTargets => {
                let d_in = picked.len();
                cols.iter()
                    .map(|&j| norm_entry(d_in, batch_out[j]))
                    .collect()
            }
        };
        rows.push(SparseRow { cols, vals });
        sampled_neighbors.push(picked);
    }
    let adj = AdjRows::new(
        n,
        targets.to_vec(),
        rows,
        Provenance::Mini {
            batch_size: targets.len(),
            fanout,
            seed,
            iteration,
        },
    )?;
    Ok(MiniBatch {
        target_nodes: targets.to_vec(),
        adj,
        sampled_neighbors,
    })
}

/// One sampled row per training node (ascending), drawn at iteration 0.
pub fn virtual_rows_all_train(graph: &Graph, fanout: usize, seed: u64) -> Result<AdjRows> {
    let train = graph.train_nodes();
    Ok(sample_neighbors(graph, &train, fanout, seed, 0)?.adj)
}
