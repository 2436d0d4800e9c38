//! Synthetic graph generators.
//!
//! Node features are i.i.d. standard normal in every generator.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{input_err, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::rng::{self, Domain};

fn gaussian_features(n: usize, r: usize, seed: u64) -> Matrix {
    let mut rng = rng::stream(seed, Domain::Features, 0, 0);
    Matrix::from_fn(n, r, |_, _| rng.sample(StandardNormal))
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(input_err!("{} = {} is not a probability", name, p))
    }
}

/// Stochastic block model. Labels are block ids.
pub fn generate_sbm(
    blocks: &[usize],
    intra_p: f64,
    inter_p: f64,
    r: usize,
    seed: u64,
) -> Result<Graph> {
    if blocks.is_empty() {
        return Err(input_err!("at least one block is required"));
    }
    if blocks.contains(&0) {
        return Err(input_err!("block sizes must be at least 1"));
    }
    check_prob("intra_p", intra_p)?;
    check_prob("inter_p", inter_p)?;
    let labels: Vec<usize> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| core::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();
    let mut rng = rng::stream(seed, Domain::Generate, 0, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] { intra_p } else { inter_p };
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(blocks.len(), gaussian_features(n, r, seed), labels, &edges)
}

/// Erdős–Rényi G(n, p) with uniformly random binary labels.
pub fn generate_er(n: usize, p: f64, r: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(input_err!("graph needs at least one node"));
    }
    check_prob("p", p)?;
    let mut rng = rng::stream(seed, Domain::Generate, 0, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(2, gaussian_features(n, r, seed), binary_labels(n, seed), &edges)
}

/// Uniform-ish random `d`-regular graph by repeated stub pairing.
pub fn generate_random_regular(n: usize, d: usize, r: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(input_err!("graph needs at least one node"));
    }
    if d >= n {
        return Err(input_err!("degree {} is infeasible on {} nodes", d, n));
    }
    if !(n * d).is_multiple_of(2) {
        return Err(input_err!("n * d = {} must be even", n * d));
    }
    let mut rng = rng::stream(seed, Domain::Generate, 0, 0);
    let edges = loop {
        if let Some(edges) = try_pairing(n, d, &mut rng) {
            break edges;
        }
    };
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    Graph::new(2, gaussian_features(n, r, seed), binary_labels(n, seed), &edges)
}

fn binary_labels(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, Domain::Generate, 1, 0);
    (0..n).map(|_| rng.gen_range(0..2)).collect()
}

fn try_pairing(n: usize, d: usize, rng: &mut rng::StreamRng) -> Option<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| core::iter::repeat_n(v, d)).collect();
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut leftover = vec![0usize; n];
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert((a, b)) {
                continue;
            }
            leftover[a] += 1;
            leftover[b] += 1;
        }
        stubs = leftover
            .iter()
            .enumerate()
            .flat_map(|(v, &k)| core::iter::repeat_n(v, k))
            .collect();
        if !stubs.is_empty() && !pairable(&stubs, &edges) {
            return None;
        }
    }
    Some(edges)
}

/// Whether any two distinct leftover stubs could still form a new edge.
fn pairable(stubs: &[usize], edges: &BTreeSet<(usize, usize)>) -> bool {
    let mut nodes: Vec<usize> = stubs.to_vec();
    nodes.dedup();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            if !edges.contains(&(a, b)) {
                return true;
            }
        }
    }
    false
}
