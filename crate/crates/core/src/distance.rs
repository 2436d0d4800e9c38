//! Structural train/test distance: per-pair costs, the Wasserstein distance
//! Δ(β, b) between the training and test node distributions, and the
//! PAC-Bayes test-risk bound built on it.

use alloc::vec;
use alloc::vec::Vec;

use crate::adj::{normalized_rows_full, AdjRows};
use crate::error::{input_err, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::sampling::{sample_neighbors, virtual_rows_all_train};
use crate::transport::{solve_transport, TransportPlan};

/// `‖ã_test,j − ã_train,i‖² + 2‖ã_test,j‖²` for every train row `i` and test row `j`.
pub fn delta_full(train_rows: &AdjRows, test_rows: &AdjRows) -> Result<Matrix> {
    if train_rows.width() != test_rows.width() {
        return Err(input_err!(
            "row widths differ: {} vs {}",
            train_rows.width(),
            test_rows.width()
        ));
    }
    let test_norms: Vec<f64> = test_rows.rows().iter().map(|r| r.norm_sq()).collect();
    Ok(Matrix::from_fn(train_rows.len(), test_rows.len(), |i, j| {
        test_rows.row(j).dist_sq(train_rows.row(i)) + 2.0 * test_norms[j]
    }))
}

/// `‖ã_full,i − ã_mini,i‖²` for each full row, matched to `mini_rows` by node id.
pub fn delta_full_mini(full_train_rows: &AdjRows, mini_rows: &AdjRows) -> Result<Vec<f64>> {
    if full_train_rows.width() != mini_rows.width() {
        return Err(input_err!(
            "row widths differ: {} vs {}",
            full_train_rows.width(),
            mini_rows.width()
        ));
    }
    full_train_rows
        .row_ids()
        .iter()
        .zip(full_train_rows.rows())
        .map(|(&node, row)| {
            let k = mini_rows
                .position(node)
                .ok_or_else(|| input_err!("no sampled row for node {}", node))?;
            Ok(row.dist_sq(mini_rows.row(k)))
        })
        .collect()
}

/// Mean of the per-node full/mini discrepancy over `draws` independent
/// neighbor samples (iterations `0..draws`).
pub fn delta_full_mini_mean(graph: &Graph, fanout: usize, seed: u64, draws: usize) -> Result<Vec<f64>> {
    if draws == 0 {
        return Err(input_err!("need at least one draw"));
    }
    let train = graph.train_nodes();
    let full = normalized_rows_full(graph, &train)?;
    let mut acc = vec![0.0; train.len()];
    for it in 0..draws {
        let mini = sample_neighbors(graph, &train, fanout, seed, it as u64)?.adj;
        for (a, d) in acc.iter_mut().zip(delta_full_mini(&full, &mini)?) {
            *a += d;
        }
    }
    let k = draws as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(acc)
}

/// Settings for the composite pairwise cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub fanout: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub c_delta: f64,
    pub seed: u64,
    /// Average the sampled-row discrepancy over this many draws; 1 is a single realization.
    pub draws: usize,
}

impl CostParams {
    pub fn new(fanout: usize, batch_size: usize, hidden: usize, seed: u64) -> Self {
        Self {
            fanout,
            batch_size,
            hidden,
            c_delta: 1.0,
            seed,
            draws: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    /// `scale · (delta_full[i][j] + delta_full_mini[i])`, `n_train × n_test`.
    pub entries: Matrix,
    pub delta_full: Matrix,
    pub delta_full_mini: Vec<f64>,
    /// `C_δ · h² / n_min`.
    pub scale: f64,
    pub n_min: usize,
    pub train_nodes: Vec<usize>,
    pub test_nodes: Vec<usize>,
}

/// Builds the structural cost between training and test nodes.
///
/// Every training node's sampled row comes from its own keyed draw, which
/// does not depend on which batch the node lands in; the batch size is
/// validated but leaves the rows unchanged.
pub fn build_cost(graph: &Graph, p: &CostParams) -> Result<CostMatrix> {
    let n_train = graph.num_train();
    let n_test = graph.num_test();
    if n_test == 0 {
        return Err(input_err!("distance needs a nonempty test split"));
    }
    if p.fanout == 0 {
        return Err(input_err!("fan-out must be at least 1"));
    }
    if p.batch_size == 0 || p.batch_size > n_train {
        return Err(input_err!(
            "batch size {} outside [1, {}]",
            p.batch_size,
            n_train
        ));
    }
    if !(p.c_delta >= 0.0 && p.c_delta.is_finite()) {
        return Err(input_err!("C_delta must be finite and non-negative"));
    }
    let train = graph.train_nodes();
    let test = graph.test_nodes();
    let full_train = normalized_rows_full(graph, &train)?;
    let full_test = normalized_rows_full(graph, &test)?;
    let df = delta_full(&full_train, &full_test)?;
    let dfm = if p.draws <= 1 {
        let mini = virtual_rows_all_train(graph, p.fanout, p.seed)?;
        delta_full_mini(&full_train, &mini)?
    } else {
        delta_full_mini_mean(graph, p.fanout, p.seed, p.draws)?
    };
    let n_min = n_train.min(n_test);
    let h = p.hidden as f64;
    let scale = p.c_delta * h * h / n_min as f64;
    let entries = Matrix::from_fn(n_train, n_test, |i, j| scale * (df[(i, j)] + dfm[i]));
    Ok(CostMatrix {
        entries,
        delta_full: df,
        delta_full_mini: dfm,
        scale,
        n_min,
        train_nodes: train,
        test_nodes: test,
    })
}

/// Per-node masses: uniform over each split.
///
/// A node's label frequency in its split divided by the number of
/// same-label nodes there is `1/n_split` for every label.
pub fn marginals(graph: &Graph) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n_train, n_test) = (graph.num_train(), graph.num_test());
    if n_train == 0 || n_test == 0 {
        return Err(input_err!("marginals need nonempty train and test splits"));
    }
    Ok((
        vec![1.0 / n_train as f64; n_train],
        vec![1.0 / n_test as f64; n_test],
    ))
}

/// Optimal coupling of the two marginals under `cost`; `plan.cost` is Δ.
pub fn wasserstein(cost: &CostMatrix, rho_train: &[f64], rho_test: &[f64]) -> Result<TransportPlan<f64>> {
    if rho_train.len() != cost.entries.rows() || rho_test.len() != cost.entries.cols() {
        return Err(input_err!(
            "marginal lengths {}×{} do not match cost {}×{}",
            rho_train.len(),
            rho_test.len(),
            cost.entries.rows(),
            cost.entries.cols()
        ));
    }
    solve_transport(cost.entries.as_slice(), rho_train, rho_test)
}

/// Δ(β, b) with uniform marginals.
pub fn structural_distance(graph: &Graph, p: &CostParams) -> Result<f64> {
    let cost = build_cost(graph, p)?;
    let (a, b) = marginals(graph)?;
    Ok(wasserstein(&cost, &a, &b)?.cost)
}

/// Inputs of the PAC-Bayes bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub train_loss: f64,
    /// `‖W‖²_F` of the trained weights.
    pub weight_norm_sq: f64,
    pub kappa: f64,
    pub hidden: usize,
    pub n_train: usize,
    pub delta: f64,
    pub c_u: f64,
    pub c_g: f64,
}

/// `L̂ + (1/C_u)(‖W‖²_F/(2hκ²) + ln(1/C_G) + C_u²/(4n) + C_u·Δ)`.
pub fn generalization_bound(p: &BoundParams) -> Result<f64> {
    if !(p.c_u > 0.0) {
        return Err(input_err!("C_u must be positive, got {}", p.c_u));
    }
    if !(p.c_g > 0.0 && p.c_g < 1.0) {
        return Err(input_err!("C_G must lie in (0, 1), got {}", p.c_g));
    }
    if !(p.kappa > 0.0) || p.hidden == 0 || p.n_train == 0 {
        return Err(input_err!("need κ > 0, h ≥ 1 and n_train ≥ 1"));
    }
    let h = p.hidden as f64;
    let kl = p.weight_norm_sq / (2.0 * h * p.kappa * p.kappa);
    let n = p.n_train as f64;
    Ok(p.train_loss
        + (kl + libm::log(1.0 / p.c_g) + p.c_u * p.c_u / (4.0 * n) + p.c_u * p.delta) / p.c_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adj::{Provenance, SparseRow};

    fn rows(width: usize, ids: &[usize], rows: Vec<SparseRow>) -> AdjRows {
        AdjRows::new(width, ids.to_vec(), rows, Provenance::Full).unwrap()
    }

    fn unit(i: usize) -> SparseRow {
        SparseRow {
            cols: vec![i],
            vals: vec![1.0],
        }
    }

    #[test]
    fn isolated_pair() {
        let tr = rows(2, &[0], vec![unit(0)]);
        let te = rows(2, &[1], vec![unit(1)]);
        assert_eq!(delta_full(&tr, &te).unwrap()[(0, 0)], 4.0);
    }

    #[test]
    fn identical_rows_leave_norm_term() {
        let r = SparseRow {
            cols: vec![0, 1],
            vals: vec![0.5, 0.5],
        };
        let tr = rows(3, &[0], vec![r.clone()]);
        let te = rows(3, &[2], vec![r]);
        assert_eq!(delta_full(&tr, &te).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn empty_test_row() {
        let r = SparseRow {
            cols: vec![0, 1],
            vals: vec![0.5, 0.5],
        };
        let tr = rows(3, &[0], vec![r]);
        let te = rows(3, &[2], vec![SparseRow { cols: vec![], vals: vec![] }]);
        assert_eq!(delta_full(&tr, &te).unwrap()[(0, 0)], 0.5);
    }

    #[test]
    fn width_mismatch() {
        let tr = rows(2, &[0], vec![unit(0)]);
        let te = rows(3, &[1], vec![unit(1)]);
        assert!(delta_full(&tr, &te).is_err());
    }

    #[test]
    fn missing_mini_row() {
        let full = rows(3, &[0, 1], vec![unit(0), unit(1)]);
        let mini = rows(3, &[0], vec![unit(0)]);
        assert!(delta_full_mini(&full, &mini).is_err());
    }

    #[test]
    fn bound_example() {
        let p = BoundParams {
            train_loss: 0.0,
            weight_norm_sq: 0.0,
            kappa: 1.0,
            hidden: 4,
            n_train: 100,
            delta: 0.0,
            c_u: 2.0,
            c_g: 0.05,
        };
        let v = generalization_bound(&p).unwrap();
        assert!((v - 0.5 * (libm::log(20.0) + 0.01)).abs() < 1e-15);
        assert!((v - 1.502866).abs() < 1e-6);
        let shifted = generalization_bound(&BoundParams { delta: 0.25, ..p }).unwrap();
        assert!((shifted - v - 0.25).abs() < 1e-15);
        assert!(generalization_bound(&BoundParams { c_g: 1.0, ..p }).is_err());
    }
}
