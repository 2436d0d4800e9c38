//! Full-graph gradient descent, mini-batch SGD, and step-size calculators.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::adj::{normalized_rows_full, AdjRows};
use crate::error::{input_err, Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::model::{
    ce_scores, forward_aggregated, grad_ce_aggregated, grad_mse_aggregated, loss_ce, loss_mse,
    pm1_labels, LossKind, ModelParams,
};
use crate::sampling::{sample_batch, sample_neighbors_with, SamplerConfig};
use crate::simulator::{per_iteration, CostMode, HardwareProfile};

/// Losses above this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Default constant in the CE step size.
pub const DEFAULT_C4: f64 = 1.0;
/// Default constant in the MSE step-size interval; must stay below 1/6.
pub const DEFAULT_C6: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainMode {
    Full,
    Mini(SamplerConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Fixed(f64),
    /// Closed-form step size: interval midpoint for MSE, the point value for CE.
    Theoretical { c4: f64, c6: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub mode: TrainMode,
    pub eta: LearningRate,
    pub max_iters: usize,
    /// Stop once the full-graph training loss is at or below this value.
    pub target_loss: Option<f64>,
    /// Period, in iterations, of full-loss (mini mode) and accuracy evaluation.
    pub eval_every: usize,
}

impl TrainConfig {
    pub fn new(loss: LossKind, mode: TrainMode, eta: f64, max_iters: usize) -> Self {
        Self {
            loss,
            mode,
            eta: LearningRate::Fixed(eta),
            max_iters,
            target_loss: None,
            eval_every: 1,
        }
    }
}

/// One iteration of a training run. Losses are measured at the iterate the
/// step starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    /// 1-based iteration index.
    pub iter: usize,
    pub batch_loss: Option<f64>,
    pub full_loss: Option<f64>,
    pub test_acc: Option<f64>,
    pub elapsed_s: f64,
    pub nodes_processed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<IterRecord>,
    pub final_params: ModelParams,
    pub eta: f64,
    pub reached_target: bool,
}

impl Trajectory {
    pub fn full_losses(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.records.iter().filter_map(|r| r.full_loss.map(|l| (r.iter, l)))
    }

    pub fn accuracies(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.records.iter().filter_map(|r| r.test_acc.map(|a| (r.iter, a)))
    }
}

/// Work done by one iteration, for clocks that model time instead of measuring it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepWork {
    pub targets: usize,
    /// Adjacency nonzeros aggregated, self-loops included.
    pub aggregated: usize,
    pub mode: CostMode,
}

/// Source of the cumulative `elapsed_s` column.
pub trait Clock {
    /// Called once per iteration; returns seconds since the run started.
    fn advance(&mut self, work: &StepWork) -> f64;
}

/// Deterministic clock driven by the two-device cost model.
#[derive(Debug, Clone, Copy)]
pub struct ModeledClock {
    profile: HardwareProfile,
    elapsed: f64,
}

impl ModeledClock {
    pub fn new(profile: HardwareProfile) -> Self {
        Self {
            profile,
            elapsed: 0.0,
        }
    }
}

impl Clock for ModeledClock {
    fn advance(&mut self, work: &StepWork) -> f64 {
        let b = work.targets as f64;
        let beta = (work.aggregated as f64 - b) / b;
        let (t_cal, t_comm) = per_iteration(b, beta, &self.profile, work.mode);
        self.elapsed += t_cal + t_comm;
        self.elapsed
    }
}

/// Labels in the encoding the loss expects.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Mse { labels: Vec<usize>, num_classes: usize },
    Ce { labels: Vec<i8> },
}

impl Targets {
    pub fn for_graph(graph: &Graph, loss: LossKind) -> Result<Self> {
        match loss {
            LossKind::Mse => Ok(Targets::Mse {
                labels: graph.labels().to_vec(),
                num_classes: graph.num_classes(),
            }),
            LossKind::Ce => {
                if graph.num_classes() != 2 {
                    return Err(input_err!(
                        "CE training is binary; graph has {} classes",
                        graph.num_classes()
                    ));
                }
                Ok(Targets::Ce {
                    labels: pm1_labels(graph.labels())?,
                })
            }
        }
    }

    fn subset(&self, nodes: &[usize]) -> Targets {
        match self {
            Targets::Mse { labels, num_classes } => Targets::Mse {
                labels: nodes.iter().map(|&i| labels[i]).collect(),
                num_classes: *num_classes,
            },
            Targets::Ce { labels } => Targets::Ce {
                labels: nodes.iter().map(|&i| labels[i]).collect(),
            },
        }
    }

    /// Mean loss over the rows of `agg`.
    pub fn loss(&self, agg: &Matrix, params: &ModelParams) -> Result<f64> {
        let z = forward_aggregated(agg, params)?;
        match self {
            Targets::Mse { labels, num_classes } => loss_mse(&z, labels, *num_classes),
            Targets::Ce { labels } => {
                let v = params
                    .output
                    .as_deref()
                    .ok_or_else(|| input_err!("CE loss requires the ±1 output vector"))?;
                loss_ce(&z, v, labels)
            }
        }
    }

    pub fn grad(&self, agg: &Matrix, params: &ModelParams) -> Result<Matrix> {
        match self {
            Targets::Mse { labels, num_classes } => {
                grad_mse_aggregated(agg, params, labels, *num_classes)
            }
            Targets::Ce { labels } => grad_ce_aggregated(agg, params, labels),
        }
    }
}

/// Resolves the configured learning rate to a number.
pub fn resolve_eta(graph: &Graph, params: &ModelParams, config: &TrainConfig) -> Result<f64> {
    let (c4, c6) = match config.eta {
        LearningRate::Fixed(eta) => {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(input_err!("learning rate must be finite and non-negative, got {}", eta));
            }
            return Ok(eta);
        }
        LearningRate::Theoretical { c4, c6 } => (c4, c6),
    };
    let n_train = graph.num_train() as f64;
    let (b, beta) = match config.mode {
        TrainMode::Full => (n_train, graph.d_max().max(1) as f64),
        TrainMode::Mini(s) => (s.batch_size as f64, s.fanout as f64),
    };
    match config.loss {
        LossKind::Mse => Ok(theoretical_lr_mse_mini(n_train, b, beta, c6)?.midpoint()),
        LossKind::Ce => theoretical_lr_ce_mini(n_train, b, beta, params.hidden() as f64, c4),
    }
}

/// Runs GD (full mode) or SGD (mini mode) from `params`.
pub fn train(
    graph: &Graph,
    params: &ModelParams,
    config: &TrainConfig,
    clock: &mut dyn Clock,
) -> Result<Trajectory> {
    if config.max_iters == 0 {
        return Err(input_err!("max_iters must be at least 1"));
    }
    if config.eval_every == 0 {
        return Err(input_err!("eval_every must be at least 1"));
    }
    if let TrainMode::Mini(s) = &config.mode {
        s.validate(graph)?;
    }
    let eta = resolve_eta(graph, params, config)?;
    let targets = Targets::for_graph(graph, config.loss)?;
    let features = graph.features();

    let train_nodes = graph.train_nodes();
    let full_rows = normalized_rows_full(graph, &train_nodes)?;
    let full_agg = full_rows.aggregate(features)?;
    let full_targets = targets.subset(&train_nodes);
    let full_nnz: usize = full_rows.rows().iter().map(|r| r.nnz()).sum();

    let test_nodes = graph.test_nodes();
    let test_eval = if test_nodes.is_empty() {
        None
    } else {
        let rows = normalized_rows_full(graph, &test_nodes)?;
        Some((rows.aggregate(features)?, targets.subset(&test_nodes)))
    };

    let mut params = params.clone();
    let mut records = Vec::with_capacity(config.max_iters.min(1 << 16));
    let mut nodes_processed = 0u64;
    let mut reached_target = false;

    for iter in 1..=config.max_iters {
        let step = (iter - 1) as u64;
        let evaluate = (iter - 1) % config.eval_every == 0;
        let (batch_loss, full_loss, grad, work) = match &config.mode {
            TrainMode::Full => {
                let loss = full_targets.loss(&full_agg, &params)?;
                let grad = full_targets.grad(&full_agg, &params)?;
                let work = StepWork {
                    targets: train_nodes.len(),
                    aggregated: full_nnz,
                    mode: CostMode::Full,
                };
                (None, Some(loss), grad, work)
            }
            TrainMode::Mini(s) => {
                let mut batch = sample_batch(graph, s, step)?;
                batch.sort_unstable();
                let mb = sample_neighbors_with(graph, &batch, s.fanout, s.seed, step, s.normalization)?;
                let agg = mb.adj.aggregate(features)?;
                let batch_targets = targets.subset(&batch);
                let loss = batch_targets.loss(&agg, &params)?;
                let grad = batch_targets.grad(&agg, &params)?;
                let full_loss = if evaluate {
                    Some(full_targets.loss(&full_agg, &params)?)
                } else {
                    None
                };
                let work = StepWork {
                    targets: batch.len(),
                    aggregated: nnz(&mb.adj),
                    mode: CostMode::Mini,
                };
                (Some(loss), full_loss, grad, work)
            }
        };
        for loss in batch_loss.iter().chain(full_loss.iter()) {
            if !loss.is_finite() || *loss > DIVERGENCE_LIMIT {
                return Err(Error::Diverged {
                    iteration: iter,
                    loss: *loss,
                });
            }
        }
        let test_acc = match (&test_eval, evaluate) {
            (Some((agg, t)), true) => Some(accuracy_aggregated(agg, t, &params)?),
            _ => None,
        };
        nodes_processed += work.targets as u64;
        let elapsed_s = clock.advance(&work);
        records.push(IterRecord {
            iter,
            batch_loss,
            full_loss,
            test_acc,
            elapsed_s,
            nodes_processed,
        });
        if let (Some(eps), Some(l)) = (config.target_loss, full_loss) {
            if l <= eps {
                reached_target = true;
                break;
            }
        }
        params.weights.sub_scaled(eta, &grad)?;
    }
    Ok(Trajectory {
        records,
        final_params: params,
        eta,
        reached_target,
    })
}

fn nnz(rows: &AdjRows) -> usize {
    rows.rows().iter().map(|r| r.nnz()).sum()
}

/// Which node set to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

fn accuracy_aggregated(agg: &Matrix, targets: &Targets, params: &ModelParams) -> Result<f64> {
    let z = forward_aggregated(agg, params)?;
    let m = z.rows();
    if m == 0 {
        return Err(input_err!("accuracy over an empty node set"));
    }
    let correct = match targets {
        Targets::Mse { labels, .. } => (0..m)
            .filter(|&i| argmax_lowest(z.row(i)) == labels[i])
            .count(),
        Targets::Ce { labels } => {
            let v = params
                .output
                .as_deref()
                .ok_or_else(|| input_err!("CE accuracy requires the ±1 output vector"))?;
            let scores = ce_scores(&z, v)?;
            scores
                .iter()
                .zip(labels)
                .filter(|(&s, &y)| (if s > 0.0 { 1 } else { -1 }) == y)
                .count()
        }
    };
    Ok(correct as f64 / m as f64)
}

/// Index of the largest entry; ties go to the lowest index.
fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Classification accuracy with full-graph rows on the chosen split.
pub fn accuracy(graph: &Graph, params: &ModelParams, loss: LossKind, on: Split) -> Result<f64> {
    let nodes = match on {
        Split::Train => graph.train_nodes(),
        Split::Test => graph.test_nodes(),
    };
    let rows = normalized_rows_full(graph, &nodes)?;
    let agg = rows.aggregate(graph.features())?;
    let targets = Targets::for_graph(graph, loss)?.subset(&nodes);
    accuracy_aggregated(&agg, &targets, params)
}

/// Full-graph training loss at `params`.
pub fn full_train_loss(graph: &Graph, params: &ModelParams, loss: LossKind) -> Result<f64> {
    let nodes = graph.train_nodes();
    let agg = normalized_rows_full(graph, &nodes)?.aggregate(graph.features())?;
    Targets::for_graph(graph, loss)?.subset(&nodes).loss(&agg, params)
}

/// Closed interval of admissible step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrInterval {
    pub lo: f64,
    pub hi: f64,
    /// Whether `β ≤ (1/(6·C6))^{1/4} · b^{3/4}` holds.
    pub fanout_ok: bool,
}

impl LrInterval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, eta: f64) -> bool {
        self.lo <= eta && eta <= self.hi
    }

    /// Common part of two intervals.
    pub fn intersect(&self, other: &LrInterval) -> Result<LrInterval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            return Err(Error::InfeasibleRange { lo, hi });
        }
        Ok(LrInterval {
            lo,
            hi,
            fanout_ok: self.fanout_ok && other.fanout_ok,
        })
    }
}

/// MSE mini-batch step sizes `[C6·β³/(π·n·b²), b/(6π·β·n)]`.
///
/// With `b = n_train` and `β = d_max` this is the full-graph interval
/// `[C6·d³/(π·n³), 1/(6π·d)]`.
pub fn theoretical_lr_mse_mini(n_train: f64, b: f64, beta: f64, c6: f64) -> Result<LrInterval> {
    for (name, v) in [("n_train", n_train), ("b", b), ("beta", beta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(input_err!("{} must be positive, got {}", name, v));
        }
    }
    if !(c6 >= 0.0) {
        return Err(input_err!("C6 must be non-negative, got {}", c6));
    }
    let lo = c6 * beta * beta * beta / (PI * n_train * b * b);
    let hi = b / (6.0 * PI * beta * n_train);
    if lo > hi {
        return Err(Error::InfeasibleRange { lo, hi });
    }
    let fanout_ok = c6 == 0.0 || beta <= libm::pow(1.0 / (6.0 * c6), 0.25) * libm::pow(b, 0.75);
    Ok(LrInterval { lo, hi, fanout_ok })
}

/// MSE full-graph step sizes `[C6·d³/(π·n³), 1/(6π·d)]`.
pub fn theoretical_lr_mse_full(n_train: f64, d_max: f64, c6: f64) -> Result<LrInterval> {
    theoretical_lr_mse_mini(n_train, n_train, d_max, c6)
}

/// CE mini-batch step size `b / (4·C4·β·h·n)`.
pub fn theoretical_lr_ce_mini(n_train: f64, b: f64, beta: f64, h: f64, c4: f64) -> Result<f64> {
    for (name, v) in [("n_train", n_train), ("b", b), ("beta", beta), ("h", h), ("C4", c4)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(input_err!("{} must be positive, got {}", name, v));
        }
    }
    Ok(b / (4.0 * c4 * beta * h * n_train))
}

/// Lower bound `⌈c·ln(n)·(n² + 1/ε)/β⌉` on the CE hidden width.
pub fn min_hidden_dim_ce(n_train: f64, beta: f64, epsilon: f64, c: f64) -> Result<u64> {
    if !(epsilon > 0.0) || !(beta > 0.0) || !(n_train >= 1.0) {
        return Err(input_err!("need ε > 0, β > 0 and n ≥ 1"));
    }
    Ok(libm::ceil(c * libm::log(n_train) * (n_train * n_train + 1.0 / epsilon) / beta) as u64)
}
