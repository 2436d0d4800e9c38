//! One function per subcommand. Each returns the bytes it would write so the
//! binary and the tests share the same code path.

use std::path::Path;

use gnnlab_core::distance::{
    build_cost, generalization_bound, marginals, wasserstein, BoundParams, CostParams,
};
use gnnlab_core::simulator::{estimate, CostMode, HardwareProfile};
use gnnlab_core::trainer::full_train_loss;
use gnnlab_core::{Graph, LossKind};

use crate::config::{Config, DatasetConfig, EtaSetting, ModelConfig, TrainSection};
use crate::csvfmt::{self, distance_csv, float, trajectory_csv, DistanceRow, SIMULATE_HEADER};
use crate::error::{Error, Result};
use crate::report::{itr2loss_series, line_chart, summarize, summary_csv, summary_table};
use crate::run::train_single;
use crate::sweep::{run_sweep, SweepOutput};

/// Builds a dataset and renders it in the text graph format.
pub fn cmd_generate(spec: &DatasetConfig) -> Result<String> {
    let ds = spec.load(Path::new("."))?;
    Ok(crate::graph_io::to_text(&ds.graph))
}

/// Trains the `[train]` configuration and returns the trajectory CSV.
pub fn cmd_train(config: &Config, base: &Path) -> Result<String> {
    let ds = config.dataset.load(base)?;
    let t = train_single(&ds.graph, &config.model, &config.train)?;
    Ok(trajectory_csv(&t))
}

pub fn cmd_sweep(config: &Config, base: &Path, jobs: usize) -> Result<SweepOutput> {
    run_sweep(config, base, jobs)
}

#[derive(Debug, Clone)]
pub struct DistanceArgs {
    pub fanouts: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Defaults to the class count.
    pub hidden: Option<usize>,
    pub kappa: f64,
    pub iters: usize,
    pub eta: EtaSetting,
    pub c_delta: f64,
    pub c_u: f64,
    pub c_g: f64,
    pub draws: usize,
}

/// Δ, the summed sampled-row discrepancy and the PAC-Bayes bound per
/// `(β, b, seed)`. The bound uses an MSE model trained with that batch size
/// and fan-out for `iters` steps.
pub fn cmd_distance(graph: &Graph, args: &DistanceArgs) -> Result<String> {
    if args.fanouts.is_empty() || args.batch_sizes.is_empty() || args.seeds.is_empty() {
        return Err(Error::Usage("--beta, --b and --seeds need at least one value".into()));
    }
    let hidden = args.hidden.unwrap_or(graph.num_classes());
    let model = ModelConfig {
        hidden,
        kappa: args.kappa,
        ..ModelConfig::default()
    };
    let (rho_train, rho_test) = marginals(graph)?;
    let mut rows = Vec::new();
    for &beta in &args.fanouts {
        for &b in &args.batch_sizes {
            for &seed in &args.seeds {
                let cost = build_cost(
                    graph,
                    &CostParams {
                        c_delta: args.c_delta,
                        draws: args.draws,
                        ..CostParams::new(beta, b, hidden, seed)
                    },
                )?;
                let delta = wasserstein(&cost, &rho_train, &rho_test)?.cost;
                let train = TrainSection {
                    batch_size: Some(b),
                    fanout: Some(beta),
                    eta: args.eta,
                    max_iters: args.iters,
                    eval_every: args.iters.max(1),
                    seed,
                    ..TrainSection::default()
                };
                let t = train_single(graph, &model, &train)?;
                let w = &t.final_params;
                let bound = generalization_bound(&BoundParams {
                    train_loss: full_train_loss(graph, w, LossKind::Mse)?,
                    weight_norm_sq: w.weights.frobenius_sq(),
                    kappa: args.kappa,
                    hidden,
                    n_train: graph.num_train(),
                    delta,
                    c_u: args.c_u,
                    c_g: args.c_g,
                })?;
                rows.push(DistanceRow {
                    beta,
                    b,
                    seed,
                    delta,
                    sum_delta_full_mini: cost.delta_full_mini.iter().sum(),
                    bound,
                });
            }
        }
    }
    Ok(distance_csv(&rows))
}

/// Header and one row of the cost model.
pub fn cmd_simulate(
    b: f64,
    beta: f64,
    iters: f64,
    compute: f64,
    bandwidth: f64,
    mode: CostMode,
) -> Result<String> {
    let profile = HardwareProfile::new(compute, bandwidth)?;
    let e = estimate(b, beta, iters, &profile, mode)?;
    let name = match mode {
        CostMode::Full => "full",
        CostMode::Mini => "mini",
    };
    Ok(format!(
        "{}\n{},{},{},{},{},{},{},{},{}\n",
        SIMULATE_HEADER,
        name,
        float(b),
        float(beta),
        float(iters),
        float(compute),
        float(bandwidth),
        float(e.t_cal),
        float(e.t_comm),
        float(e.total)
    ))
}

#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub table: String,
    pub summary_csv: String,
    pub svg_by_b: String,
    pub svg_by_beta: String,
}

pub fn cmd_report(metrics_csv: &str, origin: &Path) -> Result<ReportOutput> {
    let rows = csvfmt::parse_metrics(metrics_csv, origin)?;
    let summary = summarize(&rows);
    Ok(ReportOutput {
        table: summary_table(&summary),
        summary_csv: summary_csv(&summary),
        svg_by_b: line_chart(
            "Iteration-to-loss vs batch size",
            "batch size b",
            "median iteration-to-loss",
            &itr2loss_series(&summary, true),
        ),
        svg_by_beta: line_chart(
            "Iteration-to-loss vs fan-out",
            "fan-out beta",
            "median iteration-to-loss",
            &itr2loss_series(&summary, false),
        ),
    })
}
