//! Grid sweeps: expansion, parallel execution, targets and metrics.

use std::collections::BTreeMap;
use std::path::Path;

use gnnlab_core::metrics::{
    derive_target_accuracy, derive_target_loss, report, TargetKind, TargetSpec,
};
use gnnlab_core::trainer::LearningRate;
use gnnlab_core::{train, LossKind, TrainConfig, Trajectory};
use rayon::prelude::*;

use crate::config::{Config, TargetRule, TargetSetting};
use crate::csvfmt::{metrics_csv, trajectory_csv, MetricsRow};
use crate::error::{Error, Result};
use crate::manifest::{content_hash, ManifestSection, RunEntry, TOOL_VERSION};
use crate::run::{build_params, eta_for, grid_eta, make_clock, mini_config, sampler};

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub metrics_csv: String,
    /// The resolved configuration with its `[manifest]` section.
    pub manifest: Config,
    /// `(run id, trajectory CSV)`, sorted by id.
    pub trajectories: Vec<(usize, String)>,
    pub warnings: Vec<String>,
}

struct Planned {
    entry: RunEntry,
    /// Index of the step-size setting; runs sharing it and the seed share targets.
    eta_index: usize,
}

/// Expands and runs the `[sweep]` grid with at most `jobs` runs in flight.
///
/// Run ids follow the order step size, seed, batch size, fan-out, so they do
/// not depend on scheduling. Relative dataset paths resolve against `base`.
pub fn run_sweep(config: &Config, base: &Path, jobs: usize) -> Result<SweepOutput> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    for (name, empty) in [
        ("batch_sizes", sweep.batch_sizes.is_empty()),
        ("fanouts", sweep.fanouts.is_empty()),
        ("etas", sweep.etas.is_empty()),
        ("seeds", sweep.seeds.is_empty()),
    ] {
        if empty {
            return Err(Error::Config(format!("[sweep] `{}` must not be empty", name)));
        }
    }
    if jobs == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    let dataset = config.dataset.load(base)?;
    let graph = &dataset.graph;
    let graph_hash = content_hash(&dataset.content);
    if let Some(m) = &config.manifest {
        if m.graph_hash != graph_hash {
            return Err(Error::Config(format!(
                "graph content hash {} does not match the manifest's {}",
                graph_hash, m.graph_hash
            )));
        }
    }

    let loss: LossKind = config.model.loss.into();
    let train_cfg = &config.train;
    let points: Vec<(usize, usize)> = sweep
        .batch_sizes
        .iter()
        .flat_map(|&b| sweep.fanouts.iter().map(move |&beta| (b, beta)))
        .collect();
    let mut plan = Vec::new();
    let mut grid_cache: Option<f64> = None;
    for (eta_index, &setting) in sweep.etas.iter().enumerate() {
        for &seed in &sweep.seeds {
            let params = build_params(&config.model, graph, seed)?;
            for &(b, beta) in &points {
                let s = sampler(train_cfg, b, beta, seed);
                s.validate(graph)?;
                let mut base_cfg = mini_config(train_cfg, loss, s, 0.0);
                base_cfg.eta = LearningRate::Theoretical {
                    c4: train_cfg.c4,
                    c6: train_cfg.c6,
                };
                let eta = eta_for(setting, graph, &params, &base_cfg, || match grid_cache {
                    Some(v) => Ok(v),
                    None => {
                        let v = grid_eta(graph, loss, config.model.hidden, train_cfg, &points)?;
                        grid_cache = Some(v);
                        Ok(v)
                    }
                })?;
                plan.push(Planned {
                    entry: RunEntry {
                        id: plan.len(),
                        b,
                        beta,
                        eta,
                        seed,
                    },
                    eta_index,
                });
            }
        }
    }
    let entries: Vec<RunEntry> = plan.iter().map(|p| p.entry).collect();
    if let Some(m) = &config.manifest {
        if m.runs != entries {
            return Err(Error::Config(
                "manifest runs differ from the grid this configuration expands to".into(),
            ));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {} worker threads: {}", jobs, e)))?;
    let results: Vec<Result<Trajectory>> = pool.install(|| {
        plan.par_iter()
            .map(|p| {
                let e = p.entry;
                let params = build_params(&config.model, graph, e.seed)?;
                let cfg: TrainConfig =
                    mini_config(train_cfg, loss, sampler(train_cfg, e.b, e.beta, e.seed), e.eta);
                let mut clock = make_clock(train_cfg)?;
                Ok(train(graph, &params, &cfg, clock.as_mut())?)
            })
            .collect()
    });
    let trajectories: Vec<Trajectory> = results.into_iter().collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let mut groups: BTreeMap<(usize, u64), Vec<usize>> = BTreeMap::new();
    for (k, p) in plan.iter().enumerate() {
        groups.entry((p.eta_index, p.entry.seed)).or_default().push(k);
    }
    let mut rows = Vec::with_capacity(plan.len());
    for ((_, seed), members) in &groups {
        let reference = *members
            .iter()
            .min_by_key(|&&k| (plan[k].entry.b, plan[k].entry.beta, plan[k].entry.id))
            .expect("groups are nonempty");
        let ref_traj = &trajectories[reference];
        let ref_id = plan[reference].entry.id;
        let mut target = |setting: Option<TargetSetting>, kind: TargetKind| {
            let derived = match setting? {
                TargetSetting::Value(v) => Ok(match kind {
                    TargetKind::Loss => TargetSpec::loss(v),
                    TargetKind::Accuracy => TargetSpec::accuracy(v),
                }),
                TargetSetting::Rule(TargetRule::Derive) => match kind {
                    TargetKind::Loss => derive_target_loss(ref_traj),
                    TargetKind::Accuracy => derive_target_accuracy(ref_traj),
                },
                TargetSetting::Rule(TargetRule::Tail) => {
                    tail_target(ref_traj, kind, config.metrics.tail_window)
                }
            };
            match derived {
                Ok(t) => Some(t),
                Err(e) => {
                    warnings.push(format!(
                        "seed {} (reference run {}): {}; affected runs report not reached",
                        seed, ref_id, e
                    ));
                    None
                }
            }
        };
        let loss_t = target(config.metrics.target_loss, TargetKind::Loss);
        let acc_t = target(config.metrics.target_accuracy, TargetKind::Accuracy);
        for &k in members {
            let e = plan[k].entry;
            let m = report(&trajectories[k], loss_t.as_ref(), acc_t.as_ref())?;
            rows.push(MetricsRow {
                run_id: e.id,
                b: e.b,
                beta: e.beta,
                eta: e.eta,
                seed: e.seed,
                itr2loss: m.iteration_to_loss,
                itr2acc: m.iteration_to_accuracy,
                time2acc_s: m.time_to_accuracy,
                throughput: m.throughput,
            });
        }
    }
    rows.sort_by_key(|r| r.run_id);

    let mut manifest = config.clone();
    if let Some(p) = &manifest.dataset.path {
        let full = base.join(p);
        manifest.dataset.path = Some(full.canonicalize().map_err(|e| Error::io(&full, e))?);
    }
    manifest.manifest = Some(ManifestSection {
        graph_hash,
        tool_version: TOOL_VERSION.to_string(),
        runs: entries,
    });
    Ok(SweepOutput {
        metrics_csv: metrics_csv(&rows),
        manifest,
        trajectories: trajectories
            .iter()
            .enumerate()
            .map(|(k, t)| (plan[k].entry.id, trajectory_csv(t)))
            .collect(),
        warnings,
    })
}

/// Worst sampled value over the last `window` samples of the reference run.
fn tail_target(
    t: &Trajectory,
    kind: TargetKind,
    window: usize,
) -> gnnlab_core::Result<TargetSpec> {
    let xs: Vec<f64> = match kind {
        TargetKind::Loss => t.full_losses().map(|p| p.1).collect(),
        TargetKind::Accuracy => t.accuracies().map(|p| p.1).collect(),
    };
    if xs.is_empty() || window == 0 {
        return Err(gnnlab_core::Error::NotDerivable(
            "reference run has no samples for the tail rule".into(),
        ));
    }
    let tail = &xs[xs.len().saturating_sub(window)..];
    Ok(match kind {
        TargetKind::Loss => TargetSpec::loss(tail.iter().copied().fold(f64::MIN, f64::max)),
        TargetKind::Accuracy => TargetSpec::accuracy(tail.iter().copied().fold(f64::MAX, f64::min)),
    })
}

/// Writes `metrics.csv`, `manifest.toml` and `trajectories/run-<id>.csv` under `out`.
pub fn write_sweep(out: &SweepOutput, dir: &Path) -> Result<()> {
    let traj_dir = dir.join("trajectories");
    std::fs::create_dir_all(&traj_dir).map_err(|e| Error::io(&traj_dir, e))?;
    let write = |p: std::path::PathBuf, s: &str| std::fs::write(&p, s).map_err(|e| Error::io(&p, e));
    write(dir.join("metrics.csv"), &out.metrics_csv)?;
    write(dir.join("manifest.toml"), &out.manifest.to_toml()?)?;
    for (id, csv) in &out.trajectories {
        write(traj_dir.join(format!("run-{:04}.csv", id)), csv)?;
    }
    Ok(())
}
