//! One line per acceptance criterion; exits non-zero when any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::Command;

use common::*;
use gnnlab_core::LossKind;

type Criterion = (&'static str, fn() -> Check);

const SWEEP: &str = r#"
[dataset]
generator = "sbm"
blocks = [30, 30]
intra_p = 0.3
inter_p = 0.05
features = 4
seed = 5
train_fraction = 0.8

[model]
kappa = 0.1

[train]
max_iters = 300
eval_every = 2

[sweep]
batch_sizes = [4, 8, 16]
fanouts = [1, 3]
etas = ["theoretical-grid", 0.01]
seeds = [1, 2, 3]

[metrics]
target_loss = "tail"
target_accuracy = "tail"
"#;

fn sweep(config: &Path, out: &Path, jobs: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_gnnlab"))
        .arg("sweep")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg(jobs.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&status.stderr).into_owned())
    }
}

/// Every CSV under `dir`, keyed by relative path.
fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn manifest_replay() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("sweep.toml");
    std::fs::write(&cfg, SWEEP).map_err(|e| e.to_string())?;
    let first = tmp.path().join("first");
    sweep(&cfg, &first, 1)?;
    let manifest = first.join("manifest.toml");
    let (a, b) = (tmp.path().join("replay-j1"), tmp.path().join("replay-j4"));
    sweep(&manifest, &a, 1)?;
    sweep(&manifest, &b, 4)?;
    let (fa, fb, f0) = (csv_files(&a), csv_files(&b), csv_files(&first));
    if fa.len() < 2 {
        return Err(format!("replay wrote only {} CSV files", fa.len()));
    }
    if fa != fb {
        return Err("replays with --jobs 1 and --jobs 4 differ".into());
    }
    if fa != f0 {
        return Err("replay differs from the original sweep".into());
    }
    let runs = std::fs::read_to_string(a.join("metrics.csv")).unwrap().lines().count() - 1;
    Ok(format!(
        "{} runs, {} CSV files byte-identical across --jobs 1 and --jobs 4 replays",
        runs,
        fa.len()
    ))
}

fn both_reductions() -> Check {
    let mse = reduction_identity(500, LossKind::Mse)?;
    let ce = reduction_identity(500, LossKind::Ce)?;
    Ok(format!("{}; {}", mse, ce))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("simulator worked values", simulator_worked_values),
        ("gradient oracle", || gradient_oracle(50, 1)),
        ("reduction identity", both_reductions),
        ("SGD unbiasedness", || unbiasedness(10, 2)),
        ("OT oracle", || transport_oracle(200, 3)),
        ("delta monotone in b", || delta_monotone(10, 10)),
        ("convergence trend", convergence_trend_check),
        ("metric definitions", metric_fixtures),
        ("sampled row norms", || sampled_row_norms(10_000, 4)),
        ("manifest replay", manifest_replay),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(d) => println!("criterion {:>2} PASS {}: {}", k + 1, name, d),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {}: {}", k + 1, name, d);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
