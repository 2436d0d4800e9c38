use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gnnlab::commands::{
    cmd_distance, cmd_generate, cmd_report, cmd_simulate, cmd_sweep, cmd_train, DistanceArgs,
};
use gnnlab::config::{Config, DatasetConfig, EtaName, EtaSetting, GeneratorKind, SEED_ENV};
use gnnlab::error::{Error, Result};
use gnnlab::graph_io::load_graph;
use gnnlab::sweep::write_sweep;
use gnnlab_core::simulator::CostMode;

#[derive(Parser)]
#[command(name = "gnnlab", version, about = "Full-graph vs mini-batch GNN training lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Sbm,
    Er,
    Regular,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Full,
    Mini,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph in the text format.
    Generate {
        #[arg(long, value_enum)]
        generator: Generator,
        /// Block sizes for the SBM, e.g. 100,100.
        #[arg(long, value_delimiter = ',')]
        blocks: Vec<usize>,
        #[arg(long)]
        intra_p: Option<f64>,
        #[arg(long)]
        inter_p: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Train one configuration and write its trajectory CSV.
    Train {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a grid sweep, or replay a manifest.
    Sweep {
        /// Configuration or manifest file.
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        jobs: usize,
    },
    /// Structural distance and generalization bound per (beta, b, seed).
    Distance {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        /// A number or `theoretical`.
        #[arg(long, default_value = "theoretical", value_parser = parse_eta)]
        eta: EtaSetting,
        #[arg(long, default_value_t = 1.0)]
        c_delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c_u: f64,
        #[arg(long, default_value_t = 0.05)]
        c_g: f64,
        /// Sampled-row draws averaged per node.
        #[arg(long, default_value_t = 1)]
        draws: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Closed-form distributed cost of one configuration.
    Simulate {
        #[arg(long)]
        b: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        iters: f64,
        #[arg(long)]
        compute: f64,
        #[arg(long)]
        bandwidth: f64,
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Summary table and charts from a metrics CSV.
    Report {
        #[arg(short, long)]
        metrics: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn parse_eta(s: &str) -> std::result::Result<EtaSetting, String> {
    match s {
        "theoretical" => Ok(EtaSetting::Named(EtaName::Theoretical)),
        _ => s
            .parse()
            .map(EtaSetting::Value)
            .map_err(|_| format!("expected a number or `theoretical`, got {:?}", s)),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn write_file(p: &Path, text: &str) -> Result<()> {
    emit(Some(p), text)
}

fn load_config(path: &Path) -> Result<(Config, PathBuf)> {
    let mut c = Config::load(path)?;
    c.apply_env()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((c, base))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{}={:?} is not a u64", SEED_ENV, v))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            generator,
            blocks,
            intra_p,
            inter_p,
            nodes,
            p,
            degree,
            features,
            seed,
            train_fraction,
            out,
        } => {
            let spec = DatasetConfig {
                generator: Some(match generator {
                    Generator::Sbm => GeneratorKind::Sbm,
                    Generator::Er => GeneratorKind::Er,
                    Generator::Regular => GeneratorKind::Regular,
                }),
                blocks: (!blocks.is_empty()).then_some(blocks),
                intra_p,
                inter_p,
                nodes,
                p,
                degree,
                features: Some(features),
                seed: env_seed()?.unwrap_or(seed),
                train_fraction,
                ..DatasetConfig::default()
            };
            emit(out.as_deref(), &cmd_generate(&spec)?)
        }
        Command::Train { config, out } => {
            let (c, base) = load_config(&config)?;
            emit(out.as_deref(), &cmd_train(&c, &base)?)
        }
        Command::Sweep { config, out, jobs } => {
            let (c, base) = load_config(&config)?;
            let result = cmd_sweep(&c, &base, jobs)?;
            for w in &result.warnings {
                eprintln!("warning: {}", w);
            }
            write_sweep(&result, &out)
        }
        Command::Distance {
            graph,
            beta,
            b,
            seeds,
            hidden,
            kappa,
            iters,
            eta,
            c_delta,
            c_u,
            c_g,
            draws,
            out,
        } => {
            let g = load_graph(&graph)?;
            let seeds = match env_seed()? {
                Some(s) => (0..seeds.len() as u64).map(|k| s.wrapping_add(k)).collect(),
                None => seeds,
            };
            let args = DistanceArgs {
                fanouts: beta,
                batch_sizes: b,
                seeds,
                hidden,
                kappa,
                iters,
                eta,
                c_delta,
                c_u,
                c_g,
                draws,
            };
            emit(out.as_deref(), &cmd_distance(&g, &args)?)
        }
        Command::Simulate {
            b,
            beta,
            iters,
            compute,
            bandwidth,
            mode,
        } => {
            let mode = match mode {
                Mode::Full => CostMode::Full,
                Mode::Mini => CostMode::Mini,
            };
            emit(None, &cmd_simulate(b, beta, iters, compute, bandwidth, mode)?)
        }
        Command::Report { metrics, out } => {
            let text = std::fs::read_to_string(&metrics).map_err(|e| Error::Io {
                path: metrics.clone(),
                source: e,
            })?;
            let r = cmd_report(&text, &metrics)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            write_file(&out.join("summary.csv"), &r.summary_csv)?;
            write_file(&out.join("itr2loss_vs_b.svg"), &r.svg_by_b)?;
            write_file(&out.join("itr2loss_vs_beta.svg"), &r.svg_by_beta)?;
            print!("{}", r.table);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}
