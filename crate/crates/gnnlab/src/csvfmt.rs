//! CSV rows: comma-separated, header first, LF line endings, empty cells for
//! missing values. Floats use the shortest representation that parses back
//! to the same value.

use std::fmt::Write as _;
use std::path::Path;

use gnnlab_core::trainer::Trajectory;

use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: &str = "iter,batch_loss,full_loss,test_acc,elapsed_s,nodes_processed";
pub const METRICS_HEADER: &str = "run_id,b,beta,eta,seed,itr2loss,itr2acc,time2acc_s,throughput";
pub const DISTANCE_HEADER: &str = "beta,b,seed,delta_wasserstein,sum_delta_full_mini,pac_bayes_bound";
pub const SIMULATE_HEADER: &str = "mode,b,beta,n,C,H,t_cal,t_comm,total_s";

pub fn float(x: f64) -> String {
    format!("{:?}", x)
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn opt_int<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (t.records.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in &t.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iter,
            opt_float(r.batch_loss),
            opt_float(r.full_loss),
            opt_float(r.test_acc),
            float(r.elapsed_s),
            r.nodes_processed
        );
    }
    out
}

/// One row of the per-run metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run_id: usize,
    pub b: usize,
    pub beta: usize,
    pub eta: f64,
    pub seed: u64,
    pub itr2loss: Option<usize>,
    pub itr2acc: Option<usize>,
    pub time2acc_s: Option<f64>,
    pub throughput: f64,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.run_id,
            r.b,
            r.beta,
            float(r.eta),
            r.seed,
            opt_int(r.itr2loss),
            opt_int(r.itr2acc),
            opt_float(r.time2acc_s),
            float(r.throughput)
        );
    }
    out
}

/// Parses a metrics table written by [`metrics_csv`].
pub fn parse_metrics(text: &str, origin: &Path) -> Result<Vec<MetricsRow>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == METRICS_HEADER => {}
        _ => return Err(err(1, format!("expected header `{}`", METRICS_HEADER))),
    }
    let mut rows = Vec::new();
    for (k, raw) in lines {
        let line_no = k + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 9 {
            return Err(err(line_no, format!("expected 9 cells, found {}", cells.len())));
        }
        fn req<T: std::str::FromStr>(s: &str) -> Option<T> {
            s.trim().parse().ok()
        }
        fn opt<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, ()> {
            if s.trim().is_empty() {
                Ok(None)
            } else {
                s.trim().parse().map(Some).map_err(|_| ())
            }
        }
        let bad = |col: &str| err(line_no, format!("bad `{}` value", col));
        rows.push(MetricsRow {
            run_id: req(cells[0]).ok_or_else(|| bad("run_id"))?,
            b: req(cells[1]).ok_or_else(|| bad("b"))?,
            beta: req(cells[2]).ok_or_else(|| bad("beta"))?,
            eta: req(cells[3]).ok_or_else(|| bad("eta"))?,
            seed: req(cells[4]).ok_or_else(|| bad("seed"))?,
            itr2loss: opt(cells[5]).map_err(|_| bad("itr2loss"))?,
            itr2acc: opt(cells[6]).map_err(|_| bad("itr2acc"))?,
            time2acc_s: opt(cells[7]).map_err(|_| bad("time2acc_s"))?,
            throughput: req(cells[8]).ok_or_else(|| bad("throughput"))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceRow {
    pub beta: usize,
    pub b: usize,
    pub seed: u64,
    pub delta: f64,
    pub sum_delta_full_mini: f64,
    pub bound: f64,
}

pub fn distance_csv(rows: &[DistanceRow]) -> String {
    let mut out = String::from(DISTANCE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.beta,
            r.b,
            r.seed,
            float(r.delta),
            float(r.sum_delta_full_mini),
            float(r.bound)
        );
    }
    out
}
