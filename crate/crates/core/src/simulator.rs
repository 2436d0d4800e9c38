//! Closed-form two-device cost model for time-to-accuracy.
//!
//! Per iteration a device aggregates `b·β + b` nodes at compute rate `C` and
//! ships either the `b` target embeddings (mini-batch) or all `b·β + b`
//! aggregated nodes (full-graph) over bandwidth `H`. The model is a rough,
//! uncalibrated estimate and is meant for what-if comparisons only.

use crate::error::{input_err, Result};

/// Compute capacity and bandwidth, both in nodes per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareProfile {
    pub compute: f64,
    pub bandwidth: f64,
}

impl HardwareProfile {
    pub fn new(compute: f64, bandwidth: f64) -> Result<Self> {
        for (name, v) in [("compute", compute), ("bandwidth", bandwidth)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(input_err!("{} must be positive and finite, got {}", name, v));
            }
        }
        Ok(Self { compute, bandwidth })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    Full,
    Mini,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub t_cal: f64,
    pub t_comm: f64,
    pub total: f64,
    pub mode: CostMode,
}

/// Per-iteration `(t_cal, t_comm)` for `b` targets with fan-out `β`.
pub fn per_iteration(b: f64, beta: f64, profile: &HardwareProfile, mode: CostMode) -> (f64, f64) {
    let touched = b * beta + b;
    let t_cal = touched / profile.compute;
    let t_comm = match mode {
        CostMode::Mini => b / profile.bandwidth,
        CostMode::Full => touched / profile.bandwidth,
    };
    (t_cal, t_comm)
}

/// Time to run `n_iters` iterations.
pub fn estimate(
    b: f64,
    beta: f64,
    n_iters: f64,
    profile: &HardwareProfile,
    mode: CostMode,
) -> Result<CostEstimate> {
    for (name, v) in [("b", b), ("beta", beta), ("n_iters", n_iters)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(input_err!("{} must be positive and finite, got {}", name, v));
        }
    }
    let (t_cal, t_comm) = per_iteration(b, beta, profile, mode);
    Ok(CostEstimate {
        t_cal,
        t_comm,
        total: n_iters * (t_cal + t_comm),
        mode,
    })
}

/// A training configuration to be costed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunShape {
    pub b: f64,
    pub beta: f64,
    pub n_iters: f64,
    pub mode: CostMode,
}

/// Bandwidth at which the two configurations take equal time.
///
/// Each total has the form `α + γ/H`; the curves cross at most once on
/// `H > 0`. Returns `None` when one configuration is never slower.
pub fn crossover_bandwidth(first: &RunShape, second: &RunShape, compute: f64) -> Option<f64> {
    let split = |s: &RunShape| {
        let touched = s.b * s.beta + s.b;
        let shipped = match s.mode {
            CostMode::Mini => s.b,
            CostMode::Full => touched,
        };
        (s.n_iters * touched / compute, s.n_iters * shipped)
    };
    let (a1, g1) = split(first);
    let (a2, g2) = split(second);
    let da = a1 - a2;
    let dg = g1 - g2;
    if da == 0.0 || dg == 0.0 {
        return None;
    }
    let h = -dg / da;
    (h > 0.0 && h.is_finite()).then_some(h)
}
