//! One-layer GNN `z_i = s · ReLU(ã_i X Wᵀ)` with MSE and binary cross-entropy heads.
//!
//! Gradients use the indicator form: the ReLU derivative is `1{p > 0}`, so a
//! unit whose pre-activation is exactly zero contributes nothing.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::adj::AdjRows;
use crate::error::{dim_err, input_err, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    Mse,
    Ce,
}

/// Multiplier applied after the ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationScale {
    #[default]
    One,
    Sqrt2,
}

impl ActivationScale {
    pub fn value(self) -> f64 {
        match self {
            ActivationScale::One => 1.0,
            ActivationScale::Sqrt2 => core::f64::consts::SQRT_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `h × r` weights.
    pub weights: Matrix,
    /// Standard deviation used at initialization.
    pub kappa: f64,
    /// Fixed `±1` output vector for the CE head.
    pub output: Option<Vec<f64>>,
    pub activation: ActivationScale,
}

impl ModelParams {
    pub fn hidden(&self) -> usize {
        self.weights.rows()
    }

    /// Attaches the CE output vector: first half `+1`, second half `-1`.
    pub fn with_ce_head(mut self) -> Result<Self> {
        let h = self.hidden();
        if !h.is_multiple_of(2) {
            return Err(input_err!("CE head needs an even hidden dimension, got {}", h));
        }
        self.output = Some((0..h).map(|k| if k < h / 2 { 1.0 } else { -1.0 }).collect());
        Ok(self)
    }

    pub fn with_activation(mut self, activation: ActivationScale) -> Self {
        self.activation = activation;
        self
    }

    fn output_vector(&self) -> Result<&[f64]> {
        let v = self
            .output
            .as_deref()
            .ok_or_else(|| input_err!("CE loss requires the ±1 output vector"))?;
        if v.len() != self.hidden() {
            return Err(dim_err!("output vector length {} != hidden {}", v.len(), self.hidden()));
        }
        Ok(v)
    }
}

/// Draws `W` with i.i.d. `N(0, κ²)` entries.
pub fn init_gaussian(h: usize, r: usize, kappa: f64, seed: u64) -> Result<ModelParams> {
    if h == 0 || r == 0 {
        return Err(input_err!("hidden ({}) and feature ({}) sizes must be positive", h, r));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(input_err!("kappa must be positive and finite, got {}", kappa));
    }
    let mut rng = rng::stream(seed, Domain::Init, 0, 0);
    let weights = Matrix::from_fn(h, r, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        kappa * z
    });
    Ok(ModelParams {
        weights,
        kappa,
        output: None,
        activation: ActivationScale::One,
    })
}

/// Maps binary labels `{0, 1}` to `{-1, +1}`.
pub fn pm1_labels(labels: &[usize]) -> Result<Vec<i8>> {
    labels
        .iter()
        .map(|&y| match y {
            0 => Ok(-1),
            1 => Ok(1),
            _ => Err(input_err!("CE loss is binary; found label {}", y)),
        })
        .collect()
}

fn check_agg(agg: &Matrix, params: &ModelParams) -> Result<()> {
    if agg.cols() != params.weights.cols() {
        return Err(dim_err!(
            "aggregated features have {} columns, weights expect {}",
            agg.cols(),
            params.weights.cols()
        ));
    }
    Ok(())
}

/// Pre-activations `P = ÃX Wᵀ` from aggregated features.
pub fn preactivations(agg: &Matrix, params: &ModelParams) -> Result<Matrix> {
    check_agg(agg, params)?;
    let w = &params.weights;
    Ok(Matrix::from_fn(agg.rows(), w.rows(), |i, k| dot(agg.row(i), w.row(k))))
}

/// Forward pass from pre-aggregated features `ÃX`.
pub fn forward_aggregated(agg: &Matrix, params: &ModelParams) -> Result<Matrix> {
    let s = params.activation.value();
    let mut z = preactivations(agg, params)?;
    for v in z.as_mut_slice() {
        *v = if *v > 0.0 { s * *v } else { 0.0 };
    }
    Ok(z)
}

/// `Z = s · ReLU(Ã X Wᵀ)`, one row per adjacency row.
pub fn forward(adj: &AdjRows, features: &Matrix, params: &ModelParams) -> Result<Matrix> {
    forward_aggregated(&adj.aggregate(features)?, params)
}

fn check_rows(z: &Matrix, m: usize) -> Result<()> {
    if z.rows() != m {
        return Err(dim_err!("{} outputs for {} labels", z.rows(), m));
    }
    if m == 0 {
        return Err(input_err!("loss over an empty set of rows"));
    }
    Ok(())
}

/// `(1/m) Σ ½‖z_i − onehot(y_i)‖²`.
pub fn loss_mse(z: &Matrix, labels: &[usize], num_classes: usize) -> Result<f64> {
    check_rows(z, labels.len())?;
    if z.cols() != num_classes {
        return Err(dim_err!("MSE needs h = K, got h = {} and K = {}", z.cols(), num_classes));
    }
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(input_err!("label {} outside [0, {})", y, num_classes));
        }
        let row = z.row(i);
        let mut sq = 0.0;
        for (k, &zk) in row.iter().enumerate() {
            let d = zk - if k == y { 1.0 } else { 0.0 };
            sq += d * d;
        }
        total += 0.5 * sq;
    }
    Ok(total / labels.len() as f64)
}

/// `log(1 + eˣ)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

/// Derivative of `u ↦ log(1 + e⁻ᵘ)`, i.e. `−1 / (1 + eᵘ)`.
#[inline]
pub fn logistic_loss_derivative(u: f64) -> f64 {
    if u >= 0.0 {
        let e = libm::exp(-u);
        -e / (1.0 + e)
    } else {
        -1.0 / (1.0 + libm::exp(u))
    }
}

fn check_pm1(labels: &[i8]) -> Result<()> {
    match labels.iter().find(|&&y| y != 1 && y != -1) {
        Some(y) => Err(input_err!("CE labels must be ±1, found {}", y)),
        None => Ok(()),
    }
}

/// Scores `ŷ_i = z_i · v`.
pub fn ce_scores(z: &Matrix, output: &[f64]) -> Result<Vec<f64>> {
    if z.cols() != output.len() {
        return Err(dim_err!("output vector length {} != hidden {}", output.len(), z.cols()));
    }
    Ok((0..z.rows()).map(|i| dot(z.row(i), output)).collect())
}

/// `(1/m) Σ log(1 + exp(−y_i ŷ_i))`.
pub fn loss_ce(z: &Matrix, output: &[f64], labels: &[i8]) -> Result<f64> {
    check_rows(z, labels.len())?;
    check_pm1(labels)?;
    let scores = ce_scores(z, output)?;
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| softplus(-(y as f64) * s))
        .sum();
    Ok(total / labels.len() as f64)
}

/// Gradient of MSE loss from aggregated features.
pub fn grad_mse_aggregated(
    agg: &Matrix,
    params: &ModelParams,
    labels: &[usize],
    num_classes: usize,
) -> Result<Matrix> {
    let p = preactivations(agg, params)?;
    check_rows(&p, labels.len())?;
    if params.hidden() != num_classes {
        return Err(dim_err!("MSE needs h = K, got h = {} and K = {}", params.hidden(), num_classes));
    }
    let s = params.activation.value();
    let m = labels.len() as f64;
    let mut grad = Matrix::zeros(params.hidden(), params.weights.cols());
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(input_err!("label {} outside [0, {})", y, num_classes));
        }
        let x = agg.row(i);
        for (k, &pk) in p.row(i).iter().enumerate() {
            if pk > 0.0 {
                let residual = s * pk - if k == y { 1.0 } else { 0.0 };
                let coef = residual * s / m;
                for (g, &xv) in grad.row_mut(k).iter_mut().zip(x) {
                    *g += coef * xv;
                }
            }
        }
    }
    Ok(grad)
}

/// Gradient of CE loss from aggregated features.
pub fn grad_ce_aggregated(agg: &Matrix, params: &ModelParams, labels: &[i8]) -> Result<Matrix> {
    let v = params.output_vector()?;
    check_pm1(labels)?;
    let p = preactivations(agg, params)?;
    check_rows(&p, labels.len())?;
    let s = params.activation.value();
    let m = labels.len() as f64;
    let mut grad = Matrix::zeros(params.hidden(), params.weights.cols());
    for (i, &y) in labels.iter().enumerate() {
        let y = y as f64;
        let pre = p.row(i);
        let score: f64 = pre
            .iter()
            .zip(v)
            .map(|(&pk, &vk)| if pk > 0.0 { s * pk * vk } else { 0.0 })
            .sum();
        let outer = logistic_loss_derivative(y * score) * y / m;
        let x = agg.row(i);
        for (k, &pk) in pre.iter().enumerate() {
            if pk > 0.0 {
                let coef = outer * v[k] * s;
                for (g, &xv) in grad.row_mut(k).iter_mut().zip(x) {
                    *g += coef * xv;
                }
            }
        }
    }
    Ok(grad)
}

pub fn grad_mse(
    adj: &AdjRows,
    features: &Matrix,
    params: &ModelParams,
    labels: &[usize],
    num_classes: usize,
) -> Result<Matrix> {
    grad_mse_aggregated(&adj.aggregate(features)?, params, labels, num_classes)
}

pub fn grad_ce(adj: &AdjRows, features: &Matrix, params: &ModelParams, labels: &[i8]) -> Result<Matrix> {
    grad_ce_aggregated(&adj.aggregate(features)?, params, labels)
}
