//! Turning configuration sections into core training calls.

use gnnlab_core::model::init_gaussian;
use gnnlab_core::simulator::HardwareProfile;
use gnnlab_core::trainer::{
    resolve_eta, theoretical_lr_ce_mini, theoretical_lr_mse_mini, Clock, LearningRate, ModeledClock,
};
use gnnlab_core::{
    train, Graph, LossKind, ModelParams, SamplerConfig, TrainConfig, TrainMode, Trajectory,
};

use crate::clock::WallClock;
use crate::config::{ClockName, EtaName, EtaSetting, ModeName, ModelConfig, TrainSection};
use crate::error::{Error, Result};

/// Initial weights for `seed`, with the head and activation the model section asks for.
pub fn build_params(model: &ModelConfig, graph: &Graph, seed: u64) -> Result<ModelParams> {
    let loss: LossKind = model.loss.into();
    if loss == LossKind::Mse && model.hidden != graph.num_classes() {
        return Err(Error::Config(format!(
            "MSE regresses one-hot labels, so hidden ({}) must equal the class count ({})",
            model.hidden,
            graph.num_classes()
        )));
    }
    let params = init_gaussian(model.hidden, graph.num_features(), model.kappa, seed)?
        .with_activation(model.activation.into());
    Ok(match loss {
        LossKind::Mse => params,
        LossKind::Ce => params.with_ce_head()?,
    })
}

pub fn make_clock(train: &TrainSection) -> Result<Box<dyn Clock>> {
    Ok(match train.clock {
        ClockName::Modeled => Box::new(ModeledClock::new(HardwareProfile::new(
            train.compute,
            train.bandwidth,
        )?)),
        ClockName::Wall => Box::new(WallClock::new()),
    })
}

pub fn sampler(train: &TrainSection, b: usize, beta: usize, seed: u64) -> SamplerConfig {
    let mut s = SamplerConfig::new(b, beta, seed).nested(train.nested);
    s.normalization = train.normalization.into();
    s
}

/// Training settings for one mini-batch grid point with a resolved step size.
pub fn mini_config(train: &TrainSection, loss: LossKind, s: SamplerConfig, eta: f64) -> TrainConfig {
    let mut c = TrainConfig::new(loss, TrainMode::Mini(s), eta, train.max_iters);
    c.target_loss = train.target_loss;
    c.eval_every = train.eval_every;
    c
}

/// Step size shared by every `(b, β)` in the grid: the midpoint of the
/// intersected MSE intervals, or the smallest CE step.
pub fn grid_eta(
    graph: &Graph,
    loss: LossKind,
    hidden: usize,
    train: &TrainSection,
    points: &[(usize, usize)],
) -> Result<f64> {
    let n = graph.num_train() as f64;
    match loss {
        LossKind::Mse => {
            let mut it = points.iter();
            let &(b, beta) = it
                .next()
                .ok_or_else(|| Error::Config("empty sweep grid".into()))?;
            let mut iv = theoretical_lr_mse_mini(n, b as f64, beta as f64, train.c6)?;
            for &(b, beta) in it {
                iv = iv.intersect(&theoretical_lr_mse_mini(n, b as f64, beta as f64, train.c6)?)?;
            }
            Ok(iv.midpoint())
        }
        LossKind::Ce => points.iter().try_fold(f64::INFINITY, |acc, &(b, beta)| {
            Ok(acc.min(theoretical_lr_ce_mini(n, b as f64, beta as f64, hidden as f64, train.c4)?))
        }),
    }
}

/// Resolves a step-size setting for one configuration.
pub fn eta_for(
    setting: EtaSetting,
    graph: &Graph,
    params: &ModelParams,
    base: &TrainConfig,
    grid: impl FnOnce() -> Result<f64>,
) -> Result<f64> {
    match setting {
        EtaSetting::Value(v) => {
            let mut c = *base;
            c.eta = LearningRate::Fixed(v);
            Ok(resolve_eta(graph, params, &c)?)
        }
        EtaSetting::Named(EtaName::Theoretical) => Ok(resolve_eta(graph, params, base)?),
        EtaSetting::Named(EtaName::TheoreticalGrid) => grid(),
    }
}

/// Runs the single configuration described by `[model]` and `[train]`.
pub fn train_single(graph: &Graph, model: &ModelConfig, t: &TrainSection) -> Result<Trajectory> {
    let params = build_params(model, graph, t.seed)?;
    let loss: LossKind = model.loss.into();
    let mode = match t.mode {
        ModeName::Full => TrainMode::Full,
        ModeName::Mini => {
            let b = t
                .batch_size
                .ok_or_else(|| Error::Config("[train] mini mode needs `batch_size`".into()))?;
            let beta = t
                .fanout
                .ok_or_else(|| Error::Config("[train] mini mode needs `fanout`".into()))?;
            TrainMode::Mini(sampler(t, b, beta, t.seed))
        }
    };
    let mut base = TrainConfig::new(loss, mode, 0.0, t.max_iters);
    base.eta = LearningRate::Theoretical { c4: t.c4, c6: t.c6 };
    base.target_loss = t.target_loss;
    base.eval_every = t.eval_every;
    let points = match mode {
        TrainMode::Mini(s) => vec![(s.batch_size, s.fanout)],
        TrainMode::Full => vec![(graph.num_train(), graph.d_max().max(1))],
    };
    let eta = eta_for(t.eta, graph, &params, &base, || {
        grid_eta(graph, loss, model.hidden, t, &points)
    })?;
    base.eta = LearningRate::Fixed(eta);
    let mut clock = make_clock(t)?;
    Ok(train(graph, &params, &base, clock.as_mut())?)
}
