//! Convergence metrics: iteration-to-target, time-to-target, throughput, and
//! targets derived from low-variance windows of a reference run.

use crate::error::{input_err, Error, Result};
use crate::trainer::Trajectory;

/// Window length for derived targets.
pub const TARGET_WINDOW: usize = 100;
/// A loss window qualifies when its variance is strictly below this.
pub const LOSS_VARIANCE_THRESHOLD: f64 = 5e-4;
/// An accuracy window qualifies when its variance is strictly below this.
pub const ACCURACY_VARIANCE_THRESHOLD: f64 = 4e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Reached when the full-graph training loss is at or below the value.
    Loss,
    /// Reached when the test accuracy is at or above the value.
    Accuracy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetProvenance {
    Explicit,
    Derived { window: usize, var_threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub value: f64,
    pub provenance: TargetProvenance,
}

impl TargetSpec {
    pub fn loss(value: f64) -> Self {
        Self {
            kind: TargetKind::Loss,
            value,
            provenance: TargetProvenance::Explicit,
        }
    }

    pub fn accuracy(value: f64) -> Self {
        Self {
            kind: TargetKind::Accuracy,
            value,
            provenance: TargetProvenance::Explicit,
        }
    }

    fn reached(&self, x: f64) -> bool {
        match self.kind {
            TargetKind::Loss => x <= self.value,
            TargetKind::Accuracy => x >= self.value,
        }
    }
}

/// Population variance (divides by the window length).
pub fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Scans windows of `window` consecutive samples in order and returns the
/// first one whose population variance is strictly below `var_threshold`.
pub fn first_stable_window(xs: &[f64], window: usize, var_threshold: f64) -> Option<&[f64]> {
    if window == 0 || xs.len() < window {
        return None;
    }
    xs.windows(window)
        .find(|w| population_variance(w) < var_threshold)
}

fn derive(
    samples: &[f64],
    kind: TargetKind,
    window: usize,
    var_threshold: f64,
) -> Result<TargetSpec> {
    if !(var_threshold > 0.0) {
        return Err(input_err!("variance threshold must be positive"));
    }
    if samples.len() < window {
        return Err(Error::NotDerivable(alloc::format!(
            "need {} samples, trace has {}",
            window,
            samples.len()
        )));
    }
    let w = first_stable_window(samples, window, var_threshold).ok_or_else(|| {
        Error::NotDerivable(alloc::format!(
            "no window of {} samples has variance below {}",
            window,
            var_threshold
        ))
    })?;
    let value = match kind {
        TargetKind::Loss => w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        TargetKind::Accuracy => w.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Ok(TargetSpec {
        kind,
        value,
        provenance: TargetProvenance::Derived {
            window,
            var_threshold,
        },
    })
}

/// Maximum loss over the first stable window of full-graph losses.
pub fn derive_target_loss_from(samples: &[f64]) -> Result<TargetSpec> {
    derive(samples, TargetKind::Loss, TARGET_WINDOW, LOSS_VARIANCE_THRESHOLD)
}

/// Minimum accuracy over the first stable window of accuracy samples.
pub fn derive_target_accuracy_from(samples: &[f64]) -> Result<TargetSpec> {
    derive(
        samples,
        TargetKind::Accuracy,
        TARGET_WINDOW,
        ACCURACY_VARIANCE_THRESHOLD,
    )
}

pub fn derive_target_loss(reference: &Trajectory) -> Result<TargetSpec> {
    let xs: alloc::vec::Vec<f64> = reference.full_losses().map(|(_, l)| l).collect();
    derive_target_loss_from(&xs)
}

pub fn derive_target_accuracy(reference: &Trajectory) -> Result<TargetSpec> {
    let xs: alloc::vec::Vec<f64> = reference.accuracies().map(|(_, a)| a).collect();
    derive_target_accuracy_from(&xs)
}

/// First sampled `(iteration, value)` pair meeting the target.
pub fn first_crossing<I>(samples: I, target: &TargetSpec) -> Option<usize>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    samples
        .into_iter()
        .find(|&(_, x)| target.reached(x))
        .map(|(t, _)| t)
}

fn crossing_index(trajectory: &Trajectory, target: &TargetSpec) -> Option<usize> {
    let records = &trajectory.records;
    let pos = match target.kind {
        TargetKind::Loss => records
            .iter()
            .position(|r| r.full_loss.is_some_and(|l| target.reached(l))),
        TargetKind::Accuracy => records
            .iter()
            .position(|r| r.test_acc.is_some_and(|a| target.reached(a))),
    };
    pos
}

/// Smallest 1-based iteration at which the target is met; `None` if never.
pub fn iteration_to(trajectory: &Trajectory, target: &TargetSpec) -> Option<usize> {
    crossing_index(trajectory, target).map(|k| trajectory.records[k].iter)
}

/// Elapsed seconds at the crossing iteration.
pub fn time_to(trajectory: &Trajectory, target: &TargetSpec) -> Option<f64> {
    crossing_index(trajectory, target).map(|k| trajectory.records[k].elapsed_s)
}

/// Target nodes processed per second over the whole run.
pub fn throughput(trajectory: &Trajectory) -> Result<f64> {
    let last = trajectory
        .records
        .last()
        .ok_or_else(|| input_err!("throughput of an empty trajectory"))?;
    if !(last.elapsed_s > 0.0) {
        return Err(input_err!("throughput needs positive elapsed time"));
    }
    Ok(last.nodes_processed as f64 / last.elapsed_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub iteration_to_loss: Option<usize>,
    pub iteration_to_accuracy: Option<usize>,
    pub time_to_accuracy: Option<f64>,
    pub throughput: f64,
}

/// All metrics for one run against shared targets.
pub fn report(
    trajectory: &Trajectory,
    loss_target: Option<&TargetSpec>,
    accuracy_target: Option<&TargetSpec>,
) -> Result<MetricReport> {
    Ok(MetricReport {
        iteration_to_loss: loss_target.and_then(|t| iteration_to(trajectory, t)),
        iteration_to_accuracy: accuracy_target.and_then(|t| iteration_to(trajectory, t)),
        time_to_accuracy: accuracy_target.and_then(|t| time_to(trajectory, t)),
        throughput: throughput(trajectory)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{ActivationScale, ModelParams};
    use crate::trainer::IterRecord;
    use alloc::vec;
    use alloc::vec::Vec;

    fn traj(losses: &[f64], acc: &[(usize, f64)], step_s: f64, b: u64) -> Trajectory {
        let records = losses
            .iter()
            .enumerate()
            .map(|(k, &l)| IterRecord {
                iter: k + 1,
                batch_loss: None,
                full_loss: Some(l),
                test_acc: acc.iter().find(|(t, _)| *t == k + 1).map(|p| p.1),
                elapsed_s: step_s * (k + 1) as f64,
                nodes_processed: b * (k + 1) as u64,
            })
            .collect();
        Trajectory {
            records,
            final_params: ModelParams {
                weights: Matrix::zeros(1, 1),
                kappa: 1.0,
                output: None,
                activation: ActivationScale::One,
            },
            eta: 0.0,
            reached_target: false,
        }
    }

    #[test]
    fn constant_loss_trace() {
        let t = derive_target_loss_from(&[0.3; 100]).unwrap();
        assert_eq!(t.value, 0.3);
    }

    #[test]
    fn two_phase_loss_trace() {
        let mut xs = vec![1.0; 99];
        xs.extend([0.3; 100]);
        assert_eq!(derive_target_loss_from(&xs).unwrap().value, 0.3);
    }

    #[test]
    fn short_trace_not_derivable() {
        assert!(matches!(
            derive_target_loss_from(&[0.3; 99]),
            Err(Error::NotDerivable(_))
        ));
    }

    #[test]
    fn alternating_accuracy() {
        let xs: Vec<f64> = (0..100).map(|k| if k % 2 == 0 { 0.9 } else { 0.92 }).collect();
        assert!((population_variance(&xs) - 1e-4).abs() < 1e-15);
        assert_eq!(derive_target_accuracy_from(&xs).unwrap().value, 0.9);
    }

    #[test]
    fn first_crossing_on_losses() {
        let t = traj(&[1.0, 0.5, 0.2, 0.1], &[], 1.0, 10);
        assert_eq!(iteration_to(&t, &TargetSpec::loss(0.2)), Some(3));
        assert_eq!(time_to(&t, &TargetSpec::loss(0.2)), Some(3.0));
        assert_eq!(iteration_to(&t, &TargetSpec::loss(0.05)), None);
    }

    #[test]
    fn sparse_accuracy_samples() {
        let t = traj(&[1.0; 25], &[(10, 0.5), (20, 0.8)], 1.0, 10);
        assert_eq!(iteration_to(&t, &TargetSpec::accuracy(0.7)), Some(20));
    }

    #[test]
    fn throughput_arithmetic() {
        let t = traj(&[1.0; 10], &[], 0.5, 100);
        assert_eq!(throughput(&t).unwrap(), 200.0);
        let f = traj(&[1.0; 10], &[], 1.0, 1000);
        assert_eq!(throughput(&f).unwrap(), 1000.0);
        let z = traj(&[1.0; 10], &[], 0.0, 1000);
        assert!(throughput(&z).is_err());
    }
}
