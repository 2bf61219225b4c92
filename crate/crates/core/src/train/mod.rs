//! Desk-scale training of the matrix formulations with manually
//! derived gradients. Every map in both models is linear or bilinear,
//! so each backward pass is just transposed applications — no autodiff.
//!
//! Before the first epoch, every parameter tensor's analytic gradient
//! is spot-checked against central differences of the batch loss; a
//! failed preflight aborts the run instead of training on bad math.

pub mod adam;
pub mod mnist;
pub mod series;

pub use adam::{Adam, AdamConfig};
pub use mnist::{
    load_mnist_dir, synth_mnist_data, train_mnist, ConvPath, MnistConfig, MnistData,
};
pub use series::{train_series, SeriesConfig};

use crate::check::GradReport;
use crate::error::Result;
use crate::rng;

pub const PREFLIGHT_GRAD_BOUND: f64 = 1e-5;
pub const PREFLIGHT_FD_STEP: f64 = 1e-5;
pub const PREFLIGHT_PROBES: usize = 10;

/// One line of the training log: mean train loss over the epoch's
/// optimizer steps and the held-out metric after the epoch (accuracy
/// for digits, MSE for series).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub eval_metric: f64,
}

/// Full outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// One row per epoch run; empty for a zero-epoch run.
    pub epochs: Vec<EpochRow>,
    /// Held-out metric after the last epoch (or at initialization for a
    /// zero-epoch run).
    pub final_metric: f64,
    /// 1-based epoch that reached the best held-out metric; 0 if no
    /// epochs ran.
    pub epochs_to_best: usize,
    /// Persistence-forecast MSE on the held-out windows (series task
    /// only).
    pub baseline_metric: Option<f64>,
    /// Mean batch loss at every optimizer step, in step order.
    pub step_losses: Vec<f64>,
    /// Gradient spot-checks run before the first epoch, one per
    /// parameter tensor.
    pub preflight: Vec<GradReport>,
}

impl TrainReport {
    /// `epoch,train_loss,eval_metric` rows plus a
    /// `final,<metric>,<epochs_to_best>` summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,eval_metric\n");
        for row in &self.epochs {
            out.push_str(&format!(
                "{},{:e},{:e}\n",
                row.epoch, row.train_loss, row.eval_metric
            ));
        }
        out.push_str(&format!(
            "final,{:e},{}\n",
            self.final_metric, self.epochs_to_best
        ));
        out
    }
}

/// Deterministic per-epoch permutation of `0..n`.
pub(crate) fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    idx
}

/// Checks an analytic gradient against central differences of the loss
/// along random directions: `(L(p + h v) - L(p - h v)) / 2h` must match
/// `<grad, v>` to [`PREFLIGHT_GRAD_BOUND`] relative error.
pub(crate) fn preflight_grad_check(
    op: &str,
    base: &[f64],
    grad: &[f64],
    seed: u64,
    mut loss_at: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<GradReport> {
    assert_eq!(base.len(), grad.len(), "gradient shaped like its tensor");
    let mut r = rng::seeded(rng::mix(seed, 0x9f17));
    let mut worst = 0.0f64;
    for _ in 0..PREFLIGHT_PROBES {
        let v: Vec<f64> = (0..base.len()).map(|_| rng::uniform(&mut r, 1.0)).collect();
        let plus: Vec<f64> = base
            .iter()
            .zip(&v)
            .map(|(b, d)| b + PREFLIGHT_FD_STEP * d)
            .collect();
        let minus: Vec<f64> = base
            .iter()
            .zip(&v)
            .map(|(b, d)| b - PREFLIGHT_FD_STEP * d)
            .collect();
        let fd = (loss_at(&plus)? - loss_at(&minus)?) / (2.0 * PREFLIGHT_FD_STEP);
        let analytic: f64 = grad.iter().zip(&v).map(|(g, d)| g * d).sum();
        let rel = (fd - analytic).abs() / analytic.abs().max(1.0);
        worst = worst.max(rel);
    }
    Ok(GradReport {
        op: op.to_string(),
        probes: PREFLIGHT_PROBES,
        fd_step: PREFLIGHT_FD_STEP,
        max_rel_err: worst,
        bound: PREFLIGHT_GRAD_BOUND,
        passed: worst <= PREFLIGHT_GRAD_BOUND,
    })
}
