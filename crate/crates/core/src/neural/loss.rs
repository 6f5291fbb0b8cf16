//! Loss functions and their analytic gradients.
//!
//! Three task losses are supported:
//!
//! * squared error (regression nets),
//! * the mixture negative log likelihood,
//! * the forward-consistent mixture loss: NLL plus
//!   `sum_j |yhat_j - y_j|^2` where
//!   `yhat_j = sum_k pi_k f(mu_k(y_j))` runs the predicted means through a
//!   frozen forward surrogate.
//!
//! Every task loss is the batch sum; regularization (`alpha_b sum b^2 +
//! alpha_w sum w^2` over the trained network only) is added on top where the
//! operator calls for it. Gradients flow through the surrogate's forward
//! pass to the means, never to the surrogate's own parameters.

use ndarray::Array2;

use super::checkpoint::Model;
use super::mdn::{mdn_head_batch, mdn_nll, mdn_nll_grad_raw, MixtureBatch, MixtureParams};
use super::net::{backprop, forward_cached, DenseNetSpec, OutputHead, Parameters};
use super::{NeuralError, Result};

/// Which task loss a training run optimizes.
#[derive(Debug, Clone, Copy)]
pub enum LossKind<'a> {
    /// `sum_j |out_j - target_j|^2` with a linear head.
    SquaredError,
    /// Mixture negative log likelihood with an MDN head.
    MdnNll,
    /// NLL plus the forward-consistency term through a frozen surrogate.
    /// `forward_targets` are the clean curves the surrogate outputs are
    /// compared against (they equal the network inputs unless the inputs
    /// were noised).
    FwMdn { surrogate: &'a Model },
}

/// Value of the forward-consistent loss operator on explicit mixtures:
/// `mdn_nll + sum_j |sum_k pi_k f(mu_k) - y_j|^2 + alpha_b sum b^2 +
/// alpha_w sum w^2`, with the regularization sums running over the supplied
/// (trained) parameters only.
pub fn fwmdn_loss(
    mixtures: &[MixtureParams],
    targets_x: &[Vec<f64>],
    targets_y: &[Vec<f64>],
    surrogate: &Model,
    alpha_w: f64,
    alpha_b: f64,
    params: &Parameters,
) -> Result<f64> {
    if mixtures.len() != targets_y.len() {
        return Err(NeuralError::Dimension(format!(
            "{} mixtures vs {} curves",
            mixtures.len(),
            targets_y.len()
        )));
    }
    let nll = mdn_nll(mixtures, targets_x)?;
    let mut forward_term = 0.0;
    for (mix, y) in mixtures.iter().zip(targets_y) {
        let mut yhat = vec![0.0; y.len()];
        for (k, mu) in mix.mus.iter().enumerate() {
            let fk = surrogate.forward_one(mu)?;
            for (acc, v) in yhat.iter_mut().zip(&fk) {
                *acc += mix.pis[k] * v;
            }
        }
        forward_term += yhat
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    let (w2, b2) = params.squared_sums();
    Ok(nll + forward_term + alpha_b * b2 + alpha_w * w2)
}

/// One batch evaluation: task-loss sum and parameter gradients of the task
/// loss (regularization excluded; the trainer adds it explicitly).
pub struct BatchEval {
    pub task_loss: f64,
    pub grads: Parameters,
}

/// Task loss of a batch without gradients (used for validation passes).
pub fn batch_loss(
    spec: &DenseNetSpec,
    params: &Parameters,
    kind: &LossKind,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    forward_targets: Option<&Array2<f64>>,
) -> Result<f64> {
    let (raw, _cache) = forward_cached(spec, params, inputs);
    match kind {
        LossKind::SquaredError => Ok(squared_error(&raw, targets)),
        LossKind::MdnNll => {
            let mix = head(spec, &raw)?;
            nll_only(&raw, &mix, targets).map(|(v, _)| v)
        }
        LossKind::FwMdn { surrogate } => {
            let mix = head(spec, &raw)?;
            let (nll, _) = nll_only(&raw, &mix, targets)?;
            let y = forward_targets.unwrap_or(inputs);
            let (fterm, _, _) = forward_consistency(&mix, surrogate, y, false)?;
            Ok(nll + fterm)
        }
    }
}

/// Task loss and its parameter gradients for one batch.
pub fn batch_loss_and_grad(
    spec: &DenseNetSpec,
    params: &Parameters,
    kind: &LossKind,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    forward_targets: Option<&Array2<f64>>,
) -> Result<BatchEval> {
    let (raw, cache) = forward_cached(spec, params, inputs);
    let (task_loss, draw) = match kind {
        LossKind::SquaredError => {
            let loss = squared_error(&raw, targets);
            let mut draw = &raw - targets;
            draw.mapv_inplace(|v| 2.0 * v);
            (loss, draw)
        }
        LossKind::MdnNll => {
            let mix = head(spec, &raw)?;
            let (loss, draw) = nll_only(&raw, &mix, targets)?;
            (loss, draw)
        }
        LossKind::FwMdn { surrogate } => {
            let mix = head(spec, &raw)?;
            let (nll, mut draw) = nll_only(&raw, &mix, targets)?;
            let y = forward_targets.unwrap_or(inputs);
            let (fterm, dpis, dmus) = forward_consistency(&mix, surrogate, y, true)?;
            add_head_grads(spec, &raw, &mix, &dpis.unwrap(), &dmus.unwrap(), &mut draw);
            (nll + fterm, draw)
        }
    };
    if !task_loss.is_finite() {
        return Err(NeuralError::NonFinite { sample: usize::MAX });
    }
    let grads = backprop(spec, params, &cache, &draw).params;
    Ok(BatchEval { task_loss, grads })
}

fn squared_error(raw: &Array2<f64>, targets: &Array2<f64>) -> f64 {
    raw.iter()
        .zip(targets.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn head(spec: &DenseNetSpec, raw: &Array2<f64>) -> Result<MixtureBatch> {
    let OutputHead::Mdn { sigma_scale, .. } = spec.output_head else {
        return Err(NeuralError::Spec("loss needs an mdn head".into()));
    };
    let (k, n) = spec.mdn_dims()?;
    mdn_head_batch(raw, k, n, sigma_scale)
}

fn nll_only(
    raw: &Array2<f64>,
    mix: &MixtureBatch,
    targets: &Array2<f64>,
) -> Result<(f64, Array2<f64>)> {
    mdn_nll_grad_raw(raw, mix, targets)
}

/// Forward-consistency term `sum_j |sum_k pi_k f(mu_k) - y_j|^2`.
///
/// With `want_grads`, also returns the gradients with respect to the mixture
/// weights `(m, K)` and means `(m, K n)`; the surrogate itself only ever
/// contributes a vector-Jacobian product with respect to its inputs.
fn forward_consistency(
    mix: &MixtureBatch,
    surrogate: &Model,
    targets_y: &Array2<f64>,
    want_grads: bool,
) -> Result<(f64, Option<Array2<f64>>, Option<Array2<f64>>)> {
    let (m, k, n) = (mix.len(), mix.components, mix.dim);
    if surrogate.spec.input_dim() != n {
        return Err(NeuralError::Dimension(format!(
            "surrogate expects {} inputs, means have {n}",
            surrogate.spec.input_dim()
        )));
    }
    let n_out = surrogate.spec.output_dim();
    if targets_y.nrows() != m || targets_y.ncols() != n_out {
        return Err(NeuralError::Dimension(format!(
            "curves are {:?}, expected ({m}, {n_out})",
            targets_y.shape()
        )));
    }
    // all (sample, component) mean vectors as one stacked batch
    let stacked = mix
        .mus
        .clone()
        .into_shape((m * k, n))
        .expect("row-major component blocks");
    let (per_component, cache) = surrogate.forward_batch_cached(&stacked);

    // yhat_j = sum_k pi_jk f(mu_jk)
    let mut yhat = Array2::zeros((m, n_out));
    for j in 0..m {
        for c in 0..k {
            let f = per_component.row(j * k + c);
            let pi = mix.pis[[j, c]];
            for (d, v) in f.iter().enumerate() {
                yhat[[j, d]] += pi * v;
            }
        }
    }
    let mut resid = yhat;
    resid -= targets_y;
    let loss: f64 = resid.iter().map(|v| v * v).sum();
    if !want_grads {
        return Ok((loss, None, None));
    }

    // dL/dyhat = 2 resid; split into the pi and mean paths
    let mut dpis = Array2::zeros((m, k));
    let mut stacked_out_grad = Array2::zeros((m * k, n_out));
    for j in 0..m {
        for c in 0..k {
            let f = per_component.row(j * k + c);
            let mut acc = 0.0;
            for d in 0..n_out {
                let g = 2.0 * resid[[j, d]];
                acc += g * f[d];
                stacked_out_grad[[j * k + c, d]] = g * mix.pis[[j, c]];
            }
            dpis[[j, c]] = acc;
        }
    }
    let dmus_stacked = surrogate.input_vjp(&cache, &stacked_out_grad);
    let dmus = dmus_stacked
        .into_shape((m, k * n))
        .expect("row-major component blocks");
    Ok((loss, Some(dpis), Some(dmus)))
}

/// Folds gradients with respect to mixture weights and means back onto the
/// raw output slots (softmax Jacobian for the logits, ReLU mask for the
/// means).
fn add_head_grads(
    spec: &DenseNetSpec,
    raw: &Array2<f64>,
    mix: &MixtureBatch,
    dpis: &Array2<f64>,
    dmus: &Array2<f64>,
    draw: &mut Array2<f64>,
) {
    let (k, n) = spec.mdn_dims().expect("mdn head");
    let stride = 2 * n + 1;
    for j in 0..mix.len() {
        let mut weighted = 0.0;
        for c in 0..k {
            weighted += mix.pis[[j, c]] * dpis[[j, c]];
        }
        for c in 0..k {
            let base = stride * c;
            draw[[j, base + 2 * n]] += mix.pis[[j, c]] * (dpis[[j, c]] - weighted);
            for d in 0..n {
                if raw[[j, base + d]] > 0.0 {
                    draw[[j, base + d]] += dmus[[j, c * n + d]];
                }
            }
        }
    }
}
