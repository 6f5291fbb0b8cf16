//! Mixture-density head and the mixture negative log likelihood.
//!
//! Raw output layout per component `k` (offset `(2n+1) k`): `n` mean slots,
//! then `n` sigma slots, then one weight logit. Means go through ReLU (the
//! targets are non-negative velocities), sigmas through a sigmoid scaled by
//! `sigma_scale`, and the `K` logits through a softmax.

use ndarray::{Array2, ArrayView1};

use super::{NeuralError, Result};

/// Sigmas are clamped below at this fraction of `sigma_scale` so the log
/// likelihood stays finite when the sigmoid underflows.
pub const SIGMA_FLOOR_FRACTION: f64 = 1e-8;

const LOG_TWO_PI: f64 = 1.8378770664093453;

/// One conditional Gaussian mixture: `K` weights, mean vectors and
/// per-dimension sigmas.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub pis: Vec<f64>,
    pub mus: Vec<Vec<f64>>,
    pub sigmas: Vec<Vec<f64>>,
}

impl MixtureParams {
    pub fn components(&self) -> usize {
        self.pis.len()
    }

    pub fn dim(&self) -> usize {
        self.mus.first().map(Vec::len).unwrap_or(0)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps one raw output vector of width `(2n+1) k` to mixture parameters.
pub fn mdn_head(raw: &[f64], k: usize, n: usize, sigma_scale: f64) -> Result<MixtureParams> {
    let stride = 2 * n + 1;
    if raw.len() != stride * k {
        return Err(NeuralError::Dimension(format!(
            "raw output has {} slots, expected (2*{n}+1)*{k}",
            raw.len()
        )));
    }
    let mut mus = Vec::with_capacity(k);
    let mut sigmas = Vec::with_capacity(k);
    let mut logits = Vec::with_capacity(k);
    let floor = SIGMA_FLOOR_FRACTION * sigma_scale;
    for comp in 0..k {
        let base = stride * comp;
        mus.push(raw[base..base + n].iter().map(|&o| o.max(0.0)).collect());
        sigmas.push(
            raw[base + n..base + 2 * n]
                .iter()
                .map(|&o| (sigma_scale * sigmoid(o)).max(floor))
                .collect(),
        );
        logits.push(raw[base + 2 * n]);
    }
    let max_logit = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pis: Vec<f64> = logits.iter().map(|&l| (l - max_logit).exp()).collect();
    let total: f64 = pis.iter().sum();
    for p in &mut pis {
        *p /= total;
    }
    Ok(MixtureParams { pis, mus, sigmas })
}

/// Log density of the mixture at `x`, computed in log space with max shift.
pub fn log_mixture_density(mix: &MixtureParams, x: &[f64]) -> f64 {
    let n = x.len();
    let mut weighted: Vec<f64> = Vec::with_capacity(mix.components());
    for k in 0..mix.components() {
        let mut logp = -0.5 * n as f64 * LOG_TWO_PI;
        for d in 0..n {
            let sigma = mix.sigmas[k][d];
            let z = (x[d] - mix.mus[k][d]) / sigma;
            logp -= sigma.ln() + 0.5 * z * z;
        }
        weighted.push(mix.pis[k].ln() + logp);
    }
    let m = weighted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + weighted.iter().map(|w| (w - m).exp()).sum::<f64>().ln()
}

/// Mixture negative log likelihood over a batch:
/// `-sum_j log sum_k pi_k p_k(x_j)`.
pub fn mdn_nll(mixtures: &[MixtureParams], targets: &[Vec<f64>]) -> Result<f64> {
    if mixtures.len() != targets.len() {
        return Err(NeuralError::Dimension(format!(
            "{} mixtures vs {} targets",
            mixtures.len(),
            targets.len()
        )));
    }
    let mut total = 0.0;
    for (j, (mix, x)) in mixtures.iter().zip(targets).enumerate() {
        let nll = -log_mixture_density(mix, x);
        if !nll.is_finite() {
            return Err(NeuralError::NonFinite { sample: j });
        }
        total += nll;
    }
    Ok(total)
}

/// Batch mixture parameters in matrix form: `pis` is `(m, K)`, `mus` and
/// `sigmas` are `(m, K n)` with component blocks side by side.
pub struct MixtureBatch {
    pub pis: Array2<f64>,
    pub mus: Array2<f64>,
    pub sigmas: Array2<f64>,
    pub components: usize,
    pub dim: usize,
    pub sigma_scale: f64,
}

impl MixtureBatch {
    pub fn len(&self) -> usize {
        self.pis.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.pis.nrows() == 0
    }

    pub fn single(&self, j: usize) -> MixtureParams {
        let k = self.components;
        let n = self.dim;
        MixtureParams {
            pis: self.pis.row(j).to_vec(),
            mus: (0..k)
                .map(|c| self.mus.row(j).to_vec()[c * n..(c + 1) * n].to_vec())
                .collect(),
            sigmas: (0..k)
                .map(|c| self.sigmas.row(j).to_vec()[c * n..(c + 1) * n].to_vec())
                .collect(),
        }
    }
}

/// Vectorized [`mdn_head`] over raw output rows.
pub fn mdn_head_batch(
    raw: &Array2<f64>,
    k: usize,
    n: usize,
    sigma_scale: f64,
) -> Result<MixtureBatch> {
    let stride = 2 * n + 1;
    if raw.ncols() != stride * k {
        return Err(NeuralError::Dimension(format!(
            "raw output has {} slots, expected (2*{n}+1)*{k}",
            raw.ncols()
        )));
    }
    let m = raw.nrows();
    let floor = SIGMA_FLOOR_FRACTION * sigma_scale;
    let mut pis = Array2::zeros((m, k));
    let mut mus = Array2::zeros((m, k * n));
    let mut sigmas = Array2::zeros((m, k * n));
    for j in 0..m {
        let row = raw.row(j);
        let mut max_logit = f64::NEG_INFINITY;
        for c in 0..k {
            let base = stride * c;
            for d in 0..n {
                mus[[j, c * n + d]] = row[base + d].max(0.0);
                sigmas[[j, c * n + d]] = (sigma_scale * sigmoid(row[base + n + d])).max(floor);
            }
            max_logit = max_logit.max(row[base + 2 * n]);
        }
        let mut total = 0.0;
        for c in 0..k {
            let e = (row[stride * c + 2 * n] - max_logit).exp();
            pis[[j, c]] = e;
            total += e;
        }
        for c in 0..k {
            pis[[j, c]] /= total;
        }
    }
    Ok(MixtureBatch {
        pis,
        mus,
        sigmas,
        components: k,
        dim: n,
        sigma_scale,
    })
}

/// Batch NLL plus its gradient with respect to the raw output slots.
///
/// Returns `(nll_sum, d nll / d raw)`; `raw` is needed for the ReLU and
/// sigmoid chain rules.
pub fn mdn_nll_grad_raw(
    raw: &Array2<f64>,
    mix: &MixtureBatch,
    targets: &Array2<f64>,
) -> Result<(f64, Array2<f64>)> {
    let (m, k, n) = (mix.len(), mix.components, mix.dim);
    if targets.nrows() != m || targets.ncols() != n {
        return Err(NeuralError::Dimension(format!(
            "targets are {:?}, expected ({m}, {n})",
            targets.shape()
        )));
    }
    let stride = 2 * n + 1;
    let floor = SIGMA_FLOOR_FRACTION * mix.sigma_scale;
    let mut grad = Array2::zeros((m, stride * k));
    let mut total = 0.0;
    let mut weighted = vec![0.0f64; k];
    for j in 0..m {
        let x = targets.row(j);
        for (c, w) in weighted.iter_mut().enumerate() {
            *w = mix.pis[[j, c]].ln() + log_normal(mix, j, c, &x);
        }
        let max_w = weighted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max_w + weighted.iter().map(|w| (w - max_w).exp()).sum::<f64>().ln();
        let nll = -lse;
        if !nll.is_finite() {
            return Err(NeuralError::NonFinite { sample: j });
        }
        total += nll;
        for c in 0..k {
            let resp = (weighted[c] - lse).exp();
            let base = stride * c;
            // weight logits through the softmax: d nll / d logit = pi - resp
            grad[[j, base + 2 * n]] = mix.pis[[j, c]] - resp;
            for d in 0..n {
                let mu = mix.mus[[j, c * n + d]];
                let sigma = mix.sigmas[[j, c * n + d]];
                let diff = mu - x[d];
                // mean slots: ReLU mask on the raw value
                if raw[[j, base + d]] > 0.0 {
                    grad[[j, base + d]] = resp * diff / (sigma * sigma);
                }
                // sigma slots: scaled sigmoid, zero once clamped at the floor
                if sigma > floor {
                    let s = sigma / mix.sigma_scale;
                    let dsig_draw = mix.sigma_scale * s * (1.0 - s);
                    let dnll_dsigma = resp * (1.0 / sigma - diff * diff / (sigma * sigma * sigma));
                    grad[[j, base + n + d]] = dnll_dsigma * dsig_draw;
                }
            }
        }
    }
    Ok((total, grad))
}

fn log_normal(mix: &MixtureBatch, j: usize, c: usize, x: &ArrayView1<f64>) -> f64 {
    let n = mix.dim;
    let mut logp = -0.5 * n as f64 * LOG_TWO_PI;
    for d in 0..n {
        let sigma = mix.sigmas[[j, c * n + d]];
        let z = (x[d] - mix.mus[[j, c * n + d]]) / sigma;
        logp -= sigma.ln() + 0.5 * z * z;
    }
    logp
}
