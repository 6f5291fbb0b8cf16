//! Mini-batch training with adaptive moments, early stopping and a
//! deterministic schedule.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::checkpoint::{Model, Standardization, TrainConfigEcho, TrainingDigest};
use super::loss::{batch_loss, batch_loss_and_grad, LossKind};
use super::net::{DenseNetSpec, Parameters};
use super::{NeuralError, Result};
use crate::dataset::{apply_noise_matrix, NoiseSpec};
use crate::util::{parallel_map_indexed, stream_rng, uniform_in, PARALLEL_CHUNK};

/// Optimizer and schedule hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Adam step size.
    pub step_size: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stopping patience, in epochs without validation improvement.
    pub patience: usize,
    pub seed: u64,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    /// Optional multiplicative noise applied once to the train and
    /// validation inputs (the loss still targets the clean data).
    #[serde(default)]
    pub input_noise: Option<NoiseSpec>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-3,
            batch_size: 256,
            max_epochs: 400,
            patience: 20,
            seed: 0,
            clip_norm: 10.0,
            input_noise: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(NeuralError::Spec(
                "step size, batch size and epochs must be positive".into(),
            ));
        }
        if self.patience == 0 || !(self.clip_norm > 0.0) {
            return Err(NeuralError::Spec(
                "patience and clip norm must be positive".into(),
            ));
        }
        if let Some(noise) = &self.input_noise {
            noise
                .validate()
                .map_err(|e| NeuralError::Spec(e.to_string()))?;
        }
        Ok(())
    }

    fn echo(&self) -> TrainConfigEcho {
        TrainConfigEcho {
            step_size: self.step_size,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            clip_norm: self.clip_norm,
            input_noise: self.input_noise,
        }
    }
}

/// Per-epoch losses: mean per-sample task loss over the epoch's minibatches
/// plus the L2 penalty (train), and the mean task loss on the validation
/// set (the early-stopping monitor, no penalty).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub stopped_early: bool,
}

/// Everything a training run needs besides the spec and config.
pub struct TrainData<'a> {
    pub train_inputs: &'a Array2<f64>,
    pub train_targets: &'a Array2<f64>,
    pub val_inputs: &'a Array2<f64>,
    pub val_targets: &'a Array2<f64>,
    /// Clean curves for the forward-consistency term; only consulted by the
    /// FW-MDN loss (defaults to the clean inputs).
    pub train_curves: Option<&'a Array2<f64>>,
    pub val_curves: Option<&'a Array2<f64>>,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Adam {
    m: Parameters,
    v: Parameters,
    t: u64,
}

impl Adam {
    fn new(spec: &DenseNetSpec) -> Self {
        Self {
            m: Parameters::zeros(spec),
            v: Parameters::zeros(spec),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut Parameters, grads: &Parameters, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for layer in 0..params.weights.len() {
            for (((w, g), m), v) in params.weights[layer]
                .iter_mut()
                .zip(grads.weights[layer].iter())
                .zip(self.m.weights[layer].iter_mut())
                .zip(self.v.weights[layer].iter_mut())
            {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
            }
            for (((b, g), m), v) in params.biases[layer]
                .iter_mut()
                .zip(grads.biases[layer].iter())
                .zip(self.m.biases[layer].iter_mut())
                .zip(self.v.biases[layer].iter_mut())
            {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *b -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
            }
        }
    }
}

fn gather_rows(matrix: &Array2<f64>, indices: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((indices.len(), matrix.ncols()));
    for (row, &idx) in indices.iter().enumerate() {
        out.row_mut(row).assign(&matrix.row(idx));
    }
    out
}

/// Mean per-sample task loss over a full set, evaluated in fixed chunks.
fn mean_task_loss(
    spec: &DenseNetSpec,
    params: &Parameters,
    kind: &LossKind,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    curves: Option<&Array2<f64>>,
    threads: usize,
) -> Result<f64> {
    let n = inputs.nrows();
    let n_chunks = n.div_ceil(PARALLEL_CHUNK);
    let partials = parallel_map_indexed(n_chunks, threads, |c| {
        let lo = c * PARALLEL_CHUNK;
        let hi = (lo + PARALLEL_CHUNK).min(n);
        let idx: Vec<usize> = (lo..hi).collect();
        batch_loss(
            spec,
            params,
            kind,
            &gather_rows(inputs, &idx),
            &gather_rows(targets, &idx),
            curves.map(|m| gather_rows(m, &idx)).as_ref(),
        )
    });
    let mut total = 0.0;
    for p in partials {
        total += p?;
    }
    Ok(total / n as f64)
}

/// Trains a network and returns the best-on-validation model plus the log.
///
/// Deterministic for a fixed `(spec, data, config)` regardless of the
/// thread count: batches are chunked on fixed boundaries and reduced in
/// order.
pub fn train(
    spec: &DenseNetSpec,
    data: &TrainData,
    kind: &LossKind,
    cfg: &TrainConfig,
    threads: usize,
) -> Result<(Model, TrainingLog)> {
    spec.validate()?;
    cfg.validate()?;
    if data.train_inputs.nrows() == 0 {
        return Err(NeuralError::Spec("empty training set".into()));
    }

    // Optional static input noising; losses keep targeting clean data.
    let (train_inputs, val_inputs);
    let (train_x, val_x): (&Array2<f64>, &Array2<f64>) = match &cfg.input_noise {
        Some(spec_noise) => {
            train_inputs = apply_noise_matrix(data.train_inputs, spec_noise);
            let shifted = NoiseSpec {
                seed: spec_noise.seed.wrapping_add(1),
                ..*spec_noise
            };
            val_inputs = apply_noise_matrix(data.val_inputs, &shifted);
            (&train_inputs, &val_inputs)
        }
        None => (data.train_inputs, data.val_inputs),
    };

    let standardization = Standardization::fit(train_x);
    let train_x = standardization.apply(train_x);
    let val_x = standardization.apply(val_x);

    // For the FW-MDN loss the forward term compares against the clean
    // curves, which are the clean (unstandardized) inputs by default.
    let train_curves = data.train_curves.cloned().unwrap_or_else(|| data.train_inputs.clone());
    let val_curves = data.val_curves.cloned().unwrap_or_else(|| data.val_inputs.clone());
    let wants_curves = matches!(kind, LossKind::FwMdn { .. });
    let curves_for = |is_train: bool| -> Option<&Array2<f64>> {
        if wants_curves {
            Some(if is_train { &train_curves } else { &val_curves })
        } else {
            None
        }
    };

    let mut params = Parameters::init(spec, cfg.seed);
    init_output_bias(spec, &mut params, data.train_targets);
    let mut adam = Adam::new(spec);
    let n_train = train_x.nrows();
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut shuffle_rng = stream_rng(cfg.seed, 1);

    let mut log = TrainingLog::default();
    let mut best_val = f64::INFINITY;
    let mut best_params = params.clone();
    let mut best_epoch = 0usize;
    let mut stale = 0usize;

    for epoch in 0..cfg.max_epochs {
        for i in (1..n_train).rev() {
            let j = uniform_in(&mut shuffle_rng, 0.0, (i + 1) as f64) as usize;
            order.swap(i, j.min(i));
        }
        let mut epoch_task = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let bx = gather_rows(&train_x, batch);
            let bt = gather_rows(data.train_targets, batch);
            let bc = curves_for(true).map(|m| gather_rows(m, batch));
            let eval = accumulate_batch(spec, &params, kind, &bx, &bt, bc.as_ref(), threads)
                .map_err(|e| match e {
                    NeuralError::NonFinite { sample } => NeuralError::TrainingFault {
                        epoch,
                        detail: format!("non-finite loss (sample {sample})"),
                    },
                    other => other,
                })?;
            epoch_task += eval.task_loss;
            let mut grads = eval.grads;
            let scale = 1.0 / batch.len() as f64;
            for w in &mut grads.weights {
                w.mapv_inplace(|v| v * scale);
            }
            for b in &mut grads.biases {
                b.mapv_inplace(|v| v * scale);
            }
            // L2 terms differentiate to 2 alpha p
            grads.scaled_add_weights(&params, 2.0 * spec.alpha_w, 2.0 * spec.alpha_b);
            clip_gradients(&mut grads, cfg.clip_norm);
            adam.step(&mut params, &grads, cfg.step_size);
        }
        let (w2, b2) = params.squared_sums();
        let train_loss = epoch_task / n_train as f64 + spec.alpha_w * w2 + spec.alpha_b * b2;
        let val_loss = mean_task_loss(
            spec,
            &params,
            kind,
            &val_x,
            data.val_targets,
            curves_for(false),
            threads,
        )?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(NeuralError::TrainingFault {
                epoch,
                detail: format!("diverged: train {train_loss}, validation {val_loss}"),
            });
        }
        log.epochs.push(EpochStats {
            epoch,
            train_loss,
            validation_loss: val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_params = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    log.best_epoch = best_epoch;
    log.best_validation_loss = best_val;
    let final_train_loss = log.epochs.last().map(|e| e.train_loss).unwrap_or(f64::NAN);
    Ok((
        Model {
            spec: spec.clone(),
            params: best_params,
            standardization,
            seed: cfg.seed,
            digest: TrainingDigest {
                epochs_run: log.epochs.len(),
                best_epoch,
                best_validation_loss: best_val,
                final_train_loss,
            },
            train_config: Some(cfg.echo()),
        },
        log,
    ))
}

/// Centers the output layer before training: a linear head starts at the
/// target mean; an MDN head starts its component means spread around the
/// target mean and its sigma and weight slots at zero.
fn init_output_bias(spec: &DenseNetSpec, params: &mut Parameters, targets: &Array2<f64>) {
    let m = targets.nrows().max(1) as f64;
    let mut mean = vec![0.0; targets.ncols()];
    let mut var = vec![0.0; targets.ncols()];
    for row in targets.rows() {
        for (d, v) in row.iter().enumerate() {
            mean[d] += v;
        }
    }
    for v in &mut mean {
        *v /= m;
    }
    for row in targets.rows() {
        for (d, v) in row.iter().enumerate() {
            var[d] += (v - mean[d]) * (v - mean[d]);
        }
    }
    let last = params.biases.len() - 1;
    match spec.output_head {
        super::net::OutputHead::Linear => {
            for (d, b) in params.biases[last].iter_mut().enumerate() {
                *b = mean[d];
            }
        }
        super::net::OutputHead::Mdn { components, .. } => {
            let (k, n) = (components, (spec.output_dim() / components - 1) / 2);
            let stride = 2 * n + 1;
            for c in 0..k {
                // deterministic spread so components start on distinct tracks
                let offset = if k == 1 {
                    0.0
                } else {
                    (c as f64 / (k - 1) as f64) - 0.5
                };
                for d in 0..n {
                    let std = (var[d] / m).sqrt();
                    params.biases[last][stride * c + d] = mean[d] + offset * std;
                }
            }
        }
    }
}

fn clip_gradients(grads: &mut Parameters, max_norm: f64) {
    let (w2, b2) = grads.squared_sums();
    let norm = (w2 + b2).sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for w in &mut grads.weights {
            w.mapv_inplace(|v| v * scale);
        }
        for b in &mut grads.biases {
            b.mapv_inplace(|v| v * scale);
        }
    }
}

/// Gradient of one minibatch, accumulated over fixed chunks in index order.
fn accumulate_batch(
    spec: &DenseNetSpec,
    params: &Parameters,
    kind: &LossKind,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    curves: Option<&Array2<f64>>,
    threads: usize,
) -> Result<super::loss::BatchEval> {
    let n = inputs.nrows();
    if threads <= 1 || n <= PARALLEL_CHUNK {
        return batch_loss_and_grad(spec, params, kind, inputs, targets, curves);
    }
    let n_chunks = n.div_ceil(PARALLEL_CHUNK);
    let partials = parallel_map_indexed(n_chunks, threads, |c| {
        let lo = c * PARALLEL_CHUNK;
        let hi = (lo + PARALLEL_CHUNK).min(n);
        let idx: Vec<usize> = (lo..hi).collect();
        batch_loss_and_grad(
            spec,
            params,
            kind,
            &gather_rows(inputs, &idx),
            &gather_rows(targets, &idx),
            curves.map(|m| gather_rows(m, &idx)).as_ref(),
        )
    });
    let mut total: Option<super::loss::BatchEval> = None;
    for p in partials {
        let p = p?;
        match &mut total {
            None => total = Some(p),
            Some(acc) => {
                acc.task_loss += p.task_loss;
                acc.grads.scaled_add(&p.grads, 1.0);
            }
        }
    }
    Ok(total.expect("at least one chunk"))
}

impl Parameters {
    /// Adds `factor_w * weights` and `factor_b * biases` of another
    /// parameter set (the L2 gradient contribution).
    fn scaled_add_weights(&mut self, other: &Parameters, factor_w: f64, factor_b: f64) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            w.scaled_add(factor_w, o);
        }
        for (b, o) in self.biases.iter_mut().zip(&other.biases) {
            b.scaled_add(factor_b, o);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::net::{HiddenActivation, OutputHead};

    fn toy_regression() -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
        // y = 2x - 1 with a pinch of structure
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let x = Array2::from_shape_vec((n, 1), xs.clone()).unwrap();
        let t = Array2::from_shape_vec(
            (n, 1),
            xs.iter().map(|v| 2.0 * v - 1.0 + 0.3 * (6.0 * v).sin()).collect(),
        )
        .unwrap();
        let vx = x.slice(ndarray::s![..40, ..]).to_owned();
        let vt = t.slice(ndarray::s![..40, ..]).to_owned();
        (x, t, vx, vt)
    }

    #[test]
    fn training_reduces_validation_loss_and_is_deterministic() {
        let (x, t, vx, vt) = toy_regression();
        let spec = DenseNetSpec::with_hidden(
            1,
            &[16, 16],
            1,
            HiddenActivation::Tanh,
            OutputHead::Linear,
            0.0,
            0.0,
        );
        let cfg = TrainConfig {
            max_epochs: 60,
            batch_size: 32,
            patience: 60,
            seed: 3,
            ..TrainConfig::default()
        };
        let data = TrainData {
            train_inputs: &x,
            train_targets: &t,
            val_inputs: &vx,
            val_targets: &vt,
            train_curves: None,
            val_curves: None,
        };
        let (model_a, log_a) = train(&spec, &data, &LossKind::SquaredError, &cfg, 1).unwrap();
        assert!(log_a.epochs.last().unwrap().validation_loss < log_a.epochs[0].validation_loss);
        // bit-identical rerun
        let (model_b, log_b) = train(&spec, &data, &LossKind::SquaredError, &cfg, 1).unwrap();
        assert_eq!(model_a.params, model_b.params);
        assert_eq!(
            log_a.epochs.last().unwrap().train_loss,
            log_b.epochs.last().unwrap().train_loss
        );
        // chunked multi-thread path reproduces the single-thread result
        let cfg_big_batch = TrainConfig {
            batch_size: 200,
            max_epochs: 3,
            ..cfg.clone()
        };
        let (m1, _) = train(&spec, &data, &LossKind::SquaredError, &cfg_big_batch, 1).unwrap();
        let (m4, _) = train(&spec, &data, &LossKind::SquaredError, &cfg_big_batch, 4).unwrap();
        for (a, b) in m1.params.weights.iter().zip(&m4.params.weights) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn early_stopping_restores_the_best_epoch() {
        let (x, t, vx, vt) = toy_regression();
        let spec = DenseNetSpec::with_hidden(
            1,
            &[8],
            1,
            HiddenActivation::Tanh,
            OutputHead::Linear,
            0.0,
            0.0,
        );
        let cfg = TrainConfig {
            max_epochs: 200,
            batch_size: 64,
            patience: 5,
            seed: 1,
            step_size: 3e-2,
            ..TrainConfig::default()
        };
        let data = TrainData {
            train_inputs: &x,
            train_targets: &t,
            val_inputs: &vx,
            val_targets: &vt,
            train_curves: None,
            val_curves: None,
        };
        let (model, log) = train(&spec, &data, &LossKind::SquaredError, &cfg, 1).unwrap();
        assert_eq!(model.digest.best_epoch, log.best_epoch);
        let best_logged = log
            .epochs
            .iter()
            .map(|e| e.validation_loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best_logged, log.best_validation_loss);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let bad = TrainConfig {
            step_size: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
