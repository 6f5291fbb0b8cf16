//! Dense feed-forward engine: specs, parameters, forward pass and analytic
//! backpropagation.
//!
//! Inputs are batches with one sample per row. Weight matrices are stored
//! `(fan_in, fan_out)`, so a layer computes `a.dot(w) + b`.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{NeuralError, Result};
use crate::util::{stream_rng, uniform_in};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HiddenActivation {
    Tanh,
    Relu,
}

/// What the raw output layer parameterizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum OutputHead {
    /// Raw linear outputs (regression).
    Linear,
    /// Gaussian-mixture parameters: `components` triples of
    /// (means, sigmas, weight logit); requires raw width `(2n+1) K`.
    Mdn { components: usize, sigma_scale: f64 },
}

/// Architecture plus regularization coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNetSpec {
    /// Input, hidden..., raw output widths.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: HiddenActivation,
    pub output_head: OutputHead,
    /// L2 coefficient on weights.
    pub alpha_w: f64,
    /// L2 coefficient on biases.
    pub alpha_b: f64,
}

impl DenseNetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(NeuralError::Spec(
                "need at least one hidden layer (input, hidden, output)".into(),
            ));
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(NeuralError::Spec("zero-width layer".into()));
        }
        if let OutputHead::Mdn {
            components,
            sigma_scale,
        } = self.output_head
        {
            if components == 0 {
                return Err(NeuralError::Spec("mdn head needs K >= 1".into()));
            }
            if !(sigma_scale > 0.0) {
                return Err(NeuralError::Spec("sigma_scale must be positive".into()));
            }
            self.mdn_dims()?;
        }
        if !(self.alpha_w >= 0.0 && self.alpha_b >= 0.0) {
            return Err(NeuralError::Spec("negative regularization".into()));
        }
        Ok(())
    }

    /// Number of weight layers.
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("non-empty sizes")
    }

    /// For an MDN head: `(K, n)` such that the raw width is `(2n+1) K`.
    pub fn mdn_dims(&self) -> Result<(usize, usize)> {
        let OutputHead::Mdn { components, .. } = self.output_head else {
            return Err(NeuralError::Spec("not an mdn head".into()));
        };
        let out = self.output_dim();
        if out % components != 0 || (out / components) % 2 == 0 {
            return Err(NeuralError::Spec(format!(
                "raw width {out} is not (2n+1)*{components}"
            )));
        }
        Ok((components, (out / components - 1) / 2))
    }

    /// Convenience constructor: hidden widths between `input` and `output`.
    pub fn with_hidden(
        input: usize,
        hidden: &[usize],
        output: usize,
        activation: HiddenActivation,
        head: OutputHead,
        alpha_w: f64,
        alpha_b: f64,
    ) -> Self {
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(output);
        Self {
            layer_sizes,
            hidden_activation: activation,
            output_head: head,
            alpha_w,
            alpha_b,
        }
    }
}

/// Per-layer weight matrices and bias vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Parameters {
    pub fn zeros(spec: &DenseNetSpec) -> Self {
        let weights = spec
            .layer_sizes
            .windows(2)
            .map(|w| Array2::zeros((w[0], w[1])))
            .collect();
        let biases = spec.layer_sizes[1..]
            .iter()
            .map(|&s| Array1::zeros(s))
            .collect();
        Self { weights, biases }
    }

    /// Scaled uniform fan-in initialization: `W ~ U(-s, s)` with
    /// `s = 1/sqrt(fan_in)`, biases zero. Stream 0 of `seed`.
    pub fn init(spec: &DenseNetSpec, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0);
        let mut params = Self::zeros(spec);
        for w in &mut params.weights {
            let s = 1.0 / (w.shape()[0] as f64).sqrt();
            for v in w.iter_mut() {
                *v = uniform_in(&mut rng, -s, s);
            }
        }
        params
    }

    pub fn num_values(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Flattens to a single array: per layer, the weight matrix row-major,
    /// then the bias vector.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_values());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn from_flat(spec: &DenseNetSpec, flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(spec);
        let mut cursor = 0usize;
        for (w, b) in params.weights.iter_mut().zip(params.biases.iter_mut()) {
            let wn = w.len();
            let bn = b.len();
            if cursor + wn + bn > flat.len() {
                return Err(NeuralError::Checkpoint("parameter array too short".into()));
            }
            w.assign(
                &Array2::from_shape_vec(w.raw_dim(), flat[cursor..cursor + wn].to_vec())
                    .expect("shape matches"),
            );
            cursor += wn;
            b.assign(&Array1::from_vec(flat[cursor..cursor + bn].to_vec()));
            cursor += bn;
        }
        if cursor != flat.len() {
            return Err(NeuralError::Checkpoint(format!(
                "parameter array has {} values, spec needs {cursor}",
                flat.len()
            )));
        }
        Ok(params)
    }

    /// `(sum of squared weights, sum of squared biases)`.
    pub fn squared_sums(&self) -> (f64, f64) {
        let w2 = self.weights.iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum();
        let b2 = self.biases.iter().map(|b| b.iter().map(|v| v * v).sum::<f64>()).sum();
        (w2, b2)
    }

    pub fn scaled_add(&mut self, other: &Parameters, factor: f64) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            w.scaled_add(factor, o);
        }
        for (b, o) in self.biases.iter_mut().zip(&other.biases) {
            b.scaled_add(factor, o);
        }
    }
}

/// Intermediate activations kept for backpropagation. `layer_inputs[l]` is
/// the input batch to weight layer `l`; the last entry is the raw output.
pub struct ForwardCache {
    pub layer_inputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn raw_output(&self) -> &Array2<f64> {
        self.layer_inputs.last().expect("cache is populated")
    }
}

fn apply_hidden(a: &mut Array2<f64>, act: HiddenActivation) {
    match act {
        HiddenActivation::Tanh => a.mapv_inplace(f64::tanh),
        HiddenActivation::Relu => a.mapv_inplace(|v| v.max(0.0)),
    }
}

/// Batch forward pass returning the raw (pre-head) outputs.
pub fn forward_batch(spec: &DenseNetSpec, params: &Parameters, x: &Array2<f64>) -> Array2<f64> {
    forward_cached(spec, params, x).0
}

/// Batch forward pass keeping every layer input for backpropagation.
pub fn forward_cached(
    spec: &DenseNetSpec,
    params: &Parameters,
    x: &Array2<f64>,
) -> (Array2<f64>, ForwardCache) {
    assert_eq!(
        x.ncols(),
        spec.input_dim(),
        "input width {} does not match spec input {}",
        x.ncols(),
        spec.input_dim()
    );
    let depth = spec.depth();
    let mut layer_inputs = Vec::with_capacity(depth + 1);
    layer_inputs.push(x.clone());
    for l in 0..depth {
        let mut z = layer_inputs[l].dot(&params.weights[l]);
        z += &params.biases[l];
        if l + 1 < depth {
            apply_hidden(&mut z, spec.hidden_activation);
        }
        layer_inputs.push(z);
    }
    let out = layer_inputs.last().expect("depth >= 1").clone();
    (out, ForwardCache { layer_inputs })
}

/// Single-vector forward pass (raw outputs; a linear head returns these
/// directly).
pub fn forward(spec: &DenseNetSpec, params: &Parameters, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != spec.input_dim() {
        return Err(NeuralError::Dimension(format!(
            "input has {} entries, spec expects {}",
            input.len(),
            spec.input_dim()
        )));
    }
    let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).expect("shape");
    Ok(forward_batch(spec, params, &x).row(0).to_vec())
}

/// Parameter gradients plus the gradient with respect to the input batch.
pub struct Gradients {
    pub params: Parameters,
    pub input: Array2<f64>,
}

/// Backpropagates `d loss / d raw_output` through the network.
pub fn backprop(
    spec: &DenseNetSpec,
    params: &Parameters,
    cache: &ForwardCache,
    output_grad: &Array2<f64>,
) -> Gradients {
    let depth = spec.depth();
    let mut grads = Parameters::zeros(spec);
    let mut delta = output_grad.clone();
    for l in (0..depth).rev() {
        grads.weights[l] = cache.layer_inputs[l].t().dot(&delta);
        grads.biases[l] = delta.sum_axis(Axis(0));
        let mut upstream = delta.dot(&params.weights[l].t());
        if l > 0 {
            // chain through the hidden activation, whose output is the
            // cached input of layer l
            let act = &cache.layer_inputs[l];
            match spec.hidden_activation {
                HiddenActivation::Tanh => {
                    upstream.zip_mut_with(act, |g, &a| *g *= 1.0 - a * a);
                }
                HiddenActivation::Relu => {
                    upstream.zip_mut_with(act, |g, &a| {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    });
                }
            }
        }
        delta = upstream;
    }
    Gradients {
        params: grads,
        input: delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> DenseNetSpec {
        DenseNetSpec::with_hidden(
            2,
            &[3],
            2,
            HiddenActivation::Tanh,
            OutputHead::Linear,
            0.0,
            0.0,
        )
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let spec = tiny_spec();
        let params = Parameters::zeros(&spec);
        let out = forward(&spec, &params, &[0.7, -1.3]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_like_single_path_passes_input_through() {
        // One hidden relu unit per input wired as identity.
        let spec = DenseNetSpec::with_hidden(
            2,
            &[2],
            2,
            HiddenActivation::Relu,
            OutputHead::Linear,
            0.0,
            0.0,
        );
        let mut params = Parameters::zeros(&spec);
        params.weights[0][[0, 0]] = 1.0;
        params.weights[0][[1, 1]] = 1.0;
        params.weights[1][[0, 0]] = 1.0;
        params.weights[1][[1, 1]] = 1.0;
        let out = forward(&spec, &params, &[0.25, 3.5]).unwrap();
        assert_eq!(out, vec![0.25, 3.5]);
    }

    #[test]
    fn forward_matches_hand_rolled_matrix_arithmetic() {
        let spec = tiny_spec();
        let params = Parameters::init(&spec, 42);
        let input = [0.3, -0.8];
        // hand evaluation: h = tanh(x W0 + b0), out = h W1 + b1
        let mut hidden = [0.0f64; 3];
        for j in 0..3 {
            let mut z = params.biases[0][j];
            for i in 0..2 {
                z += input[i] * params.weights[0][[i, j]];
            }
            hidden[j] = z.tanh();
        }
        let mut expect = [0.0f64; 2];
        for j in 0..2 {
            let mut z = params.biases[1][j];
            for i in 0..3 {
                z += hidden[i] * params.weights[1][[i, j]];
            }
            expect[j] = z;
        }
        let out = forward(&spec, &params, &input).unwrap();
        for (o, e) in out.iter().zip(expect.iter()) {
            assert!((o - e).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let spec = tiny_spec();
        let params = Parameters::zeros(&spec);
        assert!(forward(&spec, &params, &[1.0]).is_err());
    }

    #[test]
    fn flatten_round_trips() {
        let spec = tiny_spec();
        let params = Parameters::init(&spec, 7);
        let flat = params.flatten();
        let back = Parameters::from_flat(&spec, &flat).unwrap();
        assert_eq!(params, back);
        assert!(Parameters::from_flat(&spec, &flat[..flat.len() - 1]).is_err());
    }

    #[test]
    fn mdn_dims_checks_width() {
        let good = DenseNetSpec::with_hidden(
            4,
            &[8],
            (2 * 3 + 1) * 2,
            HiddenActivation::Tanh,
            OutputHead::Mdn {
                components: 2,
                sigma_scale: 0.1,
            },
            0.0,
            0.0,
        );
        assert_eq!(good.mdn_dims().unwrap(), (2, 3));
        let bad = DenseNetSpec::with_hidden(
            4,
            &[8],
            13,
            HiddenActivation::Tanh,
            OutputHead::Mdn {
                components: 2,
                sigma_scale: 0.1,
            },
            0.0,
            0.0,
        );
        assert!(bad.validate().is_err());
    }
}
