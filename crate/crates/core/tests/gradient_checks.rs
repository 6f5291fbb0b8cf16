//! Central-finite-difference oracles for every analytic gradient path:
//! plain regression, the mixture NLL (through the ReLU/sigmoid/softmax
//! head), and the forward-consistent loss (through a frozen surrogate).

mod common;

use common::{analytic_grad, worst_gradient_gap};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use rayleigh_fwmdn::neural::{
    forward_batch, DenseNetSpec, HiddenActivation, LossKind, Model, OutputHead, Parameters,
    Standardization, TrainingDigest,
};

fn random_matrix(rng: &mut ChaCha12Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(lo..hi))
}

fn surrogate(n_in: usize, n_out: usize, seed: u64) -> Model {
    let spec = DenseNetSpec::with_hidden(
        n_in,
        &[5],
        n_out,
        HiddenActivation::Tanh,
        OutputHead::Linear,
        0.0,
        0.0,
    );
    Model {
        params: Parameters::init(&spec, seed),
        standardization: Standardization {
            mean: vec![0.15; n_in],
            std: vec![1.4; n_in],
        },
        spec,
        seed,
        digest: TrainingDigest::default(),
        train_config: None,
    }
}

/// Keeps the head away from the ReLU kink and the sigma floor so central
/// differences see a smooth function.
fn assert_away_from_kinks(spec: &DenseNetSpec, params: &Parameters, inputs: &Array2<f64>) {
    let raw = forward_batch(spec, params, inputs);
    let (k, n) = spec.mdn_dims().unwrap();
    let stride = 2 * n + 1;
    for row in raw.rows() {
        for c in 0..k {
            for d in 0..n {
                assert!(
                    row[stride * c + d].abs() > 1e-3,
                    "mean slot too close to the ReLU kink for finite differences"
                );
            }
        }
    }
}

#[test]
fn squared_error_gradients_match_finite_differences() {
    let spec = DenseNetSpec::with_hidden(
        3,
        &[6, 5],
        2,
        HiddenActivation::Tanh,
        OutputHead::Linear,
        1e-3,
        2e-3,
    );
    let params = Parameters::init(&spec, 11);
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let inputs = random_matrix(&mut rng, 4, 3, -1.0, 1.0);
    let targets = random_matrix(&mut rng, 4, 2, -1.0, 1.0);
    let gap = worst_gradient_gap(&spec, &params, &LossKind::SquaredError, &inputs, &targets, None);
    assert!(gap < 1e-5, "worst relative gap {gap:.3e}");
}

#[test]
fn relu_hidden_gradients_match_finite_differences() {
    let spec = DenseNetSpec::with_hidden(
        2,
        &[7],
        2,
        HiddenActivation::Relu,
        OutputHead::Linear,
        0.0,
        0.0,
    );
    let params = Parameters::init(&spec, 5);
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let inputs = random_matrix(&mut rng, 5, 2, 0.2, 1.0);
    let targets = random_matrix(&mut rng, 5, 2, -1.0, 1.0);
    let gap = worst_gradient_gap(&spec, &params, &LossKind::SquaredError, &inputs, &targets, None);
    assert!(gap < 1e-5, "worst relative gap {gap:.3e}");
}

#[test]
fn mdn_nll_gradients_match_finite_differences() {
    let (k, n) = (2, 2);
    let spec = DenseNetSpec::with_hidden(
        3,
        &[6],
        (2 * n + 1) * k,
        HiddenActivation::Tanh,
        OutputHead::Mdn {
            components: k,
            sigma_scale: 0.8,
        },
        1e-3,
        1e-3,
    );
    let mut params = Parameters::init(&spec, 21);
    // bias the mean slots positive so ReLU is active and smooth
    let last = params.biases.len() - 1;
    for c in 0..k {
        for d in 0..n {
            params.biases[last][(2 * n + 1) * c + d] = 0.6 + 0.2 * c as f64;
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let inputs = random_matrix(&mut rng, 5, 3, -1.0, 1.0);
    let targets = random_matrix(&mut rng, 5, n, 0.2, 1.0);
    assert_away_from_kinks(&spec, &params, &inputs);
    let gap = worst_gradient_gap(&spec, &params, &LossKind::MdnNll, &inputs, &targets, None);
    assert!(gap < 1e-5, "worst relative gap {gap:.3e}");
}

#[test]
fn fwmdn_gradients_match_finite_differences() {
    let (k, n, n_curve) = (2, 2, 4);
    let spec = DenseNetSpec::with_hidden(
        n_curve,
        &[6],
        (2 * n + 1) * k,
        HiddenActivation::Tanh,
        OutputHead::Mdn {
            components: k,
            sigma_scale: 0.8,
        },
        1e-3,
        1e-3,
    );
    let mut params = Parameters::init(&spec, 33);
    let last = params.biases.len() - 1;
    for c in 0..k {
        for d in 0..n {
            params.biases[last][(2 * n + 1) * c + d] = 0.7 + 0.15 * c as f64;
        }
    }
    let frozen = surrogate(n, n_curve, 8);
    let mut rng = ChaCha12Rng::seed_from_u64(6);
    let inputs = random_matrix(&mut rng, 4, n_curve, -1.0, 1.0);
    let targets = random_matrix(&mut rng, 4, n, 0.2, 1.0);
    let curves = random_matrix(&mut rng, 4, n_curve, -0.5, 0.5);
    assert_away_from_kinks(&spec, &params, &inputs);
    let before = frozen.params.clone();
    let kind = LossKind::FwMdn { surrogate: &frozen };
    let gap = worst_gradient_gap(&spec, &params, &kind, &inputs, &targets, Some(&curves));
    assert!(gap < 1e-5, "worst relative gap {gap:.3e}");
    // freezing contract: the surrogate is untouched by every evaluation
    assert_eq!(frozen.params, before);
}

#[test]
fn regularization_gradient_is_two_alpha_times_parameter() {
    let spec = DenseNetSpec::with_hidden(
        2,
        &[3],
        1,
        HiddenActivation::Tanh,
        OutputHead::Linear,
        0.25,
        0.5,
    );
    let params = Parameters::init(&spec, 2);
    // zero task gradient: targets equal outputs
    let inputs = Array2::from_shape_vec((1, 2), vec![0.3, -0.4]).unwrap();
    let out = forward_batch(&spec, &params, &inputs);
    let flat = params.flatten();
    let grad = analytic_grad(&spec, &flat, &LossKind::SquaredError, &inputs, &out, None);
    let reconstructed = Parameters::from_flat(&spec, &grad).unwrap();
    for (g, w) in reconstructed.weights.iter().zip(&params.weights) {
        for (gv, wv) in g.iter().zip(w.iter()) {
            assert!((gv - 2.0 * 0.25 * wv).abs() < 1e-12);
        }
    }
    for (g, b) in reconstructed.biases.iter().zip(&params.biases) {
        for (gv, bv) in g.iter().zip(b.iter()) {
            assert!((gv - 2.0 * 0.5 * bv).abs() < 1e-12);
        }
    }
}
