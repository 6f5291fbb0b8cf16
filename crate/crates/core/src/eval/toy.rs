//! Sinusoid toy experiment: a one-dimensional multivalued inverse problem
//! where a plain regression net fails and a small mixture model succeeds.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::metrics::{metric_m, r_squared};
use super::Result;
use crate::neural::{
    train, DenseNetSpec, HiddenActivation, LossKind, Model, OutputHead, TrainConfig,
};
use crate::util::{standard_normal, stream_rng, uniform_in};

/// `y = x + 0.3 sin(2 pi x) + eps` with `x ~ U(0,1)`,
/// `eps ~ U(-0.1, 0.1)`. Sample `i` uses RNG stream `i`.
pub fn toy_generate(n: usize, seed: u64) -> Vec<(f64, f64)> {
    (0..n as u64)
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let x = uniform_in(&mut rng, 0.0, 1.0);
            let eps = uniform_in(&mut rng, -0.1, 0.1);
            (x, toy_curve(x) + eps)
        })
        .collect()
}

/// The noise-free map.
pub fn toy_curve(x: f64) -> f64 {
    x + 0.3 * (2.0 * std::f64::consts::PI * x).sin()
}

/// Results of the toy comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToyReport {
    pub n_samples: usize,
    pub fnn_test_r_squared: f64,
    pub mdn_test_m: f64,
    pub mdn_components: usize,
}

/// Number of scatter points written for the plot files.
const SCATTER_POINTS: usize = 200;

/// Trains a regression net and a K = 4 mixture net on the same toy split
/// and scores both on the test partition. When `out_dir` is given, writes
/// `toy_fnn_scatter.csv` (predictions) and `toy_mdn_scatter.csv` (draws
/// from the full output mixture) for 200 test samples.
pub fn toy_experiment(seed: u64, out_dir: Option<&Path>, threads: usize) -> Result<ToyReport> {
    let n = 10_000;
    let samples = toy_generate(n, seed);
    let split = crate::dataset::split_dataset(n, seed.wrapping_add(1))?;

    let column = |idx: &[usize], pick_x: bool| -> Array2<f64> {
        Array2::from_shape_vec(
            (idx.len(), 1),
            idx.iter()
                .map(|&j| if pick_x { samples[j].0 } else { samples[j].1 })
                .collect(),
        )
        .expect("column shape")
    };
    // inverse direction: y -> x
    let train_in = column(&split.train, false);
    let train_out = column(&split.train, true);
    let val_in = column(&split.validation, false);
    let val_out = column(&split.validation, true);
    let test_in = column(&split.test, false);
    let test_out = column(&split.test, true);

    let data = crate::neural::TrainData {
        train_inputs: &train_in,
        train_targets: &train_out,
        val_inputs: &val_in,
        val_targets: &val_out,
        train_curves: None,
        val_curves: None,
    };

    let fnn_spec = DenseNetSpec::with_hidden(
        1,
        &[32, 32],
        1,
        HiddenActivation::Tanh,
        OutputHead::Linear,
        1e-5,
        1e-5,
    );
    let cfg = TrainConfig {
        max_epochs: 150,
        batch_size: 128,
        patience: 15,
        seed,
        ..TrainConfig::default()
    };
    let (fnn, _) = train(&fnn_spec, &data, &LossKind::SquaredError, &cfg, threads)?;

    let k = 4;
    let mdn_spec = DenseNetSpec::with_hidden(
        1,
        &[32, 32],
        (2 + 1) * k,
        HiddenActivation::Tanh,
        OutputHead::Mdn {
            components: k,
            sigma_scale: 0.2,
        },
        1e-5,
        1e-5,
    );
    let mdn_cfg = TrainConfig {
        max_epochs: 300,
        batch_size: 128,
        patience: 25,
        seed: seed.wrapping_add(2),
        ..TrainConfig::default()
    };
    let (mdn, _) = train(&mdn_spec, &data, &LossKind::MdnNll, &mdn_cfg, threads)?;

    let test_xs: Vec<Vec<f64>> = test_out.rows().into_iter().map(|r| r.to_vec()).collect();
    let fnn_preds: Vec<Vec<f64>> = test_in
        .rows()
        .into_iter()
        .map(|r| fnn.forward_one(&r.to_vec()))
        .collect::<crate::neural::Result<_>>()?;
    let fnn_r2 = r_squared(&fnn_preds, &test_xs)?;

    let mean_sets: Vec<Vec<Vec<f64>>> = test_in
        .rows()
        .into_iter()
        .map(|r| mdn.predict_means(&r.to_vec()))
        .collect::<crate::neural::Result<_>>()?;
    let m = metric_m(&mean_sets, &test_xs)?;

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_scatter_files(dir, seed, &mdn, &fnn, &test_in, &test_xs)?;
    }

    Ok(ToyReport {
        n_samples: n,
        fnn_test_r_squared: fnn_r2.overall,
        mdn_test_m: m.overall,
        mdn_components: k,
    })
}

/// Draws one value from a mixture: component by weight, then a Gaussian.
pub fn sample_mixture(
    mix: &crate::neural::MixtureParams,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Vec<f64> {
    let u = uniform_in(rng, 0.0, 1.0);
    let mut acc = 0.0;
    let mut pick = mix.components() - 1;
    for (k, &pi) in mix.pis.iter().enumerate() {
        acc += pi;
        if u < acc {
            pick = k;
            break;
        }
    }
    mix.mus[pick]
        .iter()
        .zip(&mix.sigmas[pick])
        .map(|(&mu, &sigma)| mu + sigma * standard_normal(rng))
        .collect()
}

fn write_scatter_files(
    dir: &Path,
    seed: u64,
    mdn: &Model,
    fnn: &Model,
    test_in: &Array2<f64>,
    test_xs: &[Vec<f64>],
) -> Result<()> {
    let mut fnn_lines = vec!["y,x_true,x_pred".to_string()];
    let mut mdn_lines = vec!["y,x_true,x_sampled".to_string()];
    let count = SCATTER_POINTS.min(test_in.nrows());
    for j in 0..count {
        let y = test_in[[j, 0]];
        let x_true = test_xs[j][0];
        let x_pred = fnn.forward_one(&[y])?[0];
        fnn_lines.push(format!("{y:.6},{x_true:.6},{x_pred:.6}"));
        let mix = mdn.mixture(&[y])?;
        let mut rng = stream_rng(seed.wrapping_add(3), j as u64);
        let draw = sample_mixture(&mix, &mut rng);
        mdn_lines.push(format!("{y:.6},{x_true:.6},{:.6}", draw[0]));
    }
    std::fs::write(dir.join("toy_fnn_scatter.csv"), fnn_lines.join("\n") + "\n")?;
    std::fs::write(dir.join("toy_mdn_scatter.csv"), mdn_lines.join("\n") + "\n")?;
    Ok(())
}
