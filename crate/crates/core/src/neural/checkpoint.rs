//! Trained-model bundle and its JSON checkpoint format.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::mdn::{mdn_head, MixtureParams};
use super::net::{forward_batch, forward_cached, DenseNetSpec, ForwardCache, OutputHead, Parameters};
use super::{NeuralError, Result};
use crate::dataset::NoiseSpec;
use crate::neural::net::backprop;

/// Current checkpoint format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-entry affine input transform fitted on the training inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Identity transform of the given width.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Column means and standard deviations of a training matrix.
    /// Degenerate columns get unit scale.
    pub fn fit(inputs: &Array2<f64>) -> Self {
        let m = inputs.nrows().max(1) as f64;
        let mut mean = vec![0.0; inputs.ncols()];
        let mut std = vec![0.0; inputs.ncols()];
        for row in inputs.rows() {
            for (d, v) in row.iter().enumerate() {
                mean[d] += v;
            }
        }
        for v in &mut mean {
            *v /= m;
        }
        for row in inputs.rows() {
            for (d, v) in row.iter().enumerate() {
                std[d] += (v - mean[d]) * (v - mean[d]);
            }
        }
        for v in &mut std {
            *v = (*v / m).sqrt();
            if !(*v > 0.0) {
                *v = 1.0;
            }
        }
        Self { mean, std }
    }

    pub fn apply(&self, inputs: &Array2<f64>) -> Array2<f64> {
        let mut out = inputs.clone();
        for mut row in out.rows_mut() {
            for (d, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[d]) / self.std[d];
            }
        }
        out
    }
}

/// Summary of the training run stored alongside the parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingDigest {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub final_train_loss: f64,
}

/// Mirror of the training configuration, echoed into the checkpoint for
/// provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfigEcho {
    pub step_size: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: f64,
    pub input_noise: Option<NoiseSpec>,
}

/// A trained network: spec, parameters and the input standardization that
/// was baked in at training time.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: DenseNetSpec,
    pub params: Parameters,
    pub standardization: Standardization,
    pub seed: u64,
    pub digest: TrainingDigest,
    pub train_config: Option<TrainConfigEcho>,
}

impl Model {
    /// Raw outputs for a batch (rows standardized internally).
    pub fn forward_batch(&self, inputs: &Array2<f64>) -> Array2<f64> {
        forward_batch(&self.spec, &self.params, &self.standardization.apply(inputs))
    }

    /// Cached forward pass for callers that will pull gradients back to the
    /// (unstandardized) inputs.
    pub fn forward_batch_cached(&self, inputs: &Array2<f64>) -> (Array2<f64>, ForwardCache) {
        forward_cached(&self.spec, &self.params, &self.standardization.apply(inputs))
    }

    /// Gradient of a scalar loss with respect to the raw (unstandardized)
    /// inputs, given its gradient with respect to the raw outputs.
    /// The model's own parameters receive nothing.
    pub fn input_vjp(&self, cache: &ForwardCache, output_grad: &Array2<f64>) -> Array2<f64> {
        let mut g = backprop(&self.spec, &self.params, cache, output_grad).input;
        for mut row in g.rows_mut() {
            for (d, v) in row.iter_mut().enumerate() {
                *v /= self.standardization.std[d];
            }
        }
        g
    }

    /// Raw outputs for one input vector.
    pub fn forward_one(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.spec.input_dim() {
            return Err(NeuralError::Dimension(format!(
                "input has {} entries, model expects {}",
                input.len(),
                self.spec.input_dim()
            )));
        }
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).expect("shape");
        Ok(self.forward_batch(&x).row(0).to_vec())
    }

    /// Full mixture for one input (MDN head models only).
    pub fn mixture(&self, input: &[f64]) -> Result<MixtureParams> {
        let OutputHead::Mdn { sigma_scale, .. } = self.spec.output_head else {
            return Err(NeuralError::Spec("model has no mdn head".into()));
        };
        let (k, n) = self.spec.mdn_dims()?;
        mdn_head(&self.forward_one(input)?, k, n, sigma_scale)
    }

    /// The `K` predicted mean vectors for one input (the inversion output).
    pub fn predict_means(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.mixture(input)?.mus)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    spec: DenseNetSpec,
    standardization: Standardization,
    params: Vec<f64>,
    seed: u64,
    training_log_digest: TrainingDigest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_config: Option<TrainConfigEcho>,
}

/// Writes the model as a versioned JSON envelope with the parameters as one
/// flat array in row-major layer order.
pub fn save_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let file = CheckpointFile {
        format_version: MODEL_FORMAT_VERSION,
        spec: model.spec.clone(),
        standardization: model.standardization.clone(),
        params: model.params.flatten(),
        seed: model.seed,
        training_log_digest: model.digest.clone(),
        train_config: model.train_config.clone(),
    };
    let json = serde_json::to_string(&file).expect("checkpoint serializes");
    std::fs::write(path, json).map_err(NeuralError::Io)
}

/// Reads a checkpoint, validating version and parameter count.
pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(NeuralError::Io)?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| NeuralError::Checkpoint(format!("parse: {e}")))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(NeuralError::Checkpoint(format!(
            "format version {} unsupported (expected {MODEL_FORMAT_VERSION})",
            file.format_version
        )));
    }
    file.spec.validate()?;
    if file.standardization.mean.len() != file.spec.input_dim()
        || file.standardization.std.len() != file.spec.input_dim()
    {
        return Err(NeuralError::Checkpoint(
            "standardization width does not match the input layer".into(),
        ));
    }
    let params = Parameters::from_flat(&file.spec, &file.params)?;
    Ok(Model {
        spec: file.spec,
        params,
        standardization: file.standardization,
        seed: file.seed,
        digest: file.training_log_digest,
        train_config: file.train_config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::net::HiddenActivation;

    fn model_fixture() -> Model {
        let spec = DenseNetSpec::with_hidden(
            3,
            &[8],
            5,
            HiddenActivation::Tanh,
            OutputHead::Mdn {
                components: 1,
                sigma_scale: 0.01,
            },
            1e-4,
            1e-4,
        );
        let params = Parameters::init(&spec, 5);
        Model {
            spec,
            params,
            standardization: Standardization {
                mean: vec![0.1, -0.2, 0.3],
                std: vec![1.0, 2.0, 0.5],
            },
            seed: 5,
            digest: TrainingDigest::default(),
            train_config: None,
        }
    }

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let model = model_fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &model).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);
        let input = [0.4, 1.9, -0.8];
        assert_eq!(
            model.forward_one(&input).unwrap(),
            loaded.forward_one(&input).unwrap()
        );
    }

    #[test]
    fn corrupt_and_mismatched_checkpoints_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            load_model(&path),
            Err(NeuralError::Checkpoint(_))
        ));

        let model = model_fixture();
        save_model(&path, &model).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text = text.replace("\"format_version\":1", "\"format_version\":42");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(NeuralError::Checkpoint(_))
        ));
    }

    #[test]
    fn predict_means_has_k_nonnegative_vectors() {
        let spec = DenseNetSpec::with_hidden(
            4,
            &[6],
            (2 * 3 + 1) * 2,
            HiddenActivation::Tanh,
            OutputHead::Mdn {
                components: 2,
                sigma_scale: 0.001,
            },
            0.0,
            0.0,
        );
        let model = Model {
            params: Parameters::init(&spec, 1),
            standardization: Standardization::identity(4),
            spec,
            seed: 1,
            digest: TrainingDigest::default(),
            train_config: None,
        };
        let means = model.predict_means(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(means.len(), 2);
        for mu in &means {
            assert_eq!(mu.len(), 3);
            assert!(mu.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn standardization_fit_handles_degenerate_columns() {
        let x = Array2::from_shape_vec((3, 2), vec![1.0, 5.0, 1.0, 7.0, 1.0, 9.0]).unwrap();
        let s = Standardization::fit(&x);
        assert_eq!(s.std[0], 1.0);
        assert!((s.mean[1] - 7.0).abs() < 1e-12);
        let z = s.apply(&x);
        assert_eq!(z[[0, 0]], 0.0);
    }
}
