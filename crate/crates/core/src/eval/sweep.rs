//! Noise-robustness evaluation: score a trained inverter on test curves
//! noised with a list of specifications.

use serde::{Deserialize, Serialize};

use super::consistency::{y_consistency, ForwardMode};
use super::metrics::metric_m;
use super::{EvalError, Result};
use crate::dataset::{apply_noise_stream, NoiseSpec};
use crate::neural::{Model, OutputHead};

/// Scores of one model under one noise specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// Human-readable noise tag (Table-style column label).
    pub noise: String,
    /// "M" for mixture models (nearest of K means), "R2" for single-output
    /// models (identical formula with K = 1).
    pub metric: String,
    pub overall: f64,
    pub per_entry: Vec<f64>,
    pub n_samples: usize,
    /// R² between forward-propagated predictions and the clean curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_r_squared: Option<f64>,
    /// R² between forward-propagated predictions and the noised curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_noised_r_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forward_mode: Option<String>,
    /// Forward solves excluded from the y-space scores.
    pub excluded: usize,
}

/// The model's candidate profiles for one curve: the K mixture means for an
/// MDN head, or the single output vector for a linear head.
pub fn candidate_profiles(model: &Model, y: &[f64]) -> Result<Vec<Vec<f64>>> {
    match model.spec.output_head {
        OutputHead::Mdn { .. } => Ok(model.predict_means(y)?),
        OutputHead::Linear => Ok(vec![model.forward_one(y)?]),
    }
}

fn metric_label(model: &Model) -> &'static str {
    match model.spec.output_head {
        OutputHead::Mdn { .. } => "M",
        OutputHead::Linear => "R2",
    }
}

/// Evaluates the model on `(x, y)` test pairs for each noise spec in turn:
/// noise the curves, predict, score the nearest mean against the clean
/// profiles, and (when a forward map is supplied) score the predicted
/// curves against both the clean and the noised observations.
pub fn noise_robustness_sweep(
    model: &Model,
    test_x: &[Vec<f64>],
    test_y: &[Vec<f64>],
    specs: &[NoiseSpec],
    forward: Option<&ForwardMode>,
    omegas: &[f64],
    threads: usize,
) -> Result<Vec<EvalReport>> {
    if test_x.len() != test_y.len() {
        return Err(EvalError::Dimension(format!(
            "{} profiles vs {} curves",
            test_x.len(),
            test_y.len()
        )));
    }
    let mut reports = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let noised: Vec<Vec<f64>> = test_y
            .iter()
            .enumerate()
            .map(|(j, y)| apply_noise_stream(y, spec, j as u64))
            .collect();
        let mean_sets = noised
            .iter()
            .map(|y| candidate_profiles(model, y))
            .collect::<Result<Vec<_>>>()?;
        let m = metric_m(&mean_sets, test_x)?;
        let chosen: Vec<Vec<f64>> = mean_sets
            .iter()
            .zip(&m.chosen)
            .map(|(set, &k)| set[k].clone())
            .collect();
        let (y_r_squared, y_noised_r_squared, forward_mode, excluded) = match forward {
            Some(mode) => {
                let clean = y_consistency(&chosen, test_y, omegas, mode, threads)?;
                let against_noised = if matches!(spec.kind, crate::dataset::NoiseKind::None) {
                    None
                } else {
                    Some(y_consistency(&chosen, &noised, omegas, mode, threads)?.r_squared)
                };
                (
                    Some(clean.r_squared),
                    against_noised,
                    Some(clean.forward_mode),
                    clean.excluded,
                )
            }
            None => (None, None, None, 0),
        };
        reports.push(EvalReport {
            noise: spec.label(),
            metric: metric_label(model).to_string(),
            overall: m.overall,
            per_entry: m.per_entry,
            n_samples: test_x.len(),
            y_r_squared,
            y_noised_r_squared,
            forward_mode,
            excluded,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{
        DenseNetSpec, HiddenActivation, Parameters, Standardization, TrainingDigest,
    };

    fn linear_identityish_model(dim: usize) -> Model {
        // output = input (wired through a relu hidden layer)
        let spec = DenseNetSpec::with_hidden(
            dim,
            &[dim],
            dim,
            HiddenActivation::Relu,
            crate::neural::OutputHead::Linear,
            0.0,
            0.0,
        );
        let mut params = Parameters::zeros(&spec);
        for d in 0..dim {
            params.weights[0][[d, d]] = 1.0;
            params.weights[1][[d, d]] = 1.0;
        }
        Model {
            params,
            standardization: Standardization::identity(dim),
            spec,
            seed: 0,
            digest: TrainingDigest::default(),
            train_config: None,
        }
    }

    #[test]
    fn sweep_with_none_spec_equals_direct_evaluation() {
        let model = linear_identityish_model(3);
        // the "profile" equals the curve here, so the identity model is a
        // perfect inverter on clean data
        let data: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![1.0 + i as f64 * 0.1, 2.0, 3.0 - i as f64 * 0.05])
            .collect();
        let reports = noise_robustness_sweep(
            &model,
            &data,
            &data,
            &[NoiseSpec::none()],
            None,
            &[],
            1,
        )
        .unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].metric, "R2");
        assert!((reports[0].overall - 1.0).abs() < 1e-12);
        assert!(reports[0].y_r_squared.is_none());
    }

    #[test]
    fn noise_degrades_the_identity_inverter() {
        let model = linear_identityish_model(3);
        let data: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                vec![
                    1.0 + (i % 7) as f64 * 0.1,
                    2.0 + (i % 5) as f64 * 0.2,
                    3.0 - (i % 3) as f64 * 0.15,
                ]
            })
            .collect();
        let specs = [
            NoiseSpec::none(),
            NoiseSpec::uniform(-0.05, 0.05, 3),
        ];
        let reports =
            noise_robustness_sweep(&model, &data, &data, &specs, None, &[], 1).unwrap();
        assert!(reports[0].overall > reports[1].overall);
    }
}
