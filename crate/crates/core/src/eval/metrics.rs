//! Coefficient-of-determination metrics: plain R² and its nearest-mean
//! analogue for models that output a set of candidate profiles.

use super::{EvalError, Result};

/// Overall and per-entry R².
#[derive(Debug, Clone, PartialEq)]
pub struct RSquared {
    pub overall: f64,
    pub per_entry: Vec<f64>,
}

fn column_means(targets: &[Vec<f64>]) -> Vec<f64> {
    let n = targets.len() as f64;
    let dim = targets[0].len();
    let mut mean = vec![0.0; dim];
    for t in targets {
        for (d, v) in t.iter().enumerate() {
            mean[d] += v;
        }
    }
    for v in &mut mean {
        *v /= n;
    }
    mean
}

fn validate_pairs(predictions: usize, targets: &[Vec<f64>]) -> Result<()> {
    if targets.len() < 2 {
        return Err(EvalError::UndefinedMetric(
            "need at least 2 samples".into(),
        ));
    }
    if predictions != targets.len() {
        return Err(EvalError::Dimension(format!(
            "{predictions} predictions vs {} targets",
            targets.len()
        )));
    }
    Ok(())
}

fn scores_from_errors(
    sq_errors: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    let mean = column_means(targets);
    let dim = mean.len();
    let mut num = vec![0.0; dim];
    let mut den = vec![0.0; dim];
    for (errs, t) in sq_errors.iter().zip(targets) {
        for d in 0..dim {
            num[d] += errs[d];
            den[d] += (t[d] - mean[d]) * (t[d] - mean[d]);
        }
    }
    let den_total: f64 = den.iter().sum();
    if !(den_total > 0.0) {
        return Err(EvalError::UndefinedMetric(
            "targets have zero variance".into(),
        ));
    }
    let overall = 1.0 - num.iter().sum::<f64>() / den_total;
    let per_entry = num
        .iter()
        .zip(&den)
        .map(|(n, d)| if *d > 0.0 { 1.0 - n / d } else { f64::NAN })
        .collect();
    Ok((overall, per_entry))
}

/// `R^2 = 1 - sum |pred - target|^2 / sum |target - mean|^2`, plus the
/// column-wise variant.
pub fn r_squared(predictions: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<RSquared> {
    validate_pairs(predictions.len(), targets)?;
    let sq_errors: Vec<Vec<f64>> = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).collect())
        .collect();
    let (overall, per_entry) = scores_from_errors(&sq_errors, targets)?;
    Ok(RSquared { overall, per_entry })
}

/// Nearest-mean score over candidate sets.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricM {
    pub overall: f64,
    pub per_entry: Vec<f64>,
    /// Component index chosen per sample (full-vector distance, ties to the
    /// lowest index).
    pub chosen: Vec<usize>,
}

/// `M = 1 - sum |mu*_j - x_j|^2 / sum |x_j - mean|^2` where `mu*_j` is the
/// candidate mean closest to the target. The per-entry variant scores each
/// coordinate of the same chosen component.
pub fn metric_m(mean_sets: &[Vec<Vec<f64>>], targets: &[Vec<f64>]) -> Result<MetricM> {
    validate_pairs(mean_sets.len(), targets)?;
    if mean_sets.iter().any(|set| set.is_empty()) {
        return Err(EvalError::Dimension("empty candidate set".into()));
    }
    let mut chosen = Vec::with_capacity(targets.len());
    let mut sq_errors = Vec::with_capacity(targets.len());
    for (set, t) in mean_sets.iter().zip(targets) {
        let mut best_k = 0;
        let mut best_d = f64::INFINITY;
        for (k, mu) in set.iter().enumerate() {
            let d: f64 = mu.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best_d {
                best_d = d;
                best_k = k;
            }
        }
        chosen.push(best_k);
        sq_errors.push(
            set[best_k]
                .iter()
                .zip(t)
                .map(|(a, b)| (a - b) * (a - b))
                .collect(),
        );
    }
    let (overall, per_entry) = scores_from_errors(&sq_errors, targets)?;
    Ok(MetricM {
        overall,
        per_entry,
        chosen,
    })
}
