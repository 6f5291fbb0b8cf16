//! Dispersion-space consistency: how well the curves produced by the
//! predicted profiles match the observed curves.

use serde::{Deserialize, Serialize};

use super::metrics::r_squared;
use super::{EvalError, Result};
use crate::dispersion::{dispersion_curve, EarthStack, RootSearchConfig};
use crate::neural::Model;
use crate::util::parallel_map_indexed;

/// Which forward map turns a predicted profile back into a curve.
pub enum ForwardMode<'a> {
    /// The exact dispersion solver (default).
    Exact { thickness: f64 },
    /// A trained forward surrogate (parity with the surrogate-based loss).
    Surrogate(&'a Model),
}

impl ForwardMode<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            ForwardMode::Exact { .. } => "exact",
            ForwardMode::Surrogate(_) => "surrogate",
        }
    }
}

/// R² between forward-propagated predictions and target curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YConsistency {
    pub r_squared: f64,
    /// Samples whose forward solve failed (excluded from the score).
    pub excluded: usize,
    pub forward_mode: String,
}

/// Runs each chosen profile through the forward map and scores the result
/// against the target curves. Forward failures are excluded and counted.
pub fn y_consistency(
    chosen_means: &[Vec<f64>],
    targets_y: &[Vec<f64>],
    omegas: &[f64],
    mode: &ForwardMode,
    threads: usize,
) -> Result<YConsistency> {
    if chosen_means.len() != targets_y.len() {
        return Err(EvalError::Dimension(format!(
            "{} profiles vs {} curves",
            chosen_means.len(),
            targets_y.len()
        )));
    }
    let forwarded: Vec<Option<Vec<f64>>> = match mode {
        ForwardMode::Surrogate(model) => chosen_means
            .iter()
            .map(|mu| model.forward_one(mu).ok())
            .collect(),
        ForwardMode::Exact { thickness } => {
            parallel_map_indexed(chosen_means.len(), threads, |j| {
                let stack = EarthStack::from_vs_profile(&chosen_means[j], *thickness).ok()?;
                let cfg = RootSearchConfig::for_stack(&stack);
                dispersion_curve(&stack, omegas, &cfg)
                    .ok()
                    .map(|c| c.velocities)
            })
        }
    };
    let mut predictions = Vec::new();
    let mut targets = Vec::new();
    let mut excluded = 0usize;
    for (f, t) in forwarded.into_iter().zip(targets_y) {
        match f {
            Some(curve) => {
                predictions.push(curve);
                targets.push(t.clone());
            }
            None => excluded += 1,
        }
    }
    if targets.len() < 2 {
        return Err(EvalError::UndefinedMetric(format!(
            "only {} forward solves succeeded",
            targets.len()
        )));
    }
    let r = r_squared(&predictions, &targets)?;
    Ok(YConsistency {
        r_squared: r.overall,
        excluded,
        forward_mode: mode.label().to_string(),
    })
}
