//! Exact derivatives checked against central differences.

use serde::{Deserialize, Serialize};

use super::{exact_sensitivities, finite_difference_sensitivities, reference_scales, Problem};
use crate::design::{variable_names, DesignVector};
use crate::error::Result;
use crate::materials::InterpolationMode;

/// Per-function relative error between the two gradients, measured in
/// reference-scaled variables as `max|exact - fd| / max|fd|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientCheck {
    pub variables: Vec<String>,
    pub objective_error: f64,
    pub constraint_errors: Vec<f64>,
    pub max_error: f64,
    pub d_objective_exact: Vec<f64>,
    pub d_objective_fd: Vec<f64>,
}

impl GradientCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_error <= tolerance
    }
}

fn relative_error(exact: &[f64], fd: &[f64], scales: &[f64]) -> f64 {
    let diff = exact
        .iter()
        .zip(fd)
        .zip(scales)
        .map(|((a, b), s)| ((a - b) * s).abs())
        .fold(0.0, f64::max);
    let norm = fd.iter().zip(scales).map(|(b, s)| (b * s).abs()).fold(0.0, f64::max);
    // Functions that do not depend on any variable only need a tiny
    // absolute difference.
    if norm < 1e-10 {
        diff
    } else {
        diff / norm
    }
}

pub fn verify_gradients(
    problem: &Problem,
    design: &DesignVector<f64>,
    mode: InterpolationMode,
    lift_tolerance: f64,
    rel_step: f64,
) -> Result<GradientCheck> {
    let vars = problem.active_variables();
    let exact = exact_sensitivities(problem, design, mode, &vars, lift_tolerance)?;
    let fd = finite_difference_sensitivities(problem, design, mode, &vars, lift_tolerance, rel_step)?;
    let all = reference_scales();
    let scales: Vec<f64> = vars.iter().map(|&k| all[k]).collect();
    let objective_error = relative_error(&exact.d_objective, &fd.d_objective, &scales);
    let constraint_errors: Vec<f64> = exact
        .d_inequalities
        .iter()
        .zip(&fd.d_inequalities)
        .map(|(a, b)| relative_error(a, b, &scales))
        .collect();
    let max_error = constraint_errors.iter().copied().fold(objective_error, f64::max);
    let names = variable_names();
    Ok(GradientCheck {
        variables: vars.iter().map(|&k| names[k].clone()).collect(),
        objective_error,
        constraint_errors,
        max_error,
        d_objective_exact: exact.d_objective,
        d_objective_fd: fd.d_objective,
    })
}
