use serde::{Deserialize, Serialize};

use super::problems::BenchmarkProblem;
use crate::design::{maximin_lhs, scale_to_bounds, DEFAULT_MAXIMIN_CANDIDATES};
use crate::error::{invalid, Result};
use crate::gp::{fit_mle, fit_mle_with_start, Dataset, FitOptions, InputScaling};
use crate::rng::derive_seed;

/// Settings of [`ard_variability_probe`]. A pilot fit on the first
/// `pilot_points` design rows provides the starting point for the full fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeOptions {
    pub fit: FitOptions,
    pub pilot_points: usize,
    pub full_restarts: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            pilot_points: 300,
            full_restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// ARD length-scales in the problem's input units.
    pub lengthscales: Vec<f64>,
    pub log_likelihood: f64,
    pub fallback: bool,
}

/// Fits an ARD GP to `n_points` maximin Latin hypercube samples of the
/// clean objective and returns the per-dimension length-scales.
pub fn ard_variability_probe(problem: &BenchmarkProblem, n_points: usize, seed: u64, opts: &ProbeOptions) -> Result<ProbeResult> {
    let d = problem.domain.dim();
    if n_points < d + 1 {
        return Err(invalid(format!("the probe needs at least {} points", d + 1)));
    }
    let design = maximin_lhs(n_points, d, seed, DEFAULT_MAXIMIN_CANDIDATES)?;
    let inputs = scale_to_bounds(&design, &problem.domain.lower, &problem.domain.upper)?;
    let outputs = inputs.iter().map(|x| problem.eval(x)).collect();
    let data = Dataset::new(inputs, outputs)?;
    let scaling = InputScaling::new(problem.domain.lower.clone(), problem.domain.upper.clone())?;
    let pilot_n = opts.pilot_points.clamp(d + 1, n_points);
    let warm = if pilot_n < n_points {
        let pilot = fit_mle(&data.prefix(pilot_n), &scaling, derive_seed(seed, 1), &opts.fit)?;
        Some(pilot.log_params())
    } else {
        None
    };
    let full_opts = FitOptions {
        n_restarts: if warm.is_some() { opts.full_restarts } else { opts.fit.n_restarts },
        ..opts.fit.clone()
    };
    let model = fit_mle_with_start(&data, &scaling, derive_seed(seed, 2), &full_opts, warm.as_deref())?;
    let summary = model.summary();
    let lengthscales = if summary.lengthscales.len() == d {
        summary.lengthscales
    } else {
        vec![summary.lengthscales[0]; d]
    };
    Ok(ProbeResult {
        lengthscales,
        log_likelihood: summary.log_likelihood,
        fallback: summary.fallback,
    })
}
