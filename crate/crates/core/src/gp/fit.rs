//! Maximum-likelihood estimation of GP hyperparameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelFamily, KernelSpec};
use super::model::{lml_core, Dataset, GpModel, Hyperparameters, InputScaling, OutputScaling};
use crate::design::maximin_lhs;
use crate::error::{Error, Result};
use crate::optim::{minimize_box, BoxMinimizerOptions};

/// Settings for [`fit_mle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub kernel: KernelFamily,
    pub n_restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            kernel: KernelFamily::Matern52,
            n_restarts: 10,
            max_iters: 200,
            grad_tol: 1e-6,
        }
    }
}

const LN_LS: (f64, f64) = (-6.907_755_278_982_137, 6.907_755_278_982_137); // ln 1e-3, ln 1e3
const LN_SF2: (f64, f64) = (-13.815_510_557_964_274, 6.907_755_278_982_137); // ln 1e-6, ln 1e3
const LN_NOISE: (f64, f64) = (-18.420_680_743_952_367, 0.0); // ln 1e-8, ln 1

use std::f64::consts::LN_10;

// Box the restarts are drawn from; a sub-box of the optimisation bounds.
const START_LN_LS: (f64, f64) = (-2.995_732_273_553_991, std::f64::consts::LN_2); // ln 0.05, ln 2
const START_LN_SF2: (f64, f64) = (-LN_10, LN_10);
const START_LN_NOISE: (f64, f64) = (-6.0 * LN_10, -LN_10);

/// Optimisation bounds for `[c, ln sigma_f^2, ln l.., ln sigma_y^2]` given
/// standardised outputs.
pub fn log_param_bounds(y_std: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let lo_y = y_std.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_y = y_std.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lower = vec![lo_y - 3.0, LN_SF2.0];
    let mut upper = vec![hi_y + 3.0, LN_SF2.1];
    lower.extend(std::iter::repeat_n(LN_LS.0, d));
    upper.extend(std::iter::repeat_n(LN_LS.1, d));
    lower.push(LN_NOISE.0);
    upper.push(LN_NOISE.1);
    (lower, upper)
}

/// Hyperparameters used when every ascent fails: `l = 0.5`, `sigma_f^2 =
/// var(y)`, `sigma_y^2 = 1e-6 var(y)`, `c = mean(y)` (internal space).
pub fn fallback_hyperparameters(family: KernelFamily, d: usize) -> Hyperparameters {
    Hyperparameters {
        mean_constant: 0.0,
        kernel: KernelSpec {
            family,
            lengthscales: vec![0.5; d],
            output_scale: 1.0,
        },
        noise_variance: 1e-6,
    }
}

fn start_points(y_std: &[f64], d: usize, n_restarts: usize, seed: u64, bounds: &(Vec<f64>, Vec<f64>)) -> Vec<Vec<f64>> {
    let p = d + 3;
    let mut default = vec![0.0, 0.0];
    default.extend(std::iter::repeat_n(0.5f64.ln(), d));
    default.push(1e-4f64.ln());
    let mut starts = vec![default];
    if n_restarts > 1 {
        let c_mid = y_std.iter().sum::<f64>() / y_std.len().max(1) as f64;
        let mut lo = vec![c_mid - 1.0, START_LN_SF2.0];
        let mut hi = vec![c_mid + 1.0, START_LN_SF2.1];
        lo.extend(std::iter::repeat_n(START_LN_LS.0, d));
        hi.extend(std::iter::repeat_n(START_LN_LS.1, d));
        lo.push(START_LN_NOISE.0);
        hi.push(START_LN_NOISE.1);
        if let Ok(design) = maximin_lhs(n_restarts - 1, p, seed, 20) {
            for row in design.rows() {
                starts.push(
                    (0..p)
                        .map(|k| (lo[k] + row[k] * (hi[k] - lo[k])).clamp(bounds.0[k], bounds.1[k]))
                        .collect(),
                );
            }
        }
    }
    starts
}

/// Fits hyperparameters by maximising the log marginal likelihood from
/// `opts.n_restarts` starting points (a fixed default followed by a
/// maximin Latin hypercube in log-parameter space).
pub fn fit_mle(data: &Dataset, scaling: &InputScaling, seed: u64, opts: &FitOptions) -> Result<GpModel> {
    fit_mle_with_start(data, scaling, seed, opts, None)
}

/// As [`fit_mle`], with an extra leading start (internal-space log
/// parameters), typically the previous fit in a sequential campaign.
pub fn fit_mle_with_start(
    data: &Dataset,
    scaling: &InputScaling,
    seed: u64,
    opts: &FitOptions,
    warm_start: Option<&[f64]>,
) -> Result<GpModel> {
    data.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = data.dim();
    if scaling.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: scaling.dim(),
            got: d,
        });
    }
    let output = OutputScaling::standardize(&data.outputs);
    let (n, family) = (data.len(), opts.kernel);
    let mut x_unit = vec![0.0; n * d];
    for (i, x) in data.inputs.iter().enumerate() {
        scaling.to_unit(x, &mut x_unit[i * d..(i + 1) * d]);
    }
    let y_std: Vec<f64> = data.outputs.iter().map(|v| (v - output.mean) / output.scale).collect();
    let bounds = log_param_bounds(&y_std, d);

    let mut starts = Vec::new();
    if let Some(w) = warm_start.filter(|w| w.len() == d + 3) {
        starts.push(w.iter().zip(bounds.0.iter().zip(&bounds.1)).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect());
    }
    starts.extend(start_points(&y_std, d, opts.n_restarts.max(1), seed, &bounds));

    let minimizer = BoxMinimizerOptions {
        max_iters: opts.max_iters,
        grad_tol: opts.grad_tol,
        ..BoxMinimizerOptions::default()
    };
    let results: Vec<Option<(f64, Vec<f64>)>> = starts
        .par_iter()
        .map(|start| {
            let objective = |p: &[f64], g: &mut [f64]| -> f64 {
                let hp = Hyperparameters::from_log_params(family, p);
                match lml_core(&hp, &x_unit, n, d, &y_std, true) {
                    Ok((v, Some(grad))) => {
                        for (gi, vi) in g.iter_mut().zip(grad) {
                            *gi = -vi;
                        }
                        -v
                    }
                    _ => f64::NAN,
                }
            };
            minimize_box(objective, start, &bounds.0, &bounds.1, &minimizer).map(|m| (-m.value, m.x))
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (lml, p) in results.into_iter().flatten() {
        if lml.is_finite() && best.as_ref().is_none_or(|(b, _)| lml > *b) {
            best = Some((lml, p));
        }
    }
    if let Some((_, p)) = best {
        let hp = Hyperparameters::from_log_params(family, &p);
        if let Ok(model) = GpModel::new(data, hp, scaling.clone(), output) {
            return Ok(model);
        }
    }
    log::warn!("all {} likelihood ascents failed; using fallback hyperparameters", starts.len());
    let hp = fallback_hyperparameters(family, d);
    GpModel::new(data, hp, scaling.clone(), output).map(GpModel::mark_fallback)
}

impl GpModel {
    /// Internal-space log parameters, suitable as a warm start.
    pub fn log_params(&self) -> Vec<f64> {
        self.hyperparameters().to_log_params()
    }
}
