use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::kernel::{KernelFamily, KernelSpec};
use crate::error::{invalid, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Training pairs `(x_i, y_i)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        let data = Self { inputs, outputs };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.outputs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs.len(),
                got: self.outputs.len(),
            });
        }
        let d = self.dim();
        for x in &self.inputs {
            if x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: x.len() });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(invalid("dataset inputs must be finite"));
            }
        }
        if self.outputs.iter().any(|v| !v.is_finite()) {
            return Err(invalid("dataset outputs must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        self.inputs.push(x);
        self.outputs.push(y);
    }

    /// First `n` pairs.
    pub fn prefix(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            inputs: self.inputs[..n].to_vec(),
            outputs: self.outputs[..n].to_vec(),
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.outputs
            .iter()
            .copied()
            .enumerate()
            .fold(None, |acc, (i, y)| match acc {
                Some((_, b)) if b >= y => acc,
                _ => Some((i, y)),
            })
    }

    pub(crate) fn flat_inputs(&self) -> Vec<f64> {
        self.inputs.iter().flatten().copied().collect()
    }
}

/// `theta = {c, sigma_f^2, l, sigma_y^2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub mean_constant: f64,
    pub kernel: KernelSpec,
    pub noise_variance: f64,
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(invalid("noise variance must be non-negative"));
        }
        if !self.mean_constant.is_finite() {
            return Err(invalid("mean constant must be finite"));
        }
        Ok(())
    }

    /// `[c, ln sigma_f^2, ln l_1.., ln sigma_y^2]`.
    pub fn to_log_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.kernel.lengthscales.len() + 3);
        p.push(self.mean_constant);
        p.push(self.kernel.output_scale.ln());
        p.extend(self.kernel.lengthscales.iter().map(|l| l.ln()));
        p.push(self.noise_variance.ln());
        p
    }

    pub fn from_log_params(family: KernelFamily, p: &[f64]) -> Self {
        let m = p.len() - 3;
        Self {
            mean_constant: p[0],
            kernel: KernelSpec {
                family,
                lengthscales: p[2..2 + m].iter().map(|v| v.exp()).collect(),
                output_scale: p[1].exp(),
            },
            noise_variance: p[2 + m].exp(),
        }
    }
}

/// Affine map from the input box onto the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InputScaling {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        crate::design::check_bounds(&lower, &upper)?;
        Ok(Self { lower, upper })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    #[inline]
    pub fn to_unit(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = (x[i] - self.lower[i]) / (self.upper[i] - self.lower[i]);
        }
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }
}

/// Output standardisation `y_std = (y - mean) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputScaling {
    pub mean: f64,
    pub scale: f64,
}

impl OutputScaling {
    pub fn identity() -> Self {
        Self { mean: 0.0, scale: 1.0 }
    }

    /// Zero mean and unit (population) variance; a degenerate spread keeps
    /// unit scale.
    pub fn standardize(y: &[f64]) -> Self {
        let n = y.len().max(1) as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let scale = if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 };
        Self { mean, scale }
    }
}

/// Hyperparameters reported in the caller's units together with fit quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub kernel: KernelFamily,
    pub mean_constant: f64,
    pub output_scale: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
    pub log_likelihood: f64,
    pub n: usize,
    pub fallback: bool,
}

pub(crate) struct Factor {
    pub llt: faer::linalg::solvers::Llt<f64>,
    pub jitter: f64,
}

/// Symmetric covariance `K(X, X)` (without noise) for row-major inputs.
pub(crate) fn covariance(kernel: &KernelSpec, x: &[f64], n: usize, d: usize) -> Mat<f64> {
    let mut k = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let xi = &x[i * d..(i + 1) * d];
        k[(i, i)] = kernel.output_scale;
        for j in 0..i {
            let v = kernel.eval_unchecked(xi, &x[j * d..(j + 1) * d]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Factorises `K + noise I` adding jitter `1e-8 * mean(diag)` and escalating
/// it tenfold up to `1e-4 * mean(diag)`.
pub(crate) fn factorize(mut k: Mat<f64>, noise: f64) -> Result<Factor> {
    let n = k.nrows();
    let mean_diag = (0..n).map(|i| k[(i, i)]).sum::<f64>() / n.max(1) as f64 + noise;
    let mut jitter = 1e-8 * mean_diag;
    let max_jitter = 1e-4 * mean_diag * (1.0 + 1e-9);
    for i in 0..n {
        k[(i, i)] += noise + jitter;
    }
    loop {
        if let Ok(llt) = faer::linalg::solvers::Llt::new(k.as_ref(), Side::Lower) {
            return Ok(Factor { llt, jitter });
        }
        let next = jitter * 10.0;
        if !(next <= max_jitter) || !next.is_finite() {
            return Err(Error::SingularCovariance { jitter });
        }
        for i in 0..n {
            k[(i, i)] += next - jitter;
        }
        jitter = next;
    }
}

fn solve_vec(factor: &Factor, r: &[f64]) -> Vec<f64> {
    use faer::linalg::solvers::Solve;
    let b = Mat::<f64>::from_fn(r.len(), 1, |i, _| r[i]);
    let s = factor.llt.solve(&b);
    (0..r.len()).map(|i| s[(i, 0)]).collect()
}

fn half_log_det(factor: &Factor) -> f64 {
    let l = factor.llt.L();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum()
}

/// Log marginal likelihood (and optionally its gradient with respect to the
/// log-parameters) for row-major inputs `x`.
pub(crate) fn lml_core(
    hp: &Hyperparameters,
    x: &[f64],
    n: usize,
    d: usize,
    y: &[f64],
    with_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    let kernel = &hp.kernel;
    let factor = factorize(covariance(kernel, x, n, d), hp.noise_variance)?;
    let r: Vec<f64> = y.iter().map(|v| v - hp.mean_constant).collect();
    let alpha = solve_vec(&factor, &r);
    let quad: f64 = r.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let lml = -0.5 * quad - half_log_det(&factor) - 0.5 * n as f64 * LN_2PI;
    if !with_grad {
        return Ok((lml, None));
    }

    let m = kernel.lengthscales.len();
    let inv = factor.llt.inverse();
    let sf2 = kernel.output_scale;
    let inv_ls: Vec<f64> = (0..d).map(|k| 1.0 / kernel.lengthscale(k)).collect();
    let mut g_sf = 0.0;
    let mut g_ls = vec![0.0; m];
    let mut trace_w = 0.0;
    let mut s = vec![0.0; d];
    for i in 0..n {
        let xi = &x[i * d..(i + 1) * d];
        let w_ii = alpha[i] * alpha[i] - inv[(i, i)];
        trace_w += w_ii;
        g_sf += w_ii * sf2;
        for j in 0..i {
            let xj = &x[j * d..(j + 1) * d];
            let mut r2 = 0.0;
            for k in 0..d {
                let t = (xi[k] - xj[k]) * inv_ls[k];
                s[k] = t * t;
                r2 += s[k];
            }
            let (corr, gfac) = kernel.family.correlation_and_lengthscale_factor(r2);
            let w = 2.0 * (alpha[i] * alpha[j] - inv[(i, j)]);
            g_sf += w * sf2 * corr;
            let scale = w * sf2 * gfac;
            if m == 1 {
                g_ls[0] += scale * r2;
            } else {
                for k in 0..d {
                    g_ls[k] += scale * s[k];
                }
            }
        }
    }
    let mut grad = Vec::with_capacity(m + 3);
    grad.push(alpha.iter().sum());
    grad.push(0.5 * g_sf);
    grad.extend(g_ls.iter().map(|v| 0.5 * v));
    grad.push(0.5 * hp.noise_variance * trace_w);
    Ok((lml, Some(grad)))
}

fn check_inputs(hp: &Hyperparameters, data: &Dataset) -> Result<()> {
    hp.validate()?;
    data.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    hp.kernel.check_dim(data.dim())
}

/// Log marginal likelihood of `data` under `hp`, evaluated in the units of
/// the data through a Cholesky factorisation.
pub fn log_marginal_likelihood(hp: &Hyperparameters, data: &Dataset) -> Result<f64> {
    check_inputs(hp, data)?;
    let x = data.flat_inputs();
    Ok(lml_core(hp, &x, data.len(), data.dim(), &data.outputs, false)?.0)
}

/// Log marginal likelihood and its gradient with respect to
/// `[c, ln sigma_f^2, ln l_1.., ln sigma_y^2]`.
pub fn log_marginal_likelihood_grad(hp: &Hyperparameters, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    check_inputs(hp, data)?;
    let x = data.flat_inputs();
    let (v, g) = lml_core(hp, &x, data.len(), data.dim(), &data.outputs, true)?;
    Ok((v, g.unwrap_or_default()))
}

/// A Gaussian process conditioned on a dataset.
///
/// Inputs are mapped onto the unit cube and outputs standardised before the
/// kernel sees them; `hyperparameters()` are expressed in that internal
/// space and `summary()` reports them in the data's units.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: Hyperparameters,
    input: InputScaling,
    output: OutputScaling,
    data: Dataset,
    n: usize,
    d: usize,
    x_unit: Vec<f64>,
    // Lower Cholesky factor, row-major.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    lml_unit: f64,
    fallback: bool,
}

impl GpModel {
    /// Conditions a GP with fixed (internal-space) hyperparameters on `data`.
    pub fn new(data: &Dataset, hyper: Hyperparameters, input: InputScaling, output: OutputScaling) -> Result<Self> {
        check_inputs(&hyper, data)?;
        if input.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: input.dim(),
                got: data.dim(),
            });
        }
        if !(output.scale > 0.0 && output.scale.is_finite()) {
            return Err(invalid("output scale must be positive"));
        }
        let (n, d) = (data.len(), data.dim());
        let mut x_unit = vec![0.0; n * d];
        for (i, x) in data.inputs.iter().enumerate() {
            input.to_unit(x, &mut x_unit[i * d..(i + 1) * d]);
        }
        let y: Vec<f64> = data.outputs.iter().map(|v| (v - output.mean) / output.scale).collect();
        let factor = factorize(covariance(&hyper.kernel, &x_unit, n, d), hyper.noise_variance)?;
        let r: Vec<f64> = y.iter().map(|v| v - hyper.mean_constant).collect();
        let alpha = solve_vec(&factor, &r);
        let quad: f64 = r.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let lml_unit = -0.5 * quad - half_log_det(&factor) - 0.5 * n as f64 * LN_2PI;
        let l = factor.llt.L();
        let mut chol = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                chol[i * n + j] = l[(i, j)];
            }
        }
        Ok(Self {
            hyper,
            input,
            output,
            data: data.clone(),
            n,
            d,
            x_unit,
            chol,
            alpha,
            jitter: factor.jitter,
            lml_unit,
            fallback: false,
        })
    }

    pub(crate) fn mark_fallback(mut self) -> Self {
        self.fallback = true;
        self
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn input_scaling(&self) -> &InputScaling {
        &self.input
    }

    pub fn output_scaling(&self) -> OutputScaling {
        self.output
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// True when every likelihood ascent failed and fallback
    /// hyperparameters were used.
    pub fn is_fallback(&self) -> bool {
        self.fallback
    }

    /// Log marginal likelihood of the data in its own units.
    pub fn log_likelihood(&self) -> f64 {
        self.lml_unit - self.n as f64 * self.output.scale.ln()
    }

    /// Hyperparameters expressed in the units of the data.
    pub fn raw_hyperparameters(&self) -> Hyperparameters {
        let s = self.output.scale;
        let lengthscales = if self.hyper.kernel.is_ard() {
            (0..self.d).map(|i| self.hyper.kernel.lengthscales[i] * self.input.width(i)).collect()
        } else if (0..self.d).all(|i| self.input.width(i) == self.input.width(0)) {
            vec![self.hyper.kernel.lengthscales[0] * self.input.width(0)]
        } else {
            (0..self.d).map(|i| self.hyper.kernel.lengthscales[0] * self.input.width(i)).collect()
        };
        Hyperparameters {
            mean_constant: self.output.mean + s * self.hyper.mean_constant,
            kernel: KernelSpec {
                family: self.hyper.kernel.family,
                lengthscales,
                output_scale: self.hyper.kernel.output_scale * s * s,
            },
            noise_variance: self.hyper.noise_variance * s * s,
        }
    }

    pub fn summary(&self) -> ModelSummary {
        let raw = self.raw_hyperparameters();
        ModelSummary {
            kernel: raw.kernel.family,
            mean_constant: raw.mean_constant,
            output_scale: raw.kernel.output_scale,
            lengthscales: raw.kernel.lengthscales,
            noise_variance: raw.noise_variance,
            log_likelihood: self.log_likelihood(),
            n: self.n,
            fallback: self.fallback,
        }
    }

    fn cross_covariance(&self, x: &[f64], k_star: &mut [f64]) {
        let mut u = vec![0.0; self.d];
        self.input.to_unit(x, &mut u);
        for (i, k) in k_star.iter_mut().enumerate() {
            *k = self.hyper.kernel.eval_unchecked(&u, &self.x_unit[i * self.d..(i + 1) * self.d]);
        }
    }

    /// Posterior mean at a single input, in data units.
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        let mut k_star = vec![0.0; self.n];
        self.cross_covariance(x, &mut k_star);
        let m: f64 = k_star.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        self.output.mean + self.output.scale * (self.hyper.mean_constant + m)
    }

    /// Posterior mean and variance before clamping the variance at zero.
    pub fn predict_unclamped(&self, x: &[f64]) -> (f64, f64) {
        let n = self.n;
        let mut v = vec![0.0; n];
        self.cross_covariance(x, &mut v);
        let m: f64 = v.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        // Forward substitution L v = k_star in place.
        for i in 0..n {
            let row = &self.chol[i * n..i * n + i];
            let s: f64 = row.iter().zip(&v[..i]).map(|(a, b)| a * b).sum();
            v[i] = (v[i] - s) / self.chol[i * n + i];
        }
        let reduction: f64 = v.iter().map(|t| t * t).sum();
        let var = self.hyper.kernel.output_scale - reduction;
        let s = self.output.scale;
        (self.output.mean + s * (self.hyper.mean_constant + m), s * s * var)
    }

    /// Posterior mean and (clamped, non-negative) variance at one input.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict_unclamped(x);
        (m, v.max(0.0))
    }

    /// Posterior mean and variance at each row of `x_star`.
    pub fn posterior(&self, x_star: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut means = Vec::with_capacity(x_star.len());
        let mut vars = Vec::with_capacity(x_star.len());
        for x in x_star {
            if x.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: x.len(),
                });
            }
            let (m, v) = self.predict(x);
            means.push(m);
            vars.push(v);
        }
        Ok((means, vars))
    }

    #[cfg(test)]
    pub(crate) fn cholesky_row_major(&self) -> &[f64] {
        &self.chol
    }
}

/// Free-standing posterior entry point.
pub fn posterior(model: &GpModel, x_star: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    model.posterior(x_star)
}
