use std::f64::consts::PI;
use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::acqopt::Domain;
use crate::envsim::{BoundaryPolicy, EnvWalk, StartPolicy};
use crate::error::{invalid, Result};
use crate::rng::{rng_from_seed, Rng};

/// Negated two-dimensional Levy function; maximum 0 at `(1, 1)`.
pub fn levy2_negated(x: &[f64]) -> f64 {
    let w1 = 1.0 + (x[0] - 1.0) / 4.0;
    let w2 = 1.0 + (x[1] - 1.0) / 4.0;
    let s1 = (PI * w1).sin();
    let s2 = (PI * w1 + 1.0).sin();
    let s3 = (2.0 * PI * w2).sin();
    -(s1 * s1 + (w1 - 1.0).powi(2) * (1.0 + 10.0 * s2 * s2) + (w2 - 1.0).powi(2) * (1.0 + s3 * s3))
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
    [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
    [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
    [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
];

/// Negated six-dimensional Hartmann function on `(0, 1)^6`; maximum
/// about 3.32.
pub fn hartmann6_negated(x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..4 {
        let mut inner = 0.0;
        for j in 0..6 {
            let d = x[j] - 1e-4 * HARTMANN_P[i][j];
            inner += HARTMANN_A[i][j] * d * d;
        }
        total += HARTMANN_ALPHA[i] * (-inner).exp();
    }
    total
}

/// Environmental indices of the Hartmann problem for `n_env` variables.
pub fn hartmann_env_indices(n_env: usize) -> Result<Vec<usize>> {
    match n_env {
        1 => Ok(vec![5]),
        2 => Ok(vec![0, 5]),
        3 => Ok(vec![0, 3, 5]),
        _ => Err(invalid(format!("Hartmann presets cover 1 to 3 environmental variables (got {n_env})"))),
    }
}

type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Synthetic objective with its domain, environmental walk and noise level.
#[derive(Clone)]
pub struct BenchmarkProblem {
    pub name: String,
    func: ObjectiveFn,
    pub domain: Domain,
    /// Walk step limit per environmental variable.
    pub env_steps: Vec<f64>,
    pub env_start: StartPolicy,
    pub boundary: BoundaryPolicy,
    pub noise_sd: f64,
    pub noise_seed: u64,
    /// Known maximiser and maximum of the clean objective.
    pub optimum: Option<(Vec<f64>, f64)>,
}

impl std::fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("env_steps", &self.env_steps)
            .field("noise_sd", &self.noise_sd)
            .finish()
    }
}

/// Named problem families understood by configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Levy,
    Hartmann,
}

impl BenchmarkProblem {
    pub fn new(
        name: impl Into<String>,
        func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        domain: Domain,
        env_steps: Vec<f64>,
    ) -> Result<Self> {
        if env_steps.len() != domain.env_indices().len() {
            return Err(invalid("one walk step limit per environmental variable is required"));
        }
        Ok(Self {
            name: name.into(),
            func: Arc::new(func),
            domain,
            env_steps,
            env_start: StartPolicy::Midpoint,
            boundary: BoundaryPolicy::Clip,
            noise_sd: 0.0,
            noise_seed: 0,
            optimum: None,
        })
    }

    /// `x1` in `[-7.5, 7.5]` controllable, `x2` in `[-10, 10]`
    /// environmental with step 1.5.
    pub fn levy() -> Self {
        let domain = Domain::new(vec![-7.5, -10.0], vec![7.5, 10.0], vec![1]).expect("static bounds");
        let mut p = Self::new("levy", levy2_negated, domain, vec![1.5]).expect("static problem");
        p.optimum = Some((vec![1.0, 1.0], 0.0));
        p
    }

    /// Hartmann on `[0, 1]^6` with the preset environmental variables; the
    /// first takes step 0.05 and any others 0.1.
    pub fn hartmann(n_env: usize) -> Result<Self> {
        let env = hartmann_env_indices(n_env)?;
        let mut steps = vec![0.1; env.len()];
        // x6 is the last index of every preset.
        let last = env.len() - 1;
        steps[last] = 0.05;
        Self::hartmann_with_env(env, steps)
    }

    /// Hartmann with an arbitrary environmental set and step limits.
    pub fn hartmann_with_env(env_indices: Vec<usize>, steps: Vec<f64>) -> Result<Self> {
        let domain = Domain::new(vec![0.0; 6], vec![1.0; 6], env_indices)?;
        let mut p = Self::new("hartmann", hartmann6_negated, domain, steps)?;
        p.optimum = Some((vec![0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573], 3.32237));
        Ok(p)
    }

    pub fn from_kind(kind: ProblemKind, n_env: usize) -> Result<Self> {
        match kind {
            ProblemKind::Levy if n_env == 1 => Ok(Self::levy()),
            ProblemKind::Levy => Err(invalid("the Levy problem has exactly one environmental variable")),
            ProblemKind::Hartmann => Self::hartmann(n_env),
        }
    }

    /// Sets every walk step limit to `a`.
    pub fn with_step(mut self, a: f64) -> Self {
        self.env_steps = vec![a; self.env_steps.len()];
        self
    }

    pub fn n_env(&self) -> usize {
        self.domain.env_indices().len()
    }

    /// Clean objective value.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }

    /// Test points used by default: 25 per environmental variable.
    pub fn default_test_points(&self) -> usize {
        25 * self.n_env().max(1)
    }

    /// Environmental walk over the environmental bounds.
    pub fn walk(&self, seed: u64) -> Result<EnvWalk> {
        Ok(EnvWalk::new(self.domain.env_lower(), self.domain.env_upper(), self.env_steps.clone(), seed, &self.env_start)?
            .with_boundary(self.boundary))
    }

    /// Objective with additive Gaussian noise drawn from the problem's noise
    /// stream. With zero noise the clean values are returned unchanged.
    pub fn objective(&self) -> NoisyObjective {
        NoisyObjective {
            func: self.func.clone(),
            sd: self.noise_sd,
            rng: rng_from_seed(self.noise_seed),
        }
    }
}

/// Wraps `problem` with additive `N(0, sigma^2)` noise from a seeded stream.
pub fn add_noise(problem: &BenchmarkProblem, sigma: f64, seed: u64) -> Result<BenchmarkProblem> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("noise sd must be non-negative (got {sigma})")));
    }
    let mut p = problem.clone();
    p.noise_sd = sigma;
    p.noise_seed = seed;
    Ok(p)
}

/// Stateful noisy evaluator.
pub struct NoisyObjective {
    func: ObjectiveFn,
    sd: f64,
    rng: Rng,
}

impl NoisyObjective {
    pub fn call(&mut self, x: &[f64]) -> f64 {
        let y = (self.func)(x);
        if self.sd == 0.0 {
            return y;
        }
        let normal = Normal::new(0.0, self.sd).expect("validated sd");
        y + normal.sample(&mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    // Written independently from the definitions above.
    fn levy_reference(x: &[f64]) -> f64 {
        let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) * 0.25).collect();
        let mut f = (std::f64::consts::PI * w[0]).sin().powi(2);
        f += (w[0] - 1.0).powi(2) * (1.0 + 10.0 * (std::f64::consts::PI * w[0] + 1.0).sin().powi(2));
        f += (w[1] - 1.0).powi(2) * (1.0 + (2.0 * std::f64::consts::PI * w[1]).sin().powi(2));
        -f
    }

    fn hartmann_reference(x: &[f64]) -> f64 {
        let a = [1.0, 1.2, 3.0, 3.2];
        let big_a = [
            10.0, 3.0, 17.0, 3.5, 1.7, 8.0, //
            0.05, 10.0, 17.0, 0.1, 8.0, 14.0, //
            3.0, 3.5, 1.7, 10.0, 17.0, 8.0, //
            17.0, 8.0, 0.05, 10.0, 0.1, 14.0,
        ];
        let p = [
            0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886, //
            0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991, //
            0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650, //
            0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381,
        ];
        (0..4)
            .map(|i| {
                let s: f64 = (0..6).map(|j| big_a[6 * i + j] * (x[j] - p[6 * i + j]).powi(2)).sum();
                a[i] * (-s).exp()
            })
            .sum()
    }

    #[test]
    fn levy_optimum_and_slices() {
        assert!(levy2_negated(&[1.0, 1.0]).abs() < 1e-30);
        for y in [-10.0, -3.0, 0.5, 2.0, 9.0] {
            assert!(levy2_negated(&[1.0, y]) < 0.0);
        }
    }

    #[test]
    fn double_entry_transcriptions_agree() {
        let mut rng = rng_from_seed(12);
        for _ in 0..10 {
            let x = [rng.random_range(-7.5..7.5), rng.random_range(-10.0..10.0)];
            assert!((levy2_negated(&x) - levy_reference(&x)).abs() <= 1e-12);
            let h: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            assert!((hartmann6_negated(&h) - hartmann_reference(&h)).abs() <= 1e-12);
        }
    }

    #[test]
    fn hartmann_optimum_and_range() {
        let v = hartmann6_negated(&[0.20, 0.15, 0.48, 0.28, 0.31, 0.66]);
        assert!((v - 3.32).abs() < 0.01, "{v}");
        let mut rng = rng_from_seed(3);
        for _ in 0..1000 {
            let h: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let v = hartmann6_negated(&h);
            assert!(v > 0.0 && v < 3.33);
        }
    }

    #[test]
    fn hartmann_presets() {
        assert_eq!(BenchmarkProblem::hartmann(1).unwrap().domain.env_indices(), &[5]);
        let p3 = BenchmarkProblem::hartmann(3).unwrap();
        assert_eq!(p3.domain.env_indices(), &[0, 3, 5]);
        assert_eq!(p3.env_steps, vec![0.1, 0.1, 0.05]);
        assert!(BenchmarkProblem::hartmann(4).is_err());
    }

    #[test]
    fn zero_noise_is_bit_identical() {
        let p = add_noise(&BenchmarkProblem::levy(), 0.0, 5).unwrap();
        let mut f = p.objective();
        for x in [[0.3, -2.0], [5.0, 7.0]] {
            assert_eq!(f.call(&x).to_bits(), levy2_negated(&x).to_bits());
        }
        assert!(add_noise(&p, -0.1, 1).is_err());
    }

    #[test]
    fn noise_distribution() {
        let p = add_noise(&BenchmarkProblem::hartmann(1).unwrap(), 0.05, 8).unwrap();
        let mut f = p.objective();
        let x = [0.5; 6];
        let clean = hartmann6_negated(&x);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| f.call(&x) - clean).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((sd - 0.05).abs() < 0.01 * 0.05, "{sd}");

        let p = add_noise(&p, 0.1, 9).unwrap();
        let mut f = p.objective();
        let inside = (0..n).filter(|_| (f.call(&x) - clean).abs() <= 0.1).count() as f64 / n as f64;
        assert!((inside - 0.683).abs() < 0.003, "{inside}");
    }
}
