//! Multi-start maximisation of a criterion over the controllable
//! coordinates of a box, with the environmental coordinates held fixed and
//! optional inequality constraints.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionSpec;
use crate::design::{check_bounds, maximin_lhs};
use crate::error::{invalid, Error, Result};
use crate::gp::GpModel;
use crate::optim::{minimize_box, numerical_gradient, BoxMinimizerOptions};

/// Search box split into environmental and controllable coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    env_indices: Vec<usize>,
    ctrl_indices: Vec<usize>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, mut env_indices: Vec<usize>) -> Result<Self> {
        check_bounds(&lower, &upper)?;
        let d = lower.len();
        env_indices.sort_unstable();
        env_indices.dedup();
        if let Some(&i) = env_indices.iter().find(|&&i| i >= d) {
            return Err(invalid(format!("environmental index {i} outside 0..{d}")));
        }
        let ctrl_indices = (0..d).filter(|i| !env_indices.contains(i)).collect();
        Ok(Self {
            lower,
            upper,
            env_indices,
            ctrl_indices,
        })
    }

    /// All coordinates controllable.
    pub fn controllable(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::new(lower, upper, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn env_indices(&self) -> &[usize] {
        &self.env_indices
    }

    pub fn ctrl_indices(&self) -> &[usize] {
        &self.ctrl_indices
    }

    pub fn env_lower(&self) -> Vec<f64> {
        self.env_indices.iter().map(|&i| self.lower[i]).collect()
    }

    pub fn env_upper(&self) -> Vec<f64> {
        self.env_indices.iter().map(|&i| self.upper[i]).collect()
    }

    pub fn ctrl_lower(&self) -> Vec<f64> {
        self.ctrl_indices.iter().map(|&i| self.lower[i]).collect()
    }

    pub fn ctrl_upper(&self) -> Vec<f64> {
        self.ctrl_indices.iter().map(|&i| self.upper[i]).collect()
    }

    /// Assembles a full input from controllable and environmental parts.
    pub fn embed(&self, ctrl: &[f64], env: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (k, &i) in self.ctrl_indices.iter().enumerate() {
            x[i] = ctrl[k];
        }
        for (k, &i) in self.env_indices.iter().enumerate() {
            x[i] = env[k];
        }
        x
    }

    pub fn env_part(&self, x: &[f64]) -> Vec<f64> {
        self.env_indices.iter().map(|&i| x[i]).collect()
    }

    pub fn ctrl_part(&self, x: &[f64]) -> Vec<f64> {
        self.ctrl_indices.iter().map(|&i| x[i]).collect()
    }

    /// Checks length and box membership of a full input.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            if !(v >= self.lower[i] && v <= self.upper[i]) {
                return Err(Error::OutOfBounds {
                    dim: i,
                    value: v,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    /// Checks length and box membership of environmental values.
    pub fn check_env(&self, env: &[f64]) -> Result<()> {
        if env.len() != self.env_indices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.env_indices.len(),
                got: env.len(),
            });
        }
        for (k, &i) in self.env_indices.iter().enumerate() {
            if !(env[k] >= self.lower[i] && env[k] <= self.upper[i]) {
                return Err(Error::OutOfBounds {
                    dim: i,
                    value: env[k],
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }
}

type ConstraintFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Named inequality constraint `g(x) >= 0` on the full input.
#[derive(Clone)]
pub struct Constraint {
    pub name: String,
    func: ConstraintFn,
}

impl Constraint {
    pub fn new(name: impl Into<String>, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Constraint").field("name", &self.name).finish()
    }
}

/// Constraint violations at or below this are treated as satisfied.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn with(mut self, name: impl Into<String>, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.push(Constraint::new(name, func));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter()
    }

    /// Total violation `sum_k max(0, -g_k(x))`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| (-c.eval(x)).max(0.0)).sum()
    }

    /// Largest single violation `max_k max(0, -g_k(x))`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| (-c.eval(x)).max(0.0)).fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.max_violation(x) <= FEASIBILITY_TOL
    }
}

/// Anything that yields a posterior mean and variance at a full input.
pub trait Surrogate: Sync {
    fn predict(&self, x: &[f64]) -> (f64, f64);

    fn predict_mean(&self, x: &[f64]) -> f64 {
        self.predict(x).0
    }
}

impl Surrogate for GpModel {
    fn predict(&self, x: &[f64]) -> (f64, f64) {
        GpModel::predict(self, x)
    }

    fn predict_mean(&self, x: &[f64]) -> f64 {
        GpModel::predict_mean(self, x)
    }
}

/// Start counts and local-ascent stopping rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiStartOptions {
    pub n_samples: usize,
    pub n_starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Finite-difference step in normalised coordinates.
    pub fd_step: f64,
    pub lhs_candidates: usize,
}

impl Default for MultiStartOptions {
    fn default() -> Self {
        Self {
            n_samples: 100,
            n_starts: 20,
            max_iters: 100,
            tol: 1e-8,
            fd_step: 1e-6,
            lhs_candidates: 20,
        }
    }
}

impl MultiStartOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_starts == 0 {
            return Err(invalid("multi-start needs at least one sample and one start"));
        }
        if !(self.fd_step > 0.0 && self.tol >= 0.0) {
            return Err(invalid("fd_step must be positive and tol non-negative"));
        }
        Ok(())
    }
}

/// Result of a conditional maximisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    /// False when no candidate satisfied the constraints; `x` is then the
    /// least-infeasible point found.
    pub feasible: bool,
    pub max_violation: f64,
    /// Number of criterion evaluations spent.
    pub evaluations: usize,
    /// Best feasible candidate at a different location, if any.
    pub runner_up: Option<Vec<f64>>,
}

const MAX_PENALTY_ROUNDS: usize = 20;

struct Candidate {
    x: Vec<f64>,
    value: f64,
    violation: f64,
    order: usize,
}

/// Maximises `f` over the controllable coordinates of `domain` with the
/// environmental coordinates fixed at `env_values`.
///
/// A maximin Latin hypercube of `n_samples` points over the controllable
/// subspace is scored; the best `n_starts` feed bounded quasi-Newton ascents
/// with finite-difference gradients in normalised coordinates. Constraints
/// enter the ascent through an exact penalty whose weight doubles while the
/// ascent ends infeasible. The sample points themselves remain candidates.
pub fn maximize_with<F>(
    f: F,
    domain: &Domain,
    env_values: &[f64],
    constraints: &ConstraintSet,
    seed: u64,
    opts: &MultiStartOptions,
) -> Result<Maximum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    opts.validate()?;
    domain.check_env(env_values)?;
    let lo = domain.ctrl_lower();
    let hi = domain.ctrl_upper();
    let dc = lo.len();
    let to_full = |u: &[f64]| -> Vec<f64> {
        let ctrl: Vec<f64> = u.iter().zip(lo.iter().zip(&hi)).map(|(&t, (&a, &b))| a + t * (b - a)).collect();
        domain.embed(&ctrl, env_values)
    };
    let eval = |x: &[f64]| -> f64 {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    if dc == 0 {
        let x = domain.embed(&[], env_values);
        let value = eval(&x);
        let max_violation = constraints.max_violation(&x);
        return Ok(Maximum {
            feasible: max_violation <= FEASIBILITY_TOL,
            x,
            value,
            max_violation,
            evaluations: 1,
            runner_up: None,
        });
    }

    let design = maximin_lhs(opts.n_samples, dc, seed, opts.lhs_candidates.max(1))?;
    let samples: Vec<(Vec<f64>, f64, f64)> = design
        .rows()
        .map(|u| {
            let x = to_full(u);
            let v = eval(&x);
            let viol = constraints.violation(&x);
            (u.to_vec(), v, viol)
        })
        .collect();
    let mut evaluations = samples.len();

    // Feasible samples first, then by value, then by index.
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = samples[a].2 <= FEASIBILITY_TOL;
        let fb = samples[b].2 <= FEASIBILITY_TOL;
        fb.cmp(&fa)
            .then(samples[b].1.total_cmp(&samples[a].1))
            .then(samples[a].2.total_cmp(&samples[b].2))
            .then(a.cmp(&b))
    });
    let starts: Vec<usize> = order.into_iter().take(opts.n_starts).collect();

    let scale = samples
        .iter()
        .map(|s| s.1)
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-6);
    let unit_lo = vec![0.0; dc];
    let unit_hi = vec![1.0; dc];
    let minimizer = BoxMinimizerOptions {
        max_iters: opts.max_iters,
        grad_tol: opts.tol,
        f_tol: opts.tol,
        memory: 10,
    };

    let ascents: Vec<(Candidate, usize)> = starts
        .par_iter()
        .enumerate()
        .map(|(rank, &si)| {
            let mut evals = 0usize;
            let mut u = samples[si].0.clone();
            let mut weight = 1e3 * scale;
            let counter = std::sync::atomic::AtomicUsize::new(0);
            for _ in 0..MAX_PENALTY_ROUNDS {
                let objective = |u: &[f64]| -> f64 {
                    counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let x = to_full(u);
                    let v = eval(&x);
                    if !v.is_finite() {
                        return f64::INFINITY;
                    }
                    let pen = if constraints.is_empty() { 0.0 } else { weight * constraints.violation(&x) };
                    -(v - pen)
                };
                let with_grad = |u: &[f64], g: &mut [f64]| -> f64 {
                    let fu = objective(u);
                    if !fu.is_finite() {
                        return f64::NAN;
                    }
                    numerical_gradient(&objective, u, fu, &unit_lo, &unit_hi, opts.fd_step, g);
                    fu
                };
                if let Some(m) = minimize_box(with_grad, &u, &unit_lo, &unit_hi, &minimizer) {
                    u = m.x;
                }
                if constraints.is_empty() || constraints.max_violation(&to_full(&u)) <= FEASIBILITY_TOL {
                    break;
                }
                weight *= 2.0;
            }
            evals += counter.load(std::sync::atomic::Ordering::Relaxed);
            let x = to_full(&u);
            let value = eval(&x);
            let violation = constraints.max_violation(&x);
            (
                Candidate {
                    x,
                    value,
                    violation,
                    order: rank,
                },
                evals,
            )
        })
        .collect();

    let mut candidates: Vec<Candidate> = Vec::with_capacity(ascents.len() + samples.len());
    for (c, e) in ascents {
        evaluations += e;
        candidates.push(c);
    }
    // Sample points rank after every ascent at equal value.
    for (rank, &si) in starts.iter().enumerate() {
        let x = to_full(&samples[si].0);
        let violation = constraints.max_violation(&x);
        candidates.push(Candidate {
            x,
            value: samples[si].1,
            violation,
            order: opts.n_starts + rank,
        });
    }
    for (i, s) in samples.iter().enumerate() {
        if !starts.contains(&i) {
            let x = to_full(&s.0);
            let violation = constraints.max_violation(&x);
            candidates.push(Candidate {
                x,
                value: s.1,
                violation,
                order: 2 * opts.n_starts + i,
            });
        }
    }

    let by_value = |a: &&Candidate, b: &&Candidate| b.value.total_cmp(&a.value).then(a.order.cmp(&b.order));
    let feasible = |c: &&Candidate| c.violation <= FEASIBILITY_TOL && c.value > f64::NEG_INFINITY;
    let best_feasible = candidates.iter().filter(feasible).min_by(by_value);
    let runner_up = best_feasible.and_then(|best| {
        candidates
            .iter()
            .filter(feasible)
            .filter(|c| c.x.iter().zip(&best.x).any(|(a, b)| (a - b).abs() > 1e-9))
            .min_by(by_value)
            .map(|c| c.x.clone())
    });
    let chosen = match best_feasible {
        Some(c) => c,
        None => candidates
            .iter()
            .min_by(|a, b| {
                a.violation
                    .total_cmp(&b.violation)
                    .then(b.value.total_cmp(&a.value))
                    .then(a.order.cmp(&b.order))
            })
            .expect("at least one candidate"),
    };
    Ok(Maximum {
        x: chosen.x.clone(),
        value: chosen.value,
        feasible: chosen.violation <= FEASIBILITY_TOL,
        max_violation: chosen.violation,
        evaluations,
        runner_up,
    })
}

/// Maximises an acquisition criterion built on `model`'s posterior
/// conditionally on `env_values`.
pub fn maximize_conditional<S: Surrogate + ?Sized>(
    model: &S,
    acq: &AcquisitionSpec,
    domain: &Domain,
    env_values: &[f64],
    constraints: &ConstraintSet,
    seed: u64,
    opts: &MultiStartOptions,
) -> Result<Maximum> {
    acq.validate()?;
    maximize_with(
        |x| {
            let (m, v) = model.predict(x);
            acq.evaluate(m, v)
        },
        domain,
        env_values,
        constraints,
        seed,
        opts,
    )
}

/// Maximises the posterior mean conditionally on `env_values`.
pub fn maximize_mean<S: Surrogate + ?Sized>(
    model: &S,
    domain: &Domain,
    env_values: &[f64],
    constraints: &ConstraintSet,
    seed: u64,
    opts: &MultiStartOptions,
) -> Result<Maximum> {
    maximize_with(|x| model.predict_mean(x), domain, env_values, constraints, seed, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::AcquisitionFamily;

    struct Quadratic;

    impl Surrogate for Quadratic {
        fn predict(&self, x: &[f64]) -> (f64, f64) {
            (-(x[0] - 0.3).powi(2), 0.0)
        }
    }

    struct Bumpy;

    impl Surrogate for Bumpy {
        fn predict(&self, x: &[f64]) -> (f64, f64) {
            let v = (7.0 * x[0]).sin() * (5.0 * x[1]).cos() - 0.3 * x[2] * x[2];
            (v, 0.1 + 0.05 * x[0])
        }
    }

    fn ucb(beta: f64) -> AcquisitionSpec {
        AcquisitionSpec {
            family: AcquisitionFamily::Ucb,
            y_best: f64::NAN,
            beta,
        }
    }

    #[test]
    fn quadratic_maximiser_found() {
        let domain = Domain::controllable(vec![0.0], vec![1.0]).unwrap();
        let r = maximize_conditional(&Quadratic, &ucb(1e-12), &domain, &[], &ConstraintSet::new(), 1, &MultiStartOptions::default()).unwrap();
        assert!((r.x[0] - 0.3).abs() < 1e-4, "{:?}", r);
        assert!(r.feasible);
    }

    #[test]
    fn env_coordinates_are_exact() {
        let domain = Domain::new(vec![-1.0, 0.0, -2.0], vec![1.0, 1.0, 2.0], vec![1]).unwrap();
        let env = 0.123_456_789_012_345_6;
        let r = maximize_conditional(&Bumpy, &ucb(2.0), &domain, &[env], &ConstraintSet::new(), 5, &MultiStartOptions::default()).unwrap();
        assert_eq!(r.x[1].to_bits(), env.to_bits());
        for i in 0..3 {
            assert!(r.x[i] >= domain.lower[i] && r.x[i] <= domain.upper[i]);
        }
    }

    #[test]
    fn result_dominates_every_sample() {
        let domain = Domain::new(vec![-1.0, 0.0, -2.0], vec![1.0, 1.0, 2.0], vec![2]).unwrap();
        let opts = MultiStartOptions::default();
        let acq = ucb(2.0);
        let r = maximize_conditional(&Bumpy, &acq, &domain, &[0.5], &ConstraintSet::new(), 9, &opts).unwrap();
        let design = maximin_lhs(opts.n_samples, 2, 9, opts.lhs_candidates).unwrap();
        for u in design.rows() {
            let x = domain.embed(&[-1.0 + 2.0 * u[0], u[1]], &[0.5]);
            let (m, v) = Bumpy.predict(&x);
            assert!(r.value >= acq.evaluate(m, v));
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let domain = Domain::new(vec![-1.0, 0.0, -2.0], vec![1.0, 1.0, 2.0], vec![0]).unwrap();
        let a = maximize_conditional(&Bumpy, &ucb(1.0), &domain, &[0.2], &ConstraintSet::new(), 3, &MultiStartOptions::default()).unwrap();
        let b = maximize_conditional(&Bumpy, &ucb(1.0), &domain, &[0.2], &ConstraintSet::new(), 3, &MultiStartOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constraint_is_respected() {
        // Unconstrained optimum at 0.3 is cut off by x >= 0.6.
        let domain = Domain::controllable(vec![0.0], vec![1.0]).unwrap();
        let cons = ConstraintSet::new().with("x >= 0.6", |x| x[0] - 0.6);
        let r = maximize_conditional(&Quadratic, &ucb(1e-12), &domain, &[], &cons, 1, &MultiStartOptions::default()).unwrap();
        assert!(r.feasible);
        assert!(r.x[0] >= 0.6 - 1e-6 && r.x[0] < 0.6 + 1e-3, "{:?}", r);
    }

    #[test]
    fn infeasible_problem_is_flagged() {
        let domain = Domain::controllable(vec![0.0], vec![1.0]).unwrap();
        let cons = ConstraintSet::new().with("impossible", |x| x[0] - 2.0);
        let r = maximize_conditional(&Quadratic, &ucb(1.0), &domain, &[], &cons, 1, &MultiStartOptions::default()).unwrap();
        assert!(!r.feasible);
        assert!((r.x[0] - 1.0).abs() < 1e-6);
        assert!((r.max_violation - 1.0).abs() < 1e-6);
    }

    #[test]
    fn env_out_of_bounds_is_rejected() {
        let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1]).unwrap();
        let r = maximize_conditional(&Quadratic, &ucb(1.0), &domain, &[1.5], &ConstraintSet::new(), 1, &MultiStartOptions::default());
        assert!(matches!(r, Err(Error::OutOfBounds { .. })));
        assert!(Domain::new(vec![0.0], vec![1.0], vec![3]).is_err());
    }
}
