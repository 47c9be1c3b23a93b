//! Box-constrained limited-memory quasi-Newton minimisation.
//!
//! Projected L-BFGS: the search direction comes from the two-loop recursion
//! restricted to the variables that are not pinned at an active bound, and the
//! step is taken along the projected path `P(x + t d)` with Armijo
//! backtracking. Non-finite objective values are treated as infeasible and
//! cause the step to shrink.

use std::collections::VecDeque;

/// Stopping rules for [`minimize_box`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxMinimizerOptions {
    pub max_iters: usize,
    /// Infinity norm of the projected gradient.
    pub grad_tol: f64,
    /// Relative decrease of the objective between iterations.
    pub f_tol: f64,
    pub memory: usize,
}

impl Default for BoxMinimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-6,
            f_tol: 2.2e-9,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimises `f` over the box `[lower, upper]` starting from `x0`.
///
/// `f` writes the gradient into its second argument and returns the value.
/// Returns `None` if the objective is not finite at the (projected) start.
pub fn minimize_box<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &BoxMinimizerOptions,
) -> Option<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x: Vec<f64> = x0.iter().zip(lower.iter().zip(upper)).map(|(&v, (&lo, &hi))| v.clamp(lo, hi)).collect();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        let free = free_mask(&x, &g, lower, upper);
        let pg_norm = g.iter().zip(&free).filter(|(_, &fr)| fr).map(|(v, _)| v.abs()).fold(0.0, f64::max);
        if pg_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut d = two_loop(&g, &free, &history);
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            history.clear();
            d = two_loop(&g, &free, &history);
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                converged = true;
                break;
            }
        }

        // Armijo backtracking along the projected path.
        let mut t = 1.0;
        let mut accepted = false;
        let mut f_new = f64::INFINITY;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = (x[i] + t * d[i]).clamp(lower[i], upper[i]);
            }
            f_new = f(&x_new, &mut g_new);
            evaluations += 1;
            let decrease: f64 = g.iter().zip(x_new.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if f_new.is_finite() && g_new.iter().all(|v| v.is_finite()) && f_new <= fx + 1e-4 * decrease {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if sy > 1e-10 * yy.sqrt() * s.iter().map(|v| v * v).sum::<f64>().sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let rel = (fx - f_new).abs() / fx.abs().max(f_new.abs()).max(1.0);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if rel <= opts.f_tol {
            converged = true;
            break;
        }
    }

    Some(Minimum {
        x,
        value: fx,
        iterations,
        evaluations,
        converged,
    })
}

fn free_mask(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<bool> {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&lo, &hi))| !((xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0)))
        .collect()
}

fn two_loop(g: &[f64], free: &[bool], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().zip(free).map(|(&v, &fr)| if fr { v } else { 0.0 }).collect();
    let masked_dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(free).filter(|(_, &fr)| fr).map(|((x, y), _)| x * y).sum()
    };
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * masked_dot(s, &q);
        for i in 0..q.len() {
            if free[i] {
                q[i] -= a * y[i];
            }
        }
        alphas.push(a);
    }
    let gamma = match history.back() {
        Some((s, y, _)) => {
            let sy = masked_dot(s, y);
            let yy = masked_dot(y, y);
            if sy > 0.0 && yy > 0.0 {
                sy / yy
            } else {
                1.0
            }
        }
        None => {
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                1.0 / norm.max(1.0)
            } else {
                1.0
            }
        }
    };
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * masked_dot(y, &q);
        for i in 0..q.len() {
            if free[i] {
                q[i] += s[i] * (a - b);
            }
        }
    }
    q.iter().zip(free).map(|(&v, &fr)| if fr { -v } else { 0.0 }).collect()
}

/// Central-difference gradient of `f` at `x`, falling back to one-sided
/// differences where a step would leave the box. Returns the number of
/// function evaluations spent.
pub fn numerical_gradient<F>(f: &F, x: &[f64], fx: f64, lower: &[f64], upper: &[f64], step: f64, grad: &mut [f64]) -> usize
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut probe = x.to_vec();
    let mut evals = 0;
    for i in 0..x.len() {
        let xi = x[i];
        let up = (xi + step).min(upper[i]);
        let down = (xi - step).max(lower[i]);
        let (f_up, f_down) = match (up > xi, down < xi) {
            (true, true) => {
                probe[i] = up;
                let a = f(&probe);
                probe[i] = down;
                let b = f(&probe);
                evals += 2;
                (a, b)
            }
            (true, false) => {
                probe[i] = up;
                evals += 1;
                (f(&probe), fx)
            }
            (false, true) => {
                probe[i] = down;
                evals += 1;
                (fx, f(&probe))
            }
            (false, false) => {
                grad[i] = 0.0;
                continue;
            }
        };
        let x_up = if up > xi { up } else { xi };
        let x_down = if down < xi { down } else { xi };
        grad[i] = (f_up - f_down) / (x_up - x_down);
        probe[i] = xi;
    }
    evals
}
