use serde::{Deserialize, Serialize};

use super::metrics::mape;
use super::problems::BenchmarkProblem;
use crate::acqopt::{maximize_with, ConstraintSet, MultiStartOptions};
use crate::design::{maximin_lhs, DEFAULT_MAXIMIN_CANDIDATES};
use crate::envloop::{conditional_optimum, CampaignState};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, streams};

/// Points of the controllable grid used to cross-check one-dimensional
/// slices.
pub const SLICE_GRID_POINTS: usize = 10_000;

/// Settings of the prediction-versus-truth protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Test points; `None` uses the problem default.
    pub test_points: Option<usize>,
    pub checkpoint_every: usize,
    pub multistart: MultiStartOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            test_points: None,
            checkpoint_every: 10,
            multistart: MultiStartOptions::default(),
        }
    }
}

/// Prediction error of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `(evaluations, MAPE)` at every checkpoint; the last is the final one.
    pub checkpoints: Vec<(usize, f64)>,
    pub final_mape: f64,
    pub effective_lower: Vec<f64>,
    pub effective_upper: Vec<f64>,
    /// Product of the effective-domain widths.
    pub effective_size: f64,
    /// True when some environmental variable never moved.
    pub degenerate: bool,
    pub test_points: Vec<Vec<f64>>,
    pub truth: Vec<f64>,
    pub predicted: Vec<f64>,
}

/// Maximum of the clean objective over the controllable coordinates with
/// the environment fixed: multi-start ascent, and on a one-dimensional
/// controllable slice the larger of that and a dense grid.
pub fn truth_conditional_max(problem: &BenchmarkProblem, env_values: &[f64], seed: u64) -> Result<(Vec<f64>, f64)> {
    truth_conditional_max_with(problem, env_values, seed, &MultiStartOptions::default())
}

pub fn truth_conditional_max_with(
    problem: &BenchmarkProblem,
    env_values: &[f64],
    seed: u64,
    opts: &MultiStartOptions,
) -> Result<(Vec<f64>, f64)> {
    let domain = &problem.domain;
    let best = maximize_with(|x| problem.eval(x), domain, env_values, &ConstraintSet::new(), seed, opts)?;
    let mut x = best.x;
    let mut value = best.value;
    if domain.ctrl_indices().len() == 1 {
        let (lo, hi) = (domain.ctrl_lower()[0], domain.ctrl_upper()[0]);
        for k in 0..SLICE_GRID_POINTS {
            let c = lo + (hi - lo) * k as f64 / (SLICE_GRID_POINTS - 1) as f64;
            let cand = domain.embed(&[c], env_values);
            let v = problem.eval(&cand);
            if v > value {
                value = v;
                x = cand;
            }
        }
    }
    Ok((domain.ctrl_part(&x), value))
}

/// Test values: a maximin Latin hypercube over the effective domain.
/// Variables whose effective range is a single value are held there.
pub fn effective_test_points(lower: &[f64], upper: &[f64], m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let design = maximin_lhs(m, lower.len(), seed, DEFAULT_MAXIMIN_CANDIDATES)?;
    Ok(design
        .rows()
        .map(|u| u.iter().zip(lower.iter().zip(upper)).map(|(t, (a, b))| a + t * (b - a)).collect())
        .collect())
}

/// Scores a finished campaign: conditional optima of the surrogate versus
/// the truth at test values inside the effective domain, every
/// `checkpoint_every` evaluations and at the end.
pub fn evaluate_campaign(state: &CampaignState, problem: &BenchmarkProblem, seed: u64, opts: &EvalOptions) -> Result<EvalReport> {
    if state.dataset.is_empty() {
        return Err(invalid("campaign has no observations"));
    }
    let (lo, hi) = state
        .effective_domain()
        .ok_or_else(|| invalid("campaign has no environmental variables"))?;
    let degenerate = lo.iter().zip(&hi).any(|(a, b)| a == b);
    if degenerate {
        log::warn!("effective domain is degenerate; test values collapse onto the visited value");
    }
    let m = opts.test_points.unwrap_or_else(|| problem.default_test_points());
    if m == 0 {
        return Err(invalid("at least one test point is required"));
    }
    let points = effective_test_points(&lo, &hi, m, derive_seed(seed, streams::TEST_POINTS))?;
    let truth_seed = derive_seed(seed, streams::TRUTH);
    let truth = points
        .iter()
        .map(|e| truth_conditional_max_with(problem, e, truth_seed, &opts.multistart).map(|t| t.1))
        .collect::<Result<Vec<f64>>>()?;

    let n = state.dataset.len();
    let every = opts.checkpoint_every.max(1);
    let mut steps: Vec<usize> = (1..=n / every).map(|k| k * every).collect();
    if steps.last() != Some(&n) {
        steps.push(n);
    }
    let fit_seed = state.final_fit_seed();
    let predict_seed = derive_seed(seed, streams::PREDICT);
    let mut checkpoints = Vec::with_capacity(steps.len());
    let mut predicted = Vec::new();
    for &k in &steps {
        let model = state.model_at_with_seed(k, fit_seed)?;
        let preds = points
            .iter()
            .map(|e| conditional_optimum(&model, &state.domain, e, &ConstraintSet::new(), predict_seed, &opts.multistart).map(|r| r.1))
            .collect::<Result<Vec<f64>>>()?;
        checkpoints.push((k, mape(&preds, &truth)?));
        predicted = preds;
    }
    let final_mape = checkpoints.last().map(|c| c.1).unwrap_or(f64::NAN);
    Ok(EvalReport {
        checkpoints,
        final_mape,
        effective_size: lo.iter().zip(&hi).map(|(a, b)| b - a).product(),
        effective_lower: lo,
        effective_upper: hi,
        degenerate,
        test_points: points,
        truth,
        predicted,
    })
}
