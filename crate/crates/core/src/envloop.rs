//! Sequential optimisation engines: standard Bayesian optimisation, the
//! environment-conditioned variant, a random-control baseline, and the
//! ask-tell primitives they are built from.

use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::acqopt::{maximize_conditional, maximize_mean, ConstraintSet, Domain, MultiStartOptions};
use crate::acquisition::{AcquisitionFamily, AcquisitionSpec, DEFAULT_BETA};
use crate::design::maximin_lhs;
use crate::envsim::EnvSource;
use crate::error::{invalid, Error, Result};
use crate::gp::{fit_mle_with_start, Dataset, FitOptions, GpModel, InputScaling, ModelSummary};
use crate::rng::{derive_seed, rng_from_seed, streams};

/// Schema version written into session files.
pub const SESSION_VERSION: u32 = 1;

/// Attempts at drawing a feasible uniform-random control point.
const MAX_REJECTION_DRAWS: usize = 10_000;

/// Outcome of one objective evaluation; `Err` marks a failed evaluation.
pub type Evaluation = std::result::Result<f64, String>;

/// Surrogate, acquisition and inner-optimiser settings of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopSettings {
    pub acquisition: AcquisitionFamily,
    pub beta: f64,
    pub fit: FitOptions,
    pub multistart: MultiStartOptions,
    /// Seed each likelihood ascent set with the previous step's estimate.
    pub warm_start: bool,
}

impl Default for LoopSettings {
    fn default() -> Self {
        Self {
            acquisition: AcquisitionFamily::Ei,
            beta: DEFAULT_BETA,
            fit: FitOptions::default(),
            multistart: MultiStartOptions::default(),
            warm_start: true,
        }
    }
}

impl LoopSettings {
    pub fn with_acquisition(mut self, family: AcquisitionFamily) -> Self {
        self.acquisition = family;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.acquisition == AcquisitionFamily::Ucb && !(self.beta > 0.0) {
            return Err(invalid("UCB needs beta > 0"));
        }
        self.multistart.validate()
    }

    fn spec(&self, y_best: f64) -> AcquisitionSpec {
        AcquisitionSpec {
            family: self.acquisition,
            y_best,
            beta: self.beta,
        }
    }
}

/// How a point was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointSource {
    /// Random controllable values at a measured environment.
    Initial,
    /// Space-filling initial design.
    Design,
    /// Acquisition maximisation.
    Acquisition,
    /// Uniform-random controllable values (baseline method).
    Random,
    /// Supplied by the caller without a pending suggestion.
    External,
}

/// One successful evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub step: usize,
    pub env: Vec<f64>,
    pub ctrl: Vec<f64>,
    pub x: Vec<f64>,
    pub y: f64,
    pub source: PointSource,
    pub acq_value: Option<f64>,
    pub model: Option<ModelSummary>,
    /// Internal-space log hyperparameters of the fit behind the suggestion.
    pub log_params: Option<Vec<f64>>,
    pub wall_time_s: f64,
}

impl RunRecord {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        let mut a = self.clone();
        a.wall_time_s = other.wall_time_s;
        a == *other
    }
}

/// A failed evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub step: usize,
    pub x: Vec<f64>,
    pub reason: String,
    pub consumed_budget: bool,
}

/// A proposed point with the model information behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub x: Vec<f64>,
    pub env: Vec<f64>,
    pub source: PointSource,
    pub acq_value: Option<f64>,
    pub model: Option<ModelSummary>,
    pub log_params: Option<Vec<f64>>,
    pub feasible: bool,
    /// Next-best acquisition candidate, used when evaluating `x` fails.
    pub runner_up: Option<Vec<f64>>,
    /// Dataset size the suggestion was computed from.
    pub dataset_len: usize,
}

/// Everything needed to continue a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignState {
    pub version: u32,
    pub domain: Domain,
    pub settings: LoopSettings,
    pub budget: usize,
    pub seed: u64,
    pub evaluations_used: usize,
    pub dataset: Dataset,
    pub trace: Vec<RunRecord>,
    #[serde(default)]
    pub failures: Vec<FailureRecord>,
    /// Last suggestion handed out and not yet observed.
    #[serde(default)]
    pub pending: Option<Suggestion>,
}

impl CampaignState {
    pub fn new(domain: Domain, settings: LoopSettings, budget: usize, seed: u64) -> Result<Self> {
        settings.validate()?;
        if budget == 0 {
            return Err(invalid("budget must be at least 1"));
        }
        Ok(Self {
            version: SESSION_VERSION,
            domain,
            settings,
            budget,
            seed,
            evaluations_used: 0,
            dataset: Dataset::default(),
            trace: Vec::new(),
            failures: Vec::new(),
            pending: None,
        })
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.evaluations_used)
    }

    pub fn is_complete(&self) -> bool {
        self.evaluations_used >= self.budget
    }

    /// Incumbent pair with the highest observation.
    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.dataset.best().map(|(i, y)| (self.dataset.inputs[i].as_slice(), y))
    }

    /// Environmental values recorded in the trace, in order.
    pub fn env_history(&self) -> Vec<Vec<f64>> {
        self.trace.iter().map(|r| r.env.clone()).collect()
    }

    /// `[min, max]` of the observed environmental values, per variable.
    pub fn effective_domain(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let ne = self.domain.env_indices().len();
        if self.trace.is_empty() || ne == 0 {
            return None;
        }
        let mut lo = vec![f64::INFINITY; ne];
        let mut hi = vec![f64::NEG_INFINITY; ne];
        for r in &self.trace {
            for k in 0..ne {
                lo[k] = lo[k].min(r.env[k]);
                hi[k] = hi[k].max(r.env[k]);
            }
        }
        Some((lo, hi))
    }

    fn fit_seed(&self, n: usize) -> u64 {
        derive_seed(derive_seed(self.seed, streams::FIT), n as u64)
    }

    fn warm_start_for(&self, n: usize) -> Option<Vec<f64>> {
        if !self.settings.warm_start {
            return None;
        }
        self.trace[..n.min(self.trace.len())].iter().rev().find_map(|r| r.log_params.clone())
    }

    /// GP fitted on the first `n` observations, with the seeding used when
    /// suggesting the `(n + 1)`-th point.
    pub fn model_at(&self, n: usize) -> Result<GpModel> {
        self.model_at_with_seed(n, self.fit_seed(n))
    }

    /// As [`CampaignState::model_at`] with an explicit likelihood seed.
    pub fn model_at_with_seed(&self, n: usize, seed: u64) -> Result<GpModel> {
        if n == 0 || n > self.dataset.len() {
            return Err(Error::EmptyDataset);
        }
        let data = self.dataset.prefix(n);
        let scaling = InputScaling::new(self.domain.lower.clone(), self.domain.upper.clone())?;
        let warm = self.warm_start_for(n);
        fit_mle_with_start(&data, &scaling, seed, &self.settings.fit, warm.as_deref())
    }

    /// GP fitted on the whole dataset.
    pub fn final_model(&self) -> Result<GpModel> {
        self.model_at(self.dataset.len())
    }

    /// Seed used by the final fit; checkpoint refits reuse it.
    pub fn final_fit_seed(&self) -> u64 {
        self.fit_seed(self.dataset.len())
    }

    /// Writes the state as JSON through a temporary file and a rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = std::path::PathBuf::from(tmp);
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let state: CampaignState = serde_json::from_str(&text)?;
        if state.version != SESSION_VERSION {
            return Err(Error::Session(format!(
                "unsupported session version {} (expected {SESSION_VERSION})",
                state.version
            )));
        }
        Ok(state)
    }
}

fn uniform_ctrl(domain: &Domain, env: &[f64], constraints: &ConstraintSet, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let lo = domain.ctrl_lower();
    let hi = domain.ctrl_upper();
    let mut x = Vec::new();
    for _ in 0..MAX_REJECTION_DRAWS {
        let ctrl: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + rng.random::<f64>() * (b - a)).collect();
        x = domain.embed(&ctrl, env);
        if constraints.is_feasible(&x) {
            break;
        }
    }
    x
}

/// Initial point at a measured environment: uniform-random controllable
/// values (redrawn until the constraints hold). `attempt` selects an
/// independent draw.
pub fn initial_point(state: &CampaignState, env: &[f64], constraints: &ConstraintSet, attempt: u64) -> Result<Suggestion> {
    state.domain.check_env(env)?;
    let seed = derive_seed(derive_seed(state.seed, streams::INITIAL), attempt);
    let x = uniform_ctrl(&state.domain, env, constraints, seed);
    Ok(Suggestion {
        feasible: constraints.is_feasible(&x),
        x,
        env: env.to_vec(),
        source: PointSource::Initial,
        acq_value: None,
        model: None,
        log_params: None,
        runner_up: None,
        dataset_len: state.dataset.len(),
    })
}

/// Fits the surrogate on the current dataset and maximises the acquisition
/// over the controllable coordinates at the measured environment. Pure: the
/// state is not modified and no budget is consumed.
pub fn suggest(state: &CampaignState, env: &[f64], constraints: &ConstraintSet) -> Result<Suggestion> {
    if state.dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    state.domain.check_env(env)?;
    let n = state.dataset.len();
    let model = state.model_at(n)?;
    let y_best = state.dataset.best().map(|(_, y)| y).unwrap_or(f64::NEG_INFINITY);
    let acq = state.settings.spec(y_best);
    let seed = derive_seed(derive_seed(state.seed, streams::ACQ), n as u64);
    let best = maximize_conditional(&model, &acq, &state.domain, env, constraints, seed, &state.settings.multistart)?;
    Ok(Suggestion {
        x: best.x,
        env: env.to_vec(),
        source: PointSource::Acquisition,
        acq_value: Some(best.value),
        model: Some(model.summary()),
        log_params: Some(model.log_params()),
        feasible: best.feasible,
        runner_up: best.runner_up,
        dataset_len: n,
    })
}

/// Appends an observation and consumes one evaluation. When `x` equals the
/// pending suggestion its model information is kept in the trace.
pub fn observe(state: &mut CampaignState, x: &[f64], y: f64) -> Result<()> {
    observe_timed(state, x, y, 0.0)
}

fn observe_timed(state: &mut CampaignState, x: &[f64], y: f64, wall_time_s: f64) -> Result<()> {
    state.domain.check_point(x)?;
    if !y.is_finite() {
        return Err(invalid(format!("observation must be a finite number (got {y})")));
    }
    let pending = state.pending.take().filter(|s| s.x.as_slice() == x);
    let step = state.trace.len();
    let record = match pending {
        Some(s) => RunRecord {
            step,
            env: s.env,
            ctrl: state.domain.ctrl_part(x),
            x: x.to_vec(),
            y,
            source: s.source,
            acq_value: s.acq_value,
            model: s.model,
            log_params: s.log_params,
            wall_time_s,
        },
        None => RunRecord {
            step,
            env: state.domain.env_part(x),
            ctrl: state.domain.ctrl_part(x),
            x: x.to_vec(),
            y,
            source: PointSource::External,
            acq_value: None,
            model: None,
            log_params: None,
            wall_time_s,
        },
    };
    state.dataset.push(x.to_vec(), y);
    state.trace.push(record);
    state.evaluations_used += 1;
    Ok(())
}

fn evaluate<F: FnMut(&[f64]) -> Evaluation>(objective: &mut F, x: &[f64]) -> Evaluation {
    match objective(x) {
        Ok(y) if y.is_finite() => Ok(y),
        Ok(y) => Err(format!("objective returned non-finite value {y}")),
        Err(e) => Err(e),
    }
}

/// Evaluates a suggestion; on failure retries once at `fallback`. A second
/// failure is recorded and consumes budget.
fn evaluate_with_retry<F: FnMut(&[f64]) -> Evaluation>(
    state: &mut CampaignState,
    objective: &mut F,
    mut suggestion: Suggestion,
    fallback: impl FnOnce(&CampaignState) -> Result<Vec<f64>>,
) -> Result<()> {
    let start = Instant::now();
    match evaluate(objective, &suggestion.x) {
        Ok(y) => {
            state.pending = Some(suggestion.clone());
            return observe_timed(state, &suggestion.x, y, start.elapsed().as_secs_f64());
        }
        Err(reason) => {
            log::warn!("evaluation failed at step {}: {reason}; retrying once", state.evaluations_used);
            state.failures.push(FailureRecord {
                step: state.evaluations_used,
                x: suggestion.x.clone(),
                reason,
                consumed_budget: false,
            });
        }
    }
    let retry_x = match suggestion.runner_up.take() {
        Some(x) => x,
        None => fallback(state)?,
    };
    suggestion.x = retry_x;
    match evaluate(objective, &suggestion.x) {
        Ok(y) => {
            state.pending = Some(suggestion.clone());
            observe_timed(state, &suggestion.x, y, start.elapsed().as_secs_f64())
        }
        Err(reason) => {
            log::warn!("retry failed at step {}: {reason}", state.evaluations_used);
            state.failures.push(FailureRecord {
                step: state.evaluations_used,
                x: suggestion.x,
                reason,
                consumed_budget: true,
            });
            state.evaluations_used += 1;
            Ok(())
        }
    }
}

/// Default size of the space-filling initial design for `d` inputs and
/// budget `n`: `5 d`, capped at `n / 4`, at least one.
pub fn default_initial_design(d: usize, n: usize) -> usize {
    (5 * d).min(n / 4).max(1)
}

/// Standard Bayesian optimisation over a fully controllable domain:
/// `n0` maximin Latin hypercube points followed by `budget - n0`
/// acquisition steps.
pub fn run_bo<F: FnMut(&[f64]) -> Evaluation>(
    mut objective: F,
    domain: &Domain,
    constraints: &ConstraintSet,
    settings: &LoopSettings,
    budget: usize,
    n0: Option<usize>,
    seed: u64,
) -> Result<CampaignState> {
    if !domain.env_indices().is_empty() {
        return Err(invalid("standard BO needs a fully controllable domain"));
    }
    let d = domain.dim();
    let n0 = n0.unwrap_or_else(|| default_initial_design(d, budget));
    if n0 == 0 || n0 > budget {
        return Err(invalid(format!("initial design size {n0} must lie in 1..={budget}")));
    }
    let mut state = CampaignState::new(domain.clone(), settings.clone(), budget, seed)?;
    let design_seed = derive_seed(seed, streams::INITIAL);
    let design = maximin_lhs(n0, d, design_seed, crate::design::DEFAULT_MAXIMIN_CANDIDATES)?;
    let rows: Vec<Vec<f64>> = design.rows().map(<[f64]>::to_vec).collect();
    for (i, u) in rows.iter().enumerate() {
        let mut x: Vec<f64> = u
            .iter()
            .zip(domain.lower.iter().zip(&domain.upper))
            .map(|(t, (a, b))| a + t * (b - a))
            .collect();
        if !constraints.is_feasible(&x) {
            x = uniform_ctrl(domain, &[], constraints, derive_seed(design_seed, i as u64));
        }
        let s = Suggestion {
            x,
            env: Vec::new(),
            source: PointSource::Design,
            acq_value: None,
            model: None,
            log_params: None,
            feasible: true,
            runner_up: None,
            dataset_len: state.dataset.len(),
        };
        let retry_seed = derive_seed(design_seed, (1000 + i) as u64);
        evaluate_with_retry(&mut state, &mut objective, s, |st| {
            Ok(uniform_ctrl(&st.domain, &[], constraints, retry_seed))
        })?;
    }
    while !state.is_complete() {
        let s = if state.dataset.is_empty() {
            initial_point(&state, &[], constraints, state.evaluations_used as u64)?
        } else {
            suggest(&state, &[], constraints)?
        };
        let retry_seed = derive_seed(derive_seed(seed, streams::RANDOM_CTRL), state.evaluations_used as u64);
        evaluate_with_retry(&mut state, &mut objective, s, |st| {
            Ok(uniform_ctrl(&st.domain, &[], constraints, retry_seed))
        })?;
    }
    Ok(state)
}

/// Environment-conditioned Bayesian optimisation: one initial point with
/// measured environment and random controllable values, then `budget - 1`
/// steps of fit, measure, conditional acquisition maximisation, evaluate.
pub fn run_envbo<F, E>(
    mut objective: F,
    domain: &Domain,
    env: &mut E,
    constraints: &ConstraintSet,
    settings: &LoopSettings,
    budget: usize,
    seed: u64,
) -> Result<CampaignState>
where
    F: FnMut(&[f64]) -> Evaluation,
    E: EnvSource + ?Sized,
{
    if domain.env_indices().is_empty() {
        return Err(invalid("ENVBO needs at least one environmental variable"));
    }
    if budget < 2 {
        return Err(invalid("ENVBO needs a budget of at least 2"));
    }
    let mut state = CampaignState::new(domain.clone(), settings.clone(), budget, seed)?;
    let mut attempt = 0u64;
    while !state.is_complete() {
        let measured = env.measure();
        let s = if state.dataset.is_empty() {
            attempt += 1;
            initial_point(&state, &measured, constraints, attempt - 1)?
        } else {
            suggest(&state, &measured, constraints)?
        };
        attempt += 1;
        let retry_attempt = attempt - 1;
        evaluate_with_retry(&mut state, &mut objective, s, |st| {
            Ok(initial_point(st, &measured, constraints, retry_attempt)?.x)
        })?;
    }
    Ok(state)
}

/// Baseline: measured environment with uniform-random controllable values.
/// The first point coincides with the one [`run_envbo`] draws for the same
/// seed and environment.
pub fn run_random<F, E>(
    mut objective: F,
    domain: &Domain,
    env: &mut E,
    constraints: &ConstraintSet,
    budget: usize,
    seed: u64,
) -> Result<CampaignState>
where
    F: FnMut(&[f64]) -> Evaluation,
    E: EnvSource + ?Sized,
{
    let mut state = CampaignState::new(domain.clone(), LoopSettings::default(), budget, seed)?;
    let mut attempt = 0u64;
    while !state.is_complete() {
        let measured = env.measure();
        let mut s = initial_point(&state, &measured, constraints, attempt)?;
        if !state.dataset.is_empty() {
            let ctrl_seed = derive_seed(derive_seed(seed, streams::RANDOM_CTRL), attempt);
            s.x = uniform_ctrl(domain, &measured, constraints, ctrl_seed);
            s.source = PointSource::Random;
        }
        attempt += 1;
        let retry_seed = derive_seed(derive_seed(seed, streams::RANDOM_CTRL), attempt + (1 << 32));
        evaluate_with_retry(&mut state, &mut objective, s, |st| {
            Ok(uniform_ctrl(&st.domain, &measured, constraints, retry_seed))
        })?;
    }
    Ok(state)
}

/// Maximiser of the posterior mean over the controllable coordinates with
/// the environment fixed: `(x_ctrl, predicted)`.
pub fn conditional_optimum(
    model: &GpModel,
    domain: &Domain,
    env_values: &[f64],
    constraints: &ConstraintSet,
    seed: u64,
    opts: &MultiStartOptions,
) -> Result<(Vec<f64>, f64)> {
    let best = maximize_mean(model, domain, env_values, constraints, seed, opts)?;
    Ok((domain.ctrl_part(&best.x), best.value))
}

/// Wraps an infallible objective.
pub fn infallible<F: FnMut(&[f64]) -> f64>(mut f: F) -> impl FnMut(&[f64]) -> Evaluation {
    move |x| Ok(f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envsim::{EnvWalk, StartPolicy};

    fn quick_settings() -> LoopSettings {
        LoopSettings {
            fit: FitOptions {
                n_restarts: 3,
                ..FitOptions::default()
            },
            ..LoopSettings::default()
        }
    }

    fn bowl(x: &[f64]) -> f64 {
        -(x[0] - 0.3).powi(2) - 0.5 * (x[1] - 0.6).powi(2) + 0.2 * x[1]
    }

    #[test]
    fn budget_and_initial_point() {
        let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1]).unwrap();
        let mut walk = EnvWalk::new(vec![0.0], vec![1.0], vec![0.1], 3, &StartPolicy::Midpoint).unwrap();
        let state = run_envbo(infallible(bowl), &domain, &mut walk, &ConstraintSet::new(), &quick_settings(), 8, 11).unwrap();
        assert_eq!(state.dataset.len(), 8);
        assert_eq!(state.trace.len(), 8);
        assert_eq!(state.trace[0].source, PointSource::Initial);
        assert!(state.trace[1..].iter().all(|r| r.source == PointSource::Acquisition));
        assert_eq!(state.trace[0].env, vec![0.5]);
        for r in &state.trace {
            assert_eq!(r.x[1].to_bits(), r.env[0].to_bits());
        }
    }

    #[test]
    fn incumbent_is_monotone() {
        let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1]).unwrap();
        let mut walk = EnvWalk::new(vec![0.0], vec![1.0], vec![0.2], 4, &StartPolicy::Midpoint).unwrap();
        let state = run_envbo(infallible(bowl), &domain, &mut walk, &ConstraintSet::new(), &quick_settings(), 10, 2).unwrap();
        let mut best = f64::NEG_INFINITY;
        for r in &state.trace {
            let next = best.max(r.y);
            assert!(next >= best);
            best = next;
        }
        assert_eq!(state.best().unwrap().1, best);
    }

    #[test]
    fn suggest_is_pure_and_rejects_empty() {
        let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1]).unwrap();
        let mut state = CampaignState::new(domain, quick_settings(), 10, 5).unwrap();
        assert!(matches!(suggest(&state, &[0.5], &ConstraintSet::new()), Err(Error::EmptyDataset)));
        observe(&mut state, &[0.1, 0.5], bowl(&[0.1, 0.5])).unwrap();
        observe(&mut state, &[0.9, 0.4], bowl(&[0.9, 0.4])).unwrap();
        let a = suggest(&state, &[0.5], &ConstraintSet::new()).unwrap();
        let b = suggest(&state, &[0.5], &ConstraintSet::new()).unwrap();
        assert_eq!(a, b);
        assert_eq!(state.evaluations_used, 2);
        assert!(observe(&mut state, &[0.1], 1.0).is_err());
        assert!(observe(&mut state, &[0.1, 0.5], f64::NAN).is_err());
        assert!(observe(&mut state, &[1.1, 0.5], 0.0).is_err());
    }

    #[test]
    fn failures_retry_then_consume_budget() {
        let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1]).unwrap();
        let mut walk = EnvWalk::new(vec![0.0], vec![1.0], vec![0.1], 3, &StartPolicy::Midpoint).unwrap();
        let mut calls = 0;
        let objective = |x: &[f64]| -> Evaluation {
            calls += 1;
            // Calls 3 and 4 fail: one step loses its budget.
            if calls == 3 || calls == 4 {
                Err("simulated crash".into())
            } else {
                Ok(bowl(x))
            }
        };
        let state = run_envbo(objective, &domain, &mut walk, &ConstraintSet::new(), &quick_settings(), 6, 1).unwrap();
        assert_eq!(state.evaluations_used, 6);
        assert_eq!(state.dataset.len(), 5);
        assert_eq!(state.failures.len(), 2);
        assert!(!state.failures[0].consumed_budget && state.failures[1].consumed_budget);
    }

    #[test]
    fn bo_design_then_acquisition() {
        let domain = Domain::controllable(vec![0.0], vec![1.0]).unwrap();
        let state = run_bo(infallible(|x| -(x[0] - 0.5).powi(2)), &domain, &ConstraintSet::new(), &quick_settings(), 5, Some(5), 1).unwrap();
        assert!(state.trace.iter().all(|r| r.source == PointSource::Design));
        let state = run_bo(infallible(|x| -(x[0] - 0.5).powi(2)), &domain, &ConstraintSet::new(), &quick_settings(), 12, Some(3), 1).unwrap();
        assert_eq!(state.trace.iter().filter(|r| r.source == PointSource::Design).count(), 3);
        assert!((state.best().unwrap().0[0] - 0.5).abs() < 0.05);
        assert_eq!(default_initial_design(4, 50), 12);
        assert_eq!(default_initial_design(1, 2), 1);
    }

    #[test]
    fn session_round_trip() {
        let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1]).unwrap();
        let mut walk = EnvWalk::new(vec![0.0], vec![1.0], vec![0.1], 3, &StartPolicy::Midpoint).unwrap();
        let state = run_envbo(infallible(bowl), &domain, &mut walk, &ConstraintSet::new(), &quick_settings(), 4, 11).unwrap();
        let dir = std::env::temp_dir().join(format!("envbo-session-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.json");
        state.save(&path).unwrap();
        let back = CampaignState::load(&path).unwrap();
        assert_eq!(back, state);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
