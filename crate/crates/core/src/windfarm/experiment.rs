use std::cell::Cell;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::farm::{FarmLayout, WindFarm, AMBIENT_SPEED, DIRECTION_RANGE, MIN_SPACING, N_TURBINES};
use super::spacing_constraints;
use crate::acqopt::ConstraintSet;
use crate::envloop::{conditional_optimum, run_bo, run_envbo, CampaignState, Evaluation, LoopSettings};
use crate::envsim::{EnvWalk, StartPolicy};
use crate::error::{invalid, Result};
use crate::optim::{minimize_box, numerical_gradient, BoxMinimizerOptions};
use crate::rng::{derive_seed, rng_from_seed};

const ENVBO_STREAM: u64 = 0xa001;
const BO_STREAM: u64 = 0xa002;
const DIRECT_STREAM: u64 = 0xa003;
const BASELINE_STREAM: u64 = 0xa004;
const GRID_STREAM: u64 = 0xa005;

/// Penalty per squared metre of spacing violation in direct search, GWh.
const DIRECT_PENALTY: f64 = 0.1;
/// Finite-difference step of direct search, metres.
const DIRECT_FD_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindMethod {
    Envbo,
    Bo,
    DirectSearch,
}

impl WindMethod {
    pub fn name(self) -> &'static str {
        match self {
            WindMethod::Envbo => "envbo",
            WindMethod::Bo => "bo",
            WindMethod::DirectSearch => "direct-search",
        }
    }
}

impl std::fmt::Display for WindMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindfarmConfig {
    pub methods: Vec<WindMethod>,
    pub envbo_budget: usize,
    /// Maximum change of the wind direction per evaluation, degrees.
    pub direction_step: f64,
    /// Fixed directions of the comparison.
    pub directions: Vec<f64>,
    pub bo_budget: usize,
    pub bo_initial: usize,
    pub direct_starts: usize,
    /// Directions on which ENVBO reports predicted layouts.
    pub grid_points: usize,
    /// Feasible random layouts averaged for the baseline.
    pub random_layouts: usize,
    pub seed: u64,
    pub settings: LoopSettings,
}

impl Default for WindfarmConfig {
    fn default() -> Self {
        Self {
            methods: vec![WindMethod::Envbo, WindMethod::Bo, WindMethod::DirectSearch],
            envbo_budget: 200,
            direction_step: 5.0,
            directions: vec![90.0, 105.0, 120.0, 135.0],
            bo_budget: 50,
            bo_initial: 10,
            direct_starts: 3,
            grid_points: 51,
            random_layouts: 100,
            seed: 0,
            settings: LoopSettings::default(),
        }
    }
}

impl WindfarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(invalid("no methods selected"));
        }
        if self.envbo_budget < 2 {
            return Err(invalid("ENVBO budget must be at least 2"));
        }
        if self.bo_initial == 0 || self.bo_initial > self.bo_budget {
            return Err(invalid("BO initial design must lie in 1..=bo_budget"));
        }
        if self.directions.iter().any(|d| !(*d >= DIRECTION_RANGE.0 && *d <= DIRECTION_RANGE.1)) {
            return Err(invalid("comparison directions must lie in [90, 135]"));
        }
        if self.grid_points < 2 {
            return Err(invalid("the direction grid needs at least two points"));
        }
        if !(self.direction_step.is_finite() && self.direction_step >= 0.0) {
            return Err(invalid("direction step must be non-negative"));
        }
        self.settings.validate()
    }

    /// Evenly spaced directions over `[90, 135]`.
    pub fn direction_grid(&self) -> Vec<f64> {
        let (lo, hi) = DIRECTION_RANGE;
        (0..self.grid_points)
            .map(|k| lo + (hi - lo) * k as f64 / (self.grid_points - 1) as f64)
            .collect()
    }
}

/// A layout proposed by one method for one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub method: WindMethod,
    pub direction: f64,
    /// Simulated AEP of the layout, GWh.
    pub aep: f64,
    /// Surrogate prediction, for ENVBO.
    pub predicted: Option<f64>,
    /// Evaluations attributed to this direction.
    pub evaluations: usize,
    pub feasible: bool,
    pub positions: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindfarmReport {
    pub results: Vec<DirectionResult>,
    /// ENVBO's predicted layouts over the direction grid.
    pub grid: Vec<DirectionResult>,
    /// `(direction, mean AEP)` of feasible random layouts.
    pub random_baseline: Vec<(f64, f64)>,
    pub envbo_evaluations: usize,
    pub bo_evaluations: usize,
    pub direct_evaluations: usize,
    /// Directions visited by the ENVBO walk.
    pub envbo_directions: Vec<f64>,
}

impl WindfarmReport {
    pub fn result(&self, method: WindMethod, direction: f64) -> Option<&DirectionResult> {
        self.results.iter().find(|r| r.method == method && r.direction == direction)
    }
}

/// Uniform layout with all pairs at least 160 m apart.
pub fn random_feasible_layout(farm: &WindFarm, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    loop {
        let x: Vec<f64> = (0..N_TURBINES)
            .flat_map(|_| [farm.site.width, farm.site.height])
            .map(|w| rng.random::<f64>() * w)
            .collect();
        let pos: Vec<[f64; 2]> = x.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        if super::farm::min_pairwise_distance(&pos) >= MIN_SPACING {
            return x;
        }
    }
}

fn layout_at(ctrl: &[f64], direction: f64) -> FarmLayout {
    FarmLayout {
        positions: ctrl.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        wind_direction: direction,
        wind_speed: AMBIENT_SPEED,
    }
}

fn aep_at(farm: &WindFarm, ctrl: &[f64], direction: f64) -> f64 {
    farm.aep(&layout_at(ctrl, direction)).unwrap_or(f64::NAN)
}

/// Mean AEP of `n` feasible random layouts at `direction`.
pub fn random_baseline(farm: &WindFarm, direction: f64, n: usize, seed: u64) -> f64 {
    let total: f64 = (0..n)
        .map(|k| aep_at(farm, &random_feasible_layout(farm, derive_seed(seed, k as u64)), direction))
        .sum();
    total / n.max(1) as f64
}

/// Runs ENVBO on the farm with the wind direction following a bounded walk.
pub fn run_envbo_farm(farm: &WindFarm, cfg: &WindfarmConfig) -> Result<CampaignState> {
    let seed = derive_seed(cfg.seed, ENVBO_STREAM);
    let (lo, hi) = DIRECTION_RANGE;
    let mut walk = EnvWalk::new(vec![lo], vec![hi], vec![cfg.direction_step], derive_seed(seed, 1), &StartPolicy::Midpoint)?;
    let objective = |x: &[f64]| -> Evaluation { farm.aep_vector(x).map_err(|e| e.to_string()) };
    let settings = cfg.settings.clone();
    run_envbo(objective, &farm.domain(), &mut walk, &spacing_constraints(), &settings, cfg.envbo_budget, seed)
}

/// ENVBO's layout for one direction: the constrained maximiser of the
/// posterior mean, scored on the simulator.
pub fn envbo_prediction(
    farm: &WindFarm,
    state: &CampaignState,
    model: &crate::gp::GpModel,
    direction: f64,
    constraints: &ConstraintSet,
    cfg: &WindfarmConfig,
) -> Result<DirectionResult> {
    let seed = derive_seed(cfg.seed, GRID_STREAM);
    let (ctrl, predicted) = conditional_optimum(model, &state.domain, &[direction], constraints, seed, &cfg.settings.multistart)?;
    let layout = layout_at(&ctrl, direction);
    Ok(DirectionResult {
        method: WindMethod::Envbo,
        direction,
        aep: farm.aep(&layout)?,
        predicted: Some(predicted),
        evaluations: 0,
        feasible: layout.is_feasible(),
        positions: layout.positions,
    })
}

/// Standard BO at one fixed direction; the answer is the best feasible
/// evaluated layout.
pub fn run_bo_farm(farm: &WindFarm, direction: f64, cfg: &WindfarmConfig) -> Result<DirectionResult> {
    let seed = derive_seed(derive_seed(cfg.seed, BO_STREAM), direction.to_bits());
    let constraints = spacing_constraints();
    let objective = |x: &[f64]| -> Evaluation { farm.aep(&layout_at(x, direction)).map_err(|e| e.to_string()) };
    let settings = cfg.settings.clone();
    let state = run_bo(objective, &farm.layout_domain(), &constraints, &settings, cfg.bo_budget, Some(cfg.bo_initial), seed)?;
    let best = state
        .dataset
        .inputs
        .iter()
        .zip(&state.dataset.outputs)
        .filter(|(x, _)| constraints.is_feasible(x))
        .max_by(|a, b| a.1.total_cmp(b.1));
    let (x, feasible) = match best {
        Some((x, _)) => (x.clone(), true),
        None => (state.best().map(|b| b.0.to_vec()).unwrap_or_default(), false),
    };
    let layout = layout_at(&x, direction);
    Ok(DirectionResult {
        method: WindMethod::Bo,
        direction,
        aep: farm.aep(&layout)?,
        predicted: None,
        evaluations: state.evaluations_used,
        feasible: feasible && layout.is_feasible(),
        positions: layout.positions,
    })
}

/// Multi-start projected quasi-Newton ascent on the simulator at a fixed
/// direction, with finite-difference gradients and a quadratic spacing
/// penalty, run to convergence. Every simulator call is counted.
pub fn run_direct_search(farm: &WindFarm, direction: f64, cfg: &WindfarmConfig) -> Result<DirectionResult> {
    let seed = derive_seed(derive_seed(cfg.seed, DIRECT_STREAM), direction.to_bits());
    let domain = farm.layout_domain();
    let constraints = spacing_constraints();
    let calls = Cell::new(0usize);
    let penalised = |x: &[f64]| -> f64 {
        calls.set(calls.get() + 1);
        let v: f64 = constraints.iter().map(|c| (-c.eval(x)).max(0.0).powi(2)).sum();
        -aep_at(farm, x, direction) + DIRECT_PENALTY * v
    };
    let opts = BoxMinimizerOptions::default();
    let mut best: Option<(bool, f64, Vec<f64>)> = None;
    for s in 0..cfg.direct_starts.max(1) {
        let x0 = random_feasible_layout(farm, derive_seed(seed, s as u64));
        let f = |x: &[f64], g: &mut [f64]| -> f64 {
            let fx = penalised(x);
            numerical_gradient(&penalised, x, fx, &domain.lower, &domain.upper, DIRECT_FD_STEP, g);
            fx
        };
        if let Some(m) = minimize_box(f, &x0, &domain.lower, &domain.upper, &opts) {
            let feasible = constraints.is_feasible(&m.x);
            let value = aep_at(farm, &m.x, direction);
            let better = match &best {
                None => true,
                Some((bf, bv, _)) => (feasible, value) > (*bf, *bv),
            };
            if better {
                best = Some((feasible, value, m.x));
            }
        }
    }
    let (feasible, aep, x) = best.ok_or_else(|| invalid("direct search failed at every start"))?;
    Ok(DirectionResult {
        method: WindMethod::DirectSearch,
        direction,
        aep,
        predicted: None,
        evaluations: calls.get(),
        feasible,
        positions: layout_at(&x, direction).positions,
    })
}

/// Runs the configured comparison.
pub fn run_windfarm_experiment(farm: &WindFarm, cfg: &WindfarmConfig) -> Result<WindfarmReport> {
    cfg.validate()?;
    let constraints = spacing_constraints();
    let mut results = Vec::new();
    let mut grid = Vec::new();
    let (mut envbo_evaluations, mut bo_evaluations, mut direct_evaluations) = (0, 0, 0);
    let mut envbo_directions = Vec::new();

    if cfg.methods.contains(&WindMethod::Envbo) {
        let state = run_envbo_farm(farm, cfg)?;
        let model = state.final_model()?;
        envbo_evaluations = state.evaluations_used;
        envbo_directions = state.env_history().into_iter().map(|e| e[0]).collect();
        let half_bin = 0.5 * (DIRECTION_RANGE.1 - DIRECTION_RANGE.0) / cfg.directions.len().max(1) as f64;
        for &d in &cfg.directions {
            let mut r = envbo_prediction(farm, &state, &model, d, &constraints, cfg)?;
            r.evaluations = envbo_directions.iter().filter(|v| (*v - d).abs() <= half_bin).count();
            results.push(r);
        }
        for d in cfg.direction_grid() {
            grid.push(envbo_prediction(farm, &state, &model, d, &constraints, cfg)?);
        }
    }
    if cfg.methods.contains(&WindMethod::Bo) {
        for &d in &cfg.directions {
            let r = run_bo_farm(farm, d, cfg)?;
            bo_evaluations += r.evaluations;
            results.push(r);
        }
    }
    if cfg.methods.contains(&WindMethod::DirectSearch) {
        for &d in &cfg.directions {
            let r = run_direct_search(farm, d, cfg)?;
            direct_evaluations += r.evaluations;
            results.push(r);
        }
    }
    for r in results.iter().chain(&grid) {
        if !r.feasible {
            log::warn!("{} layout at {} degrees violates the spacing constraint", r.method, r.direction);
        }
    }
    let baseline_seed = derive_seed(cfg.seed, BASELINE_STREAM);
    let random_baseline = cfg
        .directions
        .iter()
        .map(|&d| (d, random_baseline(farm, d, cfg.random_layouts, baseline_seed)))
        .collect();
    Ok(WindfarmReport {
        results,
        grid,
        random_baseline,
        envbo_evaluations,
        bo_evaluations,
        direct_evaluations,
        envbo_directions,
    })
}
