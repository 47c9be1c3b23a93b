use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_campaign, EvalOptions, EvalReport};
use super::metrics::{mann_whitney_u, mean, MannWhitney};
use super::problems::BenchmarkProblem;
use crate::acqopt::ConstraintSet;
use crate::acquisition::AcquisitionFamily;
use crate::envloop::{run_envbo, run_random, CampaignState, Evaluation, LoopSettings};
use crate::error::Result;
use crate::rng::{derive_seed, streams};

/// Optimisation methods compared on the synthetic problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    EnvboEi,
    EnvboLogei,
    EnvboUcb,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::EnvboEi => "envbo-ei",
            Method::EnvboLogei => "envbo-logei",
            Method::EnvboUcb => "envbo-ucb",
            Method::Random => "random",
        }
    }

    fn acquisition(self) -> Option<AcquisitionFamily> {
        match self {
            Method::EnvboEi => Some(AcquisitionFamily::Ei),
            Method::EnvboLogei => Some(AcquisitionFamily::LogEi),
            Method::EnvboUcb => Some(AcquisitionFamily::Ucb),
            Method::Random => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Seed of replication `rep`; every method of that replication shares it,
/// and with it the walk, the noise stream and the initial point.
pub fn replication_seed(base_seed: u64, rep: usize) -> u64 {
    derive_seed(base_seed, rep as u64)
}

/// Runs one method for one replication.
pub fn run_method(
    problem: &BenchmarkProblem,
    method: Method,
    settings: &LoopSettings,
    budget: usize,
    seed: u64,
) -> Result<CampaignState> {
    let mut walk = problem.walk(derive_seed(seed, streams::WALK))?;
    let mut noisy = super::problems::add_noise(problem, problem.noise_sd, derive_seed(seed, streams::NOISE))?.objective();
    let objective = move |x: &[f64]| -> Evaluation { Ok(noisy.call(x)) };
    match method.acquisition() {
        Some(family) => {
            let s = settings.clone().with_acquisition(family);
            run_envbo(objective, &problem.domain, &mut walk, &ConstraintSet::new(), &s, budget, seed)
        }
        None => run_random(objective, &problem.domain, &mut walk, &ConstraintSet::new(), budget, seed),
    }
}

/// One replication of one method, scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub replication: usize,
    pub method: Method,
    pub seed: u64,
    pub report: EvalReport,
}

/// A replicated comparison of methods on one problem.
#[derive(Debug, Clone)]
pub struct Study {
    pub problem: BenchmarkProblem,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub budget: usize,
    pub seed: u64,
    pub settings: LoopSettings,
    pub eval: EvalOptions,
}

impl Study {
    pub fn new(problem: BenchmarkProblem, methods: Vec<Method>, replications: usize, budget: usize, seed: u64) -> Self {
        Self {
            problem,
            methods,
            replications,
            budget,
            seed,
            settings: LoopSettings::default(),
            eval: EvalOptions::default(),
        }
    }

    /// Runs every (replication, method) pair in parallel; results are ordered
    /// by replication, then method.
    pub fn run(&self) -> Result<StudyResult> {
        let jobs: Vec<(usize, Method)> = (0..self.replications)
            .flat_map(|r| self.methods.iter().map(move |&m| (r, m)))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(rep, method)| {
                let seed = replication_seed(self.seed, rep);
                let state = run_method(&self.problem, method, &self.settings, self.budget, seed)?;
                let report = evaluate_campaign(&state, &self.problem, seed, &self.eval)?;
                log::info!("{} rep {rep} {}: final MAPE {:.4}", self.problem.name, method, report.final_mape);
                Ok(ReplicationResult {
                    replication: rep,
                    method,
                    seed,
                    report,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StudyResult { results })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub results: Vec<ReplicationResult>,
}

impl StudyResult {
    pub fn final_mapes(&self, method: Method) -> Vec<f64> {
        self.results.iter().filter(|r| r.method == method).map(|r| r.report.final_mape).collect()
    }

    pub fn mean_final_mape(&self, method: Method) -> f64 {
        mean(&self.final_mapes(method))
    }

    pub fn effective_sizes(&self, method: Method) -> Vec<f64> {
        self.results.iter().filter(|r| r.method == method).map(|r| r.report.effective_size).collect()
    }

    /// Mann-Whitney comparison of final MAPEs.
    pub fn compare(&self, a: Method, b: Method) -> Result<MannWhitney> {
        mann_whitney_u(&self.final_mapes(a), &self.final_mapes(b))
    }
}
