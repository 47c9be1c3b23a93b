//! Synthetic benchmark problems, the prediction-versus-truth protocol and
//! the statistics used to compare methods.

mod evaluate;
mod metrics;
mod probe;
mod problems;
mod study;

pub use evaluate::{
    effective_test_points, evaluate_campaign, truth_conditional_max, truth_conditional_max_with, EvalOptions, EvalReport,
    SLICE_GRID_POINTS,
};
pub use metrics::{mann_whitney_u, mape, mean, ranks, spearman, MannWhitney};
pub use probe::{ard_variability_probe, ProbeOptions, ProbeResult};
pub use problems::{
    add_noise, hartmann6_negated, hartmann_env_indices, levy2_negated, BenchmarkProblem, NoisyObjective, ProblemKind,
};
pub use study::{replication_seed, run_method, Method, ReplicationResult, Study, StudyResult};
