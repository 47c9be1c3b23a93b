use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use envbo::acqopt::Domain;
use envbo::envloop::LoopSettings;
use envbo::envsim::{BoundaryPolicy, StartPolicy};
use envbo::testbed::{add_noise, BenchmarkProblem, EvalOptions, Method, ProblemKind};
use envbo::windfarm::WindfarmConfig;

/// Methods accepted in a benchmark file. `bo` and `direct-search` parse so
/// that they can be rejected with a clear message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    EnvboEi,
    EnvboLogei,
    EnvboUcb,
    Random,
    Bo,
    DirectSearch,
}

impl MethodName {
    fn method(self) -> Option<Method> {
        match self {
            MethodName::EnvboEi => Some(Method::EnvboEi),
            MethodName::EnvboLogei => Some(Method::EnvboLogei),
            MethodName::EnvboUcb => Some(Method::EnvboUcb),
            MethodName::Random => Some(Method::Random),
            MethodName::Bo | MethodName::DirectSearch => None,
        }
    }
}

/// Environmental variables of a benchmark problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Environmental input indices (Hartmann only); defaults to the preset
    /// for `n_env`.
    pub indices: Option<Vec<usize>>,
    pub n_env: Option<usize>,
    /// `[lower, upper]` per environmental variable, inside the problem box.
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Walk step limit per environmental variable.
    pub steps: Option<Vec<f64>>,
    pub start: StartPolicy,
    pub boundary: BoundaryPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    Noise,
    Step,
    NEnv,
}

/// One parameter varied over a list of values; every value is a variant
/// with its own replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub name: String,
    pub problem: ProblemKind,
    pub methods: Vec<MethodName>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub settings: LoopSettings,
    #[serde(default)]
    pub evaluation: EvalOptions,
}

fn default_budget() -> usize {
    100
}

fn default_replications() -> usize {
    30
}

/// A concrete problem of a benchmark run.
pub struct Variant {
    pub label: String,
    pub problem: BenchmarkProblem,
}

impl BenchmarkConfig {
    pub fn methods(&self) -> Result<Vec<Method>> {
        ensure!(!self.methods.is_empty(), "at least one method is required");
        let mut out = Vec::new();
        for &m in &self.methods {
            let Some(method) = m.method() else {
                bail!(
                    "method `{}` needs a fully controllable problem and is only available in the windfarm command",
                    serde_json::to_value(m)?.as_str().unwrap_or_default()
                );
            };
            ensure!(!out.contains(&method), "method `{method}` listed twice");
            out.push(method);
        }
        Ok(out)
    }

    /// Checks the whole file and builds every variant's problem.
    pub fn validate(&self) -> Result<Vec<Variant>> {
        ensure!(!self.name.is_empty() && !self.name.contains(['/', '\\']), "name must be a plain file stem");
        ensure!(self.budget >= 1, "budget must be at least 1");
        ensure!(self.replications >= 1, "replications must be at least 1");
        self.methods()?;
        self.settings.validate()?;
        let variants = match &self.sweep {
            None => vec![Variant {
                label: "base".into(),
                problem: self.problem_with(None)?,
            }],
            Some(sweep) => {
                ensure!(!sweep.values.is_empty(), "sweep.values is empty");
                sweep
                    .values
                    .iter()
                    .map(|&v| {
                        let label = match sweep.parameter {
                            SweepParameter::Noise => format!("noise={v}"),
                            SweepParameter::Step => format!("step={v}"),
                            SweepParameter::NEnv => format!("n_env={v}"),
                        };
                        Ok(Variant {
                            label,
                            problem: self.problem_with(Some((sweep.parameter, v)))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(variants)
    }

    fn problem_with(&self, sweep: Option<(SweepParameter, f64)>) -> Result<BenchmarkProblem> {
        let env = &self.env;
        let mut n_env = env.n_env;
        let mut steps = env.steps.clone();
        let mut noise = self.noise_sd;
        match sweep {
            Some((SweepParameter::NEnv, v)) => {
                ensure!(v >= 1.0 && v.fract() == 0.0, "n_env sweep values must be positive integers");
                ensure!(env.indices.is_none(), "an n_env sweep cannot be combined with env.indices");
                n_env = Some(v as usize);
                steps = None;
            }
            Some((SweepParameter::Step, v)) => {
                ensure!(v >= 0.0, "step sweep values must be non-negative");
                steps = Some(vec![v]);
            }
            Some((SweepParameter::Noise, v)) => noise = v,
            None => {}
        }
        let mut p = match (self.problem, &env.indices) {
            (ProblemKind::Levy, Some(idx)) => {
                ensure!(idx.as_slice() == [1], "the Levy problem's environmental variable is index 1");
                BenchmarkProblem::levy()
            }
            (ProblemKind::Hartmann, Some(idx)) => {
                ensure!(n_env.is_none_or(|n| n == idx.len()), "env.n_env disagrees with env.indices");
                BenchmarkProblem::hartmann_with_env(idx.clone(), vec![0.1; idx.len()])?
            }
            (kind, None) => BenchmarkProblem::from_kind(kind, n_env.unwrap_or(1))?,
        };
        let ne = p.n_env();
        if let Some(steps) = steps {
            p.env_steps = match steps.len() {
                1 => vec![steps[0]; ne],
                n if n == ne => steps,
                n => bail!("{n} step limits given for {ne} environmental variables"),
            };
        }
        ensure!(p.env_steps.iter().all(|a| a.is_finite() && *a >= 0.0), "step limits must be finite and non-negative");
        if let Some(bounds) = &env.bounds {
            ensure!(bounds.len() == ne, "{} bounds given for {ne} environmental variables", bounds.len());
            let (mut lo, mut hi) = (p.domain.lower.clone(), p.domain.upper.clone());
            for (&i, b) in p.domain.env_indices().to_vec().iter().zip(bounds) {
                ensure!(
                    b[0] < b[1] && b[0] >= lo[i] && b[1] <= hi[i],
                    "env bounds {b:?} must be an interval inside [{}, {}]",
                    lo[i],
                    hi[i]
                );
                lo[i] = b[0];
                hi[i] = b[1];
            }
            p.domain = Domain::new(lo, hi, p.domain.env_indices().to_vec())?;
        }
        if let StartPolicy::Explicit(v) = &env.start {
            ensure!(v.len() == ne, "explicit start needs {ne} values");
            let (lo, hi) = (p.domain.env_lower(), p.domain.env_upper());
            for (k, x) in v.iter().enumerate() {
                ensure!(*x >= lo[k] && *x <= hi[k], "explicit start {x} lies outside [{}, {}]", lo[k], hi[k]);
            }
        }
        p.env_start = env.start.clone();
        p.boundary = env.boundary;
        ensure!(noise.is_finite() && noise >= 0.0, "noise_sd must be finite and non-negative");
        Ok(add_noise(&p, noise, 0)?)
    }
}

/// Wind-farm command file: a name, an optional output directory and the
/// experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindfarmFile {
    pub name: String,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub experiment: WindfarmConfig,
}

impl WindfarmFile {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.name.is_empty() && !self.name.contains(['/', '\\']), "name must be a plain file stem");
        self.experiment.validate()?;
        Ok(())
    }

    /// Scales the experiment down to `budget` ENVBO evaluations.
    pub fn scaled(mut self, budget: usize) -> Self {
        let e = &mut self.experiment;
        e.envbo_budget = budget;
        e.bo_budget = (budget / 4).max(2);
        e.bo_initial = (e.bo_budget / 2).clamp(1, 10);
        e.direct_starts = 1;
        e.random_layouts = e.random_layouts.min(20);
        self
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(toml::from_str(text)?)
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    Ok(toml::to_string(value)?)
}

/// First 16 hex digits of the SHA-256 of the canonical serialisation.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let digest = Sha256::digest(to_toml(value)?.as_bytes());
    Ok(hex::encode(&digest[..8]))
}

fn sweep_preset(name: &str, parameter: SweepParameter, values: Vec<f64>) -> BenchmarkConfig {
    BenchmarkConfig {
        methods: vec![MethodName::EnvboEi],
        sweep: Some(Sweep { parameter, values }),
        ..full_study(name, ProblemKind::Hartmann)
    }
}

fn full_study(name: &str, problem: ProblemKind) -> BenchmarkConfig {
    BenchmarkConfig {
        name: name.into(),
        problem,
        methods: vec![MethodName::EnvboEi, MethodName::EnvboLogei, MethodName::EnvboUcb, MethodName::Random],
        budget: 100,
        replications: 30,
        seed: 0,
        noise_sd: 0.0,
        output: None,
        env: EnvConfig::default(),
        sweep: None,
        settings: LoopSettings::default(),
        evaluation: EvalOptions::default(),
    }
}

pub const BENCHMARK_PRESETS: [&str; 6] = [
    "levy-paper",
    "hartmann-paper",
    "hartmann-noise",
    "hartmann-fluctuation",
    "hartmann-n-env",
    "smoke",
];

pub fn benchmark_preset(name: &str) -> Result<BenchmarkConfig> {
    Ok(match name {
        "levy-paper" => full_study(name, ProblemKind::Levy),
        "hartmann-paper" => full_study(name, ProblemKind::Hartmann),
        "hartmann-noise" => sweep_preset(name, SweepParameter::Noise, vec![0.0, 0.025, 0.05, 0.1]),
        "hartmann-fluctuation" => sweep_preset(name, SweepParameter::Step, vec![0.05, 0.1, 0.25, 0.5, 1.0]),
        "hartmann-n-env" => sweep_preset(name, SweepParameter::NEnv, vec![1.0, 2.0, 3.0]),
        "smoke" => BenchmarkConfig {
            methods: vec![MethodName::EnvboEi, MethodName::Random],
            budget: 5,
            replications: 1,
            evaluation: EvalOptions {
                test_points: Some(5),
                ..EvalOptions::default()
            },
            ..full_study(name, ProblemKind::Levy)
        },
        other => bail!("unknown benchmark preset `{other}` (known: {})", BENCHMARK_PRESETS.join(", ")),
    })
}

pub const WINDFARM_PRESETS: [&str; 2] = ["windfarm-paper", "windfarm-smoke"];

pub fn windfarm_preset(name: &str) -> Result<WindfarmFile> {
    let base = WindfarmFile {
        name: name.into(),
        output: None,
        experiment: WindfarmConfig::default(),
    };
    Ok(match name {
        "windfarm-paper" => base,
        "windfarm-smoke" => base.scaled(20),
        other => bail!("unknown windfarm preset `{other}` (known: {})", WINDFARM_PRESETS.join(", ")),
    })
}
