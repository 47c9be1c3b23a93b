use std::path::{Path, PathBuf};

use anyhow::{anyhow, ensure, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde_json::json;

use envbo::acqopt::{ConstraintSet, Domain};
use envbo::acquisition::AcquisitionFamily;
use envbo::envloop::{conditional_optimum, initial_point, observe, suggest, CampaignState, LoopSettings};
use envbo::testbed::{BenchmarkProblem, ProblemKind};

use crate::Failure;

#[derive(Debug, Args)]
pub struct AskTellArgs {
    #[command(subcommand)]
    pub command: AskTellCommand,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Acquisition {
    Ei,
    Logei,
    Ucb,
}

#[derive(Debug, Subcommand)]
pub enum AskTellCommand {
    /// Create a new session file.
    Init {
        #[arg(long)]
        session: PathBuf,
        /// Take the domain from a benchmark problem.
        #[arg(long, value_enum, conflicts_with_all = ["lower", "upper", "env_indices"])]
        problem: Option<ProblemArg>,
        #[arg(long, default_value_t = 1)]
        n_env: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lower: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        upper: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        env_indices: Option<Vec<usize>>,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "ei")]
        acquisition: Acquisition,
        #[arg(long)]
        beta: Option<f64>,
        /// Replace an existing session file.
        #[arg(long)]
        force: bool,
    },
    /// Suggest the next point for the measured environment.
    Suggest {
        #[arg(long)]
        session: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        env: Vec<f64>,
    },
    /// Record an evaluated point.
    Observe {
        #[arg(long)]
        session: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// Predicted best controllable setting for an environment.
    Predict {
        #[arg(long)]
        session: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        env: Vec<f64>,
    },
    /// Print a summary of the session.
    Status {
        #[arg(long)]
        session: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProblemArg {
    Levy,
    Hartmann,
}

fn load(path: &Path) -> Result<CampaignState> {
    CampaignState::load(path).with_context(|| format!("cannot use session {}", path.display()))
}

fn number(text: &str, what: &str) -> Result<f64> {
    let v: f64 = text.trim().parse().map_err(|_| anyhow!("{what} `{text}` is not a number"))?;
    ensure!(v.is_finite(), "{what} must be finite (got {text})");
    Ok(v)
}

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

pub fn run(args: AskTellArgs) -> Result<(), Failure> {
    match args.command {
        AskTellCommand::Init {
            session,
            problem,
            n_env,
            lower,
            upper,
            env_indices,
            budget,
            seed,
            acquisition,
            beta,
            force,
        } => {
            if session.exists() && !force {
                return Err(input(anyhow!("{} already exists; pass --force to replace it", session.display())));
            }
            let domain = match problem {
                Some(ProblemArg::Levy) => BenchmarkProblem::from_kind(ProblemKind::Levy, n_env).map_err(input)?.domain,
                Some(ProblemArg::Hartmann) => BenchmarkProblem::from_kind(ProblemKind::Hartmann, n_env).map_err(input)?.domain,
                None => {
                    let (Some(lo), Some(hi)) = (lower, upper) else {
                        return Err(input(anyhow!("give --problem or both --lower and --upper")));
                    };
                    Domain::new(lo, hi, env_indices.unwrap_or_default()).map_err(input)?
                }
            };
            let mut settings = LoopSettings::default().with_acquisition(match acquisition {
                Acquisition::Ei => AcquisitionFamily::Ei,
                Acquisition::Logei => AcquisitionFamily::LogEi,
                Acquisition::Ucb => AcquisitionFamily::Ucb,
            });
            if let Some(b) = beta {
                settings.beta = b;
            }
            let state = CampaignState::new(domain, settings, budget, seed).map_err(input)?;
            state.save(&session).map_err(|e| Failure::Runtime(e.into()))?;
            print(&json!({"session": session, "dimension": state.domain.dim(), "env_indices": state.domain.env_indices(), "budget": budget}));
            Ok(())
        }
        AskTellCommand::Suggest { session, env } => {
            let mut state = load(&session).map_err(input)?;
            if state.remaining() == 0 {
                return Err(input(anyhow!("budget of {} evaluations is used up", state.budget)));
            }
            state.domain.check_env(&env).map_err(input)?;
            let s = if state.dataset.is_empty() {
                initial_point(&state, &env, &ConstraintSet::new(), state.evaluations_used as u64)
            } else {
                suggest(&state, &env, &ConstraintSet::new())
            }
            .map_err(|e| Failure::Runtime(e.into()))?;
            state.pending = Some(s.clone());
            state.save(&session).map_err(|e| Failure::Runtime(e.into()))?;
            print(&json!({"x": s.x, "env": s.env, "ctrl": state.domain.ctrl_part(&s.x), "source": s.source, "acquisition": s.acq_value}));
            Ok(())
        }
        AskTellCommand::Observe { session, x, y } => {
            let mut state = load(&session).map_err(input)?;
            let x = x.iter().map(|v| number(v, "x value")).collect::<Result<Vec<_>>>().map_err(input)?;
            let y = number(&y, "y").map_err(input)?;
            if state.remaining() == 0 {
                return Err(input(anyhow!("budget of {} evaluations is used up", state.budget)));
            }
            observe(&mut state, &x, y).map_err(input)?;
            state.save(&session).map_err(|e| Failure::Runtime(e.into()))?;
            let best = state.best().map(|(x, y)| json!({"x": x, "y": y}));
            print(&json!({"evaluations": state.evaluations_used, "remaining": state.remaining(), "best": best}));
            Ok(())
        }
        AskTellCommand::Predict { session, env } => {
            let state = load(&session).map_err(input)?;
            state.domain.check_env(&env).map_err(input)?;
            if state.dataset.is_empty() {
                return Err(input(anyhow!("the session has no observations yet")));
            }
            let model = state.final_model().map_err(|e| Failure::Runtime(e.into()))?;
            let (ctrl, value) = conditional_optimum(
                &model,
                &state.domain,
                &env,
                &ConstraintSet::new(),
                state.seed,
                &state.settings.multistart,
            )
            .map_err(|e| Failure::Runtime(e.into()))?;
            print(&json!({"env": env, "ctrl": ctrl, "x": state.domain.embed(&ctrl, &env), "predicted": value}));
            Ok(())
        }
        AskTellCommand::Status { session } => {
            let state = load(&session).map_err(input)?;
            let best = state.best().map(|(x, y)| json!({"x": x, "y": y}));
            let effective = state.effective_domain().map(|(lo, hi)| json!({"lower": lo, "upper": hi}));
            print(&json!({
                "evaluations": state.evaluations_used,
                "budget": state.budget,
                "remaining": state.remaining(),
                "pending": state.pending.as_ref().map(|s| &s.x),
                "best": best,
                "effective_domain": effective,
            }));
            Ok(())
        }
    }
}

fn print(value: &serde_json::Value) {
    println!("{value}");
}

