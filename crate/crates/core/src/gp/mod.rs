//! Gaussian-process regression: kernels, likelihood, fitting and prediction.

mod fit;
mod kernel;
mod model;

pub use fit::{fallback_hyperparameters, fit_mle, fit_mle_with_start, log_param_bounds, FitOptions};
pub use kernel::{kernel_eval, KernelFamily, KernelSpec};
pub use model::{
    log_marginal_likelihood, log_marginal_likelihood_grad, posterior, Dataset, GpModel, Hyperparameters, InputScaling,
    ModelSummary, OutputScaling,
};
