//! Fixtures shared by the benches.

use envbo::design::maximin_lhs;
use envbo::gp::{fit_mle, Dataset, FitOptions, GpModel, InputScaling};
use envbo::testbed::hartmann6_negated;

/// `n` maximin-LHS points of the six-dimensional Hartmann function.
pub fn hartmann_data(n: usize, seed: u64) -> Dataset {
    let design = maximin_lhs(n, 6, seed, 5).expect("valid design size");
    let inputs: Vec<Vec<f64>> = design.rows().map(|r| r.to_vec()).collect();
    let outputs = inputs.iter().map(|x| hartmann6_negated(x)).collect();
    Dataset::new(inputs, outputs).expect("matching lengths")
}

pub fn hartmann_model(n: usize) -> GpModel {
    fit_mle(&hartmann_data(n, 1), &InputScaling::identity(6), 1, &FitOptions::default()).expect("fit succeeds")
}
