//! Bayesian optimisation of controllable variables under measured,
//! uncontrollable environmental conditions.
//!
//! The crate provides Gaussian-process regression ([`gp`]), acquisition
//! criteria ([`acquisition`]) and their constrained maximisation
//! ([`acqopt`]), environment simulators ([`envsim`]), the sequential
//! campaign loop ([`envloop`]), synthetic benchmark tooling ([`testbed`]) and
//! a wind-farm layout application ([`windfarm`]).

pub mod acqopt;
pub mod acquisition;
pub mod design;
pub mod envloop;
pub mod envsim;
pub mod error;
pub mod gp;
pub mod optim;
pub mod rng;
pub mod testbed;
pub mod windfarm;

pub use error::{Error, Result};
