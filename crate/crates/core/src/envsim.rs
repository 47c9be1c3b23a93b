//! Bounded uniform random walks standing in for measured environmental
//! conditions.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::design::check_bounds;
use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// What happens when a step leaves the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    #[default]
    Clip,
    Reflect,
}

/// Initial state of a walk.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartPolicy {
    #[default]
    Midpoint,
    UniformRandom,
    Explicit(Vec<f64>),
}

/// Source of environmental measurements, one vector per call.
pub trait EnvSource {
    fn dim(&self) -> usize;
    fn measure(&mut self) -> Vec<f64>;
}

/// Random walk `x_n = x_{n-1} + U[-a, a]` kept inside a box.
#[derive(Debug, Clone)]
pub struct EnvWalk {
    lower: Vec<f64>,
    upper: Vec<f64>,
    step: Vec<f64>,
    boundary: BoundaryPolicy,
    state: Vec<f64>,
    rng: Rng,
    started: bool,
    steps_taken: usize,
}

impl EnvWalk {
    /// Creates a walk. A zero step limit freezes that coordinate.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, step: Vec<f64>, seed: u64, start: &StartPolicy) -> Result<Self> {
        check_bounds(&lower, &upper)?;
        if step.len() != lower.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: step.len(),
            });
        }
        if step.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(invalid("step limits must be finite and non-negative"));
        }
        let mut rng = rng_from_seed(seed);
        let state = match start {
            StartPolicy::Midpoint => lower.iter().zip(&upper).map(|(l, u)| 0.5 * (l + u)).collect(),
            StartPolicy::UniformRandom => lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| l + rng.random::<f64>() * (u - l))
                .collect(),
            StartPolicy::Explicit(v) => {
                if v.len() != lower.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        got: v.len(),
                    });
                }
                for (i, &x) in v.iter().enumerate() {
                    if !(x >= lower[i] && x <= upper[i]) {
                        return Err(Error::OutOfBounds {
                            dim: i,
                            value: x,
                            lower: lower[i],
                            upper: upper[i],
                        });
                    }
                }
                v.clone()
            }
        };
        Ok(Self {
            lower,
            upper,
            step,
            boundary: BoundaryPolicy::Clip,
            state,
            rng,
            started: false,
            steps_taken: 0,
        })
    }

    pub fn with_boundary(mut self, boundary: BoundaryPolicy) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Raw increment: a fraction in `[-1, 1]` scaled by the step limit.
    fn draw(&mut self) -> Vec<f64> {
        self.step
            .iter()
            .map(|a| {
                let frac: f64 = self.rng.random_range(-1.0..=1.0);
                frac * a
            })
            .collect()
    }

    /// Advances the walk one step and returns the new state.
    pub fn step(&mut self) -> Vec<f64> {
        let inc = self.draw();
        for i in 0..self.state.len() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            let mut v = self.state[i] + inc[i];
            match self.boundary {
                BoundaryPolicy::Clip => v = v.clamp(lo, hi),
                BoundaryPolicy::Reflect => {
                    if v > hi {
                        v = hi - (v - hi);
                    } else if v < lo {
                        v = lo + (lo - v);
                    }
                    v = v.clamp(lo, hi);
                }
            }
            self.state[i] = v;
        }
        self.steps_taken += 1;
        self.state.clone()
    }

    /// The first `n` measurements this walk would produce.
    pub fn trajectory(mut self, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.measure()).collect()
    }
}

impl EnvSource for EnvWalk {
    fn dim(&self) -> usize {
        self.state.len()
    }

    /// Returns the starting state on the first call and steps afterwards.
    fn measure(&mut self) -> Vec<f64> {
        if self.started {
            self.step()
        } else {
            self.started = true;
            self.state.clone()
        }
    }
}

/// Replays a fixed list of measurements.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    values: Vec<Vec<f64>>,
    next: usize,
}

impl ReplaySource {
    pub fn new(values: Vec<Vec<f64>>) -> Self {
        Self { values, next: 0 }
    }
}

impl EnvSource for ReplaySource {
    fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Panics when the recorded measurements are exhausted.
    fn measure(&mut self) -> Vec<f64> {
        let v = self.values[self.next].clone();
        self.next += 1;
        v
    }
}
