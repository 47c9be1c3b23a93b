//! Space-filling designs on the unit cube.
//!
//! A maximin Latin hypercube is obtained as the best of `n_candidates`
//! independent random Latin hypercubes, scored by their smallest pairwise
//! Euclidean distance. The first candidate drawn from a seed is exactly the
//! plain Latin hypercube for that seed.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{rng_from_seed, Rng};

/// Default number of random Latin hypercubes scored by [`maximin_lhs`].
pub const DEFAULT_MAXIMIN_CANDIDATES: usize = 100;

/// An `n x d` design with every entry in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitDesign {
    n: usize,
    d: usize,
    points: Vec<f64>,
    pub seed: u64,
}

impl UnitDesign {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d.max(1)).take(self.n)
    }

    /// Smallest pairwise Euclidean distance; infinite for a single point.
    pub fn min_distance(&self) -> f64 {
        min_pairwise_distance(&self.points, self.n, self.d)
    }
}

/// Draws one random Latin hypercube from `rng`.
pub fn random_lhs(n: usize, d: usize, rng: &mut Rng) -> Vec<f64> {
    let mut points = vec![0.0; n * d];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            points[i * d + j] = (stratum as f64 + u) / n as f64;
        }
    }
    points
}

/// Maximin Latin hypercube: the candidate with the largest minimum
/// pairwise distance out of `n_candidates` random draws (first wins ties).
pub fn maximin_lhs(n: usize, d: usize, seed: u64, n_candidates: usize) -> Result<UnitDesign> {
    if n == 0 || d == 0 {
        return Err(invalid(format!("design needs n >= 1 and d >= 1 (got n={n}, d={d})")));
    }
    if n_candidates == 0 {
        return Err(invalid("n_candidates must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut best = random_lhs(n, d, &mut rng);
    let mut best_score = min_pairwise_distance(&best, n, d);
    for _ in 1..n_candidates {
        let cand = random_lhs(n, d, &mut rng);
        let score = min_pairwise_distance_above(&cand, n, d, best_score);
        if score > best_score {
            best = cand;
            best_score = score;
        }
    }
    Ok(UnitDesign {
        n,
        d,
        points: best,
        seed,
    })
}

/// Affine map of each design column from `[0, 1]` onto `[lower[i], upper[i]]`.
pub fn scale_to_bounds(design: &UnitDesign, lower: &[f64], upper: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_bounds(lower, upper)?;
    if lower.len() != design.d {
        return Err(invalid(format!(
            "design has {} columns but bounds have {} entries",
            design.d,
            lower.len()
        )));
    }
    Ok(design
        .rows()
        .map(|row| {
            row.iter()
                .zip(lower.iter().zip(upper))
                .map(|(&u, (&lo, &hi))| lo + u * (hi - lo))
                .collect()
        })
        .collect())
}

pub(crate) fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(invalid("lower and upper bounds differ in length"));
    }
    for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("bounds for dimension {i} are not an interval: [{lo}, {hi}]")));
        }
    }
    Ok(())
}

fn min_pairwise_distance(points: &[f64], n: usize, d: usize) -> f64 {
    min_pairwise_distance_above(points, n, d, f64::NEG_INFINITY)
}

// Stops early once the running minimum can no longer beat `floor`.
fn min_pairwise_distance_above(points: &[f64], n: usize, d: usize, floor: f64) -> f64 {
    let floor_sq = if floor > 0.0 { floor * floor } else { f64::NEG_INFINITY };
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = &points[i * d..(i + 1) * d];
        for j in (i + 1)..n {
            let b = &points[j * d..(j + 1) * d];
            let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            if s < best {
                best = s;
                if best <= floor_sq {
                    return best.sqrt();
                }
            }
        }
    }
    best.sqrt()
}
