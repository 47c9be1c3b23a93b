use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Stationary covariance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Matern52,
    Rbf,
}

impl KernelFamily {
    /// Correlation as a function of the squared scaled distance `r2`.
    #[inline]
    pub(crate) fn correlation(self, r2: f64) -> f64 {
        match self {
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * (-SQRT5 * r).exp()
            }
            KernelFamily::Rbf => (-0.5 * r2).exp(),
        }
    }

    /// Returns the correlation together with `g(r2)` such that
    /// `d corr / d log(l_i) = g(r2) * (dx_i / l_i)^2`.
    #[inline]
    pub(crate) fn correlation_and_lengthscale_factor(self, r2: f64) -> (f64, f64) {
        match self {
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                let e = (-SQRT5 * r).exp();
                ((1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * e, 5.0 / 3.0 * (1.0 + SQRT5 * r) * e)
            }
            KernelFamily::Rbf => {
                let k = (-0.5 * r2).exp();
                (k, k)
            }
        }
    }
}

/// Kernel family with its length-scales and output scale `sigma_f^2`.
///
/// A single length-scale is shared by all dimensions; otherwise there is one
/// per input dimension (automatic relevance determination).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub output_scale: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscales: Vec<f64>, output_scale: f64) -> Result<Self> {
        let spec = Self {
            family,
            lengthscales,
            output_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(invalid("kernel needs at least one length-scale"));
        }
        if self.lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid("length-scales must be positive and finite"));
        }
        if !(self.output_scale.is_finite() && self.output_scale > 0.0) {
            return Err(invalid("output scale must be positive and finite"));
        }
        Ok(())
    }

    pub fn is_ard(&self) -> bool {
        self.lengthscales.len() > 1
    }

    #[inline]
    pub(crate) fn lengthscale(&self, i: usize) -> f64 {
        if self.lengthscales.len() == 1 {
            self.lengthscales[0]
        } else {
            self.lengthscales[i]
        }
    }

    /// Squared distance after dividing each coordinate by its length-scale.
    #[inline]
    pub(crate) fn scaled_sq_dist(&self, x: &[f64], x2: &[f64]) -> f64 {
        x.iter()
            .zip(x2)
            .enumerate()
            .map(|(i, (a, b))| {
                let t = (a - b) / self.lengthscale(i);
                t * t
            })
            .sum()
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        self.output_scale * self.family.correlation(self.scaled_sq_dist(x, x2))
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.lengthscales.len() != 1 && self.lengthscales.len() != d {
            return Err(Error::DimensionMismatch {
                expected: self.lengthscales.len(),
                got: d,
            });
        }
        Ok(())
    }
}

/// Evaluates the covariance between two inputs.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], x2: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: x2.len(),
        });
    }
    spec.check_dim(x.len())?;
    Ok(spec.eval_unchecked(x, x2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_gives_output_scale() {
        for family in [KernelFamily::Matern52, KernelFamily::Rbf] {
            let spec = KernelSpec::new(family, vec![0.7, 2.0], 3.5).unwrap();
            assert_eq!(kernel_eval(&spec, &[0.1, 0.2], &[0.1, 0.2]).unwrap(), 3.5);
        }
    }

    #[test]
    fn matern_at_unit_distance() {
        let spec = KernelSpec::new(KernelFamily::Matern52, vec![1.0], 1.0).unwrap();
        let s5 = 5f64.sqrt();
        let expected = (1.0 + s5 + 5.0 / 3.0) * (-s5).exp();
        let got = kernel_eval(&spec, &[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn rbf_closed_form_with_ard() {
        let spec = KernelSpec::new(KernelFamily::Rbf, vec![0.5, 2.0], 2.0).unwrap();
        let r2 = (0.3f64 / 0.5).powi(2) + (1.0f64 / 2.0).powi(2);
        let got = kernel_eval(&spec, &[0.3, 1.0], &[0.0, 0.0]).unwrap();
        assert!((got - 2.0 * (-r2 / 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn decays_far_away() {
        for family in [KernelFamily::Matern52, KernelFamily::Rbf] {
            let spec = KernelSpec::new(family, vec![0.2], 4.0).unwrap();
            let v = kernel_eval(&spec, &[0.0], &[20.0]).unwrap();
            assert!(v < 1e-10 * 4.0);
        }
    }

    #[test]
    fn non_increasing_in_distance() {
        for family in [KernelFamily::Matern52, KernelFamily::Rbf] {
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let v = family.correlation((i as f64 * 0.05).powi(2));
                assert!(v <= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(KernelSpec::new(KernelFamily::Rbf, vec![0.0], 1.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Rbf, vec![1.0], -1.0).is_err());
        let spec = KernelSpec::new(KernelFamily::Rbf, vec![1.0, 1.0], 1.0).unwrap();
        assert!(kernel_eval(&spec, &[0.0; 3], &[0.0; 3]).is_err());
    }

    #[test]
    fn lengthscale_factor_matches_finite_difference() {
        for family in [KernelFamily::Matern52, KernelFamily::Rbf] {
            let dx = [0.4, -0.9];
            let ls = [0.6, 1.3];
            let corr = |l: &[f64; 2]| family.correlation((dx[0] / l[0]).powi(2) + (dx[1] / l[1]).powi(2));
            let r2 = (dx[0] / ls[0]).powi(2) + (dx[1] / ls[1]).powi(2);
            let (_, g) = family.correlation_and_lengthscale_factor(r2);
            let h = 1e-6;
            let up = corr(&[ls[0] * f64::exp(h), ls[1]]);
            let down = corr(&[ls[0] * f64::exp(-h), ls[1]]);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - g * (dx[0] / ls[0]).powi(2)).abs() < 1e-8);
        }
    }
}
