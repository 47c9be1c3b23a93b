//! Acquisition criteria computed from a posterior mean and standard
//! deviation: expected improvement, its logarithm, and the upper confidence
//! bound.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// `ln(2 pi) / 2`
const C1: f64 = 0.918_938_533_204_672_7;
/// `ln(pi / 2) / 2`
const C2: f64 = 0.225_791_352_644_727_4;
const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// Default UCB trade-off.
pub const DEFAULT_BETA: f64 = 8.0;

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `ln(1 - exp(x))` for `x < 0`.
pub fn log1mexp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(exp(x^2) erfc(x))`.
pub fn logerfcx(x: f64) -> f64 {
    if x < 10.0 {
        libm::erfc(x).ln() + x * x
    } else {
        // erfcx(x) ~ 1/(x sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2x^2)^k
        let inv = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            term *= -((2 * k - 1) as f64) * inv;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum.ln() - x.ln() - LN_SQRT_PI
    }
}

/// `ln(phi(z) + z Phi(z))`, accurate far into the left tail.
pub fn log_h(z: f64) -> f64 {
    if z > -1.0 {
        (norm_pdf(z) + z * norm_cdf(z)).ln()
    } else {
        -0.5 * z * z - C1 + log1mexp(logerfcx(-z * FRAC_1_SQRT_2) + z.abs().ln() + C2)
    }
}

/// Expected improvement over `y_best`; the analytic limit
/// `max(mean - y_best, 0)` when `sd == 0`.
pub fn eval_ei(mean: f64, sd: f64, y_best: f64) -> f64 {
    let diff = mean - y_best;
    if sd <= 0.0 {
        return diff.max(0.0);
    }
    let z = diff / sd;
    (diff * norm_cdf(z) + sd * norm_pdf(z)).max(0.0)
}

/// Logarithm of the expected improvement. Requires `sd > 0`.
pub fn eval_log_ei(mean: f64, sd: f64, y_best: f64) -> Result<f64> {
    if !(sd > 0.0) {
        return Err(Error::UndefinedInput(format!(
            "log expected improvement needs a positive predictive sd (got {sd})"
        )));
    }
    Ok(log_h((mean - y_best) / sd) + sd.ln())
}

/// Upper confidence bound `mean + sqrt(beta) sd`.
pub fn eval_ucb(mean: f64, sd: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(invalid(format!("UCB needs beta > 0 (got {beta})")));
    }
    Ok(mean + beta.sqrt() * sd)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionFamily {
    Ei,
    LogEi,
    Ucb,
}

/// Acquisition family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub family: AcquisitionFamily,
    pub y_best: f64,
    pub beta: f64,
}

/// Floor applied to the predictive sd before taking LogEI, keeping the
/// criterion finite at interpolated training points.
pub const LOG_EI_SD_FLOOR: f64 = 1e-12;

impl AcquisitionSpec {
    pub fn ei(y_best: f64) -> Self {
        Self {
            family: AcquisitionFamily::Ei,
            y_best,
            beta: DEFAULT_BETA,
        }
    }

    pub fn log_ei(y_best: f64) -> Self {
        Self {
            family: AcquisitionFamily::LogEi,
            y_best,
            beta: DEFAULT_BETA,
        }
    }

    pub fn ucb(beta: f64) -> Self {
        Self {
            family: AcquisitionFamily::Ucb,
            y_best: f64::NAN,
            beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            AcquisitionFamily::Ucb if !(self.beta > 0.0) => Err(invalid("UCB needs beta > 0")),
            AcquisitionFamily::Ei | AcquisitionFamily::LogEi if !self.y_best.is_finite() => {
                Err(invalid("improvement-based acquisitions need a finite y_best"))
            }
            _ => Ok(()),
        }
    }

    /// Criterion value from a posterior mean and variance. LogEI floors the
    /// standard deviation at [`LOG_EI_SD_FLOOR`].
    #[inline]
    pub fn evaluate(&self, mean: f64, variance: f64) -> f64 {
        let sd = variance.max(0.0).sqrt();
        match self.family {
            AcquisitionFamily::Ei => eval_ei(mean, sd, self.y_best),
            AcquisitionFamily::LogEi => log_h((mean - self.y_best) / sd.max(LOG_EI_SD_FLOOR)) + sd.max(LOG_EI_SD_FLOOR).ln(),
            AcquisitionFamily::Ucb => mean + self.beta.sqrt() * sd,
        }
    }
}
