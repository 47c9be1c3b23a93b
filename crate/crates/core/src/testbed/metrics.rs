use serde::{Deserialize, Serialize};

use crate::acquisition::norm_cdf;
use crate::error::{invalid, Error, Result};

/// Mean absolute percentage error `mean(|(pred - truth) / truth|)`.
pub fn mape(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(invalid("MAPE needs at least one value"));
    }
    let mut total = 0.0;
    for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
        if *t == 0.0 {
            return Err(Error::DivisionByZero { index: i });
        }
        total += ((p - t) / t).abs();
    }
    Ok(total / truth.len() as f64)
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Result of a two-sided Mann-Whitney U test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `U` of the first sample.
    pub u_a: f64,
    /// `min(U_a, U_b)`.
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

/// Two-sided Mann-Whitney U test. Uses the exact null distribution when
/// there are no ties and the smaller sample has at most 8 values, and the
/// normal approximation with tie and continuity corrections otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("Mann-Whitney U needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(invalid("Mann-Whitney U samples must not contain NaN"));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let r = ranks(&pooled);
    let ra: f64 = r[..na].iter().sum();
    let u_a = ra - (na * (na + 1)) as f64 / 2.0;
    let u_b = (na * nb) as f64 - u_a;
    let u = u_a.min(u_b);

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }

    if tie_term == 0.0 && na.min(nb) <= 8 {
        let counts = u_distribution(na, nb);
        let total: f64 = counts.iter().sum();
        let k = u_a.round() as usize;
        let lower: f64 = counts[..=k].iter().sum::<f64>() / total;
        let upper: f64 = counts[k..].iter().sum::<f64>() / total;
        return Ok(MannWhitney {
            u_a,
            u,
            p: (2.0 * lower.min(upper)).min(1.0),
            exact: true,
        });
    }

    let n = (na + nb) as f64;
    let mu = (na * nb) as f64 / 2.0;
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u_a - mu).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * (1.0 - norm_cdf(z))).min(1.0)
    };
    Ok(MannWhitney { u_a, u, p, exact: false })
}

/// Number of orderings of `na + nb` distinct values giving each `U_a`.
fn u_distribution(na: usize, nb: usize) -> Vec<f64> {
    // f[i][j][u]: arrangements of i values from a and j from b with U = u.
    let max_u = na * nb;
    let mut f = vec![vec![vec![0.0f64; max_u + 1]; nb + 1]; na + 1];
    for j in 0..=nb {
        f[0][j][0] = 1.0;
    }
    for i in 1..=na {
        f[i][0][0] = 1.0;
        for j in 1..=nb {
            for u in 0..=i * j {
                // Largest value from a: it exceeds all j values of b.
                let from_a = if u >= j { f[i - 1][j][u - j] } else { 0.0 };
                let from_b = f[i][j - 1][u];
                f[i][j][u] = from_a + from_b;
            }
        }
    }
    f[na][nb].clone()
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(invalid("Spearman correlation needs at least two pairs"));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((mape(&[1.0, 1.0], &[2.0, 4.0]).unwrap() - 0.625).abs() < 1e-15);
        let a = mape(&[1.3, -0.2, 5.0], &[1.0, -0.5, 4.0]).unwrap();
        let b = mape(&[-3.9, 0.6, -15.0], &[-3.0, 1.5, -12.0]).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(matches!(mape(&[1.0], &[0.0]), Err(Error::DivisionByZero { index: 0 })));
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn separated_samples() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let b: Vec<f64> = (11..=20).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.u_a, 0.0);
        assert_eq!(r.u, 0.0);
        assert!(r.p < 0.01);
    }

    #[test]
    fn identical_samples() {
        let a: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = mann_whitney_u(&a, &a).unwrap();
        assert!(r.p >= 0.99, "{}", r.p);
    }

    #[test]
    fn u_distribution_small_case() {
        // n_a = n_b = 2: U takes 0..4 with counts 1, 1, 2, 1, 1.
        assert_eq!(u_distribution(2, 2), vec![1.0, 1.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.5]).unwrap() - 1.0).abs() < 1e-15);
    }
}
