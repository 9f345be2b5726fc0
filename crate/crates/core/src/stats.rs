//! Summary statistics and the distributional comparison used by the
//! experiments.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Sample mean and unbiased variance. The variance is `None` for a single
/// observation.
pub fn mean_var(xs: &[f64]) -> Result<(f64, Option<f64>)> {
    if xs.is_empty() {
        return Err(Error::Empty("no observations"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, None));
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    Ok((mean, Some(ss / (n - 1.0))))
}

/// Standard normal CDF, `Phi(z) = erfc(-z / sqrt 2) / 2`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `samples` and the continuous CDF `cdf`.
pub fn ks_distance<F>(samples: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(Error::Empty("ks_distance needs at least one sample"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::parameter("ks_distance samples contain NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let fx = cdf(x);
            let above = (i + 1) as f64 / n - fx;
            let below = fx - i as f64 / n;
            above.abs().max(below.abs())
        })
        .fold(0.0, f64::max);
    Ok(d.clamp(0.0, 1.0))
}
