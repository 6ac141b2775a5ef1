//! Goodness-of-fit statistics used by the validation harnesses.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n(x) - F(x)|`.
///
/// `samples` is sorted in place.
pub fn ks_statistic<F>(samples: &mut [f64], cdf: F) -> f64
where
    F: Fn(f64) -> f64,
{
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail probability `P[sqrt(n) D_n > lambda]`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // Series converges too slowly here and the tail is 1 to double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a KS statistic computed from `n` samples.
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    kolmogorov_sf(statistic * (n as f64).sqrt())
}

/// Large-sample critical value of the KS statistic at level `alpha`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against equal cell
/// probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> Result<ChiSquareResult> {
    let cells = counts.len();
    if cells < 2 {
        return Err(Error::InsufficientData(format!(
            "chi-square test needs at least 2 cells, got {cells}"
        )));
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / cells as f64;
    if expected < 5.0 {
        return Err(Error::InsufficientData(format!(
            "expected count per cell is {expected:.3} (< 5)"
        )));
    }
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum::<f64>();
    let dof = cells - 1;
    let law = ChiSquared::new(dof as f64).map_err(|e| Error::domain(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: law.sf(statistic),
    })
}
