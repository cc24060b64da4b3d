//! Goodness-of-fit helpers for comparing sampled counts with exact probabilities.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::amplitude::{rational_to_f64, Rational};
use crate::error::{Error, Result};

/// Bins whose expected count falls below this are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub critical_value: f64,
    pub p_value: f64,
    pub significance: f64,
    pub passed: bool,
}

/// Pearson chi-square test of `observed` against exact category
/// probabilities.
///
/// Categories with expected count below [`MIN_EXPECTED`] are pooled into one
/// bin; if that bin is still too small it is folded into the smallest
/// remaining bin. Any observation in a zero-probability category fails the
/// test outright.
pub fn chi_square_gof(observed: &[u64], probabilities: &[Rational], significance: f64) -> Result<ChiSquareOutcome> {
    if observed.len() != probabilities.len() || observed.is_empty() {
        return Err(Error::domain("observed counts and probabilities must be non-empty and the same length"));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::domain("no observations"));
    }
    let n = total as f64;

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let mut impossible_hit = false;
    for (&o, p) in observed.iter().zip(probabilities) {
        let e = n * rational_to_f64(p);
        if e == 0.0 && o > 0 && p == &Rational::from_integer(0.into()) {
            impossible_hit = true;
        }
        if e < MIN_EXPECTED {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 || pooled.0 > 0.0 {
        if pooled.1 >= MIN_EXPECTED || bins.is_empty() {
            bins.push(pooled);
        } else {
            let smallest = bins
                .iter_mut()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            smallest.0 += pooled.0;
            smallest.1 += pooled.1;
        }
    }
    if bins.len() < 2 {
        return Err(Error::domain("need at least two bins after pooling"));
    }

    let statistic = if impossible_hit {
        f64::INFINITY
    } else {
        bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum()
    };
    let df = bins.len() - 1;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::domain(e.to_string()))?;
    let critical_value = dist.inverse_cdf(1.0 - significance);
    let p_value = if statistic.is_finite() { 1.0 - dist.cdf(statistic) } else { 0.0 };
    Ok(ChiSquareOutcome {
        statistic,
        degrees_of_freedom: df,
        critical_value,
        p_value,
        significance,
        passed: statistic <= critical_value,
    })
}
