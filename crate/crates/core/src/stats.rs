//! Summary statistics and Welch's unequal-variance t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("each sample needs at least two values (got {a} and {b})")]
    TooFewSamples { a: usize, b: usize },
    #[error("both samples have zero variance")]
    ZeroVariance,
    #[error("samples contain non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn summarize(xs: &[f64]) -> Summary {
    Summary {
        mean: mean(xs),
        sd: variance(xs).sqrt(),
    }
}

/// Two-sided p-value of Welch's t-test for a difference in means.
pub fn welch_test(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewSamples {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let se2 = va + vb;
    if se2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = (mean(a) - mean(b)) / se2.sqrt();
    if t == 0.0 {
        return Ok(1.0);
    }
    // Welch–Satterthwaite degrees of freedom
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let p = 2.0 * dist.cdf(-t.abs());
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_give_one() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(welch_test(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn known_value_matches_reference() {
        // scipy.stats.ttest_ind([1..5], [6..10], equal_var=False): t = -5, df = 8
        let p = welch_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[6.0, 7.0, 8.0, 9.0, 10.0]).unwrap();
        assert!((p - 0.001_052_825_793_366_539).abs() < 1e-9, "{p}");
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        assert!(matches!(welch_test(&[1.0], &[1.0, 2.0]), Err(StatsError::TooFewSamples { .. })));
        assert_eq!(welch_test(&[2.0, 2.0], &[2.0, 2.0]), Err(StatsError::ZeroVariance));
    }

    #[test]
    fn summary_uses_sample_sd() {
        let s = summarize(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(s.mean, 5.0);
        assert!((s.sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }
}
