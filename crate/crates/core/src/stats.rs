//! Success statistics: Wilson intervals, repeats-for-confidence and
//! chi-square uniformity checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        lo: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
        hi: if successes >= trials { 1.0 } else { (centre + half).min(1.0) },
    }
}

/// Independent restarts needed for 99% cumulative success:
/// the smallest `r` with `(1 - p)^r <= 0.01`.
///
/// `p = 1` gives 1; `p = 0` has no finite answer and is an error.
pub fn repeats_for_confidence(p: f64) -> Result<u64> {
    if p == 1.0 {
        return Ok(1);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "success probability {p} must lie in (0, 1]"
        )));
    }
    let ratio = 0.01f64.ln() / (1.0 - p).ln();
    // 1 - 0.99 is not exactly 0.01 in binary; shave rounding noise before ceil.
    Ok((ratio * (1.0 - 1e-12)).ceil().max(1.0) as u64)
}

pub fn total_iterations(budget: u64, p: f64) -> Result<u64> {
    Ok(budget * repeats_for_confidence(p)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub passed: bool,
}

/// Pearson goodness-of-fit against the uniform distribution over the bins.
pub fn chi_square_uniform(counts: &[u64], confidence: f64) -> ChiSquareTest {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = counts.len().saturating_sub(1).max(1);
    let critical = ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(confidence);
    ChiSquareTest {
        statistic,
        dof,
        critical,
        passed: statistic <= critical,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeats_examples() {
        assert_eq!(repeats_for_confidence(0.99).unwrap(), 1);
        assert_eq!(repeats_for_confidence(0.9).unwrap(), 2);
        assert_eq!(repeats_for_confidence(0.5).unwrap(), 7);
        assert_eq!(repeats_for_confidence(1.0).unwrap(), 1);
        assert!(repeats_for_confidence(0.0).is_err());
        assert!(repeats_for_confidence(1.5).is_err());
        assert!(repeats_for_confidence(f64::NAN).is_err());
    }

    #[test]
    fn repeats_satisfy_defining_inequality() {
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            let r = repeats_for_confidence(p).unwrap() as i32;
            let miss = 1.0 - p;
            assert!(miss.powi(r) <= 0.01 * (1.0 + 1e-9), "p={p} r={r}");
            assert!(r == 1 || miss.powi(r - 1) > 0.01 * (1.0 - 1e-9), "p={p} r={r}");
        }
    }

    #[test]
    fn total_examples() {
        assert_eq!(total_iterations(100, 0.99).unwrap(), 100);
        assert_eq!(total_iterations(10, 0.5).unwrap(), 70);
        assert_eq!(total_iterations(40, 0.9).unwrap(), 80);
    }

    #[test]
    fn wilson_bounds() {
        let all = wilson_interval(100, 100, Z95);
        assert!(all.hi == 1.0 && all.lo > 0.96 && all.lo < 0.97);
        let none = wilson_interval(0, 100, Z95);
        assert!(none.lo == 0.0 && none.hi < 0.04);
        let half = wilson_interval(50, 100, Z95);
        assert!((half.lo - 0.4038).abs() < 1e-3 && (half.hi - 0.5962).abs() < 1e-3);
        assert!(!none.overlaps(&half) && half.overlaps(&half));
    }

    #[test]
    fn chi_square_critical_value() {
        // Four bins, 3 dof: 99% critical value 11.345.
        let t = chi_square_uniform(&[25, 25, 25, 25], 0.99);
        assert_eq!(t.statistic, 0.0);
        assert!((t.critical - 11.3449).abs() < 1e-3);
        assert!(t.passed);
        assert!(!chi_square_uniform(&[100, 0, 0, 0], 0.99).passed);
    }
}
