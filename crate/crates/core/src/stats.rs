//! Marginal checks against the standard Gumbel law and two-sample tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("{len} samples cannot be split into blocks of {block} plus a reference set")]
    BlockMismatch { len: usize, block: usize },
    #[error("{0} is not a grid point")]
    UnknownGridPoint(f64),
    #[error("need at least two count classes")]
    TooFewClasses,
}

/// Asymptotic 1% critical constant of the two-sample KS statistic.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

/// Standard Gumbel CDF `exp(-e^{-x})`.
#[inline]
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Exact sup-distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let xs = sorted(sample);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let g = cdf(x);
        d = d.max((i as f64 + 1.0) / n - g).max(g - i as f64 / n);
    }
    Ok(d)
}

/// KS distance to the standard Gumbel law.
pub fn gumbel_deviation(sample: &[f64]) -> Result<f64, StatsError> {
    ks_statistic(sample, gumbel_cdf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DevSummary {
    pub dev_a: f64,
    pub dev_0: f64,
    pub dev_b: f64,
    #[serde(rename = "DEV")]
    pub dev: f64,
    pub n_reps: usize,
}

/// Gumbel deviations at the left edge, the centre and the right edge.
pub fn dev_summary(at_a: &[f64], at_0: &[f64], at_b: &[f64]) -> Result<DevSummary, StatsError> {
    let dev_a = gumbel_deviation(at_a)?;
    let dev_0 = gumbel_deviation(at_0)?;
    let dev_b = gumbel_deviation(at_b)?;
    Ok(DevSummary {
        dev_a,
        dev_0,
        dev_b,
        dev: (dev_a + dev_b) / 2.0,
        n_reps: at_0.len(),
    })
}

/// Two-sample KS statistic `sup |F_n - G_m|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (xs, ys) = (sorted(a), sorted(b));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Critical value of the two-sample KS statistic at the 1% level.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_CRITICAL_1PCT * ((n + m) / (n * m)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSampleTest {
    pub statistic: f64,
    pub critical: f64,
    pub n: usize,
    pub m: usize,
}

impl TwoSampleTest {
    pub fn new(a: &[f64], b: &[f64]) -> Result<Self, StatsError> {
        Ok(Self {
            statistic: ks_two_sample(a, b)?,
            critical: ks_critical_1pct(a.len(), b.len()),
            n: a.len(),
            m: b.len(),
        })
    }

    pub fn passes(&self) -> bool {
        self.statistic < self.critical
    }
}

/// Compares blockwise maxima minus `log n` with raw values.
///
/// The sample is read as `m` blocks of `n` values followed by `m` reference
/// values, so the length must be `(n + 1)·m`. For `n = 1` this compares two
/// halves of one sample.
pub fn max_stability_check(sample: &[f64], block: usize) -> Result<TwoSampleTest, StatsError> {
    if block == 0 || sample.is_empty() || sample.len() % (block + 1) != 0 {
        return Err(StatsError::BlockMismatch {
            len: sample.len(),
            block,
        });
    }
    let m = sample.len() / (block + 1);
    let shift = (block as f64).ln();
    let maxima: Vec<f64> = sample[..block * m]
        .chunks_exact(block)
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max) - shift)
        .collect();
    TwoSampleTest::new(&maxima, &sample[block * m..])
}

/// Compares the marginal at `t1` in one replication set with the marginal
/// at `t2` in another. Rows are realizations over `points`.
pub fn stationarity_check(
    points: &[f64],
    first: &[Vec<f64>],
    second: &[Vec<f64>],
    t1: f64,
    t2: f64,
) -> Result<TwoSampleTest, StatsError> {
    let locate = |t: f64| {
        points
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or(StatsError::UnknownGridPoint(t))
    };
    let (i, j) = (locate(t1)?, locate(t2)?);
    let a: Vec<f64> = first.iter().map(|r| r[i]).collect();
    let b: Vec<f64> = second.iter().map(|r| r[j]).collect();
    TwoSampleTest::new(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square goodness of fit of integer counts to Poisson(`mean`).
///
/// Classes are `0, 1, …` and a final tail class, merged so that every class
/// has expected count at least 5.
pub fn poisson_chi_square(counts: &[u64], mean: f64) -> Result<ChiSquareTest, StatsError> {
    if counts.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = counts.len() as f64;
    let max = *counts.iter().max().unwrap() as usize;
    let mut observed = vec![0.0; max + 2];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    let mut pmf = Vec::with_capacity(max + 2);
    let mut term = (-mean).exp();
    for j in 0..=max {
        if j > 0 {
            term *= mean / j as f64;
        }
        pmf.push(term);
    }
    pmf.push((1.0 - pmf.iter().sum::<f64>()).max(0.0));

    let mut classes: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (obs, p) in observed.iter().zip(&pmf) {
        o += obs;
        e += p * n;
        if e >= 5.0 {
            classes.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if let Some(last) = classes.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    if classes.len() < 2 {
        return Err(StatsError::TooFewClasses);
    }
    let statistic: f64 = classes.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = classes.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(statistic);
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gumbel_values() {
        assert!((gumbel_cdf(0.0) - (-1.0f64).exp()).abs() < 1e-16);
        assert!(gumbel_cdf(-10.0) < 1e-300);
    }

    #[test]
    fn single_sample_at_median() {
        let median = -(std::f64::consts::LN_2).ln();
        let d = gumbel_deviation(&[median]).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_samples() {
        assert_eq!(gumbel_deviation(&[]), Err(StatsError::EmptySample));
        assert_eq!(ks_two_sample(&[1.0], &[]), Err(StatsError::EmptySample));
    }

    #[test]
    fn two_sample_with_ties() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[0.0, 1.0], &[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn block_mismatch() {
        assert!(matches!(
            max_stability_check(&[0.0; 10], 2),
            Err(StatsError::BlockMismatch { len: 10, block: 2 })
        ));
        assert!(max_stability_check(&[0.0; 9], 2).is_ok());
    }

    #[test]
    fn unknown_point() {
        let rows = vec![vec![0.0, 1.0]];
        assert_eq!(
            stationarity_check(&[0.0, 0.5], &rows, &rows, 0.0, 0.25),
            Err(StatsError::UnknownGridPoint(0.25))
        );
    }
}
