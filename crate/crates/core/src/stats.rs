//! Nonparametric bootstrap over independent draws.

use rand::Rng;

use crate::rng::{self, Domain};

pub const DEFAULT_RESAMPLES: usize = 200;

/// Standard error of `statistic` by resampling `n` draws with replacement.
///
/// `statistic` receives the resampled draw indices. Resampling is seeded from
/// `seed`, so the error bar is reproducible and independent of the order in
/// which the draws were produced.
pub fn bootstrap_std_error<F>(n: usize, resamples: usize, seed: u64, statistic: F) -> f64
where
    F: Fn(&[usize]) -> f64,
{
    if n < 2 || resamples < 2 {
        return 0.0;
    }
    let mut rng = rng::stream(seed, Domain::Bootstrap, 0);
    let mut idx = vec![0usize; n];
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        let v = statistic(&idx);
        if v.is_finite() {
            values.push(v);
        }
    }
    std_dev(&values)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Mean of `values[i]` over the resampled indices.
pub fn resampled_mean(values: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64
}
