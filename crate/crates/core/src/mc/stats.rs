use crate::error::{Error, Result};

/// Running sums for a mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, y: f64) {
        self.n += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }

    pub fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn stderr(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        let var = ((self.sum_sq / n - m * m) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    /// Kish effective sample size `(sum y)^2 / sum y^2`.
    pub fn kish(&self) -> f64 {
        if self.sum_sq > 0.0 {
            self.sum * self.sum / self.sum_sq
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimate {
    pub n_steps: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_effective: f64,
    pub n_paths: u64,
    pub method: String,
    /// Same paths read at coarser resolutions (finest first), for step-halving bias checks.
    pub levels: Vec<LevelEstimate>,
}

impl Estimate {
    pub(crate) fn from_moments(m: &Moments, n_effective: f64, method: impl Into<String>) -> Self {
        let value = m.mean();
        let stderr = m.stderr();
        Self {
            value,
            stderr,
            ci_low: value - 1.96 * stderr,
            ci_high: value + 1.96 * stderr,
            n_effective,
            n_paths: m.n,
            method: method.into(),
            levels: Vec::new(),
        }
    }

    /// Number of standard errors separating this estimate from `x`.
    pub fn z_score(&self, x: f64) -> f64 {
        (self.value - x) / self.stderr
    }
}

/// Kolmogorov-Smirnov distance between the weighted empirical law of
/// `values` and the continuous `cdf`.
pub fn ks_weighted<F: Fn(f64) -> f64>(values: &[f64], weights: &[f64], cdf: F) -> Result<f64> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::EmptySample);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptySample);
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut acc = 0.0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let x = values[idx[i]];
        let f = cdf(x);
        d = d.max((f - acc / total).abs());
        while i < idx.len() && values[idx[i]] == x {
            acc += weights[idx[i]];
            i += 1;
        }
        d = d.max((acc / total - f).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let w = vec![1.0; n];
        let d = ks_weighted(&v, &w, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_rejects_empty() {
        assert_eq!(ks_weighted(&[], &[], |x| x), Err(Error::EmptySample));
    }

    #[test]
    fn moments_stderr() {
        let mut m = Moments::default();
        for y in [1.0, 2.0, 3.0, 4.0] {
            m.push(y);
        }
        assert!((m.mean() - 2.5).abs() < 1e-15);
        assert!((m.stderr() - (5.0f64 / 12.0).sqrt()).abs() < 1e-14);
    }
}
