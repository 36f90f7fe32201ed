//! Scalar numerics shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// `ln(i!)` for `i = 0..=n`.
pub fn log_factorials(n: usize) -> Vec<f64> {
    (0..=n).map(|i| libm::lgamma(i as f64 + 1.0)).collect()
}

/// `ln C(n, c)` from a [`log_factorials`] table. The two subtracted terms
/// are added first so that `c` and `n − c` give bit-identical results.
#[inline]
pub fn log_binomial(log_fact: &[f64], n: usize, c: usize) -> f64 {
    log_fact[n] - (log_fact[c] + log_fact[n - c])
}

/// `atanh(x) = ½ ln((1 + x)/(1 − x))`, written as `½ log1p(2x/(1 − x))`.
#[inline]
pub fn atanh(x: f64) -> f64 {
    0.5 * (2.0 * x / (1.0 - x)).ln_1p()
}

/// Sample standard deviation with the `n − 1` denominator; `None` below two
/// values.
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    Some((ss / (n - 1.0)).sqrt())
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}
