use serde::Serialize;

/// Mean, spread and extremes of one metric over N trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatSummary {
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (N − 1 denominator; 0 when N = 1).
    pub stdev: f64,
    /// `stdev / √N`.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl StatSummary {
    /// Values are summed in sorted order so the result does not depend on
    /// the order trials finished in.
    pub fn from_values(metric: &str, values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            return StatSummary { metric: metric.into(), n, mean: f64::NAN, stdev: f64::NAN, stderr: f64::NAN, min: f64::NAN, max: f64::NAN };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let stdev = var.sqrt();
        StatSummary { metric: metric.into(), n, mean, stdev, stderr: stdev / (n as f64).sqrt(), min: v[0], max: v[n - 1] }
    }
}

/// Running mean and variance (Welford), for Monte Carlo loops that do not
/// keep every sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}
