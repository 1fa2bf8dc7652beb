//! Small statistical helpers for comparing Monte Carlo error counts.

use statrs::function::erf::erfc;

/// Two-sided p-value of a standard normal statistic.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Pooled two-proportion z statistic for `x1/n1` versus `x2/n2`.
///
/// Returns 0 when both proportions are 0 or 1 (no variance).
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p = (x1 + x2) as f64 / (n1f + n2f);
    let var = p * (1.0 - p) * (1.0 / n1f + 1.0 / n2f);
    if var <= 0.0 {
        return 0.0;
    }
    (x1 as f64 / n1f - x2 as f64 / n2f) / var.sqrt()
}

/// Running mean/variance of i.i.d. observations (e.g. per-frame error counts).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count.max(1) as f64).sqrt()
    }
}

/// Welch z statistic for the difference of two means.
///
/// Suited to clustered data such as post-FEC bit errors, where the frame, not
/// the bit, is the independent unit.
pub fn welch_z(a: &MeanAccumulator, b: &MeanAccumulator) -> f64 {
    let var = a.std_error().powi(2) + b.std_error().powi(2);
    if var <= 0.0 {
        return 0.0;
    }
    (a.mean() - b.mean()) / var.sqrt()
}
