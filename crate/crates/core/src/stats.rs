//! Small statistics helpers with deterministic (index-ordered) reductions.

use serde::Serialize;

/// Monte Carlo summary of one estimated quantity. `elapsed` is measured for
/// operator feedback and deliberately excluded from serialized output so
/// that re-runs are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorResult {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    #[serde(skip)]
    pub elapsed: f64,
}

impl EstimatorResult {
    pub fn from_values(values: &[f64], elapsed: f64) -> Self {
        assert!(values.len() >= 2, "at least two samples required");
        let (mean, stderr) = mean_stderr(values);
        EstimatorResult {
            mean,
            stderr,
            n_samples: values.len(),
            elapsed,
        }
    }
}

/// Sample mean and standard error, accumulated in index order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2, "at least two samples required");
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Sample covariance of paired observations.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 2);
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    s / (n as f64 - 1.0)
}

/// Mean and delta-method standard error of `m1 - m0 ln(m0)` for paired
/// samples `(f, f ln f)`; the entropy functional of a semigroup average.
pub fn entropy_mean_stderr(f_vals: &[f64], flogf_vals: &[f64]) -> (f64, f64) {
    let n = f_vals.len() as f64;
    let (m0, se0) = mean_stderr(f_vals);
    let (m1, se1) = mean_stderr(flogf_vals);
    let entropy = m1 - m0 * m0.ln();
    let grad0 = -(m0.ln() + 1.0);
    let cov = covariance(f_vals, flogf_vals) / n;
    let var = se1 * se1 + grad0 * grad0 * se0 * se0 + 2.0 * grad0 * cov;
    (entropy, var.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mean_and_stderr_on_a_known_sample() {
        let vals = [1.0, 2.0, 3.0, 4.0];
        let (m, se) = mean_stderr(&vals);
        assert_relative_eq!(m, 2.5);
        // sample variance 5/3, stderr sqrt(5/12)
        assert_relative_eq!(se, (5.0f64 / 12.0).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn covariance_of_identical_series_is_the_variance() {
        let vals = [0.5, 1.5, -0.5, 2.0];
        let (m, _) = mean_stderr(&vals);
        let var: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 3.0;
        assert_relative_eq!(covariance(&vals, &vals), var, max_relative = 1e-14);
    }

    #[test]
    fn entropy_of_a_constant_sample_is_zero() {
        let f = [0.7f64; 8];
        let flogf: Vec<f64> = f.iter().map(|v| v * v.ln()).collect();
        let (e, se) = entropy_mean_stderr(&f, &flogf);
        assert_relative_eq!(e, 0.0, epsilon = 1e-15);
        assert_relative_eq!(se, 0.0, epsilon = 1e-15);
    }
}
