//! Small-sample summaries used by the Monte-Carlo metrics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                std_err: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_err, n }
    }

    /// True when the mean is significantly above zero in a one-sided
    /// t-test at level `alpha`. With no spread, any positive mean counts.
    pub fn significantly_positive(&self, alpha: f64) -> bool {
        let tol = 1e-12 * self.mean.abs().max(1.0);
        if self.n < 2 || self.std_err <= tol {
            return self.mean > tol;
        }
        self.mean > t_critical(alpha, self.n - 1) * self.std_err
    }
}

/// Upper `alpha` quantile of Student's t with `df` degrees of freedom.
pub fn t_critical(alpha: f64, df: usize) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    t.inverse_cdf(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_basics() {
        let e = Estimate::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn t_quantiles() {
        // tabulated one-sided 95% critical values
        assert!((t_critical(0.05, 1) - 6.3138).abs() < 1e-3);
        assert!((t_critical(0.05, 9) - 1.8331).abs() < 1e-3);
        assert!((t_critical(0.05, 30) - 1.6973).abs() < 1e-3);
    }

    #[test]
    fn significance() {
        assert!(!Estimate::of(&[0.0, 0.0, 0.0]).significantly_positive(0.05));
        assert!(Estimate::of(&[1.0, 1.1, 0.9, 1.0]).significantly_positive(0.05));
        assert!(!Estimate::of(&[1.0, -1.0, 0.5, -0.4]).significantly_positive(0.05));
    }
}
