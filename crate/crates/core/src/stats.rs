//! Interval estimates for Monte-Carlo outputs.

/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at 95% confidence.
/// Returns `(low, high)`; an empty sample gives the uninformative `(0, 1)`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Half-width of the Wilson interval.
pub fn wilson_half_width(successes: u64, trials: u64) -> f64 {
    let (lo, hi) = wilson_interval(successes, trials);
    0.5 * (hi - lo)
}

/// Sample mean and the 95% normal half-width of the mean.
pub fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// An estimated proportion (miss-detection probability, frame error rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub events: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn value(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.events as f64 / self.trials as f64
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        wilson_interval(self.events, self.trials)
    }

    pub fn half_width(&self) -> f64 {
        wilson_half_width(self.events, self.trials)
    }
}

/// One point of an experiment curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    /// Curve label, for example the policy being evaluated.
    pub series: String,
    pub x: f64,
    pub metric: f64,
    pub n_trials: u64,
    /// 95% half-width of `metric`; zero for exact (non-random) values.
    pub ci_half_width: f64,
}

impl CurvePoint {
    pub fn proportion(series: impl Into<String>, x: f64, p: Proportion) -> Self {
        CurvePoint { series: series.into(), x, metric: p.value(), n_trials: p.trials, ci_half_width: p.half_width() }
    }

    pub fn exact(series: impl Into<String>, x: f64, metric: f64) -> Self {
        CurvePoint { series: series.into(), x, metric, n_trials: 0, ci_half_width: 0.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate_and_stays_in_unit_interval() {
        for (k, n) in [(0, 10), (10, 10), (3, 7), (500, 1000)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p + 1e-15 && p <= hi + 1e-15);
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
    }

    #[test]
    fn wilson_matches_reference_value() {
        // statsmodels proportion_confint(5, 20, method="wilson")
        let (lo, hi) = wilson_interval(5, 20);
        assert!((lo - 0.111_861_701).abs() < 1e-6, "{lo}");
        assert!((hi - 0.468_700_878).abs() < 1e-6, "{hi}");
    }
}
