//! Sample moments, empirical tail thresholds, generalized-Pareto tail
//! extrapolation and binomial confidence bounds.

use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{invalid, Error, Result};

/// Minimum number of exceedances the empirical quantile needs before the
/// threshold is trusted without a tail model.
pub const MIN_EMPIRICAL_EXCEEDANCES: usize = 100;

/// Non-excess kurtosis `m4 / m2²` with population central moments.
///
/// Fails with [`Error::DegenerateInput`] when the variance is zero relative to
/// the mean.
pub fn kurtosis(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return invalid("kurtosis of an empty sequence");
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in x {
        let d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if !(m2 > 1e-24 * (mean * mean).max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateInput("sequence has zero variance".into()));
    }
    Ok(m4 / (m2 * m2))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Median of a non-empty slice (mean of the two central values for even length).
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Threshold `t` with exactly `floor(n·pfa)` samples strictly above it
/// (absent ties). `sorted` must be ascending.
pub fn empirical_threshold(sorted: &[f64], pfa: f64) -> Result<f64> {
    let n = sorted.len();
    let k = (n as f64 * pfa).floor() as usize;
    if n == 0 || k >= n {
        return invalid(format!("cannot place a pfa={pfa} threshold on {n} samples"));
    }
    Ok(sorted[n - k - 1])
}

/// Generalized Pareto fit to threshold excesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdFit {
    /// Shape ξ (heavy tail when positive).
    pub shape: f64,
    pub scale: f64,
}

impl GpdFit {
    /// Probability-weighted-moment estimator on the excesses `y > 0`.
    pub fn fit_pwm(excesses: &[f64]) -> Result<Self> {
        let k = excesses.len();
        if k < 10 {
            return invalid(format!("need at least 10 excesses for a tail fit, got {k}"));
        }
        let mut y = excesses.to_vec();
        y.sort_by(f64::total_cmp);
        let kf = k as f64;
        let a0 = y.iter().sum::<f64>() / kf;
        let a1 = y
            .iter()
            .enumerate()
            .map(|(i, v)| (1.0 - (i as f64 + 0.65) / kf) * v)
            .sum::<f64>()
            / kf;
        let denom = a0 - 2.0 * a1;
        if !(denom > 0.0 && a0 > 0.0) {
            return Err(Error::Numeric("tail excesses do not admit a PWM fit".into()));
        }
        let scale = 2.0 * a0 * a1 / denom;
        let shape = 2.0 - a0 / denom;
        Ok(Self { shape, scale })
    }

    /// Excess `y` with `P(Y > y) = q`.
    pub fn excess_quantile(&self, q: f64) -> f64 {
        if self.shape.abs() < 1e-9 {
            -self.scale * q.ln()
        } else {
            self.scale / self.shape * (q.powf(-self.shape) - 1.0)
        }
    }
}

/// Threshold for exceedance probability `pfa` from an ascending sample.
///
/// Returns `(threshold, extrapolated)`. With at least
/// [`MIN_EMPIRICAL_EXCEEDANCES`] expected exceedances the empirical quantile
/// is used; otherwise a generalized Pareto tail is fitted above the
/// empirical quantile that has exactly that many exceedances.
pub fn tail_threshold(sorted: &[f64], pfa: f64) -> Result<(f64, bool)> {
    let n = sorted.len();
    if !(pfa > 0.0 && pfa < 1.0) {
        return invalid(format!("false-alarm rate must lie in (0, 1), got {pfa}"));
    }
    if n as f64 * pfa >= MIN_EMPIRICAL_EXCEEDANCES as f64 {
        return Ok((empirical_threshold(sorted, pfa)?, false));
    }
    let k0 = MIN_EMPIRICAL_EXCEEDANCES;
    if n <= k0 {
        return invalid(format!("tail extrapolation needs more than {k0} samples, got {n}"));
    }
    let u = sorted[n - k0 - 1];
    let excess: Vec<f64> = sorted[n - k0..].iter().map(|v| v - u).collect();
    let fit = GpdFit::fit_pwm(&excess)?;
    let q = pfa / (k0 as f64 / n as f64);
    Ok((u + fit.excess_quantile(q), true))
}

/// Binomial standard error `sqrt(p(1-p)/n)` of a proportion.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Exact (Clopper-Pearson) two-sided interval for `successes` out of `n` at
/// coverage `level`.
pub fn clopper_pearson(successes: usize, n: usize, level: f64) -> Result<(f64, f64)> {
    if n == 0 || successes > n || !(level > 0.0 && level < 1.0) {
        return invalid("invalid binomial interval arguments");
    }
    let tail = (1.0 - level) / 2.0;
    let (x, nf) = (successes as f64, n as f64);
    let beta = |a: f64, b: f64| Beta::new(a, b).map_err(|e| Error::Numeric(e.to_string()));
    let lo = if successes == 0 { 0.0 } else { beta(x, nf - x + 1.0)?.inverse_cdf(tail) };
    let hi = if successes == n { 1.0 } else { beta(x + 1.0, nf - x)?.inverse_cdf(1.0 - tail) };
    Ok((lo, hi))
}
