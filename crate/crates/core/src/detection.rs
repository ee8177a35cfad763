//! Detector bank and threshold calibration.
//!
//! Three paths look at the same snapshot:
//!
//! * coarse: spectral kurtosis of the FFT magnitudes, OR the largest mean
//!   FRFT magnitude over a few fixed orders;
//! * fine: kurtosis of the FRFT magnitudes, maximized over the order by a
//!   one-dimensional search (the maximizer is the matched order);
//! * energy: mean power, the classical baseline.
//!
//! Every statistic is compared against an empirical threshold learned from
//! noise-only snapshots. A detection is `statistic > threshold`.

use std::cell::RefCell;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frft::{EngineVariant, FrftEngine, FrftSession};
use crate::search::{try_grid_maximize, try_gss_maximize, SearchOutcome};
use crate::signal::{derive_seed, wgn_samples, IqBuffer};
use crate::stats::{self, kurtosis, tail_threshold, MIN_EMPIRICAL_EXCEEDANCES};

/// Minimum number of noise snapshots accepted by [`calibrate`].
pub const MIN_CALIBRATION_TRIALS: usize = 1000;

const CALIBRATION_STREAM: u64 = 0xca1;

/// How the fine path searches the order interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchScheme {
    /// Golden-section search down to `gss_tolerance`.
    #[default]
    Golden,
    /// Exhaustive scan at a fixed step (cost baseline).
    Grid { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub snapshot_len: usize,
    pub gss_interval: [f64; 2],
    pub gss_tolerance: f64,
    pub coarse_orders: Vec<f64>,
    pub target_pfa: f64,
    pub search: SearchScheme,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            snapshot_len: 4096,
            gss_interval: [0.001, 1.51],
            gss_tolerance: 1e-3,
            coarse_orders: vec![0.2, 0.3, 0.4],
            target_pfa: 1e-3,
            search: SearchScheme::Golden,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.gss_interval;
        if self.snapshot_len < 4 || !self.snapshot_len.is_multiple_of(2) {
            return invalid(format!("snapshot_len must be even and at least 4, got {}", self.snapshot_len));
        }
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return invalid(format!("gss_interval must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
        }
        if !(self.gss_tolerance > 0.0 && self.gss_tolerance < hi - lo) {
            return invalid(format!("gss_tolerance must lie in (0, hi - lo), got {}", self.gss_tolerance));
        }
        if !(self.target_pfa > 0.0 && self.target_pfa < 1.0) {
            return invalid(format!("target_pfa must lie in (0, 1), got {}", self.target_pfa));
        }
        if self.coarse_orders.is_empty() || self.coarse_orders.iter().any(|a| !a.is_finite()) {
            return invalid("coarse_orders must be a non-empty list of finite orders");
        }
        if let SearchScheme::Grid { step } = self.search {
            if !(step > 0.0 && step.is_finite()) {
                return invalid(format!("grid step must be positive, got {step}"));
            }
        }
        Ok(())
    }

    fn check_snapshot(&self, x: &IqBuffer) -> Result<()> {
        if x.len() != self.snapshot_len {
            return invalid(format!(
                "snapshot has {} samples, detector expects {}",
                x.len(),
                self.snapshot_len
            ));
        }
        Ok(())
    }
}

/// Decision thresholds learned from noise-only snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSet {
    /// Spectral kurtosis (coarse path).
    pub kurtosis_threshold: f64,
    /// Matched-order FRFT kurtosis (fine path).
    pub frft_kurtosis_threshold: f64,
    pub energy_threshold: f64,
    /// Largest mean FRFT magnitude over the coarse orders (coarse path).
    pub coarse_frft_threshold: f64,
    pub calibrated_pfa: f64,
    pub calibration_snapshots: usize,
    /// Set when at least one threshold came from the fitted tail model.
    pub extrapolated: bool,
    pub snapshot_len: usize,
    pub search: SearchScheme,
}

impl ThresholdSet {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let thr: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        thr.validate()?;
        Ok(thr)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.kurtosis_threshold,
            self.frft_kurtosis_threshold,
            self.energy_threshold,
            self.coarse_frft_threshold,
        ];
        if all.iter().any(|t| !t.is_finite()) {
            return invalid("thresholds must be finite");
        }
        if self.calibration_snapshots < MIN_CALIBRATION_TRIALS {
            return invalid(format!(
                "thresholds calibrated on {} snapshots, need at least {MIN_CALIBRATION_TRIALS}",
                self.calibration_snapshots
            ));
        }
        Ok(())
    }

    pub(crate) fn check_against(&self, cfg: &DetectorConfig) -> Result<()> {
        if self.snapshot_len != cfg.snapshot_len || self.search != cfg.search {
            return Err(Error::MissingCalibration(format!(
                "thresholds were calibrated for snapshot_len={} search={:?}, detector uses snapshot_len={} search={:?}; run calibrate for this configuration",
                self.snapshot_len, self.search, cfg.snapshot_len, cfg.search
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseModel {
    /// Circular white Gaussian noise with `E|n|² = sigma²`.
    Wgn { sigma: f64 },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Wgn { sigma: 1.0 }
    }
}

impl NoiseModel {
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Complex64>> {
        match *self {
            NoiseModel::Wgn { sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return invalid(format!("noise sigma must be positive, got {sigma}"));
                }
                Ok(wgn_samples(n, sigma, seed))
            }
        }
    }
}

/// Path tags used in [`DetectionReport::degenerate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorPath {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseOutcome {
    pub detected: bool,
    pub kurtosis_stat: f64,
    pub coarse_frft_stat: f64,
    pub fft_calls: u64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineOutcome {
    pub detected: bool,
    pub matched_order: f64,
    pub peak_frft_value: f64,
    pub peak_bin: usize,
    pub frft_kurtosis_stat: f64,
    pub objective_evals: usize,
    pub fft_calls: u64,
    pub matched_frft: Vec<Complex64>,
    pub degenerate: bool,
}

/// Merged result of all detector paths for one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub detected_coarse: bool,
    pub detected_fine: bool,
    pub detected_energy: bool,
    pub matched_order: f64,
    pub peak_frft_value: f64,
    pub peak_bin: usize,
    pub kurtosis_stat: f64,
    pub frft_kurtosis_stat: f64,
    pub energy_stat: f64,
    pub objective_evals: usize,
    pub fft_calls: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_frft: Option<Vec<Complex64>>,
    /// Paths that saw a degenerate (silent or flat) snapshot.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<DetectorPath>,
    #[serde(skip)]
    pub coarse_frft_stat: f64,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// `|c|` without `hypot`'s overflow guard, which dominates profiles here.
fn abs(c: &Complex64) -> f64 {
    c.norm_sqr().sqrt()
}

fn spectrum_magnitudes(x: &[Complex64]) -> Vec<f64> {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(x.len()));
    let mut buf = x.to_vec();
    plan.process(&mut buf);
    buf.iter().map(abs).collect()
}

/// Kurtosis `m4/m2²` of the N-point FFT magnitudes.
pub fn spectral_kurtosis(x: &IqBuffer) -> Result<f64> {
    if x.len() < 4 {
        return invalid(format!("spectral kurtosis needs at least 4 samples, got {}", x.len()));
    }
    kurtosis(&spectrum_magnitudes(x.samples())).map_err(|e| match e {
        Error::DegenerateInput(_) => Error::DegenerateInput("flat magnitude spectrum".into()),
        other => other,
    })
}

/// Mean `|x|²` over the snapshot.
pub fn energy_statistic(x: &IqBuffer) -> f64 {
    x.mean_power()
}

fn magnitude_kurtosis(c: &[Complex64]) -> Result<f64> {
    let mags: Vec<f64> = c.iter().map(abs).collect();
    kurtosis(&mags)
}

/// Lowest index of the largest magnitude, and that magnitude.
fn peak(c: &[Complex64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in c.iter().enumerate() {
        let m = abs(v);
        if m > best.1 {
            best = (i, m);
        }
    }
    best
}

/// Result of maximizing the FRFT-magnitude kurtosis over the order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedOrder {
    pub search: SearchOutcome,
    /// Coefficients at `search.arg`.
    pub coefficients: Vec<Complex64>,
    pub fft_calls: u64,
}

/// Searches `interval` for the order maximizing the kurtosis of `|FRFT|`.
///
/// Fails with [`Error::DegenerateInput`] if any probed order gives a
/// zero-variance magnitude sequence.
pub fn matched_order_search(
    session: &mut FrftSession<'_>,
    interval: [f64; 2],
    tolerance: f64,
    scheme: SearchScheme,
) -> Result<MatchedOrder> {
    let mut fft_calls = 0u64;
    let mut last: Option<(f64, Vec<Complex64>)> = None;
    let mut best: Option<(f64, f64, Vec<Complex64>)> = None;
    let mut objective = |a: f64| -> Result<f64> {
        let r = session.transform(a)?;
        fft_calls += r.fft_calls;
        let k = magnitude_kurtosis(&r.coefficients)?;
        // golden search ends on its reported point; only a scan needs the best so far
        if matches!(scheme, SearchScheme::Grid { .. }) && best.as_ref().is_none_or(|b| k > b.0) {
            best = Some((k, a, r.coefficients.clone()));
        }
        last = Some((a, r.coefficients));
        Ok(k)
    };
    let [lo, hi] = interval;
    let search = match scheme {
        SearchScheme::Golden => try_gss_maximize(&mut objective, lo, hi, tolerance)??,
        SearchScheme::Grid { step } => try_grid_maximize(&mut objective, lo, hi, step)??,
    };
    let coefficients = match (last, best) {
        (Some((a, c)), _) if a == search.arg => c,
        (_, Some((_, a, c))) if a == search.arg => c,
        _ => return Err(Error::Numeric("search returned an order it never evaluated".into())),
    };
    Ok(MatchedOrder { search, coefficients, fft_calls })
}

/// Fine path: matched-order search, then threshold the kurtosis there.
pub fn fine_detect(
    x: &IqBuffer,
    cfg: &DetectorConfig,
    thr: &ThresholdSet,
    variant: EngineVariant,
) -> Result<FineOutcome> {
    cfg.validate()?;
    cfg.check_snapshot(x)?;
    thr.check_against(cfg)?;
    let engine = FrftEngine::cached(cfg.snapshot_len)?;
    let mut session = engine.session(x.samples(), variant)?;
    match matched_order_search(&mut session, cfg.gss_interval, cfg.gss_tolerance, cfg.search) {
        Ok(m) => {
            let (peak_bin, peak_frft_value) = peak(&m.coefficients);
            Ok(FineOutcome {
                detected: m.search.value > thr.frft_kurtosis_threshold,
                matched_order: m.search.arg,
                peak_frft_value,
                peak_bin,
                frft_kurtosis_stat: m.search.value,
                objective_evals: m.search.evals,
                fft_calls: m.fft_calls,
                matched_frft: m.coefficients,
                degenerate: false,
            })
        }
        Err(Error::DegenerateInput(_)) => Ok(FineOutcome {
            detected: false,
            matched_order: 0.0,
            peak_frft_value: 0.0,
            peak_bin: 0,
            frft_kurtosis_stat: 0.0,
            objective_evals: 0,
            fft_calls: 0,
            matched_frft: Vec::new(),
            degenerate: true,
        }),
        Err(e) => Err(e),
    }
}

/// Largest mean `|FRFT|` over `orders`, with the FFT work spent.
fn coarse_frft_statistic(session: &mut FrftSession<'_>, orders: &[f64]) -> Result<(f64, u64)> {
    let mut best = f64::NEG_INFINITY;
    let mut calls = 0;
    for &a in orders {
        let r = session.transform(a)?;
        calls += r.fft_calls;
        let m = r.coefficients.iter().map(abs).sum::<f64>() / r.coefficients.len() as f64;
        best = best.max(m);
    }
    Ok((best, calls))
}

/// Coarse path: spectral kurtosis OR fixed-order mean FRFT magnitude.
pub fn coarse_detect(x: &IqBuffer, cfg: &DetectorConfig, thr: &ThresholdSet) -> Result<CoarseOutcome> {
    coarse_detect_with(x, cfg, thr, EngineVariant::TwoPhase)
}

pub fn coarse_detect_with(
    x: &IqBuffer,
    cfg: &DetectorConfig,
    thr: &ThresholdSet,
    variant: EngineVariant,
) -> Result<CoarseOutcome> {
    cfg.validate()?;
    cfg.check_snapshot(x)?;
    thr.check_against(cfg)?;
    let engine = FrftEngine::cached(cfg.snapshot_len)?;
    let mut session = engine.session(x.samples(), variant)?;
    let (coarse_frft_stat, frft_calls) = coarse_frft_statistic(&mut session, &cfg.coarse_orders)?;
    let frft_hit = coarse_frft_stat > thr.coarse_frft_threshold;
    match spectral_kurtosis(x) {
        Ok(k) => Ok(CoarseOutcome {
            detected: k > thr.kurtosis_threshold || frft_hit,
            kurtosis_stat: k,
            coarse_frft_stat,
            fft_calls: frft_calls + 1,
            degenerate: false,
        }),
        Err(Error::DegenerateInput(_)) => Ok(CoarseOutcome {
            detected: false,
            kurtosis_stat: 0.0,
            coarse_frft_stat,
            fft_calls: frft_calls + 1,
            degenerate: true,
        }),
        Err(e) => Err(e),
    }
}

/// Runs the coarse and fine paths side by side plus the energy baseline.
///
/// Degenerate snapshots are reported per path; invalid arguments abort.
pub fn detect(
    x: &IqBuffer,
    cfg: &DetectorConfig,
    thr: &ThresholdSet,
    variant: EngineVariant,
) -> Result<DetectionReport> {
    cfg.validate()?;
    cfg.check_snapshot(x)?;
    thr.check_against(cfg)?;
    let (coarse, fine) = rayon::join(|| coarse_detect_with(x, cfg, thr, variant), || fine_detect(x, cfg, thr, variant));
    let (coarse, fine) = (coarse?, fine?);
    let energy_stat = energy_statistic(x);
    let mut degenerate = Vec::new();
    if coarse.degenerate {
        degenerate.push(DetectorPath::Coarse);
    }
    if fine.degenerate {
        degenerate.push(DetectorPath::Fine);
    }
    Ok(DetectionReport {
        detected_coarse: coarse.detected,
        detected_fine: fine.detected,
        detected_energy: energy_stat > thr.energy_threshold,
        matched_order: fine.matched_order,
        peak_frft_value: fine.peak_frft_value,
        peak_bin: fine.peak_bin,
        kurtosis_stat: coarse.kurtosis_stat,
        frft_kurtosis_stat: fine.frft_kurtosis_stat,
        energy_stat,
        objective_evals: fine.objective_evals,
        fft_calls: coarse.fft_calls + fine.fft_calls,
        matched_frft: (!fine.degenerate).then_some(fine.matched_frft),
        degenerate,
        coarse_frft_stat: coarse.coarse_frft_stat,
    })
}

/// Raw detector statistics of one snapshot, before thresholding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Statistics {
    pub kurtosis: f64,
    pub coarse_frft: f64,
    pub fine: f64,
    pub energy: f64,
    pub matched_order: f64,
    pub objective_evals: usize,
    pub fine_fft_calls: u64,
    pub coarse_fft_calls: u64,
    pub degenerate_coarse: bool,
    pub degenerate_fine: bool,
}

impl Statistics {
    /// Verdicts `(coarse, fine, energy)` against `thr`.
    pub fn verdicts(&self, thr: &ThresholdSet) -> (bool, bool, bool) {
        (
            !self.degenerate_coarse
                && (self.kurtosis > thr.kurtosis_threshold || self.coarse_frft > thr.coarse_frft_threshold),
            !self.degenerate_fine && self.fine > thr.frft_kurtosis_threshold,
            self.energy > thr.energy_threshold,
        )
    }
}

/// All statistics of one snapshot, with the same arithmetic as [`detect`].
/// Degenerate paths yield 0.
pub fn statistics(x: &[Complex64], cfg: &DetectorConfig, variant: EngineVariant) -> Result<Statistics> {
    let engine = FrftEngine::cached(cfg.snapshot_len)?;
    let (coarse_frft, coarse_calls) = coarse_frft_statistic(&mut engine.session(x, variant)?, &cfg.coarse_orders)?;
    let (kurtosis, degenerate_coarse) = match kurtosis(&spectrum_magnitudes(x)) {
        Ok(k) => (k, false),
        Err(Error::DegenerateInput(_)) => (0.0, true),
        Err(e) => return Err(e),
    };
    let (fine, matched_order, objective_evals, fine_fft_calls, degenerate_fine) =
        match fine_statistic(x, cfg, variant) {
            Ok(m) => (m.search.value, m.search.arg, m.search.evals, m.fft_calls, false),
            Err(Error::DegenerateInput(_)) => (0.0, 0.0, 0, 0, true),
            Err(e) => return Err(e),
        };
    let energy = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    Ok(Statistics {
        kurtosis,
        coarse_frft,
        fine,
        energy,
        matched_order,
        objective_evals,
        fine_fft_calls,
        coarse_fft_calls: coarse_calls + 1,
        degenerate_coarse,
        degenerate_fine,
    })
}

/// Matched-order search on a raw snapshot with the configured scheme.
pub fn fine_statistic(x: &[Complex64], cfg: &DetectorConfig, variant: EngineVariant) -> Result<MatchedOrder> {
    let engine = FrftEngine::cached(cfg.snapshot_len)?;
    let mut session = engine.session(x, variant)?;
    matched_order_search(&mut session, cfg.gss_interval, cfg.gss_tolerance, cfg.search)
}

/// Noise-only statistics for `trials` snapshots, in trial order.
pub fn noise_statistics(
    noise: &NoiseModel,
    cfg: &DetectorConfig,
    trials: usize,
    seed: u64,
    variant: EngineVariant,
) -> Result<Vec<Statistics>> {
    cfg.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let x = noise.sample(cfg.snapshot_len, derive_seed(seed, &[CALIBRATION_STREAM, i as u64]))?;
            statistics(&x, cfg, variant)
        })
        .collect()
}

/// Learns thresholds for `cfg.target_pfa` from `trials` noise-only snapshots.
pub fn calibrate(noise: &NoiseModel, cfg: &DetectorConfig, trials: usize, seed: u64) -> Result<ThresholdSet> {
    if trials < MIN_CALIBRATION_TRIALS {
        return invalid(format!("calibration needs at least {MIN_CALIBRATION_TRIALS} trials, got {trials}"));
    }
    let stats = noise_statistics(noise, cfg, trials, seed, EngineVariant::TwoPhase)?;
    thresholds_from_statistics(&stats, cfg)
}

/// Threshold selection from precomputed noise statistics.
pub fn thresholds_from_statistics(stats: &[Statistics], cfg: &DetectorConfig) -> Result<ThresholdSet> {
    cfg.validate()?;
    let n = stats.len();
    if n < MIN_CALIBRATION_TRIALS {
        return invalid(format!("calibration needs at least {MIN_CALIBRATION_TRIALS} trials, got {n}"));
    }
    let pfa = cfg.target_pfa;
    let sorted = |f: fn(&Statistics) -> f64| {
        let mut v: Vec<f64> = stats.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (fine, ext_fine) = tail_threshold(&sorted(|s| s.fine), pfa)?;
    let (energy, ext_energy) = tail_threshold(&sorted(|s| s.energy), pfa)?;
    let (kurt, coarse_frft, ext_coarse) = joint_or_thresholds(
        &stats.iter().map(|s| s.kurtosis).collect::<Vec<_>>(),
        &stats.iter().map(|s| s.coarse_frft).collect::<Vec<_>>(),
        pfa,
    )?;
    Ok(ThresholdSet {
        kurtosis_threshold: kurt,
        frft_kurtosis_threshold: fine,
        energy_threshold: energy,
        coarse_frft_threshold: coarse_frft,
        calibrated_pfa: pfa,
        calibration_snapshots: n,
        extrapolated: ext_fine || ext_energy || ext_coarse,
        snapshot_len: cfg.snapshot_len,
        search: cfg.search,
    })
}

/// Thresholds for a detector that fires when either of two statistics
/// exceeds its own threshold, with a joint false-alarm rate of `pfa`.
///
/// Both thresholds sit at the same per-statistic tail count `r`; the largest
/// `r` whose union exceedance count stays within `pfa·n` is chosen. When too
/// few exceedances are available the rate is split evenly and each tail is
/// extrapolated.
fn joint_or_thresholds(a: &[f64], b: &[f64], pfa: f64) -> Result<(f64, f64, bool)> {
    let n = a.len();
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let budget = (n as f64 * pfa).floor() as usize;
    if budget < MIN_EMPIRICAL_EXCEEDANCES {
        let (ta, _) = tail_threshold(&sa, pfa / 2.0)?;
        let (tb, _) = tail_threshold(&sb, pfa / 2.0)?;
        return Ok((ta, tb, true));
    }
    let union = |r: usize| {
        let (ta, tb) = (sa[n - r - 1], sb[n - r - 1]);
        a.iter().zip(b).filter(|(x, y)| **x > ta || **y > tb).count()
    };
    // union(r) is non-decreasing in r, and union(r) >= r
    let (mut lo, mut hi) = (0usize, budget);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if union(mid) <= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok((sa[n - lo - 1], sb[n - lo - 1], false))
}

/// Fraction of `flags` that are set, with its binomial standard error.
pub fn rate(flags: impl IntoIterator<Item = bool>) -> (f64, f64) {
    let (mut hits, mut n) = (0usize, 0usize);
    for f in flags {
        hits += f as usize;
        n += 1;
    }
    let p = hits as f64 / n.max(1) as f64;
    (p, stats::binomial_se(p, n.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_chirp_len, ChirpParams};

    fn unit_thresholds(cfg: &DetectorConfig) -> ThresholdSet {
        ThresholdSet {
            kurtosis_threshold: 1e9,
            frft_kurtosis_threshold: 1e9,
            energy_threshold: 1e9,
            coarse_frft_threshold: 1e9,
            calibrated_pfa: 1e-3,
            calibration_snapshots: 1000,
            extrapolated: false,
            snapshot_len: cfg.snapshot_len,
            search: cfg.search,
        }
    }

    #[test]
    fn one_hot_spectrum_kurtosis() {
        // x = IDFT of a one-hot magnitude spectrum
        let x = IqBuffer::new(vec![Complex64::new(0.25, 0.0); 4], 1.0).unwrap();
        let k = spectral_kurtosis(&x).unwrap();
        assert!((k - 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn flat_spectrum_is_degenerate() {
        let mut s = vec![Complex64::new(0.0, 0.0); 8];
        s[0] = Complex64::new(1.0, 0.0);
        let x = IqBuffer::new(s, 1.0).unwrap();
        assert!(matches!(spectral_kurtosis(&x), Err(Error::DegenerateInput(_))));
        assert!(spectral_kurtosis(&IqBuffer::zeros(3, 1.0).unwrap()).is_err());
    }

    #[test]
    fn energy_of_zero_and_unit_chirp() {
        assert_eq!(energy_statistic(&IqBuffer::zeros(16, 1.0).unwrap()), 0.0);
        let c = gen_chirp_len(&ChirpParams::default(), 3e6, 4096).unwrap();
        assert!((energy_statistic(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = DetectorConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.gss_interval = [0.0, 1.0];
        assert!(cfg.validate().is_err());
        cfg = DetectorConfig { gss_tolerance: 2.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = DetectorConfig { target_pfa: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = DetectorConfig { snapshot_len: 7, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn silent_snapshot_is_degenerate_not_an_error() {
        let cfg = DetectorConfig { snapshot_len: 256, ..Default::default() };
        let thr = unit_thresholds(&cfg);
        let r = detect(&IqBuffer::zeros(256, 3e6).unwrap(), &cfg, &thr, EngineVariant::TwoPhase).unwrap();
        assert!(!r.detected_coarse && !r.detected_fine && !r.detected_energy);
        assert_eq!(r.degenerate, vec![DetectorPath::Coarse, DetectorPath::Fine]);
    }

    #[test]
    fn mismatched_thresholds_are_rejected() {
        let cfg = DetectorConfig { snapshot_len: 256, ..Default::default() };
        let mut thr = unit_thresholds(&cfg);
        thr.snapshot_len = 512;
        let x = IqBuffer::new(wgn_samples(256, 1.0, 1), 3e6).unwrap();
        assert!(matches!(detect(&x, &cfg, &thr, EngineVariant::TwoPhase), Err(Error::MissingCalibration(_))));
        let wrong_len = IqBuffer::new(wgn_samples(128, 1.0, 1), 3e6).unwrap();
        assert!(detect(&wrong_len, &cfg, &unit_thresholds(&cfg), EngineVariant::TwoPhase).is_err());
    }

    #[test]
    fn report_json_fields() {
        let cfg = DetectorConfig { snapshot_len: 256, ..Default::default() };
        let x = IqBuffer::new(wgn_samples(256, 1.0, 2), 3e6).unwrap();
        let mut r = detect(&x, &cfg, &unit_thresholds(&cfg), EngineVariant::TwoPhase).unwrap();
        r.matched_frft = None;
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        let mut want = vec![
            "detected_coarse",
            "detected_fine",
            "detected_energy",
            "matched_order",
            "peak_frft_value",
            "peak_bin",
            "kurtosis_stat",
            "frft_kurtosis_stat",
            "energy_stat",
            "objective_evals",
            "fft_calls",
        ];
        want.sort();
        assert_eq!(keys, want);
    }

    #[test]
    fn joint_or_respects_budget() {
        let n = 20_000;
        let a: Vec<f64> = (0..n).map(|i| ((i * 7919) % n) as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| ((i * 104_729) % n) as f64).collect();
        let (ta, tb, ext) = joint_or_thresholds(&a, &b, 0.01).unwrap();
        assert!(!ext);
        let hits = a.iter().zip(&b).filter(|(x, y)| **x > ta || **y > tb).count();
        assert!(hits <= 200 && hits > 150, "{hits}");
    }

    #[test]
    fn peak_ties_take_lowest_bin() {
        let c = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(2.0, 0.0)];
        assert_eq!(peak(&c), (1, 2.0));
    }
}
