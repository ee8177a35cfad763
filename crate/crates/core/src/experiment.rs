//! Monte-Carlo sweeps driven by a [`ScenarioConfig`].
//!
//! Every trial draws its noise from a seed derived from `(seed, stream,
//! point, trial)`, so results do not depend on how rayon schedules the work.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{
    fine_statistic, noise_statistics, rate, statistics, thresholds_from_statistics, DetectorConfig, NoiseModel,
    SearchScheme, Statistics, ThresholdSet,
};
use crate::doa::estimate_azimuth_with;
use crate::error::{invalid, Error, Result};
use crate::frft::EngineVariant;
use crate::signal::{array_from_source, derive_seed, gen_chirp_len, ChirpParams, IqBuffer};
use crate::stats::{self, tail_threshold};

const CALIBRATION_STREAM: u64 = 0xc0;
const SIGNAL_STREAM: u64 = 0x51;
const FRESH_NOISE_STREAM: u64 = 0xf5;
const ROC_NOISE_STREAM: u64 = 0x40;
const ROC_SIGNAL_STREAM: u64 = 0x41;
const DOA_STREAM: u64 = 0xd0;
const TABLE1_CAL_STREAM: u64 = 0x7c;
const TABLE1_SIGNAL_STREAM: u64 = 0x75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoaScenario {
    pub azimuth_deg: f64,
    pub m: usize,
    pub spacing_over_lambda: f64,
    /// Per-sensor chirp-to-noise power ratio.
    pub snr_sweep_db: Vec<f64>,
    pub trials: usize,
    pub snapshot_len: usize,
    pub grid_step_deg: f64,
}

impl Default for DoaScenario {
    fn default() -> Self {
        Self {
            azimuth_deg: 20.0,
            m: 2,
            spacing_over_lambda: 0.5,
            snr_sweep_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            trials: 100,
            snapshot_len: 1024,
            grid_step_deg: 0.1,
        }
    }
}

/// Knobs for the search-cost comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table1Scenario {
    pub scaling_db: f64,
    pub trials: usize,
    /// Noise snapshots per scheme for its own fine threshold.
    pub calibration_trials: usize,
    pub grid_step: f64,
}

impl Default for Table1Scenario {
    fn default() -> Self {
        Self { scaling_db: 0.0, trials: 200, calibration_trials: 1000, grid_step: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Chirp shape; its `scaling_db` is replaced by each sweep point.
    pub chirp: ChirpParams,
    pub sample_rate_hz: f64,
    /// Overrides `detector.snapshot_len`.
    pub snapshot_len: usize,
    /// Monte-Carlo trials per sweep point.
    pub snapshots: usize,
    pub scaling_sweep_db: Vec<f64>,
    /// One threshold set per entry; overrides `detector.target_pfa`.
    pub pfa_targets: Vec<f64>,
    pub detector: DetectorConfig,
    pub doa: DoaScenario,
    pub seed: u64,
    /// Noise standard deviation, `E|n|² = sigma²`.
    pub noise_sigma: f64,
    pub calibration_trials: usize,
    pub engine: EngineVariant,
    pub table1: Table1Scenario,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            chirp: ChirpParams::default(),
            sample_rate_hz: 3e6,
            snapshot_len: 4096,
            snapshots: 1095,
            scaling_sweep_db: (0..=12).map(|i| -60.0 + 5.0 * i as f64).collect(),
            pfa_targets: vec![1e-3],
            detector: DetectorConfig::default(),
            doa: DoaScenario::default(),
            seed: 1,
            noise_sigma: 1.0,
            calibration_trials: 100_000,
            engine: EngineVariant::TwoPhase,
            table1: Table1Scenario::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snapshots < 1 {
            return invalid("snapshots must be at least 1");
        }
        if self.scaling_sweep_db.is_empty() || self.doa.snr_sweep_db.is_empty() {
            return invalid("sweeps must be non-empty");
        }
        if self.scaling_sweep_db.iter().chain(&self.doa.snr_sweep_db).any(|v| !v.is_finite()) {
            return invalid("sweep values must be finite");
        }
        if self.pfa_targets.is_empty() {
            return invalid("pfa_targets must be non-empty");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return invalid(format!("noise_sigma must be positive, got {}", self.noise_sigma));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return invalid(format!("sample_rate_hz must be positive, got {}", self.sample_rate_hz));
        }
        for &p in &self.pfa_targets {
            self.detector_for(p).validate()?;
        }
        // chirp validity is checked by the generator
        gen_chirp_len(&self.chirp, self.sample_rate_hz, self.snapshot_len)?;
        let d = &self.doa;
        if d.m < 2 || d.trials < 1 || d.snapshot_len < d.m || !d.snapshot_len.is_multiple_of(2) {
            return invalid("doa needs m >= 2, trials >= 1 and an even snapshot_len >= m");
        }
        if !(d.azimuth_deg.abs() <= 90.0 && d.spacing_over_lambda > 0.0 && d.grid_step_deg > 0.0) {
            return invalid("doa azimuth must lie in [-90, 90] with positive spacing and grid step");
        }
        let t = &self.table1;
        if t.trials < 1 || !(t.grid_step > 0.0) || !t.scaling_db.is_finite() {
            return invalid("table1 needs trials >= 1, a positive grid_step and a finite scaling_db");
        }
        Ok(())
    }

    /// Detector settings at this scenario's snapshot length and `pfa`.
    pub fn detector_for(&self, pfa: f64) -> DetectorConfig {
        DetectorConfig { snapshot_len: self.snapshot_len, target_pfa: pfa, ..self.detector.clone() }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel::Wgn { sigma: self.noise_sigma }
    }

    fn chirp_at(&self, scaling_db: f64, len: usize) -> Result<IqBuffer> {
        gen_chirp_len(&self.chirp.with_scaling_db(scaling_db), self.sample_rate_hz, len)
    }

    fn noisy_chirp(&self, chirp: &IqBuffer, seed: u64) -> Result<Vec<num_complex::Complex64>> {
        let mut x = self.noise().sample(chirp.len(), seed)?;
        x.iter_mut().zip(chirp.samples()).for_each(|(n, c)| *n += c);
        Ok(x)
    }
}

/// Per-point detection rates along a sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Vec<f64>,
    pub pd_fine: Vec<f64>,
    pub pd_fine_se: Vec<f64>,
    pub pd_coarse: Vec<f64>,
    pub pd_coarse_se: Vec<f64>,
    pub pd_energy: Vec<f64>,
    pub pd_energy_se: Vec<f64>,
    /// Mean fine-search objective evaluations.
    pub mean_evals: Vec<f64>,
    /// Mean FFT work of both paths, in N-point units.
    pub mean_fft_calls: Vec<f64>,
    pub trials: usize,
    pub calibrated_pfa: f64,
    pub extrapolated: bool,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str =
        "scaling_db,pd_fine,pd_fine_se,pd_coarse,pd_coarse_se,pd_energy,pd_energy_se,evals,fft_calls";

    /// Scores per-point statistics against `thr`.
    pub fn from_statistics(axis: &[f64], points: &[Vec<Statistics>], thr: &ThresholdSet) -> Self {
        let mut r = SweepResult {
            axis: axis.to_vec(),
            pd_fine: vec![],
            pd_fine_se: vec![],
            pd_coarse: vec![],
            pd_coarse_se: vec![],
            pd_energy: vec![],
            pd_energy_se: vec![],
            mean_evals: vec![],
            mean_fft_calls: vec![],
            trials: points.first().map_or(0, Vec::len),
            calibrated_pfa: thr.calibrated_pfa,
            extrapolated: thr.extrapolated,
        };
        for stats in points {
            let verdicts: Vec<_> = stats.iter().map(|s| s.verdicts(thr)).collect();
            let (p, se) = rate(verdicts.iter().map(|v| v.1));
            r.pd_fine.push(p);
            r.pd_fine_se.push(se);
            let (p, se) = rate(verdicts.iter().map(|v| v.0));
            r.pd_coarse.push(p);
            r.pd_coarse_se.push(se);
            let (p, se) = rate(verdicts.iter().map(|v| v.2));
            r.pd_energy.push(p);
            r.pd_energy_se.push(se);
            let n = stats.len().max(1) as f64;
            r.mean_evals.push(stats.iter().map(|s| s.objective_evals as f64).sum::<f64>() / n);
            r.mean_fft_calls
                .push(stats.iter().map(|s| (s.fine_fft_calls + s.coarse_fft_calls) as f64).sum::<f64>() / n);
        }
        r
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for i in 0..self.axis.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.axis[i],
                self.pd_fine[i],
                self.pd_fine_se[i],
                self.pd_coarse[i],
                self.pd_coarse_se[i],
                self.pd_energy[i],
                self.pd_energy_se[i],
                self.mean_evals[i],
                self.mean_fft_calls[i]
            )
            .unwrap();
        }
        out
    }
}

/// Noise-only statistics for calibration, shared by every Pfa target.
pub fn calibration_statistics(cfg: &ScenarioConfig) -> Result<Vec<Statistics>> {
    cfg.validate()?;
    let det = cfg.detector_for(cfg.pfa_targets[0]);
    noise_statistics(
        &cfg.noise(),
        &det,
        cfg.calibration_trials,
        derive_seed(cfg.seed, &[CALIBRATION_STREAM]),
        cfg.engine,
    )
}

/// One threshold set per entry of `pfa_targets`, in order.
pub fn calibrate_scenario(cfg: &ScenarioConfig) -> Result<Vec<ThresholdSet>> {
    let stats = calibration_statistics(cfg)?;
    thresholds_for_targets(cfg, &stats)
}

pub fn thresholds_for_targets(cfg: &ScenarioConfig, stats: &[Statistics]) -> Result<Vec<ThresholdSet>> {
    cfg.pfa_targets.iter().map(|&p| thresholds_from_statistics(stats, &cfg.detector_for(p))).collect()
}

/// Raw statistics for every (scaling point, trial), in axis order.
pub fn pd_sweep_statistics(cfg: &ScenarioConfig) -> Result<Vec<Vec<Statistics>>> {
    cfg.validate()?;
    let det = cfg.detector_for(cfg.pfa_targets[0]);
    cfg.scaling_sweep_db
        .iter()
        .enumerate()
        .map(|(k, &db)| {
            let chirp = cfg.chirp_at(db, cfg.snapshot_len)?;
            (0..cfg.snapshots)
                .into_par_iter()
                .map(|t| {
                    let x = cfg.noisy_chirp(&chirp, derive_seed(cfg.seed, &[SIGNAL_STREAM, k as u64, t as u64]))?;
                    statistics(&x, &det, cfg.engine)
                })
                .collect()
        })
        .collect()
}

/// Pd curves over `scaling_sweep_db`, one per threshold set.
pub fn run_pd_sweep(cfg: &ScenarioConfig, thresholds: &[ThresholdSet]) -> Result<Vec<SweepResult>> {
    cfg.validate()?;
    if thresholds.is_empty() {
        return Err(Error::MissingCalibration("run `calibrate` first or pass --auto-calibrate".into()));
    }
    for thr in thresholds {
        thr.check_against(&cfg.detector_for(thr.calibrated_pfa))?;
    }
    let points = pd_sweep_statistics(cfg)?;
    Ok(thresholds.iter().map(|thr| SweepResult::from_statistics(&cfg.scaling_sweep_db, &points, thr)).collect())
}

/// Calibrates, then sweeps.
pub fn run_pd_sweep_auto(cfg: &ScenarioConfig) -> Result<(Vec<ThresholdSet>, Vec<SweepResult>)> {
    let thr = calibrate_scenario(cfg)?;
    let sweeps = run_pd_sweep(cfg, &thr)?;
    Ok((thr, sweeps))
}

/// False alarms on fresh noise (independent of the calibration draws).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalseAlarmCounts {
    pub trials: usize,
    pub fine: usize,
    pub coarse: usize,
    pub energy: usize,
}

pub fn run_false_alarm(cfg: &ScenarioConfig, thr: &ThresholdSet, trials: usize) -> Result<FalseAlarmCounts> {
    cfg.validate()?;
    let det = cfg.detector_for(thr.calibrated_pfa);
    thr.check_against(&det)?;
    let stats = noise_statistics(
        &cfg.noise(),
        &det,
        trials,
        derive_seed(cfg.seed, &[FRESH_NOISE_STREAM]),
        cfg.engine,
    )?;
    let mut c = FalseAlarmCounts { trials, fine: 0, coarse: 0, energy: 0 };
    for s in &stats {
        let (coarse, fine, energy) = s.verdicts(thr);
        c.coarse += coarse as usize;
        c.fine += fine as usize;
        c.energy += energy as usize;
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub scheme: String,
    pub search: SearchScheme,
    pub engine: EngineVariant,
    pub tolerance: Option<f64>,
    pub mean_evals: f64,
    pub mean_fft_calls: f64,
    pub pd: f64,
    pub pd_se: f64,
    pub threshold: f64,
    pub extrapolated: bool,
    /// Mean per-snapshot wall time, excluded from the deterministic CSV.
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
    pub scaling_db: f64,
    pub trials: usize,
}

impl Table1 {
    pub const CSV_HEADER: &'static str = "scheme,evals,fft_calls,pd,pd_se,threshold,extrapolated";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.scheme, r.mean_evals, r.mean_fft_calls, r.pd, r.pd_se, r.threshold, r.extrapolated
            )
            .unwrap();
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("scheme,wall_time_ms\n");
        for r in &self.rows {
            writeln!(out, "{},{}", r.scheme, r.wall_time_ms).unwrap();
        }
        out
    }
}

/// The four search schemes compared for cost.
pub fn table1_schemes(cfg: &ScenarioConfig) -> [(String, SearchScheme, Option<f64>, EngineVariant); 4] {
    let step = cfg.table1.grid_step;
    [
        (format!("iterative_{step}"), SearchScheme::Grid { step }, None, EngineVariant::SinglePhase),
        ("gss_1e-8".into(), SearchScheme::Golden, Some(1e-8), EngineVariant::SinglePhase),
        ("gss_1e-3".into(), SearchScheme::Golden, Some(1e-3), EngineVariant::SinglePhase),
        ("gss_1e-3_two_phase".into(), SearchScheme::Golden, Some(1e-3), EngineVariant::TwoPhase),
    ]
}

/// Runs the four schemes on identical noise and signal snapshots. Each
/// scheme gets its own fine threshold at `pfa_targets[0]`.
pub fn run_table1(cfg: &ScenarioConfig) -> Result<Table1> {
    cfg.validate()?;
    let t1 = &cfg.table1;
    let pfa = cfg.pfa_targets[0];
    let chirp = cfg.chirp_at(t1.scaling_db, cfg.snapshot_len)?;
    let noise = cfg.noise();
    let mut rows = Vec::new();
    for (scheme, search, tol, engine) in table1_schemes(cfg) {
        let det = DetectorConfig {
            search,
            gss_tolerance: tol.unwrap_or(cfg.detector.gss_tolerance),
            ..cfg.detector_for(pfa)
        };
        det.validate()?;
        let mut cal: Vec<f64> = (0..t1.calibration_trials)
            .into_par_iter()
            .map(|i| {
                let x = noise.sample(cfg.snapshot_len, derive_seed(cfg.seed, &[TABLE1_CAL_STREAM, i as u64]))?;
                fine_value(&x, &det, engine)
            })
            .collect::<Result<_>>()?;
        cal.sort_by(f64::total_cmp);
        let (threshold, extrapolated) = tail_threshold(&cal, pfa)?;
        let runs: Vec<(f64, usize, u64, f64)> = (0..t1.trials)
            .into_par_iter()
            .map(|t| {
                let x = cfg.noisy_chirp(&chirp, derive_seed(cfg.seed, &[TABLE1_SIGNAL_STREAM, t as u64]))?;
                let start = Instant::now();
                let r = match fine_statistic(&x, &det, engine) {
                    Ok(m) => (m.search.value, m.search.evals, m.fft_calls),
                    Err(Error::DegenerateInput(_)) => (f64::NEG_INFINITY, 0, 0),
                    Err(e) => return Err(e),
                };
                Ok((r.0, r.1, r.2, start.elapsed().as_secs_f64() * 1e3))
            })
            .collect::<Result<_>>()?;
        let n = runs.len() as f64;
        let (pd, pd_se) = rate(runs.iter().map(|r| r.0 > threshold));
        rows.push(Table1Row {
            scheme,
            search,
            engine,
            tolerance: tol,
            mean_evals: runs.iter().map(|r| r.1 as f64).sum::<f64>() / n,
            mean_fft_calls: runs.iter().map(|r| r.2 as f64).sum::<f64>() / n,
            pd,
            pd_se,
            threshold,
            extrapolated,
            wall_time_ms: runs.iter().map(|r| r.3).sum::<f64>() / n,
        });
    }
    Ok(Table1 { rows, scaling_db: t1.scaling_db, trials: t1.trials })
}

fn fine_value(x: &[num_complex::Complex64], det: &DetectorConfig, engine: EngineVariant) -> Result<f64> {
    match fine_statistic(x, det, engine) {
        Ok(m) => Ok(m.search.value),
        Err(Error::DegenerateInput(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Azimuth error statistics along the SNR axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaSweepResult {
    pub axis: Vec<f64>,
    pub median_abs_error_deg: Vec<f64>,
    pub mean_abs_error_deg: Vec<f64>,
    /// Fraction of trials whose eigenvalue split was flagged degenerate.
    pub degenerate_fraction: Vec<f64>,
    /// Error of a single noise-free snapshot at unit amplitude.
    pub noise_free_error_deg: f64,
    pub trials: usize,
}

impl DoaSweepResult {
    pub const CSV_HEADER: &'static str = "snr_db,median_abs_error_deg,mean_abs_error_deg,degenerate_fraction";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for i in 0..self.axis.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.axis[i], self.median_abs_error_deg[i], self.mean_abs_error_deg[i], self.degenerate_fraction[i]
            )
            .unwrap();
        }
        out
    }
}

/// One azimuth estimate; the focusing order comes from the matched-order
/// search on the first sensor.
fn doa_trial(cfg: &ScenarioConfig, source: &IqBuffer, noise_sigma: f64, seed: u64) -> Result<(f64, bool)> {
    let d = &cfg.doa;
    let snap = array_from_source(source, d.azimuth_deg, d.m, d.spacing_over_lambda, noise_sigma, seed)?;
    let det = DetectorConfig { snapshot_len: d.snapshot_len, ..cfg.detector.clone() };
    let first = snap.sensors()[0].samples();
    let est = match fine_statistic(first, &det, cfg.engine) {
        Ok(m) => estimate_azimuth_with(&snap, m.search.arg, d.grid_step_deg, cfg.engine, Some(&m.coefficients))?,
        Err(Error::DegenerateInput(_)) => estimate_azimuth_with(&snap, 0.0, d.grid_step_deg, cfg.engine, None)?,
        Err(e) => return Err(e),
    };
    Ok(((est.azimuth_deg - d.azimuth_deg).abs(), est.degenerate))
}

pub fn run_doa_sweep(cfg: &ScenarioConfig) -> Result<DoaSweepResult> {
    cfg.validate()?;
    let d = &cfg.doa;
    let mut r = DoaSweepResult {
        axis: d.snr_sweep_db.clone(),
        median_abs_error_deg: vec![],
        mean_abs_error_deg: vec![],
        degenerate_fraction: vec![],
        noise_free_error_deg: 0.0,
        trials: d.trials,
    };
    for (k, &snr) in d.snr_sweep_db.iter().enumerate() {
        // chirp power over noise power sigma²
        let source = cfg.chirp_at(snr + 20.0 * cfg.noise_sigma.log10(), d.snapshot_len)?;
        let errs: Vec<(f64, bool)> = (0..d.trials)
            .into_par_iter()
            .map(|t| doa_trial(cfg, &source, cfg.noise_sigma, derive_seed(cfg.seed, &[DOA_STREAM, k as u64, t as u64])))
            .collect::<Result<_>>()?;
        let abs: Vec<f64> = errs.iter().map(|e| e.0).collect();
        r.median_abs_error_deg.push(stats::median(&abs));
        r.mean_abs_error_deg.push(stats::mean(&abs));
        r.degenerate_fraction.push(rate(errs.iter().map(|e| e.1)).0);
    }
    let clean = cfg.chirp_at(0.0, d.snapshot_len)?;
    r.noise_free_error_deg = doa_trial(cfg, &clean, 0.0, 0)?.0;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub detector: String,
    /// Number of noise statistics strictly above the threshold.
    pub rank: usize,
    pub threshold: f64,
    /// Second threshold of the coarse OR-detector (fixed-order FRFT).
    pub threshold_aux: Option<f64>,
    pub pfa: f64,
    pub pd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocTable {
    pub scaling_db: f64,
    pub snapshot_len: usize,
    pub noise_trials: usize,
    pub signal_trials: usize,
    pub points: Vec<RocPoint>,
}

impl RocTable {
    pub const CSV_HEADER: &'static str = "detector,rank,threshold,threshold_aux,pfa,pd";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for p in &self.points {
            let aux = p.threshold_aux.map(|t| t.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{},{}", p.detector, p.rank, p.threshold, aux, p.pfa, p.pd).unwrap();
        }
        out
    }

    /// Points of one detector, by increasing rank.
    pub fn curve(&self, detector: &str) -> Vec<&RocPoint> {
        self.points.iter().filter(|p| p.detector == detector).collect()
    }
}

/// ROC curves at `scaling_db` from `snapshots` fresh noise and signal trials.
///
/// Thresholds step through the sorted noise statistics: rank `r` puts the
/// threshold at the `r+1`-th largest value, and rank `n` at `-inf`.
pub fn run_roc(cfg: &ScenarioConfig, scaling_db: f64) -> Result<RocTable> {
    cfg.validate()?;
    if !scaling_db.is_finite() {
        return invalid("scaling_db must be finite");
    }
    let det = cfg.detector_for(cfg.pfa_targets[0]);
    let noise = noise_statistics(&cfg.noise(), &det, cfg.snapshots, derive_seed(cfg.seed, &[ROC_NOISE_STREAM]), cfg.engine)?;
    let chirp = cfg.chirp_at(scaling_db, cfg.snapshot_len)?;
    let signal: Vec<Statistics> = (0..cfg.snapshots)
        .into_par_iter()
        .map(|t| {
            let x = cfg.noisy_chirp(&chirp, derive_seed(cfg.seed, &[ROC_SIGNAL_STREAM, t as u64]))?;
            statistics(&x, &det, cfg.engine)
        })
        .collect::<Result<_>>()?;
    let n = noise.len();
    let frac = |hits: usize, total: usize| hits as f64 / total as f64;
    let sorted = |s: &[Statistics], f: fn(&Statistics) -> f64| {
        let mut v: Vec<f64> = s.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let at = |sorted: &[f64], r: usize| if r >= n { f64::NEG_INFINITY } else { sorted[n - r - 1] };
    let mut points = Vec::new();
    type Pick = fn(&Statistics) -> f64;
    type Flag = fn(&Statistics) -> bool;
    let single: [(&str, Pick, Flag); 2] = [
        ("fine", |s| s.fine, |s| s.degenerate_fine),
        ("energy", |s| s.energy, |_| false),
    ];
    for (name, f, degenerate) in single {
        let sorted_noise = sorted(&noise, f);
        for r in 0..=n {
            let t = at(&sorted_noise, r);
            let hit = |s: &Statistics| !degenerate(s) && f(s) > t;
            points.push(RocPoint {
                detector: name.into(),
                rank: r,
                threshold: t,
                threshold_aux: None,
                pfa: frac(noise.iter().filter(|s| hit(s)).count(), n),
                pd: frac(signal.iter().filter(|s| hit(s)).count(), signal.len()),
            });
        }
    }
    let (sk, fr) = (sorted(&noise, |s| s.kurtosis), sorted(&noise, |s| s.coarse_frft));
    for r in 0..=n {
        let (tk, tf) = (at(&sk, r), at(&fr, r));
        let hit = |s: &Statistics| !s.degenerate_coarse && (s.kurtosis > tk || s.coarse_frft > tf);
        points.push(RocPoint {
            detector: "coarse".into(),
            rank: r,
            threshold: tk,
            threshold_aux: Some(tf),
            pfa: frac(noise.iter().filter(|s| hit(s)).count(), n),
            pd: frac(signal.iter().filter(|s| hit(s)).count(), signal.len()),
        });
    }
    Ok(RocTable { scaling_db, snapshot_len: cfg.snapshot_len, noise_trials: n, signal_trials: signal.len(), points })
}
