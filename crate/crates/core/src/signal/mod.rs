//! Synthetic signal generation: LFM chirps, circular white Gaussian noise,
//! additive mixtures and multi-sensor linear-array snapshots.

mod iqfile;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use iqfile::{read_iq_file, read_sidecar, sidecar_path, write_iq_file, write_sidecar, Sidecar};

/// A finite block of complex baseband samples and the rate they were taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return invalid("IQ buffer must hold at least one sample");
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return invalid(format!("sample rate must be positive, got {sample_rate_hz}"));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return invalid(format!("sample {i} is not finite"));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of |x|² over the buffer.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Copy of the buffer cut or zero-padded to exactly `len` samples.
    pub fn resized(&self, len: usize) -> Result<Self> {
        let mut samples = self.samples.clone();
        samples.resize(len, Complex64::new(0.0, 0.0));
        Self::new(samples, self.sample_rate_hz)
    }
}

/// Linear frequency-modulated source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpParams {
    pub initial_freq_hz: f64,
    pub chirp_rate_hz_per_s: f64,
    pub duration_s: f64,
    /// Amplitude scale in dB, applied as 10^(scaling_db/20).
    pub scaling_db: f64,
}

impl Default for ChirpParams {
    fn default() -> Self {
        Self {
            initial_freq_hz: 0.0,
            chirp_rate_hz_per_s: 2e6,
            duration_s: 4096.0 / 3e6,
            scaling_db: 0.0,
        }
    }
}

impl ChirpParams {
    pub fn amplitude(&self) -> f64 {
        10f64.powf(self.scaling_db / 20.0)
    }

    pub fn with_scaling_db(mut self, scaling_db: f64) -> Self {
        self.scaling_db = scaling_db;
        self
    }

    fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return invalid(format!("sample rate must be positive, got {sample_rate_hz}"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return invalid(format!("chirp duration must be positive, got {}", self.duration_s));
        }
        if !(self.initial_freq_hz.is_finite()
            && self.chirp_rate_hz_per_s.is_finite()
            && self.scaling_db.is_finite())
        {
            return invalid("chirp parameters must be finite");
        }
        if self.initial_freq_hz.abs() >= sample_rate_hz / 2.0 {
            return invalid(format!(
                "initial frequency {} Hz outside the Nyquist band of {} S/s",
                self.initial_freq_hz, sample_rate_hz
            ));
        }
        Ok(())
    }
}

/// Samples `10^(dB/20) · exp(j2π(f·t + μ/2·t²))` at `t = n / fs` for
/// `round(duration · fs)` samples.
pub fn gen_chirp(params: &ChirpParams, sample_rate_hz: f64) -> Result<IqBuffer> {
    params.validate(sample_rate_hz)?;
    let n = (params.duration_s * sample_rate_hz).round();
    if n < 1.0 {
        return invalid("chirp duration covers less than one sample");
    }
    chirp_samples(params, sample_rate_hz, n as usize)
}

/// Like [`gen_chirp`] but with an explicit sample count; `duration_s` is ignored.
pub fn gen_chirp_len(params: &ChirpParams, sample_rate_hz: f64, len: usize) -> Result<IqBuffer> {
    let mut p = *params;
    p.duration_s = len as f64 / sample_rate_hz;
    p.validate(sample_rate_hz)?;
    if len == 0 {
        return invalid("chirp length must be at least one sample");
    }
    chirp_samples(&p, sample_rate_hz, len)
}

fn chirp_samples(params: &ChirpParams, fs: f64, len: usize) -> Result<IqBuffer> {
    let amp = params.amplitude();
    let samples = (0..len)
        .map(|n| {
            let t = n as f64 / fs;
            // phase in cycles, reduced before the trig call
            let cycles = params.initial_freq_hz * t + 0.5 * params.chirp_rate_hz_per_s * t * t;
            let (s, c) = (2.0 * PI * cycles.fract()).sin_cos();
            Complex64::new(amp * c, amp * s)
        })
        .collect();
    IqBuffer::new(samples, fs)
}

/// Mixes a 64-bit seed with a list of stream tags (splitmix64 finaliser).
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut z = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &t in tags {
        z = splitmix(z.wrapping_add(t).wrapping_add(0x9e37_79b9_7f4a_7c15));
    }
    splitmix(z)
}

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Circular complex white Gaussian noise with E|n|² = sigma².
///
/// The buffer is tagged with a nominal unit sample rate; callers that need a
/// physical rate combine it through [`mix`] or rebuild the buffer.
pub fn gen_wgn(n: usize, sigma: f64, seed: u64) -> Result<IqBuffer> {
    if n == 0 {
        return invalid("noise length must be at least one sample");
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return invalid(format!("noise sigma must be positive, got {sigma}"));
    }
    IqBuffer::new(wgn_samples(n, sigma, seed), 1.0)
}

pub(crate) fn wgn_samples(n: usize, sigma: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = sigma / std::f64::consts::SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(std * re, std * im)
        })
        .collect()
}

/// Elementwise sum. Rates must match unless one side is bare noise from
/// [`gen_wgn`] (nominal rate 1.0), which adopts the other side's rate.
pub fn mix(a: &IqBuffer, b: &IqBuffer) -> Result<IqBuffer> {
    if a.len() != b.len() {
        return invalid(format!("length mismatch: {} vs {}", a.len(), b.len()));
    }
    let rate = match (a.sample_rate_hz, b.sample_rate_hz) {
        (x, y) if x == y => x,
        (x, 1.0) => x,
        (1.0, y) => y,
        (x, y) => return invalid(format!("sample rate mismatch: {x} vs {y}")),
    };
    let samples = a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect();
    IqBuffer::new(samples, rate)
}

/// M equally long sensor buffers from a uniform linear array with element
/// spacing `spacing_over_lambda` wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ArraySnapshot {
    sensors: Vec<IqBuffer>,
    spacing_over_lambda: f64,
}

impl ArraySnapshot {
    pub fn new(sensors: Vec<IqBuffer>, spacing_over_lambda: f64) -> Result<Self> {
        if sensors.len() < 2 {
            return invalid("an array snapshot needs at least two sensors");
        }
        if !(spacing_over_lambda.is_finite() && spacing_over_lambda > 0.0) {
            return invalid(format!("element spacing must be positive, got {spacing_over_lambda}"));
        }
        let (len, rate) = (sensors[0].len(), sensors[0].sample_rate_hz());
        if sensors.iter().any(|s| s.len() != len || s.sample_rate_hz() != rate) {
            return invalid("all sensors must share length and sample rate");
        }
        Ok(Self { sensors, spacing_over_lambda })
    }

    pub fn sensors(&self) -> &[IqBuffer] {
        &self.sensors
    }

    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn len(&self) -> usize {
        self.sensors[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing_over_lambda(&self) -> f64 {
        self.spacing_over_lambda
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            sensors: self.sensors.iter().map(|s| s.scaled(factor)).collect(),
            spacing_over_lambda: self.spacing_over_lambda,
        }
    }
}

/// Phase of sensor `i` (0-based) relative to sensor 0 for a far-field source
/// at `azimuth_deg`: `exp(-j·i·2π·(d/λ)·sin θ)`.
pub fn steering_phase(i: usize, spacing_over_lambda: f64, azimuth_deg: f64) -> Complex64 {
    let phi = -2.0 * PI * spacing_over_lambda * azimuth_deg.to_radians().sin() * i as f64;
    Complex64::from_polar(1.0, phi)
}

/// Chirp impinging on an M-element linear array plus independent noise per
/// sensor. Sensor noise streams are seeded from `(seed, sensor index)`.
pub fn gen_array_snapshot(
    params: &ChirpParams,
    azimuth_deg: f64,
    m: usize,
    spacing_over_lambda: f64,
    noise_sigma: f64,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<ArraySnapshot> {
    if m < 2 {
        return invalid("array needs at least two sensors");
    }
    if !(azimuth_deg.is_finite() && azimuth_deg.abs() <= 90.0) {
        return invalid(format!("azimuth must lie in [-90, 90] degrees, got {azimuth_deg}"));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return invalid(format!("noise sigma must be non-negative, got {noise_sigma}"));
    }
    let source = gen_chirp(params, sample_rate_hz)?;
    array_from_source(&source, azimuth_deg, m, spacing_over_lambda, noise_sigma, seed)
}

pub(crate) fn array_from_source(
    source: &IqBuffer,
    azimuth_deg: f64,
    m: usize,
    spacing_over_lambda: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<ArraySnapshot> {
    let n = source.len();
    let sensors = (0..m)
        .map(|i| {
            let phase = steering_phase(i, spacing_over_lambda, azimuth_deg);
            let mut samples: Vec<Complex64> = source.samples().iter().map(|s| s * phase).collect();
            if noise_sigma > 0.0 {
                let noise = wgn_samples(n, noise_sigma, derive_seed(seed, &[i as u64]));
                samples.iter_mut().zip(noise).for_each(|(s, w)| *s += w);
            }
            IqBuffer::new(samples, source.sample_rate_hz())
        })
        .collect::<Result<Vec<_>>>()?;
    ArraySnapshot::new(sensors, spacing_over_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(f: f64, mu: f64, n: usize, fs: f64, db: f64) -> ChirpParams {
        ChirpParams { initial_freq_hz: f, chirp_rate_hz_per_s: mu, duration_s: n as f64 / fs, scaling_db: db }
    }

    #[test]
    fn zero_phase_chirp_is_unit_dc() {
        let x = gen_chirp(&params(0.0, 0.0, 4, 1e3, 0.0), 1e3).unwrap();
        assert_eq!(x.len(), 4);
        for s in x.samples() {
            assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn chirp_instantaneous_frequency_at_last_sample() {
        let fs = 3e6;
        let x = gen_chirp(&params(0.0, 2e6, 4096, fs, 0.0), fs).unwrap();
        let s = x.samples();
        // phase increment between the last two samples, in Hz
        let dphi = (s[4095] * s[4094].conj()).arg();
        let f_inst = dphi * fs / (2.0 * PI);
        // mid-point of the last sample interval: μ·t with t = 4094.5/fs
        let expected = 2e6 * 4094.5 / fs;
        assert!((f_inst - expected).abs() < 1e-3, "{f_inst} vs {expected}");
        assert!((2e6 * 4095.0 / fs - 2730.0).abs() < 0.1);
    }

    #[test]
    fn scaled_chirp_has_constant_magnitude() {
        let x = gen_chirp(&params(1e5, 2e6, 1000, 3e6, -20.0), 3e6).unwrap();
        for s in x.samples() {
            assert!((s.norm() - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn chirp_rejects_bad_arguments() {
        assert!(gen_chirp(&params(0.0, 1.0, 10, 1e3, 0.0), 0.0).is_err());
        let mut p = params(0.0, 1.0, 10, 1e3, 0.0);
        p.duration_s = -1.0;
        assert!(gen_chirp(&p, 1e3).is_err());
        assert!(gen_chirp(&params(600.0, 1.0, 10, 1e3, 0.0), 1e3).is_err());
        p = params(0.0, 1.0, 10, 1e3, 0.0);
        p.duration_s = 1e-4;
        assert!(gen_chirp(&p, 1e3).is_err());
    }

    #[test]
    fn wgn_is_reproducible_per_seed() {
        let a = gen_wgn(256, 1.0, 7).unwrap();
        let b = gen_wgn(256, 1.0, 7).unwrap();
        let c = gen_wgn(256, 1.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn wgn_power_converges() {
        let x = gen_wgn(1_000_000, 1.0, 3).unwrap();
        assert!((x.mean_power() - 1.0).abs() < 0.01);
        let y = gen_wgn(100_000, 2.5, 4).unwrap();
        let rel = (y.mean_power() / 6.25 - 1.0).abs();
        assert!(rel < 3.0 / (100_000f64).sqrt());
    }

    #[test]
    fn wgn_rejects_bad_arguments() {
        assert!(gen_wgn(10, 0.0, 1).is_err());
        assert!(gen_wgn(0, 1.0, 1).is_err());
        assert!(gen_wgn(10, f64::NAN, 1).is_err());
    }

    #[test]
    fn mix_identities() {
        let x = gen_chirp(&params(1e4, 2e6, 64, 3e6, 0.0), 3e6).unwrap();
        let z = IqBuffer::zeros(64, 3e6).unwrap();
        assert_eq!(mix(&x, &z).unwrap(), x);
        let neg = x.scaled(Complex64::new(-1.0, 0.0));
        assert!(mix(&x, &neg).unwrap().samples().iter().all(|s| s.norm() == 0.0));
        assert!(mix(&x, &IqBuffer::zeros(63, 3e6).unwrap()).is_err());
        assert!(mix(&x, &IqBuffer::zeros(64, 2e6).unwrap()).is_err());
    }

    #[test]
    fn mixture_snr_matches_scaling() {
        let n = 1 << 20;
        let s = gen_chirp(&params(0.0, 2e6, n, 3e6, -60.0), 3e6).unwrap();
        let w = gen_wgn(n, 1.0, 11).unwrap();
        let r = mix(&s, &w).unwrap();
        // signal and noise powers measured separately, then the mixture excess
        let snr_db = 10.0 * (s.mean_power() / w.mean_power()).log10();
        assert!((snr_db + 60.0).abs() < 0.05, "{snr_db}");
        assert!((r.mean_power() - w.mean_power() - s.mean_power()).abs() < 5e-3);
    }

    #[test]
    fn array_phase_progression() {
        let p = params(0.0, 2e6, 512, 3e6, 0.0);
        let snap = gen_array_snapshot(&p, 20.0, 2, 0.5, 0.0, 3e6, 1).unwrap();
        let expected = Complex64::from_polar(1.0, -PI * 20f64.to_radians().sin());
        let (a, b) = (snap.sensors()[0].samples(), snap.sensors()[1].samples());
        for (x, y) in a.iter().zip(b) {
            assert!((y / x - expected).norm() < 1e-12);
        }

        let broadside = gen_array_snapshot(&p, 90.0, 4, 0.5, 0.0, 3e6, 1).unwrap();
        let s = broadside.sensors();
        for k in 1..4 {
            for (x, y) in s[k - 1].samples().iter().zip(s[k].samples()) {
                assert!((y / x + Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn array_at_zero_azimuth_differs_only_by_noise() {
        let p = params(0.0, 2e6, 512, 3e6, 0.0);
        let snap = gen_array_snapshot(&p, 0.0, 3, 0.5, 0.1, 3e6, 9).unwrap();
        let clean = gen_chirp(&p, 3e6).unwrap();
        for sensor in snap.sensors() {
            let resid: f64 = sensor
                .samples()
                .iter()
                .zip(clean.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                / 512.0;
            assert!((resid - 0.01).abs() < 0.003);
        }
        assert_ne!(snap.sensors()[0], snap.sensors()[1]);
    }

    #[test]
    fn array_rejects_bad_geometry() {
        let p = params(0.0, 2e6, 64, 3e6, 0.0);
        assert!(gen_array_snapshot(&p, 20.0, 1, 0.5, 0.0, 3e6, 1).is_err());
        assert!(gen_array_snapshot(&p, 95.0, 2, 0.5, 0.0, 3e6, 1).is_err());
        assert!(gen_array_snapshot(&p, 20.0, 2, 0.0, 0.0, 3e6, 1).is_err());
        assert!(gen_array_snapshot(&p, 20.0, 2, 0.5, -1.0, 3e6, 1).is_err());
    }

    #[test]
    fn buffer_validation() {
        assert!(IqBuffer::new(vec![], 1.0).is_err());
        assert!(IqBuffer::new(vec![Complex64::new(f64::NAN, 0.0)], 1.0).is_err());
        assert!(IqBuffer::new(vec![Complex64::new(1.0, 0.0)], 0.0).is_err());
    }
}
