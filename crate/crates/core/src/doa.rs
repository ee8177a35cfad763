//! Azimuth estimation for a single chirp source on a uniform linear array.
//!
//! Each sensor row is taken to the matched FRFT order, which compacts the
//! chirp without changing the inter-sensor phase. The array covariance is
//! spatially smoothed with the exchange matrix, and the MUSIC pseudo-spectrum
//! is scanned over azimuth.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frft::{EngineVariant, FrftEngine};
use crate::signal::{steering_phase, ArraySnapshot};

/// Ceiling applied to pseudo-spectrum values where the steering vector is
/// (numerically) orthogonal to the noise subspace.
pub const SPECTRUM_CEILING: f64 = 1e12;

/// Eigenvalue ratio below which the signal/noise split is flagged.
pub const DEGENERATE_GAP: f64 = 2.0;

/// Sensor rows after transforming each to a shared FRFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusedArrayData {
    pub rows: Vec<Vec<Complex64>>,
    pub order: f64,
}

impl FocusedArrayData {
    pub fn new(rows: Vec<Vec<Complex64>>, order: f64) -> Result<Self> {
        if rows.len() < 2 {
            return invalid("focused data needs at least two rows");
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return invalid("focused rows must be non-empty and equally long");
        }
        Ok(Self { rows, order })
    }

    pub fn num_sensors(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Transforms every sensor at order `a_opt`.
///
/// `cached_first`, when given, is used verbatim as row 0 (for instance the
/// matched-order coefficients kept by the detector) instead of recomputing it.
pub fn focus(
    snapshot: &ArraySnapshot,
    a_opt: f64,
    variant: EngineVariant,
    cached_first: Option<&[Complex64]>,
) -> Result<FocusedArrayData> {
    if !(a_opt.is_finite() && (0.0..4.0).contains(&a_opt)) {
        return invalid(format!("focusing order must lie in [0, 4), got {a_opt}"));
    }
    let n = snapshot.len();
    if let Some(c) = cached_first {
        if c.len() != n {
            return invalid(format!("cached row has {} samples, sensors have {n}", c.len()));
        }
    }
    let engine = FrftEngine::cached(n)?;
    let rows = snapshot
        .sensors()
        .iter()
        .enumerate()
        .map(|(i, s)| match (i, cached_first) {
            (0, Some(c)) => Ok(c.to_vec()),
            _ => Ok(engine.transform(s.samples(), a_opt, variant)?.coefficients),
        })
        .collect::<Result<Vec<_>>>()?;
    FocusedArrayData::new(rows, a_opt)
}

/// Sample covariance `(1/N)·R·Rᴴ` of the focused rows.
pub fn covariance(data: &FocusedArrayData) -> Result<DMatrix<Complex64>> {
    let (m, n) = (data.num_sensors(), data.len());
    if n < m {
        return invalid(format!("covariance needs at least as many samples ({n}) as sensors ({m})"));
    }
    let mut r = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let s: Complex64 = data.rows[i].iter().zip(&data.rows[j]).map(|(a, b)| a * b.conj()).sum();
            let v = s / n as f64;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
        r[(i, i)].im = 0.0;
    }
    Ok(r)
}

fn check_hermitian(r: &DMatrix<Complex64>) -> Result<()> {
    if !r.is_square() {
        return invalid(format!("expected a square matrix, got {}x{}", r.nrows(), r.ncols()));
    }
    let scale = r.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let skew = (r - r.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(skew <= 1e-9 * scale) {
        return invalid("matrix is not Hermitian");
    }
    Ok(())
}

/// `R + T·conj(R)·T` with `T` the exchange (anti-identity) matrix.
pub fn spatial_smooth(r: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if !r.is_square() {
        return invalid(format!("expected a square matrix, got {}x{}", r.nrows(), r.ncols()));
    }
    let m = r.nrows();
    // (T X T)[i][j] = X[m-1-i][m-1-j]
    Ok(DMatrix::from_fn(m, m, |i, j| r[(i, j)] + r[(m - 1 - i, m - 1 - j)].conj()))
}

/// Noise subspace of a single-source covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSubspace {
    /// M x (M-1) orthonormal columns.
    pub basis: DMatrix<Complex64>,
    /// Unit eigenvector of the largest eigenvalue.
    pub signal: DVector<Complex64>,
    /// Eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Largest-to-second eigenvalue ratio is below [`DEGENERATE_GAP`].
    pub degenerate: bool,
}

/// Splits off the dominant eigenvector and returns the remaining M-1.
pub fn noise_subspace(r: &DMatrix<Complex64>) -> Result<NoiseSubspace> {
    check_hermitian(r)?;
    if r.nrows() < 2 {
        return invalid("noise subspace needs at least a 2x2 matrix");
    }
    if r.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Numeric("covariance has non-finite entries".into()));
    }
    let sym = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, 1e-14, 10_000)
        .ok_or_else(|| Error::Numeric("eigensolver did not converge".into()))?;
    let m = r.nrows();
    let mut idx: Vec<usize> = (0..m).collect();
    // stable sort keeps the solver's order among equal eigenvalues
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let basis = DMatrix::from_fn(m, m - 1, |row, col| eig.eigenvectors[(row, idx[col + 1])]);
    let signal = eig.eigenvectors.column(idx[0]).into_owned();
    let degenerate = !(eigenvalues[0] > 0.0 && eigenvalues[0] >= DEGENERATE_GAP * eigenvalues[1]);
    Ok(NoiseSubspace { basis, signal, eigenvalues, degenerate })
}

/// MUSIC pseudo-spectrum on a uniform azimuth grid over `[-90°, 90°]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpectrum {
    pub azimuth_grid_deg: Vec<f64>,
    pub values: Vec<f64>,
    /// Some value hit [`SPECTRUM_CEILING`].
    pub clamped: bool,
}

impl SpatialSpectrum {
    /// Grid index of the largest value (lowest azimuth on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// `azimuth_deg,value` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("azimuth_deg,value\n");
        for (a, v) in self.azimuth_grid_deg.iter().zip(&self.values) {
            s.push_str(&format!("{a},{v}\n"));
        }
        s
    }
}

/// Azimuth grid `-90 + k·step` up to 90°.
pub fn azimuth_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg.is_finite() && step_deg > 0.0 && step_deg <= 180.0) {
        return invalid(format!("grid step must lie in (0, 180] degrees, got {step_deg}"));
    }
    let count = (180.0 / step_deg + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| -90.0 + k as f64 * step_deg).collect())
}

/// Evaluates `1 / ‖Enᴴ·a(θ)‖²` with `a_i(θ) = exp(-j·i·2π·(d/λ)·sin θ)`.
pub fn spatial_spectrum(noise: &DMatrix<Complex64>, spacing_over_lambda: f64, grid_step_deg: f64) -> Result<SpatialSpectrum> {
    if !(spacing_over_lambda.is_finite() && spacing_over_lambda > 0.0) {
        return invalid(format!("element spacing must be positive, got {spacing_over_lambda}"));
    }
    let grid = azimuth_grid(grid_step_deg)?;
    let m = noise.nrows();
    let en_h = noise.adjoint();
    let mut clamped = false;
    let values = grid
        .iter()
        .map(|&theta| {
            let a = DVector::from_fn(m, |i, _| steering_phase(i, spacing_over_lambda, theta));
            let denom = (&en_h * a).norm_squared();
            if denom * SPECTRUM_CEILING <= 1.0 {
                clamped = true;
                SPECTRUM_CEILING
            } else {
                1.0 / denom
            }
        })
        .collect();
    Ok(SpatialSpectrum { azimuth_grid_deg: grid, values, clamped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoAEstimate {
    pub azimuth_deg: f64,
    pub peak_value: f64,
    /// Signal/noise eigenvalue gap was too small to trust the split.
    pub degenerate: bool,
    #[serde(skip)]
    pub spectrum: Option<SpatialSpectrum>,
}

/// Full chain: focus, covariance, smoothing, noise subspace, scan, argmax.
pub fn estimate_azimuth(snapshot: &ArraySnapshot, a_opt: f64, grid_step_deg: f64) -> Result<DoAEstimate> {
    estimate_azimuth_with(snapshot, a_opt, grid_step_deg, EngineVariant::TwoPhase, None)
}

pub fn estimate_azimuth_with(
    snapshot: &ArraySnapshot,
    a_opt: f64,
    grid_step_deg: f64,
    variant: EngineVariant,
    cached_first: Option<&[Complex64]>,
) -> Result<DoAEstimate> {
    let focused = focus(snapshot, a_opt, variant, cached_first)?;
    let smoothed = spatial_smooth(&covariance(&focused)?)?;
    let ns = noise_subspace(&smoothed)?;
    let spectrum = spatial_spectrum(&ns.basis, snapshot.spacing_over_lambda(), grid_step_deg)?;
    let k = spectrum.argmax();
    Ok(DoAEstimate {
        azimuth_deg: spectrum.azimuth_grid_deg[k],
        peak_value: spectrum.values[k],
        degenerate: ns.degenerate,
        spectrum: Some(spectrum),
    })
}

/// Azimuth implied by an inter-sensor phase step `φ` (radians).
pub fn azimuth_from_phase_step(phi: f64, spacing_over_lambda: f64) -> f64 {
    (-phi / (2.0 * PI * spacing_over_lambda)).clamp(-1.0, 1.0).asin().to_degrees()
}
