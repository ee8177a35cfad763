//! Detection and localization of chirp-type radio interference from complex
//! baseband samples.
//!
//! The crate is organised as a pipeline:
//!
//! * [`signal`] synthesises LFM chirps, white Gaussian noise and multi-sensor
//!   array snapshots, and reads/writes raw IQ files.
//! * [`frft`] is the discrete fractional Fourier transform, in a full-rate
//!   ("single-phase") form and an even/odd polyphase ("two-phase") form.
//! * [`search`] holds the golden-section and fixed-step order searches.
//! * [`detection`] is the detector bank: spectral kurtosis and fixed-order
//!   FRFT magnitude (coarse), matched-order FRFT kurtosis (fine) and the
//!   energy baseline, plus empirical threshold calibration.
//! * [`doa`] estimates the azimuth of the source with FRFT-focused,
//!   spatially smoothed MUSIC.
//! * [`experiment`] runs the Monte-Carlo sweeps and writes CSV results.

// `!(x > t)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod doa;
pub mod error;
pub mod experiment;
pub mod frft;
pub mod search;
pub mod signal;
pub mod stats;

pub use num_complex::Complex64;

pub use detection::{
    calibrate, coarse_detect, detect, energy_statistic, fine_detect, spectral_kurtosis,
    CoarseOutcome, DetectionReport, DetectorConfig, DetectorPath, FineOutcome, NoiseModel,
    SearchScheme, ThresholdSet,
};
pub use doa::{
    covariance, estimate_azimuth, focus, noise_subspace, spatial_smooth, spatial_spectrum,
    DoAEstimate, FocusedArrayData, NoiseSubspace, SpatialSpectrum,
};
pub use error::{Error, Result};
pub use experiment::{
    run_doa_sweep, run_pd_sweep, run_roc, run_table1, DoaSweepResult, RocTable, ScenarioConfig, SweepResult, Table1,
};
pub use frft::{canonicalize_order, frft, frft_two_phase, EngineVariant, FrftEngine, FrftOrder, FrftResult, FrftSession};
pub use search::{gss_maximize, grid_maximize, SearchOutcome};
pub use signal::{gen_array_snapshot, gen_chirp, gen_wgn, mix, ArraySnapshot, ChirpParams, IqBuffer};
