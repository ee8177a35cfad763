//! Header-less interleaved little-endian `f32` IQ files with an optional JSON
//! sidecar carrying the sample rate.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::IqBuffer;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub sample_rate_hz: f64,
}

/// `capture.iq` -> `capture.iq.json`.
pub fn sidecar_path(iq_path: &Path) -> PathBuf {
    let mut s = iq_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_sidecar(iq_path: &Path, sample_rate_hz: f64) -> Result<()> {
    let text = serde_json::to_string_pretty(&Sidecar { sample_rate_hz })?;
    fs::write(sidecar_path(iq_path), text)?;
    Ok(())
}

pub fn read_sidecar(iq_path: &Path) -> Result<Option<Sidecar>> {
    let p = sidecar_path(iq_path);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
}

/// Writes samples as `I0 Q0 I1 Q1 ...` in `f32` LE, narrowing from `f64`.
pub fn write_iq_file(path: &Path, buf: &IqBuffer) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for s in buf.samples() {
        w.write_all(&(s.re as f32).to_le_bytes())?;
        w.write_all(&(s.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_iq_file(path: &Path, sample_rate_hz: f64) -> Result<IqBuffer> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return invalid(format!(
            "{}: {} bytes is not a whole number of complex f32 samples",
            path.display(),
            bytes.len()
        ));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    IqBuffer::new(samples, sample_rate_hz)
}
