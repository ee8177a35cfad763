//! One-dimensional maximization: golden-section search and a fixed-step grid
//! scan used as the exhaustive baseline.

use std::convert::Infallible;

use crate::error::{invalid, Result};

/// `1/φ`, the bracket shrink factor per iteration.
pub const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub arg: f64,
    pub value: f64,
    /// Objective evaluations consumed.
    pub evals: usize,
    /// Bracket `[lo, hi]` at start and after every shrink. Empty for grid scans.
    pub trace: Vec<(f64, f64)>,
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return invalid(format!("invalid search interval [{lo}, {hi}]"));
    }
    Ok(())
}

/// Golden-section maximization of a unimodal `f` over `[lo, hi]`.
///
/// Shrinks until the bracket is no wider than `tol`, then evaluates and
/// returns the bracket midpoint. On ties the left sub-bracket is kept.
pub fn gss_maximize<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<SearchOutcome> {
    match try_gss_maximize(|a| Ok::<_, Infallible>(f(a)), lo, hi, tol)? {
        Ok(out) => Ok(out),
        Err(e) => match e {},
    }
}

/// [`gss_maximize`] for a fallible objective; the first objective error
/// aborts the search and is returned in the inner `Err`.
pub fn try_gss_maximize<F, E>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<std::result::Result<SearchOutcome, E>>
where
    F: FnMut(f64) -> std::result::Result<f64, E>,
{
    check_interval(lo, hi)?;
    if !(tol.is_finite() && tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    let mut run = || -> std::result::Result<SearchOutcome, E> {
        let (mut a, mut b) = (lo, hi);
        let mut trace = vec![(a, b)];
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = f(c)?;
        let mut fd = f(d)?;
        let mut evals = 2;
        while b - a > tol {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                if b - a > tol {
                    fc = f(c)?;
                    evals += 1;
                }
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                if b - a > tol {
                    fd = f(d)?;
                    evals += 1;
                }
            }
            trace.push((a, b));
        }
        let arg = 0.5 * (a + b);
        let value = f(arg)?;
        Ok(SearchOutcome { arg, value, evals: evals + 1, trace })
    };
    Ok(run())
}

/// Number of points `lo + i·step` with `i = 0, 1, ...` that stay within `hi`.
pub fn grid_len(lo: f64, hi: f64, step: f64) -> usize {
    // small slack so that an exact multiple is not lost to rounding
    ((hi - lo) / step + 1e-9).floor() as usize + 1
}

/// Scans `lo + i·step` up to `hi` and returns the best point (lowest on ties).
pub fn grid_maximize<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, step: f64) -> Result<SearchOutcome> {
    match try_grid_maximize(|a| Ok::<_, Infallible>(f(a)), lo, hi, step)? {
        Ok(out) => Ok(out),
        Err(e) => match e {},
    }
}

pub fn try_grid_maximize<F, E>(
    mut f: F,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<std::result::Result<SearchOutcome, E>>
where
    F: FnMut(f64) -> std::result::Result<f64, E>,
{
    check_interval(lo, hi)?;
    if !(step.is_finite() && step > 0.0) {
        return invalid(format!("grid step must be positive, got {step}"));
    }
    let n = grid_len(lo, hi, step);
    let mut run = || -> std::result::Result<SearchOutcome, E> {
        let (mut arg, mut value) = (lo, f64::NEG_INFINITY);
        for i in 0..n {
            let a = lo + i as f64 * step;
            let v = f(a)?;
            if v > value {
                arg = a;
                value = v;
            }
        }
        Ok(SearchOutcome { arg, value, evals: n, trace: Vec::new() })
    };
    Ok(run())
}
