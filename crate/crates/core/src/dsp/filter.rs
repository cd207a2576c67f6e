//! Linear-phase FIR design (Hamming-windowed sinc) and zero-phase
//! forward-backward application.
//!
//! Order rule: the tap count targets a transition width through
//! `N = ceil(3.3 * rate / transition_hz)` (rounded up to odd), then is capped
//! at the largest odd number not exceeding `len / 2` so that short epochs
//! fall back to a wider transition band. Fewer than [`MIN_TAPS`] taps is an
//! error. Before filtering, the signal is extended at both ends by odd
//! (point) reflection over `N - 1` samples, which absorbs the start-up
//! transient of each pass.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::fft::fir_causal;
use crate::error::{Error, Result};

pub const MIN_TAPS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    BandPass,
    /// Band-stop (notch) over `[f_lo, f_hi]`.
    Notch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub f_lo: f64,
    pub f_hi: f64,
    pub kind: FilterKind,
    /// Target transition width used by the order rule.
    pub transition_hz: f64,
}

impl FilterSpec {
    pub fn band_pass(f_lo: f64, f_hi: f64, transition_hz: f64) -> FilterSpec {
        FilterSpec {
            f_lo,
            f_hi,
            kind: FilterKind::BandPass,
            transition_hz,
        }
    }

    pub fn notch(f_lo: f64, f_hi: f64, transition_hz: f64) -> FilterSpec {
        FilterSpec {
            f_lo,
            f_hi,
            kind: FilterKind::Notch,
            transition_hz,
        }
    }

    pub fn validate(&self, rate: f64) -> Result<()> {
        if !(self.f_lo > 0.0 && self.f_lo < self.f_hi && self.f_hi < rate / 2.0) {
            return Err(Error::invalid(
                "filter",
                format!("need 0 < f_lo < f_hi < rate/2, got [{}, {}] at {rate} Hz", self.f_lo, self.f_hi),
            ));
        }
        if !(self.transition_hz.is_finite() && self.transition_hz > 0.0) {
            return Err(Error::invalid("transition_hz", "transition width must be > 0"));
        }
        Ok(())
    }

    /// Tap count for a signal of `len` samples.
    pub fn taps_for(&self, rate: f64, len: usize) -> Result<usize> {
        let target = make_odd_up((3.3 * rate / self.transition_hz).ceil() as usize);
        let cap = make_odd_down(len / 2);
        let n = target.min(cap);
        if n < MIN_TAPS {
            return Err(Error::TooShort {
                len,
                min_len: 2 * MIN_TAPS,
                context: format!("{:?} filter [{}, {}] Hz", self.kind, self.f_lo, self.f_hi),
            });
        }
        Ok(n)
    }

    pub fn design(&self, rate: f64, n_taps: usize) -> Vec<f64> {
        design_taps(self, rate, n_taps)
    }
}

fn make_odd_up(n: usize) -> usize {
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

fn make_odd_down(n: usize) -> usize {
    if n == 0 {
        0
    } else if n % 2 == 0 {
        n - 1
    } else {
        n
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed sinc taps. `n_taps` must be odd.
pub fn design_taps(spec: &FilterSpec, rate: f64, n_taps: usize) -> Vec<f64> {
    debug_assert!(n_taps % 2 == 1);
    let mid = (n_taps - 1) as f64 / 2.0;
    let lo = spec.f_lo / rate;
    let hi = spec.f_hi / rate;
    (0..n_taps)
        .map(|i| {
            let x = i as f64 - mid;
            let band = 2.0 * hi * sinc(2.0 * hi * x) - 2.0 * lo * sinc(2.0 * lo * x);
            let ideal = match spec.kind {
                FilterKind::BandPass => band,
                FilterKind::Notch => {
                    if x == 0.0 {
                        1.0 - band
                    } else {
                        -band
                    }
                }
            };
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (n_taps - 1) as f64).cos();
            ideal * w
        })
        .collect()
}

/// Odd (point-symmetric) extension of `x` by `pad` samples at each end.
fn odd_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((0..pad).map(|j| 2.0 * x[0] - x[pad - j]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|j| 2.0 * x[n - 1] - x[n - 2 - j]));
    out
}

/// Forward-backward FIR filtering. Net phase is zero and the magnitude
/// response is squared.
pub fn filtfilt(x: &[f64], taps: &[f64]) -> Result<Vec<f64>> {
    let pad = taps.len().saturating_sub(1);
    if x.len() <= pad {
        return Err(Error::TooShort {
            len: x.len(),
            min_len: pad + 1,
            context: format!("{}-tap zero-phase filter", taps.len()),
        });
    }
    let ext = odd_extend(x, pad);
    let mut y = fir_causal(&ext, taps);
    y.reverse();
    let mut y = fir_causal(&y, taps);
    y.reverse();
    Ok(y[pad..pad + x.len()].to_vec())
}

/// Design for the signal length and apply zero-phase.
pub fn apply(spec: &FilterSpec, x: &[f64], rate: f64) -> Result<Vec<f64>> {
    spec.validate(rate)?;
    let n = spec.taps_for(rate, x.len())?;
    filtfilt(x, &design_taps(spec, rate, n))
}
