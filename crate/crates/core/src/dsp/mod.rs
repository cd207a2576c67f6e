//! PLV feature extraction.
//!
//! Per epoch: optional acquisition-band preprocessing (5–100 Hz band-pass,
//! 48–52 Hz notch), a zero-phase band-pass at `[f_m - 2, f_m + 2]`, the
//! analytic signal of every channel, then the phase-locking value of every
//! channel pair over the edge-trimmed window.

pub(crate) mod fft;
pub mod filter;
mod table;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eegsim::{Epoch, EpochLabel};
use crate::error::{Error, Result};
pub use filter::{FilterKind, FilterSpec};
pub use table::{read_features_csv, write_features_csv, FEATURE_LABEL_COLUMNS};

/// Magnitudes below this count as degenerate for phase extraction.
pub const DEGENERATE_MAGNITUDE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspConfig {
    /// Apply the acquisition band-pass and notch before narrow-band filtering.
    pub preprocess: bool,
    pub band: [f64; 2],
    pub notch: [f64; 2],
    pub preprocess_transition_hz: f64,
    /// Narrow band is `[f_m - half_width, f_m + half_width]`.
    pub narrow_half_width_hz: f64,
    pub narrow_transition_hz: f64,
    /// Fraction of samples discarded at each end after the analytic transform.
    pub trim_fraction: f64,
    /// n:m locking ratio.
    pub lock_n: u32,
    pub lock_m: u32,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            preprocess: true,
            band: [5.0, 100.0],
            notch: [48.0, 52.0],
            preprocess_transition_hz: 3.0,
            narrow_half_width_hz: 2.0,
            narrow_transition_hz: 4.0,
            trim_fraction: 0.1,
            lock_n: 1,
            lock_m: 1,
        }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.trim_fraction) {
            return Err(Error::invalid("trim_fraction", "must lie in [0, 0.5)"));
        }
        if self.lock_n == 0 || self.lock_m == 0 {
            return Err(Error::invalid("lock_n", "n:m ratio terms must be positive"));
        }
        if !(self.narrow_half_width_hz > 0.0) {
            return Err(Error::invalid("narrow_half_width_hz", "must be > 0"));
        }
        Ok(())
    }

    pub fn band_filter(&self) -> FilterSpec {
        FilterSpec::band_pass(self.band[0], self.band[1], self.preprocess_transition_hz)
    }

    pub fn notch_filter(&self) -> FilterSpec {
        FilterSpec::notch(self.notch[0], self.notch[1], self.preprocess_transition_hz)
    }

    pub fn narrow_filter(&self, f_m: f64) -> FilterSpec {
        FilterSpec::band_pass(f_m - self.narrow_half_width_hz, f_m + self.narrow_half_width_hz, self.narrow_transition_hz)
    }

    /// Samples dropped at each end of a window of `len` samples.
    pub fn trim_len(&self, len: usize) -> usize {
        (self.trim_fraction * len as f64).floor() as usize
    }
}

fn filter_channels(epoch: &Epoch, specs: &[FilterSpec]) -> Result<Epoch> {
    let rate = epoch.eeg_rate as f64;
    let data = epoch
        .data
        .iter()
        .map(|ch| {
            specs
                .iter()
                .try_fold(ch.clone(), |x, spec| filter::apply(spec, &x, rate))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(epoch.with_data(data))
}

/// Acquisition-band preprocessing: zero-phase band-pass then notch.
pub fn preprocess_raw(epoch: &Epoch, cfg: &DspConfig) -> Result<Epoch> {
    filter_channels(epoch, &[cfg.band_filter(), cfg.notch_filter()])
}

/// Zero-phase band-pass around the modulation frequency.
pub fn narrowband(epoch: &Epoch, f_m: f64, cfg: &DspConfig) -> Result<Epoch> {
    filter_channels(epoch, &[cfg.narrow_filter(f_m)])
}

/// Complex analytic signal with its polar decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSeries {
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
    /// `atan2(imag, real)`; zero where the magnitude is zero.
    pub phase: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// More than 1% of samples have magnitude below [`DEGENERATE_MAGNITUDE`].
    pub degenerate: bool,
}

impl AnalyticSeries {
    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }
}

/// Analytic signal by the frequency-domain method: FFT, keep DC (and
/// Nyquist for even lengths), double positive frequencies, zero negative
/// ones, inverse FFT.
pub fn analytic(signal: &[f64]) -> Result<AnalyticSeries> {
    let n = signal.len();
    if n < 8 {
        return Err(Error::invalid("signal", format!("analytic signal needs at least 8 samples, got {n}")));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("signal", "non-finite sample"));
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(n).process(&mut buf);
    let half = n / 2;
    for (k, b) in buf.iter_mut().enumerate() {
        let h = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *b *= h;
    }
    fft::inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    // The real part is the input itself up to rounding; keep the input exactly.
    let real = signal.to_vec();
    let imag: Vec<f64> = buf.iter().map(|c| c.im * scale).collect();
    let magnitude: Vec<f64> = real.iter().zip(&imag).map(|(r, i)| r.hypot(*i)).collect();
    let phase = real
        .iter()
        .zip(&imag)
        .zip(&magnitude)
        .map(|((r, i), m)| if *m == 0.0 { 0.0 } else { i.atan2(*r) })
        .collect();
    let low = magnitude.iter().filter(|&&m| m < DEGENERATE_MAGNITUDE).count();
    Ok(AnalyticSeries {
        real,
        imag,
        phase,
        magnitude,
        degenerate: low * 100 > n,
    })
}

/// `n * theta_a - m * theta_b`.
pub fn phase_diff(theta_a: &[f64], theta_b: &[f64], n: u32, m: u32) -> Result<Vec<f64>> {
    if theta_a.len() != theta_b.len() {
        return Err(Error::invalid(
            "phase",
            format!("series lengths differ: {} vs {}", theta_a.len(), theta_b.len()),
        ));
    }
    let (n, m) = (n as f64, m as f64);
    Ok(theta_a.iter().zip(theta_b).map(|(a, b)| n * a - m * b).collect())
}

/// Phase-locking value: modulus of the mean unit phasor, in `[0, 1]`.
pub fn plv(delta: &[f64]) -> Result<f64> {
    if delta.is_empty() {
        return Err(Error::invalid("phase", "PLV of an empty series"));
    }
    let (s, c) = delta
        .iter()
        .fold((0.0, 0.0), |(s, c), d| (s + d.sin(), c + d.cos()));
    Ok((s.hypot(c) / delta.len() as f64).clamp(0.0, 1.0))
}

/// Number of unordered channel pairs.
pub fn pair_count(n_channels: usize) -> usize {
    n_channels * n_channels.saturating_sub(1) / 2
}

/// Pairs `(a, b)`, `a < b`, zero-based, in feature-vector order:
/// (0,1), (0,2), …, (0,n-1), (1,2), …, (n-2,n-1).
pub fn pairs(n_channels: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_channels).flat_map(move |a| (a + 1..n_channels).map(move |b| (a, b)))
}

/// Column name of a pair using one-based electrode numbers, e.g. `pair_01_02`.
pub fn pair_name(a: usize, b: usize) -> String {
    format!("pair_{:02}_{:02}", a + 1, b + 1)
}

/// Pairwise PLVs of one epoch plus the epoch's labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: EpochLabel,
}

/// Trimmed instantaneous phases of every channel after filtering.
pub fn channel_phases(epoch: &Epoch, f_m: f64, cfg: &DspConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let pre = if cfg.preprocess {
        preprocess_raw(epoch, cfg)?
    } else {
        epoch.clone()
    };
    let narrow = narrowband(&pre, f_m, cfg)?;
    let trim = cfg.trim_len(narrow.len());
    narrow
        .data
        .iter()
        .map(|ch| {
            let a = analytic(ch)?;
            Ok(a.phase[trim..a.len() - trim].to_vec())
        })
        .collect()
}

/// PLV feature vector of an epoch evoked at `f_m`.
pub fn feature_vector(epoch: &Epoch, f_m: f64, cfg: &DspConfig) -> Result<FeatureVector> {
    if epoch.n_channels() < 2 {
        return Err(Error::invalid("epoch", "need at least two channels for pairwise PLV"));
    }
    let phases = channel_phases(epoch, f_m, cfg)?;
    let values = pairs(epoch.n_channels())
        .map(|(a, b)| plv(&phase_diff(&phases[a], &phases[b], cfg.lock_n, cfg.lock_m)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector {
        values,
        label: EpochLabel { f_m, ..epoch.label },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eegsim::{simulate_epoch, SimConfig};
    use crate::labels::{Condition, Direction, StimulusKind};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    fn tone(f: f64, len: usize, rate: f64, phase: f64) -> Vec<f64> {
        (0..len).map(|k| (2.0 * PI * f * k as f64 / rate + phase).sin()).collect()
    }

    fn label() -> EpochLabel {
        EpochLabel {
            f_m: 40.0,
            direction: Direction::Center,
            attended: true,
            condition: Condition::new(StimulusKind::Sam, 3.0),
            trial_index: 0,
        }
    }

    fn epoch_of(channels: Vec<Vec<f64>>) -> Epoch {
        Epoch::new(channels, 512, label()).unwrap()
    }

    fn interior(x: &[f64]) -> &[f64] {
        let t = x.len() / 10;
        &x[t..x.len() - t]
    }

    #[test]
    fn preprocess_removes_mains() {
        let cfg = DspConfig::default();
        let e = epoch_of(vec![tone(50.0, 1536, 512.0, 0.3)]);
        let out = preprocess_raw(&e, &cfg).unwrap();
        let ratio = rms(interior(&out.data[0])) / rms(interior(&e.data[0]));
        assert!(20.0 * ratio.log10() <= -40.0, "50 Hz at {} dB", 20.0 * ratio.log10());
    }

    #[test]
    fn preprocess_keeps_40hz() {
        let cfg = DspConfig::default();
        let e = epoch_of(vec![tone(40.0, 1536, 512.0, 0.0)]);
        let out = preprocess_raw(&e, &cfg).unwrap();
        let db = 20.0 * (rms(interior(&out.data[0])) / rms(interior(&e.data[0]))).log10();
        assert!(db.abs() <= 1.0, "{db} dB");
    }

    #[test]
    fn preprocess_zero_in_zero_out_and_too_short() {
        let cfg = DspConfig::default();
        let e = epoch_of(vec![vec![0.0; 512]]);
        assert!(preprocess_raw(&e, &cfg).unwrap().data[0].iter().all(|&v| v == 0.0));
        let short = epoch_of(vec![vec![0.0; 20]]);
        let err = preprocess_raw(&short, &cfg).unwrap_err();
        assert!(matches!(err, Error::TooShort { .. }));
        assert!(err.to_string().contains("at least"));
    }

    #[test]
    fn narrowband_rejects_neighbour_tone() {
        let cfg = DspConfig::default();
        let x: Vec<f64> = tone(40.0, 1536, 512.0, 0.0)
            .iter()
            .zip(tone(60.0, 1536, 512.0, 1.0))
            .map(|(a, b)| a + b)
            .collect();
        let out = narrowband(&epoch_of(vec![x]), 40.0, &cfg).unwrap();
        let y = &out.data[0];
        // DFT bins at 40 and 60 Hz over the full window (integer cycles).
        let bin = |f: f64| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, v) in y.iter().enumerate() {
                let p = 2.0 * PI * f * k as f64 / 512.0;
                re += v * p.cos();
                im += v * p.sin();
            }
            re.hypot(im)
        };
        let db = 20.0 * (bin(60.0) / bin(40.0)).log10();
        assert!(db <= -40.0, "{db}");
    }

    #[test]
    fn narrowband_is_zero_phase() {
        let cfg = DspConfig::default();
        let x = tone(40.0, 1536, 512.0, 0.7);
        let out = narrowband(&epoch_of(vec![x.clone()]), 40.0, &cfg).unwrap();
        let y = &out.data[0];
        let g = rms(interior(y)) / rms(interior(&x));
        for k in 300..1236 {
            assert!((y[k] - g * x[k]).abs() < 1e-3, "k={k}");
        }
    }

    #[test]
    fn narrowband_rejects_band_below_dc() {
        let cfg = DspConfig::default();
        assert!(narrowband(&epoch_of(vec![vec![0.0; 512]]), 1.5, &cfg).is_err());
    }

    #[test]
    fn analytic_of_cosine_is_complex_exponential() {
        let n = 1024;
        let x: Vec<f64> = (0..n).map(|k| (2.0 * PI * 37.5 * k as f64 / 512.0).cos()).collect();
        let a = analytic(&x).unwrap();
        for k in n / 10..n - n / 10 {
            let want = (2.0 * PI * 37.5 * k as f64 / 512.0).sin();
            assert!((a.imag[k] - want).abs() < 1e-3, "k={k}: {} vs {want}", a.imag[k]);
        }
    }

    #[test]
    fn analytic_zero_signal() {
        let a = analytic(&[0.0; 64]).unwrap();
        assert!(a.magnitude.iter().all(|&m| m == 0.0));
        assert!(a.phase.iter().all(|&p| p == 0.0));
        assert!(a.degenerate);
        assert!(analytic(&[1.0; 7]).is_err());
    }

    #[test]
    fn analytic_phase_slope() {
        let f = 25.0;
        let x = tone(f, 1536, 512.0, 0.0);
        let a = analytic(&x).unwrap();
        let want = 2.0 * PI * f / 512.0;
        for k in 200..1336 {
            let mut d = a.phase[k + 1] - a.phase[k];
            if d < -PI {
                d += 2.0 * PI;
            }
            assert!(d > 0.0);
            assert!((d - want).abs() < 1e-3);
        }
    }

    #[test]
    fn phase_diff_cases() {
        let a: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
        assert!(phase_diff(&a, &a, 1, 1).unwrap().iter().all(|&d| d == 0.0));
        let b: Vec<f64> = a.iter().map(|v| v + 0.4).collect();
        assert!(phase_diff(&a, &b, 1, 1).unwrap().iter().all(|&d| (d + 0.4).abs() < 1e-12));
        let b2: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        assert!(phase_diff(&b2, &a, 1, 2).unwrap().iter().all(|&d| d.abs() < 1e-12));
        assert!(phase_diff(&a, &b2, 2, 1).unwrap().iter().all(|&d| d.abs() < 1e-12));
        assert!(phase_diff(&a, &a[1..], 1, 1).is_err());
    }

    #[test]
    fn plv_cases() {
        assert!((plv(&[0.7; 333]).unwrap() - 1.0).abs() < 1e-12);
        let alt: Vec<f64> = (0..1000).map(|k| if k % 2 == 0 { 0.0 } else { PI }).collect();
        assert!(plv(&alt).unwrap() < 1e-12);
        assert!(plv(&[]).is_err());
    }

    #[test]
    fn pair_layout() {
        let p: Vec<_> = pairs(16).collect();
        assert_eq!(p.len(), 120);
        assert_eq!(p[0], (0, 1));
        assert_eq!(p[14], (0, 15));
        assert_eq!(p[15], (1, 2));
        assert_eq!(p[119], (14, 15));
        assert_eq!(pair_name(14, 15), "pair_15_16");
    }

    #[test]
    fn identical_channels_give_unit_plv() {
        let mut rng_state = 12345u64;
        let x: Vec<f64> = (0..1536)
            .map(|_| {
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let e = epoch_of(vec![x; 16]);
        let fv = feature_vector(&e, 40.0, &DspConfig::default()).unwrap();
        assert_eq!(fv.values.len(), 120);
        assert!(fv.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn noiseless_simulated_epoch_is_locked() {
        let cfg = SimConfig {
            noise_level: 0.0,
            ..SimConfig::default()
        };
        let e = simulate_epoch(&cfg, label(), 1).unwrap();
        let fv = feature_vector(&e, 40.0, &DspConfig::default()).unwrap();
        assert!(fv.values.iter().all(|&v| v >= 0.999), "{:?}", fv.values.iter().cloned().fold(1.0, f64::min));
    }

    #[test]
    fn circular_shift_invariance() {
        // Two tones of different frequencies with integer cycle counts.
        let (n, rate) = (1024, 512.0);
        let a = tone(40.0, n, rate, 0.2);
        let b = tone(41.0, n, rate, 1.1);
        let cfg = DspConfig::default();
        let value = |a: &[f64], b: &[f64]| {
            let pa = analytic(a).unwrap().phase;
            let pb = analytic(b).unwrap().phase;
            let t = cfg.trim_len(n);
            plv(&phase_diff(&pa[t..n - t], &pb[t..n - t], 1, 1).unwrap()).unwrap()
        };
        let base = value(&a, &b);
        for shift in [1, 17, 300] {
            let mut sa = a.clone();
            let mut sb = b.clone();
            sa.rotate_left(shift);
            sb.rotate_left(shift);
            assert!((value(&sa, &sb) - base).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn plv_bounded(delta in prop::collection::vec(-100.0f64..100.0, 1..300)) {
            let v = plv(&delta).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn plv_symmetric(a in prop::collection::vec(-10.0f64..10.0, 1..200), off in -3.0f64..3.0) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * 0.5 + off + i as f64 * 0.01).collect();
            let ab = plv(&phase_diff(&a, &b, 1, 1).unwrap()).unwrap();
            let ba = plv(&phase_diff(&b, &a, 1, 1).unwrap()).unwrap();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn scaling_a_channel_keeps_plv(scale in 1e-3f64..1e3, seed in 0u64..1000) {
            let cfg = SimConfig { n_channels: 3, ..SimConfig::default() };
            let mut l = label();
            l.condition = Condition::new(StimulusKind::Sam, 1.0);
            let e = simulate_epoch(&cfg, l, seed).unwrap();
            let mut scaled = e.data.clone();
            scaled[1].iter_mut().for_each(|v| *v *= scale);
            let dsp = DspConfig::default();
            let f0 = feature_vector(&e, 40.0, &dsp).unwrap();
            let f1 = feature_vector(&e.with_data(scaled), 40.0, &dsp).unwrap();
            for (x, y) in f0.values.iter().zip(&f1.values) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
