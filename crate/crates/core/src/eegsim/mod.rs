//! Synthetic multichannel EEG with attention-modulated steady-state responses.
//!
//! Channel `c` of an epoch evoked at `f_m` is
//!
//! ```text
//! x_c(t) = noise_level * n_c(t) + A * sin(2π f_m t + φ_c + j_c(t))
//! ```
//!
//! where `n_c` is independent unit-variance `1/f^α` noise, `A` is
//! `assr_amplitude` (times `attention_gain` when the stimulus is attended),
//! `φ_c` is a fixed per-channel lag and `j_c` is a phase-jitter process that
//! is only present in ignored responses (see [`SimConfig::ignored_phase_jitter`]).
//!
//! Noise generation: `L` white Gaussian draws are transformed with an FFT,
//! bin `k` is scaled by `f_k^(-α/2)` (DC set to zero), the result is inverse
//! transformed, normalized to unit sample standard deviation and scaled.
//! Jitter `j_c` is a stationary AR(1) (discretized Ornstein-Uhlenbeck)
//! process with standard deviation `ignored_phase_jitter` and correlation
//! time `jitter_time_constant_s`. Every sample is rounded to `f32`
//! precision so that an epoch survives the binary format unchanged.

mod io;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::fft;
use crate::error::{Error, Result};
use crate::labels::{Condition, Direction};
use crate::session::ProtocolConfig;

pub use io::{
    epoch_from_bytes, epoch_to_bytes, read_epoch, read_epoch_set, write_epoch, write_epoch_set, EPOCH_MAGIC, EPOCH_VERSION,
    MANIFEST,
};

/// Simulator parameters. The amplitude/noise defaults are the calibrated
/// intermediate-SNR operating point used by the reference sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_channels: usize,
    pub eeg_rate: u32,
    pub assr_amplitude: f64,
    /// Multiplier (≥ 1) applied to the response amplitude of attended stimuli.
    pub attention_gain: f64,
    pub noise_level: f64,
    /// Spectral slope α of the `1/f^α` background.
    pub noise_exponent: f64,
    /// Per-channel phase lags in radians; `None` uses `c * DEFAULT_LAG_STEP`.
    pub channel_phase_lags: Option<Vec<f64>>,
    /// Standard deviation (radians) of the slow phase wander carried by
    /// ignored responses. Attended responses are phase-stable.
    pub ignored_phase_jitter: f64,
    pub jitter_time_constant_s: f64,
    pub rng_seed: u64,
}

pub const DEFAULT_LAG_STEP: f64 = 0.35;

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_channels: 16,
            eeg_rate: 512,
            assr_amplitude: 0.035,
            attention_gain: 2.0,
            noise_level: 1.0,
            noise_exponent: 1.0,
            channel_phase_lags: None,
            ignored_phase_jitter: 1.0,
            jitter_time_constant_s: 0.1,
            rng_seed: 2024,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_channels < 2 {
            return Err(Error::invalid("n_channels", format!("need at least 2 channels, got {}", self.n_channels)));
        }
        if self.eeg_rate == 0 {
            return Err(Error::invalid("eeg_rate", "sampling rate must be > 0"));
        }
        if !(self.assr_amplitude.is_finite() && self.assr_amplitude >= 0.0) {
            return Err(Error::invalid("assr_amplitude", "must be finite and >= 0"));
        }
        if !(self.attention_gain.is_finite() && self.attention_gain >= 1.0) {
            return Err(Error::invalid("attention_gain", format!("must be >= 1, got {}", self.attention_gain)));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::invalid("noise_level", "must be finite and >= 0"));
        }
        if !self.noise_exponent.is_finite() {
            return Err(Error::invalid("noise_exponent", "must be finite"));
        }
        if !(self.ignored_phase_jitter.is_finite() && self.ignored_phase_jitter >= 0.0) {
            return Err(Error::invalid("ignored_phase_jitter", "must be finite and >= 0"));
        }
        if !(self.jitter_time_constant_s.is_finite() && self.jitter_time_constant_s > 0.0) {
            return Err(Error::invalid("jitter_time_constant_s", "must be > 0"));
        }
        if let Some(lags) = &self.channel_phase_lags {
            if lags.len() != self.n_channels {
                return Err(Error::invalid(
                    "channel_phase_lags",
                    format!("expected {} lags, got {}", self.n_channels, lags.len()),
                ));
            }
            if lags.iter().any(|l| !l.is_finite()) {
                return Err(Error::invalid("channel_phase_lags", "lags must be finite"));
            }
        }
        Ok(())
    }

    pub fn phase_lag(&self, channel: usize) -> f64 {
        match &self.channel_phase_lags {
            Some(l) => l[channel],
            None => channel as f64 * DEFAULT_LAG_STEP,
        }
    }
}

/// Labels carried by an epoch and copied onto its feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLabel {
    pub f_m: f64,
    pub direction: Direction,
    pub attended: bool,
    pub condition: Condition,
    pub trial_index: usize,
}

/// One stimulus-locked multichannel segment, `data[channel][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub data: Vec<Vec<f64>>,
    pub eeg_rate: u32,
    pub label: EpochLabel,
}

impl Epoch {
    pub fn new(data: Vec<Vec<f64>>, eeg_rate: u32, label: EpochLabel) -> Result<Epoch> {
        let len = data.first().map_or(0, Vec::len);
        if data.is_empty() || len == 0 {
            return Err(Error::invalid("epoch", "epoch has no samples"));
        }
        if data.iter().any(|c| c.len() != len) {
            return Err(Error::invalid("epoch", "channels differ in length"));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("epoch", "non-finite sample"));
        }
        Ok(Epoch { data, eeg_rate, label })
    }

    pub fn n_channels(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.data[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same labels and rate, new samples.
    pub fn with_data(&self, data: Vec<Vec<f64>>) -> Epoch {
        Epoch {
            data,
            eeg_rate: self.eeg_rate,
            label: self.label,
        }
    }
}

/// Presentation-time metadata for one stimulus of a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusEvent {
    pub trial_index: usize,
    pub direction: Direction,
    pub onset_s: f64,
    pub duration_s: f64,
}

/// All epochs of one (kind, length) condition.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    pub condition: Condition,
    pub seed: u64,
    pub epochs: Vec<Epoch>,
    pub timeline: Vec<StimulusEvent>,
}

/// Mix integers into a seed (SplitMix64 finalizer applied per word).
pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    words.iter().fold(mix(base), |acc, &w| mix(acc ^ mix(w)))
}

/// Unit-variance `1/f^α` noise of length `len`.
pub fn colored_noise(rng: &mut impl Rng, len: usize, rate: f64, exponent: f64) -> Vec<f64> {
    let mut buf: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    if len < 2 {
        return vec![0.0; len];
    }
    fft::forward(len).process(&mut buf);
    buf[0] = Complex64::default();
    for (k, b) in buf.iter_mut().enumerate().skip(1) {
        let f = k.min(len - k) as f64 * rate / len as f64;
        *b *= f.powf(-exponent / 2.0);
    }
    fft::inverse(len).process(&mut buf);
    let x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / len as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1) as f64).sqrt();
    if sd == 0.0 {
        return vec![0.0; len];
    }
    x.iter().map(|v| (v - mean) / sd).collect()
}

fn ar1_process(rng: &mut impl Rng, len: usize, rate: f64, tau_s: f64) -> Vec<f64> {
    let rho = (-1.0 / (tau_s * rate)).exp();
    let innov = (1.0 - rho * rho).sqrt();
    let mut out = Vec::with_capacity(len);
    let mut x: f64 = rng.sample(StandardNormal);
    for _ in 0..len {
        out.push(x);
        x = rho * x + innov * rng.sample::<f64, _>(StandardNormal);
    }
    out
}

/// Generate one epoch. `label.condition` sets the length
/// (`round(length * eeg_rate)` samples); the epoch is fully determined by
/// `(cfg, label, seed)`.
pub fn simulate_epoch(cfg: &SimConfig, label: EpochLabel, seed: u64) -> Result<Epoch> {
    cfg.validate()?;
    if !(label.f_m.is_finite() && label.f_m > 0.0) {
        return Err(Error::invalid("f_m", format!("modulation frequency must be > 0, got {}", label.f_m)));
    }
    let rate = cfg.eeg_rate as f64;
    if rate <= 2.0 * label.f_m {
        return Err(Error::invalid(
            "eeg_rate",
            format!("{} Hz does not exceed 2 x f_m = {} Hz", cfg.eeg_rate, 2.0 * label.f_m),
        ));
    }
    let len = (label.condition.length_s() * rate).round() as usize;
    if len == 0 {
        return Err(Error::invalid("length", "epoch length rounds to zero samples"));
    }
    let amp = if label.attended {
        cfg.assr_amplitude * cfg.attention_gain
    } else {
        cfg.assr_amplitude
    };
    let jitter = if label.attended { 0.0 } else { cfg.ignored_phase_jitter };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(cfg.n_channels);
    for c in 0..cfg.n_channels {
        let noise = colored_noise(&mut rng, len, rate, cfg.noise_exponent);
        let wander = ar1_process(&mut rng, len, rate, cfg.jitter_time_constant_s);
        let lag = cfg.phase_lag(c);
        let ch = (0..len)
            .map(|k| {
                let t = k as f64 / rate;
                let phase = 2.0 * PI * label.f_m * t + lag + jitter * wander[k];
                let v = cfg.noise_level * noise[k] + amp * phase.sin();
                v as f32 as f64
            })
            .collect();
        data.push(ch);
    }
    Epoch::new(data, cfg.eeg_rate, label)
}

/// Simulate every condition of the protocol (30 trials x 3 stimuli each).
pub fn simulate_session(protocol: &ProtocolConfig, cfg: &SimConfig, seed: u64) -> Result<Vec<EpochSet>> {
    protocol.validate()?;
    protocol
        .conditions()
        .into_iter()
        .map(|cond| crate::session::run_condition(cond.kind, cond.length_s(), protocol, cfg, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::StimulusKind;

    fn label(attended: bool, length: f64) -> EpochLabel {
        EpochLabel {
            f_m: 40.0,
            direction: Direction::Center,
            attended,
            condition: Condition::new(StimulusKind::Sam, length),
            trial_index: 0,
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SimConfig::default();
        let a = simulate_epoch(&cfg, label(true, 1.0), 7).unwrap();
        let b = simulate_epoch(&cfg, label(true, 1.0), 7).unwrap();
        let c = simulate_epoch(&cfg, label(true, 1.0), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.data, c.data);
        assert_eq!(a.len(), 512);
        assert_eq!(a.n_channels(), 16);
    }

    #[test]
    fn noiseless_is_pure_lagged_sinusoid() {
        let cfg = SimConfig {
            noise_level: 0.0,
            assr_amplitude: 1.0,
            ..SimConfig::default()
        };
        let e = simulate_epoch(&cfg, label(true, 0.5), 1).unwrap();
        for (c, ch) in e.data.iter().enumerate() {
            for (k, &v) in ch.iter().enumerate() {
                let t = k as f64 / 512.0;
                let want = 2.0 * (2.0 * PI * 40.0 * t + c as f64 * DEFAULT_LAG_STEP).sin();
                assert!((v - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn samples_are_f32_exact() {
        let e = simulate_epoch(&SimConfig::default(), label(false, 0.5), 3).unwrap();
        assert!(e.data.iter().flatten().all(|&v| v as f32 as f64 == v));
    }

    #[test]
    fn noise_has_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = colored_noise(&mut rng, 4096, 512.0, 1.0);
        let var = n.iter().map(|v| v * v).sum::<f64>() / 4095.0;
        assert!((var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn config_validation_names_field() {
        let bad = SimConfig {
            attention_gain: 0.5,
            ..SimConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Invalid { field, .. }) if field == "attention_gain"));
        let bad = SimConfig {
            n_channels: 1,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            channel_phase_lags: Some(vec![0.0; 3]),
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let lowrate = SimConfig {
            eeg_rate: 100,
            ..SimConfig::default()
        };
        let mut l = label(true, 1.0);
        l.f_m = 60.0;
        assert!(simulate_epoch(&lowrate, l, 0).is_err());
    }

    #[test]
    fn derive_seed_separates_inputs() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(9, &[3]), derive_seed(9, &[3]));
    }
}
