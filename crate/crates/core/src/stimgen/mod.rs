//! ASSR stimulus synthesis.
//!
//! Four envelope types are supported: sinusoidal AM (SAM), flutter AM (FAM),
//! periodic biphasic clicks and the two-carrier AM/FM stimulus. Every
//! generator is a pure function of its [`StimulusSpec`]; sample `k` is taken
//! at `t = k / audio_rate` and the sample count is `round(duration * audio_rate)`.

mod wav;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::labels::{Direction, StimulusKind};
pub use wav::{read_wav, write_wav};

pub const DEFAULT_AUDIO_RATE: u32 = 44_100;
pub const DEFAULT_CARRIER_HZ: f64 = 440.0;
pub const DEFAULT_CARRIER2_HZ: f64 = 880.0;

/// Parameters of one stimulus waveform.
///
/// `carrier_hz` is the SAM/FAM carrier and the first AM/FM carrier;
/// `carrier2_hz` is the second AM/FM carrier. Clicks ignore both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub kind: StimulusKind,
    pub carrier_hz: f64,
    pub carrier2_hz: f64,
    pub mod_hz: f64,
    pub duration_s: f64,
    pub audio_rate: u32,
    pub amplitude: f64,
    /// Samples per click phase; a click is `click_width` samples at `+amplitude`
    /// followed by `click_width` samples at `-amplitude`.
    pub click_width: usize,
}

impl StimulusSpec {
    pub fn new(kind: StimulusKind, mod_hz: f64, duration_s: f64) -> StimulusSpec {
        StimulusSpec {
            kind,
            carrier_hz: DEFAULT_CARRIER_HZ,
            carrier2_hz: DEFAULT_CARRIER2_HZ,
            mod_hz,
            duration_s,
            audio_rate: DEFAULT_AUDIO_RATE,
            amplitude: 1.0,
            click_width: 1,
        }
    }

    pub fn with_audio_rate(mut self, rate: u32) -> Self {
        self.audio_rate = rate;
        self
    }

    pub fn with_carriers(mut self, carrier_hz: f64, carrier2_hz: f64) -> Self {
        self.carrier_hz = carrier_hz;
        self.carrier2_hz = carrier2_hz;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// `round(duration * audio_rate)`.
    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.audio_rate as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mod_hz.is_finite() && self.mod_hz > 0.0) {
            return Err(Error::invalid("mod_hz", format!("modulation frequency must be > 0, got {}", self.mod_hz)));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::invalid("duration_s", format!("duration must be > 0, got {}", self.duration_s)));
        }
        if self.audio_rate == 0 {
            return Err(Error::invalid("audio_rate", "sample rate must be > 0"));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(Error::invalid("amplitude", format!("amplitude must lie in (0, 1], got {}", self.amplitude)));
        }
        if self.sample_count() == 0 {
            return Err(Error::invalid("duration_s", "duration rounds to zero samples"));
        }
        let rate = self.audio_rate as f64;
        let carriers: &[(&str, f64)] = match self.kind {
            StimulusKind::Sam | StimulusKind::Fam => &[("carrier_hz", self.carrier_hz)],
            StimulusKind::Amfm => &[("carrier_hz", self.carrier_hz), ("carrier2_hz", self.carrier2_hz)],
            StimulusKind::Clicks => &[],
        };
        for &(field, f) in carriers {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::invalid(field, format!("carrier must be > 0, got {f}")));
            }
            if rate < 4.0 * f {
                return Err(Error::invalid(
                    "audio_rate",
                    format!("{} Hz is below 4 x carrier ({f} Hz)", self.audio_rate),
                ));
            }
        }
        if self.kind == StimulusKind::Amfm && self.carrier_hz == self.carrier2_hz {
            return Err(Error::invalid("carrier2_hz", "AM/FM carriers must differ"));
        }
        if self.kind == StimulusKind::Clicks {
            if self.click_width == 0 {
                return Err(Error::invalid("click_width", "click width must be at least one sample"));
            }
            if self.mod_hz >= rate / 2.0 || rate / self.mod_hz < (2 * self.click_width) as f64 {
                return Err(Error::invalid(
                    "mod_hz",
                    format!("click rate {} Hz makes consecutive clicks overlap at {} Hz", self.mod_hz, self.audio_rate),
                ));
            }
        }
        Ok(())
    }

    fn expect_kind(&self, kind: StimulusKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::invalid("kind", format!("expected {kind}, spec is {}", self.kind)));
        }
        self.validate()
    }
}

/// A single-channel waveform with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoWaveform {
    pub samples: Vec<f64>,
    pub rate: u32,
}

impl MonoWaveform {
    pub fn silence(len: usize, rate: u32) -> MonoWaveform {
        MonoWaveform {
            samples: vec![0.0; len],
            rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StereoWaveform {
    left: MonoWaveform,
    right: MonoWaveform,
}

impl StereoWaveform {
    pub fn new(left: MonoWaveform, right: MonoWaveform) -> Result<StereoWaveform> {
        if left.len() != right.len() {
            return Err(Error::invalid("stereo", format!("channel lengths differ: {} vs {}", left.len(), right.len())));
        }
        if left.rate != right.rate {
            return Err(Error::invalid("stereo", format!("channel rates differ: {} vs {}", left.rate, right.rate)));
        }
        Ok(StereoWaveform { left, right })
    }

    pub fn left(&self) -> &MonoWaveform {
        &self.left
    }

    pub fn right(&self) -> &MonoWaveform {
        &self.right
    }

    pub fn rate(&self) -> u32 {
        self.left.rate
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }
}

fn time_grid(spec: &StimulusSpec) -> impl Iterator<Item = f64> {
    let rate = spec.audio_rate as f64;
    (0..spec.sample_count()).map(move |k| k as f64 / rate)
}

/// `amplitude * sin(2π f_c t) * sin(π f_m t)`.
pub fn synth_sam(spec: &StimulusSpec) -> Result<MonoWaveform> {
    spec.expect_kind(StimulusKind::Sam)?;
    let samples = time_grid(spec)
        .map(|t| spec.amplitude * (2.0 * PI * spec.carrier_hz * t).sin() * (PI * spec.mod_hz * t).sin())
        .collect();
    Ok(MonoWaveform {
        samples,
        rate: spec.audio_rate,
    })
}

/// Flutter AM: the SAM product with a full-rate envelope `sin(2π f_m t)`,
/// silenced wherever the envelope is not strictly positive.
pub fn synth_fam(spec: &StimulusSpec) -> Result<MonoWaveform> {
    spec.expect_kind(StimulusKind::Fam)?;
    let samples = time_grid(spec)
        .map(|t| {
            let env = (2.0 * PI * spec.mod_hz * t).sin();
            if env > 0.0 {
                spec.amplitude * (2.0 * PI * spec.carrier_hz * t).sin() * env
            } else {
                0.0
            }
        })
        .collect();
    Ok(MonoWaveform {
        samples,
        rate: spec.audio_rate,
    })
}

/// Number of clicks for a spec: `floor(f_m * duration + 0.5)` (round half up).
pub fn click_count(spec: &StimulusSpec) -> usize {
    (spec.mod_hz * spec.duration_s + 0.5).floor() as usize
}

/// Sample index of click `k`: nearest sample to `k / f_m`.
pub fn click_onset(spec: &StimulusSpec, k: usize) -> usize {
    (k as f64 * spec.audio_rate as f64 / spec.mod_hz).round() as usize
}

/// Periodic biphasic clicks: `click_width` samples of `+amplitude` then the
/// same number of `-amplitude`, starting at every onset `k / f_m`.
pub fn synth_clicks(spec: &StimulusSpec) -> Result<MonoWaveform> {
    spec.expect_kind(StimulusKind::Clicks)?;
    let len = spec.sample_count();
    let w = spec.click_width;
    let mut samples = vec![0.0; len];
    for k in 0..click_count(spec) {
        let onset = click_onset(spec, k);
        if onset + 2 * w > len {
            return Err(Error::invalid(
                "duration_s",
                format!("click {k} at sample {onset} does not fit in {len} samples"),
            ));
        }
        samples[onset..onset + w].fill(spec.amplitude);
        samples[onset + w..onset + 2 * w].fill(-spec.amplitude);
    }
    Ok(MonoWaveform {
        samples,
        rate: spec.audio_rate,
    })
}

/// AM/FM: SAM envelope `sin(π f_m t)`; the carrier is `f_c1` while the
/// envelope is strictly positive and `f_c2` otherwise.
pub fn synth_amfm(spec: &StimulusSpec) -> Result<MonoWaveform> {
    spec.expect_kind(StimulusKind::Amfm)?;
    let samples = time_grid(spec)
        .map(|t| {
            let env = (PI * spec.mod_hz * t).sin();
            let carrier = if env > 0.0 { spec.carrier_hz } else { spec.carrier2_hz };
            spec.amplitude * (2.0 * PI * carrier * t).sin() * env
        })
        .collect();
    Ok(MonoWaveform {
        samples,
        rate: spec.audio_rate,
    })
}

/// Dispatch on `spec.kind`.
pub fn synthesize(spec: &StimulusSpec) -> Result<MonoWaveform> {
    match spec.kind {
        StimulusKind::Sam => synth_sam(spec),
        StimulusKind::Fam => synth_fam(spec),
        StimulusKind::Clicks => synth_clicks(spec),
        StimulusKind::Amfm => synth_amfm(spec),
    }
}

/// Route a mono stimulus to the stereo field. Center plays the same samples
/// on both channels.
pub fn spatialize(wave: MonoWaveform, direction: Direction) -> StereoWaveform {
    let silence = MonoWaveform::silence(wave.len(), wave.rate);
    let (left, right) = match direction {
        Direction::Left => (wave, silence),
        Direction::Right => (silence, wave),
        Direction::Center => (wave.clone(), wave),
    };
    StereoWaveform { left, right }
}
