//! 16-bit PCM stereo WAV output.

use std::path::Path;

use super::{MonoWaveform, StereoWaveform};
use crate::error::{Error, Result};

const FULL_SCALE: f64 = 32767.0;

fn to_pcm(sample: f64) -> i16 {
    (sample * FULL_SCALE).round() as i16
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        other => Error::format(path, other.to_string()),
    }
}

/// Write a stereo waveform as RIFF/WAVE PCM (format tag 1, 16 bit,
/// interleaved L/R). Samples map to `round(sample * 32767)`.
pub fn write_wav(stereo: &StereoWaveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for (name, ch) in [("left", stereo.left()), ("right", stereo.right())] {
        if let Some((i, s)) = ch
            .samples
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && s.abs() <= 1.0))
        {
            return Err(Error::invalid("samples", format!("{name} sample {i} = {s} is outside [-1, 1]")));
        }
    }
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: stereo.rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for (&l, &r) in stereo.left().samples.iter().zip(&stereo.right().samples) {
        writer.write_sample(to_pcm(l)).map_err(|e| map_hound(path, e))?;
        writer.write_sample(to_pcm(r)).map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

/// Read a 16-bit stereo WAV back into normalized samples (`pcm / 32767`).
pub fn read_wav(path: impl AsRef<Path>) -> Result<StereoWaveform> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels != 2 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::format(path, "expected 16-bit integer stereo PCM"));
    }
    let mut left = Vec::with_capacity(reader.len() as usize / 2);
    let mut right = Vec::with_capacity(reader.len() as usize / 2);
    for (i, s) in reader.samples::<i16>().enumerate() {
        let v = s.map_err(|e| map_hound(path, e))? as f64 / FULL_SCALE;
        if i % 2 == 0 {
            left.push(v);
        } else {
            right.push(v);
        }
    }
    StereoWaveform::new(
        MonoWaveform {
            samples: left,
            rate: spec.sample_rate,
        },
        MonoWaveform {
            samples: right,
            rate: spec.sample_rate,
        },
    )
}
