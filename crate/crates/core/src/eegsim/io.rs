//! On-disk epoch sets.
//!
//! A condition directory holds `manifest.json` and one `epoch_NNN.bin` per
//! epoch. The binary layout is a fixed header of eight little-endian `u32`
//! fields
//!
//! | # | field                      |
//! |---|----------------------------|
//! | 0 | magic `b"ASSR"`            |
//! | 1 | version (1)                |
//! | 2 | channel count              |
//! | 3 | samples per channel `L`    |
//! | 4 | sampling rate (Hz)         |
//! | 5 | `round(f_m * 1000)`        |
//! | 6 | direction (0 L, 1 C, 2 R)  |
//! | 7 | attended flag (0 / 1)      |
//!
//! followed by `channels * L` little-endian `f32`, channel-major.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Epoch, EpochLabel, EpochSet, StimulusEvent};
use crate::error::{Error, Result};
use crate::labels::{Condition, Direction};

pub const EPOCH_MAGIC: u32 = u32::from_le_bytes(*b"ASSR");
pub const EPOCH_VERSION: u32 = 1;
const HEADER_BYTES: usize = 8 * 4;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    condition: Condition,
    seed: u64,
    eeg_rate: u32,
    n_channels: usize,
    samples_per_epoch: usize,
    timeline: Vec<StimulusEvent>,
    epochs: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    file: String,
    trial_index: usize,
    direction: Direction,
    attended: bool,
    f_m: f64,
}

pub fn epoch_to_bytes(epoch: &Epoch) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_BYTES + 4 * epoch.n_channels() * epoch.len());
    let f_m_milli = (epoch.label.f_m * 1000.0).round();
    if !(0.0..=u32::MAX as f64).contains(&f_m_milli) {
        return Err(Error::invalid("f_m", "modulation frequency does not fit the header"));
    }
    let header = [
        EPOCH_MAGIC,
        EPOCH_VERSION,
        epoch.n_channels() as u32,
        epoch.len() as u32,
        epoch.eeg_rate,
        f_m_milli as u32,
        epoch.label.direction.code(),
        epoch.label.attended as u32,
    ];
    for h in header {
        out.extend_from_slice(&h.to_le_bytes());
    }
    for ch in &epoch.data {
        for &v in ch {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Decode an epoch. Labels not stored in the header (condition and trial)
/// are taken from `condition` / `trial_index`.
pub fn epoch_from_bytes(bytes: &[u8], path: &Path, condition: Condition, trial_index: usize) -> Result<Epoch> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::format(path, "truncated header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    if word(0) != EPOCH_MAGIC {
        return Err(Error::format(path, "bad magic"));
    }
    if word(1) != EPOCH_VERSION {
        return Err(Error::format(path, format!("unsupported version {}", word(1))));
    }
    let (n_ch, len) = (word(2) as usize, word(3) as usize);
    let expected = HEADER_BYTES + 4 * n_ch * len;
    if bytes.len() != expected {
        return Err(Error::format(path, format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let direction =
        Direction::from_code(word(6)).ok_or_else(|| Error::format(path, format!("bad direction code {}", word(6))))?;
    let attended = match word(7) {
        0 => false,
        1 => true,
        other => return Err(Error::format(path, format!("bad attended flag {other}"))),
    };
    let payload = &bytes[HEADER_BYTES..];
    let data = (0..n_ch)
        .map(|c| {
            payload[4 * c * len..4 * (c + 1) * len]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                .collect()
        })
        .collect();
    let label = EpochLabel {
        f_m: word(5) as f64 / 1000.0,
        direction,
        attended,
        condition,
        trial_index,
    };
    Epoch::new(data, word(4), label).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_epoch(epoch: &Epoch, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, epoch_to_bytes(epoch)?).map_err(|e| Error::io(path, e))
}

pub fn read_epoch(path: impl AsRef<Path>, condition: Condition, trial_index: usize) -> Result<Epoch> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    epoch_from_bytes(&bytes, path, condition, trial_index)
}

/// Write `set` into `dir` (created if needed).
pub fn write_epoch_set(set: &EpochSet, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let first = set
        .epochs
        .first()
        .ok_or_else(|| Error::invalid("epochs", "cannot write an empty epoch set"))?;
    let mut entries = Vec::with_capacity(set.epochs.len());
    for (i, e) in set.epochs.iter().enumerate() {
        if e.n_channels() != first.n_channels() || e.len() != first.len() || e.eeg_rate != first.eeg_rate {
            return Err(Error::invalid("epochs", format!("epoch {i} differs in shape or rate")));
        }
        let file = format!("epoch_{i:03}.bin");
        write_epoch(e, dir.join(&file))?;
        entries.push(ManifestEntry {
            file,
            trial_index: e.label.trial_index,
            direction: e.label.direction,
            attended: e.label.attended,
            f_m: e.label.f_m,
        });
    }
    let manifest = Manifest {
        format: "assr-epochs".into(),
        version: EPOCH_VERSION,
        condition: set.condition,
        seed: set.seed,
        eeg_rate: first.eeg_rate,
        n_channels: first.n_channels(),
        samples_per_epoch: first.len(),
        timeline: set.timeline.clone(),
        epochs: entries,
    };
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Read a condition directory written by [`write_epoch_set`]. Header fields
/// are cross-checked against the manifest.
pub fn read_epoch_set(dir: impl AsRef<Path>) -> Result<EpochSet> {
    let dir = dir.as_ref();
    let mpath: PathBuf = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let manifest: Manifest =
        serde_path_to_error::deserialize(de).map_err(|e| Error::format(&mpath, format!("{}: {}", e.path(), e.inner())))?;
    let mut epochs = Vec::with_capacity(manifest.epochs.len());
    for entry in &manifest.epochs {
        let path = dir.join(&entry.file);
        let e = read_epoch(&path, manifest.condition, entry.trial_index)?;
        if e.label.direction != entry.direction
            || e.label.attended != entry.attended
            || (e.label.f_m - entry.f_m).abs() > 5e-4
            || e.n_channels() != manifest.n_channels
            || e.len() != manifest.samples_per_epoch
            || e.eeg_rate != manifest.eeg_rate
        {
            return Err(Error::format(&path, "header disagrees with manifest"));
        }
        let label = EpochLabel { f_m: entry.f_m, ..e.label };
        epochs.push(Epoch { label, ..e });
    }
    Ok(EpochSet {
        condition: manifest.condition,
        seed: manifest.seed,
        epochs,
        timeline: manifest.timeline,
    })
}
