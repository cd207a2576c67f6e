//! Feature-vector CSV.
//!
//! Column order (a compatibility contract): one `pair_AA_BB` column per
//! channel pair in feature-vector order, then the label columns
//! `f_m, direction, attended, kind, length, trial`. `attended` is `1`/`0`,
//! `length` is in seconds, `trial` is zero-based. Feature values use the
//! shortest round-trip decimal form, so re-reading reproduces them exactly.

use std::fs;
use std::path::Path;

use super::{pair_name, pairs, FeatureVector};
use crate::eegsim::EpochLabel;
use crate::error::{Error, Result};
use crate::labels::{Condition, Direction, StimulusKind};

pub const FEATURE_LABEL_COLUMNS: [&str; 6] = ["f_m", "direction", "attended", "kind", "length", "trial"];

fn channels_for_pairs(n_pairs: usize) -> Option<usize> {
    (2..=1024).find(|c| c * (c - 1) / 2 == n_pairs)
}

fn header(n_channels: usize) -> Vec<String> {
    pairs(n_channels)
        .map(|(a, b)| pair_name(a, b))
        .chain(FEATURE_LABEL_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

pub fn write_features_csv(features: &[FeatureVector], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let first = features
        .first()
        .ok_or_else(|| Error::invalid("features", "no feature vectors to write"))?;
    let n_channels = channels_for_pairs(first.values.len())
        .ok_or_else(|| Error::invalid("features", format!("{} values is not a pair count", first.values.len())))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(header(n_channels)).map_err(io)?;
    for (i, fv) in features.iter().enumerate() {
        if fv.values.len() != first.values.len() {
            return Err(Error::invalid("features", format!("vector {i} has {} values", fv.values.len())));
        }
        let l = &fv.label;
        let record = fv
            .values
            .iter()
            .map(|v| v.to_string())
            .chain([
                l.f_m.to_string(),
                l.direction.to_string(),
                (l.attended as u8).to_string(),
                l.condition.kind.to_string(),
                l.condition.length_s().to_string(),
                l.trial_index.to_string(),
            ]);
        w.write_record(record).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let head: Vec<String> = r
        .headers()
        .map_err(|e| Error::format(path, format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let n_pairs = head.len().saturating_sub(FEATURE_LABEL_COLUMNS.len());
    let n_channels = channels_for_pairs(n_pairs)
        .ok_or_else(|| Error::format(path, format!("header has {} columns, not pairs + labels", head.len())))?;
    if head != header(n_channels) {
        return Err(Error::format(path, "header does not match the feature column contract"));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let bad = |msg: String| Error::format(path, format!("row {row}: {msg}"));
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != head.len() {
            return Err(bad(format!("expected {} fields, found {}", head.len(), rec.len())));
        }
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("column {} is not a finite number: '{}'", head[j], &rec[j])))
        };
        let values = (0..n_pairs).map(num).collect::<Result<Vec<_>>>()?;
        let f_m = num(n_pairs)?;
        let direction: Direction = rec[n_pairs + 1].parse().map_err(|e: Error| bad(e.to_string()))?;
        let attended = match rec[n_pairs + 2].trim() {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("attended must be 0 or 1, got '{other}'"))),
        };
        let kind: StimulusKind = rec[n_pairs + 3].parse().map_err(|e: Error| bad(e.to_string()))?;
        let length = num(n_pairs + 4)?;
        let trial_index = rec[n_pairs + 5]
            .trim()
            .parse::<usize>()
            .map_err(|_| bad(format!("trial is not an index: '{}'", &rec[n_pairs + 5])))?;
        out.push(FeatureVector {
            values,
            label: EpochLabel {
                f_m,
                direction,
                attended,
                condition: Condition::new(kind, length),
                trial_index,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: f64, trial: usize) -> FeatureVector {
        FeatureVector {
            values: vec![v, 0.1 + v / 3.0, 1.0],
            label: EpochLabel {
                f_m: 25.0,
                direction: Direction::Left,
                attended: trial % 2 == 0,
                condition: Condition::new(StimulusKind::Clicks, 0.5),
                trial_index: trial,
            },
        }
    }

    #[test]
    fn round_trip_exact_and_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let feats = vec![fv(0.123456789012345, 0), fv(1.0 / 7.0, 1)];
        write_features_csv(&feats, &p).unwrap();
        let back = read_features_csv(&p).unwrap();
        assert_eq!(back, feats);
        let p2 = dir.path().join("g.csv");
        write_features_csv(&back, &p2).unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(&p2).unwrap());
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("pair_01_02,pair_01_03,pair_02_03,f_m,direction,attended,kind,length,trial\n"));
    }

    #[test]
    fn malformed_row_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        fs::write(
            &p,
            "pair_01_02,f_m,direction,attended,kind,length,trial\n0.5,25,left,1,sam,1,0\nabc,25,left,1,sam,1,1\n",
        )
        .unwrap();
        let err = read_features_csv(&p).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
    }
}
