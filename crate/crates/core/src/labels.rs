//! Labels shared by every stage: spatial direction, stimulus kind and the
//! (kind, length) condition key.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Spatial direction of a stimulus. Each direction is bound to one
/// modulation frequency by the protocol (25 / 40 / 60 Hz by default).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Center,
    Right,
}

impl Direction {
    /// Fixed order used for class indices and for concatenating per-trial features.
    pub const ALL: [Direction; 3] = [Direction::Left, Direction::Center, Direction::Right];

    /// Code stored in the epoch binary header.
    pub fn code(self) -> u32 {
        match self {
            Direction::Left => 0,
            Direction::Center => 1,
            Direction::Right => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Direction> {
        Direction::ALL.get(code as usize).copied()
    }

    pub fn index(self) -> usize {
        self.code() as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Center => "center",
            Direction::Right => "right",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Direction::Left),
            "center" | "centre" | "c" => Ok(Direction::Center),
            "right" | "r" => Ok(Direction::Right),
            other => Err(Error::invalid("direction", format!("unknown direction '{other}'"))),
        }
    }
}

/// The four stimulus envelope types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusKind {
    Sam,
    Fam,
    Clicks,
    Amfm,
}

impl StimulusKind {
    pub const ALL: [StimulusKind; 4] = [
        StimulusKind::Sam,
        StimulusKind::Fam,
        StimulusKind::Clicks,
        StimulusKind::Amfm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StimulusKind::Sam => "sam",
            StimulusKind::Fam => "fam",
            StimulusKind::Clicks => "clicks",
            StimulusKind::Amfm => "amfm",
        }
    }

    /// Row label used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            StimulusKind::Sam => "SAM",
            StimulusKind::Fam => "FAM",
            StimulusKind::Clicks => "Clicks",
            StimulusKind::Amfm => "AM/FM",
        }
    }

    pub fn index(self) -> usize {
        match self {
            StimulusKind::Sam => 0,
            StimulusKind::Fam => 1,
            StimulusKind::Clicks => 2,
            StimulusKind::Amfm => 3,
        }
    }
}

impl fmt::Display for StimulusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StimulusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sam" => Ok(StimulusKind::Sam),
            "fam" | "flutter" => Ok(StimulusKind::Fam),
            "clicks" | "click" => Ok(StimulusKind::Clicks),
            "amfm" | "am/fm" | "fm" => Ok(StimulusKind::Amfm),
            other => Err(Error::invalid("kind", format!("unknown stimulus kind '{other}'"))),
        }
    }
}

/// One cell of the kind × length condition matrix. Length is kept in
/// milliseconds so the key is exact and hashable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub kind: StimulusKind,
    pub length_ms: u32,
}

impl Condition {
    pub fn new(kind: StimulusKind, length_s: f64) -> Condition {
        Condition {
            kind,
            length_ms: (length_s * 1000.0).round() as u32,
        }
    }

    pub fn length_s(&self) -> f64 {
        self.length_ms as f64 / 1000.0
    }

    /// Directory / file stem, e.g. `sam_3000ms`.
    pub fn slug(&self) -> String {
        format!("{}_{}ms", self.kind, self.length_ms)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}s", self.kind.display_name(), self.length_s())
    }
}
