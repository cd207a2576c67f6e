//! Auditory steady-state response (ASSR) BCI toolkit.
//!
//! * [`stimgen`] synthesizes SAM, flutter-AM, click and AM/FM stimuli and
//!   writes them as stereo WAV files routed to a spatial direction.
//! * [`eegsim`] generates labeled multichannel EEG epochs with
//!   attention-modulated steady-state responses in `1/f` noise.
//! * [`dsp`] turns epochs into 120-dimensional pairwise phase-locking-value
//!   feature vectors.
//! * [`classify`] runs Gaussian naive Bayes under leave-one-out
//!   cross-validation for the target/non-target and direction tasks.
//! * [`session`] encodes the trial protocol, runs conditions and sweeps, and
//!   renders accuracy tables.

pub mod classify;
pub mod dsp;
pub mod eegsim;
pub mod error;
pub mod labels;
pub mod session;
pub mod stimgen;

pub use error::{Error, Result};
pub use labels::{Condition, Direction, StimulusKind};
