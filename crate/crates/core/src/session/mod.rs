//! Experimental protocol, condition runs and the end-to-end sweep.
//!
//! A session presents 3 stimuli per trial (one per direction, shuffled) for
//! `blocks.len() * trials_per_block` trials; block `b` has `blocks[b]` as its
//! target direction. The whole session is repeated for every (kind, length)
//! condition, each with its own derived seed.

mod report;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{evaluate_condition, EvaluationFile, NbcConfig, Task};
use crate::dsp::{feature_vector, DspConfig, FeatureVector};
use crate::eegsim::{derive_seed, simulate_epoch, EpochLabel, EpochSet, SimConfig, StimulusEvent};
use crate::error::{Error, Result};
use crate::labels::{Condition, Direction, StimulusKind};
pub use report::{
    build_report, reference_tables, render_csv, render_text, EvaluationReport, ReportTable, TableSource, MISSING,
};

/// Modulation frequency bound to each direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionFrequencies {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl Default for DirectionFrequencies {
    fn default() -> Self {
        DirectionFrequencies {
            left: 25.0,
            center: 40.0,
            right: 60.0,
        }
    }
}

impl DirectionFrequencies {
    pub fn get(&self, d: Direction) -> f64 {
        match d {
            Direction::Left => self.left,
            Direction::Center => self.center,
            Direction::Right => self.right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub directions: DirectionFrequencies,
    pub trials_per_block: usize,
    /// Target direction of each block, in order.
    pub blocks: Vec<Direction>,
    /// Offset-to-onset gap between consecutive stimuli.
    pub inter_stimulus_gap_s: f64,
    /// Extra pause between blocks (timeline metadata only).
    pub block_break_s: f64,
    pub stimulus_lengths_s: Vec<f64>,
    pub stimulus_kinds: Vec<StimulusKind>,
    pub rng_seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            directions: DirectionFrequencies::default(),
            trials_per_block: 10,
            blocks: Direction::ALL.to_vec(),
            inter_stimulus_gap_s: 0.375,
            block_break_s: 10.0,
            stimulus_lengths_s: vec![0.5, 1.0, 3.0],
            stimulus_kinds: StimulusKind::ALL.to_vec(),
            rng_seed: 1,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let f = [self.directions.left, self.directions.center, self.directions.right];
        if f.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("directions", "frequencies must be > 0"));
        }
        if f[0] == f[1] || f[0] == f[2] || f[1] == f[2] {
            return Err(Error::invalid("directions", "direction frequencies must be distinct"));
        }
        if self.trials_per_block == 0 {
            return Err(Error::invalid("trials_per_block", "must be at least 1"));
        }
        if self.blocks.is_empty() {
            return Err(Error::invalid("blocks", "at least one block is required"));
        }
        if !(self.inter_stimulus_gap_s.is_finite() && self.inter_stimulus_gap_s >= 0.0) {
            return Err(Error::invalid("inter_stimulus_gap_s", "must be >= 0"));
        }
        if !(self.block_break_s.is_finite() && self.block_break_s >= 0.0) {
            return Err(Error::invalid("block_break_s", "must be >= 0"));
        }
        if self.stimulus_lengths_s.is_empty() || self.stimulus_lengths_s.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("stimulus_lengths_s", "need at least one positive length"));
        }
        if self.stimulus_kinds.is_empty() {
            return Err(Error::invalid("stimulus_kinds", "need at least one stimulus kind"));
        }
        let mut conds = self.conditions();
        let n = conds.len();
        conds.dedup();
        if conds.len() != n {
            return Err(Error::invalid("stimulus_kinds", "duplicate kind or length"));
        }
        Ok(())
    }

    pub fn n_trials(&self) -> usize {
        self.blocks.len() * self.trials_per_block
    }

    pub fn target_of(&self, trial: usize) -> Direction {
        self.blocks[trial / self.trials_per_block]
    }

    /// Kind-major list of conditions, sorted.
    pub fn conditions(&self) -> Vec<Condition> {
        let mut c: Vec<Condition> = self
            .stimulus_kinds
            .iter()
            .flat_map(|&k| self.stimulus_lengths_s.iter().map(move |&l| Condition::new(k, l)))
            .collect();
        c.sort();
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub target: Direction,
    /// Presentation order.
    pub order: [Direction; 3],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialPlan {
    pub trials: Vec<Trial>,
}

impl TrialPlan {
    /// Onset times for stimuli of `length_s` seconds separated by the
    /// protocol gap, with the block break added between blocks.
    pub fn timeline(&self, protocol: &ProtocolConfig, length_s: f64) -> Vec<StimulusEvent> {
        let mut t = 0.0;
        let mut out = Vec::with_capacity(3 * self.trials.len());
        for trial in &self.trials {
            if trial.index > 0 && trial.index % protocol.trials_per_block == 0 {
                t += protocol.block_break_s;
            }
            for &direction in &trial.order {
                out.push(StimulusEvent {
                    trial_index: trial.index,
                    direction,
                    onset_s: t,
                    duration_s: length_s,
                });
                t += length_s + protocol.inter_stimulus_gap_s;
            }
        }
        out
    }
}

/// Seeded trial plan: every trial presents the three directions in a random order.
pub fn schedule_trials(cfg: &ProtocolConfig, seed: u64) -> TrialPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = (0..cfg.n_trials())
        .map(|index| {
            let mut order = Direction::ALL;
            order.shuffle(&mut rng);
            Trial {
                index,
                target: cfg.target_of(index),
                order,
            }
        })
        .collect();
    TrialPlan { trials }
}

const PLAN_STREAM: u64 = 0x504c_414e;

/// Seed of one condition within a session seeded with `seed`.
pub fn condition_seed(seed: u64, cond: Condition) -> u64 {
    derive_seed(seed, &[cond.kind.index() as u64, cond.length_ms as u64])
}

/// Simulate one condition: 3 epochs per trial in presentation order.
pub fn run_condition(
    kind: StimulusKind,
    length_s: f64,
    protocol: &ProtocolConfig,
    sim: &SimConfig,
    seed: u64,
) -> Result<EpochSet> {
    protocol.validate()?;
    let condition = Condition::new(kind, length_s);
    if !protocol.conditions().contains(&condition) {
        return Err(Error::invalid("condition", format!("{condition} is not part of the protocol")));
    }
    let cseed = condition_seed(seed, condition);
    let plan = schedule_trials(protocol, derive_seed(cseed, &[PLAN_STREAM]));
    let labels: Vec<(EpochLabel, u64)> = plan
        .trials
        .iter()
        .flat_map(|t| {
            t.order.iter().map(move |&d| {
                let label = EpochLabel {
                    f_m: protocol.directions.get(d),
                    direction: d,
                    attended: d == t.target,
                    condition,
                    trial_index: t.index,
                };
                (label, derive_seed(cseed, &[t.index as u64, d.code() as u64]))
            })
        })
        .collect();
    let epochs = labels
        .par_iter()
        .map(|&(label, s)| simulate_epoch(sim, label, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(EpochSet {
        condition,
        seed,
        epochs,
        timeline: plan.timeline(protocol, condition.length_s()),
    })
}

/// Everything a run needs; the JSON config file has this shape, every
/// section optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub protocol: ProtocolConfig,
    pub sim: SimConfig,
    pub dsp: DspConfig,
    pub nbc: NbcConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let scoped = |section: &str, r: Result<()>| {
            r.map_err(|e| match e {
                Error::Invalid { field, reason } => Error::Invalid {
                    field: format!("{section}.{field}"),
                    reason,
                },
                other => other,
            })
        };
        scoped("protocol", self.protocol.validate())?;
        scoped("sim", self.sim.validate())?;
        scoped("dsp", self.dsp.validate())?;
        let max_f = [
            self.protocol.directions.left,
            self.protocol.directions.center,
            self.protocol.directions.right,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if self.sim.eeg_rate as f64 <= 2.0 * max_f {
            return Err(Error::invalid("sim.eeg_rate", format!("must exceed 2 x {max_f} Hz")));
        }
        Ok(())
    }

    pub fn from_json(text: &str, path: &Path) -> Result<PipelineConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::format(path, format!("field '{}': {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::from_json(&text, path)
    }
}

/// PLV features of every epoch of a set (each at its own `f_m`).
pub fn extract_features(set: &EpochSet, dsp: &DspConfig) -> Result<Vec<FeatureVector>> {
    set.epochs
        .par_iter()
        .map(|e| feature_vector(e, e.label.f_m, dsp))
        .collect()
}

/// Simulate, extract and evaluate both tasks on every condition for one seed.
pub fn run_seed(cfg: &PipelineConfig, seed: u64, run: impl Into<String>) -> Result<EvaluationFile> {
    cfg.validate()?;
    let per_condition = cfg
        .protocol
        .conditions()
        .par_iter()
        .map(|c| {
            let set = run_condition(c.kind, c.length_s(), &cfg.protocol, &cfg.sim, seed)?;
            let feats = extract_features(&set, &cfg.dsp)?;
            Task::ALL
                .iter()
                .map(|&t| evaluate_condition(&feats, t, &cfg.nbc))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationFile {
        run: run.into(),
        evaluations: per_condition.into_iter().flatten().collect(),
    })
}

/// [`run_seed`] for seeds `first_seed .. first_seed + n_seeds`, labeled `seed #k`.
pub fn run_sweep(cfg: &PipelineConfig, first_seed: u64, n_seeds: usize) -> Result<Vec<EvaluationFile>> {
    (0..n_seeds as u64)
        .map(|k| run_seed(cfg, first_seed + k, format!("seed #{}", k + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_shape() {
        let cfg = ProtocolConfig::default();
        let plan = schedule_trials(&cfg, 42);
        assert_eq!(plan.trials.len(), 30);
        for t in &plan.trials {
            let mut o = t.order.to_vec();
            o.sort();
            assert_eq!(o, Direction::ALL.to_vec());
        }
        assert_eq!(plan.trials[0].target, Direction::Left);
        assert_eq!(plan.trials[10].target, Direction::Center);
        assert_eq!(plan.trials[29].target, Direction::Right);
        assert_eq!(plan, schedule_trials(&cfg, 42));
        assert_ne!(plan, schedule_trials(&cfg, 43));
    }

    #[test]
    fn timeline_gaps() {
        let cfg = ProtocolConfig::default();
        let tl = schedule_trials(&cfg, 1).timeline(&cfg, 1.0);
        assert_eq!(tl.len(), 90);
        assert!((tl[1].onset_s - 1.375).abs() < 1e-12);
        // block break between trial 9 and trial 10
        let gap = tl[30].onset_s - (tl[29].onset_s + 1.0);
        assert!((gap - 10.375).abs() < 1e-9);
    }

    #[test]
    fn condition_epochs() {
        let protocol = ProtocolConfig::default();
        let sim = SimConfig::default();
        let set = run_condition(StimulusKind::Sam, 0.5, &protocol, &sim, 9).unwrap();
        assert_eq!(set.epochs.len(), 90);
        assert!(set.epochs.iter().all(|e| e.len() == 256));
        assert_eq!(set.epochs.iter().filter(|e| e.label.attended).count(), 30);
        for d in Direction::ALL {
            let of_d: Vec<_> = set.epochs.iter().filter(|e| e.label.direction == d).collect();
            assert_eq!(of_d.len(), 30);
            assert_eq!(of_d.iter().filter(|e| e.label.attended).count(), 10);
            assert!(of_d.iter().all(|e| e.label.f_m == protocol.directions.get(d)));
        }
        for trial in 0..30 {
            let attended: Vec<_> = set
                .epochs
                .iter()
                .filter(|e| e.label.trial_index == trial && e.label.attended)
                .collect();
            assert_eq!(attended.len(), 1);
            assert_eq!(attended[0].label.direction, protocol.target_of(trial));
        }
        assert!(run_condition(StimulusKind::Sam, 2.0, &protocol, &sim, 9).is_err());
    }

    #[test]
    fn config_errors_name_fields() {
        let p = Path::new("cfg.json");
        let err = PipelineConfig::from_json(r#"{"sim": {"attention_gain": "high"}}"#, p).unwrap_err();
        assert!(err.to_string().contains("sim.attention_gain"), "{err}");
        let err = PipelineConfig::from_json(r#"{"sim": {"noise_level": -1}}"#, p).unwrap_err();
        assert!(err.to_string().contains("sim.noise_level"), "{err}");
        let err = PipelineConfig::from_json(r#"{"protocol": {"bogus": 1}}"#, p).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        assert_eq!(PipelineConfig::from_json("{}", p).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn protocol_validation() {
        let mut p = ProtocolConfig::default();
        p.directions.right = 40.0;
        assert!(p.validate().is_err());
        let p = ProtocolConfig {
            stimulus_lengths_s: vec![1.0, 1.0],
            ..ProtocolConfig::default()
        };
        assert!(p.validate().is_err());
        assert_eq!(ProtocolConfig::default().conditions().len(), 12);
    }
}
