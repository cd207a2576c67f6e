//! Target/non-target and direction classification with Gaussian naive Bayes
//! under leave-one-out cross-validation.

mod nbc;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::FeatureVector;
use crate::error::{Error, Result};
use crate::labels::{Condition, Direction};
pub use nbc::{fit_nbc, log_joint, predict_nbc, NbcConfig, NbcModel, Prediction, PriorMode, DEFAULT_VARIANCE_FLOOR};

pub const TVNT_CLASSES: [&str; 2] = ["target", "non-target"];

/// Labeled samples; `labels[i]` indexes `class_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(samples: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Dataset> {
        let d = Dataset {
            samples,
            labels,
            class_names,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() != self.labels.len() {
            return Err(Error::invalid("dataset", "sample and label counts differ"));
        }
        if self.class_names.len() < 2 {
            return Err(Error::invalid("dataset", "at least two classes are required"));
        }
        let dim = self.dimension();
        if dim == 0 {
            return Err(Error::invalid("dataset", "zero-dimensional samples"));
        }
        if let Some(i) = self.samples.iter().position(|s| s.len() != dim) {
            return Err(Error::invalid("dataset", format!("sample {i} has dimension {}, expected {dim}", self.samples[i].len())));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return Err(Error::invalid("dataset", format!("label {l} has no class name")));
        }
        if self.samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset", "non-finite feature value"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn without(&self, index: usize) -> Dataset {
        fn keep<T: Clone>(v: &[T], index: usize) -> Vec<T> {
            v.iter().enumerate().filter(|&(i, _)| i != index).map(|(_, x)| x.clone()).collect()
        }
        Dataset {
            samples: keep(&self.samples, index),
            labels: keep(&self.labels, index),
            class_names: self.class_names.clone(),
        }
    }

    /// Every feature multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Dataset {
        Dataset {
            samples: self.samples.iter().map(|s| s.iter().map(|v| v * factor).collect()).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPrediction {
    pub index: usize,
    pub truth: usize,
    pub predicted: usize,
}

/// Leave-one-out outcome. `confusion[truth][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub accuracy: f64,
    pub class_names: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<FoldPrediction>,
}

impl CvResult {
    pub fn correct(&self) -> usize {
        (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum()
    }

    pub fn total(&self) -> usize {
        self.predictions.len()
    }
}

/// Leave-one-out: fold `k` fits on every sample but `k` and predicts `k`.
/// Each class needs at least three samples so that every fold can still
/// estimate its variance.
pub fn loo_cv(data: &Dataset, cfg: &NbcConfig) -> Result<CvResult> {
    data.validate()?;
    for (c, &n) in data.class_counts().iter().enumerate() {
        if n < 3 {
            return Err(Error::invalid(
                "dataset",
                format!(
                    "class '{}' has {n} samples; leave-one-out needs at least 3 so every fold can fit it",
                    data.class_names[c]
                ),
            ));
        }
    }
    let predictions = (0..data.len())
        .into_par_iter()
        .map(|k| {
            let model = fit_nbc(&data.without(k), cfg)?;
            let p = predict_nbc(&model, &data.samples[k])?;
            Ok(FoldPrediction {
                index: k,
                truth: data.labels[k],
                predicted: p.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = data.class_names.len();
    let mut confusion = vec![vec![0; k]; k];
    for p in &predictions {
        confusion[p.truth][p.predicted] += 1;
    }
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    Ok(CvResult {
        accuracy: correct as f64 / predictions.len() as f64,
        class_names: data.class_names.clone(),
        confusion,
        predictions,
    })
}

fn single_condition(features: &[FeatureVector]) -> Result<Condition> {
    let first = features
        .first()
        .ok_or_else(|| Error::invalid("features", "no feature vectors"))?;
    let cond = first.label.condition;
    if let Some(other) = features.iter().find(|f| f.label.condition != cond) {
        return Err(Error::invalid(
            "features",
            format!("mixed conditions {cond} and {}; classifiers are per condition", other.label.condition),
        ));
    }
    Ok(cond)
}

fn trial_count(features: &[FeatureVector]) -> usize {
    let mut t: Vec<usize> = features.iter().map(|f| f.label.trial_index).collect();
    t.sort_unstable();
    t.dedup();
    t.len()
}

/// Split one condition's vectors by direction into binary target /
/// non-target datasets (class 0 = target). Samples are ordered by trial.
pub fn assemble_tvnt(features: &[FeatureVector]) -> Result<Vec<(Direction, Dataset)>> {
    single_condition(features)?;
    let trials = trial_count(features);
    Direction::ALL
        .iter()
        .map(|&dir| {
            let mut rows: Vec<&FeatureVector> = features.iter().filter(|f| f.label.direction == dir).collect();
            if rows.len() != trials {
                return Err(Error::invalid(
                    "features",
                    format!("direction {dir} has {} vectors, expected one per trial ({trials})", rows.len()),
                ));
            }
            rows.sort_by_key(|f| f.label.trial_index);
            let samples = rows.iter().map(|f| f.values.clone()).collect();
            let labels = rows.iter().map(|f| usize::from(!f.label.attended)).collect();
            let names = TVNT_CLASSES.iter().map(|s| s.to_string()).collect();
            Ok((dir, Dataset::new(samples, labels, names)?))
        })
        .collect()
}

/// One sample per trial: the trial's three vectors concatenated in
/// Left ‖ Center ‖ Right order, labeled with the attended direction.
pub fn assemble_direction(features: &[FeatureVector]) -> Result<Dataset> {
    single_condition(features)?;
    let mut by_trial: BTreeMap<usize, Vec<&FeatureVector>> = BTreeMap::new();
    for f in features {
        by_trial.entry(f.label.trial_index).or_default().push(f);
    }
    let mut samples = Vec::with_capacity(by_trial.len());
    let mut labels = Vec::with_capacity(by_trial.len());
    for (trial, rows) in by_trial {
        if rows.len() != 3 {
            return Err(Error::invalid("features", format!("trial {trial} has {} stimuli, expected 3", rows.len())));
        }
        let mut sample = Vec::new();
        for dir in Direction::ALL {
            let row = rows
                .iter()
                .find(|f| f.label.direction == dir)
                .ok_or_else(|| Error::invalid("features", format!("trial {trial} has no {dir} stimulus")))?;
            sample.extend_from_slice(&row.values);
        }
        let targets: Vec<_> = rows.iter().filter(|f| f.label.attended).collect();
        if targets.len() != 1 {
            return Err(Error::invalid(
                "features",
                format!("trial {trial} has {} attended stimuli, expected 1", targets.len()),
            ));
        }
        samples.push(sample);
        labels.push(targets[0].label.direction.index());
    }
    let names = Direction::ALL.iter().map(|d| d.to_string()).collect();
    Dataset::new(samples, labels, names)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Target vs non-target within each direction.
    Tvnt,
    /// Attended direction from the concatenated trial.
    Direction,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Tvnt, Task::Direction];

    pub fn title(self) -> &'static str {
        match self {
            Task::Tvnt => "target vs non-target",
            Task::Direction => "target direction",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Tvnt => "tvnt",
            Task::Direction => "direction",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Task> {
        match s.to_ascii_lowercase().as_str() {
            "tvnt" => Ok(Task::Tvnt),
            "direction" => Ok(Task::Direction),
            other => Err(Error::invalid("task", format!("unknown task '{other}' (tvnt | direction)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCv {
    pub name: String,
    pub result: CvResult,
}

/// Evaluation of one task on one condition. For `tvnt` there is one
/// cross-validation per direction and `accuracy` pools their folds
/// (correct / all responses).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEvaluation {
    pub condition: Condition,
    pub task: Task,
    pub accuracy: f64,
    pub results: Vec<NamedCv>,
}

pub fn evaluate_condition(features: &[FeatureVector], task: Task, cfg: &NbcConfig) -> Result<ConditionEvaluation> {
    let condition = single_condition(features)?;
    let results = match task {
        Task::Tvnt => assemble_tvnt(features)?
            .iter()
            .map(|(dir, d)| {
                Ok(NamedCv {
                    name: dir.to_string(),
                    result: loo_cv(d, cfg)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        Task::Direction => vec![NamedCv {
            name: "direction".into(),
            result: loo_cv(&assemble_direction(features)?, cfg)?,
        }],
    };
    let correct: usize = results.iter().map(|r| r.result.correct()).sum();
    let total: usize = results.iter().map(|r| r.result.total()).sum();
    Ok(ConditionEvaluation {
        condition,
        task,
        accuracy: correct as f64 / total as f64,
        results,
    })
}

/// Group a mixed feature table by condition and evaluate each group on its own.
pub fn evaluate_all(features: &[FeatureVector], task: Task, cfg: &NbcConfig) -> Result<Vec<ConditionEvaluation>> {
    let mut groups: BTreeMap<Condition, Vec<FeatureVector>> = BTreeMap::new();
    for f in features {
        groups.entry(f.label.condition).or_default().push(f.clone());
    }
    if groups.is_empty() {
        return Err(Error::invalid("features", "no feature vectors"));
    }
    groups.values().map(|g| evaluate_condition(g, task, cfg)).collect()
}

/// JSON document written by `evaluate` and read by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationFile {
    /// Row label in per-run tables, e.g. `seed #3`.
    pub run: String,
    pub evaluations: Vec<ConditionEvaluation>,
}

impl EvaluationFile {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("evaluation serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<EvaluationFile> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::format(path, format!("{}: {}", e.path(), e.inner())))
    }
}
