//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    /// Class frequencies of the training set.
    #[default]
    Empirical,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbcConfig {
    pub variance_floor: f64,
    pub priors: PriorMode,
}

impl Default for NbcConfig {
    fn default() -> Self {
        NbcConfig {
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            priors: PriorMode::Empirical,
        }
    }
}

/// Per-class priors and per-feature Gaussian parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NbcModel {
    pub class_names: Vec<String>,
    pub log_priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Unbiased sample variances, floored.
    pub variances: Vec<Vec<f64>>,
}

impl NbcModel {
    pub fn priors(&self) -> Vec<f64> {
        self.log_priors.iter().map(|l| l.exp()).collect()
    }

    pub fn dimension(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// `log p(class | x)`, normalized over classes.
    pub log_posteriors: Vec<f64>,
}

pub fn fit_nbc(train: &Dataset, cfg: &NbcConfig) -> Result<NbcModel> {
    train.validate()?;
    if !(cfg.variance_floor > 0.0) {
        return Err(Error::invalid("variance_floor", "must be > 0"));
    }
    let dim = train.dimension();
    let k = train.class_names.len();
    let counts = train.class_counts();
    for (c, &n) in counts.iter().enumerate() {
        if n < 2 {
            return Err(Error::invalid(
                "dataset",
                format!("class '{}' has {n} training samples; at least 2 are required", train.class_names[c]),
            ));
        }
    }
    let mut means = vec![vec![0.0; dim]; k];
    for (x, &y) in train.samples.iter().zip(&train.labels) {
        for (m, v) in means[y].iter_mut().zip(x) {
            *m += v;
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut variances = vec![vec![0.0; dim]; k];
    for (x, &y) in train.samples.iter().zip(&train.labels) {
        for ((s, v), m) in variances[y].iter_mut().zip(x).zip(&means[y]) {
            *s += (v - m) * (v - m);
        }
    }
    for (s, &n) in variances.iter_mut().zip(&counts) {
        s.iter_mut()
            .for_each(|v| *v = (*v / (n - 1) as f64).max(cfg.variance_floor));
    }
    let total = train.samples.len() as f64;
    let log_priors = counts
        .iter()
        .map(|&n| match cfg.priors {
            PriorMode::Empirical => (n as f64 / total).ln(),
            PriorMode::Uniform => (1.0 / k as f64).ln(),
        })
        .collect();
    Ok(NbcModel {
        class_names: train.class_names.clone(),
        log_priors,
        means,
        variances,
    })
}

/// Unnormalized `log p(class) + sum_j log N(x_j; mu, var)` per class.
pub fn log_joint(model: &NbcModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.dimension() {
        return Err(Error::invalid(
            "features",
            format!("dimension {} does not match model dimension {}", x.len(), model.dimension()),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features", "non-finite feature value"));
    }
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    Ok(model
        .log_priors
        .iter()
        .zip(model.means.iter().zip(&model.variances))
        .map(|(lp, (mu, var))| {
            lp + x
                .iter()
                .zip(mu.iter().zip(var))
                .map(|(v, (m, s))| -0.5 * (ln_2pi + s.ln()) - (v - m) * (v - m) / (2.0 * s))
                .sum::<f64>()
        })
        .collect())
}

/// Maximum a-posteriori class; ties go to the lowest class index.
pub fn predict_nbc(model: &NbcModel, x: &[f64]) -> Result<Prediction> {
    let joint = log_joint(model, x)?;
    let mut label = 0;
    for (c, &v) in joint.iter().enumerate() {
        if v > joint[label] {
            label = c;
        }
    }
    let max = joint[label];
    let lse = max + joint.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(Prediction {
        label,
        log_posteriors: joint.iter().map(|v| v - lse).collect(),
    })
}
