use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::entries::EntryProcessSpec;
use crate::error::{invalid, Result};
use crate::scaling::ScalingMap;

/// JSON schema describing [`ExperimentConfig`] documents.
pub const CONFIG_SCHEMA: &str = include_str!("../../data/schema/experiment-config.schema.json");

pub const MIN_TRIALS: usize = 100;
pub const MIN_DISTRIBUTIONAL_M: u32 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EdgeDistribution,
    L1Stationarity,
    ContinuityProbe,
    MomentConvergence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::EdgeDistribution => "edge-distribution",
            ExperimentKind::L1Stationarity => "l1-stationarity",
            ExperimentKind::ContinuityProbe => "continuity-probe",
            ExperimentKind::MomentConvergence => "moment-convergence",
        }
    }

    fn distributional(self) -> bool {
        self != ExperimentKind::MomentConvergence
    }
}

fn default_seed() -> u64 {
    1
}

fn default_j() -> Vec<usize> {
    vec![1]
}

fn default_points() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0]]
}

fn default_deltas() -> Vec<f64> {
    vec![0.5]
}

fn default_mesh() -> Vec<u32> {
    vec![1, 2, 4, 8]
}

fn default_sizes() -> Vec<usize> {
    vec![4]
}

fn default_exponents() -> Vec<usize> {
    vec![1, 2, 3, 4, 5, 6]
}

/// One experiment, as read from a JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub ensemble: EntryProcessSpec,
    /// Second ensemble for a two-sample comparison (edge-distribution only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_ensemble: Option<EntryProcessSpec>,
    /// Scaling parameter; for moment-convergence the size of the large-`N` leg.
    pub m: u32,
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// `(s, t)` points; edge-distribution samples the first one.
    #[serde(default = "default_points")]
    pub query_points: Vec<[f64; 2]>,
    /// Line indices, 1-based.
    #[serde(default = "default_j")]
    pub j: Vec<usize>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Multiples of the corner spacing `1 / (2 M^{2/3})` probed by continuity-probe.
    #[serde(default = "default_mesh")]
    pub mesh_multipliers: Vec<u32>,
    #[serde(default = "default_sizes")]
    pub moment_sizes: Vec<usize>,
    #[serde(default = "default_exponents")]
    pub moment_exponents: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Minimal configuration with defaults for everything optional.
    pub fn new(experiment: ExperimentKind, ensemble: EntryProcessSpec, m: u32, trials: usize) -> Self {
        Self {
            experiment,
            ensemble,
            compare_ensemble: None,
            m,
            trials,
            seed: default_seed(),
            query_points: default_points(),
            j: default_j(),
            deltas: default_deltas(),
            mesh_multipliers: default_mesh(),
            moment_sizes: default_sizes(),
            moment_exponents: default_exponents(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return invalid(format!("trials must be at least {MIN_TRIALS}, got {}", self.trials));
        }
        if self.experiment.distributional() && self.m < MIN_DISTRIBUTIONAL_M {
            return invalid(format!(
                "{} needs M >= {MIN_DISTRIBUTIONAL_M}, got {}",
                self.experiment.name(),
                self.m
            ));
        }
        if self.j.is_empty() || self.j.contains(&0) {
            return invalid("line indices are 1-based and must be non-empty");
        }
        let map = ScalingMap::new(self.m.max(8))?;
        for &[s, t] in &self.query_points {
            if !(s.is_finite() && t.is_finite()) || s < 0.0 {
                return invalid(format!("query point ({s}, {t}) needs finite s >= 0"));
            }
            if self.experiment.distributional() && map.n_real(t).floor() < 3.0 {
                return invalid(format!("query point t = {t} gives a corner smaller than 3"));
            }
        }
        if self.experiment.distributional() && self.query_points.is_empty() {
            return invalid("at least one query point is required");
        }
        if self.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return invalid("deltas must be finite and non-negative");
        }
        if self.experiment == ExperimentKind::L1Stationarity && self.deltas.is_empty() {
            return invalid("l1-stationarity needs at least one delta");
        }
        if self.experiment == ExperimentKind::ContinuityProbe && self.mesh_multipliers.is_empty() {
            return invalid("continuity-probe needs at least one mesh multiplier");
        }
        if self.experiment == ExperimentKind::MomentConvergence
            && (self.moment_sizes.is_empty()
                || self.moment_exponents.is_empty()
                || self.moment_sizes.iter().any(|&n| n < 3)
                || self.moment_exponents.contains(&0))
        {
            return invalid("moment-convergence needs sizes >= 3 and positive exponents");
        }
        if self.compare_ensemble.is_some() && self.experiment != ExperimentKind::EdgeDistribution {
            return invalid("compare_ensemble applies to edge-distribution only");
        }
        Ok(())
    }

    /// Lowercase hex SHA-256 of the canonical serialisation.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }
}
