//! Experiment configuration: a flat key-value JSON schema shared by config
//! files, CLI overrides, and the provenance sidecar written next to results.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn default_horizon() -> usize {
    10_000
}
fn default_replications() -> usize {
    100
}
fn default_initial_pulls() -> usize {
    10
}
fn default_batch_size() -> usize {
    20
}
fn default_epochs() -> usize {
    5
}
fn default_queue_capacity() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.1
}
fn default_lambda() -> f64 {
    0.25
}
fn default_ab0() -> f64 {
    6.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// "synthetic" | "mushroom" | "jester".
    pub env: String,
    /// Dataset file: the generated binary file for synthetic, the canonical
    /// CSV exports for mushroom/jester.
    pub dataset: String,
    /// "linrs" | "linucb" | "lints" | "oracle".
    pub policy: String,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_initial_pulls")]
    pub initial_pulls: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_queue_capacity")]
    pub queue_capacity: usize,
    #[serde(default)]
    pub immediate_updates: bool,
    /// LinRS aspiration level; defaults per environment (synthetic: the
    /// dataset's aleph_opt, mushroom: 4.0, jester: 2.0).
    #[serde(default)]
    pub aleph: Option<f64>,
    /// LinRS target weight w; defaults 0.1 (synthetic, mushroom) or 0.01
    /// (jester).
    #[serde(default)]
    pub w: Option<f64>,
    /// LinRS reliability learning rate eta; defaults as for w.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_ab0")]
    pub a0: f64,
    #[serde(default = "default_ab0")]
    pub b0: f64,
    #[serde(default)]
    pub jester_feature_cols: Option<Vec<usize>>,
    #[serde(default)]
    pub jester_action_cols: Option<Vec<usize>>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {}", path.display(), e)))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {}", path.display(), e)))
    }

    /// Fills environment-dependent LinRS defaults. `dataset_aleph_opt` is
    /// the aleph recorded in a synthetic dataset header, when known.
    pub fn resolve_defaults(&mut self, dataset_aleph_opt: Option<f64>) {
        let (aleph, w_eta) = match self.env.as_str() {
            "mushroom" => (Some(4.0), 0.1),
            "jester" => (Some(2.0), 0.01),
            _ => (dataset_aleph_opt, 0.1),
        };
        if self.aleph.is_none() {
            self.aleph = aleph;
        }
        self.w.get_or_insert(w_eta);
        self.eta.get_or_insert(w_eta);
    }

    pub fn validate(&self) -> Result<()> {
        match self.env.as_str() {
            "synthetic" | "mushroom" | "jester" => {}
            other => {
                return Err(Error::Config(format!(
                    "env: unknown environment {:?} (expected synthetic, mushroom or jester)",
                    other
                )))
            }
        }
        match self.policy.as_str() {
            "linrs" | "linucb" | "lints" | "oracle" => {}
            other => {
                return Err(Error::Config(format!(
                    "policy: unknown policy {:?} (expected linrs, linucb, lints or oracle)",
                    other
                )))
            }
        }
        if self.horizon == 0 || self.replications == 0 || self.initial_pulls == 0 {
            return Err(Error::Config(
                "horizon, replications and initial_pulls must be >= 1".into(),
            ));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.queue_capacity == 0 {
            return Err(Error::Config(
                "batch_size, epochs and queue_capacity must be >= 1".into(),
            ));
        }
        for (name, value) in [
            ("alpha", self.alpha),
            ("lambda", self.lambda),
            ("a0", self.a0),
            ("b0", self.b0),
        ] {
            if !value.is_finite() {
                return Err(Error::Config(format!("{}: must be finite", name)));
            }
        }
        if self.policy == "linrs" {
            let aleph = self
                .aleph
                .ok_or_else(|| Error::Config("aleph: required for linrs".into()))?;
            if !aleph.is_finite() {
                return Err(Error::Config("aleph: must be finite".into()));
            }
            for (name, value) in [("w", self.w), ("eta", self.eta)] {
                match value {
                    Some(v) if v > 0.0 && v.is_finite() => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "{}: must be a positive finite number",
                            name
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
