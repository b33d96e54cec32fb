//! Jester dataset loader and bandit adapter: 40 joke ratings per user,
//! split into 32 feature ratings and 8 action ratings. Rows with any
//! missing rating among the 40 are dropped. Rewards are the deterministic
//! ratings of the action jokes.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::bandit::{ContextMatrix, EnvironmentRound};
use crate::env::{seeded_permutation, Environment};
use crate::{Error, Result};

/// Conventional missing-rating marker in Jester exports.
pub const MISSING_MARKER: f64 = 99.0;
const RATING_MAX: f64 = 10.0;
const ROUNDING_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct JesterColumns {
    pub features: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Default for JesterColumns {
    /// First 32 rating columns as features, last 8 as actions.
    fn default() -> Self {
        JesterColumns {
            features: (0..32).collect(),
            actions: (32..40).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JesterRow {
    pub features: Vec<f64>,
    pub actions: Vec<f64>,
}

pub fn load_jester(path: &Path, columns: &JesterColumns) -> Result<Vec<JesterRow>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open jester file {}: {}", path.display(), e)))?;
    load_jester_reader(file, columns)
}

pub fn load_jester_reader<R: Read>(reader: R, columns: &JesterColumns) -> Result<Vec<JesterRow>> {
    let needed = columns
        .features
        .iter()
        .chain(&columns.actions)
        .max()
        .copied()
        .map_or(0, |m| m + 1);
    let mut rows = Vec::new();
    'row: for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < needed {
            return Err(Error::Data(format!(
                "jester row {}: expected at least {} columns, found {}",
                lineno + 1,
                needed,
                cols.len()
            )));
        }
        let mut ratings = Vec::with_capacity(needed);
        for (i, raw) in cols[..needed].iter().enumerate() {
            let raw = raw.trim();
            if raw.is_empty() {
                continue 'row; // missing rating: drop the row
            }
            let value: f64 = raw.parse().map_err(|_| {
                Error::Data(format!(
                    "jester row {} column {}: cannot parse rating {:?}",
                    lineno + 1,
                    i + 1,
                    raw
                ))
            })?;
            if value == MISSING_MARKER {
                continue 'row;
            }
            if value.abs() > RATING_MAX + ROUNDING_SLACK {
                return Err(Error::Data(format!(
                    "jester row {} column {}: rating {} outside [-10, 10]",
                    lineno + 1,
                    i + 1,
                    value
                )));
            }
            ratings.push(value.clamp(-RATING_MAX, RATING_MAX));
        }
        rows.push(JesterRow {
            features: columns.features.iter().map(|&i| ratings[i]).collect(),
            actions: columns.actions.iter().map(|&i| ratings[i]).collect(),
        });
    }
    Ok(rows)
}

/// Bandit adapter with a seeded row permutation; all 8 arms see the same
/// 32-dim context and rewards are the deterministic action ratings.
pub struct JesterEnv {
    rows: Arc<Vec<JesterRow>>,
    order: Vec<usize>,
    arms: usize,
    dim: usize,
}

impl JesterEnv {
    pub fn new(rows: Arc<Vec<JesterRow>>, shuffle_seed: u64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Data("empty jester dataset".into()));
        }
        let arms = rows[0].actions.len();
        let dim = rows[0].features.len();
        let order = seeded_permutation(rows.len(), shuffle_seed);
        Ok(JesterEnv {
            rows,
            order,
            arms,
            dim,
        })
    }

    fn row(&self, t: usize) -> &JesterRow {
        &self.rows[self.order[t % self.order.len()]]
    }
}

impl Environment for JesterEnv {
    fn arms(&self) -> usize {
        self.arms
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn round(&self, t: usize) -> EnvironmentRound {
        let row = self.row(t);
        EnvironmentRound {
            contexts: ContextMatrix::shared(self.arms, &row.features).expect("valid row"),
            true_means: row.actions.clone(),
        }
    }

    fn sample_reward(&self, t: usize, arm: usize, _rng: &mut ChaCha8Rng) -> f64 {
        self.row(t).actions[arm]
    }
}
