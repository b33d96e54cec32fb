//! Mushroom dataset loader and bandit adapter. Rows are one-hot encoded
//! against the fixed category vocabulary observed in the canonical UCI file,
//! which yields exactly d = 117 feature dimensions. Arms: 0 = eat,
//! 1 = do not eat.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bandit::{ContextMatrix, EnvironmentRound};
use crate::env::{seeded_permutation, Environment};
use crate::{Error, Result};

/// Category values observed per attribute in the canonical file, in column
/// order. The one-hot widths sum to 117.
const VOCAB: [(&str, &str); 22] = [
    ("cap-shape", "bcxfks"),
    ("cap-surface", "fgys"),
    ("cap-color", "nbcgrpuewy"),
    ("bruises", "tf"),
    ("odor", "alcyfmnps"),
    ("gill-attachment", "af"),
    ("gill-spacing", "cw"),
    ("gill-size", "bn"),
    ("gill-color", "knbhgropuewy"),
    ("stalk-shape", "et"),
    ("stalk-root", "bcer?"),
    ("stalk-surface-above-ring", "fyks"),
    ("stalk-surface-below-ring", "fyks"),
    ("stalk-color-above-ring", "nbcgopewy"),
    ("stalk-color-below-ring", "nbcgopewy"),
    ("veil-type", "p"),
    ("veil-color", "nowy"),
    ("ring-number", "not"),
    ("ring-type", "eflnp"),
    ("spore-print-color", "knbhrouwy"),
    ("population", "acnsvy"),
    ("habitat", "glmpuwd"),
];

pub const FEATURE_DIM: usize = 117;

pub const REWARD_EAT_EDIBLE: f64 = 5.0;
pub const REWARD_EAT_POISONOUS_GOOD: f64 = 5.0;
pub const REWARD_EAT_POISONOUS_BAD: f64 = -35.0;
/// Expected reward of eating a poisonous mushroom: (5 - 35) / 2.
pub const MEAN_EAT_POISONOUS: f64 = -15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MushroomRow {
    pub edible: bool,
    pub features: Vec<f64>,
}

/// Parses the canonical comma-separated file: class column then 22
/// attribute columns, single-character category symbols.
pub fn load_mushroom(path: &Path) -> Result<Vec<MushroomRow>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open mushroom file {}: {}", path.display(), e)))?;
    load_mushroom_reader(file)
}

pub fn load_mushroom_reader<R: Read>(reader: R) -> Result<Vec<MushroomRow>> {
    let offsets: Vec<usize> = VOCAB
        .iter()
        .scan(0, |acc, (_, values)| {
            let here = *acc;
            *acc += values.len();
            Some(here)
        })
        .collect();
    debug_assert_eq!(
        offsets.last().unwrap() + VOCAB.last().unwrap().1.len(),
        FEATURE_DIM
    );
    let mut rows = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 23 {
            return Err(Error::Data(format!(
                "mushroom row {}: expected 23 columns, found {}",
                lineno + 1,
                cols.len()
            )));
        }
        let edible = match cols[0] {
            "e" => true,
            "p" => false,
            other => {
                return Err(Error::Data(format!(
                    "mushroom row {}: unknown class symbol {:?}",
                    lineno + 1,
                    other
                )))
            }
        };
        let mut features = vec![0.0; FEATURE_DIM];
        for (attr, (&col, &(name, values))) in cols[1..].iter().zip(VOCAB.iter()).enumerate() {
            if col.len() != 1 {
                return Err(Error::Data(format!(
                    "mushroom row {} column {} ({}): expected single symbol, found {:?}",
                    lineno + 1,
                    attr + 2,
                    name,
                    col
                )));
            }
            let symbol = col.chars().next().unwrap();
            match values.find(symbol) {
                Some(pos) => features[offsets[attr] + pos] = 1.0,
                None => {
                    return Err(Error::Data(format!(
                        "mushroom row {} column {} ({}): unknown category symbol {:?}",
                        lineno + 1,
                        attr + 2,
                        name,
                        symbol
                    )))
                }
            }
        }
        rows.push(MushroomRow { edible, features });
    }
    Ok(rows)
}

pub fn class_counts(rows: &[MushroomRow]) -> (usize, usize) {
    let edible = rows.iter().filter(|r| r.edible).count();
    (edible, rows.len() - edible)
}

/// Bandit adapter with a seeded row permutation per replication. Both arms
/// see the same 117-dim context.
pub struct MushroomEnv {
    rows: Arc<Vec<MushroomRow>>,
    order: Vec<usize>,
}

impl MushroomEnv {
    pub fn new(rows: Arc<Vec<MushroomRow>>, shuffle_seed: u64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Data("empty mushroom dataset".into()));
        }
        let order = seeded_permutation(rows.len(), shuffle_seed);
        Ok(MushroomEnv { rows, order })
    }

    fn row(&self, t: usize) -> &MushroomRow {
        &self.rows[self.order[t % self.order.len()]]
    }
}

impl Environment for MushroomEnv {
    fn arms(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        FEATURE_DIM
    }

    fn round(&self, t: usize) -> EnvironmentRound {
        let row = self.row(t);
        let means = if row.edible {
            vec![REWARD_EAT_EDIBLE, 0.0]
        } else {
            vec![MEAN_EAT_POISONOUS, 0.0]
        };
        EnvironmentRound {
            contexts: ContextMatrix::shared(2, &row.features).expect("valid row"),
            true_means: means,
        }
    }

    fn sample_reward(&self, t: usize, arm: usize, rng: &mut ChaCha8Rng) -> f64 {
        if arm == 1 {
            return 0.0; // not eating pays nothing for either class
        }
        let row = self.row(t);
        if row.edible {
            REWARD_EAT_EDIBLE
        } else if rng.random::<f64>() < 0.5 {
            REWARD_EAT_POISONOUS_GOOD
        } else {
            REWARD_EAT_POISONOUS_BAD
        }
    }
}
