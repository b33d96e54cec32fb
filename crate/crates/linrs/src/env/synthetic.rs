//! Synthetic contextual-bandit data: per-arm linear-sigmoid reward means
//! over uniform [0,1] contexts, filtered so that the optimal aspiration
//! level is a known constant (p_first > aleph_opt > p_second on every row).

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal};

use crate::bandit::{ContextMatrix, EnvironmentRound};
use crate::env::Environment;
use crate::numerics::sigmoid;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"LRSD";
const VERSION: u32 = 1;
/// Generation gives up when the acceptance rate stays below this after
/// `INFEASIBLE_DRAWS` candidate rows.
const INFEASIBLE_RATE: f64 = 1e-6;
const INFEASIBLE_DRAWS: u64 = 10_000_000;
const MAX_PARAM_REDRAWS: usize = 5_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub arms: usize,
    /// Per-coordinate variance of the reward-model parameters.
    pub sigma: f64,
    pub noise_var: f64,
    pub aleph_opt: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            dim: 128,
            arms: 8,
            sigma: 0.01,
            noise_var: 0.1,
            aleph_opt: 0.5,
            n: 50_000,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.arms < 2 {
            return Err(Error::Config("synthetic spec needs d >= 1, k >= 2".into()));
        }
        if !(self.sigma > 0.0) || !(self.noise_var > 0.0) {
            return Err(Error::Config("sigma and noise variance must be positive".into()));
        }
        if !(self.aleph_opt > 0.0 && self.aleph_opt < 1.0) {
            return Err(Error::Config("aleph_opt must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// One dataset row: k contexts of dimension d plus the k true means.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub contexts: Vec<f64>, // arms * dim, row-major
    pub means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredDataset {
    pub spec: SyntheticSpec,
    /// Reward-model parameters actually used (after any infeasibility
    /// redraws), one d-vector per arm.
    pub params: Vec<Vec<f64>>,
    pub rows: Vec<Row>,
    pub acceptance_rate: f64,
}

/// k independent d-dimensional Gaussians with per-coordinate variance sigma.
pub fn sample_parameters(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, spec.sigma.sqrt()).expect("positive sigma");
    (0..spec.arms)
        .map(|_| (0..spec.dim).map(|_| normal.sample(rng)).collect())
        .collect()
}

/// p_a = sigmoid(x_a . theta_a + eps) with one shared eps per round.
pub fn true_means(contexts: &[f64], params: &[Vec<f64>], noise_draw: f64) -> Vec<f64> {
    let dim = params[0].len();
    params
        .iter()
        .enumerate()
        .map(|(a, theta)| {
            let x = &contexts[a * dim..(a + 1) * dim];
            sigmoid(crate::numerics::dot(x, theta) + noise_draw)
        })
        .collect()
}

fn first_second(means: &[f64]) -> (f64, f64) {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &m in means {
        if m > first {
            second = first;
            first = m;
        } else if m > second {
            second = m;
        }
    }
    (first, second)
}

/// Monte-Carlo estimate of the bracket acceptance rate for a fixed
/// parameter set: draws trial rows and counts how many satisfy
/// p_first > aleph_opt > p_second. Used only to reject parameter draws that
/// would make generation infeasible; the actual filter below stays exact.
/// Sized so a rate at min_rate yields ~16 expected hits.
fn estimate_acceptance(
    spec: &SyntheticSpec,
    params: &[Vec<f64>],
    min_rate: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let noise = Normal::new(0.0, spec.noise_var.sqrt()).expect("positive noise variance");
    let trials = ((16.0 / min_rate) as usize).clamp(400, 400_000);
    let mut hits = 0usize;
    for t in 1..=trials {
        let contexts: Vec<f64> = (0..spec.arms * spec.dim)
            .map(|_| rng.random::<f64>())
            .collect();
        let eps = noise.sample(rng);
        let means = true_means(&contexts, params, eps);
        let (first, second) = first_second(&means);
        if first > spec.aleph_opt && spec.aleph_opt > second {
            hits += 1;
            // enough evidence that the rate clears min_rate
            if hits >= 16 && hits as f64 / t as f64 >= min_rate {
                return hits as f64 / t as f64;
            }
        }
    }
    hits as f64 / trials as f64
}

/// Builds a filtered dataset for the spec. Draws one parameter set, then
/// keeps drawing uniform contexts and a shared noise term until n rows pass
/// the strict bracket p_first > aleph_opt > p_second. The parameter set is
/// redrawn when its estimated acceptance rate would make generation
/// infeasible for the requested n.
pub fn build_filtered_dataset(spec: &SyntheticSpec) -> Result<FilteredDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let min_rate = (spec.n as f64 / 2e6).max(1e-4);
    let mut params = sample_parameters(spec, &mut rng);
    let mut redraws = 0usize;
    while estimate_acceptance(spec, &params, min_rate, &mut rng) < min_rate {
        redraws += 1;
        if redraws > MAX_PARAM_REDRAWS {
            return Err(Error::Data(format!(
                "dataset generation infeasible for sigma = {}, aleph_opt = {}: no parameter draw \
                 reaches an estimated acceptance rate of {:.1e}",
                spec.sigma, spec.aleph_opt, min_rate
            )));
        }
        params = sample_parameters(spec, &mut rng);
    }

    let noise = Normal::new(0.0, spec.noise_var.sqrt()).expect("positive noise variance");
    let mut rows = Vec::with_capacity(spec.n);
    let mut attempts: u64 = 0;
    while rows.len() < spec.n {
        attempts += 1;
        let contexts: Vec<f64> = (0..spec.arms * spec.dim)
            .map(|_| rng.random::<f64>())
            .collect();
        let eps = noise.sample(&mut rng);
        let means = true_means(&contexts, &params, eps);
        let (first, second) = first_second(&means);
        if first > spec.aleph_opt && spec.aleph_opt > second {
            rows.push(Row { contexts, means });
        }
        if attempts % INFEASIBLE_DRAWS == 0 {
            let rate = rows.len() as f64 / attempts as f64;
            if rate < INFEASIBLE_RATE {
                return Err(Error::Data(format!(
                    "dataset generation infeasible for sigma = {}, aleph_opt = {}: acceptance \
                     rate {:.2e} after {} draws",
                    spec.sigma, spec.aleph_opt, rate, attempts
                )));
            }
        }
    }
    let acceptance_rate = if attempts == 0 {
        0.0
    } else {
        rows.len() as f64 / attempts as f64
    };
    Ok(FilteredDataset {
        spec: spec.clone(),
        params,
        rows,
        acceptance_rate,
    })
}

// --- binary persistence, bit-exact round trip ---

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn write_dataset(path: &Path, ds: &FilteredDataset) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(ds.spec.dim as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.spec.arms as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.rows.len() as u64).to_le_bytes());
    buf.extend_from_slice(&ds.spec.seed.to_le_bytes());
    put_f64(&mut buf, ds.spec.aleph_opt);
    put_f64(&mut buf, ds.spec.sigma);
    put_f64(&mut buf, ds.spec.noise_var);
    put_f64(&mut buf, ds.acceptance_rate);
    for theta in &ds.params {
        for &v in theta {
            put_f64(&mut buf, v);
        }
    }
    for row in &ds.rows {
        for &v in &row.contexts {
            put_f64(&mut buf, v);
        }
        for &v in &row.means {
            put_f64(&mut buf, v);
        }
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.inner.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
}

pub fn read_dataset(path: &Path) -> Result<FilteredDataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open dataset {}: {}", path.display(), e)))?;
    let mut r = Reader {
        inner: BufReader::new(file),
    };
    let mut magic = [0u8; 4];
    r.inner.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data(format!("{} is not a dataset file", path.display())));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Data(format!("unsupported dataset version {}", version)));
    }
    let dim = r.u32()? as usize;
    let arms = r.u32()? as usize;
    let n = r.u64()? as usize;
    let seed = r.u64()?;
    let aleph_opt = r.f64()?;
    let sigma = r.f64()?;
    let noise_var = r.f64()?;
    let acceptance_rate = r.f64()?;
    let mut params = Vec::with_capacity(arms);
    for _ in 0..arms {
        let mut theta = Vec::with_capacity(dim);
        for _ in 0..dim {
            theta.push(r.f64()?);
        }
        params.push(theta);
    }
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut contexts = Vec::with_capacity(arms * dim);
        for _ in 0..arms * dim {
            contexts.push(r.f64()?);
        }
        let mut means = Vec::with_capacity(arms);
        for _ in 0..arms {
            means.push(r.f64()?);
        }
        rows.push(Row { contexts, means });
    }
    Ok(FilteredDataset {
        spec: SyntheticSpec {
            dim,
            arms,
            sigma,
            noise_var,
            aleph_opt,
            n,
            seed,
        },
        params,
        rows,
        acceptance_rate,
    })
}

/// Bandit adapter: rows consumed in order, wrapping when the horizon
/// exceeds the dataset; rewards are Bernoulli(p_a).
pub struct SyntheticEnv {
    dataset: Arc<FilteredDataset>,
}

impl SyntheticEnv {
    pub fn new(dataset: Arc<FilteredDataset>) -> Result<Self> {
        if dataset.rows.is_empty() {
            return Err(Error::Data("empty synthetic dataset".into()));
        }
        Ok(SyntheticEnv { dataset })
    }
}

impl Environment for SyntheticEnv {
    fn arms(&self) -> usize {
        self.dataset.spec.arms
    }

    fn dim(&self) -> usize {
        self.dataset.spec.dim
    }

    fn round(&self, t: usize) -> EnvironmentRound {
        let row = &self.dataset.rows[t % self.dataset.rows.len()];
        EnvironmentRound {
            contexts: ContextMatrix::new(
                self.dataset.spec.arms,
                self.dataset.spec.dim,
                row.contexts.clone(),
            )
            .expect("dataset rows are valid"),
            true_means: row.means.clone(),
        }
    }

    fn sample_reward(&self, t: usize, arm: usize, rng: &mut ChaCha8Rng) -> f64 {
        let p = self.dataset.rows[t % self.dataset.rows.len()].means[arm];
        Bernoulli::new(p.clamp(0.0, 1.0))
            .expect("p in [0,1]")
            .sample(rng) as u8 as f64
    }
}
