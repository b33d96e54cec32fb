//! LinTS: Thompson sampling with conjugate Bayesian linear regression per
//! arm. The noise variance is drawn from an inverse-gamma posterior and the
//! weights from N(mu_a, sigma^2 (lambda I + X^T X)^-1). The covariance is
//! factored afresh for every draw, as reference implementations of
//! multivariate-normal sampling do.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::bandit::{ContextMatrix, Policy};
use crate::numerics::{argmax, dot, GramMatrix};

const B_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct LinTsParams {
    pub lambda: f64,
    pub a0: f64,
    pub b0: f64,
    pub batch_size: usize,
}

impl Default for LinTsParams {
    fn default() -> Self {
        LinTsParams {
            lambda: 0.25,
            a0: 6.0,
            b0: 6.0,
            batch_size: 20,
        }
    }
}

struct ArmModel {
    precision: GramMatrix, // lambda I + X^T X
    xr: Vec<f64>,          // X^T r
    rr: f64,               // r^T r
    samples: u64,
    mu: Vec<f64>,
    a_t: f64,
    b_t: f64,
}

impl ArmModel {
    fn new(dim: usize, params: &LinTsParams) -> Self {
        ArmModel {
            precision: GramMatrix::scaled_identity(dim, params.lambda),
            xr: vec![0.0; dim],
            rr: 0.0,
            samples: 0,
            mu: vec![0.0; dim],
            a_t: params.a0,
            b_t: params.b0,
        }
    }

    fn refresh_posterior(&mut self, params: &LinTsParams) {
        self.mu = self
            .precision
            .cholesky()
            .and_then(|f| f.solve(&self.xr))
            .expect("precision stays SPD");
        self.a_t = params.a0 + self.samples as f64 / 2.0;
        // mu^T P mu == mu . xr since P mu = xr
        let quad = dot(&self.mu, &self.xr);
        self.b_t = (params.b0 + (self.rr - quad) / 2.0).max(B_FLOOR);
    }
}

pub struct LinTs {
    arms: usize,
    dim: usize,
    params: LinTsParams,
    models: Vec<ArmModel>,
    pending: Vec<(Vec<f64>, usize, f64)>,
    rng: ChaCha8Rng,
    /// Multiplier on the sampled posterior scale; 1.0 in normal operation,
    /// 0.0 degenerates sampling to the posterior mean (test hook).
    pub variance_scale: f64,
}

impl LinTs {
    pub fn new(arms: usize, dim: usize, params: LinTsParams, seed: u64) -> Self {
        assert!(arms > 0 && dim > 0 && params.batch_size >= 1);
        assert!(params.lambda > 0.0 && params.a0 > 0.0 && params.b0 > 0.0);
        LinTs {
            arms,
            dim,
            models: (0..arms).map(|_| ArmModel::new(dim, &params)).collect(),
            pending: Vec::with_capacity(params.batch_size),
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            variance_scale: 1.0,
        }
    }

    pub fn mu(&self, arm: usize) -> &[f64] {
        &self.models[arm].mu
    }

    pub fn posterior_shape_rate(&self, arm: usize) -> (f64, f64) {
        (self.models[arm].a_t, self.models[arm].b_t)
    }

    fn flush(&mut self) {
        let pending = std::mem::take(&mut self.pending);
        for (x, arm, reward) in &pending {
            let m = &mut self.models[*arm];
            m.precision.add_outer(x).expect("dims");
            for (xi, v) in m.xr.iter_mut().zip(x) {
                *xi += reward * v;
            }
            m.rr += reward * reward;
            m.samples += 1;
        }
        for (_, arm, _) in &pending {
            let params = self.params;
            self.models[*arm].refresh_posterior(&params);
        }
    }

    /// One posterior draw of theta for an arm: sigma^2 ~ InvGamma(a_t, b_t),
    /// theta ~ N(mu, sigma^2 P^-1) via L^-T xi with P = L L^T.
    fn sample_theta(&mut self, arm: usize) -> Vec<f64> {
        let m = &self.models[arm];
        let gamma = Gamma::new(m.a_t, 1.0 / m.b_t).expect("valid shape/scale");
        let sigma2: f64 = 1.0 / gamma.sample(&mut self.rng);
        let sigma = (sigma2.max(0.0)).sqrt() * self.variance_scale;
        let factor = m.precision.cholesky().expect("precision stays SPD");
        let xi: Vec<f64> = (0..self.dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                z
            })
            .collect();
        let noise = factor.solve_transposed(&xi).expect("dims");
        m.mu.iter().zip(noise).map(|(mi, ni)| mi + sigma * ni).collect()
    }
}

impl Policy for LinTs {
    fn select(&mut self, contexts: &ContextMatrix) -> usize {
        let values: Vec<f64> = (0..self.arms)
            .map(|a| {
                let theta = self.sample_theta(a);
                dot(&theta, contexts.row(a))
            })
            .collect();
        argmax(&values)
    }

    fn observe(&mut self, contexts: &ContextMatrix, arm: usize, reward: f64) {
        self.pending.push((contexts.row(arm).to_vec(), arm, reward));
        if self.pending.len() >= self.params.batch_size {
            self.flush();
        }
    }

    fn greedy_arm(&self, contexts: &ContextMatrix) -> usize {
        let values: Vec<f64> = (0..self.arms)
            .map(|a| dot(&self.models[a].mu, contexts.row(a)))
            .collect();
        argmax(&values)
    }

    fn reset(&mut self, seed: u64) {
        *self = LinTs::new(self.arms, self.dim, self.params, seed);
    }

    fn name(&self) -> &'static str {
        "lints"
    }
}
