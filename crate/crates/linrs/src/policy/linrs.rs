//! LinRS: linear risk-sensitive satisficing.
//!
//! Keeps a per-arm ridge model (A_a, b_a, theta_a) for the action value and a
//! multiclass logistic-regression model phi for the reliability estimate. The
//! value of arm a is softmax(phi_a . x_a) * (theta_a . x_a - aleph) and the
//! policy pulls its argmax.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bandit::{ContextMatrix, Policy};
use crate::numerics::{argmax, dot, softmax, GramMatrix};
use crate::{Error, Result};

/// One recorded experience: the round's contexts, the pulled arm, and the
/// per-arm selection-ratio baseline rho_a = c_a / t snapshotted at record
/// time.
#[derive(Debug, Clone)]
pub struct Experience {
    pub contexts: ContextMatrix,
    pub arm: usize,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LinRsParams {
    pub aleph: f64,
    pub target_weight: f64, // w
    pub learning_rate: f64, // eta
    pub batch_size: usize,
    pub epochs: usize,
    pub queue_capacity: usize,
    /// Apply A/b updates every observation instead of every batch_size
    /// observations (sensitivity mode; the batched path is the default).
    pub immediate_updates: bool,
}

impl Default for LinRsParams {
    fn default() -> Self {
        LinRsParams {
            aleph: 0.5,
            target_weight: 0.1,
            learning_rate: 0.1,
            batch_size: 20,
            epochs: 5,
            queue_capacity: 100,
            immediate_updates: false,
        }
    }
}

pub struct LinRs {
    arms: usize,
    dim: usize,
    params: LinRsParams,
    a_inv: Vec<GramMatrix>,
    b: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    counts: Vec<u64>,
    decisions: u64,
    pending: Vec<(Vec<f64>, usize, f64)>,
    queue: VecDeque<Experience>,
    rng: ChaCha8Rng,
}

impl LinRs {
    pub fn new(arms: usize, dim: usize, params: LinRsParams, seed: u64) -> Self {
        assert!(arms > 0 && dim > 0);
        assert!(params.batch_size >= 1 && params.epochs >= 1 && params.queue_capacity >= 1);
        LinRs {
            arms,
            dim,
            a_inv: vec![GramMatrix::identity(dim); arms],
            b: vec![vec![0.0; dim]; arms],
            theta: vec![vec![0.0; dim]; arms],
            // phi starts at zero: uniform initial softmax, so the first
            // decisions depend only on theta and aleph
            phi: vec![vec![0.0; dim]; arms],
            counts: vec![0; arms],
            decisions: 0,
            pending: Vec::with_capacity(params.batch_size),
            queue: VecDeque::with_capacity(params.queue_capacity),
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn selection_count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn theta(&self, arm: usize) -> &[f64] {
        &self.theta[arm]
    }

    pub fn phi(&self, arm: usize) -> &[f64] {
        &self.phi[arm]
    }

    /// f_a = softmax(phi_a . x_a) * (theta_a . x_a - aleph) for every arm.
    pub fn values(&self, contexts: &ContextMatrix) -> Result<Vec<f64>> {
        if contexts.arms() != self.arms || contexts.dim() != self.dim {
            return Err(Error::Dimension("context shape mismatch".into()));
        }
        let logits: Vec<f64> = (0..self.arms)
            .map(|a| dot(&self.phi[a], contexts.row(a)))
            .collect();
        let reliability = softmax(&logits)?;
        Ok((0..self.arms)
            .map(|a| reliability[a] * (dot(&self.theta[a], contexts.row(a)) - self.params.aleph))
            .collect())
    }

    fn flush(&mut self) {
        // reward statistics first, in arrival order
        let pending = std::mem::take(&mut self.pending);
        for (x, arm, reward) in &pending {
            self.a_inv[*arm].sherman_morrison_update(x).expect("SPD update");
            for (bi, xi) in self.b[*arm].iter_mut().zip(x) {
                *bi += reward * xi;
            }
        }
        for (_, arm, _) in &pending {
            self.theta[*arm] = self.a_inv[*arm].mul_vec(&self.b[*arm]).expect("dims");
        }
        // reliability: E epochs over the queue in freshly shuffled chunks
        if self.queue.is_empty() {
            return;
        }
        let n = self.queue.len();
        let mut order: Vec<usize> = (0..n).collect();
        // flat scratch buffers; the inner loop runs E * Q times per flush and
        // must not allocate
        let w = self.params.target_weight;
        let mut grad = vec![0.0; self.arms * self.dim];
        let mut probs = vec![0.0; self.arms];
        for _ in 0..self.params.epochs {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(self.params.batch_size) {
                grad.fill(0.0);
                for &idx in chunk {
                    let exp = &self.queue[idx];
                    let mut max = f64::NEG_INFINITY;
                    for (a, p) in probs.iter_mut().enumerate() {
                        *p = dot(&self.phi[a], exp.contexts.row(a));
                        max = max.max(*p);
                    }
                    let mut sum = 0.0;
                    for p in probs.iter_mut() {
                        *p = (*p - max).exp();
                        sum += *p;
                    }
                    for (a, ga) in grad.chunks_mut(self.dim).enumerate() {
                        let u = (a == exp.arm) as u8 as f64;
                        let y = (w * u + exp.rho[a]) / (w + 1.0);
                        let coeff = probs[a] / sum - y;
                        for (gi, xi) in ga.iter_mut().zip(exp.contexts.row(a)) {
                            *gi += coeff * xi;
                        }
                    }
                }
                let scale = self.params.learning_rate / chunk.len() as f64;
                for (pa, ga) in self.phi.iter_mut().zip(grad.chunks(self.dim)) {
                    for (pi, gi) in pa.iter_mut().zip(ga) {
                        *pi -= scale * gi;
                    }
                }
            }
        }
    }
}

/// Cross-entropy loss -sum_a y_a ln n_a of the reliability model on one
/// experience, and its gradient with respect to each phi_a. The Eq.-style
/// update phi_a += eta (y_a - n_a) x_a is one gradient-descent step on this
/// loss (the gradient is (n_a - y_a) x_a).
pub fn reliability_loss_and_grad(
    phi: &[Vec<f64>],
    contexts: &ContextMatrix,
    arm: usize,
    rho: &[f64],
    w: f64,
) -> (f64, Vec<Vec<f64>>) {
    let arms = phi.len();
    let logits: Vec<f64> = (0..arms).map(|a| dot(&phi[a], contexts.row(a))).collect();
    let n = softmax(&logits).expect("finite logits");
    let mut loss = 0.0;
    let mut grad = vec![vec![0.0; contexts.dim()]; arms];
    for a in 0..arms {
        let u = (a == arm) as u8 as f64;
        let y = (w * u + rho[a]) / (w + 1.0);
        loss -= y * n[a].ln();
        let coeff = n[a] - y;
        for (gi, xi) in grad[a].iter_mut().zip(contexts.row(a)) {
            *gi = coeff * xi;
        }
    }
    (loss, grad)
}

impl Policy for LinRs {
    fn select(&mut self, contexts: &ContextMatrix) -> usize {
        let values = self.values(contexts).expect("valid contexts");
        argmax(&values)
    }

    fn observe(&mut self, contexts: &ContextMatrix, arm: usize, reward: f64) {
        self.decisions += 1;
        self.counts[arm] += 1;
        let t = self.decisions as f64;
        let rho: Vec<f64> = self.counts.iter().map(|&c| c as f64 / t).collect();
        if self.queue.len() == self.params.queue_capacity {
            self.queue.pop_front();
        }
        self.queue.push_back(Experience {
            contexts: contexts.clone(),
            arm,
            rho,
        });
        self.pending
            .push((contexts.row(arm).to_vec(), arm, reward));
        if self.params.immediate_updates || self.pending.len() >= self.params.batch_size {
            self.flush();
        }
    }

    fn greedy_arm(&self, contexts: &ContextMatrix) -> usize {
        let values: Vec<f64> = (0..self.arms)
            .map(|a| dot(&self.theta[a], contexts.row(a)))
            .collect();
        argmax(&values)
    }

    fn reset(&mut self, seed: u64) {
        *self = LinRs::new(self.arms, self.dim, self.params.clone(), seed);
    }

    fn name(&self) -> &'static str {
        "linrs"
    }
}
