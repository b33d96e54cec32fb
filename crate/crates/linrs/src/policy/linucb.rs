//! Disjoint-model LinUCB: per-arm ridge estimate plus an
//! alpha-scaled confidence bonus sqrt(x^T A^-1 x).

use crate::bandit::{ContextMatrix, Policy};
use crate::numerics::{argmax, dot, GramMatrix};

pub struct LinUcb {
    arms: usize,
    dim: usize,
    alpha: f64,
    batch_size: usize,
    a_inv: Vec<GramMatrix>,
    b: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    pending: Vec<(Vec<f64>, usize, f64)>,
}

impl LinUcb {
    pub fn new(arms: usize, dim: usize, alpha: f64, batch_size: usize) -> Self {
        assert!(arms > 0 && dim > 0 && batch_size >= 1);
        assert!(alpha >= 0.0 && alpha.is_finite());
        LinUcb {
            arms,
            dim,
            alpha,
            batch_size,
            a_inv: vec![GramMatrix::identity(dim); arms],
            b: vec![vec![0.0; dim]; arms],
            theta: vec![vec![0.0; dim]; arms],
            pending: Vec::with_capacity(batch_size),
        }
    }

    pub fn theta(&self, arm: usize) -> &[f64] {
        &self.theta[arm]
    }

    /// theta_a . x_a + alpha sqrt(x_a^T A_a^-1 x_a) for every arm.
    pub fn ucb_values(&self, contexts: &ContextMatrix) -> Vec<f64> {
        (0..self.arms)
            .map(|a| {
                let x = contexts.row(a);
                let bonus = self.a_inv[a].quadratic_form(x).expect("dims").max(0.0).sqrt();
                dot(&self.theta[a], x) + self.alpha * bonus
            })
            .collect()
    }

    fn flush(&mut self) {
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
    }
}

impl Policy for LinUcb {
    fn select(&mut self, contexts: &ContextMatrix) -> usize {
        argmax(&self.ucb_values(contexts))
    }

    fn observe(&mut self, contexts: &ContextMatrix, arm: usize, reward: f64) {
        self.pending.push((contexts.row(arm).to_vec(), arm, reward));
        if self.pending.len() >= self.batch_size {
            self.flush();
        }
    }

    fn greedy_arm(&self, contexts: &ContextMatrix) -> usize {
        let values: Vec<f64> = (0..self.arms)
            .map(|a| dot(&self.theta[a], contexts.row(a)))
            .collect();
        argmax(&values)
    }

    fn reset(&mut self, _seed: u64) {
        *self = LinUcb::new(self.arms, self.dim, self.alpha, self.batch_size);
    }

    fn name(&self) -> &'static str {
        "linucb"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::solve;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ctx(rows: Vec<Vec<f64>>) -> ContextMatrix {
        let arms = rows.len();
        let dim = rows[0].len();
        ContextMatrix::new(arms, dim, rows.into_iter().flatten().collect()).unwrap()
    }

    #[test]
    fn alpha_zero_reduces_to_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = LinUcb::new(3, 2, 0.0, 1);
        let c = ctx((0..3).map(|_| vec![rng.random(), rng.random()]).collect());
        for _ in 0..20 {
            let arm = rng.random_range(0..3);
            p.observe(&c, arm, rng.random::<f64>());
        }
        assert_eq!(p.select(&c), p.greedy_arm(&c));
    }

    #[test]
    fn alpha_zero_agrees_with_linrs_greedy_on_shared_state() {
        // same observation stream -> same (A, b) -> same greedy arm
        use crate::policy::{LinRs, LinRsParams};
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let arms = 4;
            let dim = 3;
            let mut ucb = LinUcb::new(arms, dim, 0.0, 1);
            let params = LinRsParams { immediate_updates: true, ..Default::default() };
            let mut rs = LinRs::new(arms, dim, params, 0);
            for _ in 0..30 {
                let c = ctx((0..arms)
                    .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
                    .collect());
                let arm = rng.random_range(0..arms);
                let r = rng.random::<f64>();
                ucb.observe(&c, arm, r);
                rs.observe(&c, arm, r);
            }
            let c = ctx((0..arms)
                .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
                .collect());
            assert_eq!(ucb.select(&c), rs.greedy_arm(&c));
            assert_eq!(ucb.greedy_arm(&c), rs.greedy_arm(&c));
        }
    }

    #[test]
    fn identity_gram_unit_vector_bonus_is_alpha() {
        let p = LinUcb::new(2, 2, 0.7, 20);
        let c = ctx(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let values = p.ucb_values(&c);
        // theta = 0, x^T I x = 1
        assert_abs_diff_eq!(values[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(values[1], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn bonus_matches_explicit_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dim = 5;
        let mut p = LinUcb::new(1, dim, 1.0, 1);
        let mut a = GramMatrix::identity(dim);
        for _ in 0..25 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let c = ctx(vec![x.clone()]);
            p.observe(&c, 0, rng.random::<f64>());
            a.add_outer(&x).unwrap();
        }
        let q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let c = ctx(vec![q.clone()]);
        let got = p.ucb_values(&c)[0] - dot(p.theta(0), &q);
        // oracle: A^-1 q via dense solve, then q . (A^-1 q)
        let inv_q = solve(&a, &q).unwrap();
        let want = dot(&q, &inv_q).sqrt();
        assert_abs_diff_eq!(got, want, epsilon = 1e-9);
    }

    #[test]
    fn theta_is_ridge_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dim = 3;
        let mut p = LinUcb::new(1, dim, 0.1, 4);
        let mut a = GramMatrix::identity(dim);
        let mut b = vec![0.0; dim];
        for _ in 0..40 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let r = rng.random::<f64>();
            p.observe(&ctx(vec![x.clone()]), 0, r);
            a.add_outer(&x).unwrap();
            for (bi, xi) in b.iter_mut().zip(&x) {
                *bi += r * xi;
            }
        }
        let want = solve(&a, &b).unwrap();
        for (t, w) in p.theta(0).iter().zip(&want) {
            assert_abs_diff_eq!(t, w, epsilon = 1e-9);
        }
    }
}
