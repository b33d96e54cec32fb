//! Tabular risk-sensitive satisficing: the RS value function, the optimal
//! aspiration level, and a greedy RS policy over stationary Bernoulli arms.
//! Serves as the reference for satisficing behavior and for aleph_opt
//! computation when building synthetic datasets.

use crate::{Error, Result};

/// Per-arm counts, running means, and the aspiration level.
#[derive(Debug, Clone)]
pub struct RsTable {
    counts: Vec<u64>,
    total: u64,
    means: Vec<f64>,
    aleph: f64,
}

impl RsTable {
    /// Fresh table; callers are expected to try each arm once before
    /// applying the RS value (counts start at zero).
    pub fn new(arms: usize, aleph: f64) -> Self {
        RsTable {
            counts: vec![0; arms],
            total: 0,
            means: vec![0.0; arms],
            aleph,
        }
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    /// Record one pull, updating the running mean incrementally.
    pub fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.total += 1;
        let n = self.counts[arm] as f64;
        self.means[arm] += (reward - self.means[arm]) / n;
    }

    /// RS_a = (n_a / N)(E_a - aleph).
    pub fn rs_value(&self, arm: usize) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::Config("RS value undefined before any trial".into()));
        }
        let ratio = self.counts[arm] as f64 / self.total as f64;
        Ok(ratio * (self.means[arm] - self.aleph))
    }

    pub fn rs_values(&self) -> Result<Vec<f64>> {
        (0..self.arms()).map(|a| self.rs_value(a)).collect()
    }

    /// One greedy RS step: choose argmax RS_a, draw a reward, update counts
    /// and the running mean. Returns the chosen arm.
    pub fn policy_step<F: FnMut(usize) -> f64>(&mut self, mut reward_sampler: F) -> Result<usize> {
        let values = self.rs_values()?;
        let arm = crate::numerics::argmax(&values);
        let reward = reward_sampler(arm);
        self.record(arm, reward);
        Ok(arm)
    }
}

/// aleph_opt = midpoint of the largest and second-largest true means.
pub fn aleph_opt(means: &[f64]) -> Result<f64> {
    if means.len() < 2 {
        return Err(Error::Dimension(
            "aleph_opt needs at least two arm means".into(),
        ));
    }
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
    Ok((first + second) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table_with(counts: &[u64], means: &[f64], aleph: f64) -> RsTable {
        let mut t = RsTable::new(counts.len(), aleph);
        t.counts = counts.to_vec();
        t.total = counts.iter().sum();
        t.means = means.to_vec();
        t
    }

    #[test]
    fn rs_value_direct_arithmetic() {
        let t = table_with(&[5, 5], &[0.7, 0.1], 0.5);
        assert_abs_diff_eq!(t.rs_value(0).unwrap(), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn rs_value_zero_when_mean_equals_aleph() {
        let t = table_with(&[3, 97], &[0.5, 0.2], 0.5);
        assert_eq!(t.rs_value(0).unwrap(), 0.0);
    }

    #[test]
    fn rs_value_errors_before_any_trial() {
        let t = RsTable::new(2, 0.5);
        assert!(t.rs_value(0).is_err());
    }

    #[test]
    fn rs_argmax_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let arms = 5;
            let counts: Vec<u64> = (0..arms).map(|_| rng.random_range(1..50u64)).collect();
            let means: Vec<f64> = (0..arms).map(|_| rng.random::<f64>()).collect();
            let aleph = rng.random::<f64>();
            let t = table_with(&counts, &means, aleph);
            let values = t.rs_values().unwrap();
            let chosen = crate::numerics::argmax(&values);
            let total: u64 = counts.iter().sum();
            let oracle: Vec<f64> = (0..arms)
                .map(|a| counts[a] as f64 / total as f64 * (means[a] - aleph))
                .collect();
            let best = crate::numerics::argmax(&oracle);
            assert_eq!(chosen, best);
        }
    }

    #[test]
    fn rs_value_scaling_invariance() {
        let t1 = table_with(&[3, 7], &[0.8, 0.2], 0.5);
        let t2 = table_with(&[9, 21], &[0.8, 0.2], 0.5);
        for a in 0..2 {
            assert_abs_diff_eq!(
                t1.rs_value(a).unwrap(),
                t2.rs_value(a).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn aleph_opt_midpoint() {
        assert_abs_diff_eq!(aleph_opt(&[0.9, 0.5]).unwrap(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(aleph_opt(&[0.6, 0.6]).unwrap(), 0.6, epsilon = 1e-15);
        assert!(aleph_opt(&[0.5]).is_err());
    }

    #[test]
    fn aleph_opt_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let means: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let got = aleph_opt(&means).unwrap();
            let mut sorted = means.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let want = (sorted[0] + sorted[1]) / 2.0;
            assert_abs_diff_eq!(got, want, epsilon = 1e-15);
            if sorted[0] > sorted[1] {
                assert!(sorted[0] > got && got > sorted[1]);
            }
        }
    }

    #[test]
    fn positive_delta_arm_preferred() {
        let mut t = table_with(&[5, 5], &[0.6, 0.4], 0.5);
        let arm = t.policy_step(|_| 0.0).unwrap();
        assert_eq!(arm, 0);
    }

    #[test]
    fn all_negative_delta_picks_least_tried() {
        // both deltas negative; the lower n_a/N scales the value toward zero
        let mut t = table_with(&[9, 1], &[0.3, 0.3], 0.5);
        let arm = t.policy_step(|_| 0.0).unwrap();
        assert_eq!(arm, 1);
    }

    #[test]
    fn exactly_one_satisfactory_arm_is_exploited() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let arms = 4;
            let counts: Vec<u64> = (0..arms).map(|_| rng.random_range(1..30u64)).collect();
            let mut means: Vec<f64> = (0..arms).map(|_| rng.random::<f64>() * 0.4).collect();
            let lucky = rng.random_range(0..arms);
            means[lucky] = 0.6 + rng.random::<f64>() * 0.4;
            let mut t = table_with(&counts, &means, 0.5);
            let arm = t.policy_step(|_| 0.0).unwrap();
            assert_eq!(arm, lucky);
        }
    }

    proptest::proptest! {
        #[test]
        fn rs_value_scale_invariant_in_counts(
            counts in proptest::collection::vec(1u64..1000, 2..8),
            seed in 0u64..1000,
            scale in 2u64..20,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let means: Vec<f64> = counts.iter().map(|_| rng.random()).collect();
            let aleph = rng.random::<f64>();
            let t1 = table_with(&counts, &means, aleph);
            let scaled: Vec<u64> = counts.iter().map(|c| c * scale).collect();
            let t2 = table_with(&scaled, &means, aleph);
            for a in 0..counts.len() {
                let (v1, v2) = (t1.rs_value(a).unwrap(), t2.rs_value(a).unwrap());
                proptest::prop_assert!((v1 - v2).abs() <= 1e-12 * v1.abs().max(1.0));
            }
        }

        #[test]
        fn sole_positive_delta_arm_always_chosen(
            counts in proptest::collection::vec(1u64..100, 2..8),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let arms = counts.len();
            let mut means: Vec<f64> = (0..arms).map(|_| rng.random::<f64>() * 0.45).collect();
            let lucky = rng.random_range(0..arms);
            means[lucky] = 0.55 + rng.random::<f64>() * 0.45;
            let mut t = table_with(&counts, &means, 0.5);
            proptest::prop_assert_eq!(t.policy_step(|_| 0.0).unwrap(), lucky);
        }
    }

    /// Monte-Carlo satisficing check on 2-armed Bernoulli(0.7, 0.3) with
    /// aleph = 0.5 (smaller-scale version of the acceptance run).
    #[test]
    fn bernoulli_two_arm_optimality() {
        let probs = [0.7, 0.3];
        let mut hits = 0usize;
        let mut total = 0usize;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = RsTable::new(2, 0.5);
            for arm in 0..2 {
                let r = (rng.random::<f64>() < probs[arm]) as u8 as f64;
                t.record(arm, r);
            }
            for step in 0..3000 {
                let arm = t
                    .policy_step(|a| (rng.random::<f64>() < probs[a]) as u8 as f64)
                    .unwrap();
                if step >= 2500 {
                    total += 1;
                    hits += (arm == 0) as usize;
                }
            }
        }
        assert!(hits as f64 / total as f64 >= 0.95);
    }
}
