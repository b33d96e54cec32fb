//! Core abstractions shared by environments, policies and the harness:
//! per-round context matrices, the policy contract, round logs, and the
//! regret / greedy-rate metrics.

use crate::{Error, Result};

/// Per-round feature vectors, one d-dimensional row per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextMatrix {
    arms: usize,
    dim: usize,
    rows: Vec<f64>, // arms * dim, row-major
}

impl ContextMatrix {
    pub fn new(arms: usize, dim: usize, rows: Vec<f64>) -> Result<Self> {
        if arms == 0 || dim == 0 || rows.len() != arms * dim {
            return Err(Error::Dimension(format!(
                "context matrix: {} arms x {} dims vs {} entries",
                arms,
                dim,
                rows.len()
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite context entry".into()));
        }
        Ok(ContextMatrix { arms, dim, rows })
    }

    /// All arms observe the same feature vector.
    pub fn shared(arms: usize, row: &[f64]) -> Result<Self> {
        let mut rows = Vec::with_capacity(arms * row.len());
        for _ in 0..arms {
            rows.extend_from_slice(row);
        }
        ContextMatrix::new(arms, row.len(), rows)
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, arm: usize) -> &[f64] {
        &self.rows[arm * self.dim..(arm + 1) * self.dim]
    }
}

/// One environment round: contexts for every arm plus the ground-truth means
/// used for regret accounting. Reward realization stays with the environment.
#[derive(Debug, Clone)]
pub struct EnvironmentRound {
    pub contexts: ContextMatrix,
    pub true_means: Vec<f64>,
}

impl EnvironmentRound {
    /// Optimal arm under the true means, ties to the lowest index.
    pub fn optimal_arm(&self) -> usize {
        crate::numerics::argmax(&self.true_means)
    }
}

/// Per-step record emitted by the harness.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub step: usize,
    pub arm: usize,
    pub reward: f64,
    pub inst_regret: f64,
    pub greedy: u8,
    pub decision_time_s: f64,
}

/// Behavioral contract every policy implements. `select` and `greedy_arm`
/// are deterministic given the policy's internal RNG state; `observe` never
/// sees future rounds.
pub trait Policy {
    fn select(&mut self, contexts: &ContextMatrix) -> usize;
    fn observe(&mut self, contexts: &ContextMatrix, arm: usize, reward: f64);
    /// Argmax of the estimated action value (theta_hat^T x), not of the full
    /// policy value function.
    fn greedy_arm(&self, contexts: &ContextMatrix) -> usize;
    fn reset(&mut self, seed: u64);
    fn name(&self) -> &'static str;
}

/// Prefix sums of instantaneous regret.
pub fn cumulative_regret(logs: &[RoundLog]) -> Vec<f64> {
    let mut out = Vec::with_capacity(logs.len());
    let mut acc = 0.0;
    for log in logs {
        acc += log.inst_regret;
        out.push(acc);
    }
    out
}

/// Per-step mean of the greedy indicator over replications.
pub fn greedy_rate(replications: &[Vec<RoundLog>]) -> Result<Vec<f64>> {
    if replications.is_empty() {
        return Err(Error::Dimension("greedy_rate of zero replications".into()));
    }
    let horizon = replications[0].len();
    if replications.iter().any(|r| r.len() != horizon) {
        return Err(Error::Dimension(
            "greedy_rate: mismatched horizons across replications".into(),
        ));
    }
    let r = replications.len() as f64;
    let mut out = vec![0.0; horizon];
    for logs in replications {
        for (t, log) in logs.iter().enumerate() {
            out[t] += log.greedy as f64;
        }
    }
    for v in &mut out {
        *v /= r;
    }
    Ok(out)
}

/// CSV serialization of a round-log stream, one row per step:
/// step, arm, reward, inst_regret, cum_regret, greedy, decision_time_s.
pub fn write_round_logs<W: std::io::Write>(w: W, logs: &[RoundLog]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record([
            "step",
            "arm",
            "reward",
            "inst_regret",
            "cum_regret",
            "greedy",
            "decision_time_s",
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    let mut cum = 0.0;
    for log in logs {
        cum += log.inst_regret;
        writer
            .write_record([
                log.step.to_string(),
                log.arm.to_string(),
                log.reward.to_string(),
                log.inst_regret.to_string(),
                cum.to_string(),
                log.greedy.to_string(),
                log.decision_time_s.to_string(),
            ])
            .map_err(|e| Error::Data(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn log(inst_regret: f64, greedy: u8) -> RoundLog {
        RoundLog {
            step: 0,
            arm: 0,
            reward: 0.0,
            inst_regret,
            greedy,
            decision_time_s: 0.0,
        }
    }

    #[test]
    fn regret_zero_when_optimal_always_chosen() {
        let logs: Vec<_> = (0..10).map(|_| log(0.0, 1)).collect();
        assert!(cumulative_regret(&logs).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn regret_accumulates_constant_gap() {
        let logs: Vec<_> = (0..10).map(|_| log(0.2, 0)).collect();
        let cum = cumulative_regret(&logs);
        assert_abs_diff_eq!(*cum.last().unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn regret_matches_brute_force_oracle() {
        let gaps = [0.1, 0.0, 0.35, 0.2, 0.0, 0.05];
        let logs: Vec<_> = gaps.iter().map(|&g| log(g, 0)).collect();
        let cum = cumulative_regret(&logs);
        for (t, c) in cum.iter().enumerate() {
            let oracle: f64 = gaps[..=t].iter().sum();
            assert_abs_diff_eq!(c, &oracle, epsilon = 1e-12);
            if t > 0 {
                assert!(cum[t] >= cum[t - 1]);
            }
        }
    }

    #[test]
    fn greedy_rate_constant_one() {
        let reps: Vec<Vec<_>> = (0..3).map(|_| (0..5).map(|_| log(0.0, 1)).collect()).collect();
        assert!(greedy_rate(&reps).unwrap().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn greedy_rate_alternating_single_replication() {
        let logs: Vec<_> = (0..6).map(|t| log(0.0, (t % 2 == 0) as u8)).collect();
        let rate = greedy_rate(&[logs]).unwrap();
        assert_eq!(rate, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn greedy_rate_matches_averaging_oracle() {
        let grids = [[1u8, 0, 1], [0, 0, 1], [1, 1, 1]];
        let reps: Vec<Vec<_>> = grids
            .iter()
            .map(|g| g.iter().map(|&v| log(0.0, v)).collect())
            .collect();
        let rate = greedy_rate(&reps).unwrap();
        for t in 0..3 {
            let oracle = grids.iter().map(|g| g[t] as f64).sum::<f64>() / 3.0;
            assert_abs_diff_eq!(rate[t], oracle, epsilon = 1e-12);
            assert!((0.0..=1.0).contains(&rate[t]));
        }
    }

    #[test]
    fn greedy_rate_rejects_mismatched_horizons() {
        let a: Vec<_> = (0..3).map(|_| log(0.0, 1)).collect();
        let b: Vec<_> = (0..4).map(|_| log(0.0, 1)).collect();
        assert!(greedy_rate(&[a, b]).is_err());
    }

    #[test]
    fn context_matrix_rejects_non_finite() {
        assert!(ContextMatrix::new(1, 2, vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn round_log_csv_columns() {
        let logs = vec![RoundLog {
            step: 1,
            arm: 2,
            reward: 0.5,
            inst_regret: 0.25,
            greedy: 1,
            decision_time_s: 0.001,
        }];
        let mut buf = Vec::new();
        write_round_logs(&mut buf, &logs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,arm,reward,inst_regret,cum_regret,greedy,decision_time_s"));
        assert!(text.contains("1,2,0.5,0.25,0.25,1,0.001"));
    }
}
