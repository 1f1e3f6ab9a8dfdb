//! Tabular value and mixed-strategy tables shared by both tiers.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Result, SpadError};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnParams {
    /// ψ
    pub learn_rate: f64,
    /// χ
    pub discount: f64,
    /// δ
    pub step: f64,
    /// λ
    pub reward_scale: f64,
}

impl Default for LearnParams {
    fn default() -> Self {
        Self { learn_rate: 0.7, discount: 0.7, step: 0.01, reward_scale: 1.0 }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn check_row(row: &[f64]) -> Result<()> {
    if row.is_empty() {
        return Err(SpadError::InvalidPolicyRow("empty row".into()));
    }
    let mut sum = 0.0;
    for &p in row {
        if !(0.0..=1.0).contains(&p) {
            return Err(SpadError::InvalidPolicyRow(format!("entry {p} outside [0,1]")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SpadError::InvalidPolicyRow(format!("row sums to {sum}")));
    }
    Ok(())
}

/// Draw an action index with the row's probabilities.
pub fn sample_action(row: &[f64], rng: &mut SimRng) -> Result<usize> {
    check_row(row)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // rounding left `u` above the final cumulative sum
    Ok(row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1))
}

/// Raise `greedy` by δ, lower every other entry by δ/(n−1), then clamp to
/// [0,1] and renormalize.
pub fn hill_climb(row: &mut [f64], greedy: usize, step: f64) {
    let n = row.len();
    if n < 2 {
        row.iter_mut().for_each(|p| *p = 1.0);
        return;
    }
    let dec = step / (n - 1) as f64;
    for (i, p) in row.iter_mut().enumerate() {
        *p = if i == greedy { *p + step } else { *p - dec }.clamp(0.0, 1.0);
    }
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= sum);
}

/// Dense tables a learner starts from, shared between learners.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePrior {
    pub q: Vec<f64>,
    pub policy: Vec<f64>,
}

impl TablePrior {
    /// Zero values and uniform policies.
    pub fn fresh(n_states: usize, n_actions: usize) -> Self {
        Self { q: vec![0.0; n_states * n_actions], policy: vec![1.0 / n_actions as f64; n_states * n_actions] }
    }
}

/// Value table and mixed strategy over `n_states × n_actions`.
///
/// Rows are copy-on-write: until a state is updated its row is read from
/// the shared prior (or the zero/uniform default), so thousands of learners
/// warm-started from one cache only pay for the states they visit.
#[derive(Debug, Clone)]
pub struct TabularLearner {
    pub n_states: usize,
    pub n_actions: usize,
    pub params: LearnParams,
    prior: Option<Arc<TablePrior>>,
    q: Vec<Vec<f64>>,
    policy: Vec<Vec<f64>>,
    zero_row: Vec<f64>,
    uniform_row: Vec<f64>,
}

impl TabularLearner {
    /// Zero values and uniform policies.
    pub fn new(n_states: usize, n_actions: usize, params: LearnParams) -> Self {
        Self {
            n_states,
            n_actions,
            params,
            prior: None,
            q: vec![Vec::new(); n_states],
            policy: vec![Vec::new(); n_states],
            zero_row: vec![0.0; n_actions],
            uniform_row: vec![1.0 / n_actions as f64; n_actions],
        }
    }

    pub fn with_prior(n_states: usize, n_actions: usize, params: LearnParams, prior: Arc<TablePrior>) -> Result<Self> {
        let n = n_states * n_actions;
        if prior.q.len() != n || prior.policy.len() != n {
            return Err(SpadError::Cache(format!(
                "prior tables have {}/{} entries, expected {n}",
                prior.q.len(),
                prior.policy.len()
            )));
        }
        Ok(Self { prior: Some(prior), ..Self::new(n_states, n_actions, params) })
    }

    fn span(&self, s: usize) -> std::ops::Range<usize> {
        s * self.n_actions..(s + 1) * self.n_actions
    }

    pub fn q_row(&self, s: usize) -> &[f64] {
        match (&self.q[s], &self.prior) {
            (r, _) if !r.is_empty() => r,
            (_, Some(p)) => &p.q[self.span(s)],
            _ => &self.zero_row,
        }
    }

    pub fn policy_row(&self, s: usize) -> &[f64] {
        match (&self.policy[s], &self.prior) {
            (r, _) if !r.is_empty() => r,
            (_, Some(p)) => &p.policy[self.span(s)],
            _ => &self.uniform_row,
        }
    }

    pub fn q_row_mut(&mut self, s: usize) -> &mut [f64] {
        if self.q[s].is_empty() {
            self.q[s] = self.q_row(s).to_vec();
        }
        &mut self.q[s]
    }

    pub fn policy_row_mut(&mut self, s: usize) -> &mut [f64] {
        if self.policy[s].is_empty() {
            self.policy[s] = self.policy_row(s).to_vec();
        }
        &mut self.policy[s]
    }

    /// Row-major copy of the value table.
    pub fn dense_q(&self) -> Vec<f64> {
        (0..self.n_states).flat_map(|s| self.q_row(s).iter().copied()).collect()
    }

    /// Row-major copy of the policy table.
    pub fn dense_policy(&self) -> Vec<f64> {
        (0..self.n_states).flat_map(|s| self.policy_row(s).iter().copied()).collect()
    }

    pub fn to_prior(&self) -> TablePrior {
        TablePrior { q: self.dense_q(), policy: self.dense_policy() }
    }

    pub fn value(&self, s: usize) -> f64 {
        self.q_row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn greedy(&self, s: usize) -> usize {
        argmax(self.q_row(s))
    }

    pub fn update_q(&mut self, s: usize, a: usize, reward: f64, next: usize) {
        let v_next = self.value(next);
        let p = self.params;
        let q = &mut self.q_row_mut(s)[a];
        *q += p.learn_rate * (p.reward_scale * reward + p.discount * v_next - *q);
    }

    pub fn update_policy(&mut self, s: usize) {
        let g = self.greedy(s);
        let step = self.params.step;
        hill_climb(self.policy_row_mut(s), g, step);
    }

    /// One value update followed by one hill-climbing step on the row of `s`.
    pub fn update(&mut self, s: usize, a: usize, reward: f64, next: usize) {
        self.update_q(s, a, reward, next);
        self.update_policy(s);
    }

    pub fn sample(&self, s: usize, rng: &mut SimRng) -> Result<usize> {
        sample_action(self.policy_row(s), rng)
    }

    /// ε-greedy choice over the value row.
    pub fn epsilon_greedy(&self, s: usize, epsilon: f64, rng: &mut SimRng) -> usize {
        if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            rng.gen_range(0..self.n_actions)
        } else {
            self.greedy(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedTree, Stream};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{any, prop_assert, proptest};

    fn rng(seed: u64) -> SimRng {
        SeedTree::new(seed).rng(Stream::Learner, 0)
    }

    #[test]
    fn full_overwrite_when_rate_one_and_no_discount() {
        let mut l = TabularLearner::new(3, 4, LearnParams { learn_rate: 1.0, discount: 0.0, step: 0.01, reward_scale: 2.0 });
        l.q_row_mut(1)[2] = 99.0;
        l.update(1, 2, 3.5, 0);
        assert_eq!(l.q_row(1)[2], 7.0);
    }

    #[test]
    fn zero_reward_keeps_zero_tables() {
        let mut l = TabularLearner::new(2, 5, LearnParams::default());
        for _ in 0..10 {
            l.update(0, 3, 0.0, 1);
        }
        assert!(l.dense_q().iter().all(|&x| x == 0.0));
        // ties break to action 0, so only that entry grows
        assert!(l.policy_row(0)[0] > 0.2);
        assert_abs_diff_eq!(l.policy_row(0)[1], l.policy_row(0)[4], epsilon = 1e-15);
        assert_eq!(l.policy_row(1), &[0.2; 5]);
    }

    #[test]
    fn one_step_on_subscriber_sized_row() {
        let n = 289;
        let mut row = vec![1.0 / n as f64; n];
        hill_climb(&mut row, 40, 0.01);
        assert_abs_diff_eq!(row[40], 1.0 / n as f64 + 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(row[0], 1.0 / n as f64 - 0.01 / 288.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn one_step_on_publisher_sized_row() {
        let n = 121;
        let mut row = vec![1.0 / n as f64; n];
        hill_climb(&mut row, 0, 0.01);
        assert_abs_diff_eq!(row[0], 1.0 / n as f64 + 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_row_always_picks_its_action() {
        let mut r = rng(1);
        let row = [0.0, 0.0, 1.0, 0.0];
        for _ in 0..1000 {
            assert_eq!(sample_action(&row, &mut r).unwrap(), 2);
        }
    }

    #[test]
    fn uniform_row_frequencies() {
        let mut r = rng(2);
        let k = 10;
        let row = vec![0.1; k];
        let n = 100_000;
        let mut counts = vec![0usize; k];
        for _ in 0..n {
            counts[sample_action(&row, &mut r).unwrap()] += 1;
        }
        let mean = n as f64 / k as f64;
        let sd = (n as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 3.0 * sd + 1.0, "count {c}");
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let row = [0.3, 0.2, 0.5];
        let a: Vec<usize> = { let mut r = rng(9); (0..50).map(|_| sample_action(&row, &mut r).unwrap()).collect() };
        let b: Vec<usize> = { let mut r = rng(9); (0..50).map(|_| sample_action(&row, &mut r).unwrap()).collect() };
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_rows_are_rejected() {
        let mut r = rng(3);
        assert!(sample_action(&[0.5, 0.6], &mut r).is_err());
        assert!(sample_action(&[1.5, -0.5], &mut r).is_err());
        assert!(sample_action(&[], &mut r).is_err());
    }

    #[test]
    fn epsilon_extremes() {
        let mut l = TabularLearner::new(1, 4, LearnParams::default());
        l.q_row_mut(0)[2] = 1.0;
        let mut r = rng(4);
        assert!((0..200).all(|_| l.epsilon_greedy(0, 0.0, &mut r) == 2));
        let mut seen = [false; 4];
        for _ in 0..400 {
            seen[l.epsilon_greedy(0, 1.0, &mut r)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn rows_fall_back_to_the_prior_until_written() {
        let prior = Arc::new(TablePrior { q: vec![1.0, 2.0, 3.0, 4.0], policy: vec![0.5, 0.5, 0.25, 0.75] });
        let mut l = TabularLearner::with_prior(2, 2, LearnParams::default(), prior.clone()).unwrap();
        assert_eq!(l.q_row(1), &[3.0, 4.0]);
        assert_eq!(l.greedy(0), 1);
        l.update(0, 0, 0.0, 1);
        assert_eq!(prior.q, vec![1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(l.q_row(0)[0], 1.0 + 0.7 * (0.7 * 4.0 - 1.0), epsilon = 1e-12);
        assert_eq!(l.policy_row(1), &[0.25, 0.75]);
        assert!(TabularLearner::with_prior(3, 2, LearnParams::default(), prior).is_err());
    }

    proptest! {
        #[test]
        fn rows_stay_distributions(seed in any::<u64>(), step in 0.001..1.0f64, n in 2usize..50) {
            let mut r = rng(seed);
            let mut row = vec![1.0 / n as f64; n];
            for _ in 0..500 {
                let g = r.gen_range(0..n);
                hill_climb(&mut row, g, step);
                prop_assert!(check_row(&row).is_ok());
            }
        }
    }
}
