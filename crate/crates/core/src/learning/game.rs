//! The two-tier repeated game and its baselines.

use std::sync::Arc;

use rand::Rng;

use super::cache::HotbootCache;
use super::tables::{LearnParams, TabularLearner};
use super::trace::TraceRow;
use super::ActionGrid;
use crate::config::Scheme;
use crate::content::QoCSVector;
use crate::economics::PriceVector;
use crate::error::{Result, SpadError};
use crate::model::ContentId;
use crate::rng::{SeedTree, SimRng, Stream};
use crate::stackelberg::{best_response_qocs, GameInstance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningConfig {
    pub grid: ActionGrid,
    pub subscriber: LearnParams,
    pub publisher: LearnParams,
    /// Hotboot experiments W.
    pub hotboot_experiments: usize,
    pub qlearn_epsilon: f64,
    pub fixed_price: PriceVector,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            grid: ActionGrid::default(),
            subscriber: LearnParams::default(),
            publisher: LearnParams::default(),
            hotboot_experiments: 5,
            qlearn_epsilon: 0.1,
            fixed_price: PriceVector::new(1.2, 1.2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerKind {
    /// Mixed strategies with hill climbing.
    Phc,
    /// ε-greedy over the value table, no policy tables.
    QLearning { epsilon: f64 },
    /// Argmax of a myopic value table, no exploration.
    Greedy,
    /// Fixed payments answered by the publisher's static best response.
    FixedPrice(PriceVector),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub price: PriceVector,
    pub qocs: QoCSVector,
    pub u_group: f64,
    pub u_publisher: f64,
}

/// One learner pair for one content stream.
#[derive(Debug, Clone)]
pub struct TwoTier {
    pub grid: ActionGrid,
    pub kind: LearnerKind,
    pub subscriber: TabularLearner,
    pub publisher: TabularLearner,
    /// Quantized previous quality pair.
    z: usize,
    /// Previous payment pair index.
    z_pub: usize,
}

impl TwoTier {
    pub fn new(kind: LearnerKind, cfg: &LearningConfig) -> Self {
        let g = cfg.grid;
        let (mut sp, mut pp) = (cfg.subscriber, cfg.publisher);
        if kind == LearnerKind::Greedy {
            sp.discount = 0.0;
            pp.discount = 0.0;
        }
        Self {
            grid: g,
            kind,
            subscriber: TabularLearner::new(g.qocs_actions(), g.payment_actions(), sp),
            publisher: TabularLearner::new(g.payment_actions(), g.qocs_actions(), pp),
            z: 0,
            z_pub: 0,
        }
    }

    /// PHC learners initialized from a hotboot cache.
    pub fn from_cache(cache: &HotbootCache, cfg: &LearningConfig) -> Result<Self> {
        if cache.grid != cfg.grid {
            return Err(SpadError::Cache(format!("cache grid {:?} does not match {:?}", cache.grid, cfg.grid)));
        }
        let g = cfg.grid;
        let (np, nq) = (g.payment_actions(), g.qocs_actions());
        Ok(Self {
            subscriber: TabularLearner::with_prior(nq, np, cfg.subscriber, cache.subscriber.clone())?,
            publisher: TabularLearner::with_prior(np, nq, cfg.publisher, cache.publisher.clone())?,
            ..Self::new(LearnerKind::Phc, cfg)
        })
    }

    pub fn to_cache(&self, experiments_run: usize) -> HotbootCache {
        HotbootCache {
            grid: self.grid,
            experiments_run,
            subscriber: Arc::new(self.subscriber.to_prior()),
            publisher: Arc::new(self.publisher.to_prior()),
        }
    }

    /// Forget the previous slot, as at the start of an episode.
    pub fn reset_state(&mut self) {
        self.z = 0;
        self.z_pub = 0;
    }

    pub fn states(&self) -> (usize, usize) {
        (self.z, self.z_pub)
    }

    /// Play one slot of the game and update both tiers.
    pub fn step(&mut self, inst: &GameInstance, rng: &mut SimRng) -> Result<StepOutcome> {
        let (z, zp) = (self.z, self.z_pub);
        let (price, qocs, a_p, a_q) = match self.kind {
            LearnerKind::Phc => {
                let a_p = self.subscriber.sample(z, rng)?;
                let a_q = self.publisher.sample(zp, rng)?;
                (self.grid.price(a_p), self.grid.qocs(a_q), a_p, a_q)
            }
            LearnerKind::QLearning { epsilon } => {
                let a_p = self.subscriber.epsilon_greedy(z, epsilon, rng);
                let a_q = self.publisher.epsilon_greedy(zp, epsilon, rng);
                (self.grid.price(a_p), self.grid.qocs(a_q), a_p, a_q)
            }
            LearnerKind::Greedy => {
                let a_p = self.subscriber.greedy(z);
                let a_q = self.publisher.greedy(zp);
                (self.grid.price(a_p), self.grid.qocs(a_q), a_p, a_q)
            }
            LearnerKind::FixedPrice(p) => {
                let price = p.clamped(inst.econ.price_cap);
                let qocs = best_response_qocs(&price, inst)?;
                (price, qocs, self.grid.price_index(&price), self.grid.qocs_index(&qocs))
            }
        };
        let u_group = inst.group_utility(&price, &qocs);
        let u_publisher = inst.publisher_utility(&price, &qocs);
        match self.kind {
            LearnerKind::Phc => {
                self.subscriber.update(z, a_p, u_group, a_q);
                self.publisher.update(zp, a_q, u_publisher, a_p);
            }
            LearnerKind::QLearning { .. } | LearnerKind::Greedy => {
                self.subscriber.update_q(z, a_p, u_group, a_q);
                self.publisher.update_q(zp, a_q, u_publisher, a_p);
            }
            LearnerKind::FixedPrice(_) => {}
        }
        self.z = a_q;
        self.z_pub = a_p;
        Ok(StepOutcome { price, qocs, u_group, u_publisher })
    }
}

/// A similar scenario: economics and capacities jittered by ±10%.
pub fn perturb_instance(template: &GameInstance, rng: &mut SimRng) -> GameInstance {
    let mut jitter = |x: f64| x * rng.gen_range(0.9..=1.1);
    let mut inst = *template;
    inst.econ.satisfaction_coeff = jitter(inst.econ.satisfaction_coeff);
    inst.econ.raw_cost_param = jitter(inst.econ.raw_cost_param);
    inst.econ.result_cost_param = jitter(inst.econ.result_cost_param);
    inst.sensing_capacity = jitter(inst.sensing_capacity).min(1.0);
    inst.processing_capacity = jitter(inst.processing_capacity).min(1.0);
    inst.popularity = jitter(inst.popularity).min(1.0);
    inst
}

/// Warm-start tables from `cfg.hotboot_experiments` runs of `slots` slots,
/// each on a fresh perturbation of `template`. Tables carry over between
/// experiments.
pub fn hotboot(template: &GameInstance, cfg: &LearningConfig, slots: usize, seed: u64) -> Result<HotbootCache> {
    template.check()?;
    let tree = SeedTree::new(seed);
    let mut agent = TwoTier::new(LearnerKind::Phc, cfg);
    for w in 0..cfg.hotboot_experiments {
        let exp = tree.child(Stream::Hotboot, w as u64);
        let inst = perturb_instance(template, &mut exp.rng(Stream::Instance, 0));
        let mut rng = exp.rng(Stream::Learner, 0);
        agent.reset_state();
        for _ in 0..slots {
            agent.step(&inst, &mut rng)?;
        }
    }
    Ok(agent.to_cache(cfg.hotboot_experiments))
}

/// Run any learner kind on a fixed instance and record the trace.
pub fn run_learner(
    mut agent: TwoTier,
    inst: &GameInstance,
    slots: usize,
    seed: u64,
    content_id: ContentId,
    scheme: Scheme,
) -> Result<Vec<TraceRow>> {
    inst.check()?;
    let mut rng = SeedTree::new(seed).rng(Stream::Learner, content_id);
    (0..slots)
        .map(|t| {
            agent.step(inst, &mut rng).map(|o| TraceRow::from_outcome(t as u64, content_id, &o, scheme))
        })
        .collect()
}

/// Hotbooted policy hill climbing on both tiers.
pub fn run_dynamic_game(
    inst: &GameInstance,
    cfg: &LearningConfig,
    cache: &HotbootCache,
    slots: usize,
    seed: u64,
) -> Result<Vec<TraceRow>> {
    run_learner(TwoTier::from_cache(cache, cfg)?, inst, slots, seed, 0, Scheme::Spad)
}

pub fn qlearning_baseline(inst: &GameInstance, cfg: &LearningConfig, slots: usize, seed: u64) -> Result<Vec<TraceRow>> {
    if !(0.0..=1.0).contains(&cfg.qlearn_epsilon) {
        return Err(SpadError::Domain(format!("exploration rate {} outside [0,1]", cfg.qlearn_epsilon)));
    }
    let agent = TwoTier::new(LearnerKind::QLearning { epsilon: cfg.qlearn_epsilon }, cfg);
    run_learner(agent, inst, slots, seed, 0, Scheme::QLearn)
}

pub fn greedy_baseline(inst: &GameInstance, cfg: &LearningConfig, slots: usize, seed: u64) -> Result<Vec<TraceRow>> {
    run_learner(TwoTier::new(LearnerKind::Greedy, cfg), inst, slots, seed, 0, Scheme::Greedy)
}

pub fn fixed_price_baseline(inst: &GameInstance, cfg: &LearningConfig, price: PriceVector, slots: usize) -> Result<Vec<TraceRow>> {
    run_learner(TwoTier::new(LearnerKind::FixedPrice(price), cfg), inst, slots, 0, 0, Scheme::FixedPrice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economics::EconParams;
    use crate::stackelberg::solve_se;
    use approx::assert_abs_diff_eq;

    fn table2(j: (usize, usize)) -> GameInstance {
        GameInstance {
            j,
            econ: EconParams { satisfaction_coeff: 28.0, raw_cost_param: 1.2, result_cost_param: 0.8, ..Default::default() },
            sensing_capacity: 0.7,
            processing_capacity: 0.6,
            popularity: 0.3,
            reputation: 0.8,
            link: Default::default(),
        }
    }

    #[test]
    fn forced_actions_are_traced() {
        let cfg = LearningConfig::default();
        let g = cfg.grid;
        let mut agent = TwoTier::new(LearnerKind::Phc, &cfg);
        let (ap, aq) = (g.price_index(&PriceVector::new(2.5, 1.25)), 7 * 11 + 3);
        let row = agent.subscriber.policy_row_mut(0);
        row.iter_mut().for_each(|p| *p = 0.0);
        row[ap] = 1.0;
        let row = agent.publisher.policy_row_mut(0);
        row.iter_mut().for_each(|p| *p = 0.0);
        row[aq] = 1.0;
        let inst = table2((3, 2));
        let rows = run_learner(agent, &inst, 1, 5, 0, Scheme::Spad).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].p1, rows[0].p2), (2.5, 1.25));
        assert_abs_diff_eq!(rows[0].q1, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[0].q2, 0.3, epsilon = 1e-12);
        let (p, q) = (PriceVector::new(2.5, 1.25), QoCSVector::new(rows[0].q1, rows[0].q2));
        assert_eq!(rows[0].u_group, inst.group_utility(&p, &q));
        assert_eq!(rows[0].u_publisher, inst.publisher_utility(&p, &q));
    }

    #[test]
    fn zero_experiments_give_empty_cache() {
        let cfg = LearningConfig { hotboot_experiments: 0, ..Default::default() };
        let c = hotboot(&table2((3, 2)), &cfg, 100, 1).unwrap();
        assert!(c.subscriber.q.iter().chain(&c.publisher.q).all(|&x| x == 0.0));
        assert!(c.subscriber.policy.iter().all(|&p| p == 1.0 / 289.0));
        assert!(c.publisher.policy.iter().all(|&p| p == 1.0 / 121.0));
    }

    #[test]
    fn hotboot_fills_visited_entries_deterministically() {
        let cfg = LearningConfig::default();
        let a = hotboot(&table2((3, 2)), &cfg, 400, 11).unwrap();
        let b = hotboot(&table2((3, 2)), &cfg, 400, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.experiments_run, 5);
        assert!(a.subscriber.q.iter().filter(|&&x| x != 0.0).count() > 100);
        assert!(a.publisher.q.iter().filter(|&&x| x != 0.0).count() > 100);
        // the start state was visited, so its rows are no longer uniform
        let agent = TwoTier::from_cache(&a, &cfg).unwrap();
        assert!(agent.subscriber.policy_row(0).iter().any(|&p| p != 1.0 / 289.0));
        assert!(agent.publisher.policy_row(0).iter().any(|&p| p != 1.0 / 121.0));
    }

    #[test]
    fn cache_grid_must_match() {
        let cfg = LearningConfig { hotboot_experiments: 0, ..Default::default() };
        let c = hotboot(&table2((1, 1)), &cfg, 1, 1).unwrap();
        let other = LearningConfig { grid: ActionGrid::new(8, 10, 5.0).unwrap(), ..cfg };
        assert!(TwoTier::from_cache(&c, &other).is_err());
    }

    #[test]
    fn greedy_starts_at_index_zero_and_sticks_to_tie_winners() {
        let cfg = LearningConfig::default();
        let inst = table2((3, 2));
        let rows = greedy_baseline(&inst, &cfg, 1, 3).unwrap();
        assert_eq!((rows[0].p1, rows[0].p2, rows[0].q1, rows[0].q2), (0.0, 0.0, 0.0, 0.0));
        // every chosen action is either the tie winner or already updated
        let mut agent = TwoTier::new(LearnerKind::Greedy, &cfg);
        let mut rng = SeedTree::new(3).rng(Stream::Learner, 0);
        for _ in 0..300 {
            let (z, _) = agent.states();
            let row = agent.subscriber.q_row(z).to_vec();
            let out = agent.step(&inst, &mut rng).unwrap();
            let a = cfg.grid.price_index(&out.price);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(row[a], max);
            assert_eq!(row.iter().position(|&v| v == max), Some(a));
        }
    }

    #[test]
    fn epsilon_zero_qlearning_matches_greedy_selection() {
        let mut cfg = LearningConfig { qlearn_epsilon: 0.0, ..Default::default() };
        cfg.subscriber.discount = 0.0;
        cfg.publisher.discount = 0.0;
        let inst = table2((3, 2));
        let a = qlearning_baseline(&inst, &cfg, 200, 9).unwrap();
        let b = greedy_baseline(&inst, &cfg, 200, 9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.p1, x.p2, x.q1, x.q2), (y.p1, y.p2, y.q1, y.q2));
        }
    }

    #[test]
    fn epsilon_one_explores_uniformly() {
        let cfg = LearningConfig { qlearn_epsilon: 1.0, ..Default::default() };
        let rows = qlearning_baseline(&table2((3, 2)), &cfg, 20_000, 2).unwrap();
        let mut seen = vec![0usize; 289];
        for r in &rows {
            seen[cfg.grid.price_index(&PriceVector::new(r.p1, r.p2))] += 1;
        }
        let mean = rows.len() as f64 / 289.0;
        assert!(seen.iter().all(|&c| (c as f64 - mean).abs() < 5.0 * mean.sqrt()));
    }

    #[test]
    fn fixed_price_plays_best_response() {
        let cfg = LearningConfig::default();
        let inst = table2((3, 2));
        let p = PriceVector::new(1.2, 1.2);
        let rows = fixed_price_baseline(&inst, &cfg, p, 3).unwrap();
        let q = best_response_qocs(&p, &inst).unwrap();
        for r in &rows {
            assert_eq!((r.p1, r.p2, r.q1, r.q2), (1.2, 1.2, q.raw_quality, q.result_quality));
        }
        let zero = fixed_price_baseline(&inst, &cfg, PriceVector::new(0.0, 0.0), 1).unwrap();
        assert_eq!((zero[0].q1, zero[0].q2), (0.0, 0.0));
        // a fixed price never beats the equilibrium for the group
        let se = solve_se(&inst).unwrap();
        assert!(rows[0].u_group <= inst.group_utility(&se.price, &se.qocs) + 1e-9);
    }

    #[test]
    fn learning_against_a_best_responder_finds_the_equilibrium_price() {
        let inst = table2((3, 2));
        let g = ActionGrid::default();
        let se = solve_se(&inst).unwrap();
        let mut learner = TabularLearner::new(g.qocs_actions(), g.payment_actions(), LearnParams::default());
        let mut rng = SeedTree::new(17).rng(Stream::Learner, 0);
        let mut z = 0;
        let mut visits = vec![0usize; g.qocs_actions()];
        // uniform behavior keeps every state-action pair fresh; the learned
        // values are off-policy, so the greedy action is still meaningful
        for _ in 0..200_000 {
            let a = learner.epsilon_greedy(z, 1.0, &mut rng);
            let p = g.price(a);
            let q = best_response_qocs(&p, &inst).unwrap();
            let next = g.qocs_index(&q);
            learner.update(z, a, inst.group_utility(&p, &q), next);
            visits[next] += 1;
            z = next;
        }
        let busiest = (0..visits.len()).max_by_key(|&s| visits[s]).unwrap();
        let best = g.price(learner.greedy(busiest));
        let cell = g.price_cap / g.payment_levels as f64;
        assert!((best.raw_price - se.price.raw_price).abs() <= cell + 1e-9, "{best:?} vs {:?}", se.price);
        assert!((best.result_price - se.price.result_price).abs() <= cell + 1e-9, "{best:?} vs {:?}", se.price);
    }

    #[test]
    fn value_tables_stay_bounded_and_rows_stay_distributions() {
        let cfg = LearningConfig::default();
        let inst = table2((3, 2));
        let mut agent = TwoTier::new(LearnerKind::Phc, &cfg);
        let mut rng = SeedTree::new(4).rng(Stream::Learner, 0);
        let mut u_max: f64 = 0.0;
        for _ in 0..3000 {
            let o = agent.step(&inst, &mut rng).unwrap();
            u_max = u_max.max(o.u_group.abs()).max(o.u_publisher.abs());
        }
        let chi = cfg.subscriber.discount;
        let bound = u_max / (1.0 - chi) + u_max;
        assert!(agent.subscriber.dense_q().iter().chain(&agent.publisher.dense_q()).all(|q| q.abs() <= bound));
        for s in 0..agent.subscriber.n_states {
            assert!(super::super::check_row(agent.subscriber.policy_row(s)).is_ok());
        }
        for s in 0..agent.publisher.n_states {
            assert!(super::super::check_row(agent.publisher.policy_row(s)).is_ok());
        }
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let cfg = LearningConfig::default();
        let inst = table2((3, 2));
        let cache = hotboot(&inst, &cfg, 200, 1).unwrap();
        let a = run_dynamic_game(&inst, &cfg, &cache, 300, 8).unwrap();
        let b = run_dynamic_game(&inst, &cfg, &cache, 300, 8).unwrap();
        assert_eq!(a, b);
        let c = qlearning_baseline(&inst, &cfg, 300, 8).unwrap();
        let d = qlearning_baseline(&inst, &cfg, 300, 8).unwrap();
        assert_eq!(c, d);
    }
}
