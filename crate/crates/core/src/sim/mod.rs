//! Scenario generation, the per-slot episode loop, metrics and scheme comparison.

pub mod compare;
pub mod episode;
pub mod metrics;
pub mod world;

pub use compare::{compare_schemes, write_comparison_csv, write_metrics_csv, Comparison, RunRecord, METRICS_HEADER};
pub use episode::{hotboot_template, run_episode, write_slot_csv, Delivery, EpisodeOptions, EpisodeTrace, SlotStats, SLOT_HEADER};
pub use metrics::{compute_metrics, convergence_slot, Metrics, CONVERGENCE_BAND, CONVERGENCE_WINDOW};
pub use world::{generate_scenario, generate_world, CostParams, FleetState, MecNode, Segment, World};

use crate::config::{ScenarioConfig, Scheme, SpadPricing};
use crate::economics::PriceVector;
use crate::error::Result;
use crate::learning::{ActionGrid, LearnParams, LearnerKind, LearningConfig};
use crate::reputation::TrustParams;

/// How a scheme resolves prices and qualities for each priced content.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pricing {
    /// Closed-form equilibrium of the one-shot game.
    Static,
    /// Per-publisher learners of the given kind.
    Learning(LearnerKind),
    /// Fixed payments with the publisher's best response.
    Fixed(PriceVector),
}

/// Everything that distinguishes one scheme from another inside an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub trust: TrustParams,
    /// When false, pricing sees R = 1 (the ledger still records reports).
    pub use_reputation: bool,
    /// Reject subscriptions to publishers below the threshold.
    pub gate: bool,
    pub pricing: Pricing,
    pub learning: LearningConfig,
}

impl SchemeConfig {
    /// Scheme settings for `world`'s role catalog.
    pub fn for_scheme(scheme: Scheme, cfg: &ScenarioConfig, role_trust: &[f64]) -> Result<Self> {
        let learning = learning_config(cfg)?;
        let spad_trust = per_slot(TrustParams { role_trust: role_trust.to_vec(), ..TrustParams::default() }, cfg.slot_length_s);
        let base = Self {
            scheme,
            trust: spad_trust,
            use_reputation: true,
            gate: true,
            pricing: Pricing::Static,
            learning,
        };
        Ok(match scheme {
            Scheme::Spad => Self {
                pricing: match cfg.spad_pricing {
                    SpadPricing::Static => Pricing::Static,
                    SpadPricing::Learning => Pricing::Learning(LearnerKind::Phc),
                },
                ..base
            },
            Scheme::Bit => Self { trust: per_slot(TrustParams::bit(role_trust.to_vec()), cfg.slot_length_s), ..base },
            Scheme::Swr => Self { use_reputation: false, gate: false, ..base },
            Scheme::QLearn => {
                Self { pricing: Pricing::Learning(LearnerKind::QLearning { epsilon: cfg.qlearn_epsilon }), ..base }
            }
            Scheme::Greedy => Self { pricing: Pricing::Learning(LearnerKind::Greedy), ..base },
            Scheme::FixedPrice => {
                Self { pricing: Pricing::Fixed(PriceVector::new(cfg.fixed_price.0, cfg.fixed_price.1)), ..base }
            }
        })
    }

    /// Check that the overrides match what the scheme label promises.
    pub fn is_consistent(&self) -> bool {
        match self.scheme {
            Scheme::Spad => self.use_reputation && self.gate && self.trust.role_weight > 0.0,
            Scheme::Bit => {
                self.gate
                    && self.trust.role_weight == 0.0
                    && self.trust.behavior_weight == 1.0
                    && self.trust.w_recent == 0.0
                    && self.trust.punishment == 1.0
                    && !self.trust.decay_enabled
                    && self.pricing == Pricing::Static
            }
            Scheme::Swr => !self.use_reputation && !self.gate,
            Scheme::QLearn => matches!(self.pricing, Pricing::Learning(LearnerKind::QLearning { .. })),
            Scheme::Greedy => self.pricing == Pricing::Learning(LearnerKind::Greedy),
            Scheme::FixedPrice => matches!(self.pricing, Pricing::Fixed(_)),
        }
    }
}

/// Rescale trust parameters stated per second so the ledger can be driven
/// with slot indices: the clean-record duration and both decay exponents
/// are measured in seconds.
pub fn per_slot(mut p: TrustParams, slot_length_s: f64) -> TrustParams {
    p.w_recent *= slot_length_s;
    p.decay_pos *= slot_length_s;
    p.decay_neg *= slot_length_s;
    p
}

/// Learning parameters taken from a scenario config.
pub fn learning_config(cfg: &ScenarioConfig) -> Result<LearningConfig> {
    let params = LearnParams {
        learn_rate: cfg.learn_rate,
        discount: cfg.discount,
        step: cfg.hill_climb_step,
        reward_scale: cfg.reward_scale,
    };
    Ok(LearningConfig {
        grid: ActionGrid::new(cfg.payment_levels, cfg.qocs_levels, cfg.price_cap)?,
        subscriber: params,
        publisher: params,
        hotboot_experiments: cfg.hotboot_experiments,
        qlearn_epsilon: cfg.qlearn_epsilon,
        fixed_price: PriceVector::new(cfg.fixed_price.0, cfg.fixed_price.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scheme_is_consistent() {
        let cfg = ScenarioConfig::default();
        for s in Scheme::ALL {
            let sc = SchemeConfig::for_scheme(s, &cfg, &[1.0, 5.5, 10.0]).unwrap();
            assert!(sc.is_consistent(), "{s}");
        }
    }

    #[test]
    fn bit_keeps_the_other_weights() {
        let cfg = ScenarioConfig::default();
        let spad = SchemeConfig::for_scheme(Scheme::Spad, &cfg, &[2.0]).unwrap();
        let bit = SchemeConfig::for_scheme(Scheme::Bit, &cfg, &[2.0]).unwrap();
        assert_eq!(bit.trust.w_report, spad.trust.w_report);
        assert_eq!(bit.trust.w_mis, spad.trust.w_mis);
        assert_eq!(bit.trust.role_trust, vec![2.0]);
    }

    #[test]
    fn trust_clock_runs_in_seconds() {
        let cfg = ScenarioConfig { slot_length_s: 0.1, ..Default::default() };
        let sc = SchemeConfig::for_scheme(Scheme::Spad, &cfg, &[1.0]).unwrap();
        assert!((sc.trust.w_recent - 0.1).abs() < 1e-15);
        assert!((sc.trust.decay_neg - 1e-4).abs() < 1e-18);
        let bit = SchemeConfig::for_scheme(Scheme::Bit, &cfg, &[1.0]).unwrap();
        assert_eq!(bit.trust.w_recent, 0.0);
    }

    #[test]
    fn learning_spad_uses_phc() {
        let cfg = ScenarioConfig { spad_pricing: SpadPricing::Learning, ..Default::default() };
        let sc = SchemeConfig::for_scheme(Scheme::Spad, &cfg, &[1.0]).unwrap();
        assert_eq!(sc.pricing, Pricing::Learning(LearnerKind::Phc));
    }
}
