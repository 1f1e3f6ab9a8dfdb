//! Online learning of payments and qualities in the repeated pricing game.
//!
//! The subscriber group learns a payment pair from the publisher's previous
//! quality; the publisher learns a quality pair from the group's previous
//! payment. Both tiers keep a value table and a mixed strategy updated by
//! policy hill climbing, optionally warm-started from a hotboot cache built
//! on perturbed copies of the scenario.

mod cache;
mod game;
mod tables;
mod trace;

pub use cache::{read_cache, write_cache, HotbootCache, CACHE_MAGIC, CACHE_VERSION};
pub use game::{
    fixed_price_baseline, greedy_baseline, hotboot, perturb_instance, qlearning_baseline, run_dynamic_game, run_learner,
    LearnerKind, LearningConfig, StepOutcome, TwoTier,
};
pub use tables::{argmax, check_row, hill_climb, sample_action, LearnParams, TablePrior, TabularLearner};
pub use trace::{write_trace_csv, TraceRow, TRACE_HEADER};

use crate::content::QoCSVector;
use crate::economics::PriceVector;
use crate::error::{Result, SpadError};

/// Nearest level index for `value` on the uniform grid `k/levels · cap`.
/// Values outside `[0, cap]` are clamped first; exact midpoints round down.
pub fn quantize(value: f64, levels: usize, cap: f64) -> usize {
    if levels == 0 || cap <= 0.0 || !value.is_finite() {
        return 0;
    }
    let t = value.clamp(0.0, cap) / cap * levels as f64;
    ((t - 0.5).ceil().max(0.0) as usize).min(levels)
}

/// Payment levels X over `[0, price_cap]` and quality levels Y over `[0, 1]`.
/// Actions and states are joint pairs indexed row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionGrid {
    pub payment_levels: usize,
    pub qocs_levels: usize,
    pub price_cap: f64,
}

impl Default for ActionGrid {
    fn default() -> Self {
        Self { payment_levels: 16, qocs_levels: 10, price_cap: 5.0 }
    }
}

impl ActionGrid {
    pub fn new(payment_levels: usize, qocs_levels: usize, price_cap: f64) -> Result<Self> {
        let g = Self { payment_levels, qocs_levels, price_cap };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.payment_levels < 1 || self.qocs_levels < 1 {
            return Err(SpadError::Domain("grid needs at least one level per axis".into()));
        }
        if !(self.price_cap > 0.0 && self.price_cap.is_finite()) {
            return Err(SpadError::Domain(format!("price cap {} must be positive", self.price_cap)));
        }
        Ok(())
    }

    /// (X+1)²
    pub fn payment_actions(&self) -> usize {
        (self.payment_levels + 1).pow(2)
    }

    /// (Y+1)²
    pub fn qocs_actions(&self) -> usize {
        (self.qocs_levels + 1).pow(2)
    }

    pub fn price(&self, index: usize) -> PriceVector {
        let n = self.payment_levels + 1;
        let step = self.price_cap / self.payment_levels as f64;
        PriceVector::new((index / n) as f64 * step, (index % n) as f64 * step)
    }

    pub fn qocs(&self, index: usize) -> QoCSVector {
        let n = self.qocs_levels + 1;
        let step = 1.0 / self.qocs_levels as f64;
        QoCSVector::new((index / n) as f64 * step, (index % n) as f64 * step)
    }

    pub fn price_index(&self, p: &PriceVector) -> usize {
        let x = self.payment_levels;
        quantize(p.raw_price, x, self.price_cap) * (x + 1) + quantize(p.result_price, x, self.price_cap)
    }

    pub fn qocs_index(&self, q: &QoCSVector) -> usize {
        let y = self.qocs_levels;
        quantize(q.raw_quality, y, 1.0) * (y + 1) + quantize(q.result_quality, y, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(0.0, 16, 5.0), 0);
        assert_eq!(quantize(5.0, 16, 5.0), 16);
        assert_eq!(quantize(2.5, 16, 5.0), 8);
        assert_eq!(quantize(-3.0, 16, 5.0), 0);
        assert_eq!(quantize(7.0, 16, 5.0), 16);
        // midpoint between levels 0 and 1 rounds down
        assert_eq!(quantize(0.05, 10, 1.0), 0);
        assert_eq!(quantize(0.0501, 10, 1.0), 1);
    }

    #[test]
    fn grid_sizes() {
        let g = ActionGrid::default();
        assert_eq!(g.payment_actions(), 289);
        assert_eq!(g.qocs_actions(), 121);
        assert!(ActionGrid::new(0, 10, 5.0).is_err());
        assert!(ActionGrid::new(16, 10, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn price_index_round_trips(i in 0usize..289) {
            let g = ActionGrid::default();
            prop_assert_eq!(g.price_index(&g.price(i)), i);
        }

        #[test]
        fn qocs_index_round_trips(i in 0usize..121) {
            let g = ActionGrid::default();
            prop_assert_eq!(g.qocs_index(&g.qocs(i)), i);
        }

        #[test]
        fn quantize_is_nearest(v in -1.0..6.0f64, levels in 1usize..40) {
            let cap = 5.0;
            let k = quantize(v, levels, cap);
            prop_assert!(k <= levels);
            let c = v.clamp(0.0, cap);
            let step = cap / levels as f64;
            prop_assert!((k as f64 * step - c).abs() <= step / 2.0 + 1e-12);
        }
    }
}
