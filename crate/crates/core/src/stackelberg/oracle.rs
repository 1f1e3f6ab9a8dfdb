//! Grid backward induction, used to check the closed forms.
//!
//! The follower's quality is found by maximizing the full publisher utility
//! over a fine uniform grid, `FOLLOWER_REFINEMENT` times denser than the
//! leader's. The follower objective is concave in quality, so the discrete
//! maximum is located by bisection on the sign of successive differences.
//! The leader then scans every payment pair of its own grid.

use super::{Equilibrium, GameInstance};
use crate::content::QoCSVector;
use crate::economics::PriceVector;
use crate::exec::Execution;

pub const FOLLOWER_REFINEMENT: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub price: PriceVector,
    pub qocs: QoCSVector,
    /// Leader grid indices of the chosen payments.
    pub price_index: (usize, usize),
    pub grid_n: usize,
    pub q_grid_n: usize,
    /// Follower responses for every leader grid payment, per part.
    pub responses: [Vec<f64>; 2],
}

impl BruteForceResult {
    pub fn price_cell(&self, cap: f64) -> f64 {
        cap / self.grid_n as f64
    }

    /// Distance from `p` to the oracle's payment, in leader grid cells.
    pub fn price_gap_cells(&self, eq: &Equilibrium, cap: f64) -> (f64, f64) {
        let c = self.price_cell(cap);
        (
            (self.price.raw_price - eq.price.raw_price).abs() / c,
            (self.price.result_price - eq.price.result_price).abs() / c,
        )
    }

    /// Distance between qualities in units of the leader grid (1/grid_n).
    pub fn quality_gap_cells(&self, eq: &Equilibrium) -> (f64, f64) {
        let n = self.grid_n as f64;
        (
            (self.qocs.raw_quality - eq.qocs.raw_quality).abs() * n,
            (self.qocs.result_quality - eq.qocs.result_quality).abs() * n,
        )
    }

    /// Whether `eq`'s quality is what the oracle's follower plays at some
    /// leader grid payment within `cells` of the oracle's choice (or within
    /// `cells` follower grid steps of it), for both active parts.
    pub fn q_within(&self, inst: &GameInstance, eq: &Equilibrium, cells: usize) -> bool {
        let step = 1.0 / self.q_grid_n as f64;
        let check = |part: usize, idx: usize, target: f64, active: bool| {
            if !active {
                return true;
            }
            let lo = idx.saturating_sub(cells);
            let hi = (idx + cells).min(self.grid_n);
            let qs = &self.responses[part][lo..=hi];
            let min = qs.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            target >= min - cells as f64 * step - 1e-12 && target <= max + cells as f64 * step + 1e-12
        };
        check(0, self.price_index.0, eq.qocs.raw_quality, inst.j.0 > 0)
            && check(1, self.price_index.1, eq.qocs.result_quality, inst.j.1 > 0)
    }
}

/// Follower's best quality index for one part at payment `p`.
fn follower_index(inst: &GameInstance, raw: bool, p: f64, m: usize) -> usize {
    let price = if raw { PriceVector::new(p, 0.0) } else { PriceVector::new(0.0, p) };
    let u = |k: usize| {
        let q = k as f64 / m as f64;
        let qocs = if raw { QoCSVector::new(q, 0.0) } else { QoCSVector::new(0.0, q) };
        inst.publisher_utility(&price, &qocs)
    };
    // smallest k with u(k) >= u(k + 1)
    let (mut lo, mut hi) = (0usize, m);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if u(mid) >= u(mid + 1) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Backward induction over a `grid_n`-cell payment grid on [0, p_max]².
pub fn solve_brute_force(inst: &GameInstance, grid_n: usize, exec: Execution) -> BruteForceResult {
    let grid_n = grid_n.max(1);
    let cap = inst.econ.price_cap;
    let m = grid_n * FOLLOWER_REFINEMENT;
    let price_at = |k: usize| k as f64 * cap / grid_n as f64;

    let responses = [true, false].map(|raw| {
        if inst.count(raw) == 0 {
            vec![0.0; grid_n + 1]
        } else {
            exec.map_range(grid_n + 1, |k| follower_index(inst, raw, price_at(k), m) as f64 / m as f64)
        }
    });
    let active = (inst.j.0 > 0, inst.j.1 > 0);
    let n1 = if active.0 { grid_n + 1 } else { 1 };
    let n2 = if active.1 { grid_n + 1 } else { 1 };

    let rows = exec.map_range(n1, |a| {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for b in 0..n2 {
            let price = PriceVector::new(price_at(a), price_at(b));
            let qocs = QoCSVector::new(responses[0][a], responses[1][b]);
            let u = inst.group_utility(&price, &qocs);
            if u > best.0 {
                best = (u, b);
            }
        }
        best
    });
    let mut pick = (f64::NEG_INFINITY, 0usize, 0usize);
    for (a, &(u, b)) in rows.iter().enumerate() {
        if u > pick.0 {
            pick = (u, a, b);
        }
    }
    let (_, a, b) = pick;
    BruteForceResult {
        price: PriceVector::new(price_at(a), price_at(b)),
        qocs: QoCSVector::new(responses[0][a], responses[1][b]),
        price_index: (a, b),
        grid_n,
        q_grid_n: m,
        responses,
    }
}
