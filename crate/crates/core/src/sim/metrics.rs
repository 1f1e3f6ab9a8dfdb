//! Episode metrics.

use std::collections::BTreeMap;

use super::episode::EpisodeTrace;
use super::SlotStats;
use crate::error::{Result, SpadError};
use crate::model::BehaviorProfile;

/// Moving-average window used for convergence detection.
pub const CONVERGENCE_WINDOW: usize = 100;
/// Relative band around the final moving average.
pub const CONVERGENCE_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Secure-and-true deliveries over all deliveries; 1 when nothing was delivered.
    pub secure_pubsub_ratio: f64,
    /// Mean chosen quality per part over contents where that part had subscribers.
    pub avg_qocs: (f64, f64),
    pub avg_group_utility: f64,
    pub avg_publisher_utility: f64,
    pub avg_reputation_by_profile: BTreeMap<BehaviorProfile, f64>,
    /// 1-based slot from which the moving average of quality stays in band.
    pub convergence_slot: Option<usize>,
}

/// Trailing moving average; the first entries average what is available.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// First slot (1-based) after which the moving average of `series` stays
/// within the relative band of its final value. `None` for an empty series.
pub fn convergence_slot(series: &[f64]) -> Option<usize> {
    let ma = moving_average(series, CONVERGENCE_WINDOW);
    let last = *ma.last()?;
    let band = CONVERGENCE_BAND * last.abs();
    Some(ma.iter().rposition(|m| (m - last).abs() > band).map_or(1, |i| i + 2))
}

/// Per-slot mean quality with gaps filled by the nearest earlier value
/// (leading gaps take the first observed value).
pub fn qocs_series(slots: &[SlotStats]) -> Vec<f64> {
    let raw: Vec<Option<f64>> = slots.iter().map(SlotStats::mean_qocs).collect();
    let Some(first) = raw.iter().flatten().next().copied() else { return Vec::new() };
    let mut prev = first;
    raw.into_iter()
        .map(|v| {
            prev = v.unwrap_or(prev);
            prev
        })
        .collect()
}

pub fn compute_metrics(trace: &EpisodeTrace) -> Result<Metrics> {
    metrics_from_slots(&trace.slots)
}

pub fn metrics_from_slots(slots: &[SlotStats]) -> Result<Metrics> {
    if slots.is_empty() {
        return Err(SpadError::EmptyTrace);
    }
    let deliveries: usize = slots.iter().map(|s| s.deliveries).sum();
    let secure: usize = slots.iter().map(|s| s.secure_deliveries).sum();
    let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };
    let sum = |f: fn(&SlotStats) -> f64| slots.iter().map(f).sum::<f64>();
    let count = |f: fn(&SlotStats) -> usize| slots.iter().map(f).sum::<usize>();
    let priced = count(|s| s.priced);

    let mut avg_reputation_by_profile = BTreeMap::new();
    for (k, p) in BehaviorProfile::ALL.into_iter().enumerate() {
        let vals: Vec<f64> = slots.iter().filter_map(|s| s.rep_by_profile[k]).collect();
        if !vals.is_empty() {
            avg_reputation_by_profile.insert(p, vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }

    Ok(Metrics {
        secure_pubsub_ratio: if deliveries == 0 { 1.0 } else { secure as f64 / deliveries as f64 },
        avg_qocs: (
            ratio(sum(|s| s.qocs_sum.0), count(|s| s.qocs_count.0)),
            ratio(sum(|s| s.qocs_sum.1), count(|s| s.qocs_count.1)),
        ),
        avg_group_utility: ratio(sum(|s| s.u_group_sum), priced),
        avg_publisher_utility: ratio(sum(|s| s.u_publisher_sum), priced),
        avg_reputation_by_profile,
        convergence_slot: convergence_slot(&qocs_series(slots)),
    })
}
