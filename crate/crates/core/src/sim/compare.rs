//! Multi-scheme, multi-repetition comparisons and their CSV output.
//!
//! Metrics CSV: one row per scheme per repetition with columns
//! [`METRICS_HEADER`]. Comparison CSV: one row per scheme with the number of
//! repetitions followed by `<metric>_mean,<metric>_std` for every metric.
//! Standard deviations are sample deviations (0 for a single repetition).
//! A missing convergence slot is written as an empty field.

use std::io::Write;

use super::episode::{run_episode, EpisodeOptions};
use super::metrics::{compute_metrics, Metrics};
use super::world::{generate_world, World};
use super::SchemeConfig;
use crate::config::{ScenarioConfig, Scheme};
use crate::error::{Result, SpadError};
use crate::exec::Execution;
use crate::model::BehaviorProfile;
use crate::rng::{SeedTree, Stream};

pub const METRIC_NAMES: [&str; 10] = [
    "secure_pubsub_ratio",
    "avg_qocs_raw",
    "avg_qocs_result",
    "avg_group_utility",
    "avg_publisher_utility",
    "avg_rep_legitimate",
    "avg_rep_speculative",
    "avg_rep_malicious",
    "convergence_slot",
    "vehicles",
];

pub const METRICS_HEADER: [&str; 13] = [
    "scheme",
    "repetition",
    "seed",
    "secure_pubsub_ratio",
    "avg_qocs_raw",
    "avg_qocs_result",
    "avg_group_utility",
    "avg_publisher_utility",
    "avg_rep_legitimate",
    "avg_rep_speculative",
    "avg_rep_malicious",
    "convergence_slot",
    "vehicles",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub repetition: usize,
    pub seed: u64,
    pub vehicles: usize,
    pub metrics: Metrics,
}

impl RunRecord {
    /// Metric values in [`METRIC_NAMES`] order; absent values are `None`.
    pub fn values(&self) -> [Option<f64>; 10] {
        let m = &self.metrics;
        let rep = |p| m.avg_reputation_by_profile.get(&p).copied();
        [
            Some(m.secure_pubsub_ratio),
            Some(m.avg_qocs.0),
            Some(m.avg_qocs.1),
            Some(m.avg_group_utility),
            Some(m.avg_publisher_utility),
            rep(BehaviorProfile::Legitimate),
            rep(BehaviorProfile::Speculative),
            rep(BehaviorProfile::Malicious),
            m.convergence_slot.map(|c| c as f64),
            Some(self.vehicles as f64),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub repetitions: usize,
    pub mean: [Option<f64>; 10],
    pub std: [Option<f64>; 10],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SchemeSummary>,
}

impl Comparison {
    pub fn summary_for(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.summary.iter().find(|s| s.scheme == scheme)
    }
}

/// Root seed of repetition `rep`.
pub fn repetition_seed(cfg: &ScenarioConfig, rep: usize) -> u64 {
    SeedTree::new(cfg.rng_seed).derive(Stream::Repetition, rep as u64)
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (Some(mean), Some(std))
}

pub fn summarize(runs: &[RunRecord], schemes: &[Scheme]) -> Vec<SchemeSummary> {
    schemes
        .iter()
        .map(|&scheme| {
            let mine: Vec<[Option<f64>; 10]> = runs.iter().filter(|r| r.scheme == scheme).map(RunRecord::values).collect();
            let mut mean = [None; 10];
            let mut std = [None; 10];
            for k in 0..10 {
                let col: Vec<f64> = mine.iter().filter_map(|v| v[k]).collect();
                (mean[k], std[k]) = mean_std(&col);
            }
            SchemeSummary { scheme, repetitions: mine.len(), mean, std }
        })
        .collect()
}

/// Run every scheme on `repetitions` seeded worlds. All schemes of one
/// repetition share the same world and per-slot random draws.
pub fn compare_schemes(
    cfg: &ScenarioConfig,
    schemes: &[Scheme],
    repetitions: usize,
    slots: usize,
    exec: Execution,
) -> Result<Comparison> {
    if repetitions == 0 {
        return Err(SpadError::Config("repetitions must be at least 1".into()));
    }
    let worlds: Vec<World> = exec
        .map_range(repetitions, |r| generate_world(cfg, repetition_seed(cfg, r)))
        .into_iter()
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, Scheme)> =
        (0..repetitions).flat_map(|r| schemes.iter().map(move |&s| (r, s))).collect();
    let opts = EpisodeOptions { slots, ..Default::default() };
    let runs = exec
        .map(&jobs, |&(r, scheme)| {
            let world = &worlds[r];
            let sc = SchemeConfig::for_scheme(scheme, cfg, &world.role_trust)?;
            let trace = run_episode(world, &sc, &opts)?;
            Ok(RunRecord {
                scheme,
                repetition: r,
                seed: world.seed,
                vehicles: world.vehicles.len(),
                metrics: compute_metrics(&trace)?,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&runs, schemes);
    Ok(Comparison { runs, summary })
}

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_metrics_csv<W: Write>(runs: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in runs {
        let mut row = vec![r.scheme.to_string(), r.repetition.to_string(), r.seed.to_string()];
        let vals = r.values();
        row.extend(vals[..8].iter().map(|&v| field(v)));
        row.push(r.metrics.convergence_slot.map(|c| c.to_string()).unwrap_or_default());
        row.push(r.vehicles.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison_csv<W: Write>(summary: &[SchemeSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scheme".to_string(), "repetitions".to_string()];
    for m in METRIC_NAMES {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    w.write_record(&header)?;
    for s in summary {
        let mut row = vec![s.scheme.to_string(), s.repetitions.to_string()];
        for k in 0..METRIC_NAMES.len() {
            row.push(field(s.mean[k]));
            row.push(field(s.std[k]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
