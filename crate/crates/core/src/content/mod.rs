//! Two-part contents, quality vectors and Zipf popularity.

pub mod broker;
pub mod metadata;

use crate::error::{Result, SpadError};
use crate::model::{Cav, CavId, ContentId, SensorType, TopicId};

pub use broker::{Admission, BrokerState, RetainedMetadata, Subscription, Topic};
pub use metadata::{
    build_metadata, build_metadata_with_payloads, Digest32, Hash32, Metadata, MockSigner, Sha256Digest, Signer,
};

/// A published item: raw sensing data plus its processed result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Content {
    pub id: ContentId,
    pub topic_id: TopicId,
    pub publisher_id: CavId,
    pub sensor_type: SensorType,
    pub raw_size_bytes: u64,
    pub result_size_bytes: u64,
    pub popularity_rank: usize,
    /// Simulation ground truth: whether the payload is secure and true.
    pub ground_truth_honest: bool,
}

impl Default for Content {
    fn default() -> Self {
        Self {
            id: 0,
            topic_id: 0,
            publisher_id: 0,
            sensor_type: 0,
            raw_size_bytes: 1,
            result_size_bytes: 1,
            popularity_rank: 1,
            ground_truth_honest: true,
        }
    }
}

impl Content {
    pub fn check(&self, catalog_size: usize) -> Result<()> {
        if self.raw_size_bytes == 0 || self.result_size_bytes == 0 {
            return Err(SpadError::Domain(format!("content {} has a zero-sized part", self.id)));
        }
        if self.popularity_rank == 0 || self.popularity_rank > catalog_size {
            return Err(SpadError::Domain(format!(
                "content {} rank {} outside [1, {catalog_size}]",
                self.id, self.popularity_rank
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopularityParams {
    pub zipf_exponent: f64,
    pub catalog_size: usize,
}

/// Publisher effort per part, each in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QoCSVector {
    pub raw_quality: f64,
    pub result_quality: f64,
}

impl QoCSVector {
    pub fn new(raw_quality: f64, result_quality: f64) -> Self {
        Self { raw_quality, result_quality }
    }

    pub fn get(&self, raw: bool) -> f64 {
        if raw {
            self.raw_quality
        } else {
            self.result_quality
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QualityVector {
    pub raw: f64,
    pub result: f64,
}

fn check_popularity(params: &PopularityParams) -> Result<()> {
    if params.catalog_size == 0 {
        return Err(SpadError::Domain("catalog must hold at least one content".into()));
    }
    if !(params.zipf_exponent >= 0.0) {
        return Err(SpadError::Domain(format!("zipf exponent {} is negative", params.zipf_exponent)));
    }
    Ok(())
}

/// Probability mass of `rank` under a Zipf law over the catalog.
pub fn zipf_popularity(rank: usize, params: &PopularityParams) -> Result<f64> {
    check_popularity(params)?;
    if rank == 0 || rank > params.catalog_size {
        return Err(SpadError::Domain(format!("rank {rank} outside [1, {}]", params.catalog_size)));
    }
    let k = params.zipf_exponent;
    let norm: f64 = (1..=params.catalog_size).map(|l| (l as f64).powf(-k)).sum();
    Ok((rank as f64).powf(-k) / norm)
}

/// Popularity of every rank, index 0 holding rank 1.
pub fn zipf_table(params: &PopularityParams) -> Result<Vec<f64>> {
    check_popularity(params)?;
    let k = params.zipf_exponent;
    let raw: Vec<f64> = (1..=params.catalog_size).map(|l| (l as f64).powf(-k)).collect();
    let norm: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / norm).collect())
}

/// Ranks (1-based) by descending demand; ties keep input order.
pub fn rank_by_demand(demand: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..demand.len()).collect();
    order.sort_by(|&a, &b| demand[b].cmp(&demand[a]));
    let mut ranks = vec![0; demand.len()];
    for (pos, idx) in order.into_iter().enumerate() {
        ranks[idx] = pos + 1;
    }
    ranks
}

pub fn content_quality(qocs: &QoCSVector, publisher: &Cav, sensor_type: SensorType) -> QualityVector {
    QualityVector {
        raw: qocs.raw_quality * publisher.sensing(sensor_type),
        result: qocs.result_quality * publisher.processing_capacity,
    }
}
