//! Shared domain types: identifiers, the slot clock, vehicles and fleets.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Result, SpadError};

pub type CavId = u64;
pub type FleetId = u64;
pub type ContentId = u64;
pub type TopicId = u64;
pub type SensorType = u32;

/// One discrete slot of the simulation clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSlot {
    pub index: u64,
    pub slot_length_s: f64,
}

impl TimeSlot {
    pub fn new(index: u64, slot_length_s: f64) -> Result<Self> {
        if !(slot_length_s > 0.0) || !slot_length_s.is_finite() {
            return Err(SpadError::Domain(format!(
                "slot length must be positive, got {slot_length_s}"
            )));
        }
        Ok(Self { index, slot_length_s })
    }

    pub fn next(&self) -> Self {
        Self { index: self.index + 1, ..*self }
    }

    /// Start time of the slot in seconds.
    pub fn start_s(&self) -> f64 {
        self.index as f64 * self.slot_length_s
    }

    pub fn end_s(&self) -> f64 {
        self.start_s() + self.slot_length_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BehaviorProfile {
    Legitimate,
    Speculative,
    Malicious,
}

impl BehaviorProfile {
    pub const ALL: [BehaviorProfile; 3] = [
        BehaviorProfile::Legitimate,
        BehaviorProfile::Speculative,
        BehaviorProfile::Malicious,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            BehaviorProfile::Legitimate => "legitimate",
            BehaviorProfile::Speculative => "speculative",
            BehaviorProfile::Malicious => "malicious",
        }
    }
}

impl fmt::Display for BehaviorProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A cooperative autonomous vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Cav {
    pub id: CavId,
    pub role_index: usize,
    pub behavior_profile: BehaviorProfile,
    /// Sensing capacity per sensor type, each in [0,1]. Missing types count as 0.
    pub sensing_capacity: BTreeMap<SensorType, f64>,
    pub processing_capacity: f64,
    pub cache_capacity_bytes: u64,
}

impl Cav {
    pub fn sensing(&self, sensor: SensorType) -> f64 {
        self.sensing_capacity.get(&sensor).copied().unwrap_or(0.0)
    }

    pub fn check(&self) -> Result<()> {
        for (g, sc) in &self.sensing_capacity {
            if !(0.0..=1.0).contains(sc) {
                return Err(SpadError::Domain(format!(
                    "vehicle {}: sensing capacity {sc} for sensor {g} outside [0,1]",
                    self.id
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.processing_capacity) {
            return Err(SpadError::Domain(format!(
                "vehicle {}: processing capacity {} outside [0,1]",
                self.id, self.processing_capacity
            )));
        }
        Ok(())
    }
}

/// A formation of vehicles sharing one master (broker) vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    pub id: FleetId,
    pub master_id: CavId,
    pub member_ids: Vec<CavId>,
    pub fleet_velocity_mps: f64,
    pub inter_vehicle_distance_m: f64,
    pub broker_buffer_bytes: u64,
}

impl Fleet {
    pub fn check(&self) -> Result<()> {
        if self.member_ids.is_empty() {
            return Err(SpadError::Domain(format!("fleet {} has no members", self.id)));
        }
        if !self.member_ids.contains(&self.master_id) {
            return Err(SpadError::Domain(format!(
                "fleet {}: master {} is not a member",
                self.id, self.master_id
            )));
        }
        if !(self.inter_vehicle_distance_m > 0.0) {
            return Err(SpadError::Domain(format!(
                "fleet {}: inter-vehicle distance must be positive",
                self.id
            )));
        }
        Ok(())
    }
}
