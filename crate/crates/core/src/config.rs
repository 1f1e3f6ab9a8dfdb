//! Scenario configuration and its `key = value` text format.
//!
//! Format: one `key = value` per line, `#` starts a comment, blank lines are
//! ignored. Ranges are written `min, max`; the behavior mix is
//! `legit, speculative, malicious`. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Result, SpadError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Spad,
    Bit,
    Swr,
    QLearn,
    Greedy,
    FixedPrice,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Spad,
        Scheme::Bit,
        Scheme::Swr,
        Scheme::QLearn,
        Scheme::Greedy,
        Scheme::FixedPrice,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Spad => "SPAD",
            Scheme::Bit => "BIT",
            Scheme::Swr => "SWR",
            Scheme::QLearn => "QLEARN",
            Scheme::Greedy => "GREEDY",
            Scheme::FixedPrice => "FIXED_PRICE",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = SpadError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "SPAD" => Ok(Scheme::Spad),
            "BIT" => Ok(Scheme::Bit),
            "SWR" => Ok(Scheme::Swr),
            "QLEARN" | "Q_LEARNING" | "QLEARNING" => Ok(Scheme::QLearn),
            "GREEDY" => Ok(Scheme::Greedy),
            "FIXED_PRICE" | "FP" => Ok(Scheme::FixedPrice),
            other => Err(SpadError::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn is_ordered(&self) -> bool {
        self.min <= self.max
    }
}

/// How prices and qualities are resolved for the SPAD scheme inside an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpadPricing {
    /// Closed-form static equilibrium each slot.
    Static,
    /// Two-tier hotbooted policy hill climbing.
    Learning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_road_segments: usize,
    pub segment_length_range_m: Range,
    pub mec_spacing_m: f64,
    pub mec_radius_m: f64,
    /// Vehicles per km.
    pub vehicle_density_range: Range,
    pub fleet_velocity_range_kmh: Range,
    pub num_time_slots: usize,
    pub rng_seed: u64,
    /// (r_l, r_s, r_m)
    pub behavior_mix: (f64, f64, f64),
    pub scheme: Scheme,

    pub slot_length_s: f64,
    /// Stop generating vehicles once this many exist; 0 means no cap.
    pub max_vehicles: usize,
    pub min_fleet_size: usize,
    pub speculative_honest_prob: f64,
    pub num_sensor_types: u32,
    pub num_roles: usize,
    pub role_trust_range: Range,
    pub role_profile_correlation: bool,
    pub reputation_threshold: f64,
    pub retention_window_slots: u64,
    pub broker_buffer_bytes: u64,
    pub zipf_exponent: f64,
    pub subscribe_prob: f64,
    pub report_prob: f64,
    pub detection_prob: f64,
    pub satisfaction_range: Range,
    pub cost_param_range: Range,
    pub raw_size_range_bytes: Range,
    pub result_size_range_bytes: Range,
    pub fixed_price: (f64, f64),
    pub price_cap: f64,
    pub sinr_power_mode: bool,
    pub spad_pricing: SpadPricing,

    /// Payment levels X.
    pub payment_levels: usize,
    /// Quality levels Y.
    pub qocs_levels: usize,
    /// Hotboot experiments W.
    pub hotboot_experiments: usize,
    /// Slots per hotboot experiment; 0 means `num_time_slots`.
    pub hotboot_slots: usize,
    pub learn_rate: f64,
    pub discount: f64,
    pub hill_climb_step: f64,
    pub reward_scale: f64,
    pub qlearn_epsilon: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_road_segments: 100,
            segment_length_range_m: Range::new(20.0, 200.0),
            mec_spacing_m: 200.0,
            mec_radius_m: 100.0,
            vehicle_density_range: Range::new(10.0, 120.0),
            fleet_velocity_range_kmh: Range::new(50.0, 110.0),
            num_time_slots: 2000,
            rng_seed: 1,
            behavior_mix: (0.6, 0.2, 0.2),
            scheme: Scheme::Spad,
            slot_length_s: 0.1,
            max_vehicles: 0,
            min_fleet_size: 2,
            speculative_honest_prob: 0.5,
            num_sensor_types: 3,
            num_roles: 9,
            role_trust_range: Range::new(1.0, 10.0),
            role_profile_correlation: true,
            reputation_threshold: 0.45,
            retention_window_slots: 1,
            broker_buffer_bytes: 1 << 20,
            zipf_exponent: 0.9,
            subscribe_prob: 0.5,
            report_prob: 1.0,
            detection_prob: 1.0,
            satisfaction_range: Range::new(25.0, 45.0),
            cost_param_range: Range::new(0.4, 2.0),
            raw_size_range_bytes: Range::new(0.1e6, 0.5e6),
            result_size_range_bytes: Range::new(1e3, 20e3),
            fixed_price: (1.2, 1.2),
            price_cap: 5.0,
            sinr_power_mode: false,
            spad_pricing: SpadPricing::Static,
            payment_levels: 16,
            qocs_levels: 10,
            hotboot_experiments: 5,
            hotboot_slots: 0,
            learn_rate: 0.7,
            discount: 0.7,
            hill_climb_step: 0.01,
            reward_scale: 1.0,
            qlearn_epsilon: 0.1,
        }
    }
}

/// One invariant violation, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn unit_interval(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

pub fn validate_config(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |field: &'static str, message: String| out.push(Violation { field, message });

    if cfg.num_road_segments == 0 {
        bad("num_road_segments", "must be positive".into());
    }
    for (field, r) in [
        ("segment_length_range_m", cfg.segment_length_range_m),
        ("vehicle_density_range", cfg.vehicle_density_range),
        ("fleet_velocity_range_kmh", cfg.fleet_velocity_range_kmh),
        ("role_trust_range", cfg.role_trust_range),
        ("satisfaction_range", cfg.satisfaction_range),
        ("cost_param_range", cfg.cost_param_range),
        ("raw_size_range_bytes", cfg.raw_size_range_bytes),
        ("result_size_range_bytes", cfg.result_size_range_bytes),
    ] {
        if !r.is_ordered() {
            bad(field, format!("min {} exceeds max {}", r.min, r.max));
        }
    }
    if cfg.segment_length_range_m.min <= 0.0 {
        bad("segment_length_range_m", "lengths must be positive".into());
    }
    if cfg.vehicle_density_range.min < 0.0 {
        bad("vehicle_density_range", "density must be non-negative".into());
    }
    if cfg.fleet_velocity_range_kmh.min < 0.0 {
        bad("fleet_velocity_range_kmh", "velocity must be non-negative".into());
    }
    if !(cfg.mec_spacing_m > 0.0) {
        bad("mec_spacing_m", "must be positive".into());
    }
    if !(cfg.mec_radius_m > 0.0) {
        bad("mec_radius_m", "must be positive".into());
    }
    if cfg.num_time_slots == 0 {
        bad("num_time_slots", "must be positive".into());
    }
    let (l, s, m) = cfg.behavior_mix;
    if l < 0.0 || s < 0.0 || m < 0.0 {
        bad("behavior_mix", "ratios must be non-negative".into());
    }
    if ((l + s + m) - 1.0).abs() > 1e-9 {
        bad("behavior_mix", format!("ratios sum to {} instead of 1", l + s + m));
    }
    if !(cfg.slot_length_s > 0.0) {
        bad("slot_length_s", "must be positive".into());
    }
    if cfg.min_fleet_size == 0 {
        bad("min_fleet_size", "must be positive".into());
    }
    for (field, p) in [
        ("speculative_honest_prob", cfg.speculative_honest_prob),
        ("subscribe_prob", cfg.subscribe_prob),
        ("report_prob", cfg.report_prob),
        ("detection_prob", cfg.detection_prob),
        ("reputation_threshold", cfg.reputation_threshold),
    ] {
        if !unit_interval(p) {
            bad(field, format!("{p} outside [0,1]"));
        }
    }
    if cfg.num_sensor_types == 0 {
        bad("num_sensor_types", "must be positive".into());
    }
    if cfg.num_roles == 0 {
        bad("num_roles", "must be positive".into());
    }
    if cfg.retention_window_slots == 0 {
        bad("retention_window_slots", "must be positive".into());
    }
    if cfg.zipf_exponent < 0.0 {
        bad("zipf_exponent", "must be non-negative".into());
    }
    if cfg.satisfaction_range.min <= 0.0 {
        bad("satisfaction_range", "must be positive".into());
    }
    if cfg.cost_param_range.min <= 0.0 {
        bad("cost_param_range", "must be positive".into());
    }
    if cfg.raw_size_range_bytes.min < 1.0 || cfg.result_size_range_bytes.min < 1.0 {
        bad("raw_size_range_bytes", "content sizes must be at least one byte".into());
    }
    if !(cfg.price_cap > 0.0) {
        bad("price_cap", "must be positive".into());
    }
    if cfg.payment_levels == 0 {
        bad("payment_levels", "must be positive".into());
    }
    if cfg.qocs_levels == 0 {
        bad("qocs_levels", "must be positive".into());
    }
    if !(cfg.learn_rate > 0.0 && cfg.learn_rate <= 1.0) {
        bad("learn_rate", format!("{} outside (0,1]", cfg.learn_rate));
    }
    if !unit_interval(cfg.discount) {
        bad("discount", format!("{} outside [0,1]", cfg.discount));
    }
    if !(cfg.hill_climb_step > 0.0 && cfg.hill_climb_step <= 1.0) {
        bad("hill_climb_step", format!("{} outside (0,1]", cfg.hill_climb_step));
    }
    if !(cfg.reward_scale > 0.0) {
        bad("reward_scale", "must be positive".into());
    }
    if !unit_interval(cfg.qlearn_epsilon) {
        bad("qlearn_epsilon", format!("{} outside [0,1]", cfg.qlearn_epsilon));
    }
    let (p1, p2) = cfg.fixed_price;
    if !(0.0..=cfg.price_cap).contains(&p1) || !(0.0..=cfg.price_cap).contains(&p2) {
        bad("fixed_price", format!("({p1}, {p2}) outside [0, price_cap]"));
    }
    out
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| SpadError::Config(format!("{key}: '{v}' is not a number")))
}

fn parse_int<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| SpadError::Config(format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_list(key: &str, v: &str, n: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != n {
        return Err(SpadError::Config(format!("{key}: expected {n} comma-separated values")));
    }
    parts.iter().map(|p| parse_f64(key, p)).collect()
}

fn parse_range(key: &str, v: &str) -> Result<Range> {
    let xs = parse_list(key, v, 2)?;
    Ok(Range::new(xs[0], xs[1]))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(SpadError::Config(format!("{key}: '{v}' is not a boolean"))),
    }
}

impl ScenarioConfig {
    /// Parse the `key = value` text format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SpadError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| SpadError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "num_road_segments" => self.num_road_segments = parse_int(key, v)?,
            "segment_length_range_m" => self.segment_length_range_m = parse_range(key, v)?,
            "mec_spacing_m" => self.mec_spacing_m = parse_f64(key, v)?,
            "mec_radius_m" => self.mec_radius_m = parse_f64(key, v)?,
            "vehicle_density_range" => self.vehicle_density_range = parse_range(key, v)?,
            "fleet_velocity_range_kmh" => self.fleet_velocity_range_kmh = parse_range(key, v)?,
            "num_time_slots" => self.num_time_slots = parse_int(key, v)?,
            "rng_seed" => self.rng_seed = parse_int(key, v)?,
            "behavior_mix" => {
                let xs = parse_list(key, v, 3)?;
                self.behavior_mix = (xs[0], xs[1], xs[2]);
            }
            "scheme" => self.scheme = v.parse()?,
            "slot_length_s" => self.slot_length_s = parse_f64(key, v)?,
            "max_vehicles" => self.max_vehicles = parse_int(key, v)?,
            "min_fleet_size" => self.min_fleet_size = parse_int(key, v)?,
            "speculative_honest_prob" => self.speculative_honest_prob = parse_f64(key, v)?,
            "num_sensor_types" => self.num_sensor_types = parse_int(key, v)?,
            "num_roles" => self.num_roles = parse_int(key, v)?,
            "role_trust_range" => self.role_trust_range = parse_range(key, v)?,
            "role_profile_correlation" => self.role_profile_correlation = parse_bool(key, v)?,
            "reputation_threshold" => self.reputation_threshold = parse_f64(key, v)?,
            "retention_window_slots" => self.retention_window_slots = parse_int(key, v)?,
            "broker_buffer_bytes" => self.broker_buffer_bytes = parse_int(key, v)?,
            "zipf_exponent" => self.zipf_exponent = parse_f64(key, v)?,
            "subscribe_prob" => self.subscribe_prob = parse_f64(key, v)?,
            "report_prob" => self.report_prob = parse_f64(key, v)?,
            "detection_prob" => self.detection_prob = parse_f64(key, v)?,
            "satisfaction_range" => self.satisfaction_range = parse_range(key, v)?,
            "cost_param_range" => self.cost_param_range = parse_range(key, v)?,
            "raw_size_range_bytes" => self.raw_size_range_bytes = parse_range(key, v)?,
            "result_size_range_bytes" => self.result_size_range_bytes = parse_range(key, v)?,
            "fixed_price" => {
                let xs = parse_list(key, v, 2)?;
                self.fixed_price = (xs[0], xs[1]);
            }
            "price_cap" => self.price_cap = parse_f64(key, v)?,
            "sinr_power_mode" => self.sinr_power_mode = parse_bool(key, v)?,
            "spad_pricing" => {
                self.spad_pricing = match v.to_ascii_lowercase().as_str() {
                    "static" => SpadPricing::Static,
                    "learning" | "phc" => SpadPricing::Learning,
                    _ => return Err(SpadError::Config(format!("{key}: '{v}' is not static|learning"))),
                }
            }
            "payment_levels" => self.payment_levels = parse_int(key, v)?,
            "qocs_levels" => self.qocs_levels = parse_int(key, v)?,
            "hotboot_experiments" => self.hotboot_experiments = parse_int(key, v)?,
            "hotboot_slots" => self.hotboot_slots = parse_int(key, v)?,
            "learn_rate" => self.learn_rate = parse_f64(key, v)?,
            "discount" => self.discount = parse_f64(key, v)?,
            "hill_climb_step" => self.hill_climb_step = parse_f64(key, v)?,
            "reward_scale" => self.reward_scale = parse_f64(key, v)?,
            "qlearn_epsilon" => self.qlearn_epsilon = parse_f64(key, v)?,
            other => return Err(SpadError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Render back to the text format; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let r = |x: Range| format!("{}, {}", x.min, x.max);
        let (l, s, m) = self.behavior_mix;
        let pricing = match self.spad_pricing {
            SpadPricing::Static => "static",
            SpadPricing::Learning => "learning",
        };
        let lines = [
            format!("num_road_segments = {}", self.num_road_segments),
            format!("segment_length_range_m = {}", r(self.segment_length_range_m)),
            format!("mec_spacing_m = {}", self.mec_spacing_m),
            format!("mec_radius_m = {}", self.mec_radius_m),
            format!("vehicle_density_range = {}", r(self.vehicle_density_range)),
            format!("fleet_velocity_range_kmh = {}", r(self.fleet_velocity_range_kmh)),
            format!("num_time_slots = {}", self.num_time_slots),
            format!("rng_seed = {}", self.rng_seed),
            format!("behavior_mix = {l}, {s}, {m}"),
            format!("scheme = {}", self.scheme),
            format!("slot_length_s = {}", self.slot_length_s),
            format!("max_vehicles = {}", self.max_vehicles),
            format!("min_fleet_size = {}", self.min_fleet_size),
            format!("speculative_honest_prob = {}", self.speculative_honest_prob),
            format!("num_sensor_types = {}", self.num_sensor_types),
            format!("num_roles = {}", self.num_roles),
            format!("role_trust_range = {}", r(self.role_trust_range)),
            format!("role_profile_correlation = {}", self.role_profile_correlation),
            format!("reputation_threshold = {}", self.reputation_threshold),
            format!("retention_window_slots = {}", self.retention_window_slots),
            format!("broker_buffer_bytes = {}", self.broker_buffer_bytes),
            format!("zipf_exponent = {}", self.zipf_exponent),
            format!("subscribe_prob = {}", self.subscribe_prob),
            format!("report_prob = {}", self.report_prob),
            format!("detection_prob = {}", self.detection_prob),
            format!("satisfaction_range = {}", r(self.satisfaction_range)),
            format!("cost_param_range = {}", r(self.cost_param_range)),
            format!("raw_size_range_bytes = {}", r(self.raw_size_range_bytes)),
            format!("result_size_range_bytes = {}", r(self.result_size_range_bytes)),
            format!("fixed_price = {}, {}", self.fixed_price.0, self.fixed_price.1),
            format!("price_cap = {}", self.price_cap),
            format!("sinr_power_mode = {}", self.sinr_power_mode),
            format!("spad_pricing = {pricing}"),
            format!("payment_levels = {}", self.payment_levels),
            format!("qocs_levels = {}", self.qocs_levels),
            format!("hotboot_experiments = {}", self.hotboot_experiments),
            format!("hotboot_slots = {}", self.hotboot_slots),
            format!("learn_rate = {}", self.learn_rate),
            format!("discount = {}", self.discount),
            format!("hill_climb_step = {}", self.hill_climb_step),
            format!("reward_scale = {}", self.reward_scale),
            format!("qlearn_epsilon = {}", self.qlearn_epsilon),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}
