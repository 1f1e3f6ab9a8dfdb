//! Scenario generation: road segments, MEC nodes, fleets and vehicles.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::{validate_config, ScenarioConfig};
use crate::error::{Result, SpadError};
use crate::mobility::VehicleState;
use crate::model::{BehaviorProfile, Cav, CavId, Fleet};
use crate::rng::{SeedTree, SimRng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: usize,
    pub length_m: f64,
    /// Start of the segment along the laid-out road.
    pub offset_m: f64,
    pub density_veh_per_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MecNode {
    pub position_m: f64,
    pub radius_m: f64,
}

/// Per-vehicle cost parameters (raw part, result part).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub raw: f64,
    pub result: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetState {
    pub fleet: Fleet,
    pub segment: usize,
    /// Kinematic state per member, in `fleet.member_ids` order.
    pub states: Vec<VehicleState>,
}

/// A generated scenario. Vehicle ids equal their index in `vehicles`.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub cfg: ScenarioConfig,
    pub seed: u64,
    pub segments: Vec<Segment>,
    pub mec_nodes: Vec<MecNode>,
    pub fleets: Vec<FleetState>,
    pub vehicles: Vec<Cav>,
    /// Trustworthiness v_a per role, ascending.
    pub role_trust: Vec<f64>,
    pub costs: Vec<CostParams>,
}

impl World {
    pub fn vehicle(&self, id: CavId) -> &Cav {
        &self.vehicles[id as usize]
    }

    pub fn count(&self, profile: BehaviorProfile) -> usize {
        self.vehicles.iter().filter(|v| v.behavior_profile == profile).count()
    }

    /// Whether a point on the road lies inside some MEC node's coverage.
    pub fn covered(&self, position_m: f64) -> bool {
        let i = self.mec_nodes.partition_point(|n| n.position_m < position_m);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|k| self.mec_nodes.get(k))
            .any(|n| (n.position_m - position_m).abs() <= n.radius_m)
    }
}

fn uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Exact profile counts for `n` vehicles by largest remainder.
fn profile_counts(n: usize, mix: (f64, f64, f64)) -> [usize; 3] {
    let shares = [mix.0 * n as f64, mix.1 * n as f64, mix.2 * n as f64];
    let mut counts = shares.map(|s| s.floor() as usize);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())).then(a.cmp(&b)));
    let mut left = n - counts.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if shares[k] > 0.0 {
            counts[k] += 1;
            left -= 1;
        }
    }
    counts
}

/// Role index band for a profile when roles correlate with behavior. Legitimate
/// vehicles take the top third of the (ascending) catalog; speculative and
/// malicious ones take low-trust roles, malicious the lowest ninth and
/// speculative the two ninths above it. With nine roles drawn from [1,10]
/// this puts the expected initial reputations near 0.65, 0.39 and 0.31.
fn role_band(profile: BehaviorProfile, num_roles: usize) -> std::ops::Range<usize> {
    let n = num_roles;
    let mal_end = (n / 9).max(1).min(n);
    let spec_end = (n / 3).max(mal_end + 1).min(n);
    let r = match profile {
        BehaviorProfile::Malicious => 0..mal_end,
        BehaviorProfile::Speculative => mal_end..spec_end,
        BehaviorProfile::Legitimate => (2 * n / 3).max(spec_end.min(n - 1))..n,
    };
    if r.is_empty() {
        0..n
    } else {
        r
    }
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<World> {
    generate_world(cfg, cfg.rng_seed)
}

/// Generate a world from `cfg` with an explicit root seed.
pub fn generate_world(cfg: &ScenarioConfig, seed: u64) -> Result<World> {
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(SpadError::Config(msg.join("; ")));
    }
    let tree = SeedTree::new(seed);

    let mut rng = tree.rng(Stream::World, 0);
    let mut segments = Vec::with_capacity(cfg.num_road_segments);
    let mut offset = 0.0;
    for id in 0..cfg.num_road_segments {
        let length_m = uniform(&mut rng, cfg.segment_length_range_m.min, cfg.segment_length_range_m.max);
        let density = uniform(&mut rng, cfg.vehicle_density_range.min, cfg.vehicle_density_range.max);
        segments.push(Segment { id, length_m, offset_m: offset, density_veh_per_km: density });
        offset += length_m;
    }
    let mec_nodes = (0..)
        .map(|k| k as f64 * cfg.mec_spacing_m)
        .take_while(|&x| x <= offset)
        .map(|position_m| MecNode { position_m, radius_m: cfg.mec_radius_m })
        .collect();

    let mut rng = tree.rng(Stream::Fleet, 0);
    let cap = if cfg.max_vehicles == 0 { usize::MAX } else { cfg.max_vehicles };
    let mut fleets = Vec::new();
    let mut next_id: CavId = 0;
    for seg in &segments {
        let remaining = cap - next_id as usize;
        if remaining < cfg.min_fleet_size {
            break;
        }
        let mut n = ((seg.density_veh_per_km * seg.length_m / 1000.0).round() as usize)
            .max(cfg.min_fleet_size)
            .min(remaining);
        // A leftover too small for a fleet joins this one so the cap is met exactly.
        if remaining - n < cfg.min_fleet_size {
            n = remaining;
        }
        let v_kmh = uniform(&mut rng, cfg.fleet_velocity_range_kmh.min, cfg.fleet_velocity_range_kmh.max);
        let v = v_kmh / 3.6;
        let spacing = seg.length_m / n as f64;
        let members: Vec<CavId> = (next_id..next_id + n as u64).collect();
        next_id += n as u64;
        let states = (0..n)
            .map(|k| VehicleState { velocity_mps: v, ..VehicleState::at(seg.offset_m + k as f64 * spacing, 0.0) })
            .collect();
        fleets.push(FleetState {
            fleet: Fleet {
                id: fleets.len() as u64,
                master_id: members[0],
                member_ids: members,
                fleet_velocity_mps: v,
                inter_vehicle_distance_m: spacing,
                broker_buffer_bytes: cfg.broker_buffer_bytes,
            },
            segment: seg.id,
            states,
        });
    }
    let n = next_id as usize;

    let mut rng = tree.rng(Stream::Behavior, 0);
    let counts = profile_counts(n, cfg.behavior_mix);
    let mut profiles: Vec<BehaviorProfile> = BehaviorProfile::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&p, c)| std::iter::repeat_n(p, c))
        .collect();
    profiles.shuffle(&mut rng);

    let mut rng = tree.rng(Stream::Roles, 0);
    let mut role_trust: Vec<f64> = (0..cfg.num_roles)
        .map(|_| uniform(&mut rng, cfg.role_trust_range.min, cfg.role_trust_range.max))
        .collect();
    role_trust.sort_by(f64::total_cmp);

    let mut rng = tree.rng(Stream::Vehicle, 0);
    let mut vehicles = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    for (id, &profile) in profiles.iter().enumerate() {
        let band = if cfg.role_profile_correlation { role_band(profile, cfg.num_roles) } else { 0..cfg.num_roles };
        let role_index = rng.gen_range(band);
        let sensing_capacity: BTreeMap<u32, f64> =
            (0..cfg.num_sensor_types).map(|g| (g, rng.gen::<f64>())).collect();
        vehicles.push(Cav {
            id: id as CavId,
            role_index,
            behavior_profile: profile,
            sensing_capacity,
            processing_capacity: rng.gen::<f64>(),
            cache_capacity_bytes: cfg.broker_buffer_bytes,
        });
        costs.push(CostParams {
            raw: uniform(&mut rng, cfg.cost_param_range.min, cfg.cost_param_range.max),
            result: uniform(&mut rng, cfg.cost_param_range.min, cfg.cost_param_range.max),
        });
    }

    Ok(World { cfg: cfg.clone(), seed, segments, mec_nodes, fleets, vehicles, role_trust, costs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig { num_road_segments: 30, ..Default::default() }
    }

    #[test]
    fn densities_and_lengths_stay_in_range() {
        let w = generate_scenario(&small()).unwrap();
        for s in &w.segments {
            assert!((20.0..=200.0).contains(&s.length_m));
            assert!((10.0..=120.0).contains(&s.density_veh_per_km));
        }
        for f in &w.fleets[..w.fleets.len() - 1] {
            let seg = &w.segments[f.segment];
            let expected = ((seg.density_veh_per_km * seg.length_m / 1000.0).round() as usize).max(2);
            assert_eq!(f.fleet.member_ids.len(), expected);
            assert!(f.fleet.check().is_ok());
            let kmh = f.fleet.fleet_velocity_mps * 3.6;
            assert!((50.0 - 1e-9..=110.0 + 1e-9).contains(&kmh));
        }
    }

    #[test]
    fn mec_nodes_sit_on_the_spacing_grid() {
        let w = generate_scenario(&small()).unwrap();
        let total: f64 = w.segments.iter().map(|s| s.length_m).sum();
        assert_eq!(w.mec_nodes.len(), (total / 200.0).floor() as usize + 1);
        for (k, n) in w.mec_nodes.iter().enumerate() {
            assert_eq!(n.position_m, k as f64 * 200.0);
            assert_eq!(n.radius_m, 100.0);
        }
        assert!(w.covered(0.0));
        assert!(w.covered(100.0));
        assert!(w.covered(299.0));
    }

    #[test]
    fn no_malicious_when_ratio_is_zero() {
        let cfg = ScenarioConfig { behavior_mix: (0.8, 0.2, 0.0), ..small() };
        let w = generate_scenario(&cfg).unwrap();
        assert_eq!(w.count(BehaviorProfile::Malicious), 0);
        assert!(w.count(BehaviorProfile::Speculative) > 0);
    }

    #[test]
    fn profile_counts_follow_the_mix() {
        assert_eq!(profile_counts(200, (0.6, 0.2, 0.2)), [120, 40, 40]);
        assert_eq!(profile_counts(7, (0.6, 0.2, 0.2)).iter().sum::<usize>(), 7);
        assert_eq!(profile_counts(5, (1.0, 0.0, 0.0)), [5, 0, 0]);
    }

    #[test]
    fn vehicle_cap_is_honored() {
        let cfg = ScenarioConfig { max_vehicles: 200, ..Default::default() };
        let w = generate_scenario(&cfg).unwrap();
        assert_eq!(w.vehicles.len(), 200);
        let members: usize = w.fleets.iter().map(|f| f.fleet.member_ids.len()).sum();
        assert_eq!(members, 200);
    }

    #[test]
    fn roles_correlate_with_profiles() {
        let cfg = ScenarioConfig { max_vehicles: 300, ..Default::default() };
        let w = generate_scenario(&cfg).unwrap();
        let avg = |p| {
            let vs: Vec<f64> = w.vehicles.iter().filter(|v| v.behavior_profile == p).map(|v| w.role_trust[v.role_index]).collect();
            vs.iter().sum::<f64>() / vs.len() as f64
        };
        assert!(avg(BehaviorProfile::Legitimate) > avg(BehaviorProfile::Speculative));
        assert!(avg(BehaviorProfile::Speculative) > avg(BehaviorProfile::Malicious));
        assert!(w.role_trust.iter().all(|v| (1.0..=10.0).contains(v)));
    }

    #[test]
    fn role_bands_cover_small_catalogs() {
        for n in 1..20 {
            for p in BehaviorProfile::ALL {
                let r = role_band(p, n);
                assert!(!r.is_empty() && r.end <= n, "{n} {p}");
            }
        }
        assert_eq!(role_band(BehaviorProfile::Malicious, 9), 0..1);
        assert_eq!(role_band(BehaviorProfile::Speculative, 9), 1..3);
        assert_eq!(role_band(BehaviorProfile::Legitimate, 9), 6..9);
    }

    #[test]
    fn same_seed_same_world() {
        assert_eq!(generate_scenario(&small()).unwrap(), generate_scenario(&small()).unwrap());
        assert_ne!(generate_world(&small(), 1).unwrap(), generate_world(&small(), 2).unwrap());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = ScenarioConfig { behavior_mix: (0.5, 0.2, 0.2), ..small() };
        assert!(matches!(generate_scenario(&cfg), Err(SpadError::Config(_))));
    }
}
