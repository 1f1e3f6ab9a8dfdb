//! The per-slot episode loop.
//!
//! Each slot every fleet member publishes one content through the fleet
//! master's broker, the other members draw subscriptions, the broker admits
//! them against the publisher's reputation, the scheme prices each non-empty
//! group, contents are delivered and dishonest ones are reported to the
//! forensics oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use super::world::World;
use super::{Pricing, SchemeConfig};
use crate::channel::{delay_vector, energy_cost, ChannelParams, PowerMode};
use crate::config::Scheme;
use crate::content::{
    build_metadata, rank_by_demand, zipf_popularity, Admission, BrokerState, Content, MockSigner, PopularityParams,
    QoCSVector, Subscription,
};
use crate::economics::{group_payment, member_payment, EconParams, PriceVector};
use crate::error::Result;
use crate::learning::{hotboot, HotbootCache, StepOutcome, TraceRow, TwoTier};
use crate::mobility::{pairwise_distance, step_bicycle, BodyGeometry, ControlInput};
use crate::model::{BehaviorProfile, CavId, ContentId, TimeSlot};
use crate::reputation::{ReportOutcome, ReputationLedger};
use crate::rng::{SeedTree, SimRng, Stream};
use crate::stackelberg::{fixed_price_outcome, solve_se, GameInstance, LinkCosts};

#[derive(Debug, Clone, Default)]
pub struct EpisodeOptions {
    /// Slots to simulate; 0 means the config's `num_time_slots`.
    pub slots: usize,
    /// Keep one learning-trace row per priced content.
    pub record_trace: bool,
    /// Keep one record per delivery.
    pub record_deliveries: bool,
    /// Warm start for PHC learners; built on the fly when absent.
    pub cache: Option<Arc<HotbootCache>>,
}

/// One content handed to one subscriber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub slot: u64,
    pub content_id: ContentId,
    pub publisher_id: CavId,
    pub subscriber_id: CavId,
    pub prefers_raw: bool,
    pub honest: bool,
    /// Publisher reputation seen by the broker at admission.
    pub publisher_reputation: f64,
}

/// Per-slot aggregates from which metrics are computed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotStats {
    pub slot: u64,
    pub deliveries: usize,
    pub secure_deliveries: usize,
    /// Sum of chosen qualities over contents with an active part.
    pub qocs_sum: (f64, f64),
    pub qocs_count: (usize, usize),
    pub u_group_sum: f64,
    pub u_publisher_sum: f64,
    /// Contents with a non-empty group.
    pub priced: usize,
    /// Average reputation per profile (legitimate, speculative, malicious).
    pub rep_by_profile: [Option<f64>; 3],
}

impl SlotStats {
    /// Average quality over the active parts of this slot, if any.
    pub fn mean_qocs(&self) -> Option<f64> {
        let parts: Vec<f64> = [(self.qocs_sum.0, self.qocs_count.0), (self.qocs_sum.1, self.qocs_count.1)]
            .into_iter()
            .filter(|&(_, n)| n > 0)
            .map(|(s, n)| s / n as f64)
            .collect();
        (!parts.is_empty()).then(|| parts.iter().sum::<f64>() / parts.len() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub scheme: Scheme,
    pub seed: u64,
    pub slots: Vec<SlotStats>,
    pub trace: Vec<TraceRow>,
    pub deliveries: Vec<Delivery>,
    pub ledger: ReputationLedger,
    /// First slot in which forensics confirmed a misbehavior.
    pub first_detection_slot: Option<u64>,
    /// Largest gap between a group's payment and the publisher's revenue.
    pub max_payment_gap: f64,
    /// Deliveries from publishers below the threshold under a gating scheme.
    pub gate_violations: usize,
    pub rejected_subscriptions: usize,
    /// Mean fraction of vehicles inside some MEC node's coverage.
    pub mec_coverage: f64,
}

fn profile_slot(p: BehaviorProfile) -> usize {
    match p {
        BehaviorProfile::Legitimate => 0,
        BehaviorProfile::Speculative => 1,
        BehaviorProfile::Malicious => 2,
    }
}

fn uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Representative single-group instance the PHC tables are warmed on.
pub fn hotboot_template(cfg: &crate::config::ScenarioConfig) -> GameInstance {
    let mid = |r: crate::config::Range| 0.5 * (r.min + r.max);
    GameInstance {
        j: (2, 2),
        econ: EconParams {
            satisfaction_coeff: mid(cfg.satisfaction_range),
            raw_cost_param: mid(cfg.cost_param_range),
            result_cost_param: mid(cfg.cost_param_range),
            price_cap: cfg.price_cap,
            ..EconParams::default()
        },
        sensing_capacity: 0.5,
        processing_capacity: 0.5,
        popularity: 0.3,
        reputation: 0.8,
        link: LinkCosts::default(),
    }
}

struct Learner {
    agent: TwoTier,
    rng: SimRng,
}

pub fn run_episode(world: &World, sc: &SchemeConfig, opts: &EpisodeOptions) -> Result<EpisodeTrace> {
    let cfg = &world.cfg;
    let slots = if opts.slots == 0 { cfg.num_time_slots } else { opts.slots };
    let root = SeedTree::new(world.seed);
    let signer = MockSigner;
    let geom = BodyGeometry::default();
    let channel = ChannelParams {
        power_mode: if cfg.sinr_power_mode { PowerMode::SinrTarget } else { PowerMode::Fixed },
        ..ChannelParams::default()
    };
    let theta = cfg.reputation_threshold;
    let n_types = cfg.num_sensor_types as u64;

    let cache = match (&sc.pricing, &opts.cache) {
        (Pricing::Learning(crate::learning::LearnerKind::Phc), Some(c)) => Some(c.clone()),
        (Pricing::Learning(crate::learning::LearnerKind::Phc), None) => {
            let template = hotboot_template(cfg);
            let hb_slots = if cfg.hotboot_slots == 0 { slots } else { cfg.hotboot_slots };
            Some(Arc::new(hotboot(&template, &sc.learning, hb_slots, root.derive(Stream::Hotboot, 0))?))
        }
        _ => None,
    };
    let mut learners: BTreeMap<CavId, Learner> = BTreeMap::new();

    let mut fleets = world.fleets.clone();
    let mut brokers: Vec<BrokerState> = fleets
        .iter()
        .map(|f| {
            let mut b = BrokerState::new(cfg.retention_window_slots, cfg.broker_buffer_bytes);
            for g in 0..n_types {
                let topic = f.fleet.id * n_types + g;
                for &m in &f.fleet.member_ids {
                    b.register_publisher(topic, m);
                    b.subscribe_topic(topic, m)?;
                }
            }
            Ok(b)
        })
        .collect::<Result<_>>()?;

    let mut ledger = ReputationLedger::new(sc.trust.clone());
    let n_vehicles = world.vehicles.len();
    let mut out = EpisodeTrace {
        scheme: sc.scheme,
        seed: world.seed,
        slots: Vec::with_capacity(slots),
        trace: Vec::new(),
        deliveries: Vec::new(),
        ledger: ReputationLedger::new(sc.trust.clone()),
        first_detection_slot: None,
        max_payment_gap: 0.0,
        gate_violations: 0,
        rejected_subscriptions: 0,
        mec_coverage: 0.0,
    };
    let mut coverage_sum = 0.0;

    for t in 0..slots as u64 {
        let slot = TimeSlot::new(t, cfg.slot_length_s)?;
        let st = root.child(Stream::Instance, t);
        let mut behavior_rng = st.rng(Stream::Behavior, 0);
        let mut content_rng = st.rng(Stream::Instance, 0);
        let mut sub_rng = st.rng(Stream::Subscription, 0);
        let mut forensic_rng = st.rng(Stream::Forensics, 0);
        ledger.prune_dedup(t);

        if t > 0 {
            for f in &mut fleets {
                for s in &mut f.states {
                    *s = step_bicycle(s, &ControlInput::default(), &geom, cfg.slot_length_s)?;
                }
            }
        }
        let covered = fleets.iter().flat_map(|f| &f.states).filter(|s| world.covered(s.x_m)).count();
        if n_vehicles > 0 {
            coverage_sum += covered as f64 / n_vehicles as f64;
        }

        let reps: Vec<f64> = world.vehicles.iter().map(|v| ledger.reputation(v, t)).collect::<Result<_>>()?;
        let honest_now: Vec<bool> = world
            .vehicles
            .iter()
            .map(|v| match v.behavior_profile {
                BehaviorProfile::Legitimate => true,
                BehaviorProfile::Malicious => false,
                BehaviorProfile::Speculative => behavior_rng.gen::<f64>() < cfg.speculative_honest_prob,
            })
            .collect();

        let mut stats = SlotStats { slot: t, ..Default::default() };
        let mut rep_sum = [0.0; 3];
        let mut rep_n = [0usize; 3];
        for (v, r) in world.vehicles.iter().zip(&reps) {
            let k = profile_slot(v.behavior_profile);
            rep_sum[k] += r;
            rep_n[k] += 1;
        }
        for k in 0..3 {
            stats.rep_by_profile[k] = (rep_n[k] > 0).then(|| rep_sum[k] / rep_n[k] as f64);
        }

        for (fi, f) in fleets.iter().enumerate() {
            let broker = &mut brokers[fi];
            let members = &f.fleet.member_ids;
            let first = members[0];

            // Publications.
            let mut contents = Vec::with_capacity(members.len());
            for &m in members {
                let sensor_type = content_rng.gen_range(0..cfg.num_sensor_types);
                let content = Content {
                    id: t * n_vehicles as u64 + m,
                    topic_id: f.fleet.id * n_types + sensor_type as u64,
                    publisher_id: m,
                    sensor_type,
                    raw_size_bytes: uniform(&mut content_rng, cfg.raw_size_range_bytes.min, cfg.raw_size_range_bytes.max)
                        .round() as u64,
                    result_size_bytes: uniform(
                        &mut content_rng,
                        cfg.result_size_range_bytes.min,
                        cfg.result_size_range_bytes.max,
                    )
                    .round() as u64,
                    popularity_rank: 1,
                    ground_truth_honest: honest_now[m as usize],
                };
                let alpha = uniform(&mut content_rng, cfg.satisfaction_range.min, cfg.satisfaction_range.max);
                let meta = build_metadata(&content, world.vehicle(m), slot, f.fleet.id, &signer);
                broker.publish(content.topic_id, content.id, m, meta, slot)?;
                contents.push((content, alpha));
            }

            // Subscription attempts, drawn independently of the scheme.
            let attempts: Vec<Vec<(CavId, bool)>> = contents
                .iter()
                .map(|(c, _)| {
                    members
                        .iter()
                        .filter(|&&s| s != c.publisher_id)
                        .filter_map(|&s| {
                            let wants = sub_rng.gen::<f64>() < cfg.subscribe_prob;
                            let raw = sub_rng.gen::<bool>();
                            wants.then_some((s, raw))
                        })
                        .collect()
                })
                .collect();
            let demand: Vec<usize> = attempts.iter().map(Vec::len).collect();
            let ranks = rank_by_demand(&demand);
            let pop = PopularityParams { zipf_exponent: cfg.zipf_exponent, catalog_size: contents.len() };

            for (((content, alpha), tries), rank) in contents.iter_mut().zip(&attempts).zip(ranks) {
                content.popularity_rank = rank;
                let p_id = content.publisher_id;
                let rep = reps[p_id as usize];
                let gate_rep = if sc.gate { rep } else { 1.0 };
                for &(s, raw) in tries {
                    let sub = Subscription { subscriber_id: s, content_id: content.id, prefers_raw: raw };
                    if broker.subscribe(sub, gate_rep, theta)? == Admission::Rejected {
                        out.rejected_subscriptions += 1;
                    }
                }
                let Some(group) = broker.group(content.id) else { continue };
                if group.is_empty() {
                    continue;
                }

                let publisher = world.vehicle(p_id);
                let costs = world.costs[p_id as usize];
                let econ = EconParams {
                    satisfaction_coeff: *alpha,
                    raw_cost_param: costs.raw,
                    result_cost_param: costs.result,
                    price_cap: cfg.price_cap,
                    ..EconParams::default()
                };
                let p_state = &f.states[(p_id - first) as usize];
                let reach = group
                    .members()
                    .map(|(s, _)| pairwise_distance(p_state, &f.states[(s - first) as usize]))
                    .fold(0.0, f64::max);
                let mut inst = GameInstance::from_group(
                    group,
                    econ,
                    publisher.sensing(content.sensor_type),
                    publisher.processing_capacity,
                    zipf_popularity(rank, &pop)?,
                    if sc.use_reputation { rep } else { 1.0 },
                );
                inst.link = LinkCosts { delay_s: delay_vector(content, &channel)?, energy: energy_cost(content, reach, &channel)? };

                let (price, qocs) = match sc.pricing {
                    Pricing::Static => {
                        let se = solve_se(&inst)?;
                        (se.price, se.qocs)
                    }
                    Pricing::Fixed(p) => fixed_price_outcome(&inst, p)?,
                    Pricing::Learning(kind) => {
                        let learner = match learners.entry(p_id) {
                            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
                            std::collections::btree_map::Entry::Vacant(e) => {
                                let agent = match &cache {
                                    Some(c) => TwoTier::from_cache(c, &sc.learning)?,
                                    None => TwoTier::new(kind, &sc.learning),
                                };
                                e.insert(Learner { agent, rng: root.rng(Stream::Learner, p_id) })
                            }
                        };
                        let o = learner.agent.step(&inst, &mut learner.rng)?;
                        (o.price, o.qocs)
                    }
                };
                record_priced(&mut stats, &mut out, &inst, group, price, qocs, content.id, t, sc.scheme, opts);

                let honest = content.ground_truth_honest;
                let verdict = !honest && forensic_rng.gen::<f64>() < cfg.detection_prob;
                for (s, raw) in group.members() {
                    stats.deliveries += 1;
                    stats.secure_deliveries += honest as usize;
                    if sc.gate && rep < theta {
                        out.gate_violations += 1;
                    }
                    if opts.record_deliveries {
                        out.deliveries.push(Delivery {
                            slot: t,
                            content_id: content.id,
                            publisher_id: p_id,
                            subscriber_id: s,
                            prefers_raw: raw,
                            honest,
                            publisher_reputation: gate_rep,
                        });
                    }
                    // Only subscribers acting honestly this slot file reports.
                    if !honest
                        && honest_now[s as usize]
                        && forensic_rng.gen::<f64>() < cfg.report_prob
                        && ledger.record_report(s, p_id, content.id, t, verdict)? == ReportOutcome::Confirmed
                    {
                        out.first_detection_slot.get_or_insert(t);
                    }
                }
            }
        }
        out.slots.push(stats);
    }

    out.mec_coverage = if slots > 0 { coverage_sum / slots as f64 } else { 0.0 };
    out.ledger = ledger;
    Ok(out)
}

pub const SLOT_HEADER: [&str; 10] = [
    "slot",
    "deliveries",
    "secure_deliveries",
    "priced",
    "mean_qocs",
    "u_group",
    "u_publisher",
    "rep_legitimate",
    "rep_speculative",
    "rep_malicious",
];

/// Per-slot series: counts, mean quality, summed utilities and average
/// reputation per profile. Absent values are empty fields.
pub fn write_slot_csv<W: std::io::Write>(slots: &[SlotStats], out: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SLOT_HEADER)?;
    for s in slots {
        w.write_record([
            s.slot.to_string(),
            s.deliveries.to_string(),
            s.secure_deliveries.to_string(),
            s.priced.to_string(),
            opt(s.mean_qocs()),
            s.u_group_sum.to_string(),
            s.u_publisher_sum.to_string(),
            opt(s.rep_by_profile[0]),
            opt(s.rep_by_profile[1]),
            opt(s.rep_by_profile[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn record_priced(
    stats: &mut SlotStats,
    out: &mut EpisodeTrace,
    inst: &GameInstance,
    group: &crate::economics::SubscriberGroup,
    price: PriceVector,
    qocs: QoCSVector,
    content_id: ContentId,
    t: u64,
    scheme: Scheme,
    opts: &EpisodeOptions,
) {
    let paid = group_payment(group, &qocs, &price, &inst.econ);
    let revenue: f64 = [true, false]
        .into_iter()
        .map(|raw| inst.count(raw) as f64 * member_payment(inst.econ.theta(raw), price.get(raw), qocs.get(raw)))
        .sum();
    out.max_payment_gap = out.max_payment_gap.max((paid - revenue).abs());

    let u_group = inst.group_utility(&price, &qocs);
    let u_publisher = inst.publisher_utility(&price, &qocs);
    stats.priced += 1;
    stats.u_group_sum += u_group;
    stats.u_publisher_sum += u_publisher;
    if inst.j.0 > 0 {
        stats.qocs_sum.0 += qocs.raw_quality;
        stats.qocs_count.0 += 1;
    }
    if inst.j.1 > 0 {
        stats.qocs_sum.1 += qocs.result_quality;
        stats.qocs_count.1 += 1;
    }
    if opts.record_trace {
        let o = StepOutcome { price, qocs, u_group, u_publisher };
        out.trace.push(TraceRow::from_outcome(t, content_id, &o, scheme));
    }
}
