//! Hybrid role and behavior reputation with time decay and punishment.
//!
//! Timestamps are slot indices. Decayed sums are kept incrementally so that
//! a query costs O(1) regardless of how long a vehicle's history is.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::error::{Result, SpadError};
use crate::model::{Cav, CavId, ContentId};

#[derive(Debug, Clone, PartialEq)]
pub struct TrustParams {
    pub role_weight: f64,
    pub behavior_weight: f64,
    pub decay_pos: f64,
    pub decay_neg: f64,
    pub w_report: f64,
    pub w_recent: f64,
    pub w_mis: f64,
    pub punishment: f64,
    /// Trust degree of each role in the catalog.
    pub role_trust: Vec<f64>,
    /// When false every decay factor is replaced by 1.
    pub decay_enabled: bool,
}

impl Default for TrustParams {
    fn default() -> Self {
        Self {
            role_weight: 0.05,
            behavior_weight: 0.5,
            decay_pos: 0.001,
            decay_neg: 0.001,
            w_report: 1.0,
            w_recent: 1.0,
            w_mis: 1.0,
            punishment: 1.2,
            role_trust: vec![1.0, 5.5, 10.0],
            decay_enabled: true,
        }
    }
}

impl TrustParams {
    /// Standard beta-mean trust: no roles, no decay, no punishment.
    pub fn bit(role_trust: Vec<f64>) -> Self {
        Self {
            role_weight: 0.0,
            behavior_weight: 1.0,
            w_recent: 0.0,
            punishment: 1.0,
            decay_enabled: false,
            role_trust,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("role_weight", self.role_weight),
            ("behavior_weight", self.behavior_weight),
            ("w_report", self.w_report),
            ("w_recent", self.w_recent),
            ("w_mis", self.w_mis),
        ] {
            if !(v >= 0.0) {
                return Err(SpadError::Domain(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(self.decay_pos > 0.0 && self.decay_neg > 0.0) {
            return Err(SpadError::Domain("decay factors must be positive".into()));
        }
        if !(self.punishment >= 1.0) {
            return Err(SpadError::Domain(format!("punishment {} must be at least 1", self.punishment)));
        }
        Ok(())
    }

    fn factor(&self, eta: f64, age: u64) -> f64 {
        if self.decay_enabled {
            (-eta * age as f64).exp()
        } else {
            1.0
        }
    }
}

/// Σ exp(−η (now − t_b)) maintained incrementally for one fixed η.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DecayedSum {
    eta: f64,
    enabled: bool,
    value: f64,
    at: u64,
}

impl DecayedSum {
    fn new(eta: f64, enabled: bool) -> Self {
        Self { eta, enabled, value: 0.0, at: 0 }
    }

    fn decay(&self, age: u64) -> f64 {
        if self.enabled {
            (-self.eta * age as f64).exp()
        } else {
            1.0
        }
    }

    fn push(&mut self, t: u64) {
        if t > self.at {
            self.value *= self.decay(t - self.at);
            self.at = t;
        }
        self.value += self.decay(self.at - t);
    }

    fn at(&self, now: u64) -> f64 {
        self.value * self.decay(now.saturating_sub(self.at))
    }

    fn matches(&self, eta: f64, enabled: bool) -> bool {
        self.enabled == enabled && (!enabled || self.eta == eta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorLedger {
    pub successful_reports: Vec<u64>,
    pub misbehaviors: Vec<u64>,
    pub last_misbehavior_time: Option<u64>,
    pos_sum: DecayedSum,
    neg_sum: DecayedSum,
}

impl BehaviorLedger {
    /// Empty ledger whose fast path serves queries made with `params`.
    pub fn new(params: &TrustParams) -> Self {
        Self {
            successful_reports: Vec::new(),
            misbehaviors: Vec::new(),
            last_misbehavior_time: None,
            pos_sum: DecayedSum::new(params.decay_pos, params.decay_enabled),
            neg_sum: DecayedSum::new(params.decay_neg, params.decay_enabled),
        }
    }

    fn insert_sorted(list: &mut Vec<u64>, t: u64) {
        let at = list.partition_point(|&x| x <= t);
        list.insert(at, t);
    }

    pub fn add_report(&mut self, t: u64) {
        Self::insert_sorted(&mut self.successful_reports, t);
        self.pos_sum.push(t);
    }

    pub fn add_misbehavior(&mut self, t: u64) {
        Self::insert_sorted(&mut self.misbehaviors, t);
        self.neg_sum.push(t);
        self.last_misbehavior_time = Some(self.last_misbehavior_time.map_or(t, |l| l.max(t)));
    }

    pub fn report_count(&self) -> usize {
        self.successful_reports.len()
    }

    pub fn misbehavior_count(&self) -> usize {
        self.misbehaviors.len()
    }

    /// Slots since the latest recorded misbehavior, or `now` if none.
    pub fn recent(&self, now: u64) -> u64 {
        now.saturating_sub(self.last_misbehavior_time.unwrap_or(0))
    }
}

pub fn role_effect(vehicle: &Cav, params: &TrustParams) -> Result<f64> {
    params
        .role_trust
        .get(vehicle.role_index)
        .copied()
        .ok_or(SpadError::InvalidRole { index: vehicle.role_index, len: params.role_trust.len() })
}

pub fn positive_effect(ledger: &BehaviorLedger, now: u64, params: &TrustParams) -> f64 {
    let decayed = if ledger.pos_sum.matches(params.decay_pos, params.decay_enabled) {
        ledger.pos_sum.at(now)
    } else {
        ledger
            .successful_reports
            .iter()
            .map(|&t| params.factor(params.decay_pos, now.saturating_sub(t)))
            .sum()
    };
    params.w_report * decayed + params.w_recent * ledger.recent(now) as f64
}

pub fn negative_effect(ledger: &BehaviorLedger, now: u64, params: &TrustParams) -> f64 {
    let decayed = if ledger.neg_sum.matches(params.decay_neg, params.decay_enabled) {
        ledger.neg_sum.at(now)
    } else {
        ledger
            .misbehaviors
            .iter()
            .map(|&t| params.factor(params.decay_neg, now.saturating_sub(t)))
            .sum()
    };
    params.w_mis * decayed
}

/// Expectation of Beta(pos+1, neg+1) with the negative count scaled by `punishment`.
pub fn behavior_effect(pos: f64, neg: f64, punishment: f64) -> f64 {
    let a = pos + 1.0;
    let b = neg + 1.0;
    a / (a + punishment * b)
}

pub fn reputation(vehicle: &Cav, ledger: &BehaviorLedger, now: u64, params: &TrustParams) -> Result<f64> {
    let role = if params.role_weight == 0.0 { 0.0 } else { role_effect(vehicle, params)? };
    let behavior = behavior_effect(
        positive_effect(ledger, now, params),
        negative_effect(ledger, now, params),
        params.punishment,
    );
    Ok((params.role_weight * role + params.behavior_weight * behavior).clamp(0.0, 1.0))
}

/// What a forensics check concluded about one report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportOutcome {
    /// Content was honest; nothing recorded.
    Dismissed,
    /// Misbehavior recorded against the publisher.
    Confirmed,
    /// Confirmed, but this (content, slot) was already recorded.
    Duplicate,
}

/// Ledgers for every vehicle in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ReputationLedger {
    params: TrustParams,
    ledgers: BTreeMap<CavId, BehaviorLedger>,
    recorded_events: BTreeSet<(ContentId, u64)>,
    credited_reporters: BTreeSet<(CavId, ContentId, u64)>,
}

impl ReputationLedger {
    pub fn new(params: TrustParams) -> Self {
        Self {
            params,
            ledgers: BTreeMap::new(),
            recorded_events: BTreeSet::new(),
            credited_reporters: BTreeSet::new(),
        }
    }

    pub fn params(&self) -> &TrustParams {
        &self.params
    }

    pub fn ledger(&mut self, id: CavId) -> &mut BehaviorLedger {
        let params = &self.params;
        self.ledgers.entry(id).or_insert_with(|| BehaviorLedger::new(params))
    }

    pub fn get(&self, id: CavId) -> Option<&BehaviorLedger> {
        self.ledgers.get(&id)
    }

    pub fn reputation(&self, vehicle: &Cav, now: u64) -> Result<f64> {
        match self.ledgers.get(&vehicle.id) {
            Some(l) => reputation(vehicle, l, now, &self.params),
            None => reputation(vehicle, &BehaviorLedger::new(&self.params), now, &self.params),
        }
    }

    /// Apply a forensics verdict on `reporter`'s complaint about `accused`.
    pub fn record_report(
        &mut self,
        reporter: CavId,
        accused: CavId,
        content: ContentId,
        slot: u64,
        verdict: bool,
    ) -> Result<ReportOutcome> {
        if reporter == accused {
            return Err(SpadError::SelfReport(reporter));
        }
        if !verdict {
            return Ok(ReportOutcome::Dismissed);
        }
        if self.credited_reporters.insert((reporter, content, slot)) {
            self.ledger(reporter).add_report(slot);
        }
        if self.recorded_events.insert((content, slot)) {
            self.ledger(accused).add_misbehavior(slot);
            Ok(ReportOutcome::Confirmed)
        } else {
            Ok(ReportOutcome::Duplicate)
        }
    }

    /// Forget dedup keys older than `slot`; ledgers are untouched.
    pub fn prune_dedup(&mut self, slot: u64) {
        self.recorded_events.retain(|&(_, s)| s >= slot);
        self.credited_reporters.retain(|&(_, _, s)| s >= slot);
    }

    /// CSV with columns `vehicle_id,slot,reputation,n_report,n_mis`.
    pub fn write_csv<W: Write>(&self, vehicles: &[Cav], now: u64, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["vehicle_id", "slot", "reputation", "n_report", "n_mis"])?;
        for v in vehicles {
            let (nr, nm) = self.get(v.id).map_or((0, 0), |l| (l.report_count(), l.misbehavior_count()));
            w.write_record([
                v.id.to_string(),
                now.to_string(),
                format!("{:.6}", self.reputation(v, now)?),
                nr.to_string(),
                nm.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BehaviorProfile;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::collections::BTreeMap as Map;

    fn vehicle(id: CavId, role: usize) -> Cav {
        Cav {
            id,
            role_index: role,
            behavior_profile: BehaviorProfile::Legitimate,
            sensing_capacity: Map::new(),
            processing_capacity: 0.5,
            cache_capacity_bytes: 0,
        }
    }

    fn only_reports() -> TrustParams {
        TrustParams { w_recent: 0.0, ..Default::default() }
    }

    #[test]
    fn role_effect_examples() {
        let p = TrustParams { role_trust: vec![3.0, 10.0], ..Default::default() };
        assert_eq!(role_effect(&vehicle(1, 1), &p).unwrap(), 10.0);
        assert_eq!(role_effect(&vehicle(1, 0), &p).unwrap(), role_effect(&vehicle(2, 0), &p).unwrap());
        assert_eq!(role_effect(&vehicle(1, 2), &p), Err(SpadError::InvalidRole { index: 2, len: 2 }));
    }

    #[test]
    fn positive_effect_examples() {
        let p = only_reports();
        let mut l = BehaviorLedger::new(&p);
        assert_eq!(positive_effect(&l, 0, &TrustParams::default()), 0.0);
        l.add_report(100);
        assert_abs_diff_eq!(positive_effect(&l, 100, &p), 1.0, epsilon = 1e-15);
        l.add_report(0);
        assert_abs_diff_eq!(positive_effect(&l, 100, &p), (-0.1f64).exp() + 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(positive_effect(&l, 100, &p), 1.9048, epsilon = 1e-4);
    }

    #[test]
    fn recent_term_counts_clean_slots() {
        let p = TrustParams::default();
        let mut l = BehaviorLedger::new(&p);
        assert_eq!(positive_effect(&l, 40, &p), 40.0);
        l.add_misbehavior(30);
        assert_eq!(positive_effect(&l, 40, &p), 10.0);
    }

    #[test]
    fn negative_effect_examples() {
        let p = TrustParams::default();
        let mut l = BehaviorLedger::new(&p);
        assert_eq!(negative_effect(&l, 7, &p), 0.0);
        l.add_misbehavior(7);
        assert_abs_diff_eq!(negative_effect(&l, 7, &p), 1.0, epsilon = 1e-15);
        let mut l = BehaviorLedger::new(&p);
        l.add_misbehavior(0);
        l.add_misbehavior(100);
        assert_abs_diff_eq!(negative_effect(&l, 100, &p), 1.9048, epsilon = 1e-4);
    }

    #[test]
    fn behavior_effect_examples() {
        assert_eq!(behavior_effect(0.0, 0.0, 1.0), 0.5);
        assert_abs_diff_eq!(behavior_effect(0.0, 0.0, 1.2), 1.0 / 2.2, epsilon = 1e-15);
        assert!(behavior_effect(1e12, 3.0, 1.2) > 1.0 - 1e-9);
    }

    #[test]
    fn reputation_examples() {
        let p = TrustParams { role_trust: vec![10.0], ..Default::default() };
        let l = BehaviorLedger::new(&p);
        let r = reputation(&vehicle(1, 0), &l, 0, &p).unwrap();
        assert_abs_diff_eq!(r, 0.5 + 0.5 / 2.2, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.7273, epsilon = 1e-4);

        let bit = TrustParams::bit(vec![10.0]);
        assert_eq!(reputation(&vehicle(1, 0), &BehaviorLedger::new(&bit), 0, &bit).unwrap(), 0.5);

        let zero = TrustParams { role_weight: 0.0, behavior_weight: 0.0, ..p };
        assert_eq!(reputation(&vehicle(1, 0), &l, 50, &zero).unwrap(), 0.0);
    }

    #[test]
    fn reputation_is_clamped() {
        let p = TrustParams { role_weight: 0.2, role_trust: vec![10.0], ..Default::default() };
        let l = BehaviorLedger::new(&p);
        assert_eq!(reputation(&vehicle(1, 0), &l, 100, &p).unwrap(), 1.0);
    }

    #[test]
    fn report_handling() {
        let mut led = ReputationLedger::new(TrustParams::default());
        assert_eq!(led.record_report(1, 2, 10, 5, false).unwrap(), ReportOutcome::Dismissed);
        assert!(led.get(1).is_none() && led.get(2).is_none());
        assert_eq!(led.record_report(1, 2, 10, 5, true).unwrap(), ReportOutcome::Confirmed);
        assert_eq!(led.get(1).unwrap().successful_reports, vec![5]);
        assert_eq!(led.get(2).unwrap().misbehaviors, vec![5]);
        assert_eq!(led.record_report(3, 2, 10, 5, true).unwrap(), ReportOutcome::Duplicate);
        assert_eq!(led.get(2).unwrap().misbehavior_count(), 1);
        assert_eq!(led.get(3).unwrap().report_count(), 1);
        assert_eq!(led.record_report(4, 4, 11, 5, true), Err(SpadError::SelfReport(4)));
    }

    #[test]
    fn csv_dump() {
        let mut led = ReputationLedger::new(TrustParams::default());
        led.record_report(1, 2, 10, 5, true).unwrap();
        let vs = [vehicle(1, 0), vehicle(2, 0)];
        let mut buf = Vec::new();
        led.write_csv(&vs, 5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "vehicle_id,slot,reputation,n_report,n_mis");
        assert!(lines[1].starts_with("1,5,") && lines[1].ends_with(",1,0"));
        assert!(lines[2].starts_with("2,5,") && lines[2].ends_with(",0,1"));
    }

    fn arb_events() -> impl Strategy<Value = Vec<(u64, bool)>> {
        proptest::collection::vec((0u64..300, any::<bool>()), 0..40)
    }

    fn build(events: &[(u64, bool)], p: &TrustParams) -> BehaviorLedger {
        let mut l = BehaviorLedger::new(p);
        for &(t, good) in events {
            if good { l.add_report(t) } else { l.add_misbehavior(t) }
        }
        l
    }

    proptest! {
        #[test]
        fn incremental_sums_match_direct_sums(events in arb_events(), extra in 0u64..500) {
            let p = TrustParams::default();
            let l = build(&events, &p);
            let now = events.iter().map(|e| e.0).max().unwrap_or(0) + extra;
            let direct_pos: f64 = l.successful_reports.iter().map(|&t| (-0.001 * (now - t) as f64).exp()).sum();
            let direct_neg: f64 = l.misbehaviors.iter().map(|&t| (-0.001 * (now - t) as f64).exp()).sum();
            prop_assert!((positive_effect(&l, now, &p) - direct_pos - l.recent(now) as f64).abs() < 1e-9);
            prop_assert!((negative_effect(&l, now, &p) - direct_neg).abs() < 1e-9);
        }

        #[test]
        fn monotone_in_events(events in arb_events(), t in 0u64..300, extra in 0u64..100, spad in any::<bool>()) {
            let p = if spad { TrustParams::default() } else { TrustParams::bit(vec![1.0, 5.5, 10.0]) };
            let v = vehicle(1, 1);
            let base = build(&events, &p);
            let now = events.iter().map(|e| e.0).max().unwrap_or(0).max(t) + extra;
            let r0 = reputation(&v, &base, now, &p).unwrap();
            let mut worse = base.clone();
            worse.add_misbehavior(t);
            prop_assert!(reputation(&v, &worse, now, &p).unwrap() <= r0 + 1e-15);
            let mut better = base.clone();
            better.add_report(t);
            prop_assert!(reputation(&v, &better, now, &p).unwrap() >= r0 - 1e-15);
        }

        #[test]
        fn decay_shrinks_old_events(t in 0u64..1000, a in 0u64..1000, b in 1u64..1000) {
            let p = only_reports();
            let mut l = BehaviorLedger::new(&p);
            l.add_report(t);
            prop_assert!(positive_effect(&l, t + a + b, &p) < positive_effect(&l, t + a, &p));
        }

        #[test]
        fn bit_reduces_to_beta_mean(events in arb_events(), extra in 0u64..1000) {
            let p = TrustParams::bit(vec![5.0]);
            let l = build(&events, &p);
            let now = events.iter().map(|e| e.0).max().unwrap_or(0) + extra;
            let nr = l.report_count() as f64;
            let nm = l.misbehavior_count() as f64;
            let be = behavior_effect(positive_effect(&l, now, &p), negative_effect(&l, now, &p), p.punishment);
            prop_assert!((be - (nr + 1.0) / (nr + nm + 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn punishment_asymmetry_up_to_500_slots() {
        let harsh = TrustParams::default();
        let mild = TrustParams { punishment: 1.0, ..Default::default() };
        let v = vehicle(1, 1);
        let mut lh = BehaviorLedger::new(&harsh);
        let mut lm = BehaviorLedger::new(&mild);
        lh.add_misbehavior(0);
        lm.add_misbehavior(0);
        for k in 0..=500 {
            assert!(reputation(&v, &lh, k, &harsh).unwrap() < reputation(&v, &lm, k, &mild).unwrap());
        }
    }
}
