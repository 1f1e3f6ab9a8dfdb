//! Subscriber, group and publisher utilities.

use std::collections::BTreeSet;

use crate::channel::{delay_vector, energy_cost, ChannelParams};
use crate::content::{Content, QoCSVector};
use crate::error::{Result, SpadError};
use crate::model::{Cav, CavId, ContentId};

/// Per-part pairs are ordered (raw, result).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconParams {
    pub satisfaction_coeff: f64,
    pub price_adjust: (f64, f64),
    pub delay_adjust: (f64, f64),
    pub cost_adjust: (f64, f64),
    pub raw_cost_param: f64,
    pub result_cost_param: f64,
    pub listing_fee: f64,
    pub price_cap: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        Self {
            satisfaction_coeff: 28.0,
            price_adjust: (0.75, 0.75),
            delay_adjust: (0.01, 0.01),
            cost_adjust: (1.0, 1.0),
            raw_cost_param: 0.4,
            result_cost_param: 0.4,
            listing_fee: 0.1,
            price_cap: 5.0,
        }
    }
}

impl EconParams {
    pub fn check(&self) -> Result<()> {
        let positive = [
            ("satisfaction_coeff", self.satisfaction_coeff),
            ("price_adjust.0", self.price_adjust.0),
            ("price_adjust.1", self.price_adjust.1),
            ("delay_adjust.0", self.delay_adjust.0),
            ("delay_adjust.1", self.delay_adjust.1),
            ("cost_adjust.0", self.cost_adjust.0),
            ("cost_adjust.1", self.cost_adjust.1),
            ("raw_cost_param", self.raw_cost_param),
            ("result_cost_param", self.result_cost_param),
            ("price_cap", self.price_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(SpadError::Domain(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.listing_fee >= 0.0) {
            return Err(SpadError::Domain("listing_fee must be non-negative".into()));
        }
        Ok(())
    }

    pub fn theta(&self, raw: bool) -> f64 {
        if raw { self.price_adjust.0 } else { self.price_adjust.1 }
    }

    pub fn gamma(&self, raw: bool) -> f64 {
        if raw { self.delay_adjust.0 } else { self.delay_adjust.1 }
    }

    pub fn xi(&self, raw: bool) -> f64 {
        if raw { self.cost_adjust.0 } else { self.cost_adjust.1 }
    }

    pub fn epsilon(&self, raw: bool) -> f64 {
        if raw { self.raw_cost_param } else { self.result_cost_param }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PriceVector {
    pub raw_price: f64,
    pub result_price: f64,
}

impl PriceVector {
    pub fn new(raw_price: f64, result_price: f64) -> Self {
        Self { raw_price, result_price }
    }

    pub fn get(&self, raw: bool) -> f64 {
        if raw { self.raw_price } else { self.result_price }
    }

    pub fn clamped(self, cap: f64) -> Self {
        Self::new(self.raw_price.clamp(0.0, cap), self.result_price.clamp(0.0, cap))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubscriberGroup {
    pub content_id: ContentId,
    pub raw_subscribers: BTreeSet<CavId>,
    pub result_subscribers: BTreeSet<CavId>,
    pub reputation_threshold: f64,
}

impl SubscriberGroup {
    pub fn new(content_id: ContentId, reputation_threshold: f64) -> Self {
        Self { content_id, reputation_threshold, ..Default::default() }
    }

    /// Group with anonymous members `1..=j1` (raw) and `j1+1..=j1+j2` (result).
    pub fn with_counts(content_id: ContentId, j1: usize, j2: usize) -> Self {
        let mut g = Self::new(content_id, 0.0);
        for i in 0..j1 {
            g.raw_subscribers.insert(i as CavId + 1);
        }
        for i in 0..j2 {
            g.result_subscribers.insert((j1 + i) as CavId + 1);
        }
        g
    }

    pub fn insert(&mut self, id: CavId, prefers_raw: bool) {
        if prefers_raw {
            self.result_subscribers.remove(&id);
            self.raw_subscribers.insert(id);
        } else {
            self.raw_subscribers.remove(&id);
            self.result_subscribers.insert(id);
        }
    }

    pub fn contains(&self, id: CavId) -> bool {
        self.raw_subscribers.contains(&id) || self.result_subscribers.contains(&id)
    }

    pub fn j1(&self) -> usize {
        self.raw_subscribers.len()
    }

    pub fn j2(&self) -> usize {
        self.result_subscribers.len()
    }

    pub fn count(&self, raw: bool) -> usize {
        if raw { self.j1() } else { self.j2() }
    }

    pub fn is_empty(&self) -> bool {
        self.j1() + self.j2() == 0
    }

    pub fn members(&self) -> impl Iterator<Item = (CavId, bool)> + '_ {
        self.raw_subscribers
            .iter()
            .map(|&id| (id, true))
            .chain(self.result_subscribers.iter().map(|&id| (id, false)))
    }
}

/// Capacity of `publisher` for one part of `content`.
pub fn part_capacity(publisher: &Cav, content: &Content, raw: bool) -> f64 {
    if raw { publisher.sensing(content.sensor_type) } else { publisher.processing_capacity }
}

/// `scale · ln(1 + capacity · q)` with `scale = α f R`.
pub fn part_satisfaction(scale: f64, capacity: f64, q: f64) -> f64 {
    scale * (capacity * q).ln_1p()
}

/// What one subscriber of a part pays.
pub fn member_payment(theta: f64, p: f64, q: f64) -> f64 {
    theta * p * q
}

/// Total payment leaving a group; equals the publisher's revenue for it.
pub fn group_payment(group: &SubscriberGroup, qocs: &QoCSVector, price: &PriceVector, params: &EconParams) -> f64 {
    [true, false]
        .into_iter()
        .map(|raw| group.count(raw) as f64 * member_payment(params.theta(raw), price.get(raw), qocs.get(raw)))
        .sum()
}

pub fn satisfaction(
    qocs: &QoCSVector,
    publisher: &Cav,
    content: &Content,
    prefers_raw: bool,
    popularity: f64,
    reputation: f64,
    params: &EconParams,
) -> f64 {
    let scale = params.satisfaction_coeff * popularity * reputation;
    part_satisfaction(scale, part_capacity(publisher, content, prefers_raw), qocs.get(prefers_raw))
}

#[allow(clippy::too_many_arguments)]
pub fn subscriber_utility(
    qocs: &QoCSVector,
    price: &PriceVector,
    prefers_raw: bool,
    content: &Content,
    publisher: &Cav,
    channel: &ChannelParams,
    popularity: f64,
    reputation: f64,
    params: &EconParams,
) -> Result<f64> {
    let (d1, d2) = delay_vector(content, channel)?;
    let delay = if prefers_raw { d1 } else { d2 };
    let u = prefers_raw;
    Ok(satisfaction(qocs, publisher, content, u, popularity, reputation, params)
        - member_payment(params.theta(u), price.get(u), qocs.get(u))
        - params.gamma(u) * delay)
}

#[allow(clippy::too_many_arguments)]
pub fn group_utility(
    group: &SubscriberGroup,
    qocs: &QoCSVector,
    price: &PriceVector,
    content: &Content,
    channel: &ChannelParams,
    publisher: &Cav,
    popularity: f64,
    reputation: f64,
    params: &EconParams,
) -> Result<f64> {
    if group.is_empty() {
        return Err(SpadError::EmptyGroup(group.content_id));
    }
    let (d1, d2) = delay_vector(content, channel)?;
    let scale = params.satisfaction_coeff * popularity * reputation;
    let part = |raw: bool, delay: f64| {
        let q = qocs.get(raw);
        group.count(raw) as f64
            * (part_satisfaction(scale, part_capacity(publisher, content, raw), q)
                - member_payment(params.theta(raw), price.get(raw), q)
                - params.gamma(raw) * delay)
    };
    Ok(part(true, d1) + part(false, d2))
}

pub fn publisher_cost(
    qocs: &QoCSVector,
    publisher: &Cav,
    content: &Content,
    params: &EconParams,
    has_raw_subs: bool,
    has_result_subs: bool,
) -> f64 {
    let part = |raw: bool| {
        let q = qocs.get(raw);
        params.xi(raw) * params.epsilon(raw) * part_capacity(publisher, content, raw) * q * q
    };
    let mut c = 0.0;
    if has_raw_subs {
        c += part(true);
    }
    if has_result_subs {
        c += part(false);
    }
    c
}

/// One content served by a publisher within a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedItem {
    pub group: SubscriberGroup,
    pub qocs: QoCSVector,
    pub price: PriceVector,
    pub content: Content,
    pub distance_m: f64,
}

pub fn publisher_utility(
    items: &[PublishedItem],
    publisher: &Cav,
    channel: &ChannelParams,
    params: &EconParams,
) -> Result<f64> {
    let mut total = 0.0;
    for it in items {
        let (has1, has2) = (it.group.j1() > 0, it.group.j2() > 0);
        let (e1, e2) = energy_cost(&it.content, it.distance_m, channel)?;
        let energy = if has1 { e1 } else { 0.0 } + if has2 { e2 } else { 0.0 };
        total += group_payment(&it.group, &it.qocs, &it.price, params)
            - publisher_cost(&it.qocs, publisher, &it.content, params, has1, has2)
            - energy
            - params.listing_fee;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BehaviorProfile;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn publisher(sc: f64, pc: f64) -> Cav {
        Cav {
            id: 100,
            role_index: 0,
            behavior_profile: BehaviorProfile::Legitimate,
            sensing_capacity: BTreeMap::from([(0, sc)]),
            processing_capacity: pc,
            cache_capacity_bytes: 0,
        }
    }

    /// Bandwidth so large that every delay and energy term is negligible.
    fn ideal_channel() -> ChannelParams {
        ChannelParams { bandwidth_hz: 1e300, ..Default::default() }
    }

    #[test]
    fn satisfaction_examples() {
        let p = EconParams::default();
        let c = Content::default();
        let zero = satisfaction(&QoCSVector::new(0.0, 1.0), &publisher(1.0, 1.0), &c, true, 1.0, 0.8, &p);
        assert_eq!(zero, 0.0);
        let s = satisfaction(&QoCSVector::new(1.0, 0.0), &publisher(1.0, 1.0), &c, true, 1.0, 0.8, &p);
        assert_abs_diff_eq!(s, 28.0 * 0.8 * std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s, 15.526_5, epsilon = 1e-4);
        let p2 = EconParams { satisfaction_coeff: 56.0, ..p };
        let s2 = satisfaction(&QoCSVector::new(1.0, 0.0), &publisher(1.0, 1.0), &c, true, 1.0, 0.8, &p2);
        assert_abs_diff_eq!(s2, 2.0 * s, epsilon = 1e-12);
    }

    #[test]
    fn subscriber_utility_examples() {
        let ch = ideal_channel();
        let params = EconParams::default();
        let c = Content::default();
        let pb = publisher(1.0, 1.0);
        let u = subscriber_utility(&QoCSVector::default(), &PriceVector::default(), true, &c, &pb, &ch, 1.0, 0.8, &params)
            .unwrap();
        assert_abs_diff_eq!(u, 0.0, epsilon = 1e-12);
        let u = subscriber_utility(
            &QoCSVector::new(1.0, 0.0),
            &PriceVector::new(1.0, 0.0),
            true,
            &c,
            &pb,
            &ch,
            1.0,
            0.8,
            &params,
        )
        .unwrap();
        assert_abs_diff_eq!(u, 28.0 * 0.8 * std::f64::consts::LN_2 - 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(u, 14.776_5, epsilon = 1e-4);
    }

    #[test]
    fn empty_group_is_rejected() {
        let g = SubscriberGroup::new(3, 0.45);
        let r = group_utility(
            &g,
            &QoCSVector::default(),
            &PriceVector::default(),
            &Content::default(),
            &ideal_channel(),
            &publisher(1.0, 1.0),
            1.0,
            1.0,
            &EconParams::default(),
        );
        assert_eq!(r, Err(SpadError::EmptyGroup(3)));
    }

    #[test]
    fn publisher_cost_examples() {
        let params = EconParams::default();
        let c = Content::default();
        let pb = publisher(0.75, 0.6);
        assert_eq!(publisher_cost(&QoCSVector::default(), &pb, &c, &params, true, true), 0.0);
        let full = publisher_cost(&QoCSVector::new(1.0, 1.0), &pb, &c, &params, true, true);
        assert_abs_diff_eq!(full, 0.4 * 0.75 + 0.4 * 0.6, epsilon = 1e-15);
        let half = publisher_cost(&QoCSVector::new(0.5, 0.5), &pb, &c, &params, true, false);
        assert_abs_diff_eq!(half, 0.075, epsilon = 1e-15);
    }

    #[test]
    fn publisher_utility_examples() {
        let params = EconParams::default();
        let ch = ideal_channel();
        let pb = publisher(0.75, 0.6);
        assert_eq!(publisher_utility(&[], &pb, &ch, &params).unwrap(), 0.0);
        let item = PublishedItem {
            group: SubscriberGroup::with_counts(1, 1, 0),
            qocs: QoCSVector::new(1.0, 0.0),
            price: PriceVector::new(0.4, 0.0),
            content: Content::default(),
            distance_m: 10.0,
        };
        let u = publisher_utility(&[item], &pb, &ch, &params).unwrap();
        assert_abs_diff_eq!(u, 0.3 - 0.3 - 0.1, epsilon = 1e-12);
    }

    #[test]
    fn energy_charged_only_for_subscribed_parts() {
        let params = EconParams { listing_fee: 0.0, ..Default::default() };
        let ch = ChannelParams::default();
        let pb = publisher(0.75, 0.6);
        let content = Content { raw_size_bytes: 500_000, result_size_bytes: 10_000, ..Default::default() };
        let item = PublishedItem {
            group: SubscriberGroup::with_counts(1, 0, 2),
            qocs: QoCSVector::default(),
            price: PriceVector::default(),
            content: content.clone(),
            distance_m: 10.0,
        };
        let (_, e2) = energy_cost(&content, 10.0, &ch).unwrap();
        let u = publisher_utility(&[item], &pb, &ch, &params).unwrap();
        assert_abs_diff_eq!(u, -e2, epsilon = 1e-15);
    }

    fn arb_params() -> impl Strategy<Value = EconParams> {
        (25.0..45.0f64, 0.4..2.0f64, 0.4..2.0f64, 0.0..0.5f64).prop_map(|(a, e1, e2, fee)| EconParams {
            satisfaction_coeff: a,
            raw_cost_param: e1,
            result_cost_param: e2,
            listing_fee: fee,
            ..Default::default()
        })
    }

    proptest! {
        #[test]
        fn group_utility_is_member_sum(
            params in arb_params(), j1 in 0usize..6, j2 in 0usize..6,
            q1 in 0.0..=1.0f64, q2 in 0.0..=1.0f64, p1 in 0.0..5.0f64, p2 in 0.0..5.0f64,
            sc in 0.0..=1.0f64, pc in 0.0..=1.0f64, f in 0.01..1.0f64, r in 0.0..=1.0f64,
            s1 in 100_000u64..500_000, s2 in 1_000u64..20_000,
        ) {
            prop_assume!(j1 + j2 > 0);
            let g = SubscriberGroup::with_counts(1, j1, j2);
            let c = Content { raw_size_bytes: s1, result_size_bytes: s2, ..Default::default() };
            let pb = publisher(sc, pc);
            let ch = ChannelParams::default();
            let q = QoCSVector::new(q1, q2);
            let pr = PriceVector::new(p1, p2);
            let total = group_utility(&g, &q, &pr, &c, &ch, &pb, f, r, &params).unwrap();
            let mut sum = 0.0;
            for (_, raw) in g.members() {
                sum += subscriber_utility(&q, &pr, raw, &c, &pb, &ch, f, r, &params).unwrap();
            }
            prop_assert!((total - sum).abs() < 1e-9);
            if j2 == 0 {
                let single = subscriber_utility(&q, &pr, true, &c, &pb, &ch, f, r, &params).unwrap();
                prop_assert!((total - j1 as f64 * single).abs() < 1e-9);
            }
        }

        #[test]
        fn utility_strictly_decreasing_in_price(p in 0.0..4.0f64, dp in 0.01..1.0f64, q in 0.01..=1.0f64) {
            let params = EconParams::default();
            let ch = ChannelParams::default();
            let c = Content::default();
            let pb = publisher(0.5, 0.5);
            let qv = QoCSVector::new(q, q);
            let lo = subscriber_utility(&qv, &PriceVector::new(p, p), true, &c, &pb, &ch, 1.0, 1.0, &params).unwrap();
            let hi = subscriber_utility(&qv, &PriceVector::new(p + dp, p), true, &c, &pb, &ch, 1.0, 1.0, &params).unwrap();
            prop_assert!(hi < lo);
        }

        #[test]
        fn revenue_equals_group_payment(
            params in arb_params(), j1 in 0usize..6, j2 in 0usize..6,
            q1 in 0.0..=1.0f64, q2 in 0.0..=1.0f64, p1 in 0.0..5.0f64, p2 in 0.0..5.0f64,
        ) {
            let pb = publisher(0.0, 0.0);
            let ch = ideal_channel();
            let item = PublishedItem {
                group: SubscriberGroup::with_counts(1, j1, j2),
                qocs: QoCSVector::new(q1, q2),
                price: PriceVector::new(p1, p2),
                content: Content::default(),
                distance_m: 5.0,
            };
            // zero capacity makes the cost vanish, leaving revenue minus the fee
            let u = publisher_utility(std::slice::from_ref(&item), &pb, &ch, &params).unwrap();
            let paid = group_payment(&item.group, &item.qocs, &item.price, &params);
            prop_assert!((u + params.listing_fee - paid).abs() < 1e-9);
        }
    }
}
