//! Static pricing game between a subscriber group (leader, sets payments)
//! and a publisher (follower, sets service quality).

mod oracle;

pub use oracle::{solve_brute_force, BruteForceResult};

use crate::content::QoCSVector;
use crate::economics::{member_payment, part_satisfaction, EconParams, PriceVector, SubscriberGroup};
use crate::error::{Result, SpadError};

/// Delay and energy for the two parts. Constant in the strategies, so they
/// shift utilities without moving the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkCosts {
    pub delay_s: (f64, f64),
    pub energy: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameInstance {
    /// Subscriber counts (raw, result).
    pub j: (usize, usize),
    pub econ: EconParams,
    pub sensing_capacity: f64,
    pub processing_capacity: f64,
    pub popularity: f64,
    pub reputation: f64,
    pub link: LinkCosts,
}

impl GameInstance {
    pub fn from_group(
        group: &SubscriberGroup,
        econ: EconParams,
        sensing_capacity: f64,
        processing_capacity: f64,
        popularity: f64,
        reputation: f64,
    ) -> Self {
        Self {
            j: (group.j1(), group.j2()),
            econ,
            sensing_capacity,
            processing_capacity,
            popularity,
            reputation,
            link: LinkCosts::default(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.j.0 + self.j.1 == 0 {
            return Err(SpadError::EmptyGroup(0));
        }
        self.econ.check()?;
        for (name, v) in [("sensing_capacity", self.sensing_capacity), ("processing_capacity", self.processing_capacity)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SpadError::Domain(format!("{name} = {v} outside [0,1]")));
            }
        }
        Ok(())
    }

    pub fn count(&self, raw: bool) -> usize {
        if raw { self.j.0 } else { self.j.1 }
    }

    pub fn capacity(&self, raw: bool) -> f64 {
        if raw { self.sensing_capacity } else { self.processing_capacity }
    }

    /// α f R
    pub fn scale(&self) -> f64 {
        self.econ.satisfaction_coeff * self.popularity * self.reputation
    }

    /// ξ ε
    pub fn omega(&self, raw: bool) -> f64 {
        self.econ.xi(raw) * self.econ.epsilon(raw)
    }

    /// ξ ε κ
    pub fn lambda(&self, raw: bool) -> f64 {
        self.omega(raw) * self.capacity(raw)
    }

    /// J A − 4 Ω (κ + 1)
    pub fn psi(&self, raw: bool) -> f64 {
        self.count(raw) as f64 * self.scale() - 4.0 * self.omega(raw) * (self.capacity(raw) + 1.0)
    }

    /// Ω² + J A Λ
    pub fn upsilon(&self, raw: bool) -> f64 {
        self.omega(raw).powi(2) + self.count(raw) as f64 * self.scale() * self.lambda(raw)
    }

    /// Payment at which the follower's response saturates at q = 1.
    pub fn saturation_price(&self, raw: bool) -> f64 {
        2.0 * self.lambda(raw) / (self.count(raw) as f64 * self.econ.theta(raw))
    }

    fn part_group_utility(&self, raw: bool, p: f64, q: f64) -> f64 {
        let j = self.count(raw) as f64;
        let delay = if raw { self.link.delay_s.0 } else { self.link.delay_s.1 };
        j * (part_satisfaction(self.scale(), self.capacity(raw), q)
            - member_payment(self.econ.theta(raw), p, q)
            - self.econ.gamma(raw) * delay)
    }

    fn part_publisher_utility(&self, raw: bool, p: f64, q: f64) -> f64 {
        let j = self.count(raw);
        if j == 0 {
            return 0.0;
        }
        let energy = if raw { self.link.energy.0 } else { self.link.energy.1 };
        j as f64 * member_payment(self.econ.theta(raw), p, q) - self.lambda(raw) * q * q - energy
    }

    pub fn group_utility(&self, price: &PriceVector, qocs: &QoCSVector) -> f64 {
        self.part_group_utility(true, price.raw_price, qocs.raw_quality)
            + self.part_group_utility(false, price.result_price, qocs.result_quality)
    }

    pub fn publisher_utility(&self, price: &PriceVector, qocs: &QoCSVector) -> f64 {
        self.part_publisher_utility(true, price.raw_price, qocs.raw_quality)
            + self.part_publisher_utility(false, price.result_price, qocs.result_quality)
            - self.econ.listing_fee
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartCase {
    /// Ψ ≥ 0: the group pays enough for full quality.
    HighPayment,
    /// Ψ < 0: quality strictly inside (0, 1].
    Interior,
    /// No subscriber for this part.
    Inactive,
}

impl PartCase {
    pub fn label(&self) -> &'static str {
        match self {
            PartCase::HighPayment => "HIGH_PAYMENT",
            PartCase::Interior => "INTERIOR",
            PartCase::Inactive => "INACTIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub price: PriceVector,
    pub qocs: QoCSVector,
    pub case_flags: [PartCase; 2],
}

fn response(inst: &GameInstance, raw: bool, p: f64) -> Result<f64> {
    let j = inst.count(raw);
    if j == 0 {
        return Ok(0.0);
    }
    let lambda = inst.lambda(raw);
    if lambda <= 0.0 {
        return Err(SpadError::DegenerateCapacity { part: if raw { 1 } else { 2 } });
    }
    let slope = j as f64 * inst.econ.theta(raw) / (2.0 * lambda);
    if p >= inst.saturation_price(raw) {
        Ok(1.0)
    } else {
        Ok((slope * p).min(1.0))
    }
}

/// The publisher's quality choice given payments.
pub fn best_response_qocs(price: &PriceVector, inst: &GameInstance) -> Result<QoCSVector> {
    Ok(QoCSVector::new(response(inst, true, price.raw_price)?, response(inst, false, price.result_price)?))
}

fn part_price(inst: &GameInstance, raw: bool) -> (f64, PartCase) {
    let j = inst.count(raw);
    if j == 0 {
        return (0.0, PartCase::Inactive);
    }
    let cap = inst.econ.price_cap;
    if inst.psi(raw) >= 0.0 {
        (inst.saturation_price(raw).clamp(0.0, cap), PartCase::HighPayment)
    } else {
        let p = (inst.upsilon(raw).sqrt() - inst.omega(raw)) / (j as f64 * inst.econ.theta(raw));
        (p.clamp(0.0, cap), PartCase::Interior)
    }
}

/// The subscriber group's payment at equilibrium.
pub fn optimal_price(inst: &GameInstance) -> Result<PriceVector> {
    inst.econ.check()?;
    Ok(PriceVector::new(part_price(inst, true).0, part_price(inst, false).0))
}

fn part_quality(inst: &GameInstance, raw: bool, case: PartCase, p: f64) -> Result<f64> {
    match case {
        PartCase::Inactive => Ok(0.0),
        _ if inst.lambda(raw) <= 0.0 => Err(SpadError::DegenerateCapacity { part: if raw { 1 } else { 2 } }),
        PartCase::HighPayment => response(inst, raw, p),
        PartCase::Interior => {
            let unclamped = (inst.upsilon(raw).sqrt() - inst.omega(raw)) / (inst.count(raw) as f64 * inst.econ.theta(raw));
            if unclamped > inst.econ.price_cap {
                // the cap binds; the follower answers the capped price
                response(inst, raw, p)
            } else {
                Ok(((inst.upsilon(raw).sqrt() - inst.omega(raw)) / (2.0 * inst.lambda(raw))).min(1.0))
            }
        }
    }
}

/// Closed-form equilibrium of the static game.
pub fn solve_se(inst: &GameInstance) -> Result<Equilibrium> {
    inst.check()?;
    let (p1, c1) = part_price(inst, true);
    let (p2, c2) = part_price(inst, false);
    Ok(Equilibrium {
        price: PriceVector::new(p1, p2),
        qocs: QoCSVector::new(part_quality(inst, true, c1, p1)?, part_quality(inst, false, c2, p2)?),
        case_flags: [c1, c2],
    })
}

/// Outcome when the group pays a fixed price and the publisher best-responds.
pub fn fixed_price_outcome(inst: &GameInstance, price: PriceVector) -> Result<(PriceVector, QoCSVector)> {
    let mut p = price.clamped(inst.econ.price_cap);
    if inst.j.0 == 0 {
        p.raw_price = 0.0;
    }
    if inst.j.1 == 0 {
        p.result_price = 0.0;
    }
    Ok((p, best_response_qocs(&p, inst)?))
}
