//! V2V link model: gain, transmit power, rate, delay and energy.

use crate::content::Content;
use crate::error::{Result, SpadError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerMode {
    /// Constant transmit power equal to `base_power_dbm`.
    #[default]
    Fixed,
    /// Base power plus the term needed to hold the SINR target at distance d.
    SinrTarget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub rayleigh_coeff: f64,
    pub pathloss_exponent: f64,
    pub sinr_target: f64,
    /// Co-channel interference in watts.
    pub cochannel_interference: f64,
    pub base_power_dbm: f64,
    pub bandwidth_hz: f64,
    /// Carried for completeness; no formula consumes it.
    pub noise_power_dbm: f64,
    pub power_mode: PowerMode,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            rayleigh_coeff: 1.0,
            pathloss_exponent: 4.0,
            sinr_target: 100.0,
            cochannel_interference: 0.0,
            base_power_dbm: 23.0,
            bandwidth_hz: 2e6,
            noise_power_dbm: -110.0,
            power_mode: PowerMode::Fixed,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

fn check_distance(d_m: f64) -> Result<()> {
    if d_m > 0.0 {
        Ok(())
    } else {
        Err(SpadError::Domain(format!("distance {d_m} m must be positive")))
    }
}

pub fn channel_gain(d_m: f64, params: &ChannelParams) -> Result<f64> {
    check_distance(d_m)?;
    Ok(params.rayleigh_coeff.powi(2) * d_m.powf(-params.pathloss_exponent))
}

/// Transmit power in watts.
pub fn transmit_power(d_m: f64, params: &ChannelParams) -> Result<f64> {
    check_distance(d_m)?;
    let base = dbm_to_watts(params.base_power_dbm);
    match params.power_mode {
        PowerMode::Fixed => Ok(base),
        PowerMode::SinrTarget => Ok(base
            + params.sinr_target / params.rayleigh_coeff.powi(2)
                * params.cochannel_interference
                * d_m.powf(params.pathloss_exponent)),
    }
}

/// Bits per second.
pub fn link_rate(params: &ChannelParams) -> f64 {
    params.bandwidth_hz * (1.0 + params.sinr_target).log2()
}

/// Seconds to send `bytes` at `rate_bps`. The only bytes-to-bits conversion.
pub fn bytes_delay(bytes: u64, rate_bps: f64) -> Result<f64> {
    if !(rate_bps > 0.0) {
        return Err(SpadError::ZeroRate);
    }
    Ok(bytes as f64 * 8.0 / rate_bps)
}

/// (raw, result) transmission delay in seconds.
pub fn delay_vector(content: &Content, params: &ChannelParams) -> Result<(f64, f64)> {
    let r = link_rate(params);
    Ok((bytes_delay(content.raw_size_bytes, r)?, bytes_delay(content.result_size_bytes, r)?))
}

/// (raw, result) transmission energy in joules.
pub fn energy_cost(content: &Content, d_m: f64, params: &ChannelParams) -> Result<(f64, f64)> {
    let p = transmit_power(d_m, params)?;
    let (d1, d2) = delay_vector(content, params)?;
    Ok((p * d1, p * d2))
}
