//! Uplink radio model: log-distance path gain, SINR under optional jamming,
//! Shannon rate and per-step data collection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, Vec2};

/// Link-budget parameters. Powers in dBm, gains in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Gain at the 1 m reference distance.
    pub reference_gain_db: f64,
    pub path_loss_exponent: f64,
    /// Distances below this are clamped to it.
    pub min_distance: f64,
    pub noise_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub device_tx_power_dbm: f64,
    pub jammer_tx_power_dbm: f64,
    /// Association gate on received device power.
    pub rx_sensitivity_dbm: f64,
    /// Multiply each link by an exponential (Rayleigh power) fading draw.
    #[serde(default)]
    pub rayleigh_fading: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            reference_gain_db: -30.0,
            path_loss_exponent: 2.5,
            min_distance: 1.0,
            noise_power_dbm: -100.0,
            bandwidth_hz: 1.0e6,
            device_tx_power_dbm: 20.0,
            jammer_tx_power_dbm: 20.0,
            // about 63 m collection radius with the gains above
            rx_sensitivity_dbm: -55.0,
            rayleigh_fading: false,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exponent >= 2.0) {
            return Err(Error::config("path_loss_exponent must be >= 2"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::config("bandwidth_hz must be > 0"));
        }
        if !(self.min_distance > 0.0) {
            return Err(Error::config("min_distance must be > 0"));
        }
        let finite = [
            self.reference_gain_db,
            self.noise_power_dbm,
            self.device_tx_power_dbm,
            self.jammer_tx_power_dbm,
            self.rx_sensitivity_dbm,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("channel powers and gains must be finite"));
        }
        Ok(())
    }

    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.noise_power_dbm)
    }

    /// Distance at which device power drops to the sensitivity gate.
    pub fn collection_radius(&self) -> f64 {
        let margin_db = self.device_tx_power_dbm + self.reference_gain_db - self.rx_sensitivity_dbm;
        10f64.powf(margin_db / (10.0 * self.path_loss_exponent)).max(self.min_distance)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Linear path gain `g0 · max(d, d_min)^(-α)`.
pub fn path_gain(d: f64, params: &ChannelParams) -> f64 {
    let d = d.max(params.min_distance);
    db_to_linear(params.reference_gain_db) * d.powf(-params.path_loss_exponent)
}

/// Received power in mW from a transmitter at `tx_dbm` over distance `d`.
pub fn received_power_mw(tx_dbm: f64, d: f64, params: &ChannelParams) -> f64 {
    dbm_to_mw(tx_dbm) * path_gain(d, params)
}

/// An active interferer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub position: Vec2,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkStats {
    pub rx_power_mw: f64,
    pub interference_mw: f64,
    /// Linear SINR.
    pub sinr: f64,
    pub rate_bps: f64,
}

impl LinkStats {
    fn from_powers(rx_power_mw: f64, interference_mw: f64, params: &ChannelParams) -> Self {
        let sinr = rx_power_mw / (params.noise_mw() + interference_mw);
        LinkStats {
            rx_power_mw,
            interference_mw,
            sinr,
            rate_bps: shannon_rate(sinr, params.bandwidth_hz),
        }
    }
}

pub fn shannon_rate(sinr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr).log2()
}

/// Uplink statistics at a UAV receiving from a device, with optional jamming.
pub fn link_stats(
    uav_pos: Vec2,
    device_pos: Vec2,
    jammer: Option<Interferer>,
    params: &ChannelParams,
) -> LinkStats {
    link_stats_faded(uav_pos, device_pos, jammer, params, 1.0, 1.0)
}

/// As [`link_stats`], with power fading multipliers on the signal and jamming links.
pub fn link_stats_faded(
    uav_pos: Vec2,
    device_pos: Vec2,
    jammer: Option<Interferer>,
    params: &ChannelParams,
    signal_fade: f64,
    jammer_fade: f64,
) -> LinkStats {
    let rx = received_power_mw(params.device_tx_power_dbm, distance(uav_pos, device_pos), params) * signal_fade;
    let interference = jammer.map_or(0.0, |j| {
        received_power_mw(j.tx_power_dbm, distance(uav_pos, j.position), params) * jammer_fade
    });
    LinkStats::from_powers(rx, interference, params)
}

/// Bits delivered in one step: `min(⌊rate·dt⌋, remaining)`.
pub fn collect(rate_bps: f64, dt: f64, remaining_bits: u64) -> u64 {
    let offered = (rate_bps * dt).max(0.0).floor();
    if offered >= remaining_bits as f64 {
        remaining_bits
    } else {
        offered as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> ChannelParams {
        ChannelParams {
            reference_gain_db: -30.0,
            path_loss_exponent: 2.0,
            min_distance: 1.0,
            ..ChannelParams::default()
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn path_gain_reference_points() {
        let p = params();
        assert!(rel(path_gain(1.0, &p), 1e-3) < 1e-12);
        assert!(rel(path_gain(10.0, &p), 1e-5) < 1e-12);
        assert_eq!(path_gain(0.0, &p), path_gain(1.0, &p));
        assert_eq!(path_gain(0.3, &p), path_gain(1.0, &p));
    }

    #[test]
    fn rate_at_unit_and_triple_snr() {
        let mut p = params();
        // rx at 1 m is device_tx + g0; put noise exactly there
        p.noise_power_dbm = p.device_tx_power_dbm + p.reference_gain_db;
        let s = link_stats(Vec2::ZERO, Vec2::new(1.0, 0.0), None, &p);
        assert!((s.sinr - 1.0).abs() < 1e-12);
        assert!(rel(s.rate_bps, p.bandwidth_hz) < 1e-12);

        p.noise_power_dbm -= linear_to_db(3.0);
        let s = link_stats(Vec2::ZERO, Vec2::new(1.0, 0.0), None, &p);
        assert!((s.sinr - 3.0).abs() < 1e-9);
        assert!(rel(s.rate_bps, 2.0 * p.bandwidth_hz) < 1e-9);
    }

    #[test]
    fn jammer_equal_to_signal_pushes_sinr_below_one() {
        let p = params();
        // device at 10 m, jammer at 10 m on the other side, same power
        let mut p2 = p;
        p2.jammer_tx_power_dbm = p.device_tx_power_dbm;
        let uav = Vec2::ZERO;
        let jam = Interferer { position: Vec2::new(-10.0, 0.0), tx_power_dbm: p2.jammer_tx_power_dbm };
        let s = link_stats(uav, Vec2::new(10.0, 0.0), Some(jam), &p2);
        // hand budget: rx = 100 mW · 1e-3 · 1e-2 = 1e-3 mW, noise 1e-10 mW
        let rx = 1e-3;
        let noise = 1e-10;
        assert!(rel(s.rx_power_mw, rx) < 1e-12);
        assert!(rel(s.interference_mw, rx) < 1e-12);
        assert!(rel(s.sinr, rx / (noise + rx)) < 1e-12);
        assert!(s.sinr < 1.0 && s.sinr > 1.0 - 1e-6);
    }

    #[test]
    fn collect_cases() {
        assert_eq!(collect(1e6, 0.5, 1_000_000_000), 500_000);
        assert_eq!(collect(1e6, 1.0, 100), 100);
        assert_eq!(collect(1e6, 1.0, 0), 0);
        assert_eq!(collect(0.0, 1.0, 10), 0);
    }

    #[test]
    fn collection_radius_matches_gate() {
        let p = ChannelParams::default();
        let r = p.collection_radius();
        let at_edge = mw_to_dbm(received_power_mw(p.device_tx_power_dbm, r, &p));
        assert!((at_edge - p.rx_sensitivity_dbm).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn rate_monotone(d1 in 0.0f64..500.0, dd in 0.0f64..500.0, jd in 1.0f64..500.0, jp in -20.0f64..30.0) {
            let p = ChannelParams::default();
            let near = link_stats(Vec2::ZERO, Vec2::new(d1, 0.0), None, &p);
            let far = link_stats(Vec2::ZERO, Vec2::new(d1 + dd, 0.0), None, &p);
            prop_assert!(far.rate_bps <= near.rate_bps);
            let jam = Interferer { position: Vec2::new(0.0, jd), tx_power_dbm: jp };
            let jammed = link_stats(Vec2::ZERO, Vec2::new(d1, 0.0), Some(jam), &p);
            prop_assert!(jammed.sinr < near.sinr);
            prop_assert!(jammed.rate_bps <= near.rate_bps);
            let mut louder = p;
            louder.device_tx_power_dbm += 3.0;
            let loud = link_stats(Vec2::ZERO, Vec2::new(d1, 0.0), None, &louder);
            prop_assert!(loud.rate_bps >= near.rate_bps);
            // zero interference is plain SNR
            prop_assert_eq!(near.sinr, near.rx_power_mw / p.noise_mw());
        }
    }
}
