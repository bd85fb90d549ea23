//! Scenario configuration: one JSON document holding every knob of a run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::d3qn::TrainConfig;
use crate::error::{Error, Result};
use crate::geometry::{Disc, KinematicLimits, Rect, Vec2};
use crate::mdp::RewardWeights;
use crate::orca::OrcaParams;

/// Major version of the scenario config format.
pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// Physical description shared by all UAVs of one role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub radius: f64,
    pub sensing_range: f64,
    pub limits: KinematicLimits,
}

impl BodySpec {
    fn validate(&self, role: &str) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::config(format!("{role}: radius must be > 0")));
        }
        if !(self.sensing_range >= 0.0) {
            return Err(Error::config(format!("{role}: sensing_range must be >= 0")));
        }
        self.limits
            .validate()
            .map_err(|e| Error::config(format!("{role}: {e}")))
    }
}

/// Slot counts of the observation encodings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    /// Sensed T2 slots per encoding.
    pub k_nearest_t2: usize,
    /// Peer T1 slots in the swarm encoding; `None` means `n_t1 - 1`.
    pub k_nearest_t1: Option<usize>,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            k_nearest_t2: 5,
            k_nearest_t1: None,
        }
    }
}

/// Inclusive range of initial data per device, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitsRange {
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub format_version: u32,
    pub bounds: Rect,
    pub departure_area: Rect,
    pub landing_area: Rect,
    pub obstacles: Vec<Disc>,
    pub no_fly_zones: Vec<Disc>,
    /// N: IoT devices.
    pub n_devices: usize,
    /// I: mission (T1) UAVs.
    pub n_t1: usize,
    /// Background (T2) UAVs.
    pub n_t2: usize,
    pub jammer: bool,
    /// T: mission deadline in steps.
    pub deadline_steps: u32,
    /// T^J: jammer flight budget in steps.
    pub jammer_deadline_steps: u32,
    /// Δt in seconds.
    pub dt: f64,
    pub arrival_radius: f64,
    pub safe_distance: f64,
    /// Range within which T1s share full information.
    pub comm_range: f64,
    pub device_bits: BitsRange,
    pub channel: ChannelParams,
    pub t1_body: BodySpec,
    pub t2_body: BodySpec,
    pub jammer_body: BodySpec,
    /// τ: history length for the jammer scenarios.
    pub history_len: usize,
    pub orca: OrcaParams,
    pub features: FeatureParams,
    pub rewards: RewardWeights,
    pub kmeans_max_iters: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::small_map()
    }
}

/// Named starting points for `gen-scenario`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Single,
    Swarm2,
    Swarm4,
    Jammed,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Preset::Single),
            "swarm2" => Ok(Preset::Swarm2),
            "swarm4" => Ok(Preset::Swarm4),
            "jammed" => Ok(Preset::Jammed),
            other => Err(Error::config(format!(
                "unknown preset '{other}' (expected single, swarm2, swarm4 or jammed)"
            ))),
        }
    }
}

impl ScenarioConfig {
    /// The 200 m × 200 m desk-scale map with one T1, ten devices and ten T2s.
    pub fn small_map() -> Self {
        let t1_limits = KinematicLimits {
            max_speed: 6.0,
            max_turn_per_step: std::f64::consts::FRAC_PI_4,
            n_speeds: 2,
            n_headings: 9,
        };
        ScenarioConfig {
            format_version: CONFIG_FORMAT_VERSION,
            bounds: Rect::new(Vec2::new(0.0, 0.0), Vec2::new(200.0, 200.0)),
            departure_area: Rect::new(Vec2::new(0.0, 0.0), Vec2::new(30.0, 30.0)),
            landing_area: Rect::new(Vec2::new(170.0, 170.0), Vec2::new(200.0, 200.0)),
            obstacles: Vec::new(),
            no_fly_zones: Vec::new(),
            n_devices: 10,
            n_t1: 1,
            n_t2: 10,
            jammer: false,
            deadline_steps: 150,
            jammer_deadline_steps: 150,
            dt: 1.0,
            arrival_radius: 6.0,
            safe_distance: 4.0,
            comm_range: 100.0,
            device_bits: BitsRange {
                min: 10_000_000,
                max: 30_000_000,
            },
            channel: ChannelParams::default(),
            t1_body: BodySpec {
                radius: 1.0,
                sensing_range: 30.0,
                limits: t1_limits,
            },
            t2_body: BodySpec {
                radius: 1.0,
                sensing_range: 30.0,
                limits: KinematicLimits {
                    max_speed: 4.0,
                    max_turn_per_step: std::f64::consts::PI,
                    n_speeds: 4,
                    n_headings: 17,
                },
            },
            jammer_body: BodySpec {
                radius: 1.0,
                sensing_range: 50.0,
                limits: t1_limits,
            },
            history_len: 4,
            orca: OrcaParams::default(),
            features: FeatureParams::default(),
            rewards: RewardWeights::default(),
            kmeans_max_iters: 100,
            train: TrainConfig::default(),
            seed: 0,
        }
    }

    pub fn preset(preset: Preset, n_devices: usize) -> Result<Self> {
        if n_devices == 0 {
            return Err(Error::config("devices must be >= 1"));
        }
        let mut c = ScenarioConfig::small_map();
        c.n_devices = n_devices;
        match preset {
            Preset::Single => {}
            Preset::Swarm2 => c.n_t1 = 2,
            Preset::Swarm4 => c.n_t1 = 4,
            Preset::Jammed => c.jammer = true,
        }
        c.validate()?;
        Ok(c)
    }

    /// Peer T1 slots in the swarm encoding.
    pub fn k_nearest_t1(&self) -> usize {
        self.features
            .k_nearest_t1
            .unwrap_or(self.n_t1.saturating_sub(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::format(format!(
                "unsupported config format_version {} (expected {})",
                self.format_version, CONFIG_FORMAT_VERSION
            )));
        }
        for (name, r) in [
            ("bounds", &self.bounds),
            ("departure_area", &self.departure_area),
            ("landing_area", &self.landing_area),
        ] {
            if !r.is_valid() {
                return Err(Error::config(format!("{name} is not a valid rectangle")));
            }
        }
        if !self.bounds.contains_rect(&self.departure_area) || !self.bounds.contains_rect(&self.landing_area) {
            return Err(Error::config("departure and landing areas must lie within bounds"));
        }
        if self.n_devices < 1 {
            return Err(Error::config("n_devices must be >= 1"));
        }
        if self.n_t1 < 1 {
            return Err(Error::config("n_t1 must be >= 1"));
        }
        if self.deadline_steps < 1 || self.jammer_deadline_steps < 1 {
            return Err(Error::config("deadlines must be >= 1 step"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt must be > 0"));
        }
        if !(self.arrival_radius > 0.0) || !(self.safe_distance > 0.0) || !(self.comm_range >= 0.0) {
            return Err(Error::config("arrival_radius and safe_distance must be > 0, comm_range >= 0"));
        }
        if self.device_bits.min > self.device_bits.max || self.device_bits.max == 0 {
            return Err(Error::config("device_bits must satisfy 0 < max and min <= max"));
        }
        for d in self.obstacles.iter().chain(&self.no_fly_zones) {
            if !(d.radius >= 0.0) || !d.center.is_finite() {
                return Err(Error::config("obstacle discs need finite centers and radius >= 0"));
            }
        }
        self.channel.validate()?;
        self.t1_body.validate("t1_body")?;
        self.t2_body.validate("t2_body")?;
        self.jammer_body.validate("jammer_body")?;
        self.orca.validate()?;
        self.rewards.validate()?;
        self.train.validate()?;
        if self.kmeans_max_iters < 1 {
            return Err(Error::config("kmeans_max_iters must be >= 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates a config document, rejecting unknown format majors
    /// before looking at any other field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == CONFIG_FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::format(format!(
                    "unsupported config format_version {v} (expected {CONFIG_FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::format("config is missing format_version")),
        }
        let config: ScenarioConfig = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
