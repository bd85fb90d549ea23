//! Observation encodings and per-step rewards for the four agent roles.
//!
//! Every encoding is expressed in an agent-centric frame: origin at the agent,
//! x-axis toward its destination. Values are clamped to `[-1, 1]`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::channel::mw_to_dbm;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};
use crate::world::{DeviceMode, Role, UavBody, UavId, UavStepEvents, WorldState};

/// Own-state block: goal distance, velocity (2), radius, speed reach, heading (cos, sin), time left.
pub const OWN_WIDTH: usize = 8;
/// Sensed UAV slot: relative position (2), velocity (2), radius, distance, presence.
pub const UAV_SLOT_WIDTH: usize = 7;
/// Device slot: relative position (2), remaining fraction, associated, rx power, active.
pub const DEVICE_SLOT_WIDTH: usize = 6;
/// Peer T1 slot: relative position (2), velocity (2), radius, relative destination (2), max speed, heading, presence.
pub const PEER_SLOT_WIDTH: usize = 10;
/// T1's view of the jammer per history step: relative position (2), presence.
pub const JAMMER_TRACE_WIDTH: usize = 3;
/// Jammer's view of the T1 per history step: relative position (2), velocity (2), radius, presence.
pub const T1_TRACE_WIDTH: usize = 6;
/// Jammer's device slot: relative position (2), active.
pub const JAMMER_DEVICE_WIDTH: usize = 3;

/// Received device power is reported as dB above the association gate over this span.
const RX_SPAN_DB: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncoderKind {
    /// Lone mission UAV.
    T1,
    /// Mission UAV sharing information with peers.
    Swarm,
    /// Mission UAV that also tracks the jammer's recent positions.
    T1VsJammer,
    Jammer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub kind: EncoderKind,
    pub k_nearest_t2: usize,
    pub n_devices: usize,
    pub k_nearest_t1: usize,
    pub tau: usize,
    pub len: usize,
}

impl FeatureLayout {
    pub fn new(kind: EncoderKind, config: &ScenarioConfig) -> FeatureLayout {
        let k2 = config.features.k_nearest_t2;
        let n = config.n_devices;
        let tau = config.history_len;
        let k1 = match kind {
            EncoderKind::Swarm => config.k_nearest_t1(),
            _ => 0,
        };
        let t1_len = OWN_WIDTH + k2 * UAV_SLOT_WIDTH + n * DEVICE_SLOT_WIDTH;
        let len = match kind {
            EncoderKind::T1 => t1_len,
            EncoderKind::Swarm => t1_len + k1 * PEER_SLOT_WIDTH,
            EncoderKind::T1VsJammer => t1_len + tau * JAMMER_TRACE_WIDTH,
            EncoderKind::Jammer => {
                OWN_WIDTH + k2 * UAV_SLOT_WIDTH + tau * T1_TRACE_WIDTH + n * JAMMER_DEVICE_WIDTH
            }
        };
        FeatureLayout {
            kind,
            k_nearest_t2: k2,
            n_devices: n,
            k_nearest_t1: k1,
            tau,
            len,
        }
    }

    /// Offset of the first device slot in T1-family encodings.
    pub fn device_offset(&self) -> usize {
        OWN_WIDTH + self.k_nearest_t2 * UAV_SLOT_WIDTH
    }

    fn check(&self, kind: EncoderKind, config: &ScenarioConfig) -> Result<()> {
        let expected = FeatureLayout::new(kind, config);
        if *self != expected {
            return Err(Error::config(format!(
                "feature layout {self:?} does not match the scenario ({expected:?})"
            )));
        }
        Ok(())
    }
}

/// Recent observations of one other UAV, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationHistory {
    tau: usize,
    ring: VecDeque<Option<Observed>>,
}

/// Observable state of a tracked UAV at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observed {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

impl ObservationHistory {
    pub fn new(tau: usize) -> Self {
        ObservationHistory {
            tau,
            ring: VecDeque::with_capacity(tau),
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn clear(&mut self) {
        self.ring.clear();
    }

    pub fn push(&mut self, entry: Option<Observed>) {
        if self.tau == 0 {
            return;
        }
        if self.ring.len() == self.tau {
            self.ring.pop_front();
        }
        self.ring.push_back(entry);
    }

    /// Records `target` if it is still flying, a gap otherwise.
    pub fn observe(&mut self, world: &WorldState, target: Option<UavId>) {
        let entry = target.map(|id| &world.uavs[id]).filter(|u| u.is_active()).map(|u| Observed {
            position: u.pose.position,
            velocity: u.velocity(),
            radius: u.radius,
        });
        self.push(entry);
    }

    /// `tau` slots, front-padded with `None`, oldest first.
    pub fn slots(&self) -> impl Iterator<Item = Option<&Observed>> {
        let pad = self.tau - self.ring.len();
        std::iter::repeat_n(None, pad).chain(self.ring.iter().map(|e| e.as_ref()))
    }
}

/// Agent-centric coordinate frame.
#[derive(Debug, Clone, Copy)]
struct Frame {
    origin: Vec2,
    angle: f64,
}

impl Frame {
    fn of(body: &UavBody) -> Frame {
        Frame {
            origin: body.pose.position,
            angle: body.frame_angle(),
        }
    }

    fn point(&self, p: Vec2) -> Vec2 {
        (p - self.origin).rotate(-self.angle)
    }

    fn vector(&self, v: Vec2) -> Vec2 {
        v.rotate(-self.angle)
    }

    fn heading(&self, h: f64) -> f64 {
        wrap_angle(h - self.angle)
    }
}

fn clamp(x: f64) -> f64 {
    if x.is_finite() {
        x.clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

struct Writer<'a> {
    out: &'a mut Vec<f64>,
}

impl Writer<'_> {
    fn put(&mut self, x: f64) {
        self.out.push(clamp(x));
    }

    fn vec(&mut self, v: Vec2, scale: f64) {
        self.put(v.x / scale);
        self.put(v.y / scale);
    }

    fn zeros(&mut self, n: usize) {
        self.out.extend(std::iter::repeat_n(0.0, n));
    }
}

fn own_block(w: &mut Writer, world: &WorldState, body: &UavBody, frame: &Frame, deadline: u32) {
    let c = &world.config;
    let diag = c.bounds.diagonal();
    let goal = body.destination - body.pose.position;
    let vmax = body.limits.max_speed;
    w.put(goal.norm() / diag);
    w.vec(frame.vector(body.velocity()), vmax);
    w.put(body.radius / c.safe_distance);
    w.put(vmax * c.dt * deadline as f64 / diag);
    let h = frame.heading(body.pose.heading);
    w.put(h.cos());
    w.put(h.sin());
    w.put(deadline.saturating_sub(world.t) as f64 / deadline as f64);
}

/// Sensed non-T1 UAVs (T2s and the jammer), nearest first.
fn uav_slots(w: &mut Writer, world: &WorldState, body: &UavBody, frame: &Frame, k: usize, skip: impl Fn(Role) -> bool) {
    let range = body.sensing_range.max(f64::MIN_POSITIVE);
    let vmax = body.limits.max_speed;
    let seen = world.sense(body.id);
    let mut filled = 0;
    for o in seen.iter().filter(|o| !skip(o.role)).take(k) {
        w.vec(frame.point(o.position), range);
        w.vec(frame.vector(o.velocity), vmax);
        w.put(o.radius / world.config.safe_distance);
        w.put(o.distance / range);
        w.put(1.0);
        filled += 1;
    }
    w.zeros((k - filled) * UAV_SLOT_WIDTH);
}

fn device_slots(w: &mut Writer, world: &WorldState, body: &UavBody, frame: &Frame) {
    let c = &world.config;
    let diag = c.bounds.diagonal();
    let gate = c.channel.rx_sensitivity_dbm;
    let assoc = world.association[body.id];
    for d in &world.devices {
        if body.group.is_some() && d.group != body.group {
            w.zeros(DEVICE_SLOT_WIDTH);
            continue;
        }
        w.vec(frame.point(d.position), diag);
        w.put(if d.initial_bits > 0 {
            d.remaining_bits as f64 / d.initial_bits as f64
        } else {
            0.0
        });
        w.put(if assoc == Some(d.id) { 1.0 } else { 0.0 });
        let rx_db = mw_to_dbm(world.device_rx_mw(body.id, d.id));
        w.put((rx_db - gate) / RX_SPAN_DB);
        w.put(if d.mode == DeviceMode::Active { 1.0 } else { 0.0 });
    }
}

fn t1_core(world: &WorldState, id: UavId, layout: &FeatureLayout, out: &mut Vec<f64>) {
    let body = &world.uavs[id];
    let frame = Frame::of(body);
    let mut w = Writer { out };
    own_block(&mut w, world, body, &frame, world.config.deadline_steps);
    uav_slots(&mut w, world, body, &frame, layout.k_nearest_t2, |r| r == Role::T1);
    device_slots(&mut w, world, body, &frame);
}

/// Lone mission UAV encoding.
pub fn encode_t1(world: &WorldState, id: UavId, layout: &FeatureLayout) -> Result<Vec<f64>> {
    layout.check(EncoderKind::T1, &world.config)?;
    let mut out = Vec::with_capacity(layout.len);
    t1_core(world, id, layout, &mut out);
    Ok(out)
}

/// Mission UAV encoding followed by the jammer's last `tau` relative positions.
pub fn encode_t1_vs_jammer(
    world: &WorldState,
    id: UavId,
    history: &ObservationHistory,
    layout: &FeatureLayout,
) -> Result<Vec<f64>> {
    layout.check(EncoderKind::T1VsJammer, &world.config)?;
    if history.tau() != layout.tau {
        return Err(Error::config("history length does not match the feature layout"));
    }
    let mut out = Vec::with_capacity(layout.len);
    t1_core(world, id, layout, &mut out);
    let body = &world.uavs[id];
    let frame = Frame::of(body);
    let diag = world.config.bounds.diagonal();
    let mut w = Writer { out: &mut out };
    for slot in history.slots() {
        match slot {
            Some(o) => {
                w.vec(frame.point(o.position), diag);
                w.put(1.0);
            }
            None => w.zeros(JAMMER_TRACE_WIDTH),
        }
    }
    Ok(out)
}

/// Mission UAV encoding (own device group only) followed by full information
/// of the nearest peer T1s within communication range.
pub fn encode_swarm(world: &WorldState, id: UavId, layout: &FeatureLayout) -> Result<Vec<f64>> {
    layout.check(EncoderKind::Swarm, &world.config)?;
    let mut out = Vec::with_capacity(layout.len);
    t1_core(world, id, layout, &mut out);
    let c = &world.config;
    let body = &world.uavs[id];
    let frame = Frame::of(body);
    let diag = c.bounds.diagonal();
    let range = c.comm_range.max(f64::MIN_POSITIVE);
    let vmax = body.limits.max_speed;
    let mut peers: Vec<(f64, &UavBody)> = world
        .uavs
        .iter()
        .filter(|u| u.role == Role::T1 && u.id != id && u.is_active())
        .map(|u| ((u.pose.position - body.pose.position).norm(), u))
        .filter(|(d, _)| *d <= c.comm_range)
        .collect();
    peers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    let mut w = Writer { out: &mut out };
    let mut filled = 0;
    for (_, p) in peers.iter().take(layout.k_nearest_t1) {
        w.vec(frame.point(p.pose.position), range);
        w.vec(frame.vector(p.velocity()), vmax);
        w.put(p.radius / c.safe_distance);
        w.vec(frame.point(p.destination), diag);
        w.put(p.limits.max_speed / vmax);
        w.put(frame.heading(p.pose.heading) / std::f64::consts::PI);
        w.put(1.0);
        filled += 1;
    }
    w.zeros((layout.k_nearest_t1 - filled) * PEER_SLOT_WIDTH);
    Ok(out)
}

/// Jammer encoding in its own frame: own state, sensed T2s, the T1's recent
/// observable states and device positions with their modes.
pub fn encode_jammer(world: &WorldState, history: &ObservationHistory, layout: &FeatureLayout) -> Result<Vec<f64>> {
    layout.check(EncoderKind::Jammer, &world.config)?;
    if history.tau() != layout.tau {
        return Err(Error::config("history length does not match the feature layout"));
    }
    let id = world
        .jammer_id()
        .ok_or_else(|| Error::config("scenario has no jammer"))?;
    let c = &world.config;
    let body = &world.uavs[id];
    let frame = Frame::of(body);
    let diag = c.bounds.diagonal();
    let vmax = body.limits.max_speed;
    let mut out = Vec::with_capacity(layout.len);
    let mut w = Writer { out: &mut out };
    own_block(&mut w, world, body, &frame, c.jammer_deadline_steps);
    uav_slots(&mut w, world, body, &frame, layout.k_nearest_t2, |r| r != Role::T2);
    for slot in history.slots() {
        match slot {
            Some(o) => {
                w.vec(frame.point(o.position), diag);
                w.vec(frame.vector(o.velocity), vmax);
                w.put(o.radius / c.safe_distance);
                w.put(1.0);
            }
            None => w.zeros(T1_TRACE_WIDTH),
        }
    }
    for d in &world.devices {
        w.vec(frame.point(d.position), diag);
        w.put(if d.mode == DeviceMode::Active { 1.0 } else { 0.0 });
    }
    Ok(out)
}

/// Dispatches to the encoder of `layout.kind`. `history` is ignored by the
/// kinds that do not use one.
pub fn encode(world: &WorldState, id: UavId, history: &ObservationHistory, layout: &FeatureLayout) -> Result<Vec<f64>> {
    match layout.kind {
        EncoderKind::T1 => encode_t1(world, id, layout),
        EncoderKind::Swarm => encode_swarm(world, id, layout),
        EncoderKind::T1VsJammer => encode_t1_vs_jammer(world, id, history, layout),
        EncoderKind::Jammer => encode_jammer(world, history, layout),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_data: f64,
    pub w_uav_collision: f64,
    pub w_proximity: f64,
    pub w_obstacle: f64,
    pub w_timeout: f64,
    pub w_arrival: f64,
    pub w_step: f64,
    pub w_t1_spacing: f64,
    /// Per step.
    pub w_jam_avoid: f64,
    pub w_sinr_inverse: f64,
    pub w_jam_track: f64,
    /// Potential-based shaping on progress toward the destination, per map diagonal.
    pub w_progress: f64,
    /// Distance (m) at which the jammer-avoidance term saturates.
    pub d_cap: f64,
    /// Distance (m) inside which the jammer earns the tracking term.
    pub d_track: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w_data: 10.0,
            w_uav_collision: 5.0,
            w_proximity: 0.25,
            w_obstacle: 5.0,
            w_timeout: 5.0,
            w_arrival: 5.0,
            w_step: 0.005,
            w_t1_spacing: 0.25,
            w_jam_avoid: 0.02,
            w_sinr_inverse: 1.0,
            w_jam_track: 0.1,
            w_progress: 1.0,
            d_cap: 20.0,
            d_track: 20.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.w_data,
            self.w_uav_collision,
            self.w_proximity,
            self.w_obstacle,
            self.w_timeout,
            self.w_arrival,
            self.w_step,
            self.w_t1_spacing,
            self.w_jam_avoid,
            self.w_sinr_inverse,
            self.w_jam_track,
            self.w_progress,
        ];
        if all.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::config("reward weights must be finite and >= 0"));
        }
        if !(self.d_cap > 0.0 && self.d_track > 0.0) {
            return Err(Error::config("d_cap and d_track must be > 0"));
        }
        Ok(())
    }
}

/// Per-agent quantities the reward needs besides the step events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardContext {
    pub kind: EncoderKind,
    pub safe_distance: f64,
    /// Bits the agent is responsible for.
    pub total_bits: u64,
    pub diagonal: f64,
}

impl RewardContext {
    pub fn for_uav(world: &WorldState, id: UavId, kind: EncoderKind) -> RewardContext {
        RewardContext {
            kind,
            safe_distance: world.config.safe_distance,
            total_bits: world.uavs[id].assigned_bits,
            diagonal: world.config.bounds.diagonal(),
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn shortfall(d: f64, limit: f64) -> f64 {
    ((limit - d) / limit).max(0.0)
}

/// Terms shared by the T1 and jammer rewards.
fn structural(ev: &UavStepEvents, w: &RewardWeights, ctx: &RewardContext) -> f64 {
    -w.w_uav_collision * flag(ev.uav_collision) - w.w_obstacle * flag(ev.obstacle_collision)
        - w.w_proximity * shortfall(ev.min_uav_distance, ctx.safe_distance)
        - w.w_timeout * flag(ev.timeout)
        + w.w_arrival * flag(ev.arrived)
        - w.w_step
        + w.w_progress * ev.goal_progress / ctx.diagonal
}

/// Mission UAV reward for the step just executed.
pub fn reward_t1(ev: &UavStepEvents, w: &RewardWeights, ctx: &RewardContext) -> f64 {
    let data = if ctx.total_bits > 0 {
        ev.collected_bits as f64 / ctx.total_bits as f64
    } else {
        0.0
    };
    let mut r = w.w_data * data + structural(ev, w, ctx);
    match ctx.kind {
        EncoderKind::Swarm => r -= w.w_t1_spacing * shortfall(ev.min_t1_distance, ctx.safe_distance),
        EncoderKind::T1VsJammer => {
            let d = ev.jammer_distance.unwrap_or(w.d_cap);
            r += w.w_jam_avoid * d.min(w.d_cap) / w.d_cap;
        }
        EncoderKind::T1 | EncoderKind::Jammer => {}
    }
    r
}

/// Jammer reward: inverse T1 SINR while the T1 is receiving, tracking bonus,
/// and the same structural terms as the T1.
pub fn reward_jammer(ev: &UavStepEvents, w: &RewardWeights, ctx: &RewardContext) -> f64 {
    let sinr = ev.t1_sinr.map_or(0.0, |s| 1.0 / (1.0 + s));
    let track = ev.t1_distance.map_or(0.0, |d| shortfall(d, w.d_track));
    w.w_sinr_inverse * sinr + w.w_jam_track * track + structural(ev, w, ctx)
}
