//! Episode ground truth and the synchronous simulation step.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, Interferer, LinkStats};
use crate::clustering;
use crate::config::{BodySpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    apply_velocity, build_velocity_set, distance, segment_point_distance, wrap_angle, Disc,
    KinematicLimits, Pose, Rect, Vec2, VelocitySet,
};
use crate::mix_seed;

pub type UavId = usize;
pub type DeviceId = usize;

const PLACEMENT_RETRIES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    T1,
    T2,
    Jammer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavBody {
    pub id: UavId,
    pub role: Role,
    pub pose: Pose,
    pub radius: f64,
    pub destination: Vec2,
    pub limits: KinematicLimits,
    pub sensing_range: f64,
    pub alive: bool,
    pub arrived: bool,
    /// Deadline passed without arrival; the body has left the airspace.
    pub timed_out: bool,
    /// Device group served by this T1.
    pub group: Option<usize>,
    /// Bearing of the last nonzero vector toward the destination.
    pub goal_bearing: f64,
    pub path_length: f64,
    pub arrived_at: Option<u32>,
    pub died_at: Option<u32>,
    pub collected_bits: u64,
    /// Initial bits of all devices this T1 is responsible for.
    pub assigned_bits: u64,
}

impl UavBody {
    fn new(id: UavId, role: Role, spec: &BodySpec, position: Vec2, destination: Vec2) -> Self {
        let goal = destination - position;
        let bearing = if goal.norm() > 0.0 { goal.angle() } else { 0.0 };
        UavBody {
            id,
            role,
            pose: Pose::new(position, bearing, 0.0),
            radius: spec.radius,
            destination,
            limits: spec.limits,
            sensing_range: spec.sensing_range,
            alive: true,
            arrived: false,
            timed_out: false,
            group: None,
            goal_bearing: wrap_angle(bearing),
            path_length: 0.0,
            arrived_at: None,
            died_at: None,
            collected_bits: 0,
            assigned_bits: 0,
        }
    }

    /// Still flying and taking actions.
    pub fn is_active(&self) -> bool {
        self.alive && !self.arrived && !self.timed_out
    }

    pub fn velocity(&self) -> Vec2 {
        self.pose.velocity()
    }

    pub fn velocity_set(&self) -> VelocitySet {
        // limits are validated with the config
        build_velocity_set(&self.limits, self.pose.heading).expect("validated kinematic limits")
    }

    /// Angle of the agent-centric frame's x-axis.
    pub fn frame_angle(&self) -> f64 {
        let goal = self.destination - self.pose.position;
        if goal.norm() > 1e-9 {
            goal.angle()
        } else {
            self.goal_bearing
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviceMode {
    Active,
    Silent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub id: DeviceId,
    pub position: Vec2,
    pub initial_bits: u64,
    pub remaining_bits: u64,
    pub mode: DeviceMode,
    pub group: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissionStatus {
    Ongoing,
    Success,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    UavCollision { a: UavId, b: UavId },
    ObstacleCollision { uav: UavId },
    Arrival { uav: UavId },
    Timeout { uav: UavId },
    Collected { uav: UavId, device: DeviceId, bits: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Step index after the step that produced the event.
    pub t: u32,
    pub kind: EventKind,
}

/// What happened to one UAV during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavStepEvents {
    /// The UAV was active when the step began.
    pub acted: bool,
    pub uav_collision: bool,
    pub obstacle_collision: bool,
    pub arrived: bool,
    pub timeout: bool,
    pub associated: Option<DeviceId>,
    pub link: Option<LinkStats>,
    pub collected_bits: u64,
    /// Closest other airborne UAV (center distance), infinity if none.
    pub min_uav_distance: f64,
    /// Closest other airborne T1, infinity if none.
    pub min_t1_distance: f64,
    pub jammer_distance: Option<f64>,
    /// Distance to the first T1, used by the jammer reward.
    pub t1_distance: Option<f64>,
    /// SINR of the first T1's link this step when it is associated.
    pub t1_sinr: Option<f64>,
    /// Reduction of the distance to the destination this step (m).
    pub goal_progress: f64,
    /// The UAV is no longer active after this step.
    pub terminal: bool,
}

impl Default for UavStepEvents {
    fn default() -> Self {
        UavStepEvents {
            acted: false,
            uav_collision: false,
            obstacle_collision: false,
            arrived: false,
            timeout: false,
            associated: None,
            link: None,
            collected_bits: 0,
            min_uav_distance: f64::INFINITY,
            min_t1_distance: f64::INFINITY,
            jammer_distance: None,
            t1_distance: None,
            t1_sinr: None,
            goal_progress: 0.0,
            terminal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepEvents {
    pub t: u32,
    pub per_uav: Vec<UavStepEvents>,
}

/// Observable information of a sensed UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub id: UavId,
    pub role: Role,
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub config: Arc<ScenarioConfig>,
    pub seed: u64,
    pub t: u32,
    pub uavs: Vec<UavBody>,
    pub devices: Vec<DeviceState>,
    /// Per UAV id; only T1 entries are ever `Some`.
    pub association: Vec<Option<DeviceId>>,
    pub last_link: Vec<Option<LinkStats>>,
    pub events: Vec<Event>,
    rng: ChaCha8Rng,
}

fn sample_in(rect: &Rect, rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::new(
        rng.random_range(rect.min.x..=rect.max.x),
        rng.random_range(rect.min.y..=rect.max.y),
    )
}

fn inside_any(p: Vec2, margin: f64, discs: &[Disc]) -> bool {
    discs.iter().any(|d| distance(p, d.center) <= d.radius + margin)
}

impl WorldState {
    /// Builds a fresh episode. Deterministic given `(config, seed)`.
    pub fn reset(config: Arc<ScenarioConfig>, seed: u64) -> Result<WorldState> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocked: Vec<Disc> = config.obstacles.iter().chain(&config.no_fly_zones).copied().collect();

        let place = |rect: &Rect, margin: f64, others: &[(Vec2, f64)], what: &str, rng: &mut ChaCha8Rng| {
            for _ in 0..PLACEMENT_RETRIES {
                let p = sample_in(rect, rng);
                if inside_any(p, margin, &blocked) {
                    continue;
                }
                if others.iter().any(|&(q, r)| distance(p, q) <= r + margin) {
                    continue;
                }
                return Ok(p);
            }
            Err(Error::config(format!(
                "could not place {what} after {PLACEMENT_RETRIES} attempts; area too small or blocked"
            )))
        };

        let mut devices = Vec::with_capacity(config.n_devices);
        for id in 0..config.n_devices {
            let position = place(&config.bounds, 0.0, &[], "device", &mut rng)?;
            let bits = rng.random_range(config.device_bits.min..=config.device_bits.max);
            devices.push(DeviceState {
                id,
                position,
                initial_bits: bits,
                remaining_bits: bits,
                mode: if bits > 0 { DeviceMode::Active } else { DeviceMode::Silent },
                group: None,
            });
        }

        let mut uavs = Vec::new();
        // spawn clearance between bodies: (position, radius + spacing)
        let mut occupied: Vec<(Vec2, f64)> = Vec::new();
        let spacing = config.safe_distance;
        let t1 = &config.t1_body;
        for _ in 0..config.n_t1 {
            let start = place(&config.departure_area, t1.radius, &occupied, "T1 start", &mut rng)?;
            let dest = place(&config.landing_area, t1.radius, &[], "T1 destination", &mut rng)?;
            occupied.push((start, t1.radius + spacing.max(t1.radius)));
            uavs.push(UavBody::new(uavs.len(), Role::T1, t1, start, dest));
        }
        let t2 = &config.t2_body;
        for _ in 0..config.n_t2 {
            let start = place(&config.bounds, t2.radius, &occupied, "T2 start", &mut rng)?;
            let dest = place(&config.bounds, t2.radius, &[], "T2 destination", &mut rng)?;
            occupied.push((start, t2.radius + spacing.max(t2.radius)));
            uavs.push(UavBody::new(uavs.len(), Role::T2, t2, start, dest));
        }
        if config.jammer {
            let jb = &config.jammer_body;
            let start = place(&config.bounds, jb.radius, &occupied, "jammer start", &mut rng)?;
            let dest = place(&config.bounds, jb.radius, &[], "jammer destination", &mut rng)?;
            uavs.push(UavBody::new(uavs.len(), Role::Jammer, jb, start, dest));
        }

        // one device group per T1
        let points: Vec<Vec2> = devices.iter().map(|d| d.position).collect();
        let k = config.n_t1.min(points.len());
        let partition = clustering::kmeans(&points, k, mix_seed(seed, 0x6b6d), config.kmeans_max_iters)?;
        let starts: Vec<Vec2> = uavs[..config.n_t1].iter().map(|u| u.pose.position).collect();
        let mapping = clustering::assign_groups(&partition.centroids, &starts[..k]);
        for (dev, &g) in devices.iter_mut().zip(&partition.assignment) {
            dev.group = Some(g);
        }
        for (uav_idx, group) in mapping {
            let assigned = devices
                .iter()
                .filter(|d| d.group == Some(group))
                .map(|d| d.initial_bits)
                .sum();
            let body = &mut uavs[uav_idx];
            body.group = Some(group);
            body.assigned_bits = assigned;
        }

        let n = uavs.len();
        Ok(WorldState {
            config,
            seed,
            t: 0,
            uavs,
            devices,
            association: vec![None; n],
            last_link: vec![None; n],
            events: Vec::new(),
            rng,
        })
    }

    pub fn ids_with_role(&self, role: Role) -> impl Iterator<Item = UavId> + '_ {
        self.uavs.iter().filter(move |u| u.role == role).map(|u| u.id)
    }

    pub fn t1_ids(&self) -> Vec<UavId> {
        self.ids_with_role(Role::T1).collect()
    }

    pub fn t2_ids(&self) -> Vec<UavId> {
        self.ids_with_role(Role::T2).collect()
    }

    pub fn jammer_id(&self) -> Option<UavId> {
        self.ids_with_role(Role::Jammer).next()
    }

    pub fn uav(&self, id: UavId) -> &UavBody {
        &self.uavs[id]
    }

    pub fn total_initial_bits(&self) -> u64 {
        self.devices.iter().map(|d| d.initial_bits).sum()
    }

    pub fn total_remaining_bits(&self) -> u64 {
        self.devices.iter().map(|d| d.remaining_bits).sum()
    }

    /// Deadline that applies to a UAV's role.
    pub fn deadline_for(&self, id: UavId) -> u32 {
        match self.uavs[id].role {
            Role::Jammer => self.config.jammer_deadline_steps,
            _ => self.config.deadline_steps,
        }
    }

    fn jammer_interferer(&self) -> Option<Interferer> {
        self.jammer_id()
            .map(|j| &self.uavs[j])
            .filter(|j| j.is_active())
            .map(|j| Interferer {
                position: j.pose.position,
                tx_power_dbm: self.config.channel.jammer_tx_power_dbm,
            })
    }

    /// Received power in mW at `uav` from `device` (no fading).
    pub fn device_rx_mw(&self, uav: UavId, device: DeviceId) -> f64 {
        let p = &self.config.channel;
        channel::received_power_mw(
            p.device_tx_power_dbm,
            distance(self.uavs[uav].pose.position, self.devices[device].position),
            p,
        )
    }

    /// TDMA association: strongest active device of the T1's group that passes
    /// the sensitivity gate; ties go to the lowest device id.
    pub fn associate(&self, t1: UavId) -> Option<DeviceId> {
        let body = &self.uavs[t1];
        if body.role != Role::T1 || !body.is_active() {
            return None;
        }
        let gate = channel::dbm_to_mw(self.config.channel.rx_sensitivity_dbm);
        let mut best: Option<(DeviceId, f64)> = None;
        for d in &self.devices {
            if d.mode != DeviceMode::Active || (body.group.is_some() && d.group != body.group) {
                continue;
            }
            let rx = self.device_rx_mw(t1, d.id);
            if rx < gate {
                continue;
            }
            if best.map_or(true, |(_, b)| rx > b) {
                best = Some((d.id, rx));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Other airborne UAVs within the observer's sensing range (closed ball),
    /// sorted by distance then id.
    pub fn sense(&self, observer: UavId) -> Vec<Observation> {
        let me = &self.uavs[observer];
        let mut seen: Vec<Observation> = self
            .uavs
            .iter()
            .filter(|u| u.id != observer && u.is_active())
            .filter_map(|u| {
                let d = distance(me.pose.position, u.pose.position);
                (d <= me.sensing_range).then(|| Observation {
                    id: u.id,
                    role: u.role,
                    position: u.pose.position,
                    velocity: u.velocity(),
                    radius: u.radius,
                    distance: d,
                })
            })
            .collect();
        seen.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
        seen
    }

    pub fn mission_status(&self, t1: UavId) -> MissionStatus {
        let body = &self.uavs[t1];
        let deadline = self.deadline_for(t1);
        if body.died_at.is_some() {
            MissionStatus::Collision
        } else if body.arrived_at.is_some_and(|a| a <= deadline) {
            MissionStatus::Success
        } else if body.timed_out || self.t >= deadline {
            MissionStatus::Timeout
        } else {
            MissionStatus::Ongoing
        }
    }

    /// Advances every active UAV by one step.
    ///
    /// `actions[i]` indexes UAV `i`'s current velocity set; entries for
    /// inactive UAVs are ignored.
    pub fn step(&mut self, actions: &[usize]) -> Result<StepEvents> {
        if actions.len() != self.uavs.len() {
            return Err(Error::contract(format!(
                "expected {} actions, got {}",
                self.uavs.len(),
                actions.len()
            )));
        }
        let mut velocities = vec![Vec2::ZERO; self.uavs.len()];
        for (u, &a) in self.uavs.iter().zip(actions) {
            if !u.is_active() {
                continue;
            }
            let set = u.velocity_set();
            velocities[u.id] = set.get(a).ok_or_else(|| {
                Error::contract(format!(
                    "action {a} outside velocity set of size {} for UAV {}",
                    set.len(),
                    u.id
                ))
            })?;
        }

        let dt = self.config.dt;
        let t_next = self.t + 1;
        let mut ev = vec![UavStepEvents::default(); self.uavs.len()];
        let airborne: Vec<bool> = self.uavs.iter().map(|u| u.is_active()).collect();
        let old: Vec<Vec2> = self.uavs.iter().map(|u| u.pose.position).collect();

        // (1) simultaneous motion
        for (u, e) in self.uavs.iter_mut().zip(ev.iter_mut()) {
            if !airborne[u.id] {
                continue;
            }
            e.acted = true;
            let next = apply_velocity(&u.pose, velocities[u.id], dt);
            u.path_length += distance(u.pose.position, next.position);
            e.goal_progress = distance(u.pose.position, u.destination) - distance(next.position, u.destination);
            u.pose = next;
            let goal = u.destination - u.pose.position;
            if goal.norm() > 1e-9 {
                u.goal_bearing = goal.angle();
            }
        }

        // (2) swept collisions
        let n = self.uavs.len();
        let mut dies = vec![false; n];
        for a in 0..n {
            if !airborne[a] {
                continue;
            }
            for b in (a + 1)..n {
                if !airborne[b] {
                    continue;
                }
                let (ua, ub) = (&self.uavs[a], &self.uavs[b]);
                let rel0 = old[a] - old[b];
                let rel1 = ua.pose.position - ub.pose.position;
                if segment_point_distance(rel0, rel1, Vec2::ZERO) < ua.radius + ub.radius {
                    ev[a].uav_collision = true;
                    ev[b].uav_collision = true;
                    self.events.push(Event {
                        t: t_next,
                        kind: EventKind::UavCollision { a, b },
                    });
                }
            }
        }
        let blocked: Vec<Disc> = self
            .config
            .obstacles
            .iter()
            .chain(&self.config.no_fly_zones)
            .copied()
            .collect();
        for u in &self.uavs {
            if !airborne[u.id] {
                continue;
            }
            let hit_disc = blocked
                .iter()
                .any(|d| segment_point_distance(old[u.id], u.pose.position, d.center) < d.radius + u.radius);
            let out_of_bounds = u.role != Role::T2 && !self.config.bounds.contains(u.pose.position);
            if hit_disc || out_of_bounds {
                ev[u.id].obstacle_collision = true;
                self.events.push(Event {
                    t: t_next,
                    kind: EventKind::ObstacleCollision { uav: u.id },
                });
            }
        }
        for u in &self.uavs {
            if u.role != Role::T2 && (ev[u.id].uav_collision || ev[u.id].obstacle_collision) {
                dies[u.id] = true;
            }
        }
        for u in self.uavs.iter_mut() {
            if dies[u.id] {
                u.alive = false;
                u.died_at = Some(t_next);
            }
        }

        // (3) associations, (4) link statistics and collection
        let jammer = self.jammer_interferer();
        let fading = self.config.channel.rayleigh_fading;
        for id in 0..n {
            let assoc = self.associate(id);
            self.association[id] = assoc;
            self.last_link[id] = None;
            let Some(dev) = assoc else { continue };
            let (sf, jf) = if fading {
                (exp_draw(&mut self.rng), exp_draw(&mut self.rng))
            } else {
                (1.0, 1.0)
            };
            let stats = channel::link_stats_faded(
                self.uavs[id].pose.position,
                self.devices[dev].position,
                jammer,
                &self.config.channel,
                sf,
                jf,
            );
            let device = &mut self.devices[dev];
            let bits = channel::collect(stats.rate_bps, dt, device.remaining_bits);
            device.remaining_bits -= bits;
            if device.remaining_bits == 0 {
                device.mode = DeviceMode::Silent;
            }
            self.uavs[id].collected_bits += bits;
            self.last_link[id] = Some(stats);
            ev[id].associated = Some(dev);
            ev[id].link = Some(stats);
            ev[id].collected_bits = bits;
            if bits > 0 {
                self.events.push(Event {
                    t: t_next,
                    kind: EventKind::Collected { uav: id, device: dev, bits },
                });
            }
        }

        // (5) arrivals
        let arrival_radius = self.config.arrival_radius;
        for id in 0..n {
            let u = &self.uavs[id];
            if !u.is_active() || distance(u.pose.position, u.destination) > arrival_radius {
                continue;
            }
            if u.role == Role::T2 {
                let dest = self.resample_destination(id);
                let u = &mut self.uavs[id];
                u.destination = dest;
                u.goal_bearing = (dest - u.pose.position).angle();
                continue;
            }
            let u = &mut self.uavs[id];
            u.arrived = true;
            u.arrived_at = Some(t_next);
            ev[id].arrived = true;
            self.events.push(Event {
                t: t_next,
                kind: EventKind::Arrival { uav: id },
            });
        }

        // (6) clock and deadlines
        self.t = t_next;
        for id in 0..n {
            let deadline = self.deadline_for(id);
            let u = &mut self.uavs[id];
            if u.role != Role::T2 && u.is_active() && self.t >= deadline {
                u.timed_out = true;
                ev[id].timeout = true;
                self.events.push(Event {
                    t: t_next,
                    kind: EventKind::Timeout { uav: id },
                });
            }
        }

        self.fill_distances(&airborne, &mut ev);
        for (u, e) in self.uavs.iter().zip(ev.iter_mut()) {
            e.terminal = e.acted && !u.is_active();
        }
        Ok(StepEvents { t: self.t, per_uav: ev })
    }

    fn fill_distances(&self, airborne: &[bool], ev: &mut [UavStepEvents]) {
        let jammer = self.jammer_id();
        let first_t1 = self.t1_ids().first().copied();
        for a in 0..self.uavs.len() {
            if !airborne[a] {
                continue;
            }
            let pa = self.uavs[a].pose.position;
            for b in 0..self.uavs.len() {
                if a == b || !airborne[b] {
                    continue;
                }
                let d = distance(pa, self.uavs[b].pose.position);
                ev[a].min_uav_distance = ev[a].min_uav_distance.min(d);
                if self.uavs[b].role == Role::T1 {
                    ev[a].min_t1_distance = ev[a].min_t1_distance.min(d);
                }
            }
            if let Some(j) = jammer.filter(|&j| j != a) {
                ev[a].jammer_distance = Some(distance(pa, self.uavs[j].pose.position));
            }
            if let Some(t1) = first_t1.filter(|&t| t != a) {
                ev[a].t1_distance = Some(distance(pa, self.uavs[t1].pose.position));
                ev[a].t1_sinr = ev[t1].link.map(|l| l.sinr);
            }
        }
    }

    fn resample_destination(&mut self, id: UavId) -> Vec2 {
        let blocked: Vec<Disc> = self
            .config
            .obstacles
            .iter()
            .chain(&self.config.no_fly_zones)
            .copied()
            .collect();
        let r = self.uavs[id].radius;
        let bounds = self.config.bounds;
        for _ in 0..PLACEMENT_RETRIES {
            let p = sample_in(&bounds, &mut self.rng);
            if !inside_any(p, r, &blocked) {
                return p;
            }
        }
        bounds.center()
    }

    /// All T1 missions have ended.
    pub fn all_t1_done(&self) -> bool {
        self.uavs
            .iter()
            .filter(|u| u.role == Role::T1)
            .all(|u| !u.is_active())
    }
}

fn exp_draw(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>();
    -(1.0 - u).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn config() -> Arc<ScenarioConfig> {
        let mut c = ScenarioConfig::small_map();
        c.n_devices = 5;
        c.n_t2 = 3;
        Arc::new(c)
    }

    fn hover_all(w: &WorldState) -> Vec<usize> {
        vec![0; w.uavs.len()]
    }

    #[test]
    fn reset_is_deterministic_and_fresh() {
        let a = WorldState::reset(config(), 7).unwrap();
        let b = WorldState::reset(config(), 7).unwrap();
        assert_eq!(a.uavs, b.uavs);
        assert_eq!(a.devices, b.devices);
        assert_eq!(a.devices.len(), 5);
        assert!(a
            .devices
            .iter()
            .all(|d| d.mode == DeviceMode::Active && d.remaining_bits == d.initial_bits));
        let c = WorldState::reset(config(), 8).unwrap();
        assert_ne!(a.devices, c.devices);
    }

    #[test]
    fn unsatisfiable_placement_is_config_error() {
        let mut c = ScenarioConfig::small_map();
        c.obstacles.push(Disc {
            center: Vec2::new(100.0, 100.0),
            radius: 1000.0,
        });
        assert!(matches!(WorldState::reset(Arc::new(c), 1), Err(Error::Config(_))));
    }

    #[test]
    fn no_device_in_gate_means_no_association() {
        let mut w = WorldState::reset(config(), 3).unwrap();
        for d in w.devices.iter_mut() {
            d.position = Vec2::new(199.0, 1.0);
        }
        w.uavs[0].pose.position = Vec2::new(1.0, 199.0);
        assert_eq!(w.associate(0), None);
    }

    #[test]
    fn equal_power_tie_goes_to_lower_id() {
        let mut w = WorldState::reset(config(), 3).unwrap();
        w.uavs[0].pose.position = Vec2::new(100.0, 100.0);
        w.devices[3].position = Vec2::new(105.0, 100.0);
        w.devices[1].position = Vec2::new(95.0, 100.0);
        for d in [0, 2, 4] {
            w.devices[d].position = Vec2::new(0.0, 200.0);
        }
        assert_eq!(w.associate(0), Some(1));
    }

    #[test]
    fn wrong_action_count_or_index_is_contract_error() {
        let mut w = WorldState::reset(config(), 1).unwrap();
        assert!(matches!(w.step(&[0]), Err(Error::Contract(_))));
        let mut acts = hover_all(&w);
        acts[0] = 999;
        assert!(matches!(w.step(&acts), Err(Error::Contract(_))));
        assert_eq!(w.t, 0, "a rejected step must not mutate the world");
    }

    #[test]
    fn crossing_bodies_collide_even_between_samples() {
        let mut w = WorldState::reset(config(), 2).unwrap();
        let t2 = w.t2_ids()[0];
        // T1 heading east, T2 heading west, swapping sides within one step
        w.uavs[0].pose = Pose::new(Vec2::new(97.0, 100.0), 0.0, 0.0);
        w.uavs[0].destination = Vec2::new(180.0, 180.0);
        w.uavs[t2].pose = Pose::new(Vec2::new(102.0, 100.0), std::f64::consts::PI, 0.0);
        for other in w.t2_ids().into_iter().skip(1) {
            w.uavs[other].pose.position = Vec2::new(10.0 + other as f64 * 10.0, 190.0);
        }
        let mut acts = hover_all(&w);
        let fast_straight = |u: &UavBody| {
            let set = u.velocity_set();
            set.nearest(Vec2::from_angle(u.pose.heading) * u.limits.max_speed)
        };
        acts[0] = fast_straight(&w.uavs[0]);
        acts[t2] = fast_straight(&w.uavs[t2]);
        let ev = w.step(&acts).unwrap();
        // 97 -> 103 and 102 -> 98: 5 m apart before and after, overlapping mid-step
        assert!(distance(w.uavs[0].pose.position, w.uavs[t2].pose.position) > 4.0);
        assert!(ev.per_uav[0].uav_collision);
        assert!(!w.uavs[0].alive);
        assert!(w.uavs[t2].alive, "T2s are never terminated");
        assert_eq!(w.mission_status(0), MissionStatus::Collision);
    }

    #[test]
    fn exhausting_a_device_silences_it() {
        let mut c = (*config()).clone();
        c.n_devices = 1;
        c.device_bits = crate::config::BitsRange { min: 1000, max: 1000 };
        let mut w = WorldState::reset(Arc::new(c), 4).unwrap();
        w.devices[0].position = w.uavs[0].pose.position + Vec2::new(1.0, 0.0);
        let prior = w.devices[0].remaining_bits;
        let ev = w.step(&hover_all(&w)).unwrap();
        assert_eq!(ev.per_uav[0].collected_bits, prior);
        assert_eq!(w.devices[0].mode, DeviceMode::Silent);
        assert_eq!(w.devices[0].remaining_bits, 0);
    }

    #[test]
    fn sensing_boundary_is_closed() {
        let mut w = WorldState::reset(config(), 5).unwrap();
        w.uavs[0].sensing_range = 0.0;
        assert!(w.sense(0).is_empty());
        w.uavs[0].sensing_range = 10.0;
        let t2 = w.t2_ids()[0];
        w.uavs[0].pose.position = Vec2::new(50.0, 50.0);
        w.uavs[t2].pose.position = Vec2::new(56.0, 58.0);
        let seen = w.sense(0);
        assert!(seen.iter().any(|o| o.id == t2));
    }

    #[test]
    fn mission_status_rules() {
        let mut w = WorldState::reset(config(), 6).unwrap();
        let deadline = w.config.deadline_steps;
        w.t = deadline;
        w.uavs[0].arrived = true;
        w.uavs[0].arrived_at = Some(deadline);
        assert_eq!(w.mission_status(0), MissionStatus::Success);
        w.uavs[0].died_at = Some(3);
        assert_eq!(w.mission_status(0), MissionStatus::Collision);
        let mut w = WorldState::reset(config(), 6).unwrap();
        w.t = deadline + 1;
        assert_eq!(w.mission_status(0), MissionStatus::Timeout);
        w.t = 0;
        assert_eq!(w.mission_status(0), MissionStatus::Ongoing);
    }

    #[test]
    fn dead_and_arrived_bodies_stay_put() {
        let mut w = WorldState::reset(config(), 9).unwrap();
        w.uavs[0].arrived = true;
        let before = w.uavs[0].pose;
        let mut acts = hover_all(&w);
        acts[0] = 5;
        let ev = w.step(&acts).unwrap();
        assert_eq!(w.uavs[0].pose, before);
        assert!(!ev.per_uav[0].acted);
        assert_eq!(ev.per_uav[0].collected_bits, 0);
        assert_eq!(w.association[0], None);
    }

    #[test]
    fn deadline_times_out_t1() {
        let mut c = (*config()).clone();
        c.deadline_steps = 3;
        let mut w = WorldState::reset(Arc::new(c), 10).unwrap();
        for _ in 0..3 {
            w.step(&hover_all(&w)).unwrap();
        }
        assert!(w.uavs[0].timed_out);
        assert_eq!(w.mission_status(0), MissionStatus::Timeout);
        assert!(w.all_t1_done());
    }
}
