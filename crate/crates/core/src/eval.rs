//! Frozen-policy evaluation: SR, DR, CR and APL over T1 missions, plus
//! JSON-lines trajectory export and metric recomputation from exported logs.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::d3qn::{argmax, NetworkParams};
use crate::error::{Error, Result};
use crate::geometry::{distance, Pose, Vec2};
use crate::mdp::{self, EncoderKind, FeatureLayout, ObservationHistory};
use crate::mix_seed;
use crate::orca::preferred_velocity;
use crate::trainer::{check_policy, collected_fraction, fill_t2_actions, t1_kind_for_width};
use crate::world::{MissionStatus, Role, UavBody, UavId, WorldState};

/// Major version of the trajectory format.
pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;
const RANDOM_STREAM: u64 = 0x5241;

/// How one UAV is driven during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Greedy action of a Q-network.
    Network(NetworkParams),
    Hover,
    /// Velocity-set member closest to the goal-seeking velocity.
    StraightToGoal,
    /// Uniform random action.
    Random,
}

/// Policies for the T1s (one shared entry or one per T1) and the jammer.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    pub t1: Vec<Policy>,
    pub jammer: Option<Policy>,
}

impl PolicySet {
    pub fn shared(t1: Policy) -> PolicySet {
        PolicySet { t1: vec![t1], jammer: None }
    }

    pub fn with_jammer(mut self, jammer: Policy) -> PolicySet {
        self.jammer = Some(jammer);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    pub uav: UavId,
    pub status: MissionStatus,
    /// Steps the T1 was airborne.
    pub steps: u32,
    pub path_length: f64,
    pub collected_fraction: f64,
    /// Closest approach to any other airborne UAV (m); infinite if none was airborne.
    pub min_separation: f64,
    /// Mean linear SINR over associated steps; NaN when never associated.
    pub mean_sinr: f64,
    pub associated_steps: u32,
    /// Mean distance to the jammer over airborne steps; NaN without jammer.
    pub mean_jammer_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub episodes: usize,
    pub missions: usize,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub sr: f64,
    /// Mean collected fraction over successful missions.
    pub dr: f64,
    pub cr: f64,
    pub timeout_rate: f64,
    /// Mean path length over successful missions (m).
    pub apl: f64,
    /// No mission succeeded; DR and APL are reported as 0.
    pub empty_success: bool,
    /// Pooled mean linear SINR over all associated T1 steps; NaN if none.
    pub mean_sinr: f64,
    /// Pooled mean T1-jammer distance over airborne T1 steps; NaN without jammer.
    pub mean_jammer_distance: f64,
    pub records: Vec<EpisodeRecord>,
}

/// Per-mission accumulators.
#[derive(Debug, Clone, Copy)]
struct Acc {
    steps: u32,
    min_sep: f64,
    sinr_sum: f64,
    sinr_n: u32,
    jam_sum: f64,
    jam_n: u32,
}

impl Default for Acc {
    fn default() -> Self {
        Acc {
            steps: 0,
            min_sep: f64::INFINITY,
            sinr_sum: 0.0,
            sinr_n: 0,
            jam_sum: 0.0,
            jam_n: 0,
        }
    }
}

fn mean_or_nan(sum: f64, n: u32) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn finish_record(episode: usize, seed: u64, uav: &UavBody, status: MissionStatus, acc: &Acc) -> EpisodeRecord {
    EpisodeRecord {
        episode,
        seed,
        uav: uav.id,
        status,
        steps: acc.steps,
        path_length: uav.path_length,
        collected_fraction: collected_fraction(uav.collected_bits, uav.assigned_bits),
        min_separation: acc.min_sep,
        mean_sinr: mean_or_nan(acc.sinr_sum, acc.sinr_n),
        associated_steps: acc.sinr_n,
        mean_jammer_distance: mean_or_nan(acc.jam_sum, acc.jam_n),
    }
}

impl MetricsReport {
    /// Aggregates mission records (sorted by episode, then UAV) together with
    /// their raw SINR and jammer-distance sums.
    fn from_parts(episodes: usize, parts: Vec<(EpisodeRecord, Acc)>) -> MetricsReport {
        let missions = parts.len();
        let count = |s: MissionStatus| parts.iter().filter(|(r, _)| r.status == s).count();
        let successes = count(MissionStatus::Success);
        let collisions = count(MissionStatus::Collision);
        let timeouts = missions - successes - collisions;
        let frac = |n: usize| if missions > 0 { n as f64 / missions as f64 } else { 0.0 };
        let (mut dr, mut apl) = (0.0, 0.0);
        for (r, _) in parts.iter().filter(|(r, _)| r.status == MissionStatus::Success) {
            dr += r.collected_fraction;
            apl += r.path_length;
        }
        if successes > 0 {
            dr /= successes as f64;
            apl /= successes as f64;
        }
        let (mut s_sum, mut s_n, mut j_sum, mut j_n) = (0.0, 0u64, 0.0, 0u64);
        for (_, a) in &parts {
            s_sum += a.sinr_sum;
            s_n += a.sinr_n as u64;
            j_sum += a.jam_sum;
            j_n += a.jam_n as u64;
        }
        MetricsReport {
            episodes,
            missions,
            successes,
            collisions,
            timeouts,
            sr: frac(successes),
            dr,
            cr: frac(collisions),
            timeout_rate: frac(timeouts),
            apl,
            empty_success: successes == 0,
            mean_sinr: if s_n > 0 { s_sum / s_n as f64 } else { f64::NAN },
            mean_jammer_distance: if j_n > 0 { j_sum / j_n as f64 } else { f64::NAN },
            records: parts.into_iter().map(|(r, _)| r).collect(),
        }
    }

    /// Fixed-width console summary.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<22}{:>14}", "metric", "value");
        let _ = writeln!(s, "{}", "-".repeat(36));
        let rows: [(&str, String); 9] = [
            ("episodes", self.episodes.to_string()),
            ("missions", self.missions.to_string()),
            ("success rate (SR)", format!("{:.4}", self.sr)),
            ("data rate (DR)", format!("{:.4}", self.dr)),
            ("collision rate (CR)", format!("{:.4}", self.cr)),
            ("timeout rate", format!("{:.4}", self.timeout_rate)),
            ("avg path length (m)", format!("{:.2}", self.apl)),
            ("mean T1 SINR", format!("{:.4e}", self.mean_sinr)),
            ("mean jammer dist (m)", format!("{:.2}", self.mean_jammer_distance)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<22}{v:>14}");
        }
        if self.empty_success {
            let _ = writeln!(s, "note: no successful mission; DR and APL are reported as 0");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "episodes",
            "missions",
            "sr",
            "dr",
            "cr",
            "timeout_rate",
            "apl",
            "empty_success",
            "mean_sinr",
            "mean_jammer_distance",
        ])?;
        w.write_record([
            self.episodes.to_string(),
            self.missions.to_string(),
            self.sr.to_string(),
            self.dr.to_string(),
            self.cr.to_string(),
            self.timeout_rate.to_string(),
            self.apl.to_string(),
            self.empty_success.to_string(),
            self.mean_sinr.to_string(),
            self.mean_jammer_distance.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }

    pub fn write_records_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Snapshot of one UAV in a trajectory record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavSnapshot {
    pub id: UavId,
    pub role: Role,
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub radius: f64,
    pub destination: Vec2,
    pub alive: bool,
    pub arrived: bool,
    pub timed_out: bool,
    pub group: Option<usize>,
    pub path_length: f64,
    pub collected_bits: u64,
    pub assigned_bits: u64,
}

impl UavSnapshot {
    fn of(u: &UavBody) -> UavSnapshot {
        UavSnapshot {
            id: u.id,
            role: u.role,
            position: u.pose.position,
            heading: u.pose.heading,
            speed: u.pose.speed,
            radius: u.radius,
            destination: u.destination,
            alive: u.alive,
            arrived: u.arrived,
            timed_out: u.timed_out,
            group: u.group,
            path_length: u.path_length,
            collected_bits: u.collected_bits,
            assigned_bits: u.assigned_bits,
        }
    }

    pub fn is_active(&self) -> bool {
        self.alive && !self.arrived && !self.timed_out
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.heading, self.speed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceInfo {
    pub id: usize,
    pub position: Vec2,
    pub initial_bits: u64,
    pub group: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub episode: usize,
    pub seed: u64,
    pub devices: Vec<DeviceInfo>,
    /// State at reset.
    pub uavs: Vec<UavSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format_version: u32,
    pub config: ScenarioConfig,
    pub episodes: Vec<EpisodeHeader>,
}

/// State after one step, with the actions that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub t: u32,
    pub actions: Vec<usize>,
    pub uavs: Vec<UavSnapshot>,
    pub association: Vec<Option<usize>>,
    pub sinr: Vec<Option<f64>>,
    pub remaining_bits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(TrajectoryHeader),
    Step(StepRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub header: TrajectoryHeader,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn episode_steps(&self, episode: usize) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(move |s| s.episode == episode)
    }
}

fn step_record(world: &WorldState, episode: usize, actions: Vec<usize>) -> StepRecord {
    StepRecord {
        episode,
        t: world.t,
        actions,
        uavs: world.uavs.iter().map(UavSnapshot::of).collect(),
        association: world.association.clone(),
        sinr: world.last_link.iter().map(|l| l.map(|l| l.sinr)).collect(),
        remaining_bits: world.devices.iter().map(|d| d.remaining_bits).collect(),
    }
}

fn episode_header(world: &WorldState, episode: usize) -> EpisodeHeader {
    EpisodeHeader {
        episode,
        seed: world.seed,
        devices: world
            .devices
            .iter()
            .map(|d| DeviceInfo {
                id: d.id,
                position: d.position,
                initial_bits: d.initial_bits,
                group: d.group,
            })
            .collect(),
        uavs: world.uavs.iter().map(UavSnapshot::of).collect(),
    }
}

/// Resolved controller for one UAV.
enum Driver<'a> {
    Net(&'a NetworkParams, FeatureLayout, ObservationHistory, Option<UavId>),
    Hover,
    Straight,
    Random,
}

fn driver<'a>(policy: &'a Policy, config: &ScenarioConfig, role: Role, tracks: Option<UavId>) -> Result<Driver<'a>> {
    Ok(match policy {
        Policy::Network(net) => {
            let kind = match role {
                Role::Jammer => EncoderKind::Jammer,
                _ => t1_kind_for_width(config, net.input_width())?,
            };
            check_policy(config, net, kind, role)?;
            Driver::Net(net, FeatureLayout::new(kind, config), ObservationHistory::new(config.history_len), tracks)
        }
        Policy::Hover => Driver::Hover,
        Policy::StraightToGoal => Driver::Straight,
        Policy::Random => Driver::Random,
    })
}

fn decide(d: &Driver, world: &WorldState, id: UavId, rng: &mut ChaCha8Rng) -> Result<usize> {
    let body = &world.uavs[id];
    Ok(match d {
        Driver::Net(net, layout, history, _) => argmax(&net.forward(&mdp::encode(world, id, history, layout)?)?),
        Driver::Hover => 0,
        Driver::Straight => body.velocity_set().nearest(preferred_velocity(body, world.config.dt)),
        Driver::Random => rng.random_range(0..body.velocity_set().len()),
    })
}

struct EpisodeResult {
    parts: Vec<(EpisodeRecord, Acc)>,
    header: Option<EpisodeHeader>,
    steps: Vec<StepRecord>,
}

fn run_episode(config: &Arc<ScenarioConfig>, policies: &PolicySet, episode: usize, seed: u64, capture: bool) -> Result<EpisodeResult> {
    let mut world = WorldState::reset(config.clone(), seed)?;
    let t1s = world.t1_ids();
    let jammer = world.jammer_id();
    let mut drivers: Vec<(UavId, Driver)> = Vec::new();
    for (k, &id) in t1s.iter().enumerate() {
        let p = if policies.t1.len() == 1 { &policies.t1[0] } else { &policies.t1[k] };
        drivers.push((id, driver(p, config, Role::T1, jammer)?));
    }
    if let Some(j) = jammer {
        let p = policies
            .jammer
            .as_ref()
            .ok_or_else(|| Error::config("scenario has a jammer but no jammer policy was given"))?;
        drivers.push((j, driver(p, config, Role::Jammer, t1s.first().copied())?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, RANDOM_STREAM));
    let header = capture.then(|| episode_header(&world, episode));
    let mut steps = Vec::new();
    let mut acc = vec![Acc::default(); t1s.len()];
    let limit = config.deadline_steps.max(config.jammer_deadline_steps) + 1;

    while !world.all_t1_done() && world.t < limit {
        let mut actions = vec![0usize; world.uavs.len()];
        fill_t2_actions(&world, &mut actions);
        for (id, d) in &drivers {
            if world.uavs[*id].is_active() {
                actions[*id] = decide(d, &world, *id, &mut rng)?;
            }
        }
        let ev = world.step(&actions)?;
        for (_, d) in drivers.iter_mut() {
            if let Driver::Net(_, _, history, tracks) = d {
                history.observe(&world, *tracks);
            }
        }
        for (k, &id) in t1s.iter().enumerate() {
            let e = &ev.per_uav[id];
            if !e.acted {
                continue;
            }
            let a = &mut acc[k];
            a.steps += 1;
            a.min_sep = a.min_sep.min(e.min_uav_distance);
            if let Some(l) = e.link {
                a.sinr_sum += l.sinr;
                a.sinr_n += 1;
            }
            if let Some(d) = e.jammer_distance {
                a.jam_sum += d;
                a.jam_n += 1;
            }
        }
        if capture {
            steps.push(step_record(&world, episode, actions));
        }
    }
    let parts = t1s
        .iter()
        .zip(&acc)
        .map(|(&id, a)| (finish_record(episode, seed, &world.uavs[id], world.mission_status(id), a), *a))
        .collect();
    Ok(EpisodeResult { parts, header, steps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub trajectory: Option<Trajectory>,
}

/// Runs `n_episodes` greedy episodes with seeds `mix_seed(seed, e)`, split
/// across `workers` threads. Results do not depend on `workers`.
pub fn evaluate(config: &ScenarioConfig, policies: &PolicySet, n_episodes: usize, seed: u64, capture: bool, workers: usize) -> Result<Evaluation> {
    config.validate()?;
    if policies.t1.len() != 1 && policies.t1.len() != config.n_t1 {
        return Err(Error::config(format!(
            "expected 1 or {} T1 policies, got {}",
            config.n_t1,
            policies.t1.len()
        )));
    }
    let config = Arc::new(config.clone());
    let workers = workers.clamp(1, n_episodes.max(1));
    let run = |e: usize| run_episode(&config, policies, e, mix_seed(seed, e as u64), capture);
    let mut results: Vec<(usize, EpisodeResult)> = if workers == 1 {
        (0..n_episodes).map(|e| run(e).map(|r| (e, r))).collect::<Result<_>>()?
    } else {
        let chunks: Vec<Vec<usize>> = (0..workers).map(|w| (w..n_episodes).step_by(workers).collect()).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| s.spawn(|| chunk.iter().map(|&e| run(e).map(|r| (e, r))).collect::<Result<Vec<_>>>()))
                .collect();
            let mut all = Vec::new();
            for h in handles {
                all.extend(h.join().map_err(|_| Error::contract("evaluation worker panicked"))??);
            }
            Ok::<_, Error>(all)
        })?
    };
    results.sort_by_key(|(e, _)| *e);
    let mut parts = Vec::new();
    let mut headers = Vec::new();
    let mut steps = Vec::new();
    for (_, r) in results {
        parts.extend(r.parts);
        headers.extend(r.header);
        steps.extend(r.steps);
    }
    let trajectory = capture.then(|| Trajectory {
        header: TrajectoryHeader {
            format_version: TRAJECTORY_FORMAT_VERSION,
            config: (*config).clone(),
            episodes: headers,
        },
        steps,
    });
    Ok(Evaluation {
        report: MetricsReport::from_parts(n_episodes, parts),
        trajectory,
    })
}

/// Writes the header line followed by one line per step record.
pub fn export_trajectories(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer(&mut w, &Line::Header(traj.header.clone()))?;
    w.write_all(b"\n")?;
    for s in &traj.steps {
        serde_json::to_writer(&mut w, &Line::Step(s.clone()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectories(path: &Path) -> Result<Trajectory> {
    let file = std::io::BufReader::new(fs::File::open(path)?);
    let mut header = None;
    let mut steps = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            let v: serde_json::Value = serde_json::from_str(&line)?;
            match v.get("format_version").and_then(|x| x.as_u64()) {
                Some(x) if x == TRAJECTORY_FORMAT_VERSION as u64 => {}
                Some(x) => {
                    return Err(Error::format(format!(
                        "unsupported trajectory format_version {x} (expected {TRAJECTORY_FORMAT_VERSION})"
                    )))
                }
                None => return Err(Error::format("trajectory header lacks format_version")),
            }
        }
        match serde_json::from_str::<Line>(&line)? {
            Line::Header(h) if header.is_none() => header = Some(h),
            Line::Header(_) => return Err(Error::format(format!("unexpected second header on line {}", i + 1))),
            Line::Step(s) => {
                if header.is_none() {
                    return Err(Error::format("trajectory must start with a header record"));
                }
                steps.push(s)
            }
        }
    }
    let header = header.ok_or_else(|| Error::format("empty trajectory file"))?;
    Ok(Trajectory { header, steps })
}

/// Recomputes the metrics of an evaluation from its exported trajectory.
pub fn metrics_from_trajectory(traj: &Trajectory) -> Result<MetricsReport> {
    let deadline = traj.header.config.deadline_steps;
    let mut parts = Vec::new();
    for eh in &traj.header.episodes {
        let mut prev: Vec<UavSnapshot> = eh.uavs.clone();
        let t1s: Vec<UavId> = prev.iter().filter(|u| u.role == Role::T1).map(|u| u.id).collect();
        let jammer = prev.iter().find(|u| u.role == Role::Jammer).map(|u| u.id);
        let mut acc = vec![Acc::default(); t1s.len()];
        for s in traj.episode_steps(eh.episode) {
            if s.uavs.len() != prev.len() {
                return Err(Error::format("step record UAV count differs from its header"));
            }
            for (k, &a) in t1s.iter().enumerate() {
                if !prev[a].is_active() {
                    continue;
                }
                let acc = &mut acc[k];
                acc.steps += 1;
                for b in 0..prev.len() {
                    if b != a && prev[b].is_active() {
                        acc.min_sep = acc.min_sep.min(distance(s.uavs[a].position, s.uavs[b].position));
                    }
                }
                if let Some(sinr) = s.sinr[a] {
                    acc.sinr_sum += sinr;
                    acc.sinr_n += 1;
                }
                if let Some(j) = jammer {
                    acc.jam_sum += distance(s.uavs[a].position, s.uavs[j].position);
                    acc.jam_n += 1;
                }
            }
            prev = s.uavs.clone();
        }
        for (k, &id) in t1s.iter().enumerate() {
            let u = &prev[id];
            let status = if !u.alive {
                MissionStatus::Collision
            } else if u.arrived && acc[k].steps <= deadline {
                MissionStatus::Success
            } else {
                MissionStatus::Timeout
            };
            let rec = EpisodeRecord {
                episode: eh.episode,
                seed: eh.seed,
                uav: id,
                status,
                steps: acc[k].steps,
                path_length: u.path_length,
                collected_fraction: collected_fraction(u.collected_bits, u.assigned_bits),
                min_separation: acc[k].min_sep,
                mean_sinr: mean_or_nan(acc[k].sinr_sum, acc[k].sinr_n),
                associated_steps: acc[k].sinr_n,
                mean_jammer_distance: mean_or_nan(acc[k].jam_sum, acc[k].jam_n),
            };
            parts.push((rec, acc[k]));
        }
    }
    Ok(MetricsReport::from_parts(traj.header.episodes.len(), parts))
}

/// Re-simulates every episode from its seed with the logged actions and
/// returns the regenerated step records.
pub fn replay_trajectory(traj: &Trajectory) -> Result<Vec<StepRecord>> {
    let config = Arc::new(traj.header.config.clone());
    let mut out = Vec::with_capacity(traj.steps.len());
    for eh in &traj.header.episodes {
        let mut world = WorldState::reset(config.clone(), eh.seed)?;
        for s in traj.episode_steps(eh.episode) {
            world.step(&s.actions)?;
            out.push(step_record(&world, eh.episode, s.actions.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_map() -> ScenarioConfig {
        let mut c = ScenarioConfig::small_map();
        c.n_t2 = 0;
        c
    }

    #[test]
    fn hover_always_times_out() {
        let c = empty_map();
        let r = evaluate(&c, &PolicySet::shared(Policy::Hover), 3, 1, false, 1).unwrap().report;
        assert_eq!((r.sr, r.cr, r.timeout_rate), (0.0, 0.0, 1.0));
        assert!(r.empty_success);
        assert_eq!((r.dr, r.apl), (0.0, 0.0));
        assert!(r.records.iter().all(|x| x.steps == c.deadline_steps));
    }

    #[test]
    fn straight_line_reaches_goal() {
        let c = empty_map();
        let r = evaluate(&c, &PolicySet::shared(Policy::StraightToGoal), 5, 2, true, 1).unwrap();
        assert_eq!(r.report.sr, 1.0);
        let traj = r.trajectory.unwrap();
        for (rec, eh) in r.report.records.iter().zip(&traj.header.episodes) {
            let start = eh.uavs[0].position;
            let d = distance(start, eh.uavs[0].destination);
            let step = c.t1_body.limits.max_speed * c.dt;
            assert!(rec.path_length >= d - c.arrival_radius - 1e-9);
            assert!(rec.path_length <= d + step, "{} vs {d}", rec.path_length);
        }
    }

    #[test]
    fn workers_do_not_change_results() {
        let c = ScenarioConfig::small_map();
        let p = PolicySet::shared(Policy::Random);
        let a = evaluate(&c, &p, 4, 3, false, 1).unwrap().report;
        let b = evaluate(&c, &p, 4, 3, false, 3).unwrap().report;
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn jammer_needs_policy() {
        let mut c = empty_map();
        c.jammer = true;
        assert!(evaluate(&c, &PolicySet::shared(Policy::Hover), 1, 0, false, 1).is_err());
        let p = PolicySet::shared(Policy::Hover).with_jammer(Policy::Random);
        let r = evaluate(&c, &p, 2, 0, false, 1).unwrap().report;
        assert!(r.mean_jammer_distance.is_finite());
    }

    #[test]
    fn metrics_recomputed_from_trajectory() {
        let c = ScenarioConfig::small_map();
        let p = PolicySet::shared(Policy::StraightToGoal);
        let ev = evaluate(&c, &p, 3, 9, true, 1).unwrap();
        let traj = ev.trajectory.unwrap();
        let again = metrics_from_trajectory(&traj).unwrap();
        assert_eq!(format!("{:?}", again), format!("{:?}", ev.report));
        assert_eq!(replay_trajectory(&traj).unwrap(), traj.steps);
    }
}
