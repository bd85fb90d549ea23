//! Episode-loop training pipelines: single T1, decentralized swarm, jammer
//! against a frozen T1, and T1 retraining against a frozen jammer.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::d3qn::{self, epsilon_at, Learner, NetworkParams, ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::mdp::{self, EncoderKind, FeatureLayout, ObservationHistory, RewardContext};
use crate::mix_seed;
use crate::orca;
use crate::world::{MissionStatus, Role, UavId, WorldState};

/// Stream index for network initialization and exploration randomness.
const LEARNER_STREAM: u64 = 0x4c52;
/// Window of the running metrics in the trace.
pub const RUNNING_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    Single,
    Swarm,
    JammerTrain,
    T1Retrain,
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(ScenarioKind::Single),
            "swarm" => Ok(ScenarioKind::Swarm),
            "jammer" => Ok(ScenarioKind::JammerTrain),
            "retrain" => Ok(ScenarioKind::T1Retrain),
            other => Err(Error::config(format!(
                "unknown scenario kind '{other}' (expected single, swarm, jammer or retrain)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub kind: ScenarioKind,
    pub config: ScenarioConfig,
    pub episodes: usize,
    /// Write the learner checkpoint every this many episodes (0 disables).
    pub checkpoint_every: usize,
    pub checkpoint_path: Option<PathBuf>,
}

impl TrainRun {
    pub fn new(kind: ScenarioKind, config: ScenarioConfig, episodes: usize) -> TrainRun {
        TrainRun {
            kind,
            config,
            episodes,
            checkpoint_every: 0,
            checkpoint_path: None,
        }
    }
}

/// One line of the training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub episode: usize,
    pub seed: u64,
    pub steps: u32,
    pub n_t2: usize,
    /// Mean undiscounted return per learning agent.
    pub episode_return: f64,
    /// Mean loss of the episode's train steps; NaN when none ran.
    pub loss: f64,
    pub epsilon: f64,
    pub successes: usize,
    pub collisions: usize,
    pub missions: usize,
    pub running_sr: f64,
    pub running_dr: f64,
    pub running_cr: f64,
    pub running_apl: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// One network per learner (a single one under parameter sharing).
    pub policies: Vec<NetworkParams>,
    pub trace: Vec<TraceRow>,
    /// Final replay size per learner.
    pub buffer_sizes: Vec<usize>,
    pub env_steps: u64,
}

/// Encoder used by a T1 policy, inferred from its input width.
pub fn t1_kind_for_width(config: &ScenarioConfig, width: usize) -> Result<EncoderKind> {
    let mut candidates = vec![EncoderKind::T1];
    if config.n_t1 > 1 {
        candidates.push(EncoderKind::Swarm);
    }
    if config.jammer {
        candidates.push(EncoderKind::T1VsJammer);
    }
    candidates
        .into_iter()
        .find(|k| FeatureLayout::new(*k, config).len == width)
        .ok_or_else(|| {
            Error::config(format!(
                "policy input width {width} matches no T1 feature layout of this scenario (T1 layout is {})",
                FeatureLayout::new(EncoderKind::T1, config).len
            ))
        })
}

pub fn check_policy(config: &ScenarioConfig, net: &NetworkParams, kind: EncoderKind, role: Role) -> Result<()> {
    let layout = FeatureLayout::new(kind, config);
    if net.input_width() != layout.len {
        return Err(Error::config(format!(
            "policy input width {} does not match the {kind:?} feature layout width {}",
            net.input_width(),
            layout.len
        )));
    }
    let limits = match role {
        Role::T1 => config.t1_body.limits,
        Role::T2 => config.t2_body.limits,
        Role::Jammer => config.jammer_body.limits,
    };
    if net.action_count() != limits.action_count() {
        return Err(Error::config(format!(
            "policy has {} actions, the {role:?} velocity set has {}",
            net.action_count(),
            limits.action_count()
        )));
    }
    Ok(())
}

/// ORCA actions for every active T2.
pub fn fill_t2_actions(world: &WorldState, actions: &mut [usize]) {
    for id in world.t2_ids() {
        if world.uavs[id].is_active() {
            actions[id] = orca::orca_policy_step(world, id, &world.config.orca).action;
        }
    }
}

/// Configuration used for training episode `e`: the curriculum ramps the T2
/// count linearly from zero over the first `curriculum_fraction` of episodes.
pub fn curriculum_t2(config: &ScenarioConfig, e: usize, episodes: usize) -> usize {
    let t = &config.train;
    let ramp = (t.curriculum_fraction * episodes as f64).floor() as usize;
    if !t.curriculum || ramp == 0 || e >= ramp {
        return config.n_t2;
    }
    (config.n_t2 * e) / ramp
}

/// A UAV driven by the loop.
struct Agent {
    uav: UavId,
    kind: EncoderKind,
    /// Index into the learner list, or `None` for a frozen greedy policy.
    learner: Option<usize>,
    frozen: Option<usize>,
    history: ObservationHistory,
    /// Whose positions the history tracks.
    tracks: Option<UavId>,
}

struct Stats {
    window: std::collections::VecDeque<(usize, usize, usize, f64, f64)>,
}

impl Stats {
    fn push(&mut self, missions: usize, success: usize, collision: usize, dr_sum: f64, apl_sum: f64) {
        self.window.push_back((missions, success, collision, dr_sum, apl_sum));
        if self.window.len() > RUNNING_WINDOW {
            self.window.pop_front();
        }
    }

    fn rates(&self) -> (f64, f64, f64, f64) {
        let (m, s, c, dr, apl) = self
            .window
            .iter()
            .fold((0, 0, 0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3, a.4 + b.4));
        let sr = if m > 0 { s as f64 / m as f64 } else { 0.0 };
        let cr = if m > 0 { c as f64 / m as f64 } else { 0.0 };
        let (dr, apl) = if s > 0 { (dr / s as f64, apl / s as f64) } else { (0.0, 0.0) };
        (sr, dr, cr, apl)
    }
}

struct Setup<'a> {
    learner_kind: EncoderKind,
    learner_role: Role,
    frozen: Vec<(&'a NetworkParams, EncoderKind)>,
}

fn run_loop(run: &TrainRun, setup: Setup, mut learners: Vec<Learner>) -> Result<TrainOutcome> {
    let base = &run.config;
    let tc = &base.train;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(tc.seed, LEARNER_STREAM));
    let mut buffers: Vec<ReplayBuffer> = learners.iter().map(|_| ReplayBuffer::new(tc.replay_capacity)).collect();
    let mut configs: HashMap<usize, Arc<ScenarioConfig>> = HashMap::new();
    let mut trace = Vec::with_capacity(run.episodes);
    let mut stats = Stats {
        window: Default::default(),
    };
    let mut env_steps: u64 = 0;

    for e in 0..run.episodes {
        let n_t2 = curriculum_t2(base, e, run.episodes);
        let cfg = configs
            .entry(n_t2)
            .or_insert_with(|| {
                let mut c = base.clone();
                c.n_t2 = n_t2;
                Arc::new(c)
            })
            .clone();
        let seed = mix_seed(base.seed, e as u64);
        let mut world = WorldState::reset(cfg.clone(), seed)?;
        let mut agents = build_agents(&world, &setup, learners.len());
        let layouts: Vec<FeatureLayout> = agents.iter().map(|a| FeatureLayout::new(a.kind, &cfg)).collect();
        let mut states: Vec<Option<Vec<f64>>> = vec![None; agents.len()];
        let mut returns = 0.0;
        let mut losses = (0.0, 0usize);
        let max_steps = cfg.deadline_steps.max(cfg.jammer_deadline_steps) + 1;

        while world.t < max_steps && agents.iter().any(|a| a.learner.is_some() && world.uavs[a.uav].is_active()) {
            let mut actions = vec![0usize; world.uavs.len()];
            fill_t2_actions(&world, &mut actions);
            let eps = epsilon_at(env_steps, tc);
            for (i, a) in agents.iter().enumerate() {
                if !world.uavs[a.uav].is_active() {
                    states[i] = None;
                    continue;
                }
                let x = mdp::encode(&world, a.uav, &a.history, &layouts[i])?;
                actions[a.uav] = match (a.learner, a.frozen) {
                    (Some(l), _) => d3qn::act(&learners[l].online, &x, eps, &mut rng)?,
                    (None, Some(f)) => d3qn::argmax(&setup.frozen[f].0.forward(&x)?),
                    (None, None) => 0,
                };
                states[i] = Some(x);
            }
            let ev = world.step(&actions)?;
            env_steps += 1;
            for a in agents.iter_mut() {
                a.history.observe(&world, a.tracks);
            }
            for (i, a) in agents.iter().enumerate() {
                let (Some(l), Some(state)) = (a.learner, states[i].take()) else {
                    continue;
                };
                let uev = &ev.per_uav[a.uav];
                let ctx = RewardContext::for_uav(&world, a.uav, a.kind);
                let r = match a.kind {
                    EncoderKind::Jammer => mdp::reward_jammer(uev, &cfg.rewards, &ctx),
                    _ => mdp::reward_t1(uev, &cfg.rewards, &ctx),
                };
                returns += r;
                let next_state = mdp::encode(&world, a.uav, &a.history, &layouts[i])?;
                buffers[l].push(Transition {
                    state,
                    action: actions[a.uav],
                    reward: r,
                    next_state,
                    terminal: uev.terminal,
                });
            }
            if env_steps % tc.train_every == 0 {
                for (learner, buffer) in learners.iter_mut().zip(&buffers) {
                    if let Some(loss) = learner.train_step(buffer, tc, &mut rng)? {
                        losses.0 += loss;
                        losses.1 += 1;
                    }
                }
            }
        }

        let t1s = world.t1_ids();
        let (mut succ, mut coll, mut dr_sum, mut apl_sum) = (0, 0, 0.0, 0.0);
        for &id in &t1s {
            match world.mission_status(id) {
                MissionStatus::Success => {
                    succ += 1;
                    let u = &world.uavs[id];
                    dr_sum += collected_fraction(u.collected_bits, u.assigned_bits);
                    apl_sum += u.path_length;
                }
                MissionStatus::Collision => coll += 1,
                _ => {}
            }
        }
        stats.push(t1s.len(), succ, coll, dr_sum, apl_sum);
        let (sr, dr, cr, apl) = stats.rates();
        let n_learning = agents.iter().filter(|a| a.learner.is_some()).count().max(1);
        trace.push(TraceRow {
            episode: e,
            seed,
            steps: world.t,
            n_t2,
            episode_return: returns / n_learning as f64,
            loss: if losses.1 > 0 { losses.0 / losses.1 as f64 } else { f64::NAN },
            epsilon: epsilon_at(env_steps, tc),
            successes: succ,
            collisions: coll,
            missions: t1s.len(),
            running_sr: sr,
            running_dr: dr,
            running_cr: cr,
            running_apl: apl,
        });
        agents.clear();

        if run.checkpoint_every > 0 && (e + 1) % run.checkpoint_every == 0 {
            if let Some(path) = &run.checkpoint_path {
                save_policies(path, &learners.iter().map(|l| l.online.clone()).collect::<Vec<_>>())?;
            }
        }
    }

    Ok(TrainOutcome {
        buffer_sizes: buffers.iter().map(|b| b.len()).collect(),
        policies: learners.into_iter().map(|l| l.online).collect(),
        trace,
        env_steps,
    })
}

fn build_agents(world: &WorldState, setup: &Setup, n_learners: usize) -> Vec<Agent> {
    let tau = world.config.history_len;
    let jammer = world.jammer_id();
    let first_t1 = world.t1_ids().first().copied();
    let mut agents = Vec::new();
    let t1s = world.t1_ids();
    match setup.learner_role {
        Role::T1 => {
            for (k, &id) in t1s.iter().enumerate() {
                agents.push(Agent {
                    uav: id,
                    kind: setup.learner_kind,
                    learner: Some(if n_learners == 1 { 0 } else { k }),
                    frozen: None,
                    history: ObservationHistory::new(tau),
                    tracks: jammer,
                });
            }
            if let (Some(j), Some((_, kind))) = (jammer, setup.frozen.first()) {
                agents.push(Agent {
                    uav: j,
                    kind: *kind,
                    learner: None,
                    frozen: Some(0),
                    history: ObservationHistory::new(tau),
                    tracks: first_t1,
                });
            }
        }
        _ => {
            if let Some((_, kind)) = setup.frozen.first() {
                for &id in &t1s {
                    agents.push(Agent {
                        uav: id,
                        kind: *kind,
                        learner: None,
                        frozen: Some(0),
                        history: ObservationHistory::new(tau),
                        tracks: jammer,
                    });
                }
            }
            if let Some(j) = jammer {
                agents.push(Agent {
                    uav: j,
                    kind: EncoderKind::Jammer,
                    learner: Some(0),
                    frozen: None,
                    history: ObservationHistory::new(tau),
                    tracks: first_t1,
                });
            }
        }
    }
    agents
}

pub fn collected_fraction(collected: u64, assigned: u64) -> f64 {
    if assigned == 0 {
        1.0
    } else {
        collected as f64 / assigned as f64
    }
}

fn new_learner(config: &ScenarioConfig, kind: EncoderKind, role: Role, stream: u64) -> Result<Learner> {
    let layout = FeatureLayout::new(kind, config);
    let actions = match role {
        Role::Jammer => config.jammer_body.limits.action_count(),
        _ => config.t1_body.limits.action_count(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.train.seed, stream));
    let net = NetworkParams::new(layout.len, &config.train.hidden_sizes, actions, &mut rng)?;
    Ok(Learner::new(net, &config.train))
}

fn check_run(run: &TrainRun) -> Result<()> {
    run.config.validate()?;
    if run.episodes < 1 {
        return Err(Error::config("episode budget must be >= 1"));
    }
    Ok(())
}

/// D3QN for a lone T1 among ORCA traffic.
pub fn train_single(run: &TrainRun) -> Result<TrainOutcome> {
    check_run(run)?;
    if run.config.n_t1 != 1 || run.config.jammer {
        return Err(Error::config("single training needs exactly one T1 and no jammer"));
    }
    let learner = new_learner(&run.config, EncoderKind::T1, Role::T1, 1)?;
    let setup = Setup {
        learner_kind: EncoderKind::T1,
        learner_role: Role::T1,
        frozen: vec![],
    };
    run_loop(run, setup, vec![learner])
}

/// Independent D3QN learners, one per T1 (or one shared network), each seeing
/// only its own device group and its peers' shared information.
pub fn train_swarm(run: &TrainRun) -> Result<TrainOutcome> {
    check_run(run)?;
    if run.config.jammer {
        return Err(Error::config("swarm training needs a scenario without jammer"));
    }
    let c = &run.config;
    let kind = if c.n_t1 == 1 { EncoderKind::T1 } else { EncoderKind::Swarm };
    let n = if c.train.parameter_sharing || c.n_t1 == 1 { 1 } else { c.n_t1 };
    let learners = (0..n)
        .map(|k| new_learner(c, kind, Role::T1, 1 + k as u64))
        .collect::<Result<Vec<_>>>()?;
    let setup = Setup {
        learner_kind: kind,
        learner_role: Role::T1,
        frozen: vec![],
    };
    run_loop(run, setup, learners)
}

/// D3QN jammer against a frozen, greedy T1 policy.
pub fn train_jammer(run: &TrainRun, frozen_t1: &NetworkParams) -> Result<TrainOutcome> {
    check_run(run)?;
    let c = &run.config;
    if !c.jammer || c.n_t1 != 1 {
        return Err(Error::config("jammer training needs a jammer and exactly one T1"));
    }
    let t1_kind = t1_kind_for_width(c, frozen_t1.input_width())?;
    check_policy(c, frozen_t1, t1_kind, Role::T1)?;
    let learner = new_learner(c, EncoderKind::Jammer, Role::Jammer, 0x4a)?;
    let setup = Setup {
        learner_kind: EncoderKind::Jammer,
        learner_role: Role::Jammer,
        frozen: vec![(frozen_t1, t1_kind)],
    };
    run_loop(run, setup, vec![learner])
}

/// D3QN T1 that tracks the jammer's recent positions, against a frozen greedy
/// jammer. `warm_start` initializes from a pre-jammer T1 policy, with the
/// input layer widened by zero columns.
pub fn retrain_t1(run: &TrainRun, frozen_jammer: &NetworkParams, warm_start: Option<&NetworkParams>) -> Result<TrainOutcome> {
    check_run(run)?;
    let c = &run.config;
    if !c.jammer || c.n_t1 != 1 {
        return Err(Error::config("T1 retraining needs a jammer and exactly one T1"));
    }
    check_policy(c, frozen_jammer, EncoderKind::Jammer, Role::Jammer)?;
    let mut learner = new_learner(c, EncoderKind::T1VsJammer, Role::T1, 2)?;
    if let Some(w) = warm_start {
        let width = FeatureLayout::new(EncoderKind::T1VsJammer, c).len;
        if w.hidden_sizes() != c.train.hidden_sizes.as_slice() {
            return Err(Error::config("warm-start policy hidden sizes differ from the train config"));
        }
        let wide = w.widen_input(width)?;
        check_policy(c, &wide, EncoderKind::T1VsJammer, Role::T1)?;
        learner = Learner::new(wide, &c.train);
    }
    let setup = Setup {
        learner_kind: EncoderKind::T1VsJammer,
        learner_role: Role::T1,
        frozen: vec![(frozen_jammer, EncoderKind::Jammer)],
    };
    run_loop(run, setup, vec![learner])
}

/// Checkpoint paths for `n` policies: the path itself for one, `stem-k.ext` otherwise.
pub fn policy_paths(path: &Path, n: usize) -> Vec<PathBuf> {
    if n == 1 {
        return vec![path.to_path_buf()];
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    (0..n).map(|k| path.with_file_name(format!("{stem}-{k}{ext}"))).collect()
}

pub fn save_policies(path: &Path, policies: &[NetworkParams]) -> Result<Vec<PathBuf>> {
    let paths = policy_paths(path, policies.len());
    for (p, net) in paths.iter().zip(policies) {
        net.save(p)?;
    }
    Ok(paths)
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Moving average of the per-episode return over `window` episodes.
pub fn moving_average_return(trace: &[TraceRow], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(trace.len());
    let mut sum = 0.0;
    for (i, row) in trace.iter().enumerate() {
        sum += row.episode_return;
        if i >= w {
            sum -= trace[i - w].episode_return;
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ScenarioConfig {
        let mut c = ScenarioConfig::small_map();
        c.train.hidden_sizes = vec![16];
        c.train.warmup = 32;
        c.train.batch_size = 8;
        c.deadline_steps = 20;
        c.jammer_deadline_steps = 20;
        c
    }

    #[test]
    fn one_random_episode_accounting() {
        let mut c = tiny();
        c.train.epsilon_end = 1.0;
        c.train.warmup = 1_000_000;
        let out = train_single(&TrainRun::new(ScenarioKind::Single, c, 1)).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.buffer_sizes, vec![out.trace[0].steps as usize]);
        assert!(out.trace[0].loss.is_nan());
    }

    #[test]
    fn fixed_seed_runs_match() {
        let run = TrainRun::new(ScenarioKind::Single, tiny(), 3);
        let a = train_single(&run).unwrap();
        let b = train_single(&run).unwrap();
        assert_eq!(format!("{:?}", a.trace), format!("{:?}", b.trace));
        assert_eq!(a.policies, b.policies);
    }

    #[test]
    fn curriculum_ramps() {
        let c = ScenarioConfig::small_map();
        assert_eq!(curriculum_t2(&c, 0, 100), 0);
        assert_eq!(curriculum_t2(&c, 5, 100), 5);
        assert_eq!(curriculum_t2(&c, 10, 100), 10);
        assert_eq!(curriculum_t2(&c, 0, 5), 10);
        let mut off = c.clone();
        off.train.curriculum = false;
        assert_eq!(curriculum_t2(&off, 0, 100), 10);
    }

    #[test]
    fn shared_swarm_uses_one_buffer() {
        let mut c = tiny();
        c.n_t1 = 2;
        let out = train_swarm(&TrainRun::new(ScenarioKind::Swarm, c.clone(), 1)).unwrap();
        assert_eq!(out.policies.len(), 1);
        c.train.parameter_sharing = false;
        let out = train_swarm(&TrainRun::new(ScenarioKind::Swarm, c, 1)).unwrap();
        assert_eq!(out.policies.len(), 2);
    }

    #[test]
    fn wrong_scenarios_rejected() {
        let mut c = tiny();
        c.jammer = true;
        assert!(matches!(
            train_single(&TrainRun::new(ScenarioKind::Single, c.clone(), 1)),
            Err(Error::Config(_))
        ));
        let bad = NetworkParams::zeros(3, &[4], 19).unwrap();
        assert!(matches!(
            train_jammer(&TrainRun::new(ScenarioKind::JammerTrain, c, 1), &bad),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn policy_path_naming() {
        let p = Path::new("/tmp/x/policy.ckpt");
        assert_eq!(policy_paths(p, 1), vec![p.to_path_buf()]);
        assert_eq!(policy_paths(p, 2)[1], Path::new("/tmp/x/policy-1.ckpt"));
    }
}
