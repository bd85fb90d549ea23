//! Fast invariant suite run by `uavpath selfcheck`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::kmeans;
use crate::config::ScenarioConfig;
use crate::d3qn::{loss_and_gradient, td_targets, NetworkParams, Transition};
use crate::error::Result;
use crate::eval::{Policy, PolicySet};
use crate::geometry::{segment_point_distance, Vec2};
use crate::mix_seed;
use crate::trainer::fill_t2_actions;
use crate::world::{Role, WorldState};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckItem {
    fn new(name: &'static str, result: Result<std::result::Result<String, String>>) -> CheckItem {
        match result {
            Ok(Ok(detail)) => CheckItem { name, passed: true, detail },
            Ok(Err(detail)) => CheckItem { name, passed: false, detail },
            Err(e) => CheckItem {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }

    pub fn line(&self) -> String {
        format!("{} {:<14} {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelfcheckOptions {
    pub seed: u64,
    /// Test hook: perturbs one analytic gradient entry before comparison.
    pub corrupt_gradient: bool,
}

pub fn run(opts: SelfcheckOptions) -> Vec<CheckItem> {
    vec![
        CheckItem::new("gradient", gradient_check(opts.seed, 8, opts.corrupt_gradient)),
        CheckItem::new("double-q", double_q_check(opts.seed, 20)),
        CheckItem::new("orca-pair", orca_pair_check(opts.seed, 20)),
        CheckItem::new("kmeans", kmeans_check(opts.seed, 20)),
        CheckItem::new("conservation", conservation_check(opts.seed, 20)),
    ]
}

fn random_batch(net: &NetworkParams, n: usize, rng: &mut ChaCha8Rng) -> Vec<Transition> {
    let w = net.input_width();
    (0..n)
        .map(|_| Transition {
            state: (0..w).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: rng.random_range(0..net.action_count()),
            reward: rng.random_range(-1.0..1.0),
            next_state: (0..w).map(|_| rng.random_range(-1.0..1.0)).collect(),
            terminal: rng.random_bool(0.3),
        })
        .collect()
}

/// Analytic gradient vs central differences on random dueling nets.
pub fn gradient_check(seed: u64, n_nets: usize, corrupt: bool) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..n_nets {
        let depth = k % 3 + 1;
        let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(2..6)).collect();
        let mut net = NetworkParams::new(rng.random_range(2..5), &hidden, rng.random_range(2..4), &mut rng)?;
        for b in net.params.iter_mut() {
            *b += rng.random_range(-0.1..0.1);
        }
        let data = random_batch(&net, 3, &mut rng);
        let batch: Vec<&Transition> = data.iter().collect();
        let targets: Vec<f64> = (0..batch.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, mut grad) = loss_and_gradient(&net, &batch, &targets)?;
        if corrupt {
            grad[0] += 1.0;
        }
        for i in 0..net.params.len() {
            let orig = net.params[i];
            net.params[i] = orig + h;
            let (lp, _) = loss_and_gradient(&net, &batch, &targets)?;
            net.params[i] = orig - h;
            let (lm, _) = loss_and_gradient(&net, &batch, &targets)?;
            net.params[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    let msg = format!("{n_nets} nets, worst relative error {worst:.2e}");
    Ok(if worst < 1e-4 { Ok(msg) } else { Err(msg) })
}

/// Double-Q targets vs a table read off one-hot states.
pub fn double_q_check(seed: u64, n_cases: usize) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 2));
    for _ in 0..n_cases {
        let (ns, na) = (rng.random_range(2..6), rng.random_range(2..5));
        let online = NetworkParams::new(ns, &[4], na, &mut rng)?;
        let target = NetworkParams::new(ns, &[4], na, &mut rng)?;
        let one_hot = |s: usize| (0..ns).map(|i| if i == s { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
        let q_on: Vec<Vec<f64>> = (0..ns).map(|s| online.forward(&one_hot(s))).collect::<Result<_>>()?;
        let q_tg: Vec<Vec<f64>> = (0..ns).map(|s| target.forward(&one_hot(s))).collect::<Result<_>>()?;
        let gamma = rng.random_range(0.5..1.0);
        let data: Vec<(usize, Transition)> = (0..8)
            .map(|_| {
                let s2 = rng.random_range(0..ns);
                let t = Transition {
                    state: one_hot(rng.random_range(0..ns)),
                    action: rng.random_range(0..na),
                    reward: rng.random_range(-1.0..1.0),
                    next_state: one_hot(s2),
                    terminal: rng.random_bool(0.25),
                };
                (s2, t)
            })
            .collect();
        let batch: Vec<&Transition> = data.iter().map(|(_, t)| t).collect();
        let got = td_targets(&batch, &online, &target, gamma)?;
        for ((s2, t), y) in data.iter().zip(got) {
            let row = &q_on[*s2];
            let mut a_star = 0;
            for a in 1..na {
                if row[a] > row[a_star] {
                    a_star = a;
                }
            }
            let want = if t.terminal { t.reward } else { t.reward + gamma * q_tg[*s2][a_star] };
            if want != y {
                return Ok(Err(format!("target {y} != table value {want}")));
            }
        }
    }
    Ok(Ok(format!("{n_cases} tabular cases exact")))
}

/// Closest approach between two T2s set on a head-on course, measured along
/// each step's straight-line motion, minus the sum of their radii.
pub fn orca_encounter_margin(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 3));
    let mut c = ScenarioConfig::small_map();
    c.n_t2 = 2;
    c.n_devices = 1;
    let c = Arc::new(c);
    let mut world = WorldState::reset(c.clone(), seed)?;
    let center = c.bounds.center();
    let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let ids = world.t2_ids();
    for (k, &id) in ids.iter().enumerate() {
        let dir = Vec2::from_angle(theta + k as f64 * std::f64::consts::PI + rng.random_range(-0.3..0.3));
        let start = center + dir * rng.random_range(25.0..45.0);
        let goal = center - dir * 60.0 + Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let u = &mut world.uavs[id];
        u.pose.position = start;
        u.pose.heading = (goal - start).angle();
        u.destination = goal;
        u.goal_bearing = u.pose.heading;
    }
    for u in world.uavs.iter_mut().filter(|u| u.role != Role::T2) {
        u.alive = false;
    }
    let (a, b) = (ids[0], ids[1]);
    let reach = world.uavs[a].radius + world.uavs[b].radius;
    let mut best = f64::INFINITY;
    for _ in 0..60 {
        let rel0 = world.uavs[a].pose.position - world.uavs[b].pose.position;
        let mut actions = vec![0; world.uavs.len()];
        fill_t2_actions(&world, &mut actions);
        world.step(&actions)?;
        let rel1 = world.uavs[a].pose.position - world.uavs[b].pose.position;
        best = best.min(segment_point_distance(rel0, rel1, Vec2::ZERO));
    }
    Ok(best - reach)
}

pub fn orca_pair_check(seed: u64, n: usize) -> Result<std::result::Result<String, String>> {
    let mut worst = f64::INFINITY;
    for e in 0..n {
        worst = worst.min(orca_encounter_margin(mix_seed(seed, e as u64))?);
    }
    let msg = format!("{n} encounters, worst separation margin {worst:.4} m");
    Ok(if worst >= -1e-3 { Ok(msg) } else { Err(msg) })
}

/// Best SSE over every two-way split of `points`.
pub fn exhaustive_sse_k2(points: &[Vec2]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 1..(1u32 << n) - 1 {
        let mut total = 0.0;
        for side in [true, false] {
            let members: Vec<Vec2> = (0..n).filter(|&i| (mask >> i & 1 == 1) == side).map(|i| points[i]).collect();
            let c = members.iter().fold(Vec2::ZERO, |s, p| s + *p) / members.len() as f64;
            total += members.iter().map(|p| (*p - c).norm_sq()).sum::<f64>();
        }
        best = best.min(total);
    }
    best
}

pub fn kmeans_check(seed: u64, n: usize) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 4));
    for i in 0..n {
        let m = rng.random_range(3..=8);
        let pts: Vec<Vec2> = (0..m).map(|_| Vec2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))).collect();
        let p = kmeans(&pts, 2, rng.random(), 100)?;
        let opt = exhaustive_sse_k2(&pts);
        if (p.sse - opt).abs() > 1e-9 * opt.max(1.0) {
            return Ok(Err(format!("instance {i}: sse {} vs optimum {opt}", p.sse)));
        }
        if p.sse_history.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Ok(Err(format!("instance {i}: Lloyd SSE increased")));
        }
    }
    Ok(Ok(format!("{n} instances optimal, SSE monotone")))
}

/// Random-action episodes: bit conservation, unique associations and
/// bit-identical replay.
pub fn conservation_check(seed: u64, n: usize) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 5));
    for e in 0..n {
        let mut c = ScenarioConfig::small_map();
        c.n_t1 = rng.random_range(1..=3);
        c.jammer = rng.random_bool(0.5);
        let c = Arc::new(c);
        let ep_seed = rng.random();
        let mut world = WorldState::reset(c.clone(), ep_seed)?;
        let initial = world.total_initial_bits();
        let mut log = Vec::new();
        for _ in 0..50 {
            let mut actions = vec![0; world.uavs.len()];
            fill_t2_actions(&world, &mut actions);
            for u in world.uavs.iter().filter(|u| u.role != Role::T2) {
                actions[u.id] = rng.random_range(0..u.velocity_set().len());
            }
            world.step(&actions)?;
            let collected: u64 = world.uavs.iter().map(|u| u.collected_bits).sum();
            if collected + world.total_remaining_bits() != initial {
                return Ok(Err(format!("episode {e}: bits not conserved at t={}", world.t)));
            }
            let mut seen = vec![false; world.devices.len()];
            for d in world.association.iter().flatten() {
                if std::mem::replace(&mut seen[*d], true) {
                    return Ok(Err(format!("episode {e}: device {d} served twice at t={}", world.t)));
                }
            }
            log.push((actions, format!("{:?}", world.uavs), world.association.clone()));
        }
        let mut again = WorldState::reset(c, ep_seed)?;
        for (actions, uavs, assoc) in &log {
            again.step(actions)?;
            if format!("{:?}", again.uavs) != *uavs || again.association != *assoc {
                return Ok(Err(format!("episode {e}: replay diverged at t={}", again.t)));
            }
        }
    }
    Ok(Ok(format!("{n} episodes, zero violations")))
}

/// Greedy evaluation baseline used by the CLI when no checkpoint is given.
pub fn baseline_policies(jammer: bool) -> PolicySet {
    let p = PolicySet::shared(Policy::StraightToGoal);
    if jammer {
        p.with_jammer(Policy::StraightToGoal)
    } else {
        p
    }
}
