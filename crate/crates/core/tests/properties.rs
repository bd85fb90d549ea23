use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uavpath::d3qn::{clip_global_norm, NetworkParams};
use uavpath::geometry::{wrap_angle, Rect, Vec2};
use uavpath::mdp::{encode, EncoderKind, FeatureLayout, ObservationHistory};
use uavpath::orca::{solve_velocity, HalfPlane};
use uavpath::plot::AffineMap;
use uavpath::trainer::fill_t2_actions;
use uavpath::world::{Role, WorldState};
use uavpath::ScenarioConfig;

fn unit(theta: f64) -> Vec2 {
    Vec2::from_angle(theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_json_round_trip(
        n_devices in 1usize..40,
        n_t1 in 1usize..5,
        n_t2 in 0usize..15,
        jammer: bool,
        deadline in 10u32..400,
        radius in 0.5f64..4.0,
        gate in -90.0f64..-30.0,
        w_data in 0.0f64..50.0,
        seed: u64,
    ) {
        let mut c = ScenarioConfig::small_map();
        c.n_devices = n_devices.max(n_t1);
        c.n_t1 = n_t1;
        c.n_t2 = n_t2;
        c.jammer = jammer;
        c.deadline_steps = deadline;
        c.t1_body.radius = radius;
        c.channel.rx_sensitivity_dbm = gate;
        c.rewards.w_data = w_data;
        c.seed = seed;
        let back = ScenarioConfig::from_json(&c.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn checkpoint_round_trip(
        input in 1usize..12,
        hidden in proptest::collection::vec(1usize..10, 1..4),
        actions in 1usize..20,
        seed: u64,
        cut in 1usize..64,
    ) {
        let net = NetworkParams::new(input, &hidden, actions, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let bytes = net.to_bytes();
        prop_assert_eq!(&NetworkParams::from_bytes(&bytes).unwrap(), &net);
        let short = &bytes[..bytes.len().saturating_sub(cut)];
        prop_assert!(NetworkParams::from_bytes(short).is_err());
    }

    #[test]
    fn clipped_gradient_keeps_direction(g in proptest::collection::vec(-100.0f64..100.0, 1..50), max in 0.01f64..50.0) {
        let mut c = g.clone();
        let norm = clip_global_norm(&mut c, max);
        let after = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(after <= max * (1.0 + 1e-12) || after == norm);
        if norm > 0.0 {
            let cos = g.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / (norm * after);
            prop_assert!((cos - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lp_solution_is_feasible(
        anchor_r in 0.0f64..2.5,
        anchor_t in 0.0f64..std::f64::consts::TAU,
        planes in proptest::collection::vec((0.0f64..std::f64::consts::TAU, 0.0f64..2.0), 1..8),
        pref_r in 0.0f64..6.0,
        pref_t in 0.0f64..std::f64::consts::TAU,
    ) {
        let max_speed = 4.0;
        let anchor = unit(anchor_t) * anchor_r;
        let hp: Vec<HalfPlane> = planes
            .iter()
            .map(|&(t, slack)| HalfPlane { point: anchor - unit(t) * slack, normal: unit(t) })
            .collect();
        let v_pref = unit(pref_t) * pref_r;
        let v = solve_velocity(&hp, v_pref, max_speed);
        prop_assert!(v.norm() <= max_speed + 1e-9);
        for h in &hp {
            prop_assert!(h.contains(v, 1e-7), "violates {:?} by {}", h, h.signed_distance(v));
        }
        // no feasible point is closer to the preference than the anchor-side optimum
        prop_assert!((v - v_pref).norm() <= (anchor - v_pref).norm() + 1e-7);
        if v_pref.norm() <= max_speed && hp.iter().all(|h| h.contains(v_pref, 0.0)) {
            prop_assert!((v - v_pref).norm() < 1e-9);
        }
    }

    #[test]
    fn affine_map_round_trips(
        x0 in -500.0f64..500.0, y0 in -500.0f64..500.0, w in 1.0f64..1000.0, h in 1.0f64..1000.0,
        fx in 0.0f64..1.0, fy in 0.0f64..1.0,
    ) {
        let bounds = Rect::new(Vec2::new(x0, y0), Vec2::new(x0 + w, y0 + h));
        let map = AffineMap::fit(&bounds, 600.0, 30.0);
        prop_assert_eq!(AffineMap::parse(&map.attribute()).unwrap(), map);
        let p = Vec2::new(x0 + fx * w, y0 + fy * h);
        let (px, py) = map.apply(p);
        prop_assert!((-1e-9..=600.0 + 1e-9).contains(&px) && (-1e-9..=600.0 + 1e-9).contains(&py));
        prop_assert!((map.invert(px, py) - p).norm() <= 1e-9 * (1.0 + p.norm()));
    }
}

fn random_rollout(world: &mut WorldState, steps: usize, rng: &mut ChaCha8Rng) {
    use rand::Rng;
    for _ in 0..steps {
        let mut actions = vec![0; world.uavs.len()];
        fill_t2_actions(world, &mut actions);
        for u in world.uavs.iter().filter(|u| u.role != Role::T2) {
            actions[u.id] = rng.random_range(0..u.velocity_set().len());
        }
        world.step(&actions).unwrap();
    }
}

/// Moves every position, heading and destination by the same rotation about
/// the origin followed by a translation.
fn rigid_motion(world: &mut WorldState, theta: f64, shift: Vec2) {
    let f = |p: Vec2| p.rotate(theta) + shift;
    for u in &mut world.uavs {
        u.pose.position = f(u.pose.position);
        u.pose.heading = wrap_angle(u.pose.heading + theta);
        u.destination = f(u.destination);
        u.goal_bearing = wrap_angle(u.goal_bearing + theta);
    }
    for d in &mut world.devices {
        d.position = f(d.position);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bits_are_conserved(n_t1 in 1usize..4, jammer: bool, seed: u64, steps in 1usize..80) {
        let mut c = ScenarioConfig::small_map();
        c.n_t1 = n_t1;
        c.jammer = jammer;
        let mut world = WorldState::reset(Arc::new(c), seed).unwrap();
        let initial = world.total_initial_bits();
        random_rollout(&mut world, steps, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let collected: u64 = world.uavs.iter().map(|u| u.collected_bits).sum();
        prop_assert_eq!(collected + world.total_remaining_bits(), initial);
        prop_assert!(world.devices.iter().all(|d| d.remaining_bits <= d.initial_bits));
    }

    #[test]
    fn t1_features_are_bounded_and_rigid_motion_invariant(
        seed: u64,
        steps in 0usize..30,
        theta in -std::f64::consts::PI..std::f64::consts::PI,
        sx in -300.0f64..300.0,
        sy in -300.0f64..300.0,
    ) {
        let c = ScenarioConfig::small_map();
        let layout = FeatureLayout::new(EncoderKind::T1, &c);
        let mut world = WorldState::reset(Arc::new(c), seed).unwrap();
        random_rollout(&mut world, steps, &mut ChaCha8Rng::seed_from_u64(seed ^ 2));
        let history = ObservationHistory::new(0);
        let before = encode(&world, 0, &history, &layout).unwrap();
        prop_assert_eq!(before.len(), layout.len);
        prop_assert!(before.iter().all(|x| x.is_finite() && (-1.0..=1.0).contains(x)));
        rigid_motion(&mut world, theta, Vec2::new(sx, sy));
        let after = encode(&world, 0, &history, &layout).unwrap();
        for (i, (a, b)) in before.iter().zip(&after).enumerate() {
            prop_assert!((a - b).abs() < 1e-7, "feature {} changed: {} -> {}", i, a, b);
        }
    }
}
