use std::sync::Arc;

use mddpg::geometry::Vec2;
use mddpg::world::{
    build_observation, DynamicObstacleSpec, ObstacleMode, ObstacleState, SceneConfig, Status,
    World, ACTION_SCALE,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scene(name: &str) -> Arc<SceneConfig> {
    Arc::new(SceneConfig::bundled(name).expect("bundled scene"))
}

#[test]
fn bundled_scene_obstacle_counts() {
    for (name, statics, dynamics) in [("scene1", 15, 5), ("scene2", 15, 9), ("square", 28, 13)] {
        let s = scene(name);
        assert_eq!(
            (s.statics.len(), s.dynamics.len()),
            (statics, dynamics),
            "{name}"
        );
    }
}

#[test]
fn scene2_extends_scene1_with_four_dynamics() {
    let (a, b) = (scene("scene1"), scene("scene2"));
    assert_eq!(a.statics, b.statics);
    assert_eq!(a.dynamics[..], b.dynamics[..5]);
    assert_eq!(
        (a.bounds, a.agent_start, a.target),
        (b.bounds, b.agent_start, b.target)
    );
}

#[test]
fn full_action_moves_forty_units_per_axis() {
    let text = "bounds 0 0 1000 1000\nagent 100 100\ntarget 900 900\n";
    let mut world = World::reset(Arc::new(SceneConfig::parse(text).unwrap()), 0).unwrap();
    world.step([1.0, 1.0]).unwrap();
    assert_eq!(world.state().agent_pos, Vec2::new(140.0, 140.0));
    assert_eq!(ACTION_SCALE, 40.0);
    world.step([-0.5, 0.25]).unwrap();
    assert_eq!(world.state().agent_pos, Vec2::new(120.0, 150.0));
}

#[test]
fn reset_is_deterministic_and_places_agent_at_start() {
    let s = scene("scene1");
    let a = World::reset(Arc::clone(&s), 7).unwrap();
    let b = World::reset(Arc::clone(&s), 7).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.state().agent_pos, s.agent_start);
    assert_eq!(a.state().step_count, 0);
    assert_eq!(a.status(), Status::Running);
}

#[test]
fn initial_speeds_stay_in_range_over_many_resets() {
    let s = scene("scene1");
    let mut seen_low = vec![f64::INFINITY; s.dynamics.len()];
    let mut seen_high = vec![f64::NEG_INFINITY; s.dynamics.len()];
    for seed in 0..1000 {
        let world = World::reset(Arc::clone(&s), seed).unwrap();
        for (i, (o, spec)) in world.state().obstacles.iter().zip(&s.dynamics).enumerate() {
            let v = o.speed().expect("obstacles start moving");
            let (lo, hi) = spec.speed_range;
            assert!(
                (lo..=hi).contains(&v),
                "seed {seed} obstacle {i}: speed {v}"
            );
            seen_low[i] = seen_low[i].min(v);
            seen_high[i] = seen_high[i].max(v);
        }
    }
    // 1000 uniform draws cover the range: the extremes land within 2% of it.
    for (i, spec) in s.dynamics.iter().enumerate() {
        let (lo, hi) = spec.speed_range;
        let slack = 0.02 * (hi - lo);
        assert!(seen_low[i] < lo + slack && seen_high[i] > hi - slack);
    }
}

/// Dwell lengths observed by stepping a single obstacle: the number of
/// advances it stays put after arriving at a special location.
fn observed_dwells(spec: &DynamicObstacleSpec, completions: usize, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacle = ObstacleState::spawn(spec, 4, &mut rng);
    let mut dwells = Vec::with_capacity(completions);
    while dwells.len() < completions {
        let was_moving = matches!(obstacle.mode, ObstacleMode::Moving { .. });
        obstacle.advance(spec, &mut rng);
        let arrived = was_moving && spec.special_locations.contains(&obstacle.position);
        if !arrived {
            continue;
        }
        let at = obstacle.position;
        let mut still = 0;
        loop {
            obstacle.advance(spec, &mut rng);
            if obstacle.position != at {
                break;
            }
            still += 1;
        }
        dwells.push(still);
    }
    dwells
}

#[test]
fn dwell_times_are_uniform_over_range() {
    let spec = DynamicObstacleSpec {
        start: Vec2::new(0.0, 0.0),
        radius: 5.0,
        special_locations: vec![Vec2::new(30.0, 0.0), Vec2::new(0.0, 0.0)],
        speed_range: (10.0, 10.0),
        dwell_range: (1, 6),
    };
    let dwells = observed_dwells(&spec, 10_000, 3);
    let mut counts = [0usize; 6];
    for d in &dwells {
        assert!((1..=6).contains(d), "dwell {d} outside range");
        counts[(*d - 1) as usize] += 1;
    }
    let expected = dwells.len() as f64 / 6.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // Critical value of chi-square with 5 degrees of freedom at the 1% level.
    assert!(chi2 < 15.086, "chi-square {chi2} for counts {counts:?}");
}

#[test]
fn dwelling_obstacle_keeps_position_and_decrements() {
    let spec = DynamicObstacleSpec {
        start: Vec2::new(0.0, 0.0),
        radius: 5.0,
        special_locations: vec![Vec2::new(10.0, 0.0)],
        speed_range: (2.0, 2.0),
        dwell_range: (3, 3),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut o = ObstacleState::spawn(&spec, 4, &mut rng);
    o.advance(&spec, &mut rng);
    assert_eq!(o.position, Vec2::new(2.0, 0.0));
    o.mode = ObstacleMode::Dwelling { remaining: 3 };
    o.advance(&spec, &mut rng);
    assert_eq!(o.mode, ObstacleMode::Dwelling { remaining: 2 });
    assert_eq!(o.position, Vec2::new(2.0, 0.0));
}

#[test]
fn observation_offsets_match_hand_values() {
    let text = "\
bounds 0 0 100 100
agent 10 10
target 50 40
static 30 10 2
dynamic
  start 60 60
  r 3
  special 60 90
  speed 1 1
  dwell 1 1
end
";
    let world = World::reset(Arc::new(SceneConfig::parse(text).unwrap()), 0).unwrap();
    let obs = build_observation(&world, &[Vec2::new(15.0, 18.0)]).unwrap();
    assert_eq!(obs.len(), world.config().state_dim());
    assert_eq!(obs.slot(0), Vec2::new(40.0, 30.0));
    assert_eq!(obs.slot(1), Vec2::new(20.0, 0.0));
    let first_dynamic = 1 + world.config().k_static;
    assert_eq!(obs.slot(first_dynamic), Vec2::new(5.0, 8.0));
    let sentinel = world.config().bounds.diagonal();
    assert_eq!(obs.slot(2), Vec2::new(sentinel, sentinel));
}

/// Independent all-pairs overlap check against the world's current state.
fn brute_force_collision(world: &World) -> bool {
    let c = world.config();
    let agent = world.state().agent_pos;
    let d = |p: Vec2| ((agent.x - p.x).powi(2) + (agent.y - p.y).powi(2)).sqrt();
    c.statics
        .iter()
        .any(|s| d(s.center) < c.agent_radius + s.radius)
        || world
            .state()
            .obstacles
            .iter()
            .zip(&c.dynamics)
            .any(|(o, spec)| d(o.position) < c.agent_radius + spec.radius)
}

fn action_strategy() -> impl Strategy<Value = [f64; 2]> {
    [-1.0f64..=1.0, -1.0f64..=1.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn world_invariants_hold_along_random_episodes(
        scene_index in 0usize..3,
        seed in any::<u64>(),
        actions in prop::collection::vec(action_strategy(), 1..120),
    ) {
        let s = scene(["scene1", "scene2", "square"][scene_index]);
        let mut world = World::reset(Arc::clone(&s), seed).unwrap();
        let mut replay = World::reset(Arc::clone(&s), seed).unwrap();
        let dim = s.state_dim();
        for (k, action) in actions.iter().enumerate() {
            if world.status().is_terminal() {
                prop_assert!(world.step(*action).is_err());
                break;
            }
            let events = world.step(*action).unwrap();
            replay.step(*action).unwrap();
            prop_assert_eq!(&world, &replay);

            let state = world.state();
            prop_assert_eq!(state.step_count, k + 1);
            prop_assert_eq!(state.path_log.len(), state.step_count + 1);
            prop_assert!(s.bounds.contains(state.agent_pos));
            prop_assert_eq!(events.collided, brute_force_collision(&world));
            prop_assert_eq!(events.status, world.status());
            if world.status() == Status::Running {
                prop_assert!(state.step_count < s.max_steps);
            }
            for (o, spec) in state.obstacles.iter().zip(&s.dynamics) {
                prop_assert!(s.bounds.contains(o.position));
                if let Some(v) = o.speed() {
                    prop_assert!(v >= spec.speed_range.0 && v <= spec.speed_range.1);
                }
            }
            let obs = build_observation(&world, &world.dynamic_positions()).unwrap();
            prop_assert_eq!(obs.len(), dim);
        }
    }
}
