//! Stochastic traffic placement: vehicles on lane centerlines with headway
//! guarantees, pedestrians and static obstacles near the graph periphery,
//! and the easy/hard sampling scheme (hard keeps the densest of k draws).

use crate::geom::{Obb, Vec2};
use crate::scene::{AgentBox, AgentKind, SceneState, EGO_EXTENT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default agent density, agents per 100 m of lane.
pub const DEFAULT_AGENT_DENSITY: f64 = 4.0;

/// Default number of seeded placements the hard setting draws from.
pub const DEFAULT_SAMPLE_COUNT: usize = 8;

/// Minimum arc gap between two vehicles placed on the same lane, meters.
const MIN_HEADWAY_M: f64 = 10.0;

/// Vehicle speeds are sampled uniformly from [0, this] m/s.
const MAX_VEHICLE_SPEED: f64 = 12.0;

const VEHICLE_EXTENT: (f64, f64) = (4.6, 1.9);
const PEDESTRIAN_EXTENT: (f64, f64) = (0.5, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrafficDifficulty {
    /// One stochastic placement.
    Easy,
    /// The densest of k seeded placements.
    Hard,
}

impl std::str::FromStr for TrafficDifficulty {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(TrafficDifficulty::Easy),
            "hard" => Ok(TrafficDifficulty::Hard),
            other => Err(format!("unknown difficulty '{other}'")),
        }
    }
}

fn overlaps_any(candidate: &Obb, scene: &SceneState, ego: &Obb) -> bool {
    if crate::geom::obb_intersects(candidate, ego) {
        return true;
    }
    scene
        .agents
        .iter()
        .any(|a| crate::geom::obb_intersects(candidate, &a.obb()))
}

/// Fills `scene` with agents drawn from `rng` at the given density
/// (agents per 100 m of lane): roughly 70% vehicles on centerlines, 20%
/// pedestrians and 10% static obstacles near the periphery. Placements
/// that would overlap an existing agent or the ego box are retried, then
/// skipped.
pub fn place_agents(scene: &mut SceneState, rng: &mut ChaCha8Rng, density: f64) {
    let total_length = scene.graph.total_length();
    if density <= 0.0 || scene.graph.is_empty() || total_length <= 0.0 {
        return;
    }
    let target = density * total_length / 100.0;
    let lo = (0.5 * target).floor().max(1.0) as usize;
    let hi = ((1.5 * target).ceil() as usize).max(lo + 1);
    let n = rng.gen_range(lo..=hi);
    let n_vehicles = (n as f64 * 0.7).round() as usize;
    let n_pedestrians = (n as f64 * 0.2).round() as usize;
    let n_static = n.saturating_sub(n_vehicles + n_pedestrians);

    let ego = Obb {
        center: Vec2::ZERO,
        heading: 0.0,
        length: EGO_EXTENT.0,
        width: EGO_EXTENT.1,
    };
    let half = scene.fov_m / 2.0;
    // Arc positions already used, per lane, to enforce headway.
    let mut occupied: Vec<Vec<f64>> = vec![Vec::new(); scene.graph.lanes.len()];

    for _ in 0..n_vehicles {
        for _attempt in 0..30 {
            let lane_idx = rng.gen_range(0..scene.graph.lanes.len());
            let lane = &scene.graph.lanes[lane_idx];
            let arc = rng.gen_range(0.0..lane.arc_length());
            if occupied[lane_idx]
                .iter()
                .any(|&a| (a - arc).abs() < MIN_HEADWAY_M)
            {
                continue;
            }
            let agent = AgentBox {
                kind: AgentKind::Vehicle,
                center: lane.point_at_arc(arc),
                heading: lane.heading_at_arc(arc),
                extent: VEHICLE_EXTENT,
                speed: Some(rng.gen_range(0.0..MAX_VEHICLE_SPEED)),
            };
            if overlaps_any(&agent.obb(), scene, &ego) {
                continue;
            }
            occupied[lane_idx].push(arc);
            scene.agents.push(agent);
            break;
        }
    }

    let periphery = |rng: &mut ChaCha8Rng| -> Option<Vec2> {
        let lane_idx = rng.gen_range(0..scene.graph.lanes.len());
        let lane = &scene.graph.lanes[lane_idx];
        let anchor = if rng.gen() { lane.start() } else { lane.end() };
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = anchor + Vec2::from_heading(angle) * rng.gen_range(2.5..6.0);
        (p.x.abs() < half - 1.0 && p.y.abs() < half - 1.0).then_some(p)
    };

    for _ in 0..n_pedestrians {
        for _attempt in 0..30 {
            let Some(center) = periphery(rng) else { continue };
            let agent = AgentBox {
                kind: AgentKind::Pedestrian,
                center,
                heading: rng.gen_range(0.0..std::f64::consts::TAU),
                extent: PEDESTRIAN_EXTENT,
                speed: Some(rng.gen_range(0.3..1.5)),
            };
            if overlaps_any(&agent.obb(), scene, &ego) {
                continue;
            }
            scene.agents.push(agent);
            break;
        }
    }

    for _ in 0..n_static {
        for _attempt in 0..30 {
            let Some(center) = periphery(rng) else { continue };
            let agent = AgentBox {
                kind: AgentKind::Static,
                center,
                heading: rng.gen_range(0.0..std::f64::consts::TAU),
                extent: (rng.gen_range(0.6..2.0), rng.gen_range(0.6..2.0)),
                speed: None,
            };
            if overlaps_any(&agent.obb(), scene, &ego) {
                continue;
            }
            scene.agents.push(agent);
            break;
        }
    }
}

/// Replaces the traffic of `scene` by a seeded placement at the default
/// density: easy takes a single draw, hard the densest of `k` draws (ties
/// fall to the earliest). A scene without lanes is returned unchanged.
pub fn sample_traffic(
    scene: &SceneState,
    seed: u64,
    difficulty: TrafficDifficulty,
    k: usize,
) -> SceneState {
    sample_traffic_with_density(scene, seed, difficulty, k, DEFAULT_AGENT_DENSITY)
}

/// [`sample_traffic`] with an explicit density.
pub fn sample_traffic_with_density(
    scene: &SceneState,
    seed: u64,
    difficulty: TrafficDifficulty,
    k: usize,
    density: f64,
) -> SceneState {
    if scene.graph.is_empty() {
        return scene.clone();
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let draws = match difficulty {
        TrafficDifficulty::Easy => 1,
        TrafficDifficulty::Hard => k.max(1),
    };
    let mut best: Option<SceneState> = None;
    for _ in 0..draws {
        let sub_seed: u64 = master.gen();
        let mut candidate = scene.clone();
        candidate.agents.clear();
        place_agents(
            &mut candidate,
            &mut ChaCha8Rng::seed_from_u64(sub_seed),
            density,
        );
        if best
            .as_ref()
            .map_or(true, |b| candidate.agents.len() > b.agents.len())
        {
            best = Some(candidate);
        }
    }
    best.expect("at least one draw")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgen::{generate_scene, GenConfig, Layout};

    fn base_scene(layout: Layout, seed: u64) -> SceneState {
        let cfg = GenConfig {
            layout,
            seed,
            density: 0.0,
            ..GenConfig::default()
        };
        let mut scene = generate_scene(&cfg).unwrap();
        scene.agents.clear();
        scene
    }

    #[test]
    fn easy_equals_hard_when_k_is_one() {
        let scene = base_scene(Layout::Intersection, 3);
        let easy = sample_traffic(&scene, 42, TrafficDifficulty::Easy, 1);
        let hard = sample_traffic(&scene, 42, TrafficDifficulty::Hard, 1);
        assert_eq!(crate::scene::save_scene(&easy), crate::scene::save_scene(&hard));
    }

    #[test]
    fn hard_never_has_fewer_agents_than_easy() {
        for seed in 0..8u64 {
            let scene = base_scene(Layout::Grid, seed);
            let easy = sample_traffic(&scene, seed, TrafficDifficulty::Easy, 8);
            let hard = sample_traffic(&scene, seed, TrafficDifficulty::Hard, 8);
            assert!(hard.agents.len() >= easy.agents.len(), "seed {seed}");
        }
    }

    #[test]
    fn zero_lane_scene_is_unchanged() {
        let scene = SceneState::empty();
        let out = sample_traffic(&scene, 9, TrafficDifficulty::Hard, 8);
        assert_eq!(crate::scene::save_scene(&out), crate::scene::save_scene(&scene));
    }

    #[test]
    fn placements_respect_separation_rules() {
        for seed in 0..6u64 {
            let scene = base_scene(Layout::Intersection, seed);
            let out = sample_traffic(&scene, seed, TrafficDifficulty::Hard, 8);
            let ego = Obb {
                center: Vec2::ZERO,
                heading: 0.0,
                length: EGO_EXTENT.0,
                width: EGO_EXTENT.1,
            };
            for (i, a) in out.agents.iter().enumerate() {
                assert!(
                    !crate::geom::obb_intersects(&a.obb(), &ego),
                    "seed {seed}: agent {i} overlaps ego"
                );
                for (j, b) in out.agents.iter().enumerate().skip(i + 1) {
                    assert!(
                        !crate::geom::obb_intersects(&a.obb(), &b.obb()),
                        "seed {seed}: agents {i} and {j} overlap"
                    );
                }
                if a.kind == AgentKind::Vehicle {
                    let speed = a.speed.unwrap();
                    assert!((0.0..=MAX_VEHICLE_SPEED).contains(&speed));
                }
            }
            assert!(out.validate().is_ok());
        }
    }

    #[test]
    fn vehicles_keep_headway_on_shared_lanes() {
        for seed in 0..6u64 {
            let scene = base_scene(Layout::Straight, seed);
            let out = sample_traffic(&scene, seed, TrafficDifficulty::Hard, 8);
            let vehicles: Vec<(usize, f64)> = out
                .agents
                .iter()
                .filter(|a| a.kind == AgentKind::Vehicle)
                .map(|a| {
                    let (lane, arc, _) = out
                        .graph
                        .lanes
                        .iter()
                        .enumerate()
                        .map(|(l, lane)| {
                            let (arc, d) = lane.project(a.center);
                            (l, arc, d)
                        })
                        .min_by(|x, y| x.2.total_cmp(&y.2))
                        .unwrap();
                    (lane, arc)
                })
                .collect();
            for (i, &(la, aa)) in vehicles.iter().enumerate() {
                for &(lb, ab) in vehicles.iter().skip(i + 1) {
                    if la == lb {
                        assert!(
                            (aa - ab).abs() >= MIN_HEADWAY_M - 1e-6,
                            "seed {seed}: headway {} on lane {la}",
                            (aa - ab).abs()
                        );
                    }
                }
            }
        }
    }
}
