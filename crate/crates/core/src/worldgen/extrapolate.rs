//! Route extrapolation: grows a bounded scene into an arbitrarily long world
//! by chaining growth tiles at the exit pose of a per-tile route, preserving
//! the still-visible context across each seam.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{Pose, Vec2};
use crate::lanegraph::{
    count_turns, enumerate_routes, route_from_origin, Route, RouteDifficulty,
};
use crate::scene::{transform_scene, Adjacency, LaneGraph, Polyline, SceneState};

use super::{
    build_junction, generate_scene, light_polyline, right_of, straight_polyline, ArmSpec,
    GenConfig, Layout, SceneBuilder, WorldGenError, ARM_DIRS, JUNCTION_HALF_M, LANE_OFFSET_M,
};

/// Forward extent of one growth tile; every growth route covers at least
/// this much arc before exiting.
const GROWTH_LENGTH_M: f64 = 32.0;

/// Side of the occupancy cells used to keep the chain from doubling back
/// over ground it already covered.
const VISITED_CELL_M: f64 = 8.0;

/// Decorrelates the chain's growth draws from the base scene's seed.
const CHAIN_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// One link of an extrapolated chain.
#[derive(Debug, Clone)]
pub struct Tile {
    /// Pose of the tile frame expressed in the world frame.
    pub pose: Pose,
    /// Scene in the tile frame: preserved context plus fresh growth.
    pub scene: SceneState,
}

/// An extrapolated world: the per-tile scenes, the stitched world scene, and
/// the route that threads every tile.
#[derive(Debug, Clone)]
pub struct TileChain {
    pub tiles: Vec<Tile>,
    /// All tile-0 lanes plus every growth lane, expressed in the world
    /// frame, with the intended adjacency including the seam edges.
    pub world: SceneState,
    /// Route through `world` from the tile-0 ego lane to the last exit.
    pub route: Route,
    /// True when growth stopped early because every candidate exit would
    /// re-enter already covered ground.
    pub truncated: bool,
}

fn cell_of(p: Vec2) -> (i64, i64) {
    (
        (p.x / VISITED_CELL_M).floor() as i64,
        (p.y / VISITED_CELL_M).floor() as i64,
    )
}

/// Marks the cell under every metre of the chain (plus both endpoints).
fn mark_path(visited: &mut HashSet<(i64, i64)>, points: &[Vec2]) {
    let Some(&last) = points.last() else { return };
    visited.insert(cell_of(points[0]));
    let mut to_next = 0.0;
    for w in points.windows(2) {
        let seg = w[0].distance(w[1]);
        if seg <= 0.0 {
            continue;
        }
        let dir = (w[1] - w[0]) / seg;
        let mut s = to_next;
        while s < seg {
            visited.insert(cell_of(w[0] + dir * s));
            s += 1.0;
        }
        to_next = s - seg;
    }
    visited.insert(cell_of(last));
}

/// Pose of the route's end point. When the route exits at the very end of
/// its last lane this reuses the lane endpoint verbatim, so a tile planted
/// there continues the lane without any numerical seam.
fn route_exit_pose(route: &Route, graph: &LaneGraph) -> Pose {
    let lane = &graph.lanes[*route.lanes.last().expect("route has lanes")];
    if (route.exit_offset - lane.arc_length()).abs() < 1e-9 {
        Pose::new(lane.end(), lane.end_heading())
    } else {
        Pose::new(
            lane.point_at_arc(route.exit_offset),
            lane.heading_at_arc(route.exit_offset),
        )
    }
}

/// Re-expresses a polyline in the parent frame of `frame`.
fn to_parent_polyline(line: &Polyline, frame: &Pose) -> Polyline {
    let pts: Vec<Vec2> = line
        .points()
        .iter()
        .map(|&p| frame.to_parent_point(p))
        .collect();
    Polyline::new(&pts).expect("rigid transform keeps a polyline valid")
}

/// Best-first ordering by the route-selection policy: preferred turn count,
/// then longer, then lexicographically smaller lane sequence.
fn rank_routes(routes: &mut [Route], graph: &LaneGraph, difficulty: RouteDifficulty) {
    routes.sort_by(|a, b| {
        let (ta, tb) = (count_turns(a, graph), count_turns(b, graph));
        let by_turns = match difficulty {
            RouteDifficulty::Hard => tb.cmp(&ta),
            RouteDifficulty::Easy => ta.cmp(&tb),
        };
        by_turns
            .then_with(|| b.length(graph).total_cmp(&a.length(graph)))
            .then_with(|| a.lanes.cmp(&b.lanes))
    });
}

/// Builds one tile of fresh road in the tile frame: the root lane starts at
/// the origin heading +x (the seam), and the network fans out from there.
/// Returns the growth graph, its junction approach lanes, and the root.
fn grow_tile(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> (LaneGraph, Vec<usize>, usize) {
    let mut b = SceneBuilder::new();
    let root = match cfg.layout {
        Layout::Straight => {
            let split = rng.gen_range(12.0..20.0);
            let first = b.add_lane(straight_polyline(Vec2::ZERO, Vec2::new(split, 0.0)));
            let second = b.add_lane(straight_polyline(
                Vec2::new(split, 0.0),
                Vec2::new(GROWTH_LENGTH_M, 0.0),
            ));
            b.connect(first, second);
            first
        }
        Layout::Curve => {
            let approach = rng.gen_range(6.0..14.0);
            let radius = rng.gen_range(16.0..40.0);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let sweep = ((GROWTH_LENGTH_M - approach) / radius).min(std::f64::consts::FRAC_PI_2);
            let first = b.add_lane(straight_polyline(Vec2::ZERO, Vec2::new(approach, 0.0)));
            let center = Vec2::new(approach, sign * radius);
            let a0 = -sign * std::f64::consts::FRAC_PI_2;
            let arc = b.add_lane(super::arc_polyline(center, radius, a0, a0 + sign * sweep));
            b.connect(first, arc);
            first
        }
        Layout::Intersection | Layout::Grid => {
            let half = cfg.fov_m / 2.0;
            let c = rng.gen_range(14.0..16.0);
            let center = Vec2::new(c, LANE_OFFSET_M);
            let bh = JUNCTION_HALF_M;
            // The root must end exactly where the junction expects its west
            // approach, so reuse the arm-endpoint formula verbatim.
            let west_end = center - ARM_DIRS[0] * bh + right_of(ARM_DIRS[0]) * LANE_OFFSET_M;
            let root = b.add_lane(straight_polyline(Vec2::ZERO, west_end));
            build_junction(
                &mut b,
                center,
                [
                    // No westbound exit: it would run back over the seam
                    // into ground the previous tiles already cover.
                    ArmSpec::External {
                        incoming: Some(root),
                        outgoing: None,
                    },
                    ArmSpec::Stub {
                        length: half - (c + bh),
                    },
                    ArmSpec::Stub {
                        length: half - (center.y + bh),
                    },
                    ArmSpec::Stub {
                        length: half - (bh - center.y),
                    },
                ],
            );
            root
        }
    };
    let (graph, junction_incoming) = b.finish();
    (graph, junction_incoming, root)
}

/// Grows `n_tiles` scenes from `cfg`: tile 0 is exactly
/// [`generate_scene`]`(cfg)`, and each further tile plants fresh road at the
/// exit pose of a route through the previous one, chosen by `difficulty`
/// among exits that avoid already covered ground. Dead ends stop the chain
/// early and set `truncated`.
pub fn extrapolate_route(
    cfg: &GenConfig,
    n_tiles: usize,
    difficulty: RouteDifficulty,
) -> Result<TileChain, WorldGenError> {
    if n_tiles == 0 {
        return Err(WorldGenError::InfeasibleConfig("n_tiles == 0".into()));
    }
    let base = generate_scene(cfg)?;
    let route0 = route_from_origin(&base.graph, difficulty)
        .map_err(|e| WorldGenError::InfeasibleConfig(format!("tile 0 has no route: {e}")))?;
    if n_tiles == 1 {
        return Ok(TileChain {
            tiles: vec![Tile {
                pose: Pose::IDENTITY,
                scene: base.clone(),
            }],
            world: base,
            route: route0,
            truncated: false,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ CHAIN_SEED_SALT);
    let mut visited: HashSet<(i64, i64)> = HashSet::new();
    mark_path(&mut visited, &route0.points(&base.graph));

    let mut tiles = vec![Tile {
        pose: Pose::IDENTITY,
        scene: base.clone(),
    }];
    let mut world_lanes = base.graph.lanes.clone();
    let mut world_edges: Vec<(usize, usize)> = (0..base.graph.lanes.len())
        .flat_map(|i| base.graph.adjacency.successors(i).map(move |j| (i, j)))
        .collect();
    let mut world_red = base.red_lights.clone();
    let mut world_green = base.green_lights.clone();
    let mut world_route = route0.clone();
    let mut truncated = false;

    let mut pose_world = Pose::IDENTITY;
    let mut exit_local = route_exit_pose(&route0, &base.graph);
    let mut prev_scene = base.clone();
    let mut prev_last_world = *route0.lanes.last().expect("route has lanes");

    for _ in 1..n_tiles {
        let pose_next = pose_world.compose(&exit_local);
        let preserved = transform_scene(&prev_scene, &exit_local);
        let (growth, junction_incoming, root) = grow_tile(cfg, &mut rng);

        let mut grown_red: Vec<Polyline> = Vec::new();
        let mut grown_green: Vec<Polyline> = Vec::new();
        for lane_idx in junction_incoming {
            if rng.gen::<f64>() < cfg.light_probability {
                let light = light_polyline(&growth.lanes[lane_idx]);
                if rng.gen::<bool>() {
                    grown_red.push(light);
                } else {
                    grown_green.push(light);
                }
            }
        }

        let mut candidates = enumerate_routes(&growth, root)
            .map_err(|e| WorldGenError::InfeasibleConfig(format!("growth has no route: {e}")))?;
        rank_routes(&mut candidates, &growth, difficulty);
        let chosen = candidates.into_iter().find(|r| {
            let exit = route_exit_pose(r, &growth);
            !visited.contains(&cell_of(pose_next.to_parent_point(exit.translation)))
        });
        let Some(tile_route) = chosen else {
            truncated = true;
            break;
        };

        // Per-tile scene: preserved context, growth lanes, and the seam
        // edge joining the lane that ends on the tile origin to the root.
        let tile_base = preserved.graph.lanes.len();
        let mut lanes = preserved.graph.lanes.clone();
        lanes.extend(growth.lanes.iter().cloned());
        let mut adjacency = Adjacency::new(lanes.len());
        for i in 0..tile_base {
            for j in preserved.graph.adjacency.successors(i) {
                adjacency.set(i, j, true);
            }
        }
        for i in 0..growth.lanes.len() {
            for j in growth.adjacency.successors(i) {
                adjacency.set(tile_base + i, tile_base + j, true);
            }
        }
        let seam = (0..tile_base)
            .min_by(|&a, &b| {
                lanes[a]
                    .end()
                    .distance(Vec2::ZERO)
                    .total_cmp(&lanes[b].end().distance(Vec2::ZERO))
            })
            .filter(|&i| lanes[i].end().distance(Vec2::ZERO) < 1e-6);
        if let Some(s) = seam {
            adjacency.set(s, tile_base + root, true);
        }
        let mut red_lights = preserved.red_lights.clone();
        red_lights.extend(grown_red.iter().cloned());
        let mut green_lights = preserved.green_lights.clone();
        green_lights.extend(grown_green.iter().cloned());
        let tile_scene = SceneState {
            fov_m: preserved.fov_m,
            city: preserved.city.clone(),
            graph: LaneGraph::new(lanes, adjacency),
            red_lights,
            green_lights,
            agents: preserved.agents.clone(),
            ego_velocity: preserved.ego_velocity,
        };
        debug_assert!(tile_scene.validate().is_ok());

        // World stitching: growth geometry moves into the world frame and
        // the seam edge continues the committed route.
        let world_base = world_lanes.len();
        world_lanes.extend(growth.lanes.iter().map(|l| to_parent_polyline(l, &pose_next)));
        for i in 0..growth.lanes.len() {
            for j in growth.adjacency.successors(i) {
                world_edges.push((world_base + i, world_base + j));
            }
        }
        world_edges.push((prev_last_world, world_base + root));
        world_red.extend(grown_red.iter().map(|l| to_parent_polyline(l, &pose_next)));
        world_green.extend(grown_green.iter().map(|l| to_parent_polyline(l, &pose_next)));
        world_route
            .lanes
            .extend(tile_route.lanes.iter().map(|&l| world_base + l));
        world_route.exit_offset = tile_route.exit_offset;

        let world_points: Vec<Vec2> = tile_route
            .points(&growth)
            .iter()
            .map(|&p| pose_next.to_parent_point(p))
            .collect();
        mark_path(&mut visited, &world_points);

        prev_last_world = world_base + *tile_route.lanes.last().expect("route has lanes");
        exit_local = route_exit_pose(&tile_route, &growth);
        pose_world = pose_next;
        prev_scene = tile_scene.clone();
        tiles.push(Tile {
            pose: pose_next,
            scene: tile_scene,
        });
    }

    let mut adjacency = Adjacency::new(world_lanes.len());
    for (i, j) in world_edges {
        adjacency.set(i, j, true);
    }
    let mut extent = 0.0_f64;
    for lane in &world_lanes {
        for p in lane.points() {
            extent = extent.max(p.x.abs()).max(p.y.abs());
        }
    }
    for agent in &base.agents {
        extent = extent.max(agent.center.x.abs()).max(agent.center.y.abs());
    }
    let world = SceneState {
        fov_m: 2.0 * (extent + 10.0),
        city: base.city.clone(),
        graph: LaneGraph::new(world_lanes, adjacency),
        red_lights: world_red,
        green_lights: world_green,
        agents: base.agents.clone(),
        ego_velocity: base.ego_velocity,
    };
    debug_assert!(world.validate().is_ok());

    Ok(TileChain {
        tiles,
        world,
        route: world_route,
        truncated,
    })
}
