//! Procedural scene generation: seeded layouts (straight, curve,
//! intersection, grid) with exactly coincident successor endpoints, traffic
//! lights on intersection approaches, stochastic traffic placement, and the
//! route-extrapolation tiling loop for long worlds.

mod extrapolate;
mod traffic;

pub use extrapolate::{extrapolate_route, Tile, TileChain};
pub use traffic::{
    place_agents, sample_traffic, sample_traffic_with_density, TrafficDifficulty,
    DEFAULT_AGENT_DENSITY, DEFAULT_SAMPLE_COUNT,
};

use crate::geom::Vec2;
use crate::scene::{Adjacency, LaneGraph, Polyline, SceneState, POLYLINE_POINTS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Half side of the square an intersection occupies, meters.
const JUNCTION_HALF_M: f64 = 12.0;

/// Lateral offset of a lane centerline from the road axis (half of the
/// 3.7 m lane separation).
const LANE_OFFSET_M: f64 = 1.85;

/// Length of the stop-light polyline sliced from an approach lane.
const LIGHT_LENGTH_M: f64 = 6.0;

#[derive(Debug, Error)]
pub enum WorldGenError {
    #[error("infeasible config: {0}")]
    InfeasibleConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Straight,
    Curve,
    Intersection,
    Grid,
}

impl std::str::FromStr for Layout {
    type Err = WorldGenError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "straight" => Ok(Layout::Straight),
            "curve" => Ok(Layout::Curve),
            "intersection" => Ok(Layout::Intersection),
            "grid" => Ok(Layout::Grid),
            other => Err(WorldGenError::InfeasibleConfig(format!(
                "unknown layout '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Layout::Straight => "straight",
            Layout::Curve => "curve",
            Layout::Intersection => "intersection",
            Layout::Grid => "grid",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub seed: u64,
    pub layout: Layout,
    pub lane_count_min: usize,
    pub lane_count_max: usize,
    /// Agents per 100 m of lane.
    pub density: f64,
    pub light_probability: f64,
    pub fov_m: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            layout: Layout::Straight,
            lane_count_min: 2,
            lane_count_max: 6,
            density: DEFAULT_AGENT_DENSITY,
            light_probability: 0.6,
            fov_m: crate::scene::DEFAULT_FOV_M,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), WorldGenError> {
        if self.density < 0.0 {
            return Err(WorldGenError::InfeasibleConfig("density < 0".into()));
        }
        if self.fov_m <= 0.0 {
            return Err(WorldGenError::InfeasibleConfig("fov <= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.light_probability) {
            return Err(WorldGenError::InfeasibleConfig(
                "light probability outside [0, 1]".into(),
            ));
        }
        if self.lane_count_min == 0 || self.lane_count_min > self.lane_count_max {
            return Err(WorldGenError::InfeasibleConfig(
                "lane count range is empty or starts at zero".into(),
            ));
        }
        let min_fov = match self.layout {
            Layout::Straight | Layout::Curve => 16.0,
            Layout::Intersection | Layout::Grid => 64.0,
        };
        if self.fov_m < min_fov {
            return Err(WorldGenError::InfeasibleConfig(format!(
                "layout {} needs fov >= {min_fov}",
                self.layout
            )));
        }
        Ok(())
    }
}

/// Accumulates lanes and intended adjacency while a layout is built.
pub(crate) struct SceneBuilder {
    lanes: Vec<Polyline>,
    edges: Vec<(usize, usize)>,
    /// Lanes that enter an intersection; lights attach only to these.
    junction_incoming: Vec<usize>,
}

impl SceneBuilder {
    pub(crate) fn new() -> SceneBuilder {
        SceneBuilder {
            lanes: Vec::new(),
            edges: Vec::new(),
            junction_incoming: Vec::new(),
        }
    }

    pub(crate) fn add_lane(&mut self, lane: Polyline) -> usize {
        self.lanes.push(lane);
        self.lanes.len() - 1
    }

    pub(crate) fn connect(&mut self, from: usize, to: usize) {
        self.edges.push((from, to));
    }

    pub(crate) fn finish(self) -> (LaneGraph, Vec<usize>) {
        let mut adjacency = Adjacency::new(self.lanes.len());
        for (i, j) in self.edges {
            adjacency.set(i, j, true);
        }
        (LaneGraph::new(self.lanes, adjacency), self.junction_incoming)
    }
}

pub(crate) fn straight_polyline(from: Vec2, to: Vec2) -> Polyline {
    let pts: Vec<Vec2> = (0..POLYLINE_POINTS)
        .map(|i| from + (to - from) * (i as f64 / (POLYLINE_POINTS - 1) as f64))
        .collect();
    Polyline::new(&pts).expect("straight segment with distinct endpoints")
}

pub(crate) fn arc_polyline(center: Vec2, radius: f64, a0: f64, a1: f64) -> Polyline {
    let pts: Vec<Vec2> = (0..POLYLINE_POINTS)
        .map(|i| {
            let t = i as f64 / (POLYLINE_POINTS - 1) as f64;
            let a = a0 + (a1 - a0) * t;
            center + Vec2::new(a.cos(), a.sin()) * radius
        })
        .collect();
    Polyline::new(&pts).expect("arc with nonzero sweep")
}

/// How one of the four arms (west, east, north, south) of a junction is
/// realized.
pub(crate) enum ArmSpec {
    /// Build incoming and outgoing lanes of this length.
    Stub { length: f64 },
    /// Use pre-built lanes (e.g. a bridge shared between two junctions).
    External {
        incoming: Option<usize>,
        outgoing: Option<usize>,
    },
}

/// Inward travel direction of each arm, order W, E, N, S.
const ARM_DIRS: [Vec2; 4] = [
    Vec2 { x: 1.0, y: 0.0 },
    Vec2 { x: -1.0, y: 0.0 },
    Vec2 { x: 0.0, y: -1.0 },
    Vec2 { x: 0.0, y: 1.0 },
];

fn right_of(u: Vec2) -> Vec2 {
    Vec2::new(u.y, -u.x)
}

fn arm_index_for_dir(dir: Vec2) -> usize {
    ARM_DIRS
        .iter()
        .position(|u| u.distance(dir) < 1e-9)
        .expect("axis-aligned direction")
}

/// Builds a four-way junction around `center`: arm lanes per spec, plus the
/// straight/right/left connectors between every built incoming arm and
/// every built outgoing arm. Returns per-arm (incoming, outgoing) lane ids.
pub(crate) fn build_junction(
    b: &mut SceneBuilder,
    center: Vec2,
    arms: [ArmSpec; 4],
) -> [(Option<usize>, Option<usize>); 4] {
    let bh = JUNCTION_HALF_M;
    let d = LANE_OFFSET_M;
    let mut ports: [(Option<usize>, Option<usize>); 4] = [(None, None); 4];
    for (k, spec) in arms.iter().enumerate() {
        let u = ARM_DIRS[k];
        let a = center - u * bh + right_of(u) * d; // incoming lane end
        let out_start = center - u * bh - right_of(u) * d;
        match spec {
            ArmSpec::Stub { length } => {
                let incoming = b.add_lane(straight_polyline(a - u * *length, a));
                let outgoing =
                    b.add_lane(straight_polyline(out_start, out_start - u * *length));
                ports[k] = (Some(incoming), Some(outgoing));
            }
            ArmSpec::External { incoming, outgoing } => {
                ports[k] = (*incoming, *outgoing);
            }
        }
    }
    for k in 0..4 {
        let Some(incoming) = ports[k].0 else { continue };
        b.junction_incoming.push(incoming);
        let u = ARM_DIRS[k];
        let a = center - u * bh + right_of(u) * d;
        // Straight across, right turn, left turn — when the target arm exists.
        let straight_arm = arm_index_for_dir(-u);
        if let Some(outgoing) = ports[straight_arm].1 {
            let end = center + u * bh + right_of(u) * d;
            let conn = b.add_lane(straight_polyline(a, end));
            b.connect(incoming, conn);
            b.connect(conn, outgoing);
        }
        let right_arm = arm_index_for_dir(-right_of(u));
        if let Some(outgoing) = ports[right_arm].1 {
            let arc_center = center - u * bh + right_of(u) * bh;
            let a0 = (a - arc_center).heading();
            let conn = b.add_lane(arc_polyline(
                arc_center,
                bh - d,
                a0,
                a0 - std::f64::consts::FRAC_PI_2,
            ));
            b.connect(incoming, conn);
            b.connect(conn, outgoing);
        }
        let left_arm = arm_index_for_dir(right_of(u));
        if let Some(outgoing) = ports[left_arm].1 {
            let arc_center = center - u * bh - right_of(u) * bh;
            let a0 = (a - arc_center).heading();
            let conn = b.add_lane(arc_polyline(
                arc_center,
                bh + d,
                a0,
                a0 + std::f64::consts::FRAC_PI_2,
            ));
            b.connect(incoming, conn);
            b.connect(conn, outgoing);
        }
    }
    ports
}

fn build_straight(b: &mut SceneBuilder, rng: &mut ChaCha8Rng, cfg: &GenConfig) {
    let half = cfg.fov_m / 2.0;
    let count = rng.gen_range(cfg.lane_count_min..=cfg.lane_count_max);
    let corridors = (count + 1) / 2;
    for c in 0..corridors {
        // Corridor 0 is the ego's eastbound lane at y = 0; the rest
        // alternate sides and directions.
        let (y, eastbound) = match c {
            0 => (0.0, true),
            _ => {
                let tier = ((c + 1) / 2) as f64;
                if c % 2 == 1 {
                    (3.7 * tier, false)
                } else {
                    (-3.7 * tier, true)
                }
            }
        };
        let split = rng.gen_range(-8.0..8.0);
        let (from, mid, to) = if eastbound {
            (Vec2::new(-half, y), Vec2::new(split, y), Vec2::new(half, y))
        } else {
            (Vec2::new(half, y), Vec2::new(split, y), Vec2::new(-half, y))
        };
        let first = b.add_lane(straight_polyline(from, mid));
        let second = b.add_lane(straight_polyline(mid, to));
        b.connect(first, second);
    }
}

fn build_curve(b: &mut SceneBuilder, rng: &mut ChaCha8Rng, cfg: &GenConfig) {
    let half = cfg.fov_m / 2.0;
    let count = rng.gen_range(cfg.lane_count_min..=cfg.lane_count_max);
    let radius = rng.gen_range(16.0..40.0);
    let left: bool = rng.gen();
    let sign = if left { 1.0 } else { -1.0 };
    let approach_len = rng.gen_range(8.0..(half - 4.0).min(24.0));
    let corridors = ((count + 2) / 3).max(1);
    let max_offset = 3.7 * (corridors as f64 - 1.0);
    // Cap the sweep so even the outermost corridor's arc stays inside the
    // field of view.
    let mut sweep = rng.gen_range(0.6..std::f64::consts::FRAC_PI_2);
    let fits = |s: f64| -> bool {
        let r = radius + max_offset;
        let x = r * s.sin();
        let y = (radius - r * s.cos()).abs().max(max_offset);
        x < half - 1.0 && y < half - 1.0
    };
    while !fits(sweep) {
        sweep *= 0.9;
    }
    for c in 0..corridors {
        // Parallel corridors share the arc center at offset radii.
        let offset = 3.7 * c as f64;
        let y0 = -sign * offset;
        let r = radius + offset;
        let a = b.add_lane(straight_polyline(
            Vec2::new(-approach_len, y0),
            Vec2::new(0.0, y0),
        ));
        let center = Vec2::new(0.0, sign * radius);
        let (a0, a1) = if left {
            (-std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2 + sweep)
        } else {
            (std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2 - sweep)
        };
        let arc = b.add_lane(arc_polyline(center, r, a0, a1));
        b.connect(a, arc);
    }
}

fn build_intersection(b: &mut SceneBuilder, rng: &mut ChaCha8Rng, cfg: &GenConfig) {
    let half = cfg.fov_m / 2.0;
    let c = rng.gen_range(10.0..16.0);
    let center = Vec2::new(c, LANE_OFFSET_M);
    let bh = JUNCTION_HALF_M;
    build_junction(
        b,
        center,
        [
            ArmSpec::Stub { length: (c - bh) + half },
            ArmSpec::Stub { length: half - (c + bh) },
            ArmSpec::Stub { length: half - (center.y + bh) },
            ArmSpec::Stub { length: half - (bh - center.y) },
        ],
    );
}

fn build_grid(b: &mut SceneBuilder, _rng: &mut ChaCha8Rng, cfg: &GenConfig) {
    let half = cfg.fov_m / 2.0;
    let bh = JUNCTION_HALF_M;
    let d = LANE_OFFSET_M;
    let c1 = Vec2::new(-16.0, d);
    let c2 = Vec2::new(16.0, d);
    // Bridges between the two junction boxes; the ego sits on the eastbound
    // one at the origin.
    let eastbound = b.add_lane(straight_polyline(Vec2::new(-4.0, 0.0), Vec2::new(4.0, 0.0)));
    let westbound = b.add_lane(straight_polyline(Vec2::new(4.0, 2.0 * d), Vec2::new(-4.0, 2.0 * d)));
    let north_len = half - (d + bh);
    let south_len = half - (bh - d);
    build_junction(
        b,
        c1,
        [
            ArmSpec::Stub { length: half + (c1.x - bh) },
            ArmSpec::External {
                incoming: Some(westbound),
                outgoing: Some(eastbound),
            },
            ArmSpec::Stub { length: north_len },
            ArmSpec::Stub { length: south_len },
        ],
    );
    build_junction(
        b,
        c2,
        [
            ArmSpec::External {
                incoming: Some(eastbound),
                outgoing: Some(westbound),
            },
            ArmSpec::Stub { length: half - (c2.x + bh) },
            ArmSpec::Stub { length: north_len },
            ArmSpec::Stub { length: south_len },
        ],
    );
}

/// Slice holding the final stretch of an approach lane, used as the light
/// polyline.
fn light_polyline(lane: &Polyline) -> Polyline {
    let len = lane.arc_length();
    lane.slice((len - LIGHT_LENGTH_M).max(0.0), len)
        .expect("light slice spans a positive arc")
}

/// Deterministically generates a scene from the config: layout lanes with
/// explicitly recorded adjacency, lights on intersection approaches, the
/// ego velocity, and traffic.
pub fn generate_scene(cfg: &GenConfig) -> Result<SceneState, WorldGenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut builder = SceneBuilder::new();
    match cfg.layout {
        Layout::Straight => build_straight(&mut builder, &mut rng, cfg),
        Layout::Curve => build_curve(&mut builder, &mut rng, cfg),
        Layout::Intersection => build_intersection(&mut builder, &mut rng, cfg),
        Layout::Grid => build_grid(&mut builder, &mut rng, cfg),
    }
    let (graph, junction_incoming) = builder.finish();

    let mut scene = SceneState::empty();
    scene.fov_m = cfg.fov_m;
    scene.graph = graph;
    for lane_idx in junction_incoming {
        if rng.gen::<f64>() < cfg.light_probability {
            let light = light_polyline(&scene.graph.lanes[lane_idx]);
            if rng.gen::<bool>() {
                scene.red_lights.push(light);
            } else {
                scene.green_lights.push(light);
            }
        }
    }
    scene.ego_velocity = Vec2::new(rng.gen_range(2.0..10.0), 0.0);
    let traffic_seed: u64 = rng.gen();
    place_agents(
        &mut scene,
        &mut ChaCha8Rng::seed_from_u64(traffic_seed),
        cfg.density,
    );
    debug_assert!(scene.validate().is_ok(), "{:?}", scene.validate());
    Ok(scene)
}
