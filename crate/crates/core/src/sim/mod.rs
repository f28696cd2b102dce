//! Closed-loop reactive simulation: IDM vehicles bound to lane centerlines,
//! constant-velocity pedestrians, traffic lights on a fixed cycle, a
//! simulation radius that freezes distant agents, a kinematic unicycle ego,
//! and per-step collision / off-road event detection.

mod trace;

pub use trace::{Trace, TraceRow};

use crate::geom::{heading_difference, normalize_angle, obb_intersects, Obb, Pose, Vec2};
use crate::lanegraph::Route;
use crate::scene::{AgentBox, AgentKind, LaneGraph, SceneState, EGO_EXTENT};
use thiserror::Error;

/// Widest lateral offset at which a vehicle can still bind to a lane.
const PROJECT_MAX_LATERAL_M: f64 = 5.0;

/// Largest heading mismatch at which a vehicle can still bind to a lane.
const PROJECT_MAX_HEADING_RAD: f64 = 60.0 * std::f64::consts::PI / 180.0;

/// Exchange rate between heading error and lateral error when scoring
/// candidate lanes.
const HEADING_WEIGHT_M_PER_RAD: f64 = 2.0;

/// How far ahead a vehicle scans its lane chain for leaders and stop lines.
const LEADER_LOOKAHEAD_M: f64 = 100.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid route: {0}")]
    InvalidRoute(String),
    #[error("no lane within {PROJECT_MAX_LATERAL_M} m and {PROJECT_MAX_HEADING_RAD} rad")]
    Unprojectable,
}

/// Intelligent Driver Model parameters.
#[derive(Debug, Clone)]
pub struct IdmParams {
    pub desired_speed: f64,
    pub max_accel: f64,
    pub comfort_decel: f64,
    pub min_gap: f64,
    pub headway: f64,
    pub exponent: f64,
    /// Hard deceleration bound the commanded braking never exceeds.
    pub hard_decel: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        IdmParams {
            desired_speed: 12.0,
            max_accel: 1.5,
            comfort_decel: 2.0,
            min_gap: 2.0,
            headway: 1.5,
            exponent: 4.0,
            hard_decel: 4.0,
        }
    }
}

/// Kinematic bounds on the ego vehicle.
#[derive(Debug, Clone)]
pub struct EgoLimits {
    pub max_accel: f64,
    pub max_decel: f64,
    pub max_curvature: f64,
    pub max_curvature_rate: f64,
    pub max_speed: f64,
}

impl Default for EgoLimits {
    fn default() -> Self {
        EgoLimits {
            max_accel: 3.0,
            max_decel: 4.0,
            max_curvature: 0.2,
            max_curvature_rate: 2.0,
            max_speed: 15.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Simulation radius: agents farther than this from the ego freeze.
    pub radius: f64,
    pub light_period: f64,
    pub idm: IdmParams,
    pub lane_width: f64,
    pub ego: EgoLimits,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            horizon: 30.0,
            radius: 64.0,
            light_period: 15.0,
            idm: IdmParams::default(),
            lane_width: 3.7,
            ego: EgoLimits::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig("dt must be positive".into()));
        }
        if !(self.radius > 0.0) {
            return Err(SimError::InvalidConfig("radius must be positive".into()));
        }
        if !(self.light_period > 0.0) {
            return Err(SimError::InvalidConfig("light period must be positive".into()));
        }
        if !(self.horizon >= 0.0) {
            return Err(SimError::InvalidConfig("horizon must be non-negative".into()));
        }
        let p = &self.idm;
        for (name, value) in [
            ("desired_speed", p.desired_speed),
            ("max_accel", p.max_accel),
            ("comfort_decel", p.comfort_decel),
            ("min_gap", p.min_gap),
            ("headway", p.headway),
            ("exponent", p.exponent),
            ("hard_decel", p.hard_decel),
        ] {
            if !(value > 0.0) {
                return Err(SimError::InvalidConfig(format!("idm.{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Planner command for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoAction {
    pub acceleration: f64,
    pub curvature: f64,
}

impl EgoAction {
    pub const COAST: EgoAction = EgoAction {
        acceleration: 0.0,
        curvature: 0.0,
    };
}

#[derive(Debug, Clone)]
pub struct EgoState {
    pub pose: Pose,
    pub speed: f64,
    pub curvature: f64,
}

/// One scene agent plus its runtime binding.
#[derive(Debug, Clone)]
pub struct SimAgent {
    pub body: AgentBox,
    /// Lane a vehicle follows; `None` marks pedestrians, statics, and
    /// vehicles that could not be projected (held passive-static).
    pub lane: Option<usize>,
    pub arc: f64,
    pub speed: f64,
    pub active: bool,
}

/// A traffic light bound to its host lane.
#[derive(Debug, Clone)]
pub struct LightState {
    pub lane: usize,
    /// Arc position of the stop line (the light polyline's start).
    pub stop_arc: f64,
    pub initially_red: bool,
}

impl LightState {
    /// All phases flip together every `period` seconds.
    pub fn is_red(&self, clock: f64, period: f64) -> bool {
        let flips = (clock / period + 1e-9).floor() as i64;
        self.initially_red ^ (flips % 2 == 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    /// The ego box intersects the given agent's box.
    Collision { t: f64, agent: usize },
    OffRoad { t: f64 },
    Warning { t: f64, message: String },
}

impl SimEvent {
    /// Structured line: event, t, payload.
    pub fn to_line(&self) -> String {
        match self {
            SimEvent::Collision { t, agent } => format!("collision,{t:.3},agent:{agent}"),
            SimEvent::OffRoad { t } => format!("off_road,{t:.3},"),
            SimEvent::Warning { t, message } => format!("warning,{t:.3},{message}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub clock: f64,
    steps: u64,
    pub graph: LaneGraph,
    pub ego: EgoState,
    pub agents: Vec<SimAgent>,
    pub lights: Vec<LightState>,
    pub route: Route,
    pub events: Vec<SimEvent>,
}

/// Longitudinal IDM acceleration. `gap` is bumper-to-bumper; pass
/// `f64::INFINITY` for a free road. The result is clamped to
/// `[-hard_decel, max_accel]`.
pub fn idm_acceleration(v: f64, v_lead: f64, gap: f64, p: &IdmParams) -> f64 {
    let free = 1.0 - (v / p.desired_speed).powf(p.exponent);
    let interaction = if gap.is_finite() {
        let dv = v - v_lead;
        let s_star =
            p.min_gap + v * p.headway + v * dv / (2.0 * (p.max_accel * p.comfort_decel).sqrt());
        (s_star / gap).powi(2)
    } else {
        0.0
    };
    (p.max_accel * (free - interaction)).clamp(-p.hard_decel, p.max_accel)
}

/// Binds an agent box to the lane minimizing lateral distance plus weighted
/// heading mismatch; fails when no lane is within 5 m and 60 degrees.
pub fn project_to_lane(body: &AgentBox, graph: &LaneGraph) -> Result<(usize, f64), SimError> {
    let mut best: Option<(f64, usize, f64)> = None;
    for (i, lane) in graph.lanes.iter().enumerate() {
        let (arc, lateral) = lane.project(body.center);
        let mismatch = heading_difference(lane.heading_at_arc(arc), body.heading).abs();
        if lateral > PROJECT_MAX_LATERAL_M || mismatch > PROJECT_MAX_HEADING_RAD {
            continue;
        }
        let score = lateral + HEADING_WEIGHT_M_PER_RAD * mismatch;
        if best.map_or(true, |(s, _, _)| score < s) {
            best = Some((score, i, arc));
        }
    }
    best.map(|(_, lane, arc)| (lane, arc)).ok_or(SimError::Unprojectable)
}

fn lowest_successor(graph: &LaneGraph, lane: usize) -> Option<usize> {
    graph.adjacency.successors(lane).next()
}

fn bind_lights(scene: &SceneState) -> Vec<LightState> {
    let mut out = Vec::new();
    if scene.graph.is_empty() {
        return out;
    }
    let reds = scene.red_lights.iter().map(|l| (l, true));
    let greens = scene.green_lights.iter().map(|l| (l, false));
    for (line, initially_red) in reds.chain(greens) {
        let host = (0..scene.graph.lanes.len())
            .min_by(|&a, &b| {
                let worst = |lane: usize| -> f64 {
                    line.points()
                        .iter()
                        .map(|&p| scene.graph.lanes[lane].distance_to(p))
                        .fold(0.0, f64::max)
                };
                worst(a).total_cmp(&worst(b))
            })
            .expect("graph is nonempty");
        let (stop_arc, _) = scene.graph.lanes[host].project(line.start());
        out.push(LightState {
            lane: host,
            stop_arc,
            initially_red,
        });
    }
    out
}

/// Builds the initial state: vehicles are projected onto lanes (failures
/// become passive statics with a logged warning), lights bind to their host
/// lanes with the scene's phases, and the ego sits at the origin with the
/// scene's velocity.
pub fn init_simulation(
    scene: &SceneState,
    route: Route,
    cfg: &SimConfig,
) -> Result<SimState, SimError> {
    cfg.validate()?;
    for &l in &route.lanes {
        if l >= scene.graph.lanes.len() {
            return Err(SimError::InvalidRoute(format!("lane {l} not in graph")));
        }
    }
    for w in route.lanes.windows(2) {
        if !scene.graph.adjacency.get(w[0], w[1]) {
            return Err(SimError::InvalidRoute(format!(
                "lanes {} and {} are not connected",
                w[0], w[1]
            )));
        }
    }

    let mut events = Vec::new();
    let mut agents = Vec::with_capacity(scene.agents.len());
    for (i, body) in scene.agents.iter().enumerate() {
        let speed0 = body.speed.unwrap_or(0.0);
        let (lane, arc, speed) = match body.kind {
            AgentKind::Vehicle => match project_to_lane(body, &scene.graph) {
                Ok((lane, arc)) => (Some(lane), arc, speed0),
                Err(_) => {
                    events.push(SimEvent::Warning {
                        t: 0.0,
                        message: format!("agent {i} unprojectable; held passive-static"),
                    });
                    (None, 0.0, 0.0)
                }
            },
            _ => (None, 0.0, speed0),
        };
        agents.push(SimAgent {
            active: body.center.distance(Vec2::ZERO) < cfg.radius,
            body: body.clone(),
            lane,
            arc,
            speed,
        });
    }

    Ok(SimState {
        clock: 0.0,
        steps: 0,
        graph: scene.graph.clone(),
        ego: EgoState {
            pose: Pose::IDENTITY,
            speed: scene.ego_velocity.norm(),
            curvature: 0.0,
        },
        agents,
        lights: bind_lights(scene),
        route,
        events,
    })
}

/// Nearest obstruction ahead of a vehicle on its successor chain: another
/// agent or the ego on the path, a red stop line, or the end of a chain with
/// no successor. Returns (bumper gap, leader speed along the path).
fn find_leader(state: &SimState, self_idx: usize, lane: usize, arc: f64, cfg: &SimConfig) -> (f64, f64) {
    let graph = &state.graph;
    let half_self = state.agents[self_idx].body.extent.0 / 2.0;
    let on_path = cfg.lane_width / 2.0;

    // Successor chain with each lane's path offset relative to our position.
    let mut chain: Vec<(usize, f64)> = Vec::new();
    let mut offset = -arc;
    let mut l = lane;
    let mut open_end = false;
    loop {
        chain.push((l, offset));
        offset += graph.lanes[l].arc_length();
        if offset > LEADER_LOOKAHEAD_M {
            break;
        }
        match lowest_successor(graph, l) {
            Some(next) if !chain.iter().any(|&(c, _)| c == next) => l = next,
            Some(_) => break,
            None => {
                open_end = true;
                break;
            }
        }
    }
    let total = offset;

    let mut best_gap = f64::INFINITY;
    let mut best_speed = 0.0;

    // Agents and the ego, projected onto the chain.
    let obstacles = state
        .agents
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != self_idx)
        .map(|(_, other)| {
            let speed = if other.active { other.speed } else { 0.0 };
            (other.body.center, other.body.heading, speed, other.body.extent.0 / 2.0)
        })
        .chain(std::iter::once((
            state.ego.pose.translation,
            state.ego.pose.rotation,
            state.ego.speed,
            EGO_EXTENT.0 / 2.0,
        )));
    for (center, heading, speed, half_other) in obstacles {
        for &(cl, off) in &chain {
            let (s, lateral) = graph.lanes[cl].project(center);
            if lateral > on_path {
                continue;
            }
            let path_s = off + s;
            if path_s <= 1e-6 {
                continue;
            }
            let tangent = Vec2::from_heading(graph.lanes[cl].heading_at_arc(s));
            let along = (Vec2::from_heading(heading) * speed).dot(tangent).max(0.0);
            let gap = path_s - half_self - half_other;
            if gap < best_gap {
                best_gap = gap;
                best_speed = along;
            }
            break;
        }
    }

    // Red lights on the chain act as stationary leaders at their stop line.
    for light in &state.lights {
        if !light.is_red(state.clock, cfg.light_period) {
            continue;
        }
        for &(cl, off) in &chain {
            if cl == light.lane {
                let path_s = off + light.stop_arc;
                if path_s > 1e-6 {
                    let gap = path_s - half_self;
                    if gap < best_gap {
                        best_gap = gap;
                        best_speed = 0.0;
                    }
                }
                break;
            }
        }
    }

    // A chain that ends with no successor is a stop line at the lane end.
    if open_end {
        let gap = total - half_self;
        if gap < best_gap {
            best_gap = gap;
            best_speed = 0.0;
        }
    }

    (best_gap.max(0.01), best_speed)
}

fn advance_on_lanes(graph: &LaneGraph, mut lane: usize, mut arc: f64) -> (usize, f64) {
    loop {
        let len = graph.lanes[lane].arc_length();
        if arc <= len {
            return (lane, arc);
        }
        match lowest_successor(graph, lane) {
            Some(next) => {
                arc -= len;
                lane = next;
            }
            None => return (lane, len),
        }
    }
}

/// Advances the simulation by one step: radius gating, IDM vehicle moves
/// against the pre-step snapshot, constant-velocity pedestrians, the
/// kinematic unicycle ego under `action` (clamped to the configured
/// limits), and collision / off-road events.
pub fn step(state: &mut SimState, action: EgoAction, cfg: &SimConfig) {
    let dt = cfg.dt;

    // (a) Radius gating against the current ego position.
    let ego_pos = state.ego.pose.translation;
    for agent in &mut state.agents {
        agent.active = agent.body.center.distance(ego_pos) < cfg.radius;
    }

    // (b) Vehicles plan against the snapshot, then commit together.
    let mut moves: Vec<(usize, usize, f64, f64)> = Vec::new();
    for i in 0..state.agents.len() {
        let agent = &state.agents[i];
        if !agent.active || agent.body.kind != AgentKind::Vehicle {
            continue;
        }
        let Some(lane) = agent.lane else { continue };
        let (gap, v_lead) = find_leader(state, i, lane, agent.arc, cfg);
        let accel = idm_acceleration(agent.speed, v_lead, gap, &cfg.idm);
        let speed = (agent.speed + accel * dt).max(0.0);
        let (new_lane, new_arc) = advance_on_lanes(&state.graph, lane, agent.arc + speed * dt);
        moves.push((i, new_lane, new_arc, speed));
    }
    for (i, lane, arc, speed) in moves {
        let agent = &mut state.agents[i];
        agent.lane = Some(lane);
        agent.arc = arc;
        agent.speed = speed;
        agent.body.center = state.graph.lanes[lane].point_at_arc(arc);
        agent.body.heading = state.graph.lanes[lane].heading_at_arc(arc);
    }

    // (c) Pedestrians keep constant velocity and heading.
    for agent in &mut state.agents {
        if agent.active && agent.body.kind == AgentKind::Pedestrian {
            agent.body.center =
                agent.body.center + Vec2::from_heading(agent.body.heading) * (agent.speed * dt);
        }
    }

    // (d) Light phases derive from the clock; nothing to mutate.

    // (e) Ego kinematic unicycle under the clamped action.
    let lim = &cfg.ego;
    let accel = action.acceleration.clamp(-lim.max_decel, lim.max_accel);
    let target = action.curvature.clamp(-lim.max_curvature, lim.max_curvature);
    let max_dk = lim.max_curvature_rate * dt;
    state.ego.curvature += (target - state.ego.curvature).clamp(-max_dk, max_dk);
    state.ego.speed = (state.ego.speed + accel * dt).clamp(0.0, lim.max_speed);
    let heading = normalize_angle(
        state.ego.pose.rotation + state.ego.curvature * state.ego.speed * dt,
    );
    state.ego.pose.rotation = heading;
    state.ego.pose.translation =
        state.ego.pose.translation + Vec2::from_heading(heading) * (state.ego.speed * dt);

    state.steps += 1;
    state.clock = state.steps as f64 * dt;

    // (f) Collision and off-road checks.
    let ego_obb = Obb::new(
        state.ego.pose.translation,
        state.ego.pose.rotation,
        EGO_EXTENT.0,
        EGO_EXTENT.1,
    );
    for (i, agent) in state.agents.iter().enumerate() {
        if obb_intersects(&ego_obb, &agent.body.obb()) {
            state.events.push(SimEvent::Collision {
                t: state.clock,
                agent: i,
            });
        }
    }
    if !state.graph.is_empty()
        && state.graph.distance_to_lanes(state.ego.pose.translation) > cfg.lane_width / 2.0 + 0.5
    {
        state.events.push(SimEvent::OffRoad { t: state.clock });
    }
}
