//! Planner interface, a centerline pure-pursuit + IDM baseline, failure
//! adjudication over recorded traces, and the planner-failure-rate
//! benchmark across task, length, and difficulty settings.

mod suite;

pub use suite::{
    run_benchmark, BenchConfig, BenchRow, BenchSetting, BenchTask, BenchmarkTable,
};

use crate::geom::{obb_intersects, Obb, Pose, Vec2};
use crate::lanegraph::{count_turns, Route, RoutePath};
use crate::scene::{LaneGraph, SceneState, EGO_EXTENT};
use crate::sim::{
    idm_acceleration, init_simulation, step, EgoAction, EgoState, IdmParams, SimAgent, SimConfig,
    SimError, Trace,
};

/// Progress fraction below which a scenario fails.
const MIN_PROGRESS_FRACTION: f64 = 0.2;

/// Cumulative against-route motion beyond which a scenario fails, meters.
const WRONG_DIRECTION_LIMIT_M: f64 = 6.0;

/// Lateral acceleration budget of the baseline's curvature speed governor.
const LAT_ACCEL_MAX: f64 = 2.0;

/// How far ahead the governor samples route curvature.
const GOVERNOR_LOOKAHEAD_M: f64 = 30.0;

/// Slowest speed the governor will demand in tight turns.
const GOVERNOR_FLOOR_MPS: f64 = 2.0;

/// What a planner sees each step: the ego, only the currently active
/// agents, the lights with their current colors, and the route geometry.
pub struct PlannerInput<'a> {
    pub clock: f64,
    pub ego: &'a EgoState,
    pub agents: Vec<&'a SimAgent>,
    /// (host lane, stop-line arc, currently red).
    pub lights: Vec<(usize, f64, bool)>,
    pub route: &'a Route,
    pub route_path: &'a RoutePath,
    pub graph: &'a LaneGraph,
    pub cfg: &'a SimConfig,
}

pub trait Planner {
    fn plan(&mut self, input: &PlannerInput) -> EgoAction;
}

/// The do-nothing policy: holds the brake so the ego stays put.
pub struct IdlePlanner;

impl Planner for IdlePlanner {
    fn plan(&mut self, input: &PlannerInput) -> EgoAction {
        EgoAction {
            acceleration: -input.cfg.ego.max_decel,
            curvature: 0.0,
        }
    }
}

/// Arc position of `(lane, arc)` along the route, when the lane is on it.
fn route_offset(route: &Route, graph: &LaneGraph, lane: usize, arc: f64) -> Option<f64> {
    let mut cum = 0.0;
    for (k, &l) in route.lanes.iter().enumerate() {
        let from = if k == 0 { route.entry_offset } else { 0.0 };
        let to = if k == route.lanes.len() - 1 {
            route.exit_offset
        } else {
            graph.lanes[l].arc_length()
        };
        if l == lane {
            if arc >= from - 1e-9 && arc <= to + 1e-9 {
                return Some(cum + (arc - from));
            }
            return None;
        }
        cum += to - from;
    }
    None
}

/// Centerline follower: pure-pursuit steering toward a speed-scaled
/// lookahead point, IDM longitudinal control against the nearest on-route
/// agent, red stop line, or the route's end, with a curvature speed
/// governor for turns.
pub struct BaselinePlanner;

impl Planner for BaselinePlanner {
    fn plan(&mut self, input: &PlannerInput) -> EgoAction {
        let ego = input.ego;
        let path = input.route_path;
        let len = path.length();
        let (s_ego, _) = path.project(ego.pose.translation);

        let lookahead = ego.speed.max(5.0);
        let target = path.point_at((s_ego + lookahead).min(len));
        let local = ego.pose.to_local_point(target);
        let d2 = local.norm_squared();
        let curvature = if d2 > 1e-6 { 2.0 * local.y / d2 } else { 0.0 };

        let mut desired = input.cfg.idm.desired_speed;
        let mut s = s_ego;
        while s <= (s_ego + GOVERNOR_LOOKAHEAD_M).min(len) {
            let k = path.curvature_at(s).abs();
            if k > 1e-6 {
                desired = desired.min((LAT_ACCEL_MAX / k).sqrt());
            }
            s += 5.0;
        }
        let desired = desired.max(GOVERNOR_FLOOR_MPS);

        // Virtual leader resting the ego's center exactly on the route end.
        let half_ego = EGO_EXTENT.0 / 2.0;
        let mut best_gap = (len - s_ego) + input.cfg.idm.min_gap;
        let mut leader_speed = 0.0;
        for agent in &input.agents {
            let (s, lateral) = path.project(agent.body.center);
            if lateral > input.cfg.lane_width / 2.0 || s <= s_ego + 1e-6 {
                continue;
            }
            let gap = s - s_ego - half_ego - agent.body.extent.0 / 2.0;
            if gap < best_gap {
                let tangent = path.tangent_at(s);
                best_gap = gap;
                leader_speed = (Vec2::from_heading(agent.body.heading) * agent.speed)
                    .dot(tangent)
                    .max(0.0);
            }
        }
        for &(lane, stop_arc, red) in &input.lights {
            if !red {
                continue;
            }
            let Some(path_s) = route_offset(input.route, input.graph, lane, stop_arc) else {
                continue;
            };
            if path_s <= s_ego + 1e-6 {
                continue;
            }
            let gap = path_s - s_ego - half_ego;
            if gap < best_gap {
                best_gap = gap;
                leader_speed = 0.0;
            }
        }

        let params = IdmParams {
            desired_speed: desired,
            ..input.cfg.idm.clone()
        };
        let acceleration = idm_acceleration(ego.speed, leader_speed, best_gap.max(0.01), &params);
        EgoAction {
            acceleration,
            curvature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureCause {
    None,
    LowProgress,
    WrongDirection,
    OffRoad,
    AtFaultCollision,
}

impl FailureCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureCause::None => "none",
            FailureCause::LowProgress => "low_progress",
            FailureCause::WrongDirection => "wrong_direction",
            FailureCause::OffRoad => "off_road",
            FailureCause::AtFaultCollision => "at_fault_collision",
        }
    }

    /// Tie-break order when two causes first occur on the same step.
    fn severity(&self) -> u8 {
        match self {
            FailureCause::AtFaultCollision => 0,
            FailureCause::OffRoad => 1,
            FailureCause::WrongDirection => 2,
            FailureCause::LowProgress => 3,
            FailureCause::None => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureReport {
    pub failed: bool,
    pub cause: FailureCause,
    /// Monotone route completion fraction in [0, 1].
    pub progress: f64,
    /// Total motion against the route direction, meters.
    pub wrong_direction_m: f64,
    pub turns: usize,
    pub agents: usize,
}

/// Judges a recorded trace against the four failure criteria; a pure
/// function of the trace and the static scenario data, so re-adjudicating a
/// stored trace reproduces the report exactly. The earliest cause wins.
pub fn adjudicate(
    trace: &Trace,
    scene: &SceneState,
    route: &Route,
    cfg: &SimConfig,
) -> FailureReport {
    let path = RoutePath::new(route, &scene.graph);
    let len = path.length().max(1e-9);
    let off_road_limit = cfg.lane_width / 2.0 + 0.5;

    let mut blocks: Vec<&[crate::sim::TraceRow]> = Vec::new();
    let mut start = 0;
    for (i, row) in trace.rows.iter().enumerate() {
        if row.entity_id == 0 && i > start {
            blocks.push(&trace.rows[start..i]);
            start = i;
        }
    }
    if start < trace.rows.len() {
        blocks.push(&trace.rows[start..]);
    }

    let mut candidates: Vec<(f64, FailureCause)> = Vec::new();
    let mut max_s = 0.0_f64;
    let mut wrong = 0.0_f64;
    let mut wrong_flagged = false;
    let mut off_road_flagged = false;
    let mut collision_flagged = false;
    let mut prev_pos: Option<Vec2> = None;

    for block in &blocks {
        let ego = &block[0];
        let pos = Vec2::new(ego.x, ego.y);
        let (s, route_lateral) = path.project(pos);
        max_s = max_s.max(s);

        if let Some(prev) = prev_pos {
            let along = (pos - prev).dot(path.tangent_at(s));
            if along < 0.0 {
                wrong -= along;
            }
            if !wrong_flagged && wrong > WRONG_DIRECTION_LIMIT_M {
                wrong_flagged = true;
                candidates.push((ego.t, FailureCause::WrongDirection));
            }
        }
        prev_pos = Some(pos);

        if !off_road_flagged
            && !scene.graph.is_empty()
            && scene.graph.distance_to_lanes(pos) > off_road_limit
        {
            off_road_flagged = true;
            candidates.push((ego.t, FailureCause::OffRoad));
        }

        if !collision_flagged {
            let ego_obb = Obb::new(pos, ego.heading, EGO_EXTENT.0, EGO_EXTENT.1);
            let ego_pose = Pose::new(pos, ego.heading);
            for row in &block[1..] {
                let extent = scene.agents[row.entity_id - 1].extent;
                let other = Obb::new(Vec2::new(row.x, row.y), row.heading, extent.0, extent.1);
                if !obb_intersects(&ego_obb, &other) {
                    continue;
                }
                let contact = other.closest_point(pos);
                let front = ego_pose.to_local_point(contact).x >= 0.0;
                let moving = ego.speed > 0.1;
                let off_route = route_lateral > off_road_limit;
                if (moving && front) || off_route {
                    collision_flagged = true;
                    candidates.push((ego.t, FailureCause::AtFaultCollision));
                    break;
                }
            }
        }
    }

    let progress = (max_s / len).clamp(0.0, 1.0);
    if progress < MIN_PROGRESS_FRACTION {
        let t_end = trace.rows.last().map_or(0.0, |r| r.t);
        candidates.push((t_end, FailureCause::LowProgress));
    }

    let cause = candidates
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.severity().cmp(&b.1.severity())))
        .map(|(_, c)| c)
        .unwrap_or(FailureCause::None);

    FailureReport {
        failed: cause != FailureCause::None,
        cause,
        progress,
        wrong_direction_m: wrong,
        turns: count_turns(route, &scene.graph),
        agents: scene.agents.len(),
    }
}

#[derive(Debug)]
pub struct ScenarioResult {
    pub trace: Trace,
    pub report: FailureReport,
}

/// Steps the simulator under `planner` for the configured horizon, records
/// the trace, and adjudicates it.
pub fn run_scenario(
    scene: &SceneState,
    route: &Route,
    planner: &mut dyn Planner,
    cfg: &SimConfig,
) -> Result<ScenarioResult, SimError> {
    let mut state = init_simulation(scene, route.clone(), cfg)?;
    let route_path = RoutePath::new(route, &scene.graph);
    let mut trace = Trace::new();
    trace.record(&state);
    let steps = (cfg.horizon / cfg.dt).round() as u64;
    for _ in 0..steps {
        let action = {
            let input = PlannerInput {
                clock: state.clock,
                ego: &state.ego,
                agents: state.agents.iter().filter(|a| a.active).collect(),
                lights: state
                    .lights
                    .iter()
                    .map(|l| (l.lane, l.stop_arc, l.is_red(state.clock, cfg.light_period)))
                    .collect(),
                route: &state.route,
                route_path: &route_path,
                graph: &state.graph,
                cfg,
            };
            planner.plan(&input)
        };
        step(&mut state, action, cfg);
        trace.record(&state);
    }
    trace.events = state.events.clone();
    let report = adjudicate(&trace, scene, route, cfg);
    Ok(ScenarioResult { trace, report })
}
