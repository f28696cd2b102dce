//! Vectorized driving scenes: fixed-size lane polylines, a directed lane
//! graph, traffic-light polylines and oriented agent boxes, all expressed in
//! an ego-centered frame (ego at the origin, heading along +x, y to the left).

mod io;

pub use io::{load_scene, save_scene};

use crate::geom::{normalize_angle, Obb, Pose, Vec2};
use thiserror::Error;

/// Number of points in every lane and light polyline.
pub const POLYLINE_POINTS: usize = 20;

/// Side length of the default square field of view, meters.
pub const DEFAULT_FOV_M: f64 = 64.0;

/// Clipping a polyline against the field of view never keeps remnants
/// shorter than this.
pub const MIN_CLIPPED_LENGTH_M: f64 = 0.5;

/// Maximum lateral distance between a traffic-light polyline and the lane
/// centerline it annotates.
pub const LIGHT_LANE_TOLERANCE_M: f64 = 0.5;

/// Full extent of the ego vehicle: length along heading, width across it.
pub const EGO_EXTENT: (f64, f64) = (4.6, 1.9);

/// Slack used when testing FOV containment, to absorb serialization rounding.
const FOV_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("schema: {0}")]
    Schema(String),
    #[error("{field}: {message}")]
    Invariant { field: String, message: String },
}

impl SceneError {
    pub(crate) fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        SceneError::Invariant {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// A lane or light centerline with exactly [`POLYLINE_POINTS`] points,
/// ordered along the driving direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: [Vec2; POLYLINE_POINTS],
}

impl Polyline {
    pub fn new(points: &[Vec2]) -> Result<Self, SceneError> {
        if points.len() != POLYLINE_POINTS {
            return Err(SceneError::invariant(
                "points",
                format!("polyline length != {POLYLINE_POINTS} (got {})", points.len()),
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(SceneError::invariant("points", "non-finite coordinate"));
        }
        let mut fixed = [Vec2::ZERO; POLYLINE_POINTS];
        fixed.copy_from_slice(points);
        let line = Polyline { points: fixed };
        if line.arc_length() <= 0.0 {
            return Err(SceneError::invariant("points", "zero arc length"));
        }
        Ok(line)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        self.points[POLYLINE_POINTS - 1]
    }

    pub fn arc_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].distance(w[1]))
            .sum()
    }

    /// Cumulative arc length at each point; starts at 0, ends at arc_length().
    pub fn cumulative_lengths(&self) -> [f64; POLYLINE_POINTS] {
        let mut cum = [0.0; POLYLINE_POINTS];
        for i in 1..POLYLINE_POINTS {
            cum[i] = cum[i - 1] + self.points[i - 1].distance(self.points[i]);
        }
        cum
    }

    /// Point at arc offset `s`, clamped to [0, arc_length()].
    pub fn point_at_arc(&self, s: f64) -> Vec2 {
        let cum = self.cumulative_lengths();
        let total = cum[POLYLINE_POINTS - 1];
        let s = s.clamp(0.0, total);
        for i in 1..POLYLINE_POINTS {
            if s <= cum[i] || i == POLYLINE_POINTS - 1 {
                let seg = cum[i] - cum[i - 1];
                if seg <= 1e-12 {
                    continue;
                }
                let t = (s - cum[i - 1]) / seg;
                return self.points[i - 1] + (self.points[i] - self.points[i - 1]) * t;
            }
        }
        self.end()
    }

    /// Heading of the segment containing arc offset `s`.
    pub fn heading_at_arc(&self, s: f64) -> f64 {
        let cum = self.cumulative_lengths();
        let total = cum[POLYLINE_POINTS - 1];
        let s = s.clamp(0.0, total);
        let mut heading = self.start_heading();
        for i in 1..POLYLINE_POINTS {
            let seg = cum[i] - cum[i - 1];
            if seg <= 1e-12 {
                continue;
            }
            heading = (self.points[i] - self.points[i - 1]).heading();
            if s <= cum[i] {
                break;
            }
        }
        heading
    }

    /// Heading of the first non-degenerate segment.
    pub fn start_heading(&self) -> f64 {
        for w in self.points.windows(2) {
            if w[0].distance(w[1]) > 1e-12 {
                return (w[1] - w[0]).heading();
            }
        }
        0.0
    }

    /// Heading of the last non-degenerate segment.
    pub fn end_heading(&self) -> f64 {
        for w in self.points.windows(2).rev() {
            if w[0].distance(w[1]) > 1e-12 {
                return (w[1] - w[0]).heading();
            }
        }
        0.0
    }

    /// Signed heading change accumulated from start to end, unwrapped so
    /// that rotations beyond half a turn are not aliased.
    pub fn total_heading_change(&self) -> f64 {
        let mut headings = Vec::new();
        for w in self.points.windows(2) {
            if w[0].distance(w[1]) > 1e-12 {
                headings.push((w[1] - w[0]).heading());
            }
        }
        let mut total = 0.0;
        for w in headings.windows(2) {
            total += normalize_angle(w[1] - w[0]);
        }
        total
    }

    /// Nearest point on the polyline: returns (arc offset, distance).
    pub fn project(&self, p: Vec2) -> (f64, f64) {
        let cum = self.cumulative_lengths();
        let mut best = (0.0, f64::INFINITY);
        for i in 1..POLYLINE_POINTS {
            let (t, q) = crate::geom::project_on_segment(p, self.points[i - 1], self.points[i]);
            let d = p.distance(q);
            if d < best.1 {
                best = (cum[i - 1] + t * (cum[i] - cum[i - 1]), d);
            }
        }
        best
    }

    /// Minimum distance from `p` to the polyline.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.project(p).1
    }

    pub fn transformed_into(&self, frame: &Pose) -> Polyline {
        let mut points = self.points;
        for p in &mut points {
            *p = frame.to_local_point(*p);
        }
        Polyline { points }
    }

    /// Sub-polyline between arc offsets, resampled to the fixed point count.
    /// Points lie exactly on the original piecewise-linear path.
    pub fn slice(&self, from_arc: f64, to_arc: f64) -> Result<Polyline, SceneError> {
        let total = self.arc_length();
        let from = from_arc.clamp(0.0, total);
        let to = to_arc.clamp(0.0, total);
        let pts: Vec<Vec2> = (0..POLYLINE_POINTS)
            .map(|i| {
                let t = i as f64 / (POLYLINE_POINTS - 1) as f64;
                self.point_at_arc(from + (to - from) * t)
            })
            .collect();
        Polyline::new(&pts)
    }
}

/// Boolean directed adjacency over `n` lanes; `get(i, j)` means lane `j`
/// directly succeeds lane `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    n: usize,
    bits: Vec<bool>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Adjacency {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    /// Sets an edge; self-edges are ignored to keep the matrix irreflexive.
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        if i == j {
            return;
        }
        self.bits[i * self.n + j] = value;
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }

    pub fn predecessors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.get(i, j))
    }

    pub fn from_successor_lists(lists: &[Vec<usize>]) -> Result<Self, SceneError> {
        let n = lists.len();
        let mut adj = Adjacency::new(n);
        for (i, succ) in lists.iter().enumerate() {
            for &j in succ {
                if j >= n {
                    return Err(SceneError::invariant(
                        format!("lanes[{i}].successors"),
                        format!("successor index {j} out of range (n = {n})"),
                    ));
                }
                if j == i {
                    return Err(SceneError::invariant(
                        format!("lanes[{i}].successors"),
                        "self-successor not allowed",
                    ));
                }
                adj.set(i, j, true);
            }
        }
        Ok(adj)
    }

    pub fn to_successor_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| self.successors(i).collect()).collect()
    }
}

/// Lane centerlines plus their directed connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneGraph {
    pub lanes: Vec<Polyline>,
    pub adjacency: Adjacency,
}

impl LaneGraph {
    pub fn new(lanes: Vec<Polyline>, adjacency: Adjacency) -> Self {
        LaneGraph { lanes, adjacency }
    }

    pub fn empty() -> Self {
        LaneGraph {
            lanes: Vec::new(),
            adjacency: Adjacency::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    /// Total arc length of all lanes.
    pub fn total_length(&self) -> f64 {
        self.lanes.iter().map(|l| l.arc_length()).sum()
    }

    /// Minimum distance from `p` to any lane centerline.
    pub fn distance_to_lanes(&self, p: Vec2) -> f64 {
        self.lanes
            .iter()
            .map(|l| l.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Pedestrian,
    Vehicle,
    Static,
}

impl AgentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::Pedestrian => "pedestrian",
            AgentKind::Vehicle => "vehicle",
            AgentKind::Static => "static",
        }
    }

    pub fn parse(s: &str) -> Option<AgentKind> {
        match s {
            "pedestrian" => Some(AgentKind::Pedestrian),
            "vehicle" => Some(AgentKind::Vehicle),
            "static" => Some(AgentKind::Static),
            _ => None,
        }
    }

    pub fn is_dynamic(&self) -> bool {
        !matches!(self, AgentKind::Static)
    }
}

/// An agent as an oriented box; static objects carry no speed.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBox {
    pub kind: AgentKind,
    pub center: Vec2,
    pub heading: f64,
    /// Full box size: length along heading, width across it, meters.
    pub extent: (f64, f64),
    pub speed: Option<f64>,
}

impl AgentBox {
    pub fn obb(&self) -> Obb {
        Obb::new(self.center, self.heading, self.extent.0, self.extent.1)
    }

    /// Velocity vector implied by speed and heading; zero for static agents.
    pub fn velocity(&self) -> Vec2 {
        match self.speed {
            Some(s) => Vec2::from_heading(self.heading) * s,
            None => Vec2::ZERO,
        }
    }
}

/// A complete ego-centered scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneState {
    /// Side length of the square field of view, meters.
    pub fov_m: f64,
    pub city: Option<String>,
    pub graph: LaneGraph,
    pub red_lights: Vec<Polyline>,
    pub green_lights: Vec<Polyline>,
    pub agents: Vec<AgentBox>,
    /// Ego velocity vector in the scene frame (the ego sits at the origin).
    pub ego_velocity: Vec2,
}

impl SceneState {
    /// An empty scene with the default field of view.
    pub fn empty() -> Self {
        SceneState {
            fov_m: DEFAULT_FOV_M,
            city: None,
            graph: LaneGraph::empty(),
            red_lights: Vec::new(),
            green_lights: Vec::new(),
            agents: Vec::new(),
            ego_velocity: Vec2::ZERO,
        }
    }

    /// Checks every scene invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.fov_m.is_finite() && self.fov_m > 0.0) {
            return Err(SceneError::invariant("fov_m", "must be finite and positive"));
        }
        let half = self.fov_m / 2.0 + FOV_EPS;
        let inside = |p: Vec2| p.x.abs() <= half && p.y.abs() <= half;

        if self.graph.adjacency.len() != self.graph.lanes.len() {
            return Err(SceneError::invariant(
                "lanes",
                format!(
                    "adjacency size {} != lane count {}",
                    self.graph.adjacency.len(),
                    self.graph.lanes.len()
                ),
            ));
        }
        for (i, lane) in self.graph.lanes.iter().enumerate() {
            if let Some(p) = lane.points().iter().find(|p| !inside(**p)) {
                return Err(SceneError::invariant(
                    format!("lanes[{i}].points"),
                    format!("point ({:.3}, {:.3}) outside the field of view", p.x, p.y),
                ));
            }
        }
        for i in 0..self.graph.lanes.len() {
            for j in self.graph.adjacency.successors(i) {
                let gap = self.graph.lanes[i].end().distance(self.graph.lanes[j].start());
                if gap > crate::lanegraph::CONNECTION_DISTANCE_M + FOV_EPS {
                    return Err(SceneError::invariant(
                        format!("lanes[{i}].successors"),
                        format!("successor {j} is {gap:.3} m away (> connection tolerance)"),
                    ));
                }
            }
        }
        for (field, lights) in [("red_lights", &self.red_lights), ("green_lights", &self.green_lights)] {
            for (i, light) in lights.iter().enumerate() {
                if let Some(p) = light.points().iter().find(|p| !inside(**p)) {
                    return Err(SceneError::invariant(
                        format!("{field}[{i}]"),
                        format!("point ({:.3}, {:.3}) outside the field of view", p.x, p.y),
                    ));
                }
                let worst = light
                    .points()
                    .iter()
                    .map(|&p| self.graph.distance_to_lanes(p))
                    .fold(0.0_f64, f64::max);
                if worst > LIGHT_LANE_TOLERANCE_M + FOV_EPS {
                    return Err(SceneError::invariant(
                        format!("{field}[{i}]"),
                        format!("polyline strays {worst:.3} m from every lane centerline"),
                    ));
                }
            }
        }
        for (i, agent) in self.agents.iter().enumerate() {
            if !agent.center.is_finite() || !agent.heading.is_finite() {
                return Err(SceneError::invariant(
                    format!("agents[{i}]"),
                    "non-finite center or heading",
                ));
            }
            if !inside(agent.center) {
                return Err(SceneError::invariant(
                    format!("agents[{i}].center"),
                    "outside the field of view",
                ));
            }
            if !(agent.extent.0 > 0.0 && agent.extent.1 > 0.0) {
                return Err(SceneError::invariant(
                    format!("agents[{i}].extent"),
                    "extent components must be positive",
                ));
            }
            match (agent.kind, agent.speed) {
                (AgentKind::Static, Some(_)) => {
                    return Err(SceneError::invariant(
                        format!("agents[{i}].speed"),
                        "static agents carry no speed",
                    ));
                }
                (k, None) if k.is_dynamic() => {
                    return Err(SceneError::invariant(
                        format!("agents[{i}].speed"),
                        "dynamic agents require a speed",
                    ));
                }
                (_, Some(s)) if !(s.is_finite() && s >= 0.0) => {
                    return Err(SceneError::invariant(
                        format!("agents[{i}].speed"),
                        "speed must be finite and non-negative",
                    ));
                }
                _ => {}
            }
        }
        if !self.ego_velocity.is_finite() {
            return Err(SceneError::invariant("ego_velocity", "non-finite"));
        }
        Ok(())
    }
}

/// Re-expresses a scene in the frame given by `frame` (a pose in the scene's
/// current frame). Geometry is rigidly transformed, clipped against the
/// square field of view, and clipped polylines are resampled back to the
/// fixed point count. Remnants shorter than [`MIN_CLIPPED_LENGTH_M`] and
/// agents whose centers leave the view are dropped. Adjacency survives for
/// lane pairs whose endpoints still meet within the connection tolerance.
pub fn transform_scene(scene: &SceneState, frame: &Pose) -> SceneState {
    let half = scene.fov_m / 2.0;

    let mut lanes: Vec<Polyline> = Vec::new();
    // Per original lane, the indices of its surviving pieces.
    let mut pieces: Vec<Vec<usize>> = vec![Vec::new(); scene.graph.lanes.len()];
    for (i, lane) in scene.graph.lanes.iter().enumerate() {
        let moved: Vec<Vec2> = lane.points().iter().map(|&p| frame.to_local_point(p)).collect();
        for piece in clip_and_resample(&moved, half) {
            pieces[i].push(lanes.len());
            lanes.push(piece);
        }
    }

    let mut adjacency = Adjacency::new(lanes.len());
    for i in 0..scene.graph.lanes.len() {
        for j in scene.graph.adjacency.successors(i) {
            for &a in &pieces[i] {
                for &b in &pieces[j] {
                    if lanes[a].end().distance(lanes[b].start())
                        <= crate::lanegraph::CONNECTION_DISTANCE_M
                    {
                        adjacency.set(a, b, true);
                    }
                }
            }
        }
    }

    let clip_lights = |lights: &[Polyline]| -> Vec<Polyline> {
        lights
            .iter()
            .flat_map(|light| {
                let moved: Vec<Vec2> =
                    light.points().iter().map(|&p| frame.to_local_point(p)).collect();
                clip_and_resample(&moved, half)
            })
            .collect()
    };

    let agents = scene
        .agents
        .iter()
        .filter_map(|agent| {
            let center = frame.to_local_point(agent.center);
            if center.x.abs() <= half && center.y.abs() <= half {
                Some(AgentBox {
                    center,
                    heading: frame.to_local_heading(agent.heading),
                    ..agent.clone()
                })
            } else {
                None
            }
        })
        .collect();

    SceneState {
        fov_m: scene.fov_m,
        city: scene.city.clone(),
        graph: LaneGraph::new(lanes, adjacency),
        red_lights: clip_lights(&scene.red_lights),
        green_lights: clip_lights(&scene.green_lights),
        agents,
        ego_velocity: frame.to_local_vector(scene.ego_velocity),
    }
}

/// Clips a point chain against the centered square of half-size `half` and
/// resamples each surviving run to the fixed point count. Runs that were not
/// clipped at all keep their original points.
fn clip_and_resample(points: &[Vec2], half: f64) -> Vec<Polyline> {
    let runs = clip_chain_to_square(points, half);
    let mut out = Vec::new();
    for run in runs {
        if chain_length(&run) < MIN_CLIPPED_LENGTH_M {
            continue;
        }
        let untouched = run.len() == points.len() && run == points;
        let resampled = if untouched {
            run
        } else {
            match crate::raster::resample_polyline(&run, POLYLINE_POINTS) {
                Ok(r) => r,
                Err(_) => continue,
            }
        };
        if let Ok(line) = Polyline::new(&resampled) {
            out.push(line);
        }
    }
    out
}

pub(crate) fn chain_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Splits a point chain into maximal runs inside the centered square,
/// inserting exact boundary intersection points where segments cross it.
fn clip_chain_to_square(points: &[Vec2], half: f64) -> Vec<Vec<Vec2>> {
    let mut runs: Vec<Vec<Vec2>> = Vec::new();
    let mut current: Vec<Vec2> = Vec::new();
    let push_point = |run: &mut Vec<Vec2>, p: Vec2| {
        if run.last().map_or(true, |last| last.distance(p) > 1e-12) {
            run.push(p);
        }
    };

    for w in points.windows(2) {
        let (p, q) = (w[0], w[1]);
        match clip_segment_to_square(p, q, half) {
            None => {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
            }
            Some((t0, t1)) => {
                let d = q - p;
                let entry = p + d * t0;
                let exit = p + d * t1;
                if t0 > 0.0 && !current.is_empty() {
                    // The previous segment left the square; start afresh.
                    runs.push(std::mem::take(&mut current));
                }
                if current.is_empty() {
                    push_point(&mut current, entry);
                }
                push_point(&mut current, exit);
                if t1 < 1.0 {
                    runs.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs.retain(|r| r.len() >= 2);
    runs
}

/// Liang-Barsky clip of segment p->q against the centered square; returns the
/// surviving parameter interval, or None when fully outside.
fn clip_segment_to_square(p: Vec2, q: Vec2, half: f64) -> Option<(f64, f64)> {
    let d = q - p;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (num_lo, num_hi, delta) in [
        (-half - p.x, half - p.x, d.x),
        (-half - p.y, half - p.y, d.y),
    ] {
        if delta.abs() < 1e-15 {
            if num_lo > 0.0 || num_hi < 0.0 {
                return None;
            }
            continue;
        }
        let (mut ta, mut tb) = (num_lo / delta, num_hi / delta);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_lane(from: Vec2, to: Vec2) -> Polyline {
        let pts: Vec<Vec2> = (0..POLYLINE_POINTS)
            .map(|i| {
                let t = i as f64 / (POLYLINE_POINTS - 1) as f64;
                from + (to - from) * t
            })
            .collect();
        Polyline::new(&pts).unwrap()
    }

    fn one_lane_scene() -> SceneState {
        let lane = straight_lane(Vec2::new(-32.0, 0.0), Vec2::new(32.0, 0.0));
        SceneState {
            graph: LaneGraph::new(vec![lane], Adjacency::new(1)),
            ..SceneState::empty()
        }
    }

    #[test]
    fn polyline_rejects_wrong_point_count() {
        let pts: Vec<Vec2> = (0..19).map(|i| Vec2::new(i as f64, 0.0)).collect();
        let err = Polyline::new(&pts).unwrap_err();
        assert!(err.to_string().contains("polyline length != 20"));
    }

    #[test]
    fn polyline_rejects_zero_length() {
        let pts = vec![Vec2::new(1.0, 1.0); POLYLINE_POINTS];
        assert!(Polyline::new(&pts).is_err());
    }

    #[test]
    fn polyline_arc_queries() {
        let lane = straight_lane(Vec2::new(0.0, 0.0), Vec2::new(19.0, 0.0));
        assert!((lane.arc_length() - 19.0).abs() < 1e-12);
        assert!(lane.point_at_arc(7.5).distance(Vec2::new(7.5, 0.0)) < 1e-12);
        assert!(lane.heading_at_arc(3.0).abs() < 1e-12);
        let (arc, dist) = lane.project(Vec2::new(4.0, 2.0));
        assert!((arc - 4.0).abs() < 1e-12);
        assert!((dist - 2.0).abs() < 1e-12);
    }

    #[test]
    fn adjacency_stays_irreflexive() {
        let mut adj = Adjacency::new(3);
        adj.set(1, 1, true);
        assert!(!adj.get(1, 1));
        adj.set(0, 2, true);
        assert_eq!(adj.to_successor_lists(), vec![vec![2], vec![], vec![]]);
    }

    #[test]
    fn validate_accepts_minimal_scene() {
        one_lane_scene().validate().unwrap();
    }

    #[test]
    fn validate_rejects_distant_successor() {
        let a = straight_lane(Vec2::new(-30.0, 0.0), Vec2::new(-10.0, 0.0));
        let b = straight_lane(Vec2::new(-5.0, 0.0), Vec2::new(20.0, 0.0));
        let adjacency = Adjacency::from_successor_lists(&[vec![1], vec![]]).unwrap();
        let scene = SceneState {
            graph: LaneGraph::new(vec![a, b], adjacency),
            ..SceneState::empty()
        };
        let err = scene.validate().unwrap_err();
        assert!(err.to_string().contains("lanes[0].successors"));
    }

    #[test]
    fn validate_rejects_offside_light() {
        let mut scene = one_lane_scene();
        scene.red_lights
            .push(straight_lane(Vec2::new(-5.0, 3.0), Vec2::new(5.0, 3.0)));
        let err = scene.validate().unwrap_err();
        assert!(err.to_string().contains("red_lights[0]"));
    }

    #[test]
    fn validate_rejects_static_agent_with_speed() {
        let mut scene = one_lane_scene();
        scene.agents.push(AgentBox {
            kind: AgentKind::Static,
            center: Vec2::new(5.0, 5.0),
            heading: 0.0,
            extent: (1.0, 1.0),
            speed: Some(1.0),
        });
        let err = scene.validate().unwrap_err();
        assert!(err.to_string().contains("agents[0].speed"));
    }

    #[test]
    fn transform_identity_is_exact() {
        let scene = one_lane_scene();
        let out = transform_scene(&scene, &Pose::IDENTITY);
        assert_eq!(out, scene);
    }

    #[test]
    fn transform_round_trip_preserves_interior_geometry() {
        let lane = straight_lane(Vec2::new(-10.0, -4.0), Vec2::new(12.0, 6.0));
        let scene = SceneState {
            graph: LaneGraph::new(vec![lane], Adjacency::new(1)),
            ego_velocity: Vec2::new(3.0, 1.0),
            ..SceneState::empty()
        };
        let pose = Pose::new(Vec2::new(4.0, -2.0), 0.6);
        let there = transform_scene(&scene, &pose);
        let back = transform_scene(&there, &pose.inverse());
        assert_eq!(back.graph.lanes.len(), 1);
        for (p, q) in back.graph.lanes[0]
            .points()
            .iter()
            .zip(scene.graph.lanes[0].points())
        {
            assert!(p.distance(*q) < 1e-9);
        }
        assert!(back.ego_velocity.distance(scene.ego_velocity) < 1e-9);
    }

    #[test]
    fn transform_clips_lane_at_fov_boundary() {
        // A 64 m lane shifted by half the FOV keeps exactly half its length.
        let scene = one_lane_scene();
        let out = transform_scene(&scene, &Pose::new(Vec2::new(32.0, 0.0), 0.0));
        assert_eq!(out.graph.lanes.len(), 1);
        let lane = &out.graph.lanes[0];
        assert!((lane.arc_length() - 32.0).abs() < 1e-9);
        assert!(lane.start().distance(Vec2::new(-32.0, 0.0)) < 1e-9);
        assert!(lane.end().distance(Vec2::new(0.0, 0.0)) < 1e-9);
        assert_eq!(lane.points().len(), POLYLINE_POINTS);
    }

    #[test]
    fn transform_drops_short_remnants() {
        // Shift so only 0.3 m of the lane stays in view.
        let scene = one_lane_scene();
        let out = transform_scene(&scene, &Pose::new(Vec2::new(-63.7, 0.0), 0.0));
        assert!(out.graph.lanes.is_empty());
    }

    #[test]
    fn transform_drops_outside_agents_and_keeps_inside() {
        let mut scene = one_lane_scene();
        scene.agents.push(AgentBox {
            kind: AgentKind::Vehicle,
            center: Vec2::new(20.0, 0.0),
            heading: 0.0,
            extent: (4.0, 2.0),
            speed: Some(5.0),
        });
        let out = transform_scene(&scene, &Pose::new(Vec2::new(-20.0, 0.0), 0.0));
        // Agent lands at x = 40, outside the 32 m half-width.
        assert!(out.agents.is_empty());
        let out = transform_scene(&scene, &Pose::new(Vec2::new(10.0, 0.0), 0.0));
        assert_eq!(out.agents.len(), 1);
        assert!(out.agents[0].center.distance(Vec2::new(10.0, 0.0)) < 1e-12);
    }

    #[test]
    fn transform_preserves_adjacency_for_surviving_pairs() {
        let a = straight_lane(Vec2::new(-32.0, 0.0), Vec2::new(0.0, 0.0));
        let b = straight_lane(Vec2::new(0.0, 0.0), Vec2::new(32.0, 0.0));
        let adjacency = Adjacency::from_successor_lists(&[vec![1], vec![]]).unwrap();
        let scene = SceneState {
            graph: LaneGraph::new(vec![a, b], adjacency),
            ..SceneState::empty()
        };
        let out = transform_scene(&scene, &Pose::new(Vec2::new(5.0, 0.0), 0.0));
        assert_eq!(out.graph.lanes.len(), 2);
        assert!(out.graph.adjacency.get(0, 1));
        // Shift far enough that lane b is clipped at its start: the pair
        // separates and the edge must go away together with the geometry.
        let out = transform_scene(&scene, &Pose::new(Vec2::new(42.0, 0.0), 0.0));
        assert_eq!(out.graph.lanes.len(), 1);
    }

    #[test]
    fn clip_handles_reentrant_chains() {
        // A V-shaped chain that leaves through the top and comes back.
        let pts = [
            Vec2::new(-10.0, 20.0),
            Vec2::new(-5.0, 40.0),
            Vec2::new(5.0, 40.0),
            Vec2::new(10.0, 20.0),
        ];
        let runs = clip_chain_to_square(&pts, 32.0);
        assert_eq!(runs.len(), 2);
        assert!(runs[0][0].distance(Vec2::new(-10.0, 20.0)) < 1e-12);
        assert!((runs[0].last().unwrap().y - 32.0).abs() < 1e-12);
        assert!((runs[1][0].y - 32.0).abs() < 1e-12);
        assert!(runs[1].last().unwrap().distance(Vec2::new(10.0, 20.0)) < 1e-12);
    }
}
