//! Lane-graph algorithms: recovering directed adjacency from geometry,
//! collapsing coincident endpoints into key points, enumerating and
//! selecting routes, and summarizing a graph with urban features.

use crate::geom::{heading_difference, Vec2};
use crate::scene::{Adjacency, LaneGraph, Polyline};
use thiserror::Error;

/// Maximum end-to-start gap for two lanes to count as connected, meters.
pub const CONNECTION_DISTANCE_M: f64 = 1.5;

/// Maximum heading difference for two lanes to count as connected.
pub const CONNECTION_ANGLE_RAD: f64 = 60.0 * std::f64::consts::PI / 180.0;

/// A traversed lane counts as a turn when its accumulated heading change
/// exceeds this bound.
pub const TURN_THRESHOLD_RAD: f64 = 45.0 * std::f64::consts::PI / 180.0;

/// Route enumeration stops after this many routes per start lane.
pub const MAX_ROUTES_PER_START: usize = 256;

/// Urban-feature path enumeration stops after this many paths.
pub const MAX_KEY_POINT_PATHS: usize = 10_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no route from start lane {0}")]
    NoRoute(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteDifficulty {
    /// Fewest turns.
    Easy,
    /// Most turns.
    Hard,
}

impl std::str::FromStr for RouteDifficulty {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(RouteDifficulty::Easy),
            "hard" => Ok(RouteDifficulty::Hard),
            other => Err(format!("unknown difficulty '{other}'")),
        }
    }
}

/// A directed path through the lane graph with arc offsets into the first
/// and last lanes.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub lanes: Vec<usize>,
    /// Arc offset on the first lane where the route begins.
    pub entry_offset: f64,
    /// Arc offset on the last lane where the route ends.
    pub exit_offset: f64,
}

impl Route {
    /// Full traversal of a lane sequence.
    pub fn full(lanes: Vec<usize>, graph: &LaneGraph) -> Route {
        let exit = lanes
            .last()
            .map(|&l| graph.lanes[l].arc_length())
            .unwrap_or(0.0);
        Route {
            lanes,
            entry_offset: 0.0,
            exit_offset: exit,
        }
    }

    pub fn length(&self, graph: &LaneGraph) -> f64 {
        match self.lanes.len() {
            0 => 0.0,
            1 => self.exit_offset - self.entry_offset,
            n => {
                let first = graph.lanes[self.lanes[0]].arc_length() - self.entry_offset;
                let middle: f64 = self.lanes[1..n - 1]
                    .iter()
                    .map(|&l| graph.lanes[l].arc_length())
                    .sum();
                first + middle + self.exit_offset
            }
        }
    }

    /// The route geometry as a single point chain.
    pub fn points(&self, graph: &LaneGraph) -> Vec<Vec2> {
        let mut out: Vec<Vec2> = Vec::new();
        for (k, &l) in self.lanes.iter().enumerate() {
            let lane = &graph.lanes[l];
            let from = if k == 0 { self.entry_offset } else { 0.0 };
            let to = if k == self.lanes.len() - 1 {
                self.exit_offset
            } else {
                lane.arc_length()
            };
            for p in extract_chain(lane, from, to) {
                if out.last().map_or(true, |last| last.distance(p) > 1e-9) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Truncates the route to at most `length` meters, dropping lanes past
    /// the cut and moving the exit offset onto the cut point.
    pub fn truncated(&self, graph: &LaneGraph, length: f64) -> Route {
        let mut remaining = length;
        let mut lanes = Vec::new();
        let mut exit = self.exit_offset;
        for (k, &l) in self.lanes.iter().enumerate() {
            let entry = if k == 0 { self.entry_offset } else { 0.0 };
            let lane_end = if k == self.lanes.len() - 1 {
                self.exit_offset
            } else {
                graph.lanes[l].arc_length()
            };
            let span = lane_end - entry;
            lanes.push(l);
            if span >= remaining {
                exit = entry + remaining;
                break;
            }
            remaining -= span;
            exit = lane_end;
        }
        Route {
            lanes,
            entry_offset: self.entry_offset,
            exit_offset: exit,
        }
    }
}

/// Points of `lane` between two arc offsets, endpoints interpolated exactly.
fn extract_chain(lane: &Polyline, from: f64, to: f64) -> Vec<Vec2> {
    let cum = lane.cumulative_lengths();
    let mut pts = vec![lane.point_at_arc(from)];
    for (i, &c) in cum.iter().enumerate() {
        if c > from + 1e-9 && c < to - 1e-9 {
            pts.push(lane.points()[i]);
        }
    }
    pts.push(lane.point_at_arc(to));
    pts
}

/// A route's geometry with cached cumulative arc lengths, supporting
/// projection and tangent queries.
#[derive(Debug, Clone)]
pub struct RoutePath {
    points: Vec<Vec2>,
    cum: Vec<f64>,
}

impl RoutePath {
    pub fn new(route: &Route, graph: &LaneGraph) -> RoutePath {
        let points = route.points(graph);
        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for w in points.windows(2) {
            cum.push(cum.last().unwrap() + w[0].distance(w[1]));
        }
        RoutePath { points, cum }
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Nearest point on the path: returns (arc offset, lateral distance).
    pub fn project(&self, p: Vec2) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for i in 1..self.points.len() {
            let (t, q) = crate::geom::project_on_segment(p, self.points[i - 1], self.points[i]);
            let d = p.distance(q);
            if d < best.1 {
                best = (self.cum[i - 1] + t * (self.cum[i] - self.cum[i - 1]), d);
            }
        }
        best
    }

    pub fn point_at(&self, arc: f64) -> Vec2 {
        let arc = arc.clamp(0.0, self.length());
        for i in 1..self.points.len() {
            if arc <= self.cum[i] || i == self.points.len() - 1 {
                let seg = self.cum[i] - self.cum[i - 1];
                if seg <= 1e-12 {
                    continue;
                }
                let t = (arc - self.cum[i - 1]) / seg;
                return self.points[i - 1] + (self.points[i] - self.points[i - 1]) * t;
            }
        }
        *self.points.last().unwrap()
    }

    /// Unit tangent of the segment containing `arc`.
    pub fn tangent_at(&self, arc: f64) -> Vec2 {
        let arc = arc.clamp(0.0, self.length());
        let mut tangent = Vec2::new(1.0, 0.0);
        for i in 1..self.points.len() {
            let seg = self.cum[i] - self.cum[i - 1];
            if seg <= 1e-12 {
                continue;
            }
            tangent = (self.points[i] - self.points[i - 1]) / seg;
            if arc <= self.cum[i] {
                break;
            }
        }
        tangent
    }

    /// Local curvature estimated from tangents just before and after `arc`.
    pub fn curvature_at(&self, arc: f64) -> f64 {
        let ds = 1.0;
        let t0 = self.tangent_at((arc - ds).max(0.0));
        let t1 = self.tangent_at((arc + ds).min(self.length()));
        let dh = crate::geom::normalize_angle(t1.heading() - t0.heading());
        dh / (2.0 * ds)
    }
}

/// Recovers the directed adjacency implied by lane geometry: lane `j`
/// succeeds lane `i` when the end of `i` sits within
/// [`CONNECTION_DISTANCE_M`] of the start of `j` and their boundary
/// headings differ by less than [`CONNECTION_ANGLE_RAD`].
pub fn recover_adjacency(lanes: &[Polyline]) -> Adjacency {
    let mut adj = Adjacency::new(lanes.len());
    for (i, a) in lanes.iter().enumerate() {
        for (j, b) in lanes.iter().enumerate() {
            if i == j {
                continue;
            }
            if a.end().distance(b.start()) <= CONNECTION_DISTANCE_M
                && heading_difference(a.end_heading(), b.start_heading()) < CONNECTION_ANGLE_RAD
            {
                adj.set(i, j, true);
            }
        }
    }
    adj
}

/// A merged endpoint node of the lane graph.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPoint {
    pub position: Vec2,
    /// Number of lane endpoints (starts plus ends) merged into this node.
    pub degree: usize,
}

/// Merges lane endpoints within the connection tolerance into nodes and
/// returns those whose total degree differs from 2, ordered by position.
pub fn key_points(graph: &LaneGraph) -> Vec<KeyPoint> {
    let (clusters, _) = endpoint_clusters(graph);
    let mut out: Vec<KeyPoint> = clusters
        .into_iter()
        .filter(|k| k.degree != 2)
        .collect();
    out.sort_by(|a, b| {
        a.position
            .x
            .total_cmp(&b.position.x)
            .then(a.position.y.total_cmp(&b.position.y))
    });
    out
}

/// Clusters all lane endpoints (single-linkage, tolerance
/// [`CONNECTION_DISTANCE_M`]); also returns, per lane, the cluster index of
/// its start and end.
fn endpoint_clusters(graph: &LaneGraph) -> (Vec<KeyPoint>, Vec<(usize, usize)>) {
    let n = graph.lanes.len();
    let mut positions = Vec::with_capacity(2 * n);
    for lane in &graph.lanes {
        positions.push(lane.start());
        positions.push(lane.end());
    }
    let mut parent: Vec<usize> = (0..positions.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if positions[i].distance(positions[j]) <= CONNECTION_DISTANCE_M {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut cluster_of_root = std::collections::HashMap::new();
    let mut clusters: Vec<(Vec2, usize)> = Vec::new();
    let mut assignment = vec![0usize; positions.len()];
    for i in 0..positions.len() {
        let root = find(&mut parent, i);
        let idx = *cluster_of_root.entry(root).or_insert_with(|| {
            clusters.push((Vec2::ZERO, 0));
            clusters.len() - 1
        });
        clusters[idx].0 += positions[i];
        clusters[idx].1 += 1;
        assignment[i] = idx;
    }
    let key_points = clusters
        .into_iter()
        .map(|(sum, count)| KeyPoint {
            position: sum / count as f64,
            degree: count,
        })
        .collect();
    let lane_nodes = (0..n).map(|i| (assignment[2 * i], assignment[2 * i + 1])).collect();
    (key_points, lane_nodes)
}

/// Enumerates maximal simple routes (no repeated lane) starting at `start`,
/// in successor-index order, capped at [`MAX_ROUTES_PER_START`].
pub fn enumerate_routes(graph: &LaneGraph, start: usize) -> Result<Vec<Route>, GraphError> {
    if start >= graph.lanes.len() {
        return Err(GraphError::NoRoute(start));
    }
    let mut routes = Vec::new();
    let mut visited = vec![false; graph.lanes.len()];
    let mut path = vec![start];
    visited[start] = true;
    dfs_routes(graph, &mut path, &mut visited, &mut routes);
    Ok(routes)
}

fn dfs_routes(
    graph: &LaneGraph,
    path: &mut Vec<usize>,
    visited: &mut Vec<bool>,
    routes: &mut Vec<Route>,
) {
    if routes.len() >= MAX_ROUTES_PER_START {
        return;
    }
    let cur = *path.last().unwrap();
    let next: Vec<usize> = graph
        .adjacency
        .successors(cur)
        .filter(|&j| !visited[j])
        .collect();
    if next.is_empty() {
        routes.push(Route::full(path.clone(), graph));
        return;
    }
    for j in next {
        if routes.len() >= MAX_ROUTES_PER_START {
            return;
        }
        visited[j] = true;
        path.push(j);
        dfs_routes(graph, path, visited, routes);
        path.pop();
        visited[j] = false;
    }
}

/// Number of traversed lanes whose accumulated heading change exceeds
/// [`TURN_THRESHOLD_RAD`].
pub fn count_turns(route: &Route, graph: &LaneGraph) -> usize {
    route
        .lanes
        .iter()
        .filter(|&&l| graph.lanes[l].total_heading_change().abs() > TURN_THRESHOLD_RAD)
        .count()
}

/// Picks the route with the most (hard) or fewest (easy) turns; ties fall to
/// the longer route, then to the lexicographically smallest lane sequence.
pub fn select_route(
    graph: &LaneGraph,
    start: usize,
    difficulty: RouteDifficulty,
) -> Result<Route, GraphError> {
    let routes = enumerate_routes(graph, start)?;
    let scored: Vec<(usize, f64, &Route)> = routes
        .iter()
        .map(|r| (count_turns(r, graph), r.length(graph), r))
        .collect();
    scored
        .into_iter()
        .reduce(|best, cand| {
            let better = match difficulty {
                RouteDifficulty::Hard => cand.0 > best.0,
                RouteDifficulty::Easy => cand.0 < best.0,
            };
            let tie = cand.0 == best.0;
            if better
                || (tie && cand.1 > best.1)
                || (tie && cand.1 == best.1 && cand.2.lanes < best.2.lanes)
            {
                cand
            } else {
                best
            }
        })
        .map(|(_, _, r)| r.clone())
        .ok_or(GraphError::NoRoute(start))
}

/// Index of the lane nearest to the scene origin.
pub fn nearest_lane_to_origin(graph: &LaneGraph) -> Option<usize> {
    (0..graph.lanes.len()).min_by(|&a, &b| {
        graph.lanes[a]
            .distance_to(Vec2::ZERO)
            .total_cmp(&graph.lanes[b].distance_to(Vec2::ZERO))
    })
}

/// Selects a route starting on the lane nearest the origin, entering at the
/// origin's arc projection onto that lane.
pub fn route_from_origin(
    graph: &LaneGraph,
    difficulty: RouteDifficulty,
) -> Result<Route, GraphError> {
    let start = nearest_lane_to_origin(graph).ok_or(GraphError::NoRoute(0))?;
    let mut route = select_route(graph, start, difficulty)?;
    let (arc, _) = graph.lanes[start].project(Vec2::ZERO);
    route.entry_offset = arc;
    if route.lanes.len() == 1 {
        route.exit_offset = route.exit_offset.max(arc);
    }
    Ok(route)
}

/// Graph-level summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct UrbanFeatures {
    /// Mean degree over key points.
    pub connectivity: f64,
    /// Number of key points.
    pub density: usize,
    /// Number of ordered key-point pairs joined by at least one maximal
    /// simple directed path.
    pub reach: usize,
    /// Mean length (m) of those maximal key-point-to-key-point paths.
    pub convenience: f64,
}

/// Computes connectivity, density, reach and convenience. Maximal simple
/// lane paths are enumerated from every lane without predecessors, capped at
/// [`MAX_KEY_POINT_PATHS`]; a path qualifies when both of its merged
/// endpoint nodes are distinct key points. Empty graphs yield all zeros.
pub fn urban_features(graph: &LaneGraph) -> UrbanFeatures {
    if graph.is_empty() {
        return UrbanFeatures {
            connectivity: 0.0,
            density: 0,
            reach: 0,
            convenience: 0.0,
        };
    }
    let (clusters, lane_nodes) = endpoint_clusters(graph);
    let is_key = |node: usize| clusters[node].degree != 2;

    let key: Vec<&KeyPoint> = clusters.iter().filter(|k| k.degree != 2).collect();
    let density = key.len();
    let connectivity = if key.is_empty() {
        0.0
    } else {
        key.iter().map(|k| k.degree as f64).sum::<f64>() / key.len() as f64
    };

    // Maximal simple paths, started from source lanes only.
    let n = graph.lanes.len();
    let sources: Vec<usize> =
        (0..n).filter(|&l| graph.adjacency.predecessors(l).next().is_none()).collect();
    let mut pairs = std::collections::HashSet::new();
    let mut lengths = Vec::new();
    let mut budget = MAX_KEY_POINT_PATHS;
    for s in sources {
        if budget == 0 {
            break;
        }
        let mut visited = vec![false; n];
        visited[s] = true;
        let mut path = vec![s];
        collect_maximal_paths(graph, &mut path, &mut visited, &mut budget, &mut |path| {
            let u = lane_nodes[path[0]].0;
            let v = lane_nodes[*path.last().unwrap()].1;
            if u != v && is_key(u) && is_key(v) {
                pairs.insert((u, v));
                lengths.push(path.iter().map(|&l| graph.lanes[l].arc_length()).sum::<f64>());
            }
        });
    }
    let convenience = if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().sum::<f64>() / lengths.len() as f64
    };
    UrbanFeatures {
        connectivity,
        density,
        reach: pairs.len(),
        convenience,
    }
}

fn collect_maximal_paths(
    graph: &LaneGraph,
    path: &mut Vec<usize>,
    visited: &mut Vec<bool>,
    budget: &mut usize,
    emit: &mut impl FnMut(&[usize]),
) {
    if *budget == 0 {
        return;
    }
    let cur = *path.last().unwrap();
    let next: Vec<usize> = graph
        .adjacency
        .successors(cur)
        .filter(|&j| !visited[j])
        .collect();
    if next.is_empty() {
        *budget -= 1;
        emit(path);
        return;
    }
    for j in next {
        if *budget == 0 {
            return;
        }
        visited[j] = true;
        path.push(j);
        collect_maximal_paths(graph, path, visited, budget, emit);
        path.pop();
        visited[j] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::POLYLINE_POINTS;

    pub(crate) fn straight(from: Vec2, to: Vec2) -> Polyline {
        let pts: Vec<Vec2> = (0..POLYLINE_POINTS)
            .map(|i| from + (to - from) * (i as f64 / (POLYLINE_POINTS - 1) as f64))
            .collect();
        Polyline::new(&pts).unwrap()
    }

    /// Arc around `center` from angle `a0` to `a1` (radians) at `radius`.
    pub(crate) fn arc(center: Vec2, radius: f64, a0: f64, a1: f64) -> Polyline {
        let pts: Vec<Vec2> = (0..POLYLINE_POINTS)
            .map(|i| {
                let t = i as f64 / (POLYLINE_POINTS - 1) as f64;
                let a = a0 + (a1 - a0) * t;
                center + Vec2::new(a.cos(), a.sin()) * radius
            })
            .collect();
        Polyline::new(&pts).unwrap()
    }

    fn graph_of(lanes: Vec<Polyline>) -> LaneGraph {
        let adjacency = recover_adjacency(&lanes);
        LaneGraph::new(lanes, adjacency)
    }

    #[test]
    fn adjacency_accepts_within_both_thresholds() {
        let a = straight(Vec2::new(-20.0, 0.0), Vec2::new(0.0, 0.0));
        // 1.0 m gap, 30 degree bend.
        let dir = Vec2::from_heading(30f64.to_radians());
        let start = Vec2::new(1.0, 0.0);
        let b = straight(start, start + dir * 15.0);
        let adj = recover_adjacency(&[a, b]);
        assert!(adj.get(0, 1));
        assert!(!adj.get(1, 0));
    }

    #[test]
    fn adjacency_rejects_gap_and_angle() {
        let a = straight(Vec2::new(-20.0, 0.0), Vec2::new(0.0, 0.0));
        let far = straight(Vec2::new(2.0, 0.0), Vec2::new(20.0, 0.0));
        assert!(!recover_adjacency(&[a.clone(), far]).get(0, 1));
        let bent_dir = Vec2::from_heading(70f64.to_radians());
        let bent = straight(Vec2::new(0.5, 0.0), Vec2::new(0.5, 0.0) + bent_dir * 15.0);
        assert!(!recover_adjacency(&[a, bent]).get(0, 1));
    }

    #[test]
    fn adjacency_boundary_cases() {
        let a = straight(Vec2::new(-20.0, 0.0), Vec2::new(0.0, 0.0));
        for (gap, expect) in [(1.49, true), (1.51, false)] {
            let b = straight(Vec2::new(gap, 0.0), Vec2::new(gap + 15.0, 0.0));
            assert_eq!(recover_adjacency(&[a.clone(), b]).get(0, 1), expect, "gap {gap}");
        }
        for (deg, expect) in [(59.0_f64, true), (61.0, false)] {
            let dir = Vec2::from_heading(deg.to_radians());
            let b = straight(Vec2::new(0.5, 0.0), Vec2::new(0.5, 0.0) + dir * 15.0);
            assert_eq!(recover_adjacency(&[a.clone(), b]).get(0, 1), expect, "angle {deg}");
        }
    }

    #[test]
    fn key_points_for_isolated_lane_and_chain() {
        let single = graph_of(vec![straight(Vec2::new(0.0, 0.0), Vec2::new(15.0, 0.0))]);
        let kps = key_points(&single);
        assert_eq!(kps.len(), 2);
        assert!(kps.iter().all(|k| k.degree == 1));

        let chain = graph_of(vec![
            straight(Vec2::new(-20.0, 0.0), Vec2::new(0.0, 0.0)),
            straight(Vec2::new(0.0, 0.0), Vec2::new(20.0, 0.0)),
        ]);
        // The interior node has degree 2 and is suppressed.
        let kps = key_points(&chain);
        assert_eq!(kps.len(), 2);
    }

    #[test]
    fn key_points_for_fork() {
        let stem = straight(Vec2::new(-30.0, 0.0), Vec2::new(0.0, 0.0));
        let up = straight(Vec2::new(0.0, 0.0), Vec2::new(28.0, 10.0));
        let down = straight(Vec2::new(0.0, 0.0), Vec2::new(28.0, -10.0));
        let g = graph_of(vec![stem, up, down]);
        let kps = key_points(&g);
        assert_eq!(kps.len(), 4);
        let fork = kps.iter().find(|k| k.position.distance(Vec2::ZERO) < 0.1).unwrap();
        assert_eq!(fork.degree, 3);
    }

    #[test]
    fn enumerate_routes_chain_and_fork() {
        let chain = graph_of(vec![
            straight(Vec2::new(-20.0, 0.0), Vec2::new(0.0, 0.0)),
            straight(Vec2::new(0.0, 0.0), Vec2::new(20.0, 0.0)),
        ]);
        let routes = enumerate_routes(&chain, 0).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].lanes, vec![0, 1]);
        assert!((routes[0].length(&chain) - 40.0).abs() < 1e-9);

        let stem = straight(Vec2::new(-30.0, 0.0), Vec2::new(0.0, 0.0));
        let up = straight(Vec2::new(0.0, 0.0), Vec2::new(28.0, 10.0));
        let down = straight(Vec2::new(0.0, 0.0), Vec2::new(28.0, -10.0));
        let fork = graph_of(vec![stem, up, down]);
        let routes = enumerate_routes(&fork, 0).unwrap();
        assert_eq!(routes.len(), 2);
        assert!(enumerate_routes(&fork, 9).is_err());
    }

    #[test]
    fn enumerate_routes_terminates_on_cycles() {
        let a = straight(Vec2::new(-10.0, 0.0), Vec2::new(10.0, 0.0));
        let half = std::f64::consts::PI;
        let top = arc(Vec2::new(10.0, 10.0), 10.0, -half / 2.0, half / 2.0);
        let back = straight(Vec2::new(10.0, 20.0), Vec2::new(-10.0, 20.0));
        let down = arc(Vec2::new(-10.0, 10.0), 10.0, half / 2.0, 3.0 * half / 2.0);
        let g = graph_of(vec![a, top, back, down]);
        // The cycle exists in adjacency; enumeration must not loop forever.
        assert!(g.adjacency.get(3, 0));
        let routes = enumerate_routes(&g, 0).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].lanes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn count_turns_on_straights_and_arcs() {
        let g = graph_of(vec![
            straight(Vec2::new(-20.0, 0.0), Vec2::new(0.0, 0.0)),
            straight(Vec2::new(0.0, 0.0), Vec2::new(20.0, 0.0)),
        ]);
        let route = Route::full(vec![0, 1], &g);
        assert_eq!(count_turns(&route, &g), 0);

        // A U-turn from two consecutive quarter-circle arcs: two turns.
        let q = std::f64::consts::FRAC_PI_2;
        let first = arc(Vec2::new(0.0, 12.0), 12.0, -q, 0.0);
        let second = arc(Vec2::new(0.0, 12.0), 12.0, 0.0, q);
        let g = graph_of(vec![first, second]);
        assert!(g.adjacency.get(0, 1));
        let route = Route::full(vec![0, 1], &g);
        assert_eq!(count_turns(&route, &g), 2);
    }

    #[test]
    fn select_route_by_difficulty() {
        let stem = straight(Vec2::new(-30.0, 0.0), Vec2::new(0.0, 0.0));
        let ahead = straight(Vec2::new(0.0, 0.0), Vec2::new(30.0, 0.0));
        // A quarter turn to the left.
        let q = std::f64::consts::FRAC_PI_2;
        let bend = arc(Vec2::new(0.0, 12.0), 12.0, -q, 0.0);
        let g = graph_of(vec![stem, ahead, bend]);
        let hard = select_route(&g, 0, RouteDifficulty::Hard).unwrap();
        assert_eq!(hard.lanes, vec![0, 2]);
        let easy = select_route(&g, 0, RouteDifficulty::Easy).unwrap();
        assert_eq!(easy.lanes, vec![0, 1]);
    }

    #[test]
    fn select_route_single_option_same_for_both() {
        let g = graph_of(vec![straight(Vec2::new(-20.0, 0.0), Vec2::new(20.0, 0.0))]);
        let hard = select_route(&g, 0, RouteDifficulty::Hard).unwrap();
        let easy = select_route(&g, 0, RouteDifficulty::Easy).unwrap();
        assert_eq!(hard, easy);
    }

    #[test]
    fn urban_features_single_lane() {
        let g = graph_of(vec![straight(Vec2::new(-20.0, 0.0), Vec2::new(20.0, 0.0))]);
        let f = urban_features(&g);
        assert_eq!(f.density, 2);
        assert!((f.connectivity - 1.0).abs() < 1e-12);
        assert_eq!(f.reach, 1);
        assert!((f.convenience - 40.0).abs() < 1e-9);
    }

    #[test]
    fn urban_features_fork() {
        let stem = straight(Vec2::new(-30.0, 0.0), Vec2::new(0.0, 0.0));
        let up = straight(Vec2::new(0.0, 0.0), Vec2::new(28.0, 10.0));
        let down = straight(Vec2::new(0.0, 0.0), Vec2::new(28.0, -10.0));
        let up_len = up.arc_length();
        let g = graph_of(vec![stem, up, down]);
        let f = urban_features(&g);
        assert_eq!(f.density, 4);
        assert!((f.connectivity - 1.5).abs() < 1e-12);
        assert_eq!(f.reach, 2);
        assert!((f.convenience - (30.0 + up_len)).abs() < 1e-9);
    }

    #[test]
    fn urban_features_empty_graph() {
        let f = urban_features(&LaneGraph::empty());
        assert_eq!(f.density, 0);
        assert_eq!(f.reach, 0);
        assert_eq!(f.connectivity, 0.0);
        assert_eq!(f.convenience, 0.0);
    }

    #[test]
    fn reach_never_exceeds_density_bound() {
        let stem = straight(Vec2::new(-30.0, 0.0), Vec2::new(0.0, 0.0));
        let up = straight(Vec2::new(0.0, 0.0), Vec2::new(28.0, 10.0));
        let down = straight(Vec2::new(0.0, 0.0), Vec2::new(28.0, -10.0));
        let g = graph_of(vec![stem, up, down]);
        let f = urban_features(&g);
        assert!(f.reach <= f.density * f.density.saturating_sub(1));
    }

    #[test]
    fn route_truncation_and_path_projection() {
        let g = graph_of(vec![
            straight(Vec2::new(-20.0, 0.0), Vec2::new(0.0, 0.0)),
            straight(Vec2::new(0.0, 0.0), Vec2::new(20.0, 0.0)),
        ]);
        let route = Route::full(vec![0, 1], &g);
        let cut = route.truncated(&g, 25.0);
        assert_eq!(cut.lanes, vec![0, 1]);
        assert!((cut.length(&g) - 25.0).abs() < 1e-9);

        let path = RoutePath::new(&route, &g);
        assert!((path.length() - 40.0).abs() < 1e-9);
        let (arc, lat) = path.project(Vec2::new(-10.0, 2.0));
        assert!((arc - 10.0).abs() < 1e-9);
        assert!((lat - 2.0).abs() < 1e-9);
        assert!(path.tangent_at(30.0).distance(Vec2::new(1.0, 0.0)) < 1e-9);
    }

    #[test]
    fn route_from_origin_enters_at_projection() {
        let g = graph_of(vec![straight(Vec2::new(-20.0, 1.0), Vec2::new(20.0, 1.0))]);
        let route = route_from_origin(&g, RouteDifficulty::Easy).unwrap();
        assert!((route.entry_offset - 20.0).abs() < 1e-9);
        assert!((route.length(&g) - 20.0).abs() < 1e-9);
    }
}
