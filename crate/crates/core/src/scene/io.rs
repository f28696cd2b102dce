//! Canonical JSON codec for scenes: fixed key order, floats with six decimal
//! places, one line per lane/light/agent. Loading accepts any valid JSON
//! encoding of the schema; saving always emits the canonical form, so
//! serialization is a bijection on canonical scenes.

use super::{
    Adjacency, AgentBox, AgentKind, LaneGraph, Polyline, SceneError, SceneState, POLYLINE_POINTS,
};
use crate::geom::Vec2;
use serde::Deserialize;
use std::fmt::Write as _;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    fov_m: f64,
    #[serde(default)]
    city: Option<String>,
    lanes: Vec<LaneDoc>,
    red_lights: Vec<Vec<[f64; 2]>>,
    green_lights: Vec<Vec<[f64; 2]>>,
    agents: Vec<AgentDoc>,
    ego_velocity: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LaneDoc {
    points: Vec<[f64; 2]>,
    successors: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    kind: String,
    center: [f64; 2],
    heading: f64,
    extent: [f64; 2],
    #[serde(default)]
    speed: Option<f64>,
}

/// Parses and validates a scene document.
pub fn load_scene(text: &str) -> Result<SceneState, SceneError> {
    let doc: SceneDoc =
        serde_json::from_str(text).map_err(|e| SceneError::Schema(e.to_string()))?;

    let mut lanes = Vec::with_capacity(doc.lanes.len());
    let mut successors = Vec::with_capacity(doc.lanes.len());
    for (i, lane) in doc.lanes.iter().enumerate() {
        lanes.push(polyline_from_doc(&lane.points, &format!("lanes[{i}].points"))?);
        successors.push(lane.successors.clone());
    }
    let adjacency = Adjacency::from_successor_lists(&successors)?;

    let lights = |docs: &[Vec<[f64; 2]>], field: &str| -> Result<Vec<Polyline>, SceneError> {
        docs.iter()
            .enumerate()
            .map(|(i, pts)| polyline_from_doc(pts, &format!("{field}[{i}]")))
            .collect()
    };

    let mut agents = Vec::with_capacity(doc.agents.len());
    for (i, a) in doc.agents.iter().enumerate() {
        let kind = AgentKind::parse(&a.kind).ok_or_else(|| {
            SceneError::invariant(format!("agents[{i}].kind"), format!("unknown kind {:?}", a.kind))
        })?;
        agents.push(AgentBox {
            kind,
            center: Vec2::new(a.center[0], a.center[1]),
            heading: a.heading,
            extent: (a.extent[0], a.extent[1]),
            speed: a.speed,
        });
    }

    let scene = SceneState {
        fov_m: doc.fov_m,
        city: doc.city,
        graph: LaneGraph::new(lanes, adjacency),
        red_lights: lights(&doc.red_lights, "red_lights")?,
        green_lights: lights(&doc.green_lights, "green_lights")?,
        agents,
        ego_velocity: Vec2::new(doc.ego_velocity[0], doc.ego_velocity[1]),
    };
    scene.validate()?;
    Ok(scene)
}

fn polyline_from_doc(points: &[[f64; 2]], field: &str) -> Result<Polyline, SceneError> {
    let pts: Vec<Vec2> = points.iter().map(|p| Vec2::new(p[0], p[1])).collect();
    Polyline::new(&pts).map_err(|e| match e {
        SceneError::Invariant { message, .. } => SceneError::invariant(field, message),
        other => other,
    })
}

/// Serializes a scene into its canonical text form.
pub fn save_scene(scene: &SceneState) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = write!(out, "\"fov_m\": {},\n", fmt_f(scene.fov_m));
    match &scene.city {
        Some(city) => {
            let _ = write!(out, "\"city\": {},\n", serde_json::to_string(city).unwrap());
        }
        None => out.push_str("\"city\": null,\n"),
    }

    out.push_str("\"lanes\": [");
    for (i, lane) in scene.graph.lanes.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(out, "{{\"points\": {}, \"successors\": [", fmt_points(lane));
        let mut succ: Vec<usize> = scene.graph.adjacency.successors(i).collect();
        succ.sort_unstable();
        for (k, s) in succ.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{s}");
        }
        out.push_str("]}");
    }
    out.push_str("],\n");

    for (key, lights) in [("red_lights", &scene.red_lights), ("green_lights", &scene.green_lights)]
    {
        let _ = write!(out, "\"{key}\": [");
        for (i, light) in lights.iter().enumerate() {
            out.push_str(if i == 0 { "\n" } else { ",\n" });
            out.push_str(&fmt_points(light));
        }
        out.push_str("],\n");
    }

    out.push_str("\"agents\": [");
    for (i, agent) in scene.agents.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "{{\"kind\": \"{}\", \"center\": [{},{}], \"heading\": {}, \"extent\": [{},{}]",
            agent.kind.as_str(),
            fmt_f(agent.center.x),
            fmt_f(agent.center.y),
            fmt_f(agent.heading),
            fmt_f(agent.extent.0),
            fmt_f(agent.extent.1),
        );
        if let Some(speed) = agent.speed {
            let _ = write!(out, ", \"speed\": {}", fmt_f(speed));
        }
        out.push('}');
    }
    out.push_str("],\n");

    let _ = write!(
        out,
        "\"ego_velocity\": [{},{}]\n}}\n",
        fmt_f(scene.ego_velocity.x),
        fmt_f(scene.ego_velocity.y)
    );
    out
}

fn fmt_points(line: &Polyline) -> String {
    let mut s = String::with_capacity(POLYLINE_POINTS * 24);
    s.push('[');
    for (i, p) in line.points().iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "[{},{}]", fmt_f(p.x), fmt_f(p.y));
    }
    s.push(']');
    s
}

/// Six-decimal float formatting; negative zero is normalized away.
fn fmt_f(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}
