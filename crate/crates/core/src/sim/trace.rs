//! Simulation traces: one row per entity per timestep, ego first with
//! entity id 0, plus the structured event log.

use super::{SimEvent, SimState};
use crate::scene::EGO_EXTENT;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub entity_id: usize,
    pub kind: &'static str,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub active: bool,
}

impl TraceRow {
    /// Full box size of the entity this row describes, given the scene
    /// agents the trace was recorded against.
    pub fn extent(&self, agents: &[crate::scene::AgentBox]) -> (f64, f64) {
        if self.entity_id == 0 {
            EGO_EXTENT
        } else {
            agents[self.entity_id - 1].extent
        }
    }
}

/// A recorded simulation: per-step entity rows and the final event log.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub events: Vec<SimEvent>,
}

impl Trace {
    pub fn new() -> Trace {
        Trace::default()
    }

    /// Appends one row per entity at the state's clock.
    pub fn record(&mut self, state: &SimState) {
        self.rows.push(TraceRow {
            t: state.clock,
            entity_id: 0,
            kind: "ego",
            x: state.ego.pose.translation.x,
            y: state.ego.pose.translation.y,
            heading: state.ego.pose.rotation,
            speed: state.ego.speed,
            active: true,
        });
        for (i, agent) in state.agents.iter().enumerate() {
            self.rows.push(TraceRow {
                t: state.clock,
                entity_id: i + 1,
                kind: agent.body.kind.as_str(),
                x: agent.body.center.x,
                y: agent.body.center.y,
                heading: agent.body.heading,
                speed: agent.speed,
                active: agent.active,
            });
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,entity_id,kind,x,y,heading,speed,active\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.3},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
                r.t, r.entity_id, r.kind, r.x, r.y, r.heading, r.speed, r.active
            ));
        }
        out
    }

    /// The event log as structured `event,t,payload` lines.
    pub fn event_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }
}
