//! Debug SVG rendering for scenes and rasterized images.

use super::{EntityChannel, Rsi};
use crate::scene::{AgentKind, SceneState, EGO_EXTENT};
use std::fmt::Write as _;

const ENTITY_COLORS: [(&str, EntityChannel); 6] = [
    ("#888888", EntityChannel::Lanes),
    ("#d03030", EntityChannel::RedLights),
    ("#30b050", EntityChannel::GreenLights),
    ("#e0a020", EntityChannel::Pedestrians),
    ("#3060d0", EntityChannel::Vehicles),
    ("#505050", EntityChannel::StaticObjects),
];

/// Renders a scene as vector graphics; +x right, +y up, ego at the center.
pub fn render_scene_svg(scene: &SceneState) -> String {
    let half = scene.fov_m / 2.0;
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        -half, -half, scene.fov_m, scene.fov_m
    );
    svg.push_str("<g transform=\"scale(1,-1)\">\n");
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
        -half, -half, scene.fov_m, scene.fov_m
    );

    for lane in &scene.graph.lanes {
        polyline(&mut svg, lane.points(), "#888888", 0.4);
    }
    for light in &scene.red_lights {
        polyline(&mut svg, light.points(), "#d03030", 0.6);
    }
    for light in &scene.green_lights {
        polyline(&mut svg, light.points(), "#30b050", 0.6);
    }
    for agent in &scene.agents {
        let color = match agent.kind {
            AgentKind::Pedestrian => "#e0a020",
            AgentKind::Vehicle => "#3060d0",
            AgentKind::Static => "#505050",
        };
        boxed(&mut svg, agent.center.x, agent.center.y, agent.heading, agent.extent, color);
    }
    boxed(&mut svg, 0.0, 0.0, 0.0, EGO_EXTENT, "#c02080");

    svg.push_str("</g>\n</svg>\n");
    svg
}

/// Renders every occupied pixel of an image, colored by entity type.
pub fn render_rsi_svg(rsi: &Rsi) -> String {
    let half = rsi.half_extent();
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\">\n",
        rsi.width, rsi.height
    );
    let _ = write!(
        svg,
        "<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
        rsi.width, rsi.height
    );
    let _ = half;
    for (color, entity) in ENTITY_COLORS {
        for row in 0..rsi.height {
            for col in 0..rsi.width {
                if rsi.value(row, col, entity) != (0.0, 0.0) {
                    let _ = write!(
                        svg,
                        "<rect x=\"{col}\" y=\"{row}\" width=\"1\" height=\"1\" fill=\"{color}\"/>\n"
                    );
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn polyline(svg: &mut String, points: &[crate::geom::Vec2], color: &str, width: f64) {
    svg.push_str("<polyline points=\"");
    for p in points {
        let _ = write!(svg, "{:.3},{:.3} ", p.x, p.y);
    }
    let _ = write!(
        svg,
        "\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>\n"
    );
}

fn boxed(svg: &mut String, x: f64, y: f64, heading: f64, extent: (f64, f64), color: &str) {
    let deg = heading.to_degrees();
    let _ = write!(
        svg,
        "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" \
         transform=\"rotate({:.3} {:.3} {:.3})\" fill=\"{color}\" fill-opacity=\"0.7\"/>\n",
        x - extent.0 / 2.0,
        y - extent.1 / 2.0,
        extent.0,
        extent.1,
        deg,
        x,
        y
    );
}
