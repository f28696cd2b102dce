//! Rasterized scene images: six entity types, two channels each, where the
//! channel pair at a pixel holds a 2D vector — a unit direction along
//! polylines, a velocity inside dynamic agent boxes, an orientation inside
//! static boxes. Background is the zero vector; a per-entity-type occupancy
//! bitplane rides along as test-only sidecar metadata.

mod io;
mod skeleton;
mod svg;

pub use io::{read_rsi, write_rsi};
pub use skeleton::skeleton_vectorize;
pub use svg::{render_rsi_svg, render_scene_svg};

use crate::geom::Vec2;
use crate::scene::{AgentKind, SceneState, EGO_EXTENT};
use thiserror::Error;

/// Number of image channels: two per entity type.
pub const CHANNELS: usize = 2 * EntityChannel::ALL.len();

/// Traced skeleton paths shorter than this are discarded.
pub const PRUNE_MIN_LENGTH_M: f64 = 3.0;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("invalid raster config: {0}")]
    InvalidConfig(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid image data: {0}")]
    Format(String),
}

/// The six entity types, in channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityChannel {
    Lanes,
    RedLights,
    GreenLights,
    Pedestrians,
    Vehicles,
    StaticObjects,
}

impl EntityChannel {
    pub const ALL: [EntityChannel; 6] = [
        EntityChannel::Lanes,
        EntityChannel::RedLights,
        EntityChannel::GreenLights,
        EntityChannel::Pedestrians,
        EntityChannel::Vehicles,
        EntityChannel::StaticObjects,
    ];

    pub fn index(self) -> usize {
        match self {
            EntityChannel::Lanes => 0,
            EntityChannel::RedLights => 1,
            EntityChannel::GreenLights => 2,
            EntityChannel::Pedestrians => 3,
            EntityChannel::Vehicles => 4,
            EntityChannel::StaticObjects => 5,
        }
    }
}

/// The subset of channels that encode polylines rather than boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolylineChannel {
    Lanes,
    RedLights,
    GreenLights,
}

impl PolylineChannel {
    pub fn entity(self) -> EntityChannel {
        match self {
            PolylineChannel::Lanes => EntityChannel::Lanes,
            PolylineChannel::RedLights => EntityChannel::RedLights,
            PolylineChannel::GreenLights => EntityChannel::GreenLights,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterConfig {
    pub width: u32,
    pub height: u32,
    /// Side length of the rendered field of view, meters.
    pub fov_m: f64,
    /// Stroke thickness for polylines, pixels.
    pub line_thickness: u32,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            width: 256,
            height: 256,
            fov_m: 64.0,
            line_thickness: 1,
        }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> Result<(), RasterError> {
        if self.width == 0 || self.height == 0 {
            return Err(RasterError::InvalidConfig("zero image dimension".into()));
        }
        if self.width != self.height {
            return Err(RasterError::InvalidConfig(format!(
                "image must be square (got {}x{})",
                self.width, self.height
            )));
        }
        if !(self.fov_m.is_finite() && self.fov_m > 0.0) {
            return Err(RasterError::InvalidConfig("fov must be positive".into()));
        }
        if self.line_thickness == 0 {
            return Err(RasterError::InvalidConfig("zero line thickness".into()));
        }
        Ok(())
    }

    pub fn resolution(&self) -> f64 {
        self.fov_m / self.width as f64
    }
}

/// A rasterized scene image with channel-interleaved f32 samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Rsi {
    pub width: u32,
    pub height: u32,
    /// Meters per pixel.
    pub resolution: f64,
    /// Row-major, channel-interleaved: `data[(row*width + col)*CHANNELS + c]`.
    pub data: Vec<f32>,
    /// Sidecar occupancy bitplanes, one per entity type, row-major. Tests
    /// use these to disambiguate zero-velocity boxes from background;
    /// algorithms never read them.
    pub occupancy: Vec<u8>,
}

impl Rsi {
    pub fn zeros(width: u32, height: u32, resolution: f64) -> Self {
        let px = (width as usize) * (height as usize);
        Rsi {
            width,
            height,
            resolution,
            data: vec![0.0; px * CHANNELS],
            occupancy: vec![0; px * EntityChannel::ALL.len()],
        }
    }

    fn px(&self) -> usize {
        (self.width as usize) * (self.height as usize)
    }

    pub fn value(&self, row: u32, col: u32, entity: EntityChannel) -> (f32, f32) {
        let base = ((row as usize) * (self.width as usize) + col as usize) * CHANNELS
            + 2 * entity.index();
        (self.data[base], self.data[base + 1])
    }

    pub fn set_value(&mut self, row: u32, col: u32, entity: EntityChannel, v: (f32, f32)) {
        let idx = (row as usize) * (self.width as usize) + col as usize;
        let base = idx * CHANNELS + 2 * entity.index();
        self.data[base] = v.0;
        self.data[base + 1] = v.1;
        let plane = entity.index() * self.px();
        self.occupancy[plane + idx] = 1;
    }

    pub fn occupied(&self, row: u32, col: u32, entity: EntityChannel) -> bool {
        let idx = (row as usize) * (self.width as usize) + col as usize;
        self.occupancy[entity.index() * self.px() + idx] != 0
    }

    /// Half the field of view, meters.
    pub fn half_extent(&self) -> f64 {
        self.resolution * self.width as f64 / 2.0
    }

    /// World position of a pixel center.
    pub fn pixel_center(&self, row: u32, col: u32) -> Vec2 {
        let half = self.half_extent();
        Vec2::new(
            (col as f64 + 0.5) * self.resolution - half,
            half - (row as f64 + 0.5) * self.resolution,
        )
    }

    /// Pixel containing a world point, or None when outside the image.
    pub fn pixel_of(&self, p: Vec2) -> Option<(u32, u32)> {
        let half = self.half_extent();
        let col = ((p.x + half) / self.resolution).floor();
        let row = ((half - p.y) / self.resolution).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            None
        } else {
            Some((row as u32, col as u32))
        }
    }
}

/// Renders a scene into an image. Entities of one type overwrite earlier
/// ones of the same type pixel-by-pixel; the ego is drawn last as an extra
/// vehicle at the origin carrying the scene's ego velocity.
pub fn rasterize(scene: &SceneState, cfg: &RasterConfig) -> Result<Rsi, RasterError> {
    cfg.validate()?;
    let mut rsi = Rsi::zeros(cfg.width, cfg.height, cfg.fov_m / cfg.width as f64);

    for lane in &scene.graph.lanes {
        draw_polyline(&mut rsi, lane.points(), EntityChannel::Lanes, cfg.line_thickness);
    }
    for light in &scene.red_lights {
        draw_polyline(&mut rsi, light.points(), EntityChannel::RedLights, cfg.line_thickness);
    }
    for light in &scene.green_lights {
        draw_polyline(&mut rsi, light.points(), EntityChannel::GreenLights, cfg.line_thickness);
    }

    for agent in &scene.agents {
        let (entity, value) = match agent.kind {
            AgentKind::Pedestrian => (EntityChannel::Pedestrians, agent.velocity()),
            AgentKind::Vehicle => (EntityChannel::Vehicles, agent.velocity()),
            AgentKind::Static => (
                EntityChannel::StaticObjects,
                Vec2::from_heading(agent.heading),
            ),
        };
        fill_box(&mut rsi, &agent.obb(), entity, value);
    }
    // The ego vehicle.
    let ego = crate::geom::Obb::new(Vec2::ZERO, 0.0, EGO_EXTENT.0, EGO_EXTENT.1);
    fill_box(&mut rsi, &ego, EntityChannel::Vehicles, scene.ego_velocity);

    Ok(rsi)
}

fn draw_polyline(rsi: &mut Rsi, points: &[Vec2], entity: EntityChannel, thickness: u32) {
    for w in points.windows(2) {
        let Some(dir) = (w[1] - w[0]).normalized() else {
            continue;
        };
        let value = (dir.x as f32, dir.y as f32);
        stroke_segment(rsi, w[0], w[1], entity, value, thickness);
    }
}

/// Bresenham walk from `a` to `b` in pixel space, stamping each pixel.
fn stroke_segment(
    rsi: &mut Rsi,
    a: Vec2,
    b: Vec2,
    entity: EntityChannel,
    value: (f32, f32),
    thickness: u32,
) {
    let half = rsi.half_extent();
    let to_px = |p: Vec2| -> (i64, i64) {
        (
            (((p.x + half) / rsi.resolution).floor()) as i64,
            (((half - p.y) / rsi.resolution).floor()) as i64,
        )
    };
    let (x0, y0) = to_px(a);
    let (x1, y1) = to_px(b);

    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    loop {
        stamp(rsi, y, x, entity, value, thickness);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn stamp(rsi: &mut Rsi, row: i64, col: i64, entity: EntityChannel, value: (f32, f32), thickness: u32) {
    let t = thickness as i64;
    let lo = -(t - 1) / 2;
    let hi = t / 2;
    for dr in lo..=hi {
        for dc in lo..=hi {
            let (r, c) = (row + dr, col + dc);
            if r >= 0 && c >= 0 && (r as u32) < rsi.height && (c as u32) < rsi.width {
                rsi.set_value(r as u32, c as u32, entity, value);
            }
        }
    }
}

/// Writes `value` into every pixel whose center lies inside the box.
fn fill_box(rsi: &mut Rsi, obb: &crate::geom::Obb, entity: EntityChannel, value: Vec2) {
    let half = rsi.half_extent();
    let corners = obb.corners();
    let min_x = corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min);
    let max_x = corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min);
    let max_y = corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max);

    let col_lo = (((min_x + half) / rsi.resolution).floor().max(0.0)) as i64;
    let col_hi = (((max_x + half) / rsi.resolution).ceil()) as i64;
    let row_lo = (((half - max_y) / rsi.resolution).floor().max(0.0)) as i64;
    let row_hi = (((half - min_y) / rsi.resolution).ceil()) as i64;
    let v = (value.x as f32, value.y as f32);

    for row in row_lo..=row_hi.min(rsi.height as i64 - 1) {
        for col in col_lo..=col_hi.min(rsi.width as i64 - 1) {
            if row < 0 || col < 0 {
                continue;
            }
            let center = rsi.pixel_center(row as u32, col as u32);
            if obb.contains(center) {
                rsi.set_value(row as u32, col as u32, entity, v);
            }
        }
    }
}

/// Resamples a point chain to `n` points uniformly spaced by arc length.
/// The first and last output points are exactly the input endpoints.
pub fn resample_polyline(points: &[Vec2], n: usize) -> Result<Vec<Vec2>, RasterError> {
    if n < 2 {
        return Err(RasterError::DegenerateInput(format!(
            "cannot resample to {n} points"
        )));
    }
    if points.len() < 2 {
        return Err(RasterError::DegenerateInput(
            "need at least two input points".into(),
        ));
    }
    let mut cum = Vec::with_capacity(points.len());
    cum.push(0.0);
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance(w[1]));
    }
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return Err(RasterError::DegenerateInput("zero arc length".into()));
    }

    let mut out = Vec::with_capacity(n);
    out.push(points[0]);
    let mut seg = 0usize;
    for i in 1..n - 1 {
        let target = total * i as f64 / (n - 1) as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        out.push(points[seg] + (points[seg + 1] - points[seg]) * t);
    }
    out.push(*points.last().unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Adjacency, AgentBox, LaneGraph, Polyline, POLYLINE_POINTS};

    fn straight_lane(from: Vec2, to: Vec2) -> Polyline {
        let pts: Vec<Vec2> = (0..POLYLINE_POINTS)
            .map(|i| from + (to - from) * (i as f64 / (POLYLINE_POINTS - 1) as f64))
            .collect();
        Polyline::new(&pts).unwrap()
    }

    #[test]
    fn resample_two_point_segment_hits_integer_grid() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(19.0, 0.0)];
        let out = resample_polyline(&pts, 20).unwrap();
        assert_eq!(out.len(), 20);
        for (i, p) in out.iter().enumerate() {
            assert!((p.x - i as f64).abs() < 1e-12);
            assert_eq!(p.y, 0.0);
        }
    }

    #[test]
    fn resample_preserves_already_uniform_chains() {
        let pts: Vec<Vec2> = (0..20).map(|i| Vec2::new(i as f64 * 0.5, 1.0)).collect();
        let out = resample_polyline(&pts, 20).unwrap();
        for (p, q) in out.iter().zip(&pts) {
            assert!(p.distance(*q) < 1e-9);
        }
    }

    #[test]
    fn resample_rejects_degenerate_input() {
        assert!(resample_polyline(&[Vec2::ZERO], 20).is_err());
        assert!(resample_polyline(&[Vec2::ZERO, Vec2::ZERO], 20).is_err());
        assert!(resample_polyline(&[Vec2::ZERO, Vec2::new(1.0, 0.0)], 1).is_err());
    }

    #[test]
    fn empty_scene_rasterizes_to_ego_only() {
        let mut scene = crate::scene::SceneState::empty();
        scene.ego_velocity = Vec2::new(5.0, 0.0);
        let rsi = rasterize(&scene, &RasterConfig::default()).unwrap();
        // The only nonzero values sit in the vehicle channels near the origin.
        for row in 0..rsi.height {
            for col in 0..rsi.width {
                for entity in EntityChannel::ALL {
                    let v = rsi.value(row, col, entity);
                    if v != (0.0, 0.0) {
                        assert_eq!(entity, EntityChannel::Vehicles);
                        let c = rsi.pixel_center(row, col);
                        assert!(c.x.abs() < 3.0 && c.y.abs() < 1.5);
                        assert_eq!(v, (5.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn lane_pixels_carry_unit_direction() {
        let lane = straight_lane(Vec2::new(-20.0, 0.0), Vec2::new(20.0, 0.0));
        let scene = crate::scene::SceneState {
            graph: LaneGraph::new(vec![lane], Adjacency::new(1)),
            ..crate::scene::SceneState::empty()
        };
        let rsi = rasterize(&scene, &RasterConfig::default()).unwrap();
        let (row, col) = rsi.pixel_of(Vec2::new(10.0, 0.0)).unwrap();
        assert_eq!(rsi.value(row, col, EntityChannel::Lanes), (1.0, 0.0));
        // Pixels well off the lane stay zero.
        let (row, col) = rsi.pixel_of(Vec2::new(10.0, 10.0)).unwrap();
        assert_eq!(rsi.value(row, col, EntityChannel::Lanes), (0.0, 0.0));
    }

    #[test]
    fn all_lane_direction_values_have_unit_norm() {
        let lane = straight_lane(Vec2::new(-20.0, -10.0), Vec2::new(15.0, 20.0));
        let scene = crate::scene::SceneState {
            graph: LaneGraph::new(vec![lane], Adjacency::new(1)),
            ..crate::scene::SceneState::empty()
        };
        let rsi = rasterize(&scene, &RasterConfig::default()).unwrap();
        let mut seen = 0;
        for row in 0..rsi.height {
            for col in 0..rsi.width {
                let (vx, vy) = rsi.value(row, col, EntityChannel::Lanes);
                if (vx, vy) != (0.0, 0.0) {
                    seen += 1;
                    let norm = ((vx as f64).powi(2) + (vy as f64).powi(2)).sqrt();
                    assert!((norm - 1.0).abs() < 1e-6);
                }
            }
        }
        assert!(seen > 50);
    }

    #[test]
    fn stationary_vehicle_fills_footprint_with_zero_velocity() {
        let mut scene = crate::scene::SceneState::empty();
        scene.agents.push(AgentBox {
            kind: crate::scene::AgentKind::Vehicle,
            center: Vec2::new(8.0, 4.0),
            heading: 0.3,
            extent: (4.0, 2.0),
            speed: Some(0.0),
        });
        let rsi = rasterize(&scene, &RasterConfig::default()).unwrap();
        let obb = scene.agents[0].obb();
        let mut footprint = 0;
        for row in 0..rsi.height {
            for col in 0..rsi.width {
                let occupied = rsi.occupied(row, col, EntityChannel::Vehicles);
                let center = rsi.pixel_center(row, col);
                if center.x > 4.0 {
                    // Away from the ego box: occupancy must match the agent footprint.
                    assert_eq!(occupied, obb.contains(center));
                }
                if occupied && center.x > 4.0 {
                    footprint += 1;
                    assert_eq!(rsi.value(row, col, EntityChannel::Vehicles), (0.0, 0.0));
                }
            }
        }
        let expected_px = 4.0 * 2.0 / (0.25 * 0.25);
        assert!((footprint as f64 - expected_px).abs() < expected_px * 0.2);
    }

    #[test]
    fn dynamic_box_values_equal_velocity() {
        let mut scene = crate::scene::SceneState::empty();
        scene.agents.push(AgentBox {
            kind: crate::scene::AgentKind::Pedestrian,
            center: Vec2::new(-10.0, -10.0),
            heading: std::f64::consts::FRAC_PI_2,
            extent: (0.8, 0.8),
            speed: Some(1.5),
        });
        let rsi = rasterize(&scene, &RasterConfig::default()).unwrap();
        let (row, col) = rsi.pixel_of(Vec2::new(-10.0, -10.0)).unwrap();
        let (vx, vy) = rsi.value(row, col, EntityChannel::Pedestrians);
        assert!((vx as f64).abs() < 1e-6);
        assert!((vy as f64 - 1.5).abs() < 1e-6);
    }

    #[test]
    fn config_validation_rejects_non_square_images() {
        let cfg = RasterConfig {
            width: 128,
            height: 256,
            ..RasterConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
