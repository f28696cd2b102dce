//! Reconstruction metrics (GEO/TOPO F1, lateral L2, Chamfer) and generation
//! metrics (route-length statistics, 1D Frechet distances over
//! urban-planning features).

mod assignment;

pub use assignment::match_points;

use crate::geom::Vec2;
use crate::lanegraph;
use crate::scene::{LaneGraph, SceneState, DEFAULT_FOV_M};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// Point spacing along lanes, meters.
pub const DEFAULT_SPACING_M: f64 = 1.5;

/// Maximum pred-to-gt distance for a matched pair.
pub const DEFAULT_MATCH_THRESHOLD_M: f64 = 1.5;

/// Every n-th sample per lane seeds a TOPO sub-graph comparison.
pub const DEFAULT_SEED_STRIDE: usize = 10;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("empty scene set")]
    EmptyInput,
}

#[derive(Debug, Clone)]
pub struct MetricParams {
    pub spacing: f64,
    pub threshold: f64,
    pub seed_stride: usize,
    /// Nearest-neighbor distance charged against an empty point set; the
    /// field-of-view diagonal, i.e. the worst case inside the scene square.
    pub empty_set_penalty: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            spacing: DEFAULT_SPACING_M,
            threshold: DEFAULT_MATCH_THRESHOLD_M,
            seed_stride: DEFAULT_SEED_STRIDE,
            empty_set_penalty: DEFAULT_FOV_M * std::f64::consts::SQRT_2,
        }
    }
}

/// A point sampled along a lane centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub position: Vec2,
    pub lane: usize,
    pub arc: f64,
}

/// F1, lateral L2 and Chamfer distance. When there are no true positives
/// the lateral error is undefined; it is reported as 0 with
/// `lateral_defined == false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTriple {
    pub f1: f64,
    pub lateral: f64,
    pub chamfer: f64,
    pub lateral_defined: bool,
}

/// Samples every lane at arc offsets 0, s, 2s, … plus the exact endpoint.
pub fn sample_points(graph: &LaneGraph, spacing: f64) -> Vec<PointSample> {
    assert!(spacing > 0.0, "spacing must be positive");
    let mut out = Vec::new();
    for (l, lane) in graph.lanes.iter().enumerate() {
        let len = lane.arc_length();
        let mut arc = 0.0;
        while arc < len - 1e-9 {
            out.push(PointSample {
                position: lane.point_at_arc(arc),
                lane: l,
                arc,
            });
            arc += spacing;
        }
        out.push(PointSample {
            position: lane.end(),
            lane: l,
            arc: len,
        });
    }
    out
}

fn f1_score(tp: usize, n_pred: usize, n_gt: usize) -> f64 {
    if n_pred == 0 && n_gt == 0 {
        return 1.0;
    }
    if n_pred == 0 || n_gt == 0 {
        return 0.0;
    }
    let precision = tp as f64 / n_pred as f64;
    let recall = tp as f64 / n_gt as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Symmetric Chamfer distance: the two directional mean nearest-neighbor
/// distances, averaged. An empty side is charged the empty-set penalty.
fn chamfer_distance(a: &[Vec2], b: &[Vec2], penalty: f64) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return penalty;
    }
    let directed = |from: &[Vec2], to: &[Vec2]| -> f64 {
        let total: f64 = from
            .iter()
            .map(|p| {
                to.iter()
                    .map(|q| p.distance(*q))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        total / from.len() as f64
    };
    0.5 * (directed(a, b) + directed(b, a))
}

/// Mean lateral error over matched pred points. Each point is charged its
/// distance to the nearest gt centerline; the distance to its matched gt
/// sample (which lies on a centerline) is an upper bound and is used when
/// smaller, so a graph compared against itself scores exactly zero.
fn lateral_error(
    matched: &[(usize, usize, f64)],
    pred_samples: &[PointSample],
    gt: &LaneGraph,
    gt_lane_filter: Option<&HashSet<usize>>,
) -> Option<f64> {
    if matched.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for &(i, _, d) in matched {
        let p = pred_samples[i].position;
        let nearest = gt
            .lanes
            .iter()
            .enumerate()
            .filter(|(l, _)| gt_lane_filter.map_or(true, |f| f.contains(l)))
            .map(|(_, lane)| lane.distance_to(p))
            .fold(f64::INFINITY, f64::min);
        total += nearest.min(d);
    }
    Some(total / matched.len() as f64)
}

fn base_metrics(
    pred_samples: &[PointSample],
    gt_samples: &[PointSample],
    gt: &LaneGraph,
    gt_lane_filter: Option<&HashSet<usize>>,
    params: &MetricParams,
) -> (MetricTriple, Vec<(usize, usize, f64)>) {
    let pred_pos: Vec<Vec2> = pred_samples.iter().map(|s| s.position).collect();
    let gt_pos: Vec<Vec2> = gt_samples.iter().map(|s| s.position).collect();
    let matched = match_points(&pred_pos, &gt_pos, params.threshold);
    let f1 = f1_score(matched.len(), pred_samples.len(), gt_samples.len());
    let lateral = lateral_error(&matched, pred_samples, gt, gt_lane_filter);
    let chamfer = chamfer_distance(&pred_pos, &gt_pos, params.empty_set_penalty);
    (
        MetricTriple {
            f1,
            lateral: lateral.unwrap_or(0.0),
            chamfer,
            lateral_defined: lateral.is_some(),
        },
        matched,
    )
}

/// GEO metrics: optimal point-set matching over the complete graphs.
pub fn geo_metrics(pred: &LaneGraph, gt: &LaneGraph, params: &MetricParams) -> MetricTriple {
    let pred_samples = sample_points(pred, params.spacing);
    let gt_samples = sample_points(gt, params.spacing);
    base_metrics(&pred_samples, &gt_samples, gt, None, params).0
}

/// Lane indices reachable by directed traversal starting anywhere on
/// `lane` (successors, transitively; `lane` itself only via a cycle).
fn reachable_lanes(graph: &LaneGraph, lane: usize) -> HashSet<usize> {
    let mut out = HashSet::new();
    let mut stack: Vec<usize> = graph.adjacency.successors(lane).collect();
    while let Some(l) = stack.pop() {
        if out.insert(l) {
            stack.extend(graph.adjacency.successors(l));
        }
    }
    out
}

/// Sample indices reachable from the sample at `seed`: the tail of its own
/// lane plus every sample on transitively reachable lanes.
fn reachable_samples(
    graph: &LaneGraph,
    samples: &[PointSample],
    seed: &PointSample,
) -> Vec<usize> {
    let lanes = reachable_lanes(graph, seed.lane);
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            lanes.contains(&s.lane) || (s.lane == seed.lane && s.arc >= seed.arc - 1e-9)
        })
        .map(|(i, _)| i)
        .collect()
}

/// TOPO metrics: every `seed_stride`-th gt sample per lane seeds a
/// comparison between the gt sub-point-set reachable from the seed and the
/// pred sub-point-set reachable from the pred point matched to the seed
/// (empty when the seed is unmatched); the base metrics are averaged over
/// seeds.
pub fn topo_metrics(pred: &LaneGraph, gt: &LaneGraph, params: &MetricParams) -> MetricTriple {
    let pred_samples = sample_points(pred, params.spacing);
    let gt_samples = sample_points(gt, params.spacing);
    if gt_samples.is_empty() || pred_samples.is_empty() {
        let f1 = f1_score(0, pred_samples.len(), gt_samples.len());
        let chamfer = if gt_samples.is_empty() && pred_samples.is_empty() {
            0.0
        } else {
            params.empty_set_penalty
        };
        return MetricTriple {
            f1,
            lateral: 0.0,
            chamfer,
            lateral_defined: false,
        };
    }

    let pred_pos: Vec<Vec2> = pred_samples.iter().map(|s| s.position).collect();
    let gt_pos: Vec<Vec2> = gt_samples.iter().map(|s| s.position).collect();
    let matched = match_points(&pred_pos, &gt_pos, params.threshold);
    let pred_of_gt: HashMap<usize, usize> = matched.iter().map(|&(i, j, _)| (j, i)).collect();

    // Seeds: every seed_stride-th sample within each lane's run.
    let mut seeds: Vec<usize> = Vec::new();
    let mut lane_pos = 0usize;
    let mut current_lane = usize::MAX;
    for (idx, s) in gt_samples.iter().enumerate() {
        if s.lane != current_lane {
            current_lane = s.lane;
            lane_pos = 0;
        }
        if lane_pos % params.seed_stride == 0 {
            seeds.push(idx);
        }
        lane_pos += 1;
    }

    let mut f1_sum = 0.0;
    let mut chamfer_sum = 0.0;
    let mut lateral_sum = 0.0;
    let mut lateral_count = 0usize;
    for &seed_idx in &seeds {
        let gt_subset_idx = reachable_samples(gt, &gt_samples, &gt_samples[seed_idx]);
        let gt_subset: Vec<PointSample> =
            gt_subset_idx.iter().map(|&i| gt_samples[i]).collect();
        let gt_lanes: HashSet<usize> = gt_subset.iter().map(|s| s.lane).collect();
        let pred_subset: Vec<PointSample> = match pred_of_gt.get(&seed_idx) {
            Some(&pred_idx) => {
                reachable_samples(pred, &pred_samples, &pred_samples[pred_idx])
                    .into_iter()
                    .map(|i| pred_samples[i])
                    .collect()
            }
            None => Vec::new(),
        };
        let (triple, _) = base_metrics(&pred_subset, &gt_subset, gt, Some(&gt_lanes), params);
        f1_sum += triple.f1;
        chamfer_sum += triple.chamfer;
        if triple.lateral_defined {
            lateral_sum += triple.lateral;
            lateral_count += 1;
        }
    }
    let n = seeds.len() as f64;
    MetricTriple {
        f1: f1_sum / n,
        lateral: if lateral_count > 0 {
            lateral_sum / lateral_count as f64
        } else {
            0.0
        },
        chamfer: chamfer_sum / n,
        lateral_defined: lateral_count > 0,
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// 1D Gaussian Frechet distance: (μa−μb)² + (σa−σb)² with sample standard
/// deviations.
pub fn frechet_1d(samples_a: &[f64], samples_b: &[f64]) -> Result<f64, MetricsError> {
    let n = samples_a.len().min(samples_b.len());
    if samples_a.len() < 2 || samples_b.len() < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    let moments = |xs: &[f64]| -> (f64, f64) {
        let mu = mean(xs);
        let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        (mu, var.sqrt())
    };
    let (mu_a, sd_a) = moments(samples_a);
    let (mu_b, sd_b) = moments(samples_b);
    Ok((mu_a - mu_b).powi(2) + (sd_a - sd_b).powi(2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteLengthStats {
    pub mean: f64,
    /// Population standard deviation over the scene set.
    pub std: f64,
    /// Scenes without lanes; they contribute length 0.
    pub lane_free_scenes: usize,
}

/// Longest-route statistics over a scene set: per scene, the maximum route
/// length among maximal routes from the lane nearest the origin.
pub fn route_length_stats(scenes: &[SceneState]) -> Result<RouteLengthStats, MetricsError> {
    if scenes.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut lengths = Vec::with_capacity(scenes.len());
    let mut lane_free = 0usize;
    for scene in scenes {
        match lanegraph::nearest_lane_to_origin(&scene.graph) {
            None => {
                lane_free += 1;
                lengths.push(0.0);
            }
            Some(start) => {
                let routes = lanegraph::enumerate_routes(&scene.graph, start)
                    .expect("start lane is in range");
                let best = routes
                    .iter()
                    .map(|r| r.length(&scene.graph))
                    .fold(0.0f64, f64::max);
                lengths.push(best);
            }
        }
    }
    let mu = mean(&lengths);
    let var = lengths.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / lengths.len() as f64;
    Ok(RouteLengthStats {
        mean: mu,
        std: var.sqrt(),
        lane_free_scenes: lane_free,
    })
}

/// One row of the reconstruction report.
#[derive(Debug, Clone)]
pub struct SceneMetricsRow {
    pub scene_id: String,
    pub geo: MetricTriple,
    pub topo: MetricTriple,
}

/// Renders the reconstruction report: one row per scene, then an aggregate
/// row of column means.
pub fn metrics_report_csv(rows: &[SceneMetricsRow]) -> String {
    let mut out = String::from("scene_id,geo_f1,geo_lat,geo_chamfer,topo_f1,topo_lat,topo_chamfer\n");
    let fmt = |row: &str, g: &MetricTriple, t: &MetricTriple| -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            row, g.f1, g.lateral, g.chamfer, t.f1, t.lateral, t.chamfer
        )
    };
    for row in rows {
        out.push_str(&fmt(&row.scene_id, &row.geo, &row.topo));
    }
    if !rows.is_empty() {
        let agg = |get: &dyn Fn(&SceneMetricsRow) -> f64| -> f64 {
            rows.iter().map(get).sum::<f64>() / rows.len() as f64
        };
        let geo = MetricTriple {
            f1: agg(&|r| r.geo.f1),
            lateral: agg(&|r| r.geo.lateral),
            chamfer: agg(&|r| r.geo.chamfer),
            lateral_defined: true,
        };
        let topo = MetricTriple {
            f1: agg(&|r| r.topo.f1),
            lateral: agg(&|r| r.topo.lateral),
            chamfer: agg(&|r| r.topo.chamfer),
            lateral_defined: true,
        };
        out.push_str(&fmt("aggregate", &geo, &topo));
    }
    out
}
