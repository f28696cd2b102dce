//! Benchmark runner: builds scenarios over a grid of (task, length,
//! difficulty) settings and seeds, runs them in parallel, and aggregates
//! planner failure rates into a CSV table.

use rayon::prelude::*;

use super::{run_scenario, FailureReport, Planner};
use crate::lanegraph::{Route, RouteDifficulty};
use crate::scene::SceneState;
use crate::sim::SimConfig;
use crate::worldgen::{
    extrapolate_route, sample_traffic_with_density, GenConfig, Layout, TrafficDifficulty,
    DEFAULT_AGENT_DENSITY, DEFAULT_SAMPLE_COUNT,
};

/// Decouples traffic draws from the scene seed in the lane-to-agent task.
const TRAFFIC_SEED_SALT: u64 = 0x7472_6166_6669_6373;

/// Scenario horizon scales with route length: 0.3 s per meter.
const HORIZON_S_PER_M: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchTask {
    /// Fixed lane geometry; traffic drawn independently of the scene seed.
    LaneToAgent,
    /// Lanes and traffic drawn jointly from the scenario seed.
    LaneAndAgent,
}

impl BenchTask {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchTask::LaneToAgent => "lane2agent",
            BenchTask::LaneAndAgent => "lane_and_agent",
        }
    }
}

impl std::str::FromStr for BenchTask {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lane2agent" => Ok(BenchTask::LaneToAgent),
            "lane_and_agent" => Ok(BenchTask::LaneAndAgent),
            other => Err(format!("unknown task '{other}'")),
        }
    }
}

fn route_name(d: RouteDifficulty) -> &'static str {
    match d {
        RouteDifficulty::Easy => "easy",
        RouteDifficulty::Hard => "hard",
    }
}

fn traffic_name(d: TrafficDifficulty) -> &'static str {
    match d {
        TrafficDifficulty::Easy => "easy",
        TrafficDifficulty::Hard => "hard",
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BenchSetting {
    pub task: BenchTask,
    pub length_m: f64,
    pub route: RouteDifficulty,
    pub traffic: TrafficDifficulty,
}

impl BenchSetting {
    pub fn horizon(&self) -> f64 {
        HORIZON_S_PER_M * self.length_m
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub settings: Vec<BenchSetting>,
    pub seeds: Vec<u64>,
    pub layout: Layout,
    pub sim: SimConfig,
    pub traffic_density: f64,
    /// Draw count for hard traffic.
    pub sample_count: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            settings: Vec::new(),
            seeds: Vec::new(),
            layout: Layout::Intersection,
            sim: SimConfig::default(),
            traffic_density: DEFAULT_AGENT_DENSITY,
            sample_count: DEFAULT_SAMPLE_COUNT,
        }
    }
}

/// One aggregated line of the benchmark table.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub task: BenchTask,
    pub length_m: f64,
    pub route: RouteDifficulty,
    pub traffic: TrafficDifficulty,
    /// Scenarios that were built and adjudicated.
    pub scenarios: usize,
    /// Seeds whose world or route could not be constructed.
    pub construction_failures: usize,
    pub mean_turns: f64,
    pub mean_agents: f64,
    /// Planner failure rate over the adjudicated scenarios.
    pub pfr: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchRow>,
}

impl BenchmarkTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "task,length_m,routes,traffic,scenarios,construction_failures,mean_turns,mean_agents,pfr\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.0},{},{},{},{},{:.3},{:.3},{:.3}\n",
                row.task.as_str(),
                row.length_m,
                route_name(row.route),
                traffic_name(row.traffic),
                row.scenarios,
                row.construction_failures,
                row.mean_turns,
                row.mean_agents,
                row.pfr,
            ));
        }
        out
    }
}

/// Extrapolates a world long enough for the target route, truncates the
/// route to the setting's length, and draws traffic onto the world.
fn build_scenario(
    cfg: &BenchConfig,
    setting: &BenchSetting,
    seed: u64,
) -> Result<(SceneState, Route), String> {
    let n_tiles = (setting.length_m / 30.0).ceil() as usize + 2;
    let gen = GenConfig {
        seed,
        layout: cfg.layout,
        density: 0.0,
        ..GenConfig::default()
    };
    let chain = extrapolate_route(&gen, n_tiles, setting.route).map_err(|e| e.to_string())?;
    let scene = chain.world;
    let route = chain.route.truncated(&scene.graph, setting.length_m);
    let built = route.length(&scene.graph);
    if built + 1e-6 < setting.length_m {
        return Err(format!(
            "route reached {built:.1} m of the {:.0} m target",
            setting.length_m
        ));
    }
    let traffic_seed = match setting.task {
        BenchTask::LaneToAgent => seed ^ TRAFFIC_SEED_SALT,
        BenchTask::LaneAndAgent => seed,
    };
    let scene = sample_traffic_with_density(
        &scene,
        traffic_seed,
        setting.traffic,
        cfg.sample_count,
        cfg.traffic_density,
    );
    Ok((scene, route))
}

fn aggregate(setting: &BenchSetting, outcomes: Vec<Result<FailureReport, String>>) -> BenchRow {
    let mut scenarios = 0usize;
    let mut construction_failures = 0usize;
    let mut failures = 0usize;
    let mut turns = 0usize;
    let mut agents = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(report) => {
                scenarios += 1;
                if report.failed {
                    failures += 1;
                }
                turns += report.turns;
                agents += report.agents;
            }
            Err(_) => construction_failures += 1,
        }
    }
    let denom = scenarios.max(1) as f64;
    BenchRow {
        task: setting.task,
        length_m: setting.length_m,
        route: setting.route,
        traffic: setting.traffic,
        scenarios,
        construction_failures,
        mean_turns: turns as f64 / denom,
        mean_agents: agents as f64 / denom,
        pfr: failures as f64 / denom,
    }
}

/// Runs every (setting, seed) job with a fresh planner from `make_planner`,
/// in parallel but with deterministic, order-preserving aggregation.
/// Construction failures are counted per row, never silently dropped.
pub fn run_benchmark<P, F>(cfg: &BenchConfig, make_planner: F) -> BenchmarkTable
where
    P: Planner,
    F: Fn() -> P + Sync,
{
    let rows = cfg
        .settings
        .iter()
        .map(|setting| {
            let sim = SimConfig {
                horizon: setting.horizon(),
                ..cfg.sim.clone()
            };
            let outcomes: Vec<Result<FailureReport, String>> = cfg
                .seeds
                .par_iter()
                .map(|&seed| {
                    let (scene, route) = build_scenario(cfg, setting, seed)?;
                    let mut planner = make_planner();
                    run_scenario(&scene, &route, &mut planner, &sim)
                        .map(|r| r.report)
                        .map_err(|e| e.to_string())
                })
                .collect();
            aggregate(setting, outcomes)
        })
        .collect();
    BenchmarkTable { rows }
}
