//! Command-line front end over the scene library: generation, raster
//! round trips, reconstruction and generation metrics, closed-loop
//! simulation, and the planner-failure benchmark.
//!
//! Exit codes: 0 on success, 1 on input errors (bad flags, unreadable or
//! invalid files), 2 on internal invariant violations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use lanesim_core::bench::{
    run_benchmark, run_scenario, BaselinePlanner, BenchConfig, BenchSetting, BenchTask,
};
use lanesim_core::lanegraph::{
    enumerate_routes, nearest_lane_to_origin, recover_adjacency, route_from_origin,
    urban_features, RouteDifficulty,
};
use lanesim_core::metrics::{
    frechet_1d, geo_metrics, metrics_report_csv, topo_metrics, MetricParams, SceneMetricsRow,
};
use lanesim_core::raster::{
    rasterize, read_rsi, render_rsi_svg, skeleton_vectorize, write_rsi, PolylineChannel,
    RasterConfig,
};
use lanesim_core::scene::{load_scene, save_scene, LaneGraph, SceneState};
use lanesim_core::sim::SimConfig;
use lanesim_core::worldgen::{extrapolate_route, generate_scene, GenConfig, Layout, TrafficDifficulty};

#[derive(Parser)]
#[command(
    name = "lanesim",
    version,
    about = "Vector driving scenes: generation, rasterization, metrics, simulation, benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene file into a binary raster (and optionally an SVG).
    Rasterize {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Debug image of the raster; written as SVG.
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Trace the polyline channels of a raster back into a scene file.
    Vectorize {
        #[arg(long)]
        rsi: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// GEO/TOPO reconstruction table over scene directories paired by name.
    EvalRecon {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Route-length and urban-feature Frechet comparison of two scene sets.
    EvalGen {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-scene features, one row per scene.
        #[arg(long)]
        per_scene: Option<PathBuf>,
    },
    /// Generate one scene, or an extrapolated tile chain with --tiles.
    Gen {
        #[arg(long)]
        seed: u64,
        /// straight | curve | intersection | grid
        #[arg(long)]
        layout: String,
        /// Number of tiles to chain; omit for a single scene.
        #[arg(long)]
        tiles: Option<usize>,
        /// Route difficulty while chaining: easy | hard.
        #[arg(long, default_value = "easy")]
        difficulty: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drive a scene's route with the baseline planner and record a trace.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        /// Route difficulty: easy | hard.
        #[arg(long, default_value = "easy")]
        route: String,
        /// Simulation horizon, seconds.
        #[arg(long, default_value_t = 30.0)]
        horizon: f64,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Planner-failure-rate benchmark over seeded scenarios.
    Benchmark {
        /// lane2agent | lane_and_agent
        #[arg(long)]
        task: String,
        /// Route length, meters (canonically 100 or 500).
        #[arg(long, default_value_t = 100.0)]
        length: f64,
        /// Route difficulty: easy | hard.
        #[arg(long, default_value = "easy")]
        routes: String,
        /// Traffic difficulty: easy | hard.
        #[arg(long, default_value = "easy")]
        traffic: String,
        /// Scenario count.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// First scenario seed; scenarios use seed..seed+n.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Input(String),
    Internal(String),
}

type CmdResult = Result<(), Failure>;

fn input_err(context: &Path, err: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {err}", context.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Input(msg))) => {
            eprintln!("input error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("internal error: invariant violated (panic)");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Rasterize { scene, out, png } => cmd_rasterize(&scene, &out, png.as_deref()),
        Command::Vectorize { rsi, out } => cmd_vectorize(&rsi, &out),
        Command::EvalRecon { pred, gt, out } => cmd_eval_recon(&pred, &gt, &out),
        Command::EvalGen {
            scenes,
            reference,
            out,
            per_scene,
        } => cmd_eval_gen(&scenes, &reference, &out, per_scene.as_deref()),
        Command::Gen {
            seed,
            layout,
            tiles,
            difficulty,
            out,
        } => cmd_gen(seed, &layout, tiles, &difficulty, &out),
        Command::Simulate {
            scene,
            route,
            horizon,
            trace,
        } => cmd_simulate(&scene, &route, horizon, &trace),
        Command::Benchmark {
            task,
            length,
            routes,
            traffic,
            n,
            seed,
            out,
        } => cmd_benchmark(&task, length, &routes, &traffic, n, seed, &out),
    }
}

fn load_scene_file(path: &Path) -> Result<SceneState, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_err(path, e))?;
    load_scene(&text).map_err(|e| input_err(path, e))
}

/// Sorted scene files (`*.json`) of a directory.
fn scene_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| input_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::Input(format!(
            "{}: no scene files (*.json)",
            dir.display()
        )));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_rasterize(scene_path: &Path, out: &Path, svg: Option<&Path>) -> CmdResult {
    let scene = load_scene_file(scene_path)?;
    let rsi = rasterize(&scene, &RasterConfig::default())
        .map_err(|e| Failure::Internal(e.to_string()))?;
    fs::write(out, write_rsi(&rsi)).map_err(|e| input_err(out, e))?;
    if let Some(svg_path) = svg {
        fs::write(svg_path, render_rsi_svg(&rsi)).map_err(|e| input_err(svg_path, e))?;
    }
    println!("wrote {} ({}x{} px)", out.display(), rsi.width, rsi.height);
    Ok(())
}

fn cmd_vectorize(rsi_path: &Path, out: &Path) -> CmdResult {
    let bytes = fs::read(rsi_path).map_err(|e| input_err(rsi_path, e))?;
    let rsi = read_rsi(&bytes).map_err(|e| input_err(rsi_path, e))?;
    let lanes = skeleton_vectorize(&rsi, PolylineChannel::Lanes);
    let lane_count = lanes.len();
    let adjacency = recover_adjacency(&lanes);
    let mut scene = SceneState::empty();
    scene.fov_m = rsi.width.max(rsi.height) as f64 * rsi.resolution;
    scene.graph = LaneGraph::new(lanes, adjacency);
    scene.red_lights = skeleton_vectorize(&rsi, PolylineChannel::RedLights);
    scene.green_lights = skeleton_vectorize(&rsi, PolylineChannel::GreenLights);
    if scene.validate().is_err() {
        // Vectorized lights can land farther from the vectorized lanes than
        // the scene invariant allows; keep the lane graph, drop the lights.
        scene.red_lights.clear();
        scene.green_lights.clear();
    }
    scene
        .validate()
        .map_err(|e| Failure::Internal(format!("vectorized scene invalid: {e}")))?;
    fs::write(out, save_scene(&scene)).map_err(|e| input_err(out, e))?;
    println!("wrote {} ({lane_count} lanes)", out.display());
    Ok(())
}

fn cmd_eval_recon(pred_dir: &Path, gt_dir: &Path, out: &Path) -> CmdResult {
    let params = MetricParams::default();
    let mut rows = Vec::new();
    for gt_path in scene_files(gt_dir)? {
        let name = gt_path.file_name().expect("listed file has a name");
        let pred_path = pred_dir.join(name);
        if !pred_path.exists() {
            return Err(Failure::Input(format!(
                "{}: no matching prediction",
                pred_path.display()
            )));
        }
        let gt = load_scene_file(&gt_path)?;
        let pred = load_scene_file(&pred_path)?;
        rows.push(SceneMetricsRow {
            scene_id: stem(&gt_path),
            geo: geo_metrics(&pred.graph, &gt.graph, &params),
            topo: topo_metrics(&pred.graph, &gt.graph, &params),
        });
    }
    fs::write(out, metrics_report_csv(&rows)).map_err(|e| input_err(out, e))?;
    println!("wrote {} ({} scenes)", out.display(), rows.len());
    Ok(())
}

struct FeatureSamples {
    ids: Vec<String>,
    route_length: Vec<f64>,
    connectivity: Vec<f64>,
    density: Vec<f64>,
    reach: Vec<f64>,
    convenience: Vec<f64>,
}

fn collect_features(dir: &Path) -> Result<FeatureSamples, Failure> {
    let mut samples = FeatureSamples {
        ids: Vec::new(),
        route_length: Vec::new(),
        connectivity: Vec::new(),
        density: Vec::new(),
        reach: Vec::new(),
        convenience: Vec::new(),
    };
    for path in scene_files(dir)? {
        let scene = load_scene_file(&path)?;
        let longest = match nearest_lane_to_origin(&scene.graph) {
            None => 0.0,
            Some(start) => enumerate_routes(&scene.graph, start)
                .map_err(|e| input_err(&path, e))?
                .iter()
                .map(|r| r.length(&scene.graph))
                .fold(0.0f64, f64::max),
        };
        let features = urban_features(&scene.graph);
        samples.ids.push(stem(&path));
        samples.route_length.push(longest);
        samples.connectivity.push(features.connectivity);
        samples.density.push(features.density as f64);
        samples.reach.push(features.reach as f64);
        samples.convenience.push(features.convenience);
    }
    Ok(samples)
}

fn cmd_eval_gen(
    scenes_dir: &Path,
    ref_dir: &Path,
    out: &Path,
    per_scene: Option<&Path>,
) -> CmdResult {
    let a = collect_features(scenes_dir)?;
    let b = collect_features(ref_dir)?;
    let features: [(&str, &[f64], &[f64]); 5] = [
        ("route_length", &a.route_length, &b.route_length),
        ("connectivity", &a.connectivity, &b.connectivity),
        ("density", &a.density, &b.density),
        ("reach", &a.reach, &b.reach),
        ("convenience", &a.convenience, &b.convenience),
    ];
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let mut csv = String::from("feature,frechet,mean_scenes,mean_ref\n");
    for (name, xs, ys) in features {
        let d = frechet_1d(xs, ys).map_err(|e| Failure::Input(e.to_string()))?;
        csv.push_str(&format!("{name},{:.6},{:.6},{:.6}\n", d, mean(xs), mean(ys)));
        // Display scaling only: the stored values stay unscaled.
        println!("{name}: frechet {d:.3e}");
    }
    fs::write(out, csv).map_err(|e| input_err(out, e))?;

    if let Some(per_scene_path) = per_scene {
        let mut csv =
            String::from("set,scene_id,route_length,connectivity,density,reach,convenience\n");
        for (label, s) in [("scenes", &a), ("ref", &b)] {
            for i in 0..s.ids.len() {
                csv.push_str(&format!(
                    "{label},{},{:.6},{:.6},{:.0},{:.0},{:.6}\n",
                    s.ids[i],
                    s.route_length[i],
                    s.connectivity[i],
                    s.density[i],
                    s.reach[i],
                    s.convenience[i],
                ));
            }
        }
        fs::write(per_scene_path, csv).map_err(|e| input_err(per_scene_path, e))?;
    }
    println!(
        "wrote {} ({} vs {} scenes)",
        out.display(),
        a.ids.len(),
        b.ids.len()
    );
    Ok(())
}

fn cmd_gen(seed: u64, layout: &str, tiles: Option<usize>, difficulty: &str, out: &Path) -> CmdResult {
    let layout: Layout = layout.parse().map_err(|e| Failure::Input(format!("{e}")))?;
    fs::create_dir_all(out).map_err(|e| input_err(out, e))?;
    let cfg = GenConfig {
        seed,
        layout,
        ..GenConfig::default()
    };
    match tiles {
        None => {
            let scene = generate_scene(&cfg).map_err(|e| Failure::Input(e.to_string()))?;
            let path = out.join("scene.json");
            fs::write(&path, save_scene(&scene)).map_err(|e| input_err(&path, e))?;
            println!("wrote {} ({} lanes)", path.display(), scene.graph.len());
        }
        Some(k) => {
            let difficulty: RouteDifficulty =
                difficulty.parse().map_err(Failure::Input)?;
            let chain =
                extrapolate_route(&cfg, k, difficulty).map_err(|e| Failure::Input(e.to_string()))?;
            for (i, tile) in chain.tiles.iter().enumerate() {
                let path = out.join(format!("tile_{i:03}.json"));
                fs::write(&path, save_scene(&tile.scene)).map_err(|e| input_err(&path, e))?;
            }
            let world_path = out.join("world.json");
            fs::write(&world_path, save_scene(&chain.world))
                .map_err(|e| input_err(&world_path, e))?;
            let route_length = chain.route.length(&chain.world.graph);
            let manifest = serde_json::json!({
                "seed": seed,
                "layout": format!("{layout:?}").to_lowercase(),
                "difficulty": match difficulty {
                    RouteDifficulty::Easy => "easy",
                    RouteDifficulty::Hard => "hard",
                },
                "truncated": chain.truncated,
                "tiles": chain.tiles.iter().map(|t| serde_json::json!({
                    "x": t.pose.translation.x,
                    "y": t.pose.translation.y,
                    "heading": t.pose.rotation,
                })).collect::<Vec<_>>(),
                "route_lanes": chain.route.lanes,
                "route_length_m": route_length,
            });
            let manifest_path = out.join("manifest.json");
            fs::write(
                &manifest_path,
                serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
            )
            .map_err(|e| input_err(&manifest_path, e))?;
            let mut route_csv = String::from("x,y\n");
            for p in chain.route.points(&chain.world.graph) {
                route_csv.push_str(&format!("{:.6},{:.6}\n", p.x, p.y));
            }
            let route_path = out.join("route.csv");
            fs::write(&route_path, route_csv).map_err(|e| input_err(&route_path, e))?;
            println!(
                "wrote {} tiles, world, manifest, route to {} ({route_length:.1} m{})",
                chain.tiles.len(),
                out.display(),
                if chain.truncated { ", truncated" } else { "" }
            );
        }
    }
    Ok(())
}

fn cmd_simulate(scene_path: &Path, route: &str, horizon: f64, trace_path: &Path) -> CmdResult {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Failure::Input(format!("horizon must be positive, got {horizon}")));
    }
    let scene = load_scene_file(scene_path)?;
    let difficulty: RouteDifficulty = route.parse().map_err(Failure::Input)?;
    let route = route_from_origin(&scene.graph, difficulty)
        .map_err(|e| Failure::Input(format!("{}: no drivable route: {e}", scene_path.display())))?;
    let cfg = SimConfig {
        horizon,
        ..SimConfig::default()
    };
    let result = run_scenario(&scene, &route, &mut BaselinePlanner, &cfg)
        .map_err(|e| Failure::Input(format!("{}: {e}", scene_path.display())))?;
    let mut text = result.trace.to_csv();
    text.push_str(&result.trace.event_lines());
    fs::write(trace_path, text).map_err(|e| input_err(trace_path, e))?;
    println!(
        "progress {:.3}, cause {}, {} events, trace {}",
        result.report.progress,
        result.report.cause.as_str(),
        result.trace.events.len(),
        trace_path.display()
    );
    Ok(())
}

fn cmd_benchmark(
    task: &str,
    length: f64,
    routes: &str,
    traffic: &str,
    n: usize,
    seed: u64,
    out: &Path,
) -> CmdResult {
    let task: BenchTask = task.parse().map_err(Failure::Input)?;
    let routes: RouteDifficulty = routes.parse().map_err(Failure::Input)?;
    let traffic: TrafficDifficulty = traffic.parse().map_err(Failure::Input)?;
    if !length.is_finite() || length <= 0.0 {
        return Err(Failure::Input(format!("length must be positive, got {length}")));
    }
    if n == 0 {
        return Err(Failure::Input("n must be at least 1".into()));
    }
    let bench = BenchConfig {
        settings: vec![BenchSetting {
            task,
            length_m: length,
            route: routes,
            traffic,
        }],
        seeds: (seed..seed + n as u64).collect(),
        ..BenchConfig::default()
    };
    let table = run_benchmark(&bench, || BaselinePlanner);
    fs::write(out, table.to_csv()).map_err(|e| input_err(out, e))?;
    let row = &table.rows[0];
    println!(
        "pfr {:.3} over {} scenarios ({} construction failures), \
         mean turns {:.2}, mean agents {:.1}",
        row.pfr, row.scenarios, row.construction_failures, row.mean_turns, row.mean_agents
    );
    Ok(())
}
