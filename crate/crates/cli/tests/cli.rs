//! End-to-end checks of the `lanesim` binary: every subcommand runs against
//! real files in a temp directory, and the exit-code contract holds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lanesim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn gen_scene(dir: &Path, seed: u64, layout: &str) -> PathBuf {
    let out = dir.join(format!("{layout}_{seed}"));
    let result = run(&[
        "gen",
        "--seed",
        &seed.to_string(),
        "--layout",
        layout,
        "--out",
        path_str(&out),
    ]);
    assert_ok(&result);
    out.join("scene.json")
}

#[test]
fn gen_writes_a_loadable_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_scene(dir.path(), 3, "intersection");
    let text = std::fs::read_to_string(&scene).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(parsed["lanes"].as_array().unwrap().len() > 1);
    assert_eq!(parsed["fov_m"].as_f64().unwrap(), 64.0);
}

#[test]
fn gen_tiles_writes_chain_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chain");
    let result = run(&[
        "gen",
        "--seed",
        "11",
        "--layout",
        "straight",
        "--tiles",
        "4",
        "--difficulty",
        "easy",
        "--out",
        path_str(&out),
    ]);
    assert_ok(&result);
    for name in ["world.json", "manifest.json", "route.csv", "tile_000.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tiles"].as_array().unwrap().len(), 4);
    assert!(manifest["route_length_m"].as_f64().unwrap() >= 3.0 * 32.0);
    let route = std::fs::read_to_string(out.join("route.csv")).unwrap();
    assert!(route.starts_with("x,y\n"));
    assert!(route.lines().count() > 10);
}

#[test]
fn raster_round_trip_produces_a_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_scene(dir.path(), 5, "curve");
    let rsi = dir.path().join("scene.rsi");
    let svg = dir.path().join("scene.svg");
    let result = run(&[
        "rasterize",
        "--scene",
        path_str(&scene),
        "--out",
        path_str(&rsi),
        "--png",
        path_str(&svg),
    ]);
    assert_ok(&result);
    let bytes = std::fs::read(&rsi).unwrap();
    assert_eq!(&bytes[0..4], b"RSI1");
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let recon = dir.path().join("recon.json");
    let result = run(&["vectorize", "--rsi", path_str(&rsi), "--out", path_str(&recon)]);
    assert_ok(&result);
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&recon).unwrap()).unwrap();
    assert!(!parsed["lanes"].as_array().unwrap().is_empty());
}

#[test]
fn eval_recon_identity_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred");
    let gt = dir.path().join("gt");
    std::fs::create_dir_all(&pred).unwrap();
    std::fs::create_dir_all(&gt).unwrap();
    for (seed, layout) in [(1, "straight"), (2, "intersection")] {
        let scene = gen_scene(dir.path(), seed, layout);
        let name = format!("{layout}.json");
        std::fs::copy(&scene, pred.join(&name)).unwrap();
        std::fs::copy(&scene, gt.join(&name)).unwrap();
    }
    let report = dir.path().join("report.csv");
    let result = run(&[
        "eval-recon",
        "--pred",
        path_str(&pred),
        "--gt",
        path_str(&gt),
        "--out",
        path_str(&report),
    ]);
    assert_ok(&result);
    let csv = std::fs::read_to_string(&report).unwrap();
    let aggregate = csv
        .lines()
        .find(|l| l.starts_with("aggregate"))
        .expect("aggregate row");
    assert_eq!(
        aggregate,
        "aggregate,1.000000,0.000000,0.000000,1.000000,0.000000,0.000000"
    );
}

#[test]
fn eval_gen_writes_five_feature_rows() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    let reference = dir.path().join("ref");
    std::fs::create_dir_all(&scenes).unwrap();
    std::fs::create_dir_all(&reference).unwrap();
    for seed in 0..3u64 {
        let scene = gen_scene(dir.path(), seed, "intersection");
        std::fs::copy(&scene, scenes.join(format!("s{seed}.json"))).unwrap();
        let scene = gen_scene(dir.path(), seed + 10, "intersection");
        std::fs::copy(&scene, reference.join(format!("r{seed}.json"))).unwrap();
    }
    let out = dir.path().join("frechet.csv");
    let per_scene = dir.path().join("features.csv");
    let result = run(&[
        "eval-gen",
        "--scenes",
        path_str(&scenes),
        "--ref",
        path_str(&reference),
        "--out",
        path_str(&out),
        "--per-scene",
        path_str(&per_scene),
    ]);
    assert_ok(&result);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "feature,frechet,mean_scenes,mean_ref");
    let features: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        features,
        ["route_length", "connectivity", "density", "reach", "convenience"]
    );
    let per = std::fs::read_to_string(&per_scene).unwrap();
    assert_eq!(per.lines().count(), 1 + 6, "one row per scene plus header");
}

#[test]
fn simulate_writes_trace_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_scene(dir.path(), 4, "straight");
    let trace = dir.path().join("trace.csv");
    let result = run(&[
        "simulate",
        "--scene",
        path_str(&scene),
        "--route",
        "easy",
        "--horizon",
        "5",
        "--trace",
        path_str(&trace),
    ]);
    assert_ok(&result);
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,entity_id,kind,x,y,heading,speed,active"
    );
    let first = lines.next().unwrap();
    assert!(first.starts_with("0.000,0,ego,"), "got {first}");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("progress"), "got {stdout}");
}

#[test]
fn benchmark_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let result = run(&[
        "benchmark",
        "--task",
        "lane2agent",
        "--length",
        "100",
        "--routes",
        "easy",
        "--traffic",
        "hard",
        "--n",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_ok(&result);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "task,length_m,routes,traffic,scenarios,construction_failures,mean_turns,mean_agents,pfr"
    );
    let row = lines.next().expect("one data row");
    assert!(row.starts_with("lane2agent,100,easy,hard,"), "got {row}");
}

#[test]
fn input_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec![
            "rasterize".into(),
            "--scene".into(),
            dir.path().join("missing.json").display().to_string(),
            "--out".into(),
            dir.path().join("x.rsi").display().to_string(),
        ],
        vec![
            "gen".into(),
            "--seed".into(),
            "1".into(),
            "--layout".into(),
            "dodecahedron".into(),
            "--out".into(),
            dir.path().join("x").display().to_string(),
        ],
        vec!["frobnicate".into()],
        vec![
            "benchmark".into(),
            "--task".into(),
            "lane2agent".into(),
            "--n".into(),
            "0".into(),
            "--out".into(),
            dir.path().join("t.csv").display().to_string(),
        ],
    ];
    for args in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = run(&refs);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn malformed_scene_files_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"fov_m\": 64.0, \"lanes\": [{\"points\": [[0,0]]}]}").unwrap();
    let out = run(&[
        "rasterize",
        "--scene",
        path_str(&bad),
        "--out",
        path_str(&dir.path().join("x.rsi")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("input error"), "got {stderr}");
}
