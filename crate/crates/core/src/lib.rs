//! Core library for vector driving scenes: scene representation and JSON
//! serialization, flow-field rasterization and skeleton vectorization,
//! lane-graph routing and urban features, reconstruction and generation
//! metrics, procedural world generation, reactive traffic simulation, and
//! closed-loop planner benchmarking.

pub mod bench;
pub mod geom;
pub mod lanegraph;
pub mod metrics;
pub mod raster;
pub mod scene;
pub mod sim;
pub mod worldgen;
