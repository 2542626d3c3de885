//! Curve-network recovery and surfacing for 4D architectural sketches.

pub mod classifier;
pub mod clustering;
pub mod config;
pub mod consolidation;
pub mod error;
pub mod features;
pub mod geom;
pub mod kdtree;
pub mod pipeline;
pub mod sketch;
pub mod spline;
pub mod stats;
pub mod surfacing;
pub mod topology;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use geom::Vec3;
pub use sketch::{load_sketch, save_sketch, Sketch, StrokeLabel, StrokeRecord, StrokeVertex};
