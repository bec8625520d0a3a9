//! Stair detection and dimensioning from a rotating-mirror FMCW radar scan.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`radar_math`] holds the closed-form radar relations and the
//!    beam-to-world transform of the mirror scanner.
//! 2. [`scene_sim`] turns a parametric staircase into point scatterers and
//!    synthesises one beat signal per mirror position.
//! 3. [`range_processing`] computes range profiles, applies CA-CFAR and
//!    assembles the sagittal-plane [`IntensityMap`].
//! 4. [`detector`] runs the particle filter over the map and groups the
//!    surviving particles into one cluster per step.
//! 5. [`dimensioning`] turns clusters into per-step depth and height and
//!    compares them with the scene's ground truth.
//!
//! [`pipeline`] wires the stages together behind a single [`PipelineConfig`].

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod detector;
pub mod dimensioning;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod radar_math;
pub mod range_processing;
pub mod rng;
pub mod scene_sim;

pub use config::{validate_config, PipelineConfig};
pub use detector::{Cluster, FilterConfig, InitKind, Particle, Scope};
pub use dimensioning::{ErrorReport, StairEstimate, StepEstimate};
pub use error::{Error, Result, Violation};
pub use pipeline::{run_pipeline, PipelineReport};
pub use radar_math::{Point2, RadarParams, ScannerGeometry};
pub use range_processing::{CfarParams, IntensityMap, RangeProfile};
pub use scene_sim::{BeatSignal, Scatterer, StairScene, Step};
