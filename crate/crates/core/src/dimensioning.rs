//! Per-step depth and height from the final clusters, and errors against
//! the scene's ground truth.
//!
//! Particle positions are already in the world frame, so the radar-to-mirror
//! leg has been removed and depths are measured from the mirror axis.

use serde::{Deserialize, Serialize};

use crate::detector::Cluster;
use crate::error::{Error, Result};
use crate::radar_math::{height_resolution, ScannerGeometry};
use crate::scene_sim::StairScene;

/// Power-weighted mean particle depth, weights renormalised within the cluster.
pub fn estimate_depth(cluster: &Cluster) -> Result<f64> {
    if cluster.particles.is_empty() {
        return Err(Error::EmptyInput("estimate_depth"));
    }
    let total: f64 = cluster.particles.iter().map(|p| p.p).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::ZeroWeights { group: 0 });
    }
    let d = cluster.particles.iter().map(|p| (p.p / total) * p.x).sum::<f64>();
    // keep the convex-combination bound exact under rounding
    let (lo, hi) = cluster
        .particles
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
    Ok(d.clamp(lo, hi))
}

/// Step-top height of one cluster and the beam-width correction applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightEstimate {
    /// Highest particle in the cluster (m).
    pub top_particle_y: f64,
    /// `depth * tan(aperture / 2)` (m).
    pub correction: f64,
    /// Corrected step-top height, clamped at ground level (m).
    pub height: f64,
}

/// Highest particle lowered by the half-aperture beam spread at the cluster's depth.
pub fn estimate_height_at(cluster: &Cluster, depth: f64, geometry: &ScannerGeometry) -> Result<HeightEstimate> {
    if cluster.particles.is_empty() {
        return Err(Error::EmptyInput("estimate_height"));
    }
    let top = cluster.top_y();
    let correction = height_resolution(depth.max(0.0), geometry.half_aperture())?;
    Ok(HeightEstimate {
        top_particle_y: top,
        correction,
        height: (top - correction).max(0.0),
    })
}

pub fn estimate_height(cluster: &Cluster, geometry: &ScannerGeometry) -> Result<HeightEstimate> {
    estimate_height_at(cluster, estimate_depth(cluster)?, geometry)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEstimate {
    /// Distance from the mirror axis to the step face (m).
    pub depth: f64,
    /// Step-top height above ground (m).
    pub top_height: f64,
    /// Rise from the previous step top, or from the ground for the first step (m).
    pub riser_height: f64,
    pub top_particle_y: f64,
    pub height_correction: f64,
    pub particles: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StairEstimate {
    pub num_steps: usize,
    pub steps: Vec<StepEstimate>,
}

impl StairEstimate {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Dimension every cluster and order the steps by depth. No clusters gives
/// an empty estimate ("no stairs detected").
pub fn reconstruct_staircase(clusters: &[Cluster], geometry: &ScannerGeometry) -> Result<StairEstimate> {
    let mut raw = Vec::with_capacity(clusters.len());
    for c in clusters {
        let depth = estimate_depth(c)?;
        let h = estimate_height_at(c, depth, geometry)?;
        raw.push((depth, h, c.size()));
    }
    raw.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.height.total_cmp(&b.1.height))
            .then(a.2.cmp(&b.2))
    });
    let mut below = 0.0;
    let steps: Vec<StepEstimate> = raw
        .into_iter()
        .map(|(depth, h, particles)| {
            let step = StepEstimate {
                depth,
                top_height: h.height,
                riser_height: h.height - below,
                top_particle_y: h.top_particle_y,
                height_correction: h.correction,
                particles,
            };
            below = h.height;
            step
        })
        .collect();
    Ok(StairEstimate {
        num_steps: steps.len(),
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub depth_error: f64,
    pub height_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub expected_steps: usize,
    pub detected_steps: usize,
    /// Detected count equals the ground-truth count.
    pub count_matches: bool,
    /// Errors for the first `min(expected, detected)` steps, paired by depth order.
    pub steps: Vec<StepError>,
    pub max_depth_error: f64,
    pub mean_depth_error: f64,
    pub max_height_error: f64,
    pub mean_height_error: f64,
}

/// Pair estimated and true steps in ascending depth and report absolute errors.
/// Step tops are compared as heights above ground.
pub fn compare_to_ground_truth(estimate: &StairEstimate, scene: &StairScene) -> ErrorReport {
    let truth: Vec<(f64, f64)> = scene.riser_depths().into_iter().zip(scene.top_heights()).collect();
    let steps: Vec<StepError> = estimate
        .steps
        .iter()
        .zip(&truth)
        .map(|(e, &(d, h))| StepError {
            depth_error: (e.depth - d).abs(),
            height_error: (e.top_height - h).abs(),
        })
        .collect();
    let stat = |f: fn(&StepError) -> f64| {
        if steps.is_empty() {
            return (0.0, 0.0);
        }
        let max = steps.iter().map(f).fold(0.0, f64::max);
        let mean = steps.iter().map(f).sum::<f64>() / steps.len() as f64;
        (max, mean)
    };
    let (max_depth_error, mean_depth_error) = stat(|s| s.depth_error);
    let (max_height_error, mean_height_error) = stat(|s| s.height_error);
    ErrorReport {
        expected_steps: truth.len(),
        detected_steps: estimate.num_steps,
        count_matches: truth.len() == estimate.num_steps,
        steps,
        max_depth_error,
        mean_depth_error,
        max_height_error,
        mean_height_error,
    }
}
