//! Particle-filter plane detection over an [`IntensityMap`](crate::IntensityMap).
//!
//! Particles are seeded over the map (uniformly or as Gaussian modes around
//! bright cells), repeatedly reweighted by the map power and resampled with
//! replacement, then deduplicated and grouped into one cluster per step.

mod clustering;
mod filter;

pub use clustering::{
    cluster_particles, reject_redundant_clusters, reject_small_clusters, reject_small_clusters_with,
    remove_in_cluster_outliers,
    ClusteringConfig, RedundancyPredicate,
};
pub use filter::{
    convergence_metric, dedupe, init_gmm, init_uniform, normalize_weights, resample, run_filter,
    FilterOutcome, PeakMask,
};

use serde::{Deserialize, Serialize};

use crate::error::{first_violation, Result, Violation};
use crate::radar_math::Point2;

/// One weighted sample of the intensity field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub x: f64,
    pub y: f64,
    /// Map power at `(x, y)`.
    pub p: f64,
    /// Normalised weight within the particle's scope group.
    pub w: f64,
    /// GMM mode tag; 0 for uniform initialisation.
    pub mode: usize,
}

impl Particle {
    pub fn new(x: f64, y: f64, p: f64) -> Self {
        Self { x, y, p, w: 0.0, mode: 0 }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Whether weights are normalised and resampled over all particles or per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    PerMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Uniform,
    Gmm,
}

impl InitKind {
    pub fn scope(self) -> Scope {
        match self {
            InitKind::Uniform => Scope::Global,
            InitKind::Gmm => Scope::PerMode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub num_particles: usize,
    pub num_modes: usize,
    /// Isotropic standard deviation of each GMM mode (m).
    pub mode_sigma: f64,
    /// Resampling rounds; `None` picks 5, or 2 on a CFAR-floored map.
    pub iterations: Option<usize>,
    pub init_kind: InitKind,
    /// Fraction of hit cells, by power, eligible as GMM mode centres.
    pub mode_candidate_fraction: f64,
    /// Minimum spacing between GMM mode centres (m).
    pub mode_separation: f64,
    /// Cells counted as "at a peak" are within 3 dB of the maximum in a
    /// square window of this half-width (cells).
    pub peak_window: usize,
    /// Metric value at which the population counts as converged.
    pub convergence_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            num_particles: 1000,
            num_modes: 10,
            mode_sigma: 0.05,
            iterations: None,
            init_kind: InitKind::Gmm,
            mode_candidate_fraction: 0.002,
            mode_separation: 0.10,
            peak_window: 2,
            convergence_threshold: 0.9,
        }
    }
}

impl FilterConfig {
    pub fn effective_iterations(&self, cfar_applied: bool) -> usize {
        self.iterations.unwrap_or(if cfar_applied { 2 } else { 5 })
    }

    pub fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }

    /// Every constraint this value breaks.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.num_modes < 1 {
            v.push(Violation::new("filter.num_modes", "must be at least 1"));
        }
        if self.num_particles < self.num_modes {
            v.push(Violation::new("filter.num_particles", "must be at least num_modes"));
        }
        if self.iterations == Some(0) {
            v.push(Violation::new("filter.iterations", "must be at least 1"));
        }
        if !(self.mode_sigma >= 0.0) {
            v.push(Violation::new("filter.mode_sigma", "must be non-negative"));
        }
        if !(self.mode_candidate_fraction > 0.0 && self.mode_candidate_fraction <= 1.0) {
            v.push(Violation::new("filter.mode_candidate_fraction", "must lie in (0, 1]"));
        }
        if !(self.mode_separation >= 0.0) {
            v.push(Violation::new("filter.mode_separation", "must be non-negative"));
        }
        if !(self.convergence_threshold > 0.0 && self.convergence_threshold <= 1.0) {
            v.push(Violation::new("filter.convergence_threshold", "must lie in (0, 1]"));
        }
        v
    }

    /// Particle count for each mode; the last mode absorbs the remainder.
    pub fn mode_sizes(&self) -> Vec<usize> {
        let m = self.num_modes.max(1);
        let base = self.num_particles / m;
        let mut sizes = vec![base; m];
        sizes[m - 1] += self.num_particles - base * m;
        sizes
    }
}

/// A group of particles belonging to one detected surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub particles: Vec<Particle>,
    /// Power-weighted mean position.
    pub centroid: Point2,
}

impl Cluster {
    pub fn new(particles: Vec<Particle>) -> Self {
        let centroid = weighted_centroid(&particles);
        Self { particles, centroid }
    }

    pub fn size(&self) -> usize {
        self.particles.len()
    }

    pub fn top_y(&self) -> f64 {
        self.particles.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn weighted_centroid(particles: &[Particle]) -> Point2 {
    let total: f64 = particles.iter().map(|p| p.p).sum();
    if total > 0.0 && total.is_finite() {
        let x = particles.iter().map(|p| p.p * p.x).sum::<f64>() / total;
        let y = particles.iter().map(|p| p.p * p.y).sum::<f64>() / total;
        Point2::new(x, y)
    } else {
        let n = particles.len().max(1) as f64;
        Point2::new(
            particles.iter().map(|p| p.x).sum::<f64>() / n,
            particles.iter().map(|p| p.y).sum::<f64>() / n,
        )
    }
}
