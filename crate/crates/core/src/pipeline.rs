//! End-to-end run: scene → beat signals → map → particles → steps.

use serde::Serialize;

use crate::config::{validate_config, PipelineConfig};
use crate::detector::{
    cluster_particles, reject_redundant_clusters, reject_small_clusters_with, remove_in_cluster_outliers,
    run_filter, Cluster, FilterOutcome, InitKind,
};
use crate::dimensioning::{compare_to_ground_truth, reconstruct_staircase, ErrorReport, StairEstimate};
use crate::error::{Error, Result};
use crate::radar_math::{max_range, range_resolution};
use crate::range_processing::{assemble_intensity_map, cfar_scan, compute_range_profiles, IntensityMap, RangeProfile};
use crate::rng::{stream, Stage};
use crate::scene_sim::simulate_scan;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Detected,
    /// No step survived, or the map offered nothing to seed the filter.
    NoStairs { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterSummary {
    pub init_kind: InitKind,
    pub num_particles: usize,
    pub iterations_run: usize,
    /// Round at which the metric first reached the threshold (0 = at init).
    pub iterations_to_converge: Option<usize>,
    pub metric_history: Vec<f64>,
    pub unique_particles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterCounts {
    pub raw: usize,
    pub after_small_rejection: usize,
    pub after_redundancy_rejection: usize,
}

/// Deterministic results document of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResults {
    pub seed: u64,
    pub range_resolution: f64,
    pub max_range: f64,
    pub num_beams: usize,
    pub cfar_applied: bool,
    pub map_cells: [usize; 2],
    pub outcome: Outcome,
    pub filter: Option<FilterSummary>,
    pub clusters: ClusterCounts,
    pub estimate: StairEstimate,
    pub ground_truth: ErrorReport,
}

/// Results plus the intermediate products used by the exporters.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub results: RunResults,
    pub profiles: Vec<RangeProfile>,
    pub map: IntensityMap,
    pub filter: Option<FilterOutcome>,
    pub clusters: Vec<Cluster>,
}

impl PipelineReport {
    pub fn detected(&self) -> bool {
        self.results.outcome == Outcome::Detected
    }

    pub fn results_json(&self) -> String {
        serde_json::to_string_pretty(&self.results).expect("results serialise")
    }
}

fn is_seeding_failure(e: &Error) -> bool {
    matches!(e, Error::NothingToSample | Error::InsufficientCandidates { .. })
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    if let Some(v) = validate_config(config).into_iter().next() {
        return Err(v.into());
    }
    let seed = config.effective_seed();
    let geometry = &config.scanner;
    let signals = simulate_scan(&config.scene, &config.radar, geometry, seed);
    let raw = compute_range_profiles(&signals, &config.radar)?;
    let cfar_applied = config.cfar.enabled;
    let profiles = if cfar_applied {
        cfar_scan(&raw, &config.cfar.params(), geometry)?
    } else {
        raw
    };
    let map = assemble_intensity_map(&profiles, geometry, config.map.cell_size, cfar_applied)?;

    let mut rng = stream(seed, Stage::FilterInit, 0);
    let (filter, outcome_hint) = match run_filter(&map, &config.filter, &mut rng) {
        Ok(f) => (Some(f), None),
        Err(e) if is_seeding_failure(&e) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };

    let mut counts = ClusterCounts {
        raw: 0,
        after_small_rejection: 0,
        after_redundancy_rejection: 0,
    };
    let mut clusters = Vec::new();
    if let Some(f) = filter.as_ref().filter(|f| !f.particles.is_empty()) {
        let cc = &config.clustering;
        let raw = cluster_particles(&f.particles, cc.rho, cc.tau_max)?;
        counts.raw = raw.len();
        let kept = reject_small_clusters_with(raw, cc.small_cluster_fraction);
        counts.after_small_rejection = kept.len();
        let cleaned: Vec<Cluster> = kept.into_iter().map(remove_in_cluster_outliers).collect();
        clusters = reject_redundant_clusters(cleaned, cc.redundancy_threshold, cc.redundancy_predicate);
        counts.after_redundancy_rejection = clusters.len();
    }

    let estimate = reconstruct_staircase(&clusters, geometry)?;
    let ground_truth = compare_to_ground_truth(&estimate, &config.scene);
    let outcome = match outcome_hint {
        Some(reason) => Outcome::NoStairs { reason },
        None if estimate.is_empty() => Outcome::NoStairs {
            reason: "no cluster survived rejection".into(),
        },
        None => Outcome::Detected,
    };
    let results = RunResults {
        seed,
        range_resolution: range_resolution(&config.radar)?,
        max_range: max_range(&config.radar)?,
        num_beams: geometry.num_beams(),
        cfar_applied,
        map_cells: [map.nx, map.ny],
        outcome,
        filter: filter.as_ref().map(|f| FilterSummary {
            init_kind: config.filter.init_kind,
            num_particles: config.filter.num_particles,
            iterations_run: f.iterations_run,
            iterations_to_converge: f.iterations_to_converge,
            metric_history: f.metric_history.clone(),
            unique_particles: f.particles.len(),
        }),
        clusters: counts,
        estimate,
        ground_truth,
    };
    Ok(PipelineReport {
        results,
        profiles,
        map,
        filter,
        clusters,
    })
}
