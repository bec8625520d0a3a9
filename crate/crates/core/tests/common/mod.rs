#![allow(dead_code)]

use std::path::PathBuf;

use stairscan::range_processing::{assemble_intensity_map, cfar_scan, compute_range_profiles};
use stairscan::scene_sim::simulate_scan;
use stairscan::{IntensityMap, PipelineConfig};

pub const FIXTURES: [&str; 3] = ["stair_a", "stair_b", "stair_c"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.toml"))
}

pub fn fixture(name: &str) -> PipelineConfig {
    PipelineConfig::from_file(&fixture_path(name)).expect("fixture parses")
}

/// Intensity map the pipeline would build for `config` and `seed`.
pub fn map_for(config: &PipelineConfig, seed: u64, cfar: bool) -> IntensityMap {
    let signals = simulate_scan(&config.scene, &config.radar, &config.scanner, seed);
    let raw = compute_range_profiles(&signals, &config.radar).unwrap();
    let profiles = if cfar {
        cfar_scan(&raw, &config.cfar.params(), &config.scanner).unwrap()
    } else {
        raw
    };
    assemble_intensity_map(&profiles, &config.scanner, config.map.cell_size, cfar).unwrap()
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
