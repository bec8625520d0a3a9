//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::{ClusteringConfig, FilterConfig};
use crate::error::{Error, Result, Violation};
use crate::radar_math::{RadarParams, ScannerGeometry};
use crate::range_processing::CfarParams;
use crate::scene_sim::StairScene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarConfig {
    pub enabled: bool,
    pub training_cells: usize,
    pub guard_cells: usize,
    pub false_alarm_rate: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        let p = CfarParams::default();
        Self {
            enabled: true,
            training_cells: p.training_cells,
            guard_cells: p.guard_cells,
            false_alarm_rate: p.false_alarm_rate,
        }
    }
}

impl CfarConfig {
    pub fn params(&self) -> CfarParams {
        CfarParams {
            training_cells: self.training_cells,
            guard_cells: self.guard_cells,
            false_alarm_rate: self.false_alarm_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Raster cell edge (m).
    pub cell_size: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { cell_size: 0.01 }
    }
}

/// Optional artefacts written next to the results file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dump {
    Profiles,
    Map,
    Particles,
    Overlay,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub dumps: Vec<Dump>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; falls back to `scene.rng_seed`.
    pub seed: Option<u64>,
    pub scene: StairScene,
    pub radar: RadarParams,
    pub scanner: ScannerGeometry,
    pub cfar: CfarConfig,
    pub filter: FilterConfig,
    pub clustering: ClusteringConfig,
    pub map: MapConfig,
    pub output: OutputConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.scene.rng_seed)
    }
}

/// Every violated constraint in `config`. Checks that depend on another
/// section run only when that section is itself valid.
pub fn validate_config(config: &PipelineConfig) -> Vec<Violation> {
    let radar = config.radar.violations();
    let scanner = config.scanner.violations();
    let mut v = Vec::new();
    if scanner.is_empty() {
        v.extend(config.scene.violations(&config.radar, &config.scanner));
    }
    let radar_ok = radar.is_empty();
    v.splice(0..0, radar);
    v.extend(scanner);
    let cfar = config.cfar.params();
    if config.cfar.enabled {
        let cv = cfar.violations();
        if cv.is_empty() && radar_ok && cfar.window_len() >= config.radar.samples_per_chirp {
            v.push(Violation::new(
                "cfar.training_cells",
                format!(
                    "window of {} cells does not fit in {} range bins",
                    cfar.window_len(),
                    config.radar.samples_per_chirp
                ),
            ));
        }
        v.extend(cv);
    }
    v.extend(config.filter.violations());
    v.extend(config.clustering.violations());
    if !(config.map.cell_size > 0.0) {
        v.push(Violation::new("map.cell_size", "must be positive"));
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(validate_config(&PipelineConfig::default()).is_empty());
    }

    #[test]
    fn reports_all_violations() {
        let mut c = PipelineConfig::default();
        c.radar.samples_per_chirp = 0;
        c.clustering.rho = 2.0;
        let v = validate_config(&c);
        assert_eq!(v.len(), 2, "{v:?}");
        assert_eq!(v[0].field, "radar.samples_per_chirp");
        assert_eq!(v[1].field, "clustering.rho");
    }

    #[test]
    fn modes_exceeding_particles() {
        let mut c = PipelineConfig::default();
        c.filter.num_particles = 5;
        c.filter.num_modes = 10;
        let v = validate_config(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "filter.num_particles");
    }

    #[test]
    fn cfar_window_checked_only_when_enabled() {
        let mut c = PipelineConfig::default();
        c.cfar.training_cells = 200;
        assert_eq!(validate_config(&c).len(), 1);
        c.cfar.enabled = false;
        assert!(validate_config(&c).is_empty());
    }

    #[test]
    fn toml_round_trip() {
        let c = PipelineConfig::default();
        let back = PipelineConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PipelineConfig::from_toml_str("[radar]\nbandwith = 1e9\n").unwrap_err();
        assert!(matches!(err, Error::Config(m) if m.contains("bandwith")));
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = PipelineConfig::from_toml_str("seed = 9\n[filter]\ninit_kind = \"uniform\"\n").unwrap();
        assert_eq!(c.effective_seed(), 9);
        assert_eq!(c.filter.num_particles, 1000);
    }
}
