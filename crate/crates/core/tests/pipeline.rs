mod common;

use stairscan::export::write_map_files;
use stairscan::pipeline::Outcome;
use stairscan::{run_pipeline, PipelineConfig, StairScene};

use common::{fixture, map_for, FIXTURES};

#[test]
fn fixtures_match_builtin_scenes() {
    let builtin = [StairScene::stair_a(), StairScene::stair_b(), StairScene::stair_c()];
    for (name, scene) in FIXTURES.iter().zip(builtin) {
        let cfg = fixture(name);
        assert_eq!(cfg.scene.steps, scene.steps, "{name}");
        assert_eq!(cfg.scene.reflectivity, scene.reflectivity, "{name}");
        assert_eq!(cfg.scene.floating, scene.floating, "{name}");
    }
}

#[test]
fn stair_a_map_shows_bright_riser_columns() {
    let cfg = fixture("stair_a");
    let map = map_for(&cfg, 1, true);
    let peak = map.max_power();
    for x in cfg.scene.riser_depths() {
        let (ix, _) = map.cell_of(stairscan::Point2::new(x, 0.05)).unwrap();
        let column_max = (0..map.ny)
            .flat_map(|iy| [ix.saturating_sub(1), ix, ix + 1].map(|c| map.cells[map.index(c.min(map.nx - 1), iy)]))
            .fold(map.floor, f64::max);
        // every riser shows up within 20 dB of the brightest return
        assert!(column_max > peak * 1e-2, "riser at {x}: {column_max} vs {peak}");
    }
}

#[test]
fn same_seed_same_results() {
    let cfg = PipelineConfig {
        seed: Some(9),
        ..fixture("stair_c")
    };
    assert_eq!(run_pipeline(&cfg).unwrap().results_json(), run_pipeline(&cfg).unwrap().results_json());
    let other = PipelineConfig {
        seed: Some(10),
        ..cfg.clone()
    };
    assert_ne!(run_pipeline(&cfg).unwrap().results_json(), run_pipeline(&other).unwrap().results_json());
}

#[test]
fn empty_fixture_reports_no_stairs() {
    let report = run_pipeline(&fixture("empty")).unwrap();
    assert!(matches!(report.results.outcome, Outcome::NoStairs { .. }));
    assert!(report.results.estimate.steps.is_empty());
    assert!(!report.detected());
}

#[test]
fn map_export_sidecar_describes_the_image() {
    let report = run_pipeline(&fixture("stair_a")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (pgm, json) = (dir.path().join("m.pgm"), dir.path().join("m.json"));
    write_map_files(&report.map, &pgm, &json).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    let (w, h) = (report.map.nx, report.map.ny);
    assert_eq!((meta["width"].as_u64(), meta["height"].as_u64()), (Some(w as u64), Some(h as u64)));
    let bytes = std::fs::read(pgm).unwrap();
    let header = format!("P5\n{w} {h}\n65535\n");
    assert!(bytes.starts_with(header.as_bytes()));
    assert_eq!(bytes.len(), header.len() + 2 * w * h);
}
