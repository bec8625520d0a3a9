//! Parametric staircase scenes and FMCW beat-signal synthesis.
//!
//! A scene is reduced to point scatterers: samples along each riser face,
//! a bright scatterer on every step edge, weak tread samples and any
//! user-supplied clutter. Each mirror position then sees the scatterers
//! inside its half-aperture and receives one tone per scatterer.
//!
//! Beat signals are complex baseband (I/Q) so that all `N_s` FFT bins map to
//! positive ranges `k * r_res`, `0 <= k < N_s`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{first_violation, Result, Violation};
use crate::radar_math::{max_range, Point2, RadarParams, ScannerGeometry};
use crate::rng::{self, Stage};

/// One stair step: horizontal tread and vertical riser (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub tread_depth: f64,
    pub riser_height: f64,
}

/// Amplitude scale per surface class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Reflectivity {
    pub riser: f64,
    pub tread: f64,
    pub edge: f64,
}

impl Default for Reflectivity {
    fn default() -> Self {
        Self {
            riser: 1.0,
            tread: 0.2,
            edge: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scatterer {
    pub position: Point2,
    pub amplitude: f64,
}

impl Scatterer {
    pub fn new(x: f64, y: f64, amplitude: f64) -> Self {
        Self {
            position: Point2::new(x, y),
            amplitude,
        }
    }
}

/// Ground-truth staircase plus the noise and clutter model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StairScene {
    /// Horizontal distance from the mirror axis to the first riser (m).
    pub standoff: f64,
    pub steps: Vec<Step>,
    /// Open risers: only the tread slab front and the edge reflect.
    pub floating: bool,
    /// Slab thickness used for floating steps (m).
    pub slab_thickness: f64,
    pub reflectivity: Reflectivity,
    /// Complex noise power per sample (linear).
    pub noise_floor: f64,
    pub clutter: Vec<Scatterer>,
    /// Surface sampling interval (m).
    pub scatterer_spacing: f64,
    /// DC term injected in every beat signal, relative to its strongest tone.
    pub dc_offset_factor: f64,
    pub rng_seed: u64,
}

impl Default for StairScene {
    fn default() -> Self {
        Self::stair_a()
    }
}

impl StairScene {
    /// Wooden staircase: three closed risers.
    pub fn stair_a() -> Self {
        Self {
            standoff: 0.5,
            steps: vec![
                Step {
                    tread_depth: 0.28,
                    riser_height: 0.17
                };
                3
            ],
            floating: false,
            slab_thickness: 0.04,
            reflectivity: Reflectivity::default(),
            noise_floor: 1.0,
            clutter: Vec::new(),
            scatterer_spacing: 0.005,
            dc_offset_factor: 10.0,
            rng_seed: 1,
        }
    }

    /// Dark ceramic staircase: weaker returns and some clutter.
    pub fn stair_b() -> Self {
        Self {
            steps: vec![
                Step {
                    tread_depth: 0.30,
                    riser_height: 0.16
                };
                3
            ],
            reflectivity: Reflectivity {
                riser: 0.6,
                tread: 0.12,
                edge: 1.8,
            },
            clutter: vec![
                Scatterer::new(1.9, 1.1, 0.3),
                Scatterer::new(2.3, -0.2, 0.4),
                Scatterer::new(0.2, -0.05, 0.1),
            ],
            ..Self::stair_a()
        }
    }

    /// Floating steps: slabs without risers.
    pub fn stair_c() -> Self {
        Self {
            steps: vec![
                Step {
                    tread_depth: 0.26,
                    riser_height: 0.18
                };
                3
            ],
            floating: true,
            ..Self::stair_a()
        }
    }

    /// A scene with nothing in it.
    pub fn empty() -> Self {
        Self {
            steps: Vec::new(),
            noise_floor: 0.0,
            ..Self::stair_a()
        }
    }

    /// Horizontal position of each riser (m, world frame).
    pub fn riser_depths(&self) -> Vec<f64> {
        self.steps
            .iter()
            .scan(self.standoff, |x, s| {
                let here = *x;
                *x += s.tread_depth;
                Some(here)
            })
            .collect()
    }

    /// Height of each step top above ground (m).
    pub fn top_heights(&self) -> Vec<f64> {
        self.steps
            .iter()
            .scan(0.0, |y, s| {
                *y += s.riser_height;
                Some(*y)
            })
            .collect()
    }

    pub fn validate(&self, params: &RadarParams, geometry: &ScannerGeometry) -> Result<()> {
        first_violation(self.violations(params, geometry))
    }

    /// Every constraint this value breaks.
    pub fn violations(&self, params: &RadarParams, geometry: &ScannerGeometry) -> Vec<Violation> {
        let mut v = Vec::new();
        for s in &self.steps {
            if !(s.tread_depth > 0.0) {
                v.push(Violation::new("scene.steps.tread_depth", "must be positive"));
            }
            if !(s.riser_height > 0.0) {
                v.push(Violation::new("scene.steps.riser_height", "must be positive"));
            }
        }
        if !(self.standoff > geometry.mirror_offset) {
            v.push(Violation::new("scene.standoff", "must exceed the mirror offset"));
        }
        if !(self.noise_floor >= 0.0) {
            v.push(Violation::new("scene.noise_floor", "must be non-negative"));
        }
        if !(self.scatterer_spacing > 0.0) {
            v.push(Violation::new("scene.scatterer_spacing", "must be positive"));
        }
        if self.floating && !(self.slab_thickness > 0.0) {
            v.push(Violation::new("scene.slab_thickness", "must be positive"));
        }
        let r = &self.reflectivity;
        if !(r.riser >= 0.0 && r.tread >= 0.0 && r.edge >= 0.0) {
            v.push(Violation::new("scene.reflectivity", "must be non-negative"));
        }
        if self.clutter.iter().any(|c| !(c.amplitude >= 0.0)) {
            v.push(Violation::new("scene.clutter", "amplitudes must be non-negative"));
        }
        if !self.steps.is_empty() {
            let far = self.standoff + self.steps.iter().map(|s| s.tread_depth).sum::<f64>();
            if params.violations().is_empty() && far > max_range(params).unwrap_or(f64::INFINITY) {
                v.push(Violation::new("scene.steps", "staircase extends beyond max range"));
            }
        }
        v
    }
}

fn segment_count(length: f64, spacing: f64) -> usize {
    // guard against 0.17 / 0.005 = 34.000000000000004
    ((length / spacing) - 1e-9).ceil().max(0.0) as usize
}

/// Vertical face from `y0` to `y1` at `x`, both ends included.
fn vertical_face(
    out: &mut Vec<Scatterer>,
    x: f64,
    y0: f64,
    y1: f64,
    spacing: f64,
    reflectivity: f64,
    mirror: Point2,
) {
    let n = segment_count(y1 - y0, spacing);
    for j in 0..=n {
        let y = if n == 0 { y1 } else { y0 + (y1 - y0) * j as f64 / n as f64 };
        let dx = x - mirror.x;
        let dist = dx.hypot(y - mirror.y);
        // riser normal is horizontal
        let cos_incidence = if dist > 0.0 { (dx / dist).abs() } else { 1.0 };
        out.push(Scatterer::new(x, y, reflectivity * cos_incidence));
    }
}

/// Point scatterers for every reflecting surface of `scene`.
pub fn build_scatterers(scene: &StairScene, geometry: &ScannerGeometry) -> Vec<Scatterer> {
    let mirror = geometry.mirror_center();
    let spacing = scene.scatterer_spacing;
    let refl = scene.reflectivity;
    let mut out = Vec::new();
    let mut base = 0.0;
    for (step, x) in scene.steps.iter().zip(scene.riser_depths()) {
        let top = base + step.riser_height;
        // faces stop one spacing short of the edge, which gets its own scatterer
        if scene.floating {
            let bottom = (top - scene.slab_thickness).max(base);
            if top - bottom > spacing {
                vertical_face(&mut out, x, bottom, top - spacing, spacing, refl.riser, mirror);
            }
        } else {
            let n = segment_count(step.riser_height, spacing);
            let before = out.len();
            vertical_face(&mut out, x, base, top, spacing, refl.riser, mirror);
            debug_assert_eq!(out.len() - before, n + 1);
        }
        out.push(Scatterer::new(x, top, refl.edge));
        let n = segment_count(step.tread_depth, spacing);
        for j in 1..=n {
            let tx = x + step.tread_depth * j as f64 / n as f64;
            out.push(Scatterer::new(tx, top, refl.tread));
        }
        base = top;
    }
    out.extend(scene.clutter.iter().copied());
    out
}

/// Riser-face scatterer count for one step, edge excluded.
pub fn riser_scatterer_count(riser_height: f64, spacing: f64) -> usize {
    segment_count(riser_height, spacing) + 1
}

/// One chirp's worth of down-converted samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatSignal {
    pub samples: Vec<Complex64>,
    pub beam_angle: f64,
}

/// A reflection already resolved to a total path range and amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Echo {
    /// Range from the radar (m), mirror leg included.
    pub range: f64,
    /// Received amplitude after attenuation.
    pub amplitude: f64,
}

/// Echoes seen by the beam at `beam_angle_deg`.
pub fn echoes_in_beam(
    scatterers: &[Scatterer],
    beam_angle_deg: f64,
    params: &RadarParams,
    geometry: &ScannerGeometry,
) -> Vec<Echo> {
    let r_max = max_range(params).unwrap_or(f64::INFINITY);
    let mirror = geometry.mirror_center();
    let half = geometry.half_aperture();
    scatterers
        .iter()
        .filter_map(|s| {
            let dx = s.position.x - mirror.x;
            let dy = s.position.y - mirror.y;
            let dist = dx.hypot(dy);
            let angle_below = (-dy).atan2(dx).to_degrees();
            let range = geometry.mirror_offset + dist;
            if (angle_below - beam_angle_deg).abs() > half || range > r_max || range <= 0.0 {
                return None;
            }
            Some(Echo {
                range,
                amplitude: s.amplitude / (range * range),
            })
        })
        .collect()
}

/// Sum of tones for `echoes` with random phases, complex Gaussian noise of
/// power `noise_floor` and a DC term `dc_offset_factor` times the strongest tone.
pub fn synthesize_echoes<R: Rng + ?Sized>(
    echoes: &[Echo],
    params: &RadarParams,
    noise_floor: f64,
    dc_offset_factor: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let n = params.samples_per_chirp;
    let dt = params.chirp_duration / n as f64;
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    let mut strongest: f64 = 0.0;
    for echo in echoes {
        let phase = rng.random::<f64>() * TAU;
        let omega = TAU * params.beat_frequency(echo.range) * dt;
        strongest = strongest.max(echo.amplitude);
        for (i, s) in samples.iter_mut().enumerate() {
            *s += Complex64::from_polar(echo.amplitude, omega * i as f64 + phase);
        }
    }
    if noise_floor > 0.0 {
        let normal = Normal::new(0.0, (0.5 * noise_floor).sqrt()).expect("finite sigma");
        for s in samples.iter_mut() {
            *s += Complex64::new(normal.sample(rng), normal.sample(rng));
        }
    }
    let dc = dc_offset_factor * strongest;
    if dc != 0.0 {
        for s in samples.iter_mut() {
            s.re += dc;
        }
    }
    samples
}

pub fn synthesize_beat<R: Rng + ?Sized>(
    scatterers: &[Scatterer],
    beam_angle_deg: f64,
    params: &RadarParams,
    geometry: &ScannerGeometry,
    noise_floor: f64,
    dc_offset_factor: f64,
    rng: &mut R,
) -> BeatSignal {
    let echoes = echoes_in_beam(scatterers, beam_angle_deg, params, geometry);
    BeatSignal {
        samples: synthesize_echoes(&echoes, params, noise_floor, dc_offset_factor, rng),
        beam_angle: beam_angle_deg,
    }
}

/// Full mirror sweep. Each beam draws from its own `(seed, beam)` stream, so
/// the result does not depend on thread scheduling.
pub fn simulate_scan(
    scene: &StairScene,
    params: &RadarParams,
    geometry: &ScannerGeometry,
    seed: u64,
) -> Vec<BeatSignal> {
    let scatterers = build_scatterers(scene, geometry);
    (0..geometry.num_beams())
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, Stage::Scan, i as u64);
            synthesize_beat(
                &scatterers,
                geometry.beam_angle(i),
                params,
                geometry,
                scene.noise_floor,
                scene.dc_offset_factor,
                &mut rng,
            )
        })
        .collect()
}
