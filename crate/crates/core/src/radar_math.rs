//! Closed-form FMCW relations and the mirror-scanner world frame.
//!
//! World frame: origin on the ground directly below the mirror centre,
//! `x` pointing forward (depth), `y` pointing up (height). Beam angles are
//! given in degrees and are positive *below* the horizontal.

use serde::{Deserialize, Serialize};

use crate::error::{first_violation, invalid, Error, Result, Violation};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Chirp and waveform constants of the radar front end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarParams {
    /// Carrier frequency (Hz). Only informational: the scene is static.
    pub carrier_freq: f64,
    /// Sweep bandwidth B (Hz).
    pub bandwidth: f64,
    /// Samples per chirp N_s.
    pub samples_per_chirp: usize,
    /// Chirp duration (s).
    pub chirp_duration: f64,
    /// Propagation speed c (m/s).
    pub speed_of_light: f64,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            carrier_freq: 94.0e9,
            bandwidth: 10.0e9,
            samples_per_chirp: 200,
            chirp_duration: 1.0e-3,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

impl RadarParams {
    pub fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }

    /// Every constraint this value breaks.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            v.push(Violation::new("radar.bandwidth", "must be positive"));
        }
        if self.samples_per_chirp < 2 {
            v.push(Violation::new("radar.samples_per_chirp", "must be at least 2"));
        }
        if !(self.chirp_duration > 0.0) {
            v.push(Violation::new("radar.chirp_duration", "must be positive"));
        }
        if !(self.speed_of_light > 0.0) {
            v.push(Violation::new("radar.speed_of_light", "must be positive"));
        }
        v
    }

    /// Sample rate implied by `samples_per_chirp` over `chirp_duration`.
    pub fn sample_rate(&self) -> f64 {
        self.samples_per_chirp as f64 / self.chirp_duration
    }

    /// Beat frequency produced by a reflector at `range` metres.
    pub fn beat_frequency(&self, range: f64) -> f64 {
        2.0 * range * self.bandwidth / (self.speed_of_light * self.chirp_duration)
    }
}

/// Range resolution `c / 2B`.
pub fn range_resolution(params: &RadarParams) -> Result<f64> {
    if !(params.bandwidth > 0.0) {
        return Err(invalid("radar.bandwidth", "must be positive"));
    }
    Ok(params.speed_of_light / (2.0 * params.bandwidth))
}

/// Maximum unambiguous range `c N_s / 2B`.
pub fn max_range(params: &RadarParams) -> Result<f64> {
    if params.samples_per_chirp < 1 {
        return Err(invalid("radar.samples_per_chirp", "must be at least 1"));
    }
    Ok(params.samples_per_chirp as f64 * range_resolution(params)?)
}

/// Vertical displacement `d tan(theta)` swept by an angular step at distance `d`.
pub fn height_resolution(distance: f64, angle_deg: f64) -> Result<f64> {
    if !(distance >= 0.0) {
        return Err(invalid("distance", "must be non-negative"));
    }
    if !(angle_deg.abs() < 90.0) {
        return Err(invalid("angle", "must satisfy |angle| < 90 deg"));
    }
    Ok(distance * angle_deg.to_radians().tan())
}

/// A point in the sagittal plane (metres).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Mirror scanner layout and angular sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScannerGeometry {
    /// Radar lens to mirror centre (m).
    pub mirror_offset: f64,
    /// Mirror centre above ground (m).
    pub mount_height: f64,
    /// Full 3 dB aperture after the mirror (deg).
    pub mirror_aperture: f64,
    /// Mirror step between measurements (deg).
    pub angular_step: f64,
    /// First beam angle (deg, negative = above horizontal).
    pub angle_min: f64,
    /// Last beam angle (deg, positive = below horizontal).
    pub angle_max: f64,
}

impl Default for ScannerGeometry {
    fn default() -> Self {
        Self {
            mirror_offset: 0.22,
            mount_height: 0.40,
            mirror_aperture: 5.0,
            angular_step: 0.25,
            angle_min: -20.0,
            angle_max: 50.0,
        }
    }
}

impl ScannerGeometry {
    pub fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }

    /// Every constraint this value breaks.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.angle_min < self.angle_max) {
            v.push(Violation::new("scanner.angle_min", "must be below angle_max"));
        }
        if !(self.angular_step > 0.0) {
            v.push(Violation::new("scanner.angular_step", "must be positive"));
        }
        if !(self.mirror_aperture > 0.0) {
            v.push(Violation::new("scanner.mirror_aperture", "must be positive"));
        }
        if !(self.mirror_offset >= 0.0) {
            v.push(Violation::new("scanner.mirror_offset", "must be non-negative"));
        }
        if self.angle_min <= -90.0 || self.angle_max >= 90.0 {
            v.push(Violation::new("scanner.angle_max", "sweep must stay within (-90, 90) deg"));
        }
        v
    }

    /// Number of mirror positions in the sweep.
    pub fn num_beams(&self) -> usize {
        let span = (self.angle_max - self.angle_min) / self.angular_step;
        // tolerate representation error in spans that divide evenly
        (span + 1e-9).floor() as usize + 1
    }

    pub fn beam_angle(&self, index: usize) -> f64 {
        self.angle_min + index as f64 * self.angular_step
    }

    pub fn beam_angles(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.num_beams()).map(|i| self.beam_angle(i))
    }

    pub fn half_aperture(&self) -> f64 {
        0.5 * self.mirror_aperture
    }

    /// Mirror centre in world coordinates.
    pub fn mirror_center(&self) -> Point2 {
        Point2::new(0.0, self.mount_height)
    }
}

/// Map a reflection at `range_from_radar` on the beam at `beam_angle_deg`
/// into the world frame. The radar-to-mirror leg is removed here, once.
pub fn beam_to_world(
    range_from_radar: f64,
    beam_angle_deg: f64,
    geometry: &ScannerGeometry,
) -> Result<Point2> {
    if !(range_from_radar >= geometry.mirror_offset) {
        return Err(Error::InsideMirrorOffset {
            range: range_from_radar,
            mirror_offset: geometry.mirror_offset,
        });
    }
    let r = range_from_radar - geometry.mirror_offset;
    let (sin, cos) = beam_angle_deg.to_radians().sin_cos();
    Ok(Point2::new(r * cos, geometry.mount_height - r * sin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn with_bandwidth(b: f64) -> RadarParams {
        RadarParams {
            bandwidth: b,
            ..RadarParams::default()
        }
    }

    #[test]
    fn range_resolution_examples() {
        let p = RadarParams {
            speed_of_light: 3.0e8,
            ..RadarParams::default()
        };
        assert_eq!(range_resolution(&p).unwrap(), 0.015);
        // unit bandwidth scaling
        assert_eq!(range_resolution(&with_bandwidth(SPEED_OF_LIGHT / 2.0)).unwrap(), 1.0);
        // c / (2 * 5 GHz), quoted to the millimetre
        assert_abs_diff_eq!(range_resolution(&with_bandwidth(5.0e9)).unwrap(), 0.030, epsilon = 5e-5);
        assert!(range_resolution(&with_bandwidth(0.0)).is_err());
        assert!(range_resolution(&with_bandwidth(-1.0)).is_err());
    }

    #[test]
    fn max_range_examples() {
        let p = RadarParams {
            speed_of_light: 3.0e8,
            ..RadarParams::default()
        };
        assert_eq!(max_range(&p).unwrap(), 3.0);
        let p400 = RadarParams {
            samples_per_chirp: 400,
            ..p
        };
        assert_eq!(max_range(&p400).unwrap(), 6.0);
        let p1 = RadarParams {
            samples_per_chirp: 1,
            ..RadarParams::default()
        };
        assert_eq!(max_range(&p1).unwrap(), range_resolution(&p1).unwrap());
        let p0 = RadarParams {
            samples_per_chirp: 0,
            ..RadarParams::default()
        };
        assert!(max_range(&p0).is_err());
    }

    #[test]
    fn height_resolution_examples() {
        assert_eq!(height_resolution(2.7, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(height_resolution(1.0, 45.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(height_resolution(3.0, 0.25).unwrap(), 0.013090, epsilon = 5e-7);
        assert!(height_resolution(1.0, 90.0).is_err());
        assert!(height_resolution(1.0, -90.0).is_err());
        assert!(height_resolution(-1.0, 1.0).is_err());
    }

    #[test]
    fn default_sweep_has_281_beams() {
        let g = ScannerGeometry::default();
        assert_eq!(g.num_beams(), 281);
        assert_eq!(g.beam_angle(0), -20.0);
        assert_abs_diff_eq!(g.beam_angle(280), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn beam_to_world_examples() {
        let g = ScannerGeometry::default();
        let p = beam_to_world(1.22, 0.0, &g).unwrap();
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.40, epsilon = 1e-12);

        for angle in [-20.0, 0.0, 17.0, 50.0] {
            let p = beam_to_world(0.22, angle, &g).unwrap();
            assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p.y, 0.40, epsilon = 1e-12);
        }

        let p = beam_to_world(1.22, 30.0, &g).unwrap();
        assert_abs_diff_eq!(p.x, 0.8660, epsilon = 5e-5);
        assert_abs_diff_eq!(p.y, -0.1000, epsilon = 5e-5);

        assert!(matches!(
            beam_to_world(0.1, 0.0, &g),
            Err(Error::InsideMirrorOffset { .. })
        ));
    }

    proptest! {
        #[test]
        fn max_range_is_ns_bins(b in 1.0e6f64..1.0e11, ns in 2usize..4096) {
            let p = RadarParams { bandwidth: b, samples_per_chirp: ns, ..RadarParams::default() };
            let ratio = max_range(&p).unwrap() / range_resolution(&p).unwrap();
            prop_assert!((ratio - ns as f64).abs() <= 1e-9 * ns as f64);
        }

        #[test]
        fn height_resolution_monotone(d in 0.0f64..10.0, dd in 0.0f64..1.0, a in 0.0f64..89.0, da in 0.0f64..0.9) {
            let base = height_resolution(d, a).unwrap();
            prop_assert!(height_resolution(d + dd, a).unwrap() >= base);
            prop_assert!(height_resolution(d, a + da).unwrap() >= base);
        }

        #[test]
        fn horizontal_beam_keeps_mount_height(r in 0.22f64..10.0) {
            let g = ScannerGeometry::default();
            prop_assert_eq!(beam_to_world(r, 0.0, &g).unwrap().y, g.mount_height);
        }

        #[test]
        fn beam_is_distance_preserving(r1 in 0.22f64..5.0, r2 in 0.22f64..5.0, a in -20.0f64..50.0) {
            let g = ScannerGeometry::default();
            let p1 = beam_to_world(r1, a, &g).unwrap();
            let p2 = beam_to_world(r2, a, &g).unwrap();
            prop_assert!((p1.distance(&p2) - (r2 - r1).abs()).abs() < 1e-12);
        }
    }
}
