//! Range profiles, CA-CFAR and the sagittal-plane intensity map.

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{first_violation, invalid, Error, Result, Violation};
use crate::radar_math::{beam_to_world, range_resolution, Point2, RadarParams, ScannerGeometry};
use crate::scene_sim::BeatSignal;

/// Bins zeroed after DC removal (near-field and mirror leakage).
pub const BLANKED_BINS: usize = 3;

/// Power per range bin for one mirror position. Bin `k` sits at `k * bin_width`
/// from the radar.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub powers: Vec<f64>,
    pub bin_width: f64,
    pub beam_angle: f64,
}

impl RangeProfile {
    pub fn range_of(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width
    }

    pub fn argmax(&self) -> Option<usize> {
        self.powers
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }
}

/// FFT-based range processor; holds the FFT plan for repeated use.
pub struct RangeProcessor {
    fft: Arc<dyn Fft<f64>>,
    samples: usize,
    bin_width: f64,
}

impl RangeProcessor {
    pub fn new(params: &RadarParams) -> Result<Self> {
        params.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(params.samples_per_chirp);
        Ok(Self {
            fft,
            samples: params.samples_per_chirp,
            bin_width: range_resolution(params)?,
        })
    }

    /// Mean removal, `N_s`-point DFT, `|X_k|^2`, low-bin blanking.
    pub fn profile(&self, signal: &BeatSignal) -> Result<RangeProfile> {
        if signal.samples.len() != self.samples {
            return Err(Error::LengthMismatch {
                expected: self.samples,
                actual: signal.samples.len(),
            });
        }
        let n = self.samples as f64;
        let mean = signal.samples.iter().sum::<Complex64>() / n;
        let mut buf: Vec<Complex64> = signal.samples.iter().map(|s| s - mean).collect();
        self.fft.process(&mut buf);
        let mut powers: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
        for p in powers.iter_mut().take(BLANKED_BINS) {
            *p = 0.0;
        }
        Ok(RangeProfile {
            powers,
            bin_width: self.bin_width,
            beam_angle: signal.beam_angle,
        })
    }
}

pub fn compute_range_profile(signal: &BeatSignal, params: &RadarParams) -> Result<RangeProfile> {
    RangeProcessor::new(params)?.profile(signal)
}

pub fn compute_range_profiles(signals: &[BeatSignal], params: &RadarParams) -> Result<Vec<RangeProfile>> {
    let proc = RangeProcessor::new(params)?;
    signals.par_iter().map(|s| proc.profile(s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarParams {
    /// Training cells on each side of the cell under test.
    pub training_cells: usize,
    /// Guard cells on each side of the cell under test.
    pub guard_cells: usize,
    pub false_alarm_rate: f64,
}

impl Default for CfarParams {
    fn default() -> Self {
        Self {
            training_cells: 16,
            guard_cells: 2,
            false_alarm_rate: 1e-3,
        }
    }
}

impl CfarParams {
    pub fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }

    /// Every constraint this value breaks.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.training_cells < 1 {
            v.push(Violation::new("cfar.training_cells", "must be at least 1"));
        }
        if !(self.false_alarm_rate > 0.0 && self.false_alarm_rate < 1.0) {
            v.push(Violation::new("cfar.false_alarm_rate", "must lie in (0, 1)"));
        }
        v
    }

    pub fn window_len(&self) -> usize {
        2 * (self.training_cells + self.guard_cells) + 1
    }

    /// CA-CFAR scale for `n` averaged exponential cells.
    pub fn alpha(&self, n: usize) -> f64 {
        let n = n as f64;
        n * (self.false_alarm_rate.powf(-1.0 / n) - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfarOutput {
    pub threshold: Vec<f64>,
    pub mask: Vec<bool>,
}

impl CfarOutput {
    pub fn detections(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Cell-averaging CFAR over `powers`. Cells near either end average whatever
/// training cells exist on the open side and scale `alpha` to that count.
pub fn ca_cfar_powers(powers: &[f64], cfar: &CfarParams) -> Result<CfarOutput> {
    cfar.validate()?;
    let n = powers.len();
    if n <= cfar.window_len() {
        return Err(Error::ProfileTooShort {
            len: n,
            window: cfar.window_len(),
        });
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &p in powers {
        acc += p;
        prefix.push(acc);
    }
    let sum = |a: usize, b: usize| prefix[b] - prefix[a];
    let (t, g) = (cfar.training_cells, cfar.guard_cells);
    let mut threshold = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for (i, &power) in powers.iter().enumerate() {
        // leading side: [i-g-t, i-g)
        let lead_end = i.saturating_sub(g);
        let lead_start = i.saturating_sub(g + t);
        // lagging side: (i+g, i+g+t]
        let lag_start = (i + g + 1).min(n);
        let lag_end = (i + g + t + 1).min(n);
        let count = (lead_end - lead_start) + (lag_end - lag_start);
        let total = sum(lead_start, lead_end) + sum(lag_start, lag_end);
        let th = cfar.alpha(count) * total / count as f64;
        threshold.push(th);
        mask.push(power > th);
    }
    Ok(CfarOutput { threshold, mask })
}

pub fn ca_cfar(profile: &RangeProfile, cfar: &CfarParams) -> Result<CfarOutput> {
    ca_cfar_powers(&profile.powers, cfar)
}

/// Cells failing the mask drop to `floor`; detections pass through.
pub fn apply_cfar_floor(profile: &RangeProfile, mask: &[bool], floor: f64) -> Result<RangeProfile> {
    if mask.len() != profile.powers.len() {
        return Err(Error::LengthMismatch {
            expected: profile.powers.len(),
            actual: mask.len(),
        });
    }
    let powers = profile
        .powers
        .iter()
        .zip(mask)
        .map(|(&p, &keep)| if keep { p } else { floor })
        .collect();
    Ok(RangeProfile {
        powers,
        ..profile.clone()
    })
}

/// Bins that map in front of the mirror and survive blanking.
pub fn usable_bins(len: usize, bin_width: f64, geometry: &ScannerGeometry) -> Range<usize> {
    let first = (geometry.mirror_offset / bin_width - 1e-9).ceil().max(0.0) as usize;
    first.max(BLANKED_BINS).min(len)..len
}

/// Minimum received power over the usable bins of a scan.
pub fn scan_minimum(profiles: &[RangeProfile], geometry: &ScannerGeometry) -> f64 {
    profiles
        .iter()
        .flat_map(|p| {
            let r = usable_bins(p.powers.len(), p.bin_width, geometry);
            p.powers[r].iter().copied()
        })
        .fold(f64::INFINITY, f64::min)
}

/// CFAR every profile and floor the non-detections at the scan minimum.
pub fn cfar_scan(
    profiles: &[RangeProfile],
    cfar: &CfarParams,
    geometry: &ScannerGeometry,
) -> Result<Vec<RangeProfile>> {
    let floor = scan_minimum(profiles, geometry);
    profiles
        .par_iter()
        .map(|p| {
            let out = ca_cfar(p, cfar)?;
            apply_cfar_floor(p, &out.mask, floor)
        })
        .collect()
}

/// One (beam, bin) pair mapped into the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSample {
    pub position: Point2,
    pub power: f64,
    pub beam: usize,
    pub bin: usize,
}

/// World-mapped power field with a max-rasterised grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    pub samples: Vec<MapSample>,
    /// Lower-left corner of cell (0, 0).
    pub origin: Point2,
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `iy * nx + ix`, `iy` increasing with height.
    pub cells: Vec<f64>,
    pub hit: Vec<bool>,
    /// Scan-minimum power; also the value of cells no sample reached.
    pub floor: f64,
    pub cfar_applied: bool,
}

/// Axis-aligned extent (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl IntensityMap {
    pub fn extent(&self) -> Extent {
        Extent {
            x_min: self.origin.x,
            x_max: self.origin.x + self.nx as f64 * self.cell_size,
            y_min: self.origin.y,
            y_max: self.origin.y + self.ny as f64 * self.cell_size,
        }
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.cell_size,
            self.origin.y + (iy as f64 + 0.5) * self.cell_size,
        )
    }

    /// Grid power at `p`; the floor outside the map.
    pub fn power_at(&self, p: Point2) -> f64 {
        self.cell_of(p)
            .map(|(ix, iy)| self.cells[self.index(ix, iy)])
            .unwrap_or(self.floor)
    }

    /// Indices of cells strictly above the floor.
    pub fn above_floor(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&i| self.hit[i] && self.cells[i] > self.floor)
            .collect()
    }

    pub fn max_power(&self) -> f64 {
        self.cells.iter().copied().fold(self.floor, f64::max)
    }

    /// Clamp `p` into the map extent (cell centres of the border cells).
    pub fn clamp(&self, p: Point2) -> Point2 {
        let e = self.extent();
        let h = 0.5 * self.cell_size;
        Point2::new(p.x.clamp(e.x_min + h, e.x_max - h), p.y.clamp(e.y_min + h, e.y_max - h))
    }

    /// Same map with every power multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> IntensityMap {
        let mut m = self.clone();
        m.cells.iter_mut().for_each(|c| *c *= factor);
        m.samples.iter_mut().for_each(|s| s.power *= factor);
        m.floor *= factor;
        m
    }
}

/// Map every usable (beam, bin) through `beam_to_world` and rasterise by max.
pub fn assemble_intensity_map(
    profiles: &[RangeProfile],
    geometry: &ScannerGeometry,
    cell_size: f64,
    cfar_applied: bool,
) -> Result<IntensityMap> {
    if profiles.is_empty() {
        return Err(Error::EmptyScan);
    }
    if !(cell_size > 0.0) {
        return Err(invalid("map.cell_size", "must be positive"));
    }
    let mut samples = Vec::new();
    for (beam, profile) in profiles.iter().enumerate() {
        for bin in usable_bins(profile.powers.len(), profile.bin_width, geometry) {
            let position = beam_to_world(profile.range_of(bin), profile.beam_angle, geometry)?;
            samples.push(MapSample {
                position,
                power: profile.powers[bin],
                beam,
                bin,
            });
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyScan);
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut floor = f64::INFINITY;
    for s in &samples {
        x0 = x0.min(s.position.x);
        x1 = x1.max(s.position.x);
        y0 = y0.min(s.position.y);
        y1 = y1.max(s.position.y);
        floor = floor.min(s.power);
    }
    let origin = Point2::new((x0 / cell_size).floor() * cell_size, (y0 / cell_size).floor() * cell_size);
    let nx = ((x1 - origin.x) / cell_size).floor() as usize + 1;
    let ny = ((y1 - origin.y) / cell_size).floor() as usize + 1;
    let mut map = IntensityMap {
        samples: Vec::new(),
        origin,
        cell_size,
        nx,
        ny,
        cells: vec![floor; nx * ny],
        hit: vec![false; nx * ny],
        floor,
        cfar_applied,
    };
    for s in &samples {
        let (ix, iy) = map.cell_of(s.position).expect("sample inside its own bounding box");
        let i = map.index(ix, iy);
        if !map.hit[i] || s.power > map.cells[i] {
            map.cells[i] = s.power;
        }
        map.hit[i] = true;
    }
    map.samples = samples;
    Ok(map)
}
