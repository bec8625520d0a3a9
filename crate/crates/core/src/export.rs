//! File artefacts: map image, profile and particle tables, overlay.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::detector::Particle;
use crate::dimensioning::StairEstimate;
use crate::error::Result;
use crate::range_processing::{Extent, IntensityMap, RangeProfile};
use crate::scene_sim::StairScene;

/// Sidecar describing how PGM grey levels map back to the world and to power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapMeta {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub extent: Extent,
    /// Row 0 of the image is the highest `y`.
    pub top_row_y: f64,
    /// Power (dB) at grey level 0 and 65535.
    pub db_min: f64,
    pub db_max: f64,
    pub floor: f64,
    pub cfar_applied: bool,
}

fn db(p: f64) -> f64 {
    10.0 * p.log10()
}

fn db_range(map: &IntensityMap) -> (f64, f64) {
    let min_pos = map.cells.iter().copied().filter(|&c| c > 0.0).fold(f64::INFINITY, f64::min);
    let max = map.max_power();
    if !min_pos.is_finite() || !(max > 0.0) {
        return (0.0, 0.0);
    }
    (db(min_pos), db(max))
}

/// Grey level of every cell, row 0 at the top of the map.
fn grey_levels(map: &IntensityMap) -> (Vec<u16>, f64, f64) {
    let (lo, hi) = db_range(map);
    let span = hi - lo;
    let mut out = Vec::with_capacity(map.nx * map.ny);
    for row in 0..map.ny {
        let iy = map.ny - 1 - row;
        for ix in 0..map.nx {
            let c = map.cells[map.index(ix, iy)];
            let g = if c > 0.0 && span > 0.0 {
                ((db(c) - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else if c > 0.0 {
                u16::MAX
            } else {
                0
            };
            out.push(g);
        }
    }
    (out, lo, hi)
}

/// Binary 16-bit PGM of the log-scaled map.
pub fn write_map_pgm<W: Write>(map: &IntensityMap, mut w: W) -> Result<MapMeta> {
    let (grey, db_min, db_max) = grey_levels(map);
    write!(w, "P5\n{} {}\n65535\n", map.nx, map.ny)?;
    let mut bytes = Vec::with_capacity(grey.len() * 2);
    for g in grey {
        bytes.extend_from_slice(&g.to_be_bytes());
    }
    w.write_all(&bytes)?;
    Ok(MapMeta {
        width: map.nx,
        height: map.ny,
        cell_size: map.cell_size,
        extent: map.extent(),
        top_row_y: map.origin.y + (map.ny as f64 - 0.5) * map.cell_size,
        db_min,
        db_max,
        floor: map.floor,
        cfar_applied: map.cfar_applied,
    })
}

pub fn write_map_files(map: &IntensityMap, pgm: &Path, sidecar: &Path) -> Result<()> {
    let meta = write_map_pgm(map, BufWriter::new(File::create(pgm)?))?;
    let json = serde_json::to_string_pretty(&meta).expect("meta serialises");
    std::fs::write(sidecar, json)?;
    Ok(())
}

pub fn write_profiles_csv<W: Write>(profiles: &[RangeProfile], mut w: W) -> Result<()> {
    writeln!(w, "beam,angle_deg,bin,range_m,power")?;
    for (beam, p) in profiles.iter().enumerate() {
        for (bin, power) in p.powers.iter().enumerate() {
            writeln!(w, "{beam},{},{bin},{},{power}", p.beam_angle, p.range_of(bin))?;
        }
    }
    Ok(())
}

/// One row per particle per snapshot; iteration 0 is the initial population.
pub fn write_particles_csv<W: Write>(snapshots: &[Vec<Particle>], mut w: W) -> Result<()> {
    writeln!(w, "iter,x,y,p,w,mode")?;
    for (iter, snap) in snapshots.iter().enumerate() {
        for p in snap {
            writeln!(w, "{iter},{},{},{},{},{}", p.x, p.y, p.p, p.w, p.mode)?;
        }
    }
    Ok(())
}

const TRUTH: [u8; 3] = [0, 200, 0];
const ESTIMATE: [u8; 3] = [230, 30, 30];

struct Canvas<'a> {
    map: &'a IntensityMap,
    rgb: Vec<u8>,
}

impl Canvas<'_> {
    fn put(&mut self, x: f64, y: f64, colour: [u8; 3]) {
        if let Some((ix, iy)) = self.map.cell_of(crate::radar_math::Point2::new(x, y)) {
            let row = self.map.ny - 1 - iy;
            let i = 3 * (row * self.map.nx + ix);
            self.rgb[i..i + 3].copy_from_slice(&colour);
        }
    }

    fn line(&mut self, (x0, y0): (f64, f64), (x1, y1): (f64, f64), colour: [u8; 3]) {
        let len = (x1 - x0).hypot(y1 - y0);
        let n = (len / (0.5 * self.map.cell_size)).ceil().max(1.0) as usize;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            self.put(x0 + t * (x1 - x0), y0 + t * (y1 - y0), colour);
        }
    }
}

/// Colour PPM: map in grey, true profile in green, estimated step corners
/// as red crosses.
pub fn write_overlay_ppm<W: Write>(
    map: &IntensityMap,
    scene: &StairScene,
    estimate: &StairEstimate,
    mut w: W,
) -> Result<()> {
    let (grey, _, _) = grey_levels(map);
    let mut canvas = Canvas {
        map,
        rgb: grey.iter().flat_map(|&g| [(g >> 8) as u8; 3]).collect(),
    };

    let mut x = scene.standoff;
    let mut y = 0.0;
    let far = map.extent().x_max;
    canvas.line((map.extent().x_min.max(0.0), 0.0), (x, 0.0), TRUTH);
    for s in &scene.steps {
        canvas.line((x, y), (x, y + s.riser_height), TRUTH);
        y += s.riser_height;
        canvas.line((x, y), (x + s.tread_depth, y), TRUTH);
        x += s.tread_depth;
    }
    if !scene.steps.is_empty() {
        canvas.line((x, y), (far, y), TRUTH);
    }

    let arm = 3.0 * map.cell_size;
    for s in &estimate.steps {
        canvas.line((s.depth - arm, s.top_height), (s.depth + arm, s.top_height), ESTIMATE);
        canvas.line((s.depth, s.top_height - arm), (s.depth, s.top_height + arm), ESTIMATE);
    }

    write!(w, "P6\n{} {}\n255\n", map.nx, map.ny)?;
    w.write_all(&canvas.rgb)?;
    Ok(())
}
