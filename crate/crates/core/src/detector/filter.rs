use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FilterConfig, InitKind, Particle, Scope};
use crate::error::{Error, Result};
use crate::radar_math::Point2;
use crate::range_processing::IntensityMap;

/// `n` particles on cell centres drawn uniformly from the above-floor cells.
pub fn init_uniform<R: Rng + ?Sized>(map: &IntensityMap, n: usize, rng: &mut R) -> Result<Vec<Particle>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let cells = map.above_floor();
    if cells.is_empty() {
        return Err(Error::NothingToSample);
    }
    Ok((0..n)
        .map(|_| {
            let i = cells[rng.random_range(0..cells.len())];
            let c = map.cell_center(i % map.nx, i / map.nx);
            Particle::new(c.x, c.y, map.cells[i])
        })
        .collect())
}

/// Pick `count` indices from `weights` without replacement, proportional to
/// weight, keeping picks at least `separation` apart when possible.
fn pick_mode_centers<R: Rng + ?Sized>(
    candidates: &[(usize, Point2, f64)],
    count: usize,
    separation: f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut taken = vec![false; candidates.len()];
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for _ in 0..count {
        let spaced = |j: usize| {
            chosen
                .iter()
                .all(|&c| candidates[c].1.distance(&candidates[j].1) >= separation)
        };
        let mut eligible: Vec<usize> = (0..candidates.len()).filter(|&j| !taken[j] && spaced(j)).collect();
        if eligible.is_empty() {
            eligible = (0..candidates.len()).filter(|&j| !taken[j]).collect();
        }
        let total: f64 = eligible.iter().map(|&j| candidates[j].2).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = *eligible.last().expect("pool holds at least `count` cells");
        for &j in &eligible {
            u -= candidates[j].2;
            if u < 0.0 {
                pick = j;
                break;
            }
        }
        taken[pick] = true;
        chosen.push(pick);
    }
    chosen
}

/// Gaussian multi-modal initialisation. Mode centres are drawn from the
/// brightest `mode_candidate_fraction` of hit cells, proportional to power and
/// spaced by `mode_separation`; each mode then scatters its share of the
/// particles around its centre with standard deviation `mode_sigma`.
pub fn init_gmm<R: Rng + ?Sized>(map: &IntensityMap, cfg: &FilterConfig, rng: &mut R) -> Result<Vec<Particle>> {
    let m = cfg.num_modes.max(1);
    let mut bright = map.above_floor();
    if bright.len() < m {
        return Err(Error::InsufficientCandidates {
            needed: m,
            found: bright.len(),
        });
    }
    bright.sort_by(|&a, &b| map.cells[b].total_cmp(&map.cells[a]).then(a.cmp(&b)));
    let hit = map.hit.iter().filter(|&&h| h).count();
    let pool = ((cfg.mode_candidate_fraction * hit as f64).ceil() as usize).max(m).min(bright.len());
    let candidates: Vec<(usize, Point2, f64)> = bright[..pool]
        .iter()
        .map(|&i| (i, map.cell_center(i % map.nx, i / map.nx), map.cells[i]))
        .collect();
    let centers = pick_mode_centers(&candidates, m, cfg.mode_separation, rng);

    let mut out = Vec::with_capacity(cfg.num_particles);
    for (mode, (&c, size)) in centers.iter().zip(cfg.mode_sizes()).enumerate() {
        let center = candidates[c].1;
        for _ in 0..size {
            let (dx, dy) = if cfg.mode_sigma > 0.0 {
                let zx: f64 = StandardNormal.sample(rng);
                let zy: f64 = StandardNormal.sample(rng);
                (cfg.mode_sigma * zx, cfg.mode_sigma * zy)
            } else {
                (0.0, 0.0)
            };
            let pos = map.clamp(Point2::new(center.x + dx, center.y + dy));
            out.push(Particle {
                mode,
                ..Particle::new(pos.x, pos.y, map.power_at(pos))
            });
        }
    }
    Ok(out)
}

fn group_key(p: &Particle, scope: Scope) -> usize {
    match scope {
        Scope::Global => 0,
        Scope::PerMode => p.mode,
    }
}

fn normalize_by(particles: &mut [Particle], scope: Scope, key: impl Fn(&Particle) -> f64) -> Result<()> {
    let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
    for p in particles.iter() {
        *sums.entry(group_key(p, scope)).or_default() += key(p);
    }
    if let Some((&group, _)) = sums.iter().find(|(_, &s)| !(s > 0.0 && s.is_finite())) {
        return Err(Error::ZeroWeights { group });
    }
    for p in particles.iter_mut() {
        p.w = key(p) / sums[&group_key(p, scope)];
    }
    Ok(())
}

/// `w_i = p_i / sum(p)` within each scope group.
pub fn normalize_weights(particles: &mut [Particle], scope: Scope) -> Result<()> {
    normalize_by(particles, scope, |p| p.p)
}

/// Multinomial resampling with replacement; each scope group keeps its size.
pub fn resample<R: Rng + ?Sized>(particles: &[Particle], rng: &mut R, scope: Scope) -> Result<Vec<Particle>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, p) in particles.iter().enumerate() {
        groups.entry(group_key(p, scope)).or_default().push(i);
    }
    let mut out = Vec::with_capacity(particles.len());
    for (group, members) in groups {
        let mut cdf = Vec::with_capacity(members.len());
        let mut acc = 0.0;
        for &i in &members {
            acc += particles[i].w;
            cdf.push(acc);
        }
        if !((acc - 1.0).abs() <= 1e-6) || particles.iter().any(|p| p.w < 0.0) {
            return Err(Error::Unnormalized { group, sum: acc });
        }
        let n = members.len();
        for _ in 0..n {
            let u = rng.random::<f64>() * acc;
            let k = cdf.partition_point(|&c| c <= u).min(n - 1);
            out.push(Particle {
                w: 1.0 / n as f64,
                ..particles[members[k]]
            });
        }
    }
    Ok(out)
}

/// Drop exact `(x, y, p)` repeats, keeping first occurrences in order.
pub fn dedupe(particles: &[Particle]) -> Vec<Particle> {
    let mut seen = HashSet::with_capacity(particles.len());
    particles
        .iter()
        .filter(|p| seen.insert((p.x.to_bits(), p.y.to_bits(), p.p.to_bits())))
        .copied()
        .collect()
}

/// Cells within 3 dB of the strongest cell in their neighbourhood.
#[derive(Debug, Clone)]
pub struct PeakMask {
    mask: Vec<bool>,
}

impl PeakMask {
    pub fn new(map: &IntensityMap, window: usize) -> Self {
        let (nx, ny) = (map.nx, map.ny);
        // separable running max: rows, then columns
        let mut rows = vec![0.0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let lo = ix.saturating_sub(window);
                let hi = (ix + window).min(nx - 1);
                rows[iy * nx + ix] = (lo..=hi).map(|j| map.cells[iy * nx + j]).fold(f64::NEG_INFINITY, f64::max);
            }
        }
        let mut mask = vec![false; nx * ny];
        for iy in 0..ny {
            let lo = iy.saturating_sub(window);
            let hi = (iy + window).min(ny - 1);
            for ix in 0..nx {
                let local = (lo..=hi).map(|k| rows[k * nx + ix]).fold(f64::NEG_INFINITY, f64::max);
                let i = iy * nx + ix;
                let c = map.cells[i];
                mask[i] = map.hit[i] && c > map.floor && c >= 0.5 * local;
            }
        }
        Self { mask }
    }

    pub fn contains(&self, map: &IntensityMap, p: Point2) -> bool {
        map.cell_of(p).is_some_and(|(ix, iy)| self.mask[map.index(ix, iy)])
    }
}

/// Fraction of particles on cells within 3 dB of a local map maximum.
pub fn convergence_metric(particles: &[Particle], peaks: &PeakMask, map: &IntensityMap) -> f64 {
    if particles.is_empty() {
        return 0.0;
    }
    let on_peak = particles.iter().filter(|p| peaks.contains(map, p.position())).count();
    on_peak as f64 / particles.len() as f64
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    /// Final population after deduplication.
    pub particles: Vec<Particle>,
    /// Population after initialisation and after each resampling round.
    pub snapshots: Vec<Vec<Particle>>,
    /// Convergence metric for each entry of `snapshots`.
    pub metric_history: Vec<f64>,
    /// First round at which the metric reached the configured threshold.
    pub iterations_to_converge: Option<usize>,
    pub iterations_run: usize,
}

impl FilterOutcome {
    pub fn convergence(&self) -> f64 {
        self.metric_history.last().copied().unwrap_or(0.0)
    }
}

/// Initialise, then `iterations` rounds of (refresh power, normalise,
/// resample). Weights use power above the map floor, so particles on
/// floor cells are always replaced; a GMM mode with no particle above the
/// floor is dropped.
pub fn run_filter<R: Rng + ?Sized>(map: &IntensityMap, cfg: &FilterConfig, rng: &mut R) -> Result<FilterOutcome> {
    let scope = cfg.init_kind.scope();
    let mut particles = match cfg.init_kind {
        InitKind::Uniform => init_uniform(map, cfg.num_particles, rng)?,
        InitKind::Gmm => init_gmm(map, cfg, rng)?,
    };
    let peaks = PeakMask::new(map, cfg.peak_window);
    let iterations = cfg.effective_iterations(map.cfar_applied);
    let mut metric_history = vec![convergence_metric(&particles, &peaks, map)];
    let mut snapshots = vec![particles.clone()];
    let floor = map.floor;
    let excess = |p: &Particle| (p.p - floor).max(0.0);

    for _ in 0..iterations {
        for p in particles.iter_mut() {
            p.p = map.power_at(p.position());
        }
        let mut alive: BTreeMap<usize, f64> = BTreeMap::new();
        for p in &particles {
            *alive.entry(group_key(p, scope)).or_default() += excess(p);
        }
        particles.retain(|p| alive[&group_key(p, scope)] > 0.0);
        if particles.is_empty() {
            return Err(Error::NothingToSample);
        }
        normalize_by(&mut particles, scope, excess)?;
        particles = resample(&particles, rng, scope)?;
        metric_history.push(convergence_metric(&particles, &peaks, map));
        snapshots.push(particles.clone());
    }

    let iterations_to_converge = metric_history.iter().position(|&m| m >= cfg.convergence_threshold);
    Ok(FilterOutcome {
        particles: dedupe(&particles),
        snapshots,
        metric_history,
        iterations_to_converge,
        iterations_run: iterations,
    })
}
