use serde::{Deserialize, Serialize};

use super::{Cluster, Particle};
use crate::error::{first_violation, invalid, Error, Result, Violation};

/// How two cluster centroids are judged to describe the same step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedundancyPredicate {
    /// Close in depth and in height.
    And,
    /// Close in depth or in height.
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    /// Sensitivity in [0, 1]; higher splits more.
    pub rho: f64,
    /// Link distance at rho = 0 (m).
    pub tau_max: f64,
    pub redundancy_threshold: f64,
    pub redundancy_predicate: RedundancyPredicate,
    /// Clusters smaller than this fraction of the mean size are dropped.
    pub small_cluster_fraction: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            rho: 0.5,
            tau_max: 0.20,
            redundancy_threshold: 0.10,
            redundancy_predicate: RedundancyPredicate::And,
            small_cluster_fraction: 0.10,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }

    /// Every constraint this value breaks.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.rho) {
            v.push(Violation::new("clustering.rho", "must lie in [0, 1]"));
        }
        if !(self.tau_max > 0.0) {
            v.push(Violation::new("clustering.tau_max", "must be positive"));
        }
        if !(self.redundancy_threshold >= 0.0) {
            v.push(Violation::new("clustering.redundancy_threshold", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.small_cluster_fraction) {
            v.push(Violation::new("clustering.small_cluster_fraction", "must lie in [0, 1]"));
        }
        v
    }

    pub fn link_distance(&self) -> f64 {
        self.tau_max * (1.0 - self.rho)
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins, so labels follow first appearance
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage grouping: particles closer than `tau_max * (1 - rho)` are
/// chained into one cluster. Clusters come out in order of their first particle.
pub fn cluster_particles(particles: &[Particle], rho: f64, tau_max: f64) -> Result<Vec<Cluster>> {
    if particles.is_empty() {
        return Err(Error::EmptyInput("cluster_particles"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid("clustering.rho", "must lie in [0, 1]"));
    }
    let tau = tau_max * (1.0 - rho);
    let n = particles.len();
    // sort by x so each particle only scans neighbours within tau in x
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| particles[a].x.total_cmp(&particles[b].x).then(a.cmp(&b)));
    let mut sets = DisjointSet::new(n);
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if particles[j].x - particles[i].x > tau {
                break;
            }
            if particles[i].position().distance(&particles[j].position()) <= tau {
                sets.union(i, j);
            }
        }
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut groups: Vec<Vec<Particle>> = Vec::new();
    for (i, p) in particles.iter().enumerate() {
        let root = sets.find(i);
        if label_of_root[root] == usize::MAX {
            label_of_root[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[label_of_root[root]].push(*p);
    }
    Ok(groups.into_iter().map(Cluster::new).collect())
}

/// Drop clusters holding fewer than 10 % of the mean cluster size.
pub fn reject_small_clusters(clusters: Vec<Cluster>) -> Vec<Cluster> {
    reject_small_clusters_with(clusters, 0.10)
}

pub fn reject_small_clusters_with(clusters: Vec<Cluster>, fraction: f64) -> Vec<Cluster> {
    if clusters.is_empty() {
        return clusters;
    }
    let mean = clusters.iter().map(Cluster::size).sum::<usize>() as f64 / clusters.len() as f64;
    let cutoff = fraction * mean;
    clusters.into_iter().filter(|c| c.size() as f64 >= cutoff).collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median and normal-consistent MAD (1.4826 * MAD).
fn robust_spread(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut v: Vec<f64> = values.collect();
    let med = median(&mut v);
    let mut dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
    (med, 1.4826 * median(&mut dev))
}

/// Drop particles more than 3 scaled MADs from the cluster median in x or y.
pub fn remove_in_cluster_outliers(cluster: Cluster) -> Cluster {
    if cluster.size() <= 2 {
        return cluster;
    }
    let (mx, sx) = robust_spread(cluster.particles.iter().map(|p| p.x));
    let (my, sy) = robust_spread(cluster.particles.iter().map(|p| p.y));
    let keep = |p: &Particle| (p.x - mx).abs() <= 3.0 * sx && (p.y - my).abs() <= 3.0 * sy;
    let kept: Vec<Particle> = cluster.particles.iter().copied().filter(keep).collect();
    if kept.is_empty() {
        let closest = cluster
            .particles
            .iter()
            .min_by(|a, b| {
                let da = (a.x - mx).hypot(a.y - my);
                let db = (b.x - mx).hypot(b.y - my);
                da.total_cmp(&db)
            })
            .copied()
            .expect("non-empty cluster");
        return Cluster::new(vec![closest]);
    }
    if kept.len() == cluster.size() {
        return cluster;
    }
    Cluster::new(kept)
}

fn redundant(a: &Cluster, b: &Cluster, threshold: f64, predicate: RedundancyPredicate) -> bool {
    let dx = (a.centroid.x - b.centroid.x).abs() < threshold;
    let dy = (a.centroid.y - b.centroid.y).abs() < threshold;
    match predicate {
        RedundancyPredicate::And => dx && dy,
        RedundancyPredicate::Or => dx || dy,
    }
}

/// Keep the highest cluster of every redundant group. Candidates are taken
/// by descending centroid height (then size, then depth) and accepted only if
/// they are not redundant with an already accepted cluster. Survivors are
/// returned in ascending depth.
pub fn reject_redundant_clusters(
    clusters: Vec<Cluster>,
    threshold: f64,
    predicate: RedundancyPredicate,
) -> Vec<Cluster> {
    let mut ranked = clusters;
    ranked.sort_by(|a, b| {
        b.centroid
            .y
            .total_cmp(&a.centroid.y)
            .then(b.size().cmp(&a.size()))
            .then(a.centroid.x.total_cmp(&b.centroid.x))
    });
    let mut kept: Vec<Cluster> = Vec::new();
    for c in ranked {
        if kept.iter().all(|k| !redundant(k, &c, threshold, predicate)) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.centroid.x.total_cmp(&b.centroid.x));
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_math::Point2;
    use crate::rng::{stream, Stage};
    use proptest::prelude::*;
    use rand::Rng;

    fn blob(cx: f64, cy: f64, n: usize, spread: f64, seed: u64) -> Vec<Particle> {
        let mut rng = stream(seed, Stage::Test, 0);
        (0..n)
            .map(|_| {
                Particle::new(
                    cx + spread * (rng.random::<f64>() - 0.5),
                    cy + spread * (rng.random::<f64>() - 0.5),
                    1.0,
                )
            })
            .collect()
    }

    fn cluster_at(x: f64, y: f64, size: usize) -> Cluster {
        Cluster::new(vec![Particle::new(x, y, 1.0); size])
    }

    #[test]
    fn two_blobs_at_30cm_split() {
        let mut ps = blob(1.0, 0.2, 40, 0.04, 1);
        ps.extend(blob(1.30, 0.2, 40, 0.04, 2));
        // nearest cross-blob pair is at least 0.30 - 0.04 = 0.26 m apart
        let cs = cluster_particles(&ps, 0.5, 0.20).unwrap();
        assert_eq!(cs.len(), 2);
    }

    #[test]
    fn blobs_at_15cm_merge_at_rho_zero() {
        let mut ps = blob(1.0, 0.2, 40, 0.02, 3);
        ps.extend(blob(1.15, 0.2, 40, 0.02, 4));
        // farthest-apart nearest pair: 0.15 + 0.02 < 0.20
        assert_eq!(cluster_particles(&ps, 0.0, 0.20).unwrap().len(), 1);
        assert_eq!(cluster_particles(&ps, 0.5, 0.20).unwrap().len(), 2);
    }

    #[test]
    fn single_and_empty() {
        let cs = cluster_particles(&[Particle::new(0.3, 0.3, 1.0)], 0.5, 0.2).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].size(), 1);
        assert!(cluster_particles(&[], 0.5, 0.2).is_err());
        assert!(cluster_particles(&[Particle::new(0.0, 0.0, 1.0)], 2.0, 0.2).is_err());
    }

    #[test]
    fn small_cluster_cutoff() {
        let cs = vec![cluster_at(0.0, 0.0, 100), cluster_at(1.0, 0.0, 100), cluster_at(2.0, 0.0, 5)];
        // mean 68.33, cutoff 6.83
        let kept = reject_small_clusters(cs);
        assert_eq!(kept.iter().map(Cluster::size).collect::<Vec<_>>(), vec![100, 100]);

        let equal = vec![cluster_at(0.0, 0.0, 7), cluster_at(1.0, 0.0, 7)];
        assert_eq!(reject_small_clusters(equal).len(), 2);
        assert_eq!(reject_small_clusters(vec![cluster_at(0.0, 0.0, 1)]).len(), 1);
    }

    #[test]
    fn outlier_examples() {
        let same = cluster_at(0.5, 0.5, 12);
        assert_eq!(remove_in_cluster_outliers(same.clone()), same);

        let mut ps = blob(1.0, 0.2, 30, 0.02, 5);
        ps.push(Particle::new(2.0, 0.2, 1.0));
        let cleaned = remove_in_cluster_outliers(Cluster::new(ps));
        assert_eq!(cleaned.size(), 30);
        assert!(cleaned.particles.iter().all(|p| p.x < 1.5));

        let pair = Cluster::new(vec![Particle::new(0.0, 0.0, 1.0), Particle::new(0.1, 0.3, 1.0)]);
        assert_eq!(remove_in_cluster_outliers(pair.clone()), pair);
    }

    #[test]
    fn redundancy_examples() {
        let kept = reject_redundant_clusters(
            vec![cluster_at(1.00, 0.10, 10), cluster_at(1.04, 0.15, 10)],
            0.10,
            RedundancyPredicate::And,
        );
        assert_eq!(kept.len(), 1);
        assert!((kept[0].centroid.y - 0.15).abs() < 1e-12);

        let kept = reject_redundant_clusters(
            vec![cluster_at(1.28, 0.17, 10), cluster_at(1.00, 0.17, 10)],
            0.10,
            RedundancyPredicate::And,
        );
        assert_eq!(kept.len(), 2);
        assert!(kept[0].centroid.x < kept[1].centroid.x);

        let kept = reject_redundant_clusters(
            vec![cluster_at(1.0, 0.2, 10), cluster_at(1.0, 0.2, 12)],
            0.10,
            RedundancyPredicate::And,
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].size(), 12);

        // same height, far apart: only the OR reading merges them
        let row = vec![cluster_at(1.0, 0.2, 10), cluster_at(1.5, 0.2, 10)];
        assert_eq!(reject_redundant_clusters(row.clone(), 0.10, RedundancyPredicate::And).len(), 2);
        assert_eq!(reject_redundant_clusters(row, 0.10, RedundancyPredicate::Or).len(), 1);
    }

    fn cloud(seed: u64, n: usize) -> Vec<Particle> {
        let mut rng = stream(seed, Stage::Test, 1);
        (0..n)
            .map(|_| Particle::new(rng.random::<f64>() * 1.5, rng.random::<f64>() * 0.8, 0.1 + rng.random::<f64>()))
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn clustering_is_partition(seed in 0u64..10_000, n in 1usize..200, rho in 0.0f64..=1.0) {
            let ps = cloud(seed, n);
            let cs = cluster_particles(&ps, rho, 0.2).unwrap();
            let mut all: Vec<(u64, u64)> = cs.iter().flat_map(|c| c.particles.iter().map(|p| (p.x.to_bits(), p.y.to_bits()))).collect();
            let mut orig: Vec<(u64, u64)> = ps.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
            all.sort();
            orig.sort();
            prop_assert_eq!(all, orig);
            for c in &cs {
                prop_assert!(c.size() >= 1);
                let (x0, x1) = c.particles.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.x), a.1.max(p.x)));
                let (y0, y1) = c.particles.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.y), a.1.max(p.y)));
                prop_assert!(c.centroid.x >= x0 - 1e-12 && c.centroid.x <= x1 + 1e-12);
                prop_assert!(c.centroid.y >= y0 - 1e-12 && c.centroid.y <= y1 + 1e-12);
            }
        }

        #[test]
        fn clustering_matches_brute_force(seed in 0u64..10_000, n in 1usize..60, rho in 0.0f64..=1.0) {
            let ps = cloud(seed, n);
            let tau = 0.2 * (1.0 - rho);
            // flood fill oracle over the full O(n^2) link graph
            let mut label = vec![usize::MAX; n];
            let mut count = 0;
            for s in 0..n {
                if label[s] != usize::MAX { continue; }
                let mut stack = vec![s];
                label[s] = count;
                while let Some(i) = stack.pop() {
                    for j in 0..n {
                        if label[j] == usize::MAX && ps[i].position().distance(&ps[j].position()) <= tau {
                            label[j] = count;
                            stack.push(j);
                        }
                    }
                }
                count += 1;
            }
            prop_assert_eq!(cluster_particles(&ps, rho, 0.2).unwrap().len(), count);
        }

        #[test]
        fn more_sensitivity_never_fewer_clusters(seed in 0u64..10_000, n in 1usize..150, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let ps = cloud(seed, n);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let n_lo = cluster_particles(&ps, lo, 0.2).unwrap().len();
            let n_hi = cluster_particles(&ps, hi, 0.2).unwrap().len();
            prop_assert!(n_hi >= n_lo);
        }

        #[test]
        fn survivors_are_pairwise_separated(seed in 0u64..10_000, n in 1usize..30, or in proptest::bool::ANY) {
            let mut rng = stream(seed, Stage::Test, 2);
            let cs: Vec<Cluster> = (0..n)
                .map(|_| cluster_at(rng.random::<f64>(), rng.random::<f64>() * 0.6, rng.random_range(1..20)))
                .collect();
            let pred = if or { RedundancyPredicate::Or } else { RedundancyPredicate::And };
            let kept = reject_redundant_clusters(cs, 0.10, pred);
            prop_assert!(!kept.is_empty());
            for i in 0..kept.len() {
                for j in i + 1..kept.len() {
                    prop_assert!(!redundant(&kept[i], &kept[j], 0.10, pred));
                }
            }
            prop_assert!(kept.windows(2).all(|w| w[0].centroid.x <= w[1].centroid.x));
        }
    }

    #[test]
    fn centroid_of_unit_cluster() {
        assert_eq!(cluster_at(0.2, 0.3, 1).centroid, Point2::new(0.2, 0.3));
    }
}
