use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stairscan::detector::{normalize_weights, resample};
use stairscan::{Particle, Scope};

fn particles() -> impl Strategy<Value = Vec<Particle>> {
    prop::collection::vec((0.0..3.0f64, -0.5..1.5f64, 1e-6..1e6f64, 0usize..5), 1..300).prop_map(|v| {
        v.into_iter()
            .map(|(x, y, p, mode)| Particle {
                mode,
                ..Particle::new(x, y, p)
            })
            .collect()
    })
}

fn scope() -> impl Strategy<Value = Scope> {
    prop_oneof![Just(Scope::Global), Just(Scope::PerMode)]
}

fn group_sums(ps: &[Particle], scope: Scope) -> HashMap<usize, f64> {
    let mut sums = HashMap::new();
    for p in ps {
        *sums.entry(if scope == Scope::Global { 0 } else { p.mode }).or_insert(0.0) += p.w;
    }
    sums
}

proptest! {
    #[test]
    fn weights_sum_to_one_per_group(mut ps in particles(), scope in scope()) {
        normalize_weights(&mut ps, scope).unwrap();
        for s in group_sums(&ps, scope).values() {
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn resampling_draws_only_existing_particles(mut ps in particles(), scope in scope(), seed in any::<u64>()) {
        normalize_weights(&mut ps, scope).unwrap();
        let out = resample(&ps, &mut ChaCha8Rng::seed_from_u64(seed), scope).unwrap();
        prop_assert_eq!(out.len(), ps.len());
        let key = |p: &Particle| (p.x.to_bits(), p.y.to_bits(), p.p.to_bits(), p.mode);
        let input: HashSet<_> = ps.iter().map(key).collect();
        prop_assert!(out.iter().all(|p| input.contains(&key(p))));
        if scope == Scope::PerMode {
            let count = |v: &[Particle]| {
                let mut c = HashMap::new();
                v.iter().for_each(|p| *c.entry(p.mode).or_insert(0) += 1);
                c
            };
            prop_assert_eq!(count(&out), count(&ps));
        }
    }
}
