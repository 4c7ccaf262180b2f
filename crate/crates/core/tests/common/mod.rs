#![allow(dead_code)]

use flipbench::enumerate::{default_names, random_dag};
use flipbench::sem::LinearSem;
use flipbench::Dag;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random DAG on `lo..=hi` vertices.
pub fn dag(lo: usize, hi: usize) -> impl Strategy<Value = Dag> {
    (lo..=hi, 0.0f64..0.8, any::<u64>()).prop_map(|(n, density, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_dag(&default_names(n), density, &mut rng)
    })
}

/// Uniform on `±[0.3, 0.8]`.
pub fn generic_coef<R: Rng>(rng: &mut R) -> f64 {
    let m = rng.random_range(0.3..0.8);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Unit error variances and generic coefficients.
pub fn generic_sem<R: Rng>(g: Dag, rng: &mut R) -> LinearSem {
    let coefs: Vec<_> = g.edges().into_iter().map(|(t, h)| (t, h, generic_coef(rng))).collect();
    let n = g.len();
    LinearSem::new(g, &coefs, vec![1.0; n]).unwrap()
}
