mod common;

use flipbench::ci::partial_correlation;
use flipbench::enumerate::{default_names, random_dag};
use flipbench::format::{parse_sem, render_sem};
use flipbench::graph::d_separated;
use flipbench::sem::{faithfulness_report, kl_divergence, tv_upper_bound, LinearSem};
use flipbench::Dag;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sem_strategy(lo: usize, hi: usize) -> impl Strategy<Value = LinearSem> {
    (common::dag(lo, hi), any::<u64>()).prop_map(|(g, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefs: Vec<_> = g.edges().into_iter().map(|(t, h)| (t, h, rng.random_range(-1.5..1.5))).collect();
        let vars: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.2..2.0)).collect();
        LinearSem::new(g, &coefs, vars).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn markov_soundness(m in sem_strategy(2, 6)) {
        let g = m.dag();
        let cov = m.implied_covariance();
        for x in 0..g.len() {
            for y in x + 1..g.len() {
                for s in g.all().without(x).without(y).subsets() {
                    if d_separated(g, x, y, s).unwrap() {
                        prop_assert!(partial_correlation(&cov, x, y, s).unwrap().abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn standardize_is_idempotent(m in sem_strategy(1, 7)) {
        if let Ok(s) = m.standardize() {
            prop_assert!(s.is_standardized());
            let cov = s.implied_covariance();
            for v in 0..s.len() {
                prop_assert!((cov.get(v, v) - 1.0).abs() < 1e-9);
            }
            let again = s.standardize().unwrap();
            for (a, b) in s.coefficients().iter().zip(again.coefficients()) {
                prop_assert_eq!((a.0, a.1), (b.0, b.1));
                prop_assert!((a.2 - b.2).abs() < 1e-12);
            }
            for v in 0..s.len() {
                prop_assert!((s.error_var(v) - again.error_var(v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn divergence_properties(p in sem_strategy(3, 3), q in sem_strategy(3, 3)) {
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-9);
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!(kl >= 0.0);
        let tv = tv_upper_bound(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&tv));
    }

    #[test]
    fn sampling_is_seed_deterministic(m in sem_strategy(1, 5), seed in any::<u64>()) {
        let a = m.sample(50, seed).unwrap();
        let b = m.sample(50, seed).unwrap();
        prop_assert_eq!(a.columns(), b.columns());
    }

    #[test]
    fn model_text_round_trips(m in sem_strategy(1, 6)) {
        prop_assert_eq!(parse_sem(&render_sem(&m)).unwrap(), m.clone());
        if let Ok(s) = m.standardize() {
            prop_assert_eq!(parse_sem(&render_sem(&s)).unwrap(), s);
        }
    }
}

#[test]
fn reparameterizing_within_the_class_keeps_the_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let g = random_dag(&default_names(5), 0.5, &mut rng);
        let m = common::generic_sem(g.clone(), &mut rng);
        for (a, b) in g.edges() {
            if let Ok(f) = flipbench::chickering::flip_covered(&g, a, b) {
                let r = m.reparameterize(f).unwrap();
                assert!(kl_divergence(&m, &r).unwrap() < 1e-9);
            }
        }
    }
}

#[test]
fn generic_coefficients_are_faithful() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut clean = 0;
    let total = 1000;
    for i in 0..total {
        let n = 2 + i % 5;
        let density = rng.random_range(0.2..0.8);
        let g = random_dag(&default_names(n), density, &mut rng);
        let m = common::generic_sem(g, &mut rng);
        if faithfulness_report(&m, 1e-4).unwrap().is_empty() {
            clean += 1;
        }
    }
    assert!(clean as f64 >= 0.99 * total as f64, "{clean} of {total}");
}

#[test]
fn sample_covariance_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = Dag::from_edges(&["A", "B", "C", "D"], &[("A", "B"), ("B", "C"), ("A", "D"), ("C", "D")]).unwrap();
    let m = common::generic_sem(g, &mut rng);
    let implied = m.implied_covariance();
    for n in [100, 1000, 10_000] {
        let trials = 100;
        let mut ok = 0;
        for t in 0..trials {
            let d = m.sample(n, t).unwrap();
            let dev = (d.covariance() - implied.matrix()).norm();
            if dev < 6.0 * m.len() as f64 / (n as f64).sqrt() {
                ok += 1;
            }
        }
        assert!(ok >= 95, "n = {n}: {ok} of {trials}");
    }
}
