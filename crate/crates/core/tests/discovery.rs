mod common;

use flipbench::ci::{AlphaSchedule, OracleSource};
use flipbench::discovery::{answer_of, run_cpc, run_pc, Method, MethodKind};
use flipbench::enumerate::{default_names, random_dag};
use flipbench::format::{parse_discovery, render_discovery};
use flipbench::graph::pattern_of;
use flipbench::sem::faithfulness_report;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn oracle_runs_recover_the_pattern(g in common::dag(1, 7)) {
        let src = OracleSource::new(&g);
        let want = pattern_of(&g);
        let pc = run_pc(&src, g.names().into(), None).unwrap();
        let cpc = run_cpc(&src, g.names().into(), None).unwrap();
        prop_assert_eq!(&pc.pattern, &want);
        prop_assert_eq!(&cpc.pattern, &want);
        prop_assert!(cpc.ambiguous.is_empty());
        prop_assert!(pc.conflicts.is_empty() && cpc.conflicts.is_empty());
    }

    #[test]
    fn runs_are_deterministic(g in common::dag(2, 6), seed in any::<u64>(), cpc in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::generic_sem(g, &mut rng);
        let data = m.sample(200, seed).unwrap();
        let kind = if cpc { MethodKind::Cpc } else { MethodKind::Pc };
        let method = Method::new(kind, AlphaSchedule::Fixed(0.05));
        let a = method.discover(&data).unwrap();
        let b = method.discover(&data).unwrap();
        prop_assert_eq!(&a, &b);
        let (p, amb) = parse_discovery(&render_discovery(&a)).unwrap();
        prop_assert_eq!(p, a.pattern);
        prop_assert_eq!(amb, a.ambiguous);
    }
}

/// With a vanishing significance level; at a fixed one the chance of a
/// spurious dependence never goes away.
#[test]
fn consistent_at_large_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut models = Vec::new();
    while models.len() < 3 {
        let g = random_dag(&default_names(6), 0.4, &mut rng);
        let m = common::generic_sem(g, &mut rng);
        if faithfulness_report(&m, 1e-2).unwrap().is_empty() {
            models.push(m);
        }
    }
    for kind in [MethodKind::Pc, MethodKind::Cpc] {
        let method = Method::new(kind, AlphaSchedule::Decreasing(0.05));
        for m in &models {
            let want = pattern_of(m.dag());
            let trials = 100;
            let hits = (0..trials)
                .filter(|&t| method.discover(&m.sample(100_000, t).unwrap()).unwrap().pattern == want)
                .count();
            assert!(hits >= 90, "{kind:?}: {hits} of {trials}");
        }
    }
}

#[test]
fn collider_sample_answer() {
    let g = flipbench::Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("C", "B")]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = common::generic_sem(g, &mut rng);
    let method = Method::new(MethodKind::Pc, AlphaSchedule::Fixed(0.01));
    let r = method.discover(&m.sample(5000, 2).unwrap()).unwrap();
    assert_eq!(answer_of(&r, 0, 1).unwrap(), flipbench::OrientationAnswer::XtoY);
}
