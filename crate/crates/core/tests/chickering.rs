mod common;

use flipbench::chickering::{
    add_edge, build_flip_chain, build_flip_chain_with, chickering_reachable, default_budget, flip_covered, is_covered,
    Completion, Move, MoveKind,
};
use flipbench::enumerate::{all_dags, default_names};
use flipbench::format::{parse_chain, parse_dag, render_chain};
use flipbench::graph::{cic_pattern, markov_equivalent, orientation_answer, pattern_of};
use flipbench::OrientationAnswer::{self, *};
use proptest::prelude::*;

fn answer(g: &flipbench::Dag) -> OrientationAnswer {
    orientation_answer(&pattern_of(g), 0, 1).unwrap()
}

fn replay(g: &flipbench::Dag, moves: &[(&str, &str, &str)]) -> flipbench::Dag {
    let mut cur = g.clone();
    for &(verb, t, h) in moves {
        let (t, h) = (cur.index_of(t).unwrap(), cur.index_of(h).unwrap());
        let mv = match verb {
            "add" => Move::add(t, h),
            _ => Move::flip(t, h),
        };
        let next = mv.apply(&cur).unwrap_or_else(|e| panic!("{verb} {t}->{h}: {e}"));
        if mv.kind == MoveKind::CoveredFlip {
            assert!(markov_equivalent(&cur, &next).unwrap());
        }
        cur = next;
    }
    cur
}

/// The published move list for the first step, and a matching second step
/// that starts by adding `Z3 -> Z4`.
#[test]
fn figure1_move_list_replays() {
    let text = include_str!("../../cli/fixtures/figure1.dag");
    let g0 = parse_dag(text).unwrap();
    assert_eq!(answer(&g0), XtoY);
    let g1 = replay(
        &g0,
        &[
            ("add", "Z1", "Z2"),
            ("flip", "Z2", "X"),
            ("flip", "Z1", "X"),
            ("flip", "X", "Y"),
            ("flip", "Y", "Z3"),
            ("add", "Z4", "Y"),
        ],
    );
    assert_eq!(answer(&g1), YtoX);
    let g2 = replay(
        &g1,
        &[("add", "Z3", "Z4"), ("flip", "Z4", "Y"), ("flip", "Z3", "Y"), ("flip", "Y", "X"), ("add", "Z5", "Y")],
    );
    assert_eq!(answer(&g2), XtoY);
}

#[test]
fn figure1_chain_alternates() {
    let g = parse_dag(include_str!("../../cli/fixtures/figure1.dag")).unwrap();
    for completion in [Completion::NonIsolated, Completion::Minimal] {
        let c = build_flip_chain_with(&g, 0, 1, 2, completion).unwrap();
        assert_eq!(c.answers(), vec![XtoY, YtoX, XtoY]);
        c.validate().unwrap();
        assert_eq!(parse_chain(&render_chain(&c)).unwrap(), c);
    }
    assert_eq!(build_flip_chain(&g, 0, 1, 0).unwrap().graphs.len(), 1);
    assert!(build_flip_chain(&g, 0, 1, 6).is_err());
}

#[test]
fn covered_flips_preserve_cic_exhaustively() {
    for n in 2..=5 {
        for g in all_dags(&default_names(n)) {
            let before = cic_pattern(&g).unwrap();
            for (a, b) in g.edges() {
                if is_covered(&g, a, b).unwrap() {
                    assert_eq!(cic_pattern(&flip_covered(&g, a, b).unwrap()).unwrap(), before);
                } else {
                    assert!(flip_covered(&g, a, b).is_err());
                }
            }
        }
    }
}

#[test]
fn additions_shrink_cic_exhaustively() {
    for n in 2..=4 {
        for g in all_dags(&default_names(n)) {
            let before = cic_pattern(&g).unwrap();
            for a in 0..n {
                for b in 0..n {
                    if a == b || g.adjacent(a, b) {
                        assert!(add_edge(&g, a, b).is_err());
                        continue;
                    }
                    if let Ok(h) = add_edge(&g, a, b) {
                        let after = cic_pattern(&h).unwrap();
                        assert!(after.is_subset(&before));
                        assert!(after.len() < before.len());
                    }
                }
            }
        }
    }
}

#[test]
fn reachability_matches_inclusion_on_three_vertices() {
    let dags = all_dags(&default_names(3));
    for h in &dags {
        for g in &dags {
            let inc = cic_pattern(g).unwrap().is_subset(&cic_pattern(h).unwrap());
            let path = chickering_reachable(h, g, default_budget(h, g)).unwrap();
            assert_eq!(path.is_some(), inc);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reachability_matches_inclusion_on_four_vertices(i in 0usize..543, j in 0usize..543) {
        let dags = all_dags(&default_names(4));
        let (h, g) = (&dags[i], &dags[j]);
        let inc = cic_pattern(g).unwrap().is_subset(&cic_pattern(h).unwrap());
        let path = chickering_reachable(h, g, default_budget(h, g)).unwrap();
        prop_assert_eq!(path.is_some(), inc);
        if let Some(moves) = path {
            let mut cur = h.clone();
            for m in moves {
                cur = m.apply(&cur).unwrap();
            }
            prop_assert_eq!(&cur, g);
        }
    }

    #[test]
    fn flip_chains_are_legal(g in common::dag(2, 5), k in 0usize..3, minimal in any::<bool>()) {
        let edges = g.edges();
        prop_assume!(!edges.is_empty());
        // pad with k isolated vertices
        let mut names: Vec<String> = g.names().to_vec();
        let mut parents: Vec<_> = (0..g.len()).map(|v| g.parents(v)).collect();
        for i in 0..k {
            names.push(format!("Z{i}"));
            parents.push(flipbench::VarSet::EMPTY);
        }
        let big = flipbench::Dag::from_parents(names.into(), parents).unwrap();
        let (x, y) = edges[0];
        let completion = if minimal { Completion::Minimal } else { Completion::NonIsolated };
        let c = build_flip_chain_with(&big, x, y, k, completion).unwrap();
        prop_assert_eq!(c.graphs.len(), k + 1);
        for (i, mvs) in c.moves.iter().enumerate() {
            let mut cur = c.graphs[i].clone();
            for m in mvs {
                if m.kind == MoveKind::CoveredFlip {
                    prop_assert!(is_covered(&cur, m.tail, m.head).unwrap());
                } else {
                    prop_assert!(!cur.adjacent(m.tail, m.head));
                }
                cur = m.apply(&cur).unwrap();
            }
            prop_assert_eq!(&cur, &c.graphs[i + 1]);
        }
        let answers = c.answers();
        for w in answers.windows(2) {
            prop_assert_ne!(w[0], w[1]);
            prop_assert!(matches!(w[1], XtoY | YtoX));
        }
        c.validate().unwrap();
    }
}
