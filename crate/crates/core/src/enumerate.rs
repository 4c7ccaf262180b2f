//! Exhaustive and random DAG generation for brute-force checks.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{cic_pattern, vertex_table, Dag};
use crate::error::Result;
use crate::varset::VarSet;

/// Names `V0, V1, ...`.
pub fn default_names(n: usize) -> Arc<[String]> {
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    vertex_table(&names).expect("generated names are valid")
}

/// Every DAG on the given vertices, in a fixed order. There are 25 on three
/// vertices, 543 on four and 29 281 on five; beyond that this is hopeless.
pub fn all_dags(names: &Arc<[String]>) -> Vec<Dag> {
    let n = names.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut parents = vec![VarSet::EMPTY; n];
        let mut c = code;
        for &(a, b) in &pairs {
            match c % 3 {
                1 => parents[b].insert(a),
                2 => parents[a].insert(b),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(g) = Dag::from_parents(Arc::clone(names), parents) {
            out.push(g);
        }
    }
    out
}

/// A DAG whose edges respect a random vertex order; each forward pair is
/// joined with probability `density`.
pub fn random_dag<R: Rng + ?Sized>(names: &Arc<[String]>, density: f64, rng: &mut R) -> Dag {
    let n = names.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut parents = vec![VarSet::EMPTY; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                parents[order[j]].insert(order[i]);
            }
        }
    }
    Dag::from_parents(Arc::clone(names), parents).expect("order-respecting edges are acyclic")
}

/// The Markov equivalence class of `g`, found by filtering every DAG on its
/// vertex set for an identical CIC pattern. Only sensible up to five vertices.
pub fn equivalence_class(g: &Dag) -> Result<Vec<Dag>> {
    let target = cic_pattern(g)?;
    let mut out = Vec::new();
    for h in all_dags(&g.shared_names()) {
        if cic_pattern(&h)? == target {
            out.push(h);
        }
    }
    Ok(out)
}
