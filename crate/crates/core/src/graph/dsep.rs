use std::collections::BTreeSet;

use super::{skeleton, unshielded_colliders, Dag};
use crate::error::{Error, Result};
use crate::varset::VarSet;

/// Largest graph for which [`cic_pattern`] will enumerate all conditioning sets.
pub const CIC_PATTERN_LIMIT: usize = 8;

/// A conditional independence statement `x ⫫ y | given`, stored with `x < y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cic {
    pub x: usize,
    pub y: usize,
    pub given: VarSet,
}

impl Cic {
    pub fn new(x: usize, y: usize, given: VarSet) -> Result<Cic> {
        if x == y {
            return Err(Error::InvalidQuery("a statement needs two distinct variables".into()));
        }
        if given.contains(x) || given.contains(y) {
            return Err(Error::InvalidQuery("conditioning set overlaps the pair".into()));
        }
        Ok(Cic { x: x.min(y), y: x.max(y), given })
    }
}

fn check_query(g: &Dag, x: usize, y: usize, s: VarSet) -> Result<()> {
    g.check_index(x)?;
    g.check_index(y)?;
    if let Some(bad) = s.difference(g.all()).iter().next() {
        return Err(Error::VertexIndex(bad));
    }
    if x == y {
        return Err(Error::InvalidQuery(format!("`{}` queried against itself", g.name(x))));
    }
    if s.contains(x) || s.contains(y) {
        return Err(Error::InvalidQuery("conditioning set overlaps the pair".into()));
    }
    Ok(())
}

/// Whether `x` and `y` are d-separated by `s` in `g`.
///
/// Reachability search over (vertex, direction) states: a path may pass a
/// non-collider only outside `s`, and a collider only if it is in `s` or has a
/// descendant there.
pub fn d_separated(g: &Dag, x: usize, y: usize, s: VarSet) -> Result<bool> {
    check_query(g, x, y, s)?;
    let opened = g.ancestors_of(s);
    let children: Vec<VarSet> = (0..g.len()).map(|v| g.children(v)).collect();

    // up: entered from a child; down: entered from a parent
    let mut seen_up = VarSet::EMPTY;
    let mut seen_down = VarSet::EMPTY;
    let mut stack = vec![(x, true)];
    while let Some((v, up)) = stack.pop() {
        if up {
            if seen_up.contains(v) {
                continue;
            }
            seen_up.insert(v);
        } else {
            if seen_down.contains(v) {
                continue;
            }
            seen_down.insert(v);
        }
        if v != x && !s.contains(v) && v == y {
            return Ok(false);
        }
        if up {
            if s.contains(v) {
                continue;
            }
            stack.extend(g.parents(v).iter().map(|p| (p, true)));
            stack.extend(children[v].iter().map(|c| (c, false)));
        } else {
            if !s.contains(v) {
                stack.extend(children[v].iter().map(|c| (c, false)));
            }
            if opened.contains(v) {
                stack.extend(g.parents(v).iter().map(|p| (p, true)));
            }
        }
    }
    Ok(true)
}

/// Every statement `x ⫫ y | S` entailed by `g`, enumerated over all
/// conditioning sets.
pub fn cic_pattern(g: &Dag) -> Result<BTreeSet<Cic>> {
    if g.len() > CIC_PATTERN_LIMIT {
        return Err(Error::TooManyVertices { found: g.len(), limit: CIC_PATTERN_LIMIT });
    }
    let mut out = BTreeSet::new();
    for x in 0..g.len() {
        for y in x + 1..g.len() {
            let rest = g.all().without(x).without(y);
            for s in rest.subsets() {
                if d_separated(g, x, y, s)? {
                    out.insert(Cic { x, y, given: s });
                }
            }
        }
    }
    Ok(out)
}

/// Same skeleton and same unshielded colliders.
pub fn markov_equivalent(g: &Dag, h: &Dag) -> Result<bool> {
    if !g.same_vertices(h) {
        return Err(Error::VertexMismatch);
    }
    Ok(skeleton(g) == skeleton(h) && unshielded_colliders(g) == unshielded_colliders(h))
}
