use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::{lookup, skeleton, unshielded_colliders, Dag};
use crate::error::{Error, Result};
use crate::varset::VarSet;

/// The four answers to "how are X and Y connected?" read off a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrientationAnswer {
    XtoY,
    YtoX,
    AdjacentUnoriented,
    NonAdjacent,
}

impl OrientationAnswer {
    pub const ALL: [OrientationAnswer; 4] = [
        OrientationAnswer::XtoY,
        OrientationAnswer::YtoX,
        OrientationAnswer::AdjacentUnoriented,
        OrientationAnswer::NonAdjacent,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrientationAnswer::XtoY => "XtoY",
            OrientationAnswer::YtoX => "YtoX",
            OrientationAnswer::AdjacentUnoriented => "AdjacentUnoriented",
            OrientationAnswer::NonAdjacent => "NonAdjacent",
        }
    }

    pub fn parse(s: &str) -> Option<OrientationAnswer> {
        OrientationAnswer::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for OrientationAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A partially directed graph. Every adjacent pair is either directed or
/// undirected, and the directed part is acyclic.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    names: Arc<[String]>,
    // bit t of directed_in[h] <=> t -> h
    directed_in: Vec<VarSet>,
    // symmetric
    undirected: Vec<VarSet>,
}

impl Pattern {
    pub fn new(
        names: Arc<[String]>,
        directed: &[(usize, usize)],
        undirected: &[(usize, usize)],
    ) -> Result<Pattern> {
        let mut p = Pattern::edgeless(names);
        let n = p.len();
        for &(a, b) in directed.iter().chain(undirected) {
            if a >= n || b >= n {
                return Err(Error::VertexIndex(a.max(b)));
            }
            if a == b {
                return Err(Error::SelfLoop(p.names[a].clone()));
            }
            if p.adjacent(a, b) {
                return Err(Error::InvalidPattern(format!(
                    "`{}` and `{}` joined by more than one edge",
                    p.names[a], p.names[b]
                )));
            }
            if directed.contains(&(a, b)) {
                p.directed_in[b].insert(a);
            } else {
                p.undirected[a].insert(b);
                p.undirected[b].insert(a);
            }
        }
        for &(a, b) in directed {
            if p.directed_reaches(b, a) {
                return Err(Error::InvalidPattern("directed part contains a cycle".into()));
            }
        }
        Ok(p)
    }

    pub(crate) fn edgeless(names: Arc<[String]>) -> Pattern {
        let n = names.len();
        Pattern { names, directed_in: vec![VarSet::EMPTY; n], undirected: vec![VarSet::EMPTY; n] }
    }

    /// The skeleton of `g` with every edge undirected.
    pub(crate) fn undirected_skeleton(g: &Dag) -> Pattern {
        let mut p = Pattern::edgeless(g.shared_names());
        for (a, b) in skeleton(g) {
            p.undirected[a].insert(b);
            p.undirected[b].insert(a);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        lookup(&self.names, name)
    }

    pub fn is_directed(&self, tail: usize, head: usize) -> bool {
        self.directed_in[head].contains(tail)
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected[a].contains(b)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.is_directed(a, b) || self.is_directed(b, a) || self.is_undirected(a, b)
    }

    pub fn neighbors(&self, v: usize) -> VarSet {
        let out: VarSet = (0..self.len()).filter(|&h| self.directed_in[h].contains(v)).collect();
        self.directed_in[v].union(self.undirected[v]).union(out)
    }

    pub fn directed_parents(&self, v: usize) -> VarSet {
        self.directed_in[v]
    }

    pub fn undirected_neighbors(&self, v: usize) -> VarSet {
        self.undirected[v]
    }

    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = (0..self.len())
            .flat_map(|h| self.directed_in[h].iter().map(move |t| (t, h)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|a| self.undirected[a].iter().filter(move |&b| b > a).map(move |b| (a, b)))
            .collect()
    }

    /// Directed path of length >= 1 from `from` to `to` using directed edges only.
    pub fn directed_reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = VarSet::EMPTY;
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for h in 0..self.len() {
                if self.directed_in[h].contains(v) && !seen.contains(h) {
                    if h == to {
                        return true;
                    }
                    seen.insert(h);
                    stack.push(h);
                }
            }
        }
        false
    }

    /// Turns the undirected edge `a - b` into `a -> b`.
    pub(crate) fn orient(&mut self, a: usize, b: usize) {
        debug_assert!(self.is_undirected(a, b));
        self.undirected[a].remove(b);
        self.undirected[b].remove(a);
        self.directed_in[b].insert(a);
    }

    pub(crate) fn add_undirected(&mut self, a: usize, b: usize) {
        self.undirected[a].insert(b);
        self.undirected[b].insert(a);
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .directed_edges()
            .into_iter()
            .map(|(t, h)| format!("{}->{}", self.names[t], self.names[h]))
            .collect();
        parts.extend(
            self.undirected_edges()
                .into_iter()
                .map(|(a, b)| format!("{}--{}", self.names[a], self.names[b])),
        );
        write!(f, "Pattern{{{}}}", parts.join(", "))
    }
}

fn triple_key(a: usize, mid: usize, c: usize) -> (usize, usize, usize) {
    (a.min(c), mid, a.max(c))
}

/// Applies Meek's four orientation rules until nothing changes.
///
/// Triples in `ambiguous` are never treated as known non-colliders, and
/// edges in `frozen` (unordered, `a < b`) are left undirected. An
/// orientation that would close a directed cycle is skipped.
pub(crate) fn meek_closure(
    p: &mut Pattern,
    ambiguous: &BTreeSet<(usize, usize, usize)>,
    frozen: &BTreeSet<(usize, usize)>,
) {
    let amb = |a: usize, mid: usize, c: usize| ambiguous.contains(&triple_key(a, mid, c));
    let n = p.len();
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in p.undirected[a].iter() {
                if frozen.contains(&(a.min(b), a.max(b))) {
                    continue;
                }
                if forces(p, a, b, &amb) && !p.directed_reaches(b, a) {
                    p.orient(a, b);
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// Whether one of the rules forces the undirected edge `a - b` to `a -> b`.
fn forces(p: &Pattern, a: usize, b: usize, amb: &impl Fn(usize, usize, usize) -> bool) -> bool {
    if !p.is_undirected(a, b) {
        return false;
    }
    // R1: c -> a - b, c and b non-adjacent
    if p.directed_in[a].iter().any(|c| !p.adjacent(c, b) && !amb(c, a, b)) {
        return true;
    }
    // R2: directed path a => b
    if p.directed_reaches(a, b) {
        return true;
    }
    let und_a = p.undirected[a];
    // R3: a - c -> b, a - d -> b, c and d non-adjacent
    let into_b = p.directed_in[b].intersection(und_a);
    for c in into_b.iter() {
        for d in into_b.iter().filter(|&d| d > c) {
            if !p.adjacent(c, d) && !amb(c, a, d) {
                return true;
            }
        }
    }
    // R4: a - d, d -> c -> b, a adjacent to c, b and d non-adjacent
    for c in p.directed_in[b].iter() {
        if !p.adjacent(a, c) {
            continue;
        }
        for d in p.directed_in[c].intersection(und_a).iter() {
            if d != b && !p.adjacent(b, d) && !amb(d, a, b) {
                return true;
            }
        }
    }
    false
}

/// The pattern (CPDAG) of `g`: its skeleton with unshielded colliders
/// oriented, closed under the orientation rules.
pub fn pattern_of(g: &Dag) -> Pattern {
    let mut p = Pattern::undirected_skeleton(g);
    for (x, y, z) in unshielded_colliders(g) {
        if p.is_undirected(x, y) {
            p.orient(x, y);
        }
        if p.is_undirected(z, y) {
            p.orient(z, y);
        }
    }
    meek_closure(&mut p, &BTreeSet::new(), &BTreeSet::new());
    p
}

pub fn orientation_answer(pat: &Pattern, x: usize, y: usize) -> Result<OrientationAnswer> {
    if x >= pat.len() || y >= pat.len() {
        return Err(Error::VertexIndex(x.max(y)));
    }
    if x == y {
        return Err(Error::InvalidQuery("orientation of a vertex against itself".into()));
    }
    Ok(if pat.is_directed(x, y) {
        OrientationAnswer::XtoY
    } else if pat.is_directed(y, x) {
        OrientationAnswer::YtoX
    } else if pat.is_undirected(x, y) {
        OrientationAnswer::AdjacentUnoriented
    } else {
        OrientationAnswer::NonAdjacent
    })
}
