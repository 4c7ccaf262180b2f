//! Directed acyclic graphs over a small named vertex set, together with the
//! Markov-equivalence machinery built on them.

mod dsep;
mod pattern;

pub use dsep::{cic_pattern, d_separated, markov_equivalent, Cic, CIC_PATTERN_LIMIT};
pub use pattern::{orientation_answer, pattern_of, OrientationAnswer, Pattern};
pub(crate) use pattern::meek_closure;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::varset::VarSet;

/// Hard cap imposed by the bitmask representation.
pub const MAX_VERTICES: usize = 64;

/// Checks a vertex name and returns the sorted, shared name table.
pub(crate) fn vertex_table<S: AsRef<str>>(names: &[S]) -> Result<Arc<[String]>> {
    if names.len() > MAX_VERTICES {
        return Err(Error::TooManyVertices { found: names.len(), limit: MAX_VERTICES });
    }
    let mut sorted: Vec<String> = Vec::with_capacity(names.len());
    for n in names {
        let n = n.as_ref();
        if n.is_empty() {
            return Err(Error::EmptyName);
        }
        if !n.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.') {
            return Err(Error::Invalid(format!(
                "vertex name `{n}` may only contain letters, digits, `_` and `.`"
            )));
        }
        sorted.push(n.to_owned());
    }
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateVertex(w[0].clone()));
        }
    }
    Ok(sorted.into())
}

pub(crate) fn lookup(names: &[String], name: &str) -> Result<usize> {
    names
        .binary_search_by(|n| n.as_str().cmp(name))
        .map_err(|_| Error::UnknownVertex(name.to_owned()))
}

/// A directed acyclic graph. Vertices are kept in lexicographic order of
/// their names and addressed by index into that order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    names: Arc<[String]>,
    parents: Vec<VarSet>,
}

impl Dag {
    /// A graph with the given vertices and no edges.
    pub fn empty<S: AsRef<str>>(names: &[S]) -> Result<Dag> {
        let names = vertex_table(names)?;
        Ok(Dag::edgeless(names))
    }

    pub(crate) fn edgeless(names: Arc<[String]>) -> Dag {
        let parents = vec![VarSet::EMPTY; names.len()];
        Dag { names, parents }
    }

    /// Builds a graph from named edges `(tail, head)`.
    pub fn from_edges<S: AsRef<str>>(names: &[S], edges: &[(&str, &str)]) -> Result<Dag> {
        let mut g = Dag::empty(names)?;
        for &(t, h) in edges {
            let (t, h) = (g.index_of(t)?, g.index_of(h)?);
            g = g.with_edge(t, h)?;
        }
        Ok(g)
    }

    /// Builds a graph from per-vertex parent sets, rejecting cycles.
    pub fn from_parents(names: Arc<[String]>, parents: Vec<VarSet>) -> Result<Dag> {
        if parents.len() != names.len() {
            return Err(Error::Invalid("parent table length differs from vertex count".into()));
        }
        let full = VarSet::full(names.len());
        for (v, p) in parents.iter().enumerate() {
            if !p.is_subset(full) {
                return Err(Error::VertexIndex(p.difference(full).iter().next().unwrap_or(v)));
            }
            if p.contains(v) {
                return Err(Error::SelfLoop(names[v].clone()));
            }
        }
        let g = Dag { names, parents };
        if g.topological_order().len() != g.len() {
            return Err(Error::Invalid("parent table contains a directed cycle".into()));
        }
        Ok(g)
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

    pub(crate) fn shared_names(&self) -> Arc<[String]> {
        Arc::clone(&self.names)
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        lookup(&self.names, name)
    }

    pub(crate) fn check_index(&self, v: usize) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::VertexIndex(v))
        }
    }

    pub fn all(&self) -> VarSet {
        VarSet::full(self.len())
    }

    pub fn parents(&self, v: usize) -> VarSet {
        self.parents[v]
    }

    pub fn children(&self, v: usize) -> VarSet {
        (0..self.len()).filter(|&c| self.parents[c].contains(v)).collect()
    }

    pub fn neighbors(&self, v: usize) -> VarSet {
        self.parents[v].union(self.children(v))
    }

    pub fn has_edge(&self, tail: usize, head: usize) -> bool {
        self.parents[head].contains(tail)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Edges `(tail, head)` sorted by tail, then head.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = (0..self.len())
            .flat_map(|h| self.parents[h].iter().map(move |t| (t, h)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    pub fn is_isolated(&self, v: usize) -> bool {
        self.neighbors(v).is_empty()
    }

    pub fn isolated(&self) -> VarSet {
        (0..self.len()).filter(|&v| self.is_isolated(v)).collect()
    }

    /// Kahn's algorithm, always releasing the smallest available index.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut placed = VarSet::EMPTY;
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let next = (0..n).find(|&v| !placed.contains(v) && self.parents[v].is_subset(placed));
            match next {
                Some(v) => {
                    placed.insert(v);
                    order.push(v);
                }
                None => break,
            }
        }
        order
    }

    /// `set` together with all of its ancestors.
    pub fn ancestors_of(&self, set: VarSet) -> VarSet {
        let mut acc = set;
        let mut frontier = set;
        while !frontier.is_empty() {
            let mut next = VarSet::EMPTY;
            for v in frontier.iter() {
                next = next.union(self.parents[v]);
            }
            frontier = next.difference(acc);
            acc = acc.union(next);
        }
        acc
    }

    /// True when a directed path (possibly empty) leads from `from` to `to`.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        self.ancestors_of(VarSet::singleton(to)).contains(from)
    }

    /// Adds `tail -> head`, rejecting self-loops, existing adjacencies and cycles.
    pub fn with_edge(&self, tail: usize, head: usize) -> Result<Dag> {
        self.check_index(tail)?;
        self.check_index(head)?;
        if tail == head {
            return Err(Error::SelfLoop(self.names[tail].clone()));
        }
        if self.adjacent(tail, head) {
            return Err(Error::Adjacent(self.names[tail].clone(), self.names[head].clone()));
        }
        if self.reaches(head, tail) {
            return Err(Error::Cycle(self.names[tail].clone(), self.names[head].clone()));
        }
        let mut g = self.clone();
        g.parents[head].insert(tail);
        Ok(g)
    }

    pub fn without_edge(&self, tail: usize, head: usize) -> Result<Dag> {
        self.check_index(tail)?;
        self.check_index(head)?;
        if !self.has_edge(tail, head) {
            return Err(Error::MissingEdge(self.names[tail].clone(), self.names[head].clone()));
        }
        let mut g = self.clone();
        g.parents[head].remove(tail);
        Ok(g)
    }

    /// Replaces `tail -> head` by `head -> tail`, rejecting the result if it is cyclic.
    pub fn with_reversed(&self, tail: usize, head: usize) -> Result<Dag> {
        let g = self.without_edge(tail, head)?;
        g.with_edge(head, tail)
            .map_err(|_| Error::Cycle(self.names[head].clone(), self.names[tail].clone()))
    }

    /// Same vertex names, in the same order.
    pub fn same_vertices(&self, other: &Dag) -> bool {
        Arc::ptr_eq(&self.names, &other.names) || self.names == other.names
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self
            .edges()
            .into_iter()
            .map(|(t, h)| format!("{}->{}", self.names[t], self.names[h]))
            .collect();
        write!(f, "Dag[{}]{{{}}}", self.names.join(","), edges.join(", "))
    }
}

/// Unordered adjacent pairs `(a, b)` with `a < b`.
pub fn skeleton(g: &Dag) -> BTreeSet<(usize, usize)> {
    g.edges().into_iter().map(|(t, h)| (t.min(h), t.max(h))).collect()
}

/// Triples `(x, y, z)` with `x -> y <- z`, `x < z` and `x`, `z` non-adjacent.
pub fn unshielded_colliders(g: &Dag) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for y in 0..g.len() {
        let pa: Vec<usize> = g.parents(y).iter().collect();
        for (i, &x) in pa.iter().enumerate() {
            for &z in &pa[i + 1..] {
                if !g.adjacent(x, z) {
                    out.insert((x, y, z));
                }
            }
        }
    }
    out
}
