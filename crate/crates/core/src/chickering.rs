//! Covered edges, the `⪯` order on DAGs, and chains of DAGs along which the
//! essential orientation of one edge keeps reversing.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{orientation_answer, pattern_of, skeleton, Dag, OrientationAnswer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    CoveredFlip,
    AddEdge,
}

/// One step of a `⪯` witness. For a flip, `tail -> head` is the edge as it
/// stands before the flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub kind: MoveKind,
    pub tail: usize,
    pub head: usize,
}

impl Move {
    pub fn flip(tail: usize, head: usize) -> Move {
        Move { kind: MoveKind::CoveredFlip, tail, head }
    }

    pub fn add(tail: usize, head: usize) -> Move {
        Move { kind: MoveKind::AddEdge, tail, head }
    }

    pub fn apply(&self, g: &Dag) -> Result<Dag> {
        match self.kind {
            MoveKind::CoveredFlip => flip_covered(g, self.tail, self.head),
            MoveKind::AddEdge => add_edge(g, self.tail, self.head),
        }
    }

    /// `flip A->B` or `add A->B`.
    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        MoveDisplay { mv: self, names }
    }
}

struct MoveDisplay<'a> {
    mv: &'a Move,
    names: &'a [String],
}

impl fmt::Display for MoveDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verb = match self.mv.kind {
            MoveKind::CoveredFlip => "flip",
            MoveKind::AddEdge => "add",
        };
        write!(f, "{verb} {}->{}", self.names[self.mv.tail], self.names[self.mv.head])
    }
}

fn edge_names(g: &Dag, t: usize, h: usize) -> (String, String) {
    (g.name(t).to_owned(), g.name(h).to_owned())
}

/// `tail -> head` is covered when `Pa(tail) = Pa(head) \ {tail}`.
pub fn is_covered(g: &Dag, tail: usize, head: usize) -> Result<bool> {
    g.check_index(tail)?;
    g.check_index(head)?;
    if !g.has_edge(tail, head) {
        let (t, h) = edge_names(g, tail, head);
        return Err(Error::MissingEdge(t, h));
    }
    Ok(g.parents(tail) == g.parents(head).without(tail))
}

/// Reverses a covered edge. The result is Markov equivalent to `g`.
pub fn flip_covered(g: &Dag, tail: usize, head: usize) -> Result<Dag> {
    if !is_covered(g, tail, head)? {
        let (t, h) = edge_names(g, tail, head);
        return Err(Error::NotCovered(t, h));
    }
    g.with_reversed(tail, head)
}

/// Adds `tail -> head` between two non-adjacent vertices.
pub fn add_edge(g: &Dag, tail: usize, head: usize) -> Result<Dag> {
    g.with_edge(tail, head)
}

/// Two edge additions of slack per missing edge plus `|V|²` flips.
pub fn default_budget(h: &Dag, g: &Dag) -> usize {
    2 * g.edge_count().saturating_sub(h.edge_count()) + g.len() * g.len()
}

/// Breadth-first search for covered flips and additions turning `h` into
/// `g`, using at most `budget` moves. Returns a shortest witness if one exists.
///
/// States whose skeleton leaves `g`'s skeleton are pruned: flips keep the
/// skeleton and additions only grow it.
pub fn chickering_reachable(h: &Dag, g: &Dag, budget: usize) -> Result<Option<Vec<Move>>> {
    if !h.same_vertices(g) {
        return Err(Error::VertexMismatch);
    }
    if h == g {
        return Ok(Some(Vec::new()));
    }
    let target_skel = skeleton(g);
    if !skeleton(h).is_subset(&target_skel) {
        return Ok(None);
    }
    // state -> (predecessor, move)
    let mut came_from: HashMap<Dag, Option<(Dag, Move)>> = HashMap::new();
    came_from.insert(h.clone(), None);
    let mut queue = VecDeque::from([(h.clone(), 0usize)]);
    while let Some((cur, depth)) = queue.pop_front() {
        if depth == budget {
            continue;
        }
        let mut moves = Vec::new();
        for (t, hd) in cur.edges() {
            if cur.parents(t) == cur.parents(hd).without(t) {
                moves.push(Move::flip(t, hd));
            }
        }
        for &(a, b) in &target_skel {
            if !cur.adjacent(a, b) {
                moves.push(Move::add(a, b));
                moves.push(Move::add(b, a));
            }
        }
        for mv in moves {
            let Ok(next) = mv.apply(&cur) else { continue };
            if came_from.contains_key(&next) {
                continue;
            }
            came_from.insert(next.clone(), Some((cur.clone(), mv)));
            if &next == g {
                let mut path = Vec::new();
                let mut at = next;
                while let Some(Some((prev, m))) = came_from.get(&at) {
                    path.push(*m);
                    at = prev.clone();
                }
                path.reverse();
                return Ok(Some(path));
            }
            queue.push_back((next, depth + 1));
        }
    }
    Ok(None)
}

/// A sequence `G0 ⪯ G1 ⪯ … ⪯ Gk` in which the essential orientation of the
/// focus edge changes at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipChain {
    pub graphs: Vec<Dag>,
    /// `moves[i]` turns `graphs[i]` into `graphs[i + 1]`.
    pub moves: Vec<Vec<Move>>,
    pub focus: (usize, usize),
}

impl FlipChain {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// The focus-pair answer read from each graph's pattern.
    pub fn answers(&self) -> Vec<OrientationAnswer> {
        let (x, y) = self.focus;
        self.graphs
            .iter()
            .map(|g| orientation_answer(&pattern_of(g), x, y).expect("focus pair is valid"))
            .collect()
    }

    /// Replays every move, checking legality and that the answers alternate.
    pub fn validate(&self) -> Result<()> {
        if self.graphs.len() != self.moves.len() + 1 {
            return Err(Error::Invalid("chain needs one more graph than move lists".into()));
        }
        for (i, mvs) in self.moves.iter().enumerate() {
            let mut g = self.graphs[i].clone();
            for mv in mvs {
                g = mv.apply(&g)?;
            }
            if g != self.graphs[i + 1] {
                return Err(Error::Invalid(format!("moves of step {} do not reach graph {}", i + 1, i + 1)));
            }
        }
        let answers = self.answers();
        for (i, w) in answers.windows(2).enumerate() {
            let essential = |a| matches!(a, OrientationAnswer::XtoY | OrientationAnswer::YtoX);
            if w[0] == w[1] || !essential(w[1]) {
                return Err(Error::Invalid(format!(
                    "step {}: answer {} does not flip {}",
                    i + 1,
                    w[1],
                    w[0]
                )));
            }
        }
        Ok(())
    }
}

/// How the focus edge is made reversible at each chain step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completion {
    /// Complete the subgraph on all non-isolated vertices along a topological
    /// order, then move the head next to the tail by adjacent covered flips.
    #[default]
    NonIsolated,
    /// Add only the parent edges that make the focus edge covered; falls back
    /// to [`Completion::NonIsolated`] when one of them would close a cycle.
    Minimal,
}

/// Builds a `k`-step flip chain from `g` around the edge between `x` and `y`,
/// completing with [`Completion::NonIsolated`].
pub fn build_flip_chain(g: &Dag, x: usize, y: usize, k: usize) -> Result<FlipChain> {
    build_flip_chain_with(g, x, y, k, Completion::NonIsolated)
}

/// Each step makes the focus edge `t -> u` covered, flips it, and then spends
/// the lexicographically first isolated vertex `z` on `z -> t`. The vee
/// `z -> t <- u` is an unshielded collider, so `u -> t` is essential.
///
/// Every step after the first yields an essential answer opposite to its
/// predecessor; the first graph's answer is whatever `g` implies.
pub fn build_flip_chain_with(
    g: &Dag,
    x: usize,
    y: usize,
    k: usize,
    completion: Completion,
) -> Result<FlipChain> {
    g.check_index(x)?;
    g.check_index(y)?;
    if !g.adjacent(x, y) {
        return Err(Error::NotAdjacent(g.name(x).to_owned(), g.name(y).to_owned()));
    }
    let isolated = g.isolated();
    if isolated.len() < k {
        return Err(Error::InsufficientIsolated { needed: k, found: isolated.len() });
    }
    let mut graphs = vec![g.clone()];
    let mut moves = Vec::with_capacity(k);
    let mut cur = g.clone();
    let (mut t, mut u) = if g.has_edge(x, y) { (x, y) } else { (y, x) };
    for _ in 0..k {
        let z = cur.isolated().iter().next().expect("isolated vertices counted up front");
        let mut step = match completion {
            Completion::Minimal => minimal_cover(&cur, t, u)
                .map_or_else(|| complete_and_bubble(&cur, t, u), Ok)?,
            Completion::NonIsolated => complete_and_bubble(&cur, t, u)?,
        };
        step.push(Move::flip(t, u));
        step.push(Move::add(z, t));
        for mv in &step {
            cur = mv.apply(&cur)?;
        }
        graphs.push(cur.clone());
        moves.push(step);
        std::mem::swap(&mut t, &mut u);
    }
    Ok(FlipChain { graphs, moves, focus: (x, y) })
}

/// Additions making `t -> u` covered, or `None` if one would close a cycle.
fn minimal_cover(g: &Dag, t: usize, u: usize) -> Option<Vec<Move>> {
    let mut cur = g.clone();
    let mut out = Vec::new();
    let into_u = g.parents(t).difference(g.parents(u));
    let into_t = g.parents(u).without(t).difference(g.parents(t));
    for p in into_u.iter() {
        cur = cur.with_edge(p, u).ok()?;
        out.push(Move::add(p, u));
    }
    for q in into_t.iter() {
        cur = cur.with_edge(q, t).ok()?;
        out.push(Move::add(q, t));
    }
    Some(out)
}

/// Completion of the non-isolated part along a topological order, followed by
/// adjacent transpositions that bring `u` directly behind `t`. The final flip
/// of `t -> u` itself is left to the caller.
fn complete_and_bubble(g: &Dag, t: usize, u: usize) -> Result<Vec<Move>> {
    let active = g.all().difference(g.isolated());
    let mut order: Vec<usize> = g.topological_order().into_iter().filter(|&v| active.contains(v)).collect();
    let mut out = Vec::new();
    let mut cur = g.clone();
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if !cur.adjacent(a, b) {
                cur = cur.with_edge(a, b)?;
                out.push(Move::add(a, b));
            }
        }
    }
    let pos = |order: &[usize], v| order.iter().position(|&w| w == v).expect("active vertex");
    let pt = pos(&order, t);
    let mut pu = pos(&order, u);
    while pu > pt + 1 {
        let w = order[pu - 1];
        cur = flip_covered(&cur, w, u)?;
        out.push(Move::flip(w, u));
        order.swap(pu - 1, pu);
        pu -= 1;
    }
    debug_assert!(is_covered(&cur, t, u).unwrap_or(false));
    Ok(out)
}
