//! The PC and conservative PC (CPC) algorithms.
//!
//! Both share the adjacency search; they differ in how unshielded triples are
//! classified. PC trusts the first separating set it found. CPC re-tests the
//! pair over every subset of both neighbourhoods and orients a collider only
//! when the middle vertex is in none of the separating sets, leaving the triple
//! ambiguous when the sets disagree.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::ci::{AlphaSchedule, CiSource, FisherZSource};
use crate::error::{Error, Result};
use crate::graph::{meek_closure, orientation_answer, OrientationAnswer, Pattern};
use crate::sem::Dataset;
use crate::varset::VarSet;

/// Conditioning sets are uncapped up to this many vertices.
pub const UNCAPPED_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Pc,
    Cpc,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Pc => "pc",
            MethodKind::Cpc => "cpc",
        }
    }
}

/// A discovery method: algorithm plus significance schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Method {
    pub kind: MethodKind,
    pub schedule: AlphaSchedule,
    pub max_cond_size: Option<usize>,
}

impl Method {
    pub fn new(kind: MethodKind, schedule: AlphaSchedule) -> Method {
        Method { kind, schedule, max_cond_size: None }
    }

    pub fn with_max_cond_size(mut self, cap: usize) -> Method {
        self.max_cond_size = Some(cap);
        self
    }

    /// The cap in force for `n_vars` variables: explicit, else none up to
    /// [`UNCAPPED_LIMIT`] vertices and 3 beyond.
    pub fn effective_cap(&self, n_vars: usize) -> Option<usize> {
        self.max_cond_size.or((n_vars > UNCAPPED_LIMIT).then_some(3))
    }

    pub fn run(&self, source: &dyn CiSource, names: Arc<[String]>) -> Result<DiscoveryResult> {
        let cap = self.effective_cap(names.len());
        match self.kind {
            MethodKind::Pc => run_pc(source, names, cap),
            MethodKind::Cpc => run_cpc(source, names, cap),
        }
    }

    /// Fisher-z tests at the scheduled level for this sample size.
    pub fn discover(&self, data: &Dataset) -> Result<DiscoveryResult> {
        let source = FisherZSource::new(data, self.schedule.alpha(data.n()))?;
        self.run(&source, data.shared_names())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryResult {
    pub pattern: Pattern,
    /// `(x, mid, z)` with `x < z`; always empty for PC.
    pub ambiguous: BTreeSet<(usize, usize, usize)>,
    /// Edges `(a, b)`, `a < b`, on which collider orientations disagreed.
    pub conflicts: BTreeSet<(usize, usize)>,
    pub ci_call_count: usize,
}

pub fn answer_of(result: &DiscoveryResult, x: usize, y: usize) -> Result<OrientationAnswer> {
    orientation_answer(&result.pattern, x, y)
}

/// Memoizing front end to a source. Undecidable tests count as independent.
struct Tester<'a> {
    source: &'a dyn CiSource,
    cache: RefCell<HashMap<(usize, usize, VarSet), bool>>,
    calls: RefCell<usize>,
}

impl<'a> Tester<'a> {
    fn new(source: &'a dyn CiSource) -> Self {
        Tester { source, cache: RefCell::new(HashMap::new()), calls: RefCell::new(0) }
    }

    fn independent(&self, x: usize, y: usize, s: VarSet) -> Result<bool> {
        let key = (x.min(y), x.max(y), s);
        if let Some(&hit) = self.cache.borrow().get(&key) {
            return Ok(hit);
        }
        *self.calls.borrow_mut() += 1;
        let ind = match self.source.decide(key.0, key.1, s) {
            Ok(d) => d.independent,
            Err(Error::NotDecidable { .. }) => true,
            Err(e) => return Err(e),
        };
        self.cache.borrow_mut().insert(key, ind);
        Ok(ind)
    }

    fn calls(&self) -> usize {
        *self.calls.borrow()
    }
}

struct Skeleton {
    adj: Vec<VarSet>,
    sepsets: BTreeMap<(usize, usize), VarSet>,
}

impl Skeleton {
    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(b)
    }

    fn sepset(&self, a: usize, b: usize) -> VarSet {
        self.sepsets.get(&(a.min(b), a.max(b))).copied().unwrap_or_default()
    }

    /// `(x, mid, z)` with `x < z`, `x - mid - z` and `x`, `z` non-adjacent.
    fn unshielded_triples(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for mid in 0..self.adj.len() {
            let nb: Vec<usize> = self.adj[mid].iter().collect();
            for (i, &x) in nb.iter().enumerate() {
                for &z in &nb[i + 1..] {
                    if !self.adjacent(x, z) {
                        out.push((x, mid, z));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Removes edges by conditioning sets of growing size drawn from the current
/// neighbours of either endpoint, in lexicographic order.
fn adjacency_search(t: &Tester, n: usize, cap: Option<usize>) -> Result<Skeleton> {
    let mut adj: Vec<VarSet> = (0..n).map(|v| VarSet::full(n).without(v)).collect();
    let mut sepsets = BTreeMap::new();
    let mut depth = 0;
    loop {
        let mut more = false;
        for x in 0..n {
            for y in adj[x].iter() {
                if !adj[x].contains(y) {
                    continue;
                }
                let others = adj[x].without(y);
                if others.len() < depth {
                    continue;
                }
                more = true;
                for s in others.subsets_of_size(depth) {
                    if t.independent(x, y, s)? {
                        adj[x].remove(y);
                        adj[y].remove(x);
                        sepsets.insert((x.min(y), x.max(y)), s);
                        break;
                    }
                }
            }
        }
        if !more || cap.is_some_and(|c| depth >= c) {
            break;
        }
        depth += 1;
    }
    Ok(Skeleton { adj, sepsets })
}

/// Orients the requested collider arrows, leaves contested edges undirected,
/// then closes under the orientation rules.
fn orient(
    names: Arc<[String]>,
    skel: &Skeleton,
    arrows: BTreeSet<(usize, usize)>,
    ambiguous: &BTreeSet<(usize, usize, usize)>,
) -> (Pattern, BTreeSet<(usize, usize)>) {
    let n = skel.adj.len();
    let mut p = Pattern::edgeless(names);
    for a in 0..n {
        for b in skel.adj[a].iter().filter(|&b| b > a) {
            p.add_undirected(a, b);
        }
    }
    let mut conflicts = BTreeSet::new();
    for &(t, h) in &arrows {
        if arrows.contains(&(h, t)) {
            conflicts.insert((t.min(h), t.max(h)));
        }
    }
    for &(t, h) in &arrows {
        if conflicts.contains(&(t.min(h), t.max(h))) || !p.is_undirected(t, h) {
            continue;
        }
        if p.directed_reaches(h, t) {
            conflicts.insert((t.min(h), t.max(h)));
            continue;
        }
        p.orient(t, h);
    }
    meek_closure(&mut p, ambiguous, &conflicts);
    (p, conflicts)
}

/// PC: collider `x -> mid <- z` whenever `mid` is outside the recorded
/// separating set of `x` and `z`.
pub fn run_pc(source: &dyn CiSource, names: Arc<[String]>, max_cond_size: Option<usize>) -> Result<DiscoveryResult> {
    check_source(source, &names)?;
    let t = Tester::new(source);
    let skel = adjacency_search(&t, names.len(), max_cond_size)?;
    let mut arrows = BTreeSet::new();
    for (x, mid, z) in skel.unshielded_triples() {
        if !skel.sepset(x, z).contains(mid) {
            arrows.insert((x, mid));
            arrows.insert((z, mid));
        }
    }
    let (pattern, conflicts) = orient(names, &skel, arrows, &BTreeSet::new());
    Ok(DiscoveryResult { pattern, ambiguous: BTreeSet::new(), conflicts, ci_call_count: t.calls() })
}

/// CPC: every subset of the current neighbours of `x` (minus `z`) and of `z`
/// (minus `x`) is tested; the separating sets found, plus the one recorded
/// during the adjacency search, decide the triple.
pub fn run_cpc(source: &dyn CiSource, names: Arc<[String]>, max_cond_size: Option<usize>) -> Result<DiscoveryResult> {
    check_source(source, &names)?;
    let t = Tester::new(source);
    let skel = adjacency_search(&t, names.len(), max_cond_size)?;
    let mut arrows = BTreeSet::new();
    let mut ambiguous = BTreeSet::new();
    for (x, mid, z) in skel.unshielded_triples() {
        let mut with_mid = skel.sepset(x, z).contains(mid) as usize;
        let mut total = 1;
        let mut seen = BTreeSet::from([skel.sepset(x, z)]);
        for pool in [skel.adj[x].without(z), skel.adj[z].without(x)] {
            for s in pool.subsets() {
                if max_cond_size.is_some_and(|c| s.len() > c) || !seen.insert(s) {
                    continue;
                }
                if t.independent(x, z, s)? {
                    total += 1;
                    with_mid += s.contains(mid) as usize;
                }
            }
        }
        if with_mid == 0 {
            arrows.insert((x, mid));
            arrows.insert((z, mid));
        } else if with_mid < total {
            ambiguous.insert((x, mid, z));
        }
    }
    let (pattern, conflicts) = orient(names, &skel, arrows, &ambiguous);
    Ok(DiscoveryResult { pattern, ambiguous, conflicts, ci_call_count: t.calls() })
}

fn check_source(source: &dyn CiSource, names: &[String]) -> Result<()> {
    if source.n_vars() != names.len() {
        return Err(Error::Invalid(format!(
            "source covers {} variables but {} names were given",
            source.n_vars(),
            names.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::OracleSource;
    use crate::graph::{pattern_of, Dag};

    fn dag(names: &[&str], edges: &[(&str, &str)]) -> Dag {
        Dag::from_edges(names, edges).unwrap()
    }

    fn both(g: &Dag) -> (DiscoveryResult, DiscoveryResult) {
        let src = OracleSource::new(g);
        let names: Arc<[String]> = g.names().to_vec().into();
        (run_pc(&src, names.clone(), None).unwrap(), run_cpc(&src, names, None).unwrap())
    }

    #[test]
    fn oracle_collider() {
        let g = dag(&["A", "B", "C"], &[("A", "B"), ("C", "B")]);
        let (pc, cpc) = both(&g);
        assert_eq!(pc.pattern.directed_edges(), vec![(0, 1), (2, 1)]);
        assert!(pc.ambiguous.is_empty() && cpc.ambiguous.is_empty());
        assert_eq!(cpc.pattern, pc.pattern);
        assert_eq!(answer_of(&pc, 0, 1).unwrap(), OrientationAnswer::XtoY);
    }

    #[test]
    fn oracle_chain_and_empty() {
        let g = dag(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let (pc, cpc) = both(&g);
        assert_eq!(pc.pattern, pattern_of(&g));
        assert_eq!(cpc.pattern, pattern_of(&g));
        assert_eq!(answer_of(&pc, 0, 2).unwrap(), OrientationAnswer::NonAdjacent);
        let e = Dag::empty(&["A", "B", "C"]).unwrap();
        let (pc, cpc) = both(&e);
        assert!(pc.pattern.directed_edges().is_empty() && pc.pattern.undirected_edges().is_empty());
        assert_eq!(cpc.pattern, pc.pattern);
    }

    #[test]
    fn oracle_single_edge() {
        let g = dag(&["A", "B"], &[("A", "B")]);
        let (pc, _) = both(&g);
        assert_eq!(answer_of(&pc, 0, 1).unwrap(), OrientationAnswer::AdjacentUnoriented);
    }

    #[test]
    fn call_counts_are_deterministic() {
        let g = dag(&["A", "B", "C", "D"], &[("A", "B"), ("C", "B"), ("B", "D")]);
        let (a, _) = both(&g);
        let (b, _) = both(&g);
        assert_eq!(a, b);
        assert!(a.ci_call_count > 0);
    }

    /// Decides independence from a fixed table, dependent otherwise.
    struct Table(usize, Vec<(usize, usize, VarSet)>);

    impl CiSource for Table {
        fn n_vars(&self) -> usize {
            self.0
        }
        fn decide(&self, x: usize, y: usize, s: VarSet) -> Result<crate::ci::CiDecision> {
            let ind = self.1.iter().any(|&(a, b, t)| (a, b) == (x.min(y), x.max(y)) && t == s);
            Ok(crate::ci::CiDecision {
                independent: ind,
                statistic: 0.0,
                alpha_used: 1.0,
                source: crate::ci::DecisionSource::Test,
            })
        }
    }

    #[test]
    fn cpc_marks_disagreeing_separating_sets_ambiguous() {
        // A - B - C with A, C independent both marginally and given B
        let names: Arc<[String]> = vec!["A".to_string(), "B".into(), "C".into()].into();
        let src = Table(3, vec![(0, 2, VarSet::EMPTY), (0, 2, VarSet::singleton(1))]);
        let pc = run_pc(&src, names.clone(), None).unwrap();
        let cpc = run_cpc(&src, names, None).unwrap();
        assert_eq!(pc.pattern.directed_edges(), vec![(0, 1), (2, 1)]);
        assert_eq!(cpc.ambiguous, BTreeSet::from([(0, 1, 2)]));
        assert!(cpc.pattern.directed_edges().is_empty());
    }

    #[test]
    fn opposing_colliders_leave_edge_undirected() {
        // A - B - C - D with A ⫫ C and B ⫫ D marginally: colliders at B and at C
        // both claim the B - C edge.
        let names: Arc<[String]> = vec!["A".to_string(), "B".into(), "C".into(), "D".into()].into();
        let src = Table(
            4,
            vec![
                (0, 2, VarSet::EMPTY),
                (1, 3, VarSet::EMPTY),
                (0, 3, VarSet::EMPTY),
            ],
        );
        let pc = run_pc(&src, names, None).unwrap();
        assert_eq!(pc.conflicts, BTreeSet::from([(1, 2)]));
        assert!(pc.pattern.is_undirected(1, 2));
        assert!(pc.pattern.is_directed(0, 1) && pc.pattern.is_directed(3, 2));
    }

    #[test]
    fn source_size_must_match() {
        let g = dag(&["A", "B"], &[("A", "B")]);
        let src = OracleSource::new(&g);
        let names: Arc<[String]> = vec!["A".to_string()].into();
        assert!(run_pc(&src, names, None).is_err());
    }
}
