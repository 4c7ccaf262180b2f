//! Brute-force verification suites, shared by the test suite and the CLI.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chickering::{chickering_reachable, default_budget, flip_covered, is_covered};
use crate::ci::{fisher_z_decide, partial_correlation_in, OracleSource};
use crate::discovery::{run_cpc, run_pc};
use crate::enumerate::{all_dags, default_names, random_dag};
use crate::error::{Error, Result};
use crate::format::render_dag;
use crate::graph::{cic_pattern, markov_equivalent, pattern_of, Dag};
use crate::sem::LinearSem;
use crate::varset::VarSet;

pub const SUITES: [&str; 5] = ["prop1", "chickering", "covered-flip", "oracle-pc", "fisher-z"];

/// Counterexamples are kept up to this many.
const MAX_REPORTED: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checked: usize,
    pub failed: usize,
    /// Up to ten counterexamples, graphs in DAG text format.
    pub counterexamples: Vec<String>,
    pub note: String,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    pub fn summary(&self) -> String {
        let status = if self.passed() { "pass" } else { "FAIL" };
        let mut s = format!(
            "{}: {status} ({} checked, {} failed, {:.1}s)",
            self.suite,
            self.checked,
            self.failed,
            self.elapsed.as_secs_f64()
        );
        if !self.note.is_empty() {
            s.push_str(&format!(" {}", self.note));
        }
        s
    }
}

struct Tally {
    checked: usize,
    failed: usize,
    examples: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { checked: 0, failed: 0, examples: Vec::new() }
    }

    fn check(&mut self, ok: bool, example: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.examples.len() < MAX_REPORTED {
                self.examples.push(example());
            }
        }
    }

    fn finish(self, suite: &'static str, note: String, start: Instant) -> SuiteReport {
        SuiteReport {
            suite,
            checked: self.checked,
            failed: self.failed,
            counterexamples: self.examples,
            note,
            elapsed: start.elapsed(),
        }
    }
}

fn pair_text(g: &Dag, h: &Dag) -> String {
    format!("{}--\n{}", render_dag(g), render_dag(h))
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "prop1" => prop1(&[3, 4]),
        "chickering" => theorem1(100, seed),
        "covered-flip" => covered_flips(5),
        "oracle-pc" => oracle_pc(5, 200, seed),
        "fisher-z" => fisher_z_calibration(0.05, 1000, 5000, seed),
        _ => Err(Error::Invalid(format!("unknown suite `{name}` (suites: {})", SUITES.join(", ")))),
    }
}

/// For every ordered pair of DAGs on each vertex count: Markov equivalence,
/// equal CIC patterns and equal patterns agree.
pub fn prop1(sizes: &[usize]) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut t = Tally::new();
    for &n in sizes {
        let dags = all_dags(&default_names(n));
        let cics = dags.iter().map(cic_pattern).collect::<Result<Vec<_>>>()?;
        let pats: Vec<_> = dags.iter().map(pattern_of).collect();
        for i in 0..dags.len() {
            for j in 0..dags.len() {
                let me = markov_equivalent(&dags[i], &dags[j])?;
                let ok = me == (cics[i] == cics[j]) && me == (pats[i] == pats[j]);
                t.check(ok, || pair_text(&dags[i], &dags[j]));
            }
        }
    }
    Ok(t.finish("prop1", format!("sizes {sizes:?}"), start))
}

/// `h ⪯ g` is witnessed by a move sequence exactly when `I(g) ⊆ I(h)`:
/// every ordered pair on 3 vertices and `random_pairs` pairs on 4.
pub fn theorem1(random_pairs: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut t = Tally::new();
    let check = |h: &Dag, g: &Dag, t: &mut Tally| -> Result<()> {
        let included = cic_pattern(g)?.is_subset(&cic_pattern(h)?);
        let path = chickering_reachable(h, g, default_budget(h, g))?;
        let replayed = match &path {
            Some(moves) => {
                let mut cur = h.clone();
                for mv in moves {
                    cur = mv.apply(&cur)?;
                }
                &cur == g
            }
            None => true,
        };
        t.check(included == path.is_some() && replayed, || pair_text(h, g));
        Ok(())
    };
    let three = all_dags(&default_names(3));
    for h in &three {
        for g in &three {
            check(h, g, &mut t)?;
        }
    }
    let names = default_names(4);
    let four = all_dags(&names);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut included = 0;
    for i in 0..random_pairs {
        // alternate unrelated pairs with pairs built to be comparable
        let h = four[rng.random_range(0..four.len())].clone();
        let g = if i % 2 == 0 {
            four[rng.random_range(0..four.len())].clone()
        } else {
            grow(&h, &mut rng)
        };
        if cic_pattern(&g)?.is_subset(&cic_pattern(&h)?) {
            included += 1;
        }
        check(&h, &g, &mut t)?;
    }
    let note = format!("{random_pairs} random 4-vertex pairs, {included} with I(g) in I(h)");
    Ok(t.finish("chickering", note, start))
}

/// A random supergraph reached by covered flips and additions.
fn grow<R: Rng>(h: &Dag, rng: &mut R) -> Dag {
    let mut g = h.clone();
    for _ in 0..6 {
        let n = g.len();
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a == b {
            continue;
        }
        if g.has_edge(a, b) && is_covered(&g, a, b).unwrap_or(false) {
            g = flip_covered(&g, a, b).expect("covered");
        } else if rng.random_bool(0.4) {
            if let Ok(next) = g.with_edge(a, b) {
                g = next;
            }
        }
    }
    g
}

/// Every covered edge of every DAG on up to `max_n` vertices flips without
/// changing the CIC pattern.
pub fn covered_flips(max_n: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut t = Tally::new();
    for n in 2..=max_n {
        for g in all_dags(&default_names(n)) {
            let before = cic_pattern(&g)?;
            for (a, b) in g.edges() {
                if is_covered(&g, a, b)? {
                    let f = flip_covered(&g, a, b)?;
                    t.check(cic_pattern(&f)? == before, || pair_text(&g, &f));
                }
            }
        }
    }
    Ok(t.finish("covered-flip", format!("up to {max_n} vertices"), start))
}

/// PC and CPC fed by the d-separation oracle return `pattern_of(truth)` on
/// every DAG up to `max_n` vertices and `random` DAGs on `max_n + 1`.
pub fn oracle_pc(max_n: usize, random: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut t = Tally::new();
    let check = |g: &Dag, t: &mut Tally| -> Result<()> {
        let src = OracleSource::new(g);
        let want = pattern_of(g);
        let pc = run_pc(&src, g.shared_names(), None)?;
        let cpc = run_cpc(&src, g.shared_names(), None)?;
        let ok = pc.pattern == want && cpc.pattern == want && cpc.ambiguous.is_empty() && pc.conflicts.is_empty();
        t.check(ok, || render_dag(g));
        Ok(())
    };
    for n in 1..=max_n {
        for g in all_dags(&default_names(n)) {
            check(&g, &mut t)?;
        }
    }
    let names = default_names(max_n + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let density = rng.random_range(0.2..0.7);
        check(&random_dag(&names, density, &mut rng), &mut t)?;
    }
    Ok(t.finish("oracle-pc", format!("all DAGs to {max_n} vertices, {random} on {}", max_n + 1), start))
}

/// Rejection rate of true null hypotheses. Each trial draws a chain
/// `A -> B -> C` with coefficients uniform on `±[0.3, 0.8]`, samples `n`
/// rows and tests `A ⫫ C | B`. Passes when the rate is within 0.02 of
/// `alpha`.
pub fn fisher_z_calibration(alpha: f64, n: usize, trials: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let rate = null_rejection_rate(alpha, n, trials, seed)?;
    let mut t = Tally::new();
    t.check((rate - alpha).abs() <= 0.02, || format!("rejection rate {rate:.4} vs alpha {alpha}"));
    Ok(t.finish("fisher-z", format!("rejection rate {rate:.4} at n = {n} over {trials} trials"), start))
}

pub fn null_rejection_rate(alpha: f64, n: usize, trials: usize, seed: u64) -> Result<f64> {
    let g = Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("B", "C")])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coef = move || {
        let m: f64 = rng.random_range(0.3..0.8);
        if rng.random_bool(0.5) {
            m
        } else {
            -m
        }
    };
    let mut rejected = 0;
    for trial in 0..trials {
        let m = LinearSem::new_standardized(g.clone(), &[(0, 1, coef()), (1, 2, coef())])?;
        let data = m.sample(n, seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
        let r = partial_correlation_in(&data.correlation(), 0, 2, VarSet::singleton(1))?;
        if !fisher_z_decide(r, n, 1, alpha)?.independent {
            rejected += 1;
        }
    }
    Ok(rejected as f64 / trials as f64)
}
