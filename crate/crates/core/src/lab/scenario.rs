//! Built-in models and the flip-scenario construction.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SampleGrid;
use crate::chickering::{build_flip_chain_with, Completion, FlipChain, MoveKind};
use crate::ci::critical_value;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::sem::{check_faithful, LinearSem};

/// A model plus the run settings that travel with it in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub sem: LinearSem,
    pub focus: (usize, usize),
    pub grid: Option<SampleGrid>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    /// Edges whose coefficients are stand-ins rather than published values.
    pub reconstructed: BTreeSet<(usize, usize)>,
}

impl ScenarioConfig {
    pub fn new(sem: LinearSem, focus: (usize, usize)) -> Result<ScenarioConfig> {
        sem.dag().check_index(focus.0)?;
        sem.dag().check_index(focus.1)?;
        if focus.0 == focus.1 {
            return Err(Error::InvalidQuery("focus pair needs two distinct vertices".into()));
        }
        Ok(ScenarioConfig { sem, focus, grid: None, trials: None, seed: None, reconstructed: BTreeSet::new() })
    }
}

pub const BUILTIN_NAMES: [&str; 5] = ["collider3", "two-node", "chain3", "figure1-flip", "figure2"];

/// Looks up a built-in scenario by name.
pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let fixed = |names: &[&str], edges: &[(&str, &str, f64)], focus: (&str, &str)| -> Result<ScenarioConfig> {
        let pairs: Vec<(&str, &str)> = edges.iter().map(|&(t, h, _)| (t, h)).collect();
        let g = Dag::from_edges(names, &pairs)?;
        let coefs = edges
            .iter()
            .map(|&(t, h, b)| Ok((g.index_of(t)?, g.index_of(h)?, b)))
            .collect::<Result<Vec<_>>>()?;
        let focus = (g.index_of(focus.0)?, g.index_of(focus.1)?);
        ScenarioConfig::new(LinearSem::new_standardized(g, &coefs)?, focus)
    };
    match name {
        "collider3" => fixed(&["A", "B", "C"], &[("A", "B", 0.5), ("C", "B", 0.5)], ("A", "B")),
        "two-node" => fixed(&["X", "Y"], &[("X", "Y", 0.5)], ("X", "Y")),
        "chain3" => fixed(&["A", "B", "C"], &[("A", "B", 0.5), ("B", "C", 0.5)], ("A", "B")),
        "figure1-flip" => {
            let s = make_flip_scenario(&figure1_base(), (0, 1), 2, DEFAULT_BASE, DEFAULT_RATIO, DEFAULT_JITTER_SEED)?;
            let mut c = ScenarioConfig::new(s.truth, s.focus)?;
            c.grid = Some(SampleGrid::standard());
            c.trials = Some(100);
            c.seed = Some(DEFAULT_SEED);
            Ok(c)
        }
        "figure2" => {
            let mut c = ScenarioConfig::new(figure2_scenario(), (0, 1))?;
            let g = c.sem.dag().clone();
            let published = [("Z3", "Z4"), ("Z8", "X"), ("X", "Y")]
                .map(|(t, h)| (g.index_of(t).expect("vertex"), g.index_of(h).expect("vertex")));
            c.reconstructed = g.edges().into_iter().filter(|e| !published.contains(e)).collect();
            c.grid = Some(SampleGrid::standard());
            c.trials = Some(100);
            c.seed = Some(DEFAULT_SEED);
            Ok(c)
        }
        _ => Err(Error::Invalid(format!(
            "unknown scenario `{name}` (built-ins: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

pub const DEFAULT_BASE: f64 = 0.6;
pub const DEFAULT_RATIO: f64 = 0.18;
/// Seeds the coefficient jitter of the built-in flip scenario.
pub const DEFAULT_JITTER_SEED: u64 = 2;
pub const DEFAULT_SEED: u64 = 20100;

/// `X`, `Y` and `Z1..Z8` with `Z1 -> X <- Z2`, `X -> Y -> Z3`; `Z4..Z8`
/// isolated.
pub fn figure1_base() -> Dag {
    let names = ["X", "Y", "Z1", "Z2", "Z3", "Z4", "Z5", "Z6", "Z7", "Z8"];
    Dag::from_edges(&names, &[("Z1", "X"), ("Z2", "X"), ("X", "Y"), ("Y", "Z3")]).expect("acyclic")
}

/// The standardized model behind the simulations: `Z3 -> Z4 = -0.02501`,
/// `Z8 -> X = 0.005` and `X -> Y = 0.5`, other edges at 0.5 (early) or 0.05
/// (late).
pub fn figure2_scenario() -> LinearSem {
    figure2_with(0.5, 0.05).expect("standardizable")
}

/// [`figure2_scenario`] with other magnitudes for the edges whose values are
/// not published.
pub fn figure2_with(early: f64, late: f64) -> Result<LinearSem> {
    let names = ["X", "Y", "Z1", "Z2", "Z3", "Z4", "Z5", "Z6", "Z7", "Z8"];
    let edges = [
        ("Z1", "X", early),
        ("X", "Z2", early),
        ("X", "Y", 0.5),
        ("Y", "Z3", early),
        ("Z1", "Z2", late),
        ("Y", "Z4", late),
        ("Z3", "Z4", -0.02501),
        ("Z8", "X", 0.005),
    ];
    let pairs: Vec<(&str, &str)> = edges.iter().map(|&(t, h, _)| (t, h)).collect();
    let g = Dag::from_edges(&names, &pairs)?;
    let coefs = edges
        .iter()
        .map(|&(t, h, b)| Ok((g.index_of(t)?, g.index_of(h)?, b)))
        .collect::<Result<Vec<_>>>()?;
    LinearSem::new_standardized(g, &coefs)
}

/// A parameterized flip chain. `stages[i]` models `chain.graphs[i]`; the
/// last one is the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipScenario {
    pub truth: LinearSem,
    pub chain: FlipChain,
    pub focus: (usize, usize),
    /// Nominal coefficient magnitude of the edges added at each stage.
    pub ladder: Vec<f64>,
    pub stages: Vec<LinearSem>,
    /// Tolerance the truth passed the faithfulness check at.
    pub tol: f64,
}

/// Builds a `k`-step chain on `base`, parameterizes it with
/// [`parameterize_flip_chain`] and checks the truth is faithful at
/// [`scenario_tolerance`].
pub fn make_flip_scenario(
    base: &Dag,
    pair: (usize, usize),
    k: usize,
    base_coeff: f64,
    ladder_ratio: f64,
    seed: u64,
) -> Result<FlipScenario> {
    let mut s = parameterize_flip_chain(base, pair, k, base_coeff, ladder_ratio, seed)?;
    s.tol = scenario_tolerance(&s.ladder);
    check_faithful(&s.truth, s.tol)?;
    Ok(s)
}

/// Faithfulness tolerance for a ladder: the squared smallest magnitude over
/// 100. Dependencies induced through colliders scale with products of two
/// coefficients, so a tolerance linear in the magnitude cannot be met.
pub fn scenario_tolerance(ladder: &[f64]) -> f64 {
    ladder.iter().copied().fold(f64::INFINITY, f64::min).powi(2) / 100.0
}

/// Stage 0 gives every edge of `base` magnitude `base_coeff`. Each later
/// step adds its edges with magnitude `base_coeff * ladder_ratio^i` (times a
/// seeded jitter in `[0.9, 1.1]`), re-standardizes, and turns covered flips
/// into the regression coefficients of the flipped graph, which leaves the
/// distribution unchanged. Every stage therefore differs from the one
/// before only by its weak new edges. No faithfulness check is made; `tol`
/// is left at zero.
pub fn parameterize_flip_chain(
    base: &Dag,
    pair: (usize, usize),
    k: usize,
    base_coeff: f64,
    ladder_ratio: f64,
    seed: u64,
) -> Result<FlipScenario> {
    if !(base_coeff > 0.0 && base_coeff < 1.0) {
        return Err(Error::Invalid(format!("base coefficient {base_coeff} must lie in (0, 1)")));
    }
    if !(ladder_ratio > 0.0 && ladder_ratio < 0.9) {
        return Err(Error::Invalid(format!("ladder ratio {ladder_ratio} must lie in (0, 0.9)")));
    }
    let chain = build_flip_chain_with(base, pair.0, pair.1, k, Completion::Minimal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = move || rng.random_range(0.9..1.1);
    let ladder: Vec<f64> = (0..=k).map(|i| base_coeff * ladder_ratio.powi(i as i32)).collect();

    let coefs: Vec<_> = base.edges().into_iter().map(|(t, h)| (t, h, ladder[0] * jitter())).collect();
    let mut cur = LinearSem::new_standardized(base.clone(), &coefs)?;
    let mut stages = vec![cur.clone()];
    for (i, moves) in chain.moves.iter().enumerate() {
        for mv in moves {
            let dag = mv.apply(cur.dag())?;
            cur = match mv.kind {
                MoveKind::CoveredFlip => cur.reparameterize(dag)?,
                MoveKind::AddEdge => {
                    let mut c = cur.coefficients();
                    c.push((mv.tail, mv.head, ladder[i + 1] * jitter()));
                    LinearSem::new_standardized(dag, &c)?
                }
            };
        }
        stages.push(cur.clone().assert_standardized()?);
    }
    Ok(FlipScenario { truth: cur, chain, focus: pair, ladder, stages, tol: 0.0 })
}

/// Sample size at which a two-sided test at level `alpha` detects a partial
/// correlation of `r` with probability `power`.
pub fn detection_n(r: f64, alpha: f64, power: f64) -> f64 {
    let z_power = critical_value(2.0 * (1.0 - power));
    let z = critical_value(alpha) + z_power;
    (z / r.abs().atanh()).powi(2) + 3.0
}

/// Detection sample size of each stage's nominal magnitude at power 0.9.
pub fn stage_sample_sizes(s: &FlipScenario, alpha: f64) -> Vec<f64> {
    s.ladder.iter().map(|&b| detection_n(b, alpha, 0.9)).collect()
}

/// The ladder ratio that places the last stage's detection point (power 0.9)
/// at `target_n`: the `k`-th root of the magnitude detected there over
/// `base_coeff`.
pub fn tune_ladder_ratio(base_coeff: f64, k: usize, target_n: f64, alpha: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Invalid("a ladder needs at least one flip".into()));
    }
    let z = critical_value(alpha) + critical_value(0.2);
    let b = ((z / (target_n - 3.0).sqrt()).tanh()).min(base_coeff);
    Ok((b / base_coeff).powf(1.0 / k as f64))
}
