//! Monte Carlo output-frequency curves and retractions in chance.

mod scenario;

pub use scenario::{
    builtin, detection_n, figure1_base, figure2_scenario, figure2_with, make_flip_scenario, parameterize_flip_chain, scenario_tolerance, stage_sample_sizes,
    tune_ladder_ratio, FlipScenario, ScenarioConfig, BUILTIN_NAMES, DEFAULT_BASE, DEFAULT_JITTER_SEED, DEFAULT_RATIO, DEFAULT_SEED,
};

use std::fmt;

use crate::ci::OracleSource;
use crate::discovery::{answer_of, Method};
use crate::error::{Error, Result};
use crate::format::{curves_csv, retraction_csv};
use crate::graph::{orientation_answer, pattern_of, Dag, OrientationAnswer};
use crate::sem::{Dataset, LinearSem};

/// Strictly increasing sample sizes, all at least [`SampleGrid::MIN_N`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleGrid(Vec<usize>);

impl SampleGrid {
    pub const MIN_N: usize = 10;

    pub fn new(sizes: Vec<usize>) -> Result<SampleGrid> {
        if sizes.is_empty() {
            return Err(Error::Grid("grid is empty".into()));
        }
        if let Some(&n) = sizes.iter().find(|&&n| n < Self::MIN_N) {
            return Err(Error::Grid(format!("sample size {n} is below {}", Self::MIN_N)));
        }
        if let Some(w) = sizes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Grid(format!("sizes must increase strictly ({} then {})", w[0], w[1])));
        }
        Ok(SampleGrid(sizes))
    }

    /// `points` sizes spaced evenly in log scale from `lo` to `hi`, rounded.
    pub fn geometric(lo: usize, hi: usize, points: usize) -> Result<SampleGrid> {
        if points == 0 || lo > hi || (points == 1 && lo != hi) {
            return Err(Error::Grid(format!("cannot place {points} points on {lo}..{hi}")));
        }
        if points == 1 {
            return SampleGrid::new(vec![lo]);
        }
        let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
        let sizes = (0..points)
            .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as usize)
            .collect();
        SampleGrid::new(sizes)
    }

    /// Parses `lo:hi:points`.
    pub fn parse(spec: &str) -> Result<SampleGrid> {
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        let [lo, hi, pts] = parts[..] else {
            return Err(Error::Grid(format!("expected lo:hi:points, got `{spec}`")));
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Grid(format!("`{s}` is not a count")));
        SampleGrid::geometric(num(lo)?, num(hi)?, num(pts)?)
    }

    /// The default sweep: 20 points from 100 to 100000.
    pub fn standard() -> SampleGrid {
        SampleGrid::geometric(100, 100_000, 20).expect("valid default grid")
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Anything that answers the focus question from a sample.
pub trait Learner: Sync {
    fn label(&self) -> String;

    /// Whether [`Learner::answer`] reads its data; if not, no sample is drawn.
    fn needs_data(&self) -> bool {
        true
    }

    fn answer(&self, data: Option<&Dataset>, x: usize, y: usize) -> Result<OrientationAnswer>;
}

impl Learner for Method {
    fn label(&self) -> String {
        self.kind.as_str().to_owned()
    }

    fn answer(&self, data: Option<&Dataset>, x: usize, y: usize) -> Result<OrientationAnswer> {
        let data = data.ok_or_else(|| Error::Invalid("discovery needs a sample".into()))?;
        answer_of(&self.discover(data)?, x, y)
    }
}

/// A method fed by the d-separation oracle of a fixed graph.
#[derive(Debug, Clone, Copy)]
pub struct OracleLearner<'a> {
    pub method: Method,
    pub dag: &'a Dag,
}

impl Learner for OracleLearner<'_> {
    fn label(&self) -> String {
        format!("{}-oracle", self.method.kind.as_str())
    }

    fn needs_data(&self) -> bool {
        false
    }

    fn answer(&self, _: Option<&Dataset>, x: usize, y: usize) -> Result<OrientationAnswer> {
        let src = OracleSource::new(self.dag);
        answer_of(&self.method.run(&src, self.dag.shared_names())?, x, y)
    }
}

/// Always gives the same answer.
#[derive(Debug, Clone, Copy)]
pub struct ConstantLearner(pub OrientationAnswer);

impl Learner for ConstantLearner {
    fn label(&self) -> String {
        format!("constant-{}", self.0)
    }

    fn needs_data(&self) -> bool {
        false
    }

    fn answer(&self, _: Option<&Dataset>, _: usize, _: usize) -> Result<OrientationAnswer> {
        Ok(self.0)
    }
}

/// The answer implied by the true graph itself.
pub fn true_answer(truth: &LinearSem, x: usize, y: usize) -> Result<OrientationAnswer> {
    orientation_answer(&pattern_of(truth.dag()), x, y)
}

/// How trials are scheduled. Results never depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// A worker pool of `threads` threads; 0 means the available parallelism.
    /// Without the `parallel` feature this runs sequentially.
    #[default]
    Parallel,
    Threads(usize),
}

/// The per-trial seed: a SplitMix64 mix of the master seed and the indices.
pub fn trial_seed(master: u64, grid_index: usize, trial_index: usize) -> u64 {
    let mut z = master;
    for word in [grid_index as u64, trial_index as u64] {
        z = splitmix(z ^ splitmix(word.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Answer tallies per grid point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyCurves {
    pub grid: SampleGrid,
    /// `tallies[i][a.index()]` counts answer `a` at grid point `i`.
    pub tallies: Vec<[u32; 4]>,
    pub trials: u32,
    pub seed: u64,
}

impl FrequencyCurves {
    pub fn frequency(&self, answer: OrientationAnswer, i: usize) -> f64 {
        self.tallies[i][answer.index()] as f64 / self.trials as f64
    }

    pub fn curve(&self, answer: OrientationAnswer) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.frequency(answer, i)).collect()
    }

    /// Frequencies of all four answers, in [`OrientationAnswer::ALL`] order.
    pub fn curves(&self) -> [Vec<f64>; 4] {
        OrientationAnswer::ALL.map(|a| self.curve(a))
    }
}

/// Runs `trials` fresh samples per grid point through `learner` and tallies
/// the answers for `pair`.
pub fn estimate_curves(
    learner: &dyn Learner,
    truth: &LinearSem,
    pair: (usize, usize),
    grid: &SampleGrid,
    trials: u32,
    seed: u64,
    exec: Execution,
) -> Result<FrequencyCurves> {
    if trials == 0 {
        return Err(Error::Invalid("at least one trial is required".into()));
    }
    truth.dag().check_index(pair.0)?;
    truth.dag().check_index(pair.1)?;
    let jobs: Vec<(usize, usize)> =
        (0..grid.len()).flat_map(|g| (0..trials as usize).map(move |t| (g, t))).collect();
    let run = |&(g, t): &(usize, usize)| -> Result<(usize, OrientationAnswer)> {
        let data = if learner.needs_data() {
            Some(truth.sample(grid.sizes()[g], trial_seed(seed, g, t))?)
        } else {
            None
        };
        Ok((g, learner.answer(data.as_ref(), pair.0, pair.1)?))
    };
    let answers = run_jobs(&jobs, run, exec)?;
    let mut tallies = vec![[0u32; 4]; grid.len()];
    for (g, a) in answers {
        tallies[g][a.index()] += 1;
    }
    Ok(FrequencyCurves { grid: grid.clone(), tallies, trials, seed })
}

fn run_jobs<J, T, F>(jobs: &[J], f: F, exec: Execution) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T> + Sync,
{
    match exec {
        Execution::Sequential => jobs.iter().map(f).collect(),
        Execution::Parallel => parallel::run(jobs, f, 0),
        Execution::Threads(n) => parallel::run(jobs, f, n),
    }
}

#[cfg(feature = "parallel")]
mod parallel {
    use rayon::prelude::*;

    use crate::error::{Error, Result};

    pub(super) fn run<J, T, F>(jobs: &[J], f: F, threads: usize) -> Result<Vec<T>>
    where
        J: Sync,
        T: Send,
        F: Fn(&J) -> Result<T> + Sync,
    {
        if threads == 0 {
            return jobs.par_iter().map(&f).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(&f).collect())
    }
}

#[cfg(not(feature = "parallel"))]
mod parallel {
    use crate::error::Result;

    pub(super) fn run<J, T, F>(jobs: &[J], f: F, _threads: usize) -> Result<Vec<T>>
    where
        F: Fn(&J) -> Result<T>,
    {
        jobs.iter().map(f).collect()
    }
}

/// Retractions in chance summed over consecutive grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct RetractionProfile {
    /// Per answer, in [`OrientationAnswer::ALL`] order.
    pub per_theory: [f64; 4],
    pub total: f64,
    /// `steps[i]` holds the drops between grid points `i` and `i + 1`.
    pub steps: Vec<[f64; 4]>,
}

impl RetractionProfile {
    pub fn of(&self, answer: OrientationAnswer) -> f64 {
        self.per_theory[answer.index()]
    }
}

/// `max(0, a - b)`.
pub fn monus(a: f64, b: f64) -> f64 {
    (a - b).max(0.0)
}

/// Total drop along one frequency curve.
pub fn curve_retraction(curve: &[f64]) -> f64 {
    curve.windows(2).map(|w| monus(w[0], w[1])).sum()
}

pub fn retractions(curves: &FrequencyCurves) -> RetractionProfile {
    let c = curves.curves();
    let steps: Vec<[f64; 4]> =
        (1..curves.grid.len()).map(|i| std::array::from_fn(|a| monus(c[a][i - 1], c[a][i]))).collect();
    let per_theory: [f64; 4] = std::array::from_fn(|a| curve_retraction(&c[a]));
    RetractionProfile { per_theory, total: per_theory.iter().sum(), steps }
}

/// Curves for several learners on one scenario, with both CSV tables.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvesReport {
    pub runs: Vec<(String, FrequencyCurves, RetractionProfile)>,
    pub curves_csv: String,
    pub retraction_csv: String,
}

/// Every learner sees the same samples.
#[allow(clippy::too_many_arguments)]
pub fn curves_report(
    scenario: &str,
    truth: &LinearSem,
    pair: (usize, usize),
    learners: &[&dyn Learner],
    grid: &SampleGrid,
    trials: u32,
    seed: u64,
    exec: Execution,
) -> Result<CurvesReport> {
    let mut report = CurvesReport { runs: Vec::new(), curves_csv: String::new(), retraction_csv: String::new() };
    for (i, learner) in learners.iter().enumerate() {
        let label = learner.label();
        let c = estimate_curves(*learner, truth, pair, grid, trials, seed, exec)?;
        let r = retractions(&c);
        report.curves_csv.push_str(&curves_csv(scenario, &label, &c, i == 0));
        report.retraction_csv.push_str(&retraction_csv(scenario, &label, &r, i == 0));
        report.runs.push((label, c, r));
    }
    Ok(report)
}

impl fmt::Display for SampleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        f.write_str(&s.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::AlphaSchedule;
    use crate::discovery::MethodKind;
    use OrientationAnswer::*;

    #[test]
    fn grids() {
        let g = SampleGrid::standard();
        assert_eq!(g.len(), 20);
        assert_eq!(g.sizes()[0], 100);
        assert_eq!(g.sizes()[19], 100_000);
        assert_eq!(SampleGrid::parse("100:1000:3").unwrap().sizes(), &[100, 316, 1000]);
        assert!(SampleGrid::parse("10:12:5").is_err());
        assert!(SampleGrid::parse("5:100:3").is_err());
        assert!(SampleGrid::parse("100:1000").is_err());
        assert!(SampleGrid::new(vec![20, 20]).is_err());
    }

    #[test]
    fn seeds_differ_across_indices() {
        let s: std::collections::BTreeSet<u64> =
            (0..10).flat_map(|g| (0..10).map(move |t| trial_seed(7, g, t))).collect();
        assert_eq!(s.len(), 100);
        assert_eq!(trial_seed(7, 3, 4), trial_seed(7, 3, 4));
        assert_ne!(trial_seed(7, 3, 4), trial_seed(8, 3, 4));
    }

    fn two_node(b: f64) -> LinearSem {
        let g = Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        LinearSem::new_standardized(g, &[(0, 1, b)]).unwrap()
    }

    #[test]
    fn constant_learner_gives_flat_curves() {
        let m = two_node(0.5);
        let grid = SampleGrid::geometric(10, 1000, 4).unwrap();
        let c = estimate_curves(&ConstantLearner(NonAdjacent), &m, (0, 1), &grid, 5, 1, Execution::Sequential)
            .unwrap();
        assert_eq!(c.curve(NonAdjacent), vec![1.0; 4]);
        assert_eq!(retractions(&c).total, 0.0);
    }

    #[test]
    fn oracle_learner_gives_true_answer() {
        let m = two_node(0.5);
        let grid = SampleGrid::geometric(10, 1000, 3).unwrap();
        let method = Method::new(MethodKind::Pc, AlphaSchedule::Fixed(0.05));
        let l = OracleLearner { method, dag: m.dag() };
        let c = estimate_curves(&l, &m, (0, 1), &grid, 3, 1, Execution::Sequential).unwrap();
        assert_eq!(true_answer(&m, 0, 1).unwrap(), AdjacentUnoriented);
        assert_eq!(c.curve(AdjacentUnoriented), vec![1.0; 3]);
    }

    #[test]
    fn two_node_pc_converges_to_unoriented() {
        let m = two_node(0.5);
        let grid = SampleGrid::new(vec![10, 1000]).unwrap();
        let method = Method::new(MethodKind::Pc, AlphaSchedule::Fixed(0.05));
        let c = estimate_curves(&method, &m, (0, 1), &grid, 50, 3, Execution::Parallel).unwrap();
        assert_eq!(c.frequency(AdjacentUnoriented, 1), 1.0);
        for i in 0..2 {
            let s: u32 = c.tallies[i].iter().sum();
            assert_eq!(s, 50);
        }
    }

    #[test]
    fn execution_does_not_change_results() {
        let m = two_node(0.2);
        let grid = SampleGrid::geometric(20, 200, 3).unwrap();
        let method = Method::new(MethodKind::Cpc, AlphaSchedule::Fixed(0.05));
        let a = estimate_curves(&method, &m, (0, 1), &grid, 20, 9, Execution::Sequential).unwrap();
        let b = estimate_curves(&method, &m, (0, 1), &grid, 20, 9, Execution::Threads(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn retraction_arithmetic() {
        assert!((curve_retraction(&[1.0, 0.2, 0.7]) - 0.8).abs() < 1e-12);
        assert_eq!(curve_retraction(&[0.0, 0.3, 0.3, 1.0]), 0.0);
        let grid = SampleGrid::new(vec![10, 20, 30]).unwrap();
        let c = FrequencyCurves {
            grid,
            tallies: vec![[9, 1, 0, 0], [1, 9, 0, 0], [9, 1, 0, 0]],
            trials: 10,
            seed: 0,
        };
        let r = retractions(&c);
        assert!((r.of(XtoY) - 0.8).abs() < 1e-12);
        assert!((r.of(YtoX) - 0.8).abs() < 1e-12);
        assert!((r.total - 1.6).abs() < 1e-12);
        assert_eq!(r.steps.len(), 2);
    }
}
