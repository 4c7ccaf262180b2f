//! Conditional independence decisions: Fisher-z tests on sample partial
//! correlations, and d-separation in a known graph.

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::{d_separated, Dag};
use crate::sem::{CovMatrix, Dataset};
use crate::varset::VarSet;

/// Sample correlations are clipped to this magnitude before the z-transform.
pub const CLIP: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionSource {
    Test,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiDecision {
    pub independent: bool,
    pub statistic: f64,
    pub alpha_used: f64,
    pub source: DecisionSource,
}

/// Significance level as a function of sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSchedule {
    Fixed(f64),
    /// `α₀ / (1 + ln ln max(n, 3))`: vanishes, but slower than any power of `n`.
    Decreasing(f64),
}

impl AlphaSchedule {
    pub fn fixed(alpha: f64) -> Result<AlphaSchedule> {
        check_alpha(alpha)?;
        Ok(AlphaSchedule::Fixed(alpha))
    }

    pub fn decreasing(alpha: f64) -> Result<AlphaSchedule> {
        check_alpha(alpha)?;
        Ok(AlphaSchedule::Decreasing(alpha))
    }

    pub fn base(&self) -> f64 {
        match *self {
            AlphaSchedule::Fixed(a) | AlphaSchedule::Decreasing(a) => a,
        }
    }

    pub fn alpha(&self, n: usize) -> f64 {
        schedule_alpha(self, n)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("significance level {alpha} is outside (0, 1)")))
    }
}

pub fn schedule_alpha(s: &AlphaSchedule, n: usize) -> f64 {
    match *s {
        AlphaSchedule::Fixed(a) => a,
        AlphaSchedule::Decreasing(a) => a / (1.0 + (n.max(3) as f64).ln().ln()),
    }
}

/// Partial correlation of `x` and `y` given `s` in an arbitrary covariance
/// (or correlation) matrix, via the inverse of the `{x, y} ∪ s` block.
pub(crate) fn partial_correlation_in(m: &DMatrix<f64>, x: usize, y: usize, s: VarSet) -> Result<f64> {
    let p = m.nrows();
    if x >= p || y >= p || s.iter().any(|v| v >= p) {
        return Err(Error::VertexIndex(x.max(y).max(s.iter().last().unwrap_or(0))));
    }
    if x == y || s.contains(x) || s.contains(y) {
        return Err(Error::InvalidQuery("conditioning set overlaps the pair".into()));
    }
    if s.is_empty() {
        let d = (m[(x, x)] * m[(y, y)]).sqrt();
        if d.is_nan() || d <= 0.0 {
            return Err(Error::Singular);
        }
        return Ok((m[(x, y)] / d).clamp(-1.0, 1.0));
    }
    let idx: Vec<usize> = [x, y].into_iter().chain(s.iter()).collect();
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |i, j| m[(idx[i], idx[j])]);
    let chol = sub.cholesky().ok_or(Error::Singular)?;
    // only the top-left 2x2 block of the inverse is needed
    let mut rhs = DMatrix::zeros(k, 2);
    rhs[(0, 0)] = 1.0;
    rhs[(1, 1)] = 1.0;
    let inv = chol.solve(&rhs);
    let (pxx, pyy, pxy) = (inv[(0, 0)], inv[(1, 1)], inv[(0, 1)]);
    if !(pxx > 0.0 && pyy > 0.0) {
        return Err(Error::Singular);
    }
    Ok((-pxy / (pxx * pyy).sqrt()).clamp(-1.0, 1.0))
}

pub fn partial_correlation(cov: &CovMatrix, x: usize, y: usize, s: VarSet) -> Result<f64> {
    partial_correlation_in(cov.matrix(), x, y, s)
}

/// Two-sided critical value `z_{1-α/2}` of the standard normal.
pub fn critical_value(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// Fisher's z test of `r = 0` with `k` conditioning variables:
/// `√(n−k−3) · atanh(r)` against `z_{1−α/2}`.
pub fn fisher_z_decide(r: f64, n: usize, k: usize, alpha: f64) -> Result<CiDecision> {
    check_alpha(alpha)?;
    if n <= k + 3 {
        return Err(Error::NotDecidable { n, k });
    }
    if !r.is_finite() {
        return Err(Error::InvalidQuery(format!("correlation {r} is not finite")));
    }
    Ok(fisher_z_with_critical(r, n, k, alpha, critical_value(alpha)))
}

fn fisher_z_with_critical(r: f64, n: usize, k: usize, alpha: f64, crit: f64) -> CiDecision {
    let r = r.clamp(-CLIP, CLIP);
    let statistic = ((n - k - 3) as f64).sqrt() * r.atanh();
    CiDecision { independent: statistic.abs() <= crit, statistic, alpha_used: alpha, source: DecisionSource::Test }
}

/// D-separation in `g`, packaged as a decision.
pub fn oracle_decide(g: &Dag, x: usize, y: usize, s: VarSet) -> Result<CiDecision> {
    Ok(CiDecision {
        independent: d_separated(g, x, y, s)?,
        statistic: 0.0,
        alpha_used: 1.0,
        source: DecisionSource::Oracle,
    })
}

/// Anything that can answer `x ⫫ y | s`.
pub trait CiSource: Sync {
    fn n_vars(&self) -> usize;
    fn decide(&self, x: usize, y: usize, s: VarSet) -> Result<CiDecision>;
}

pub struct OracleSource<'a> {
    dag: &'a Dag,
}

impl<'a> OracleSource<'a> {
    pub fn new(dag: &'a Dag) -> Self {
        OracleSource { dag }
    }
}

impl CiSource for OracleSource<'_> {
    fn n_vars(&self) -> usize {
        self.dag.len()
    }

    fn decide(&self, x: usize, y: usize, s: VarSet) -> Result<CiDecision> {
        oracle_decide(self.dag, x, y, s)
    }
}

/// Fisher-z tests against one sample's correlation matrix.
pub struct FisherZSource {
    corr: DMatrix<f64>,
    n: usize,
    alpha: f64,
    crit: f64,
}

impl FisherZSource {
    pub fn new(data: &Dataset, alpha: f64) -> Result<FisherZSource> {
        FisherZSource::from_matrix(data.correlation(), data.n(), alpha)
    }

    /// From a covariance or correlation matrix estimated on `n` draws.
    pub fn from_matrix(m: DMatrix<f64>, n: usize, alpha: f64) -> Result<FisherZSource> {
        check_alpha(alpha)?;
        if !m.is_square() {
            return Err(Error::InvalidModel("matrix is not square".into()));
        }
        Ok(FisherZSource { corr: m, n, alpha, crit: critical_value(alpha) })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl CiSource for FisherZSource {
    fn n_vars(&self) -> usize {
        self.corr.nrows()
    }

    /// A degenerate conditioning block is reported as [`Error::NotDecidable`],
    /// like a sample that is too small.
    fn decide(&self, x: usize, y: usize, s: VarSet) -> Result<CiDecision> {
        let k = s.len();
        if self.n <= k + 3 {
            return Err(Error::NotDecidable { n: self.n, k });
        }
        let r = match partial_correlation_in(&self.corr, x, y, s) {
            Ok(r) if r.is_finite() => r,
            Ok(_) | Err(Error::Singular) => return Err(Error::NotDecidable { n: self.n, k }),
            Err(e) => return Err(e),
        };
        Ok(fisher_z_with_critical(r, self.n, k, self.alpha, self.crit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::LinearSem;

    #[test]
    fn identity_has_no_partial_correlation() {
        let c = CovMatrix::new(DMatrix::identity(4, 4)).unwrap();
        for s in VarSet::from_indices([2, 3]).subsets() {
            assert_eq!(partial_correlation(&c, 0, 1, s).unwrap(), 0.0);
        }
    }

    #[test]
    fn chain_is_screened_off() {
        let g = Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        let m = LinearSem::new_standardized(g, &[(0, 1, 0.7), (1, 2, 0.4)]).unwrap();
        let c = m.implied_covariance();
        assert!(partial_correlation(&c, 0, 2, VarSet::singleton(1)).unwrap().abs() < 1e-15);
        // marginal correlation is the product by the trek rule
        assert!((partial_correlation(&c, 0, 2, VarSet::EMPTY).unwrap() - 0.28).abs() < 1e-15);
    }

    #[test]
    fn two_node_partial_correlation() {
        let g = Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        let m = LinearSem::new_standardized(g, &[(0, 1, 0.5)]).unwrap();
        let r = partial_correlation(&m.implied_covariance(), 0, 1, VarSet::EMPTY).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partial_correlation_rejects_singular_blocks() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 1.0, 0.5, 1.0, 0.5, 1.0, 0.5, 1.0]);
        assert_eq!(partial_correlation_in(&m, 0, 1, VarSet::singleton(2)), Err(Error::Singular));
    }

    #[test]
    fn fisher_z_examples() {
        let d = fisher_z_decide(0.0, 50, 2, 0.05).unwrap();
        assert!(d.independent);
        assert_eq!(d.statistic, 0.0);

        // √97 · atanh(0.5) = 9.848858 · 0.549306 = 5.410038
        let d = fisher_z_decide(0.5, 100, 0, 0.05).unwrap();
        assert!(!d.independent);
        assert!((d.statistic - 5.410038).abs() < 1e-6, "{}", d.statistic);

        assert_eq!(fisher_z_decide(0.5, 6, 3, 0.05), Err(Error::NotDecidable { n: 6, k: 3 }));
        let d = fisher_z_decide(0.5, 7, 3, 0.05).unwrap();
        assert!((d.statistic - 0.549306).abs() < 1e-6);
        assert!(d.independent);
        assert!(fisher_z_decide(0.5, 100, 0, 1.5).is_err());
    }

    #[test]
    fn clipped_correlations_stay_finite() {
        let d = fisher_z_decide(1.0, 100, 0, 0.05).unwrap();
        assert!(d.statistic.is_finite() && !d.independent);
    }

    #[test]
    fn critical_value_matches_tables() {
        assert!((critical_value(0.05) - 1.959964).abs() < 1e-6);
        assert!((critical_value(0.01) - 2.575829).abs() < 1e-6);
    }

    #[test]
    fn schedules() {
        let fixed = AlphaSchedule::fixed(0.05).unwrap();
        assert_eq!(schedule_alpha(&fixed, 1_000_000), 0.05);
        let dec = AlphaSchedule::decreasing(0.05).unwrap();
        // 0.05 / (1 + ln ln 3) = 0.05 / 1.094048 = 0.045702
        assert!((schedule_alpha(&dec, 3) - 0.045702).abs() < 1e-6);
        let mut prev = schedule_alpha(&dec, 3);
        for n in [4, 10, 100, 1_000, 100_000, 10_000_000] {
            let a = schedule_alpha(&dec, n);
            assert!(a < prev && a > 0.0 && a <= 0.05);
            prev = a;
        }
        assert!(AlphaSchedule::fixed(0.0).is_err());
        assert!(AlphaSchedule::decreasing(1.0).is_err());
    }

    #[test]
    fn oracle_examples() {
        let coll = Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("C", "B")]).unwrap();
        let d = oracle_decide(&coll, 0, 2, VarSet::EMPTY).unwrap();
        assert!(d.independent);
        assert_eq!((d.statistic, d.alpha_used, d.source), (0.0, 1.0, DecisionSource::Oracle));
        assert!(!oracle_decide(&coll, 0, 2, VarSet::singleton(1)).unwrap().independent);
        let chain = Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        assert!(oracle_decide(&chain, 0, 2, VarSet::singleton(1)).unwrap().independent);
    }

    #[test]
    fn fisher_source_maps_small_samples_to_not_decidable() {
        let src = FisherZSource::from_matrix(DMatrix::identity(5, 5), 5, 0.05).unwrap();
        assert!(src.decide(0, 1, VarSet::EMPTY).is_ok());
        assert!(matches!(src.decide(0, 1, VarSet::from_indices([2, 3])), Err(Error::NotDecidable { .. })));
    }
}
