//! Linear Gaussian structural equation models with zero means.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ci::partial_correlation;
use crate::error::{Error, Result};
use crate::graph::{d_separated, Cic, Dag};

/// Tolerance for the standardized flag and for Markov soundness checks.
pub const EXACT_TOL: f64 = 1e-9;

/// Largest model [`faithfulness_report`] will enumerate.
pub const FAITHFULNESS_LIMIT: usize = 12;

/// A symmetric positive-definite covariance matrix in the model's vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<CovMatrix> {
        if !m.is_square() {
            return Err(Error::InvalidModel("covariance matrix is not square".into()));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        if m.clone().cholesky().is_none() {
            return Err(Error::InvalidModel("covariance is not positive definite".into()));
        }
        Ok(CovMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)] / (self.0[(i, i)] * self.0[(j, j)]).sqrt()
    }
}

/// `dag` plus a path coefficient per edge and an error variance per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSem {
    dag: Dag,
    // coef[(tail, head)]; zero off the edge set
    coef: DMatrix<f64>,
    error_var: Vec<f64>,
    standardized: bool,
}

impl LinearSem {
    /// `coefs` must name every edge of `dag` exactly once.
    pub fn new(dag: Dag, coefs: &[(usize, usize, f64)], error_var: Vec<f64>) -> Result<LinearSem> {
        let n = dag.len();
        if error_var.len() != n {
            return Err(Error::InvalidModel("one error variance per vertex is required".into()));
        }
        if let Some(v) = error_var.iter().position(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(Error::InvalidModel(format!(
                "error variance of `{}` must be positive",
                dag.name(v)
            )));
        }
        let mut coef = DMatrix::zeros(n, n);
        let mut seen = std::collections::BTreeSet::new();
        for &(t, h, b) in coefs {
            dag.check_index(t)?;
            dag.check_index(h)?;
            if !dag.has_edge(t, h) {
                return Err(Error::MissingEdge(dag.name(t).into(), dag.name(h).into()));
            }
            if !b.is_finite() {
                return Err(Error::InvalidModel("coefficients must be finite".into()));
            }
            if !seen.insert((t, h)) {
                return Err(Error::InvalidModel(format!(
                    "coefficient for {} -> {} given twice",
                    dag.name(t),
                    dag.name(h)
                )));
            }
            coef[(t, h)] = b;
        }
        if seen.len() != dag.edge_count() {
            return Err(Error::InvalidModel(format!(
                "{} coefficients given for {} edges",
                seen.len(),
                dag.edge_count()
            )));
        }
        Ok(LinearSem { dag, coef, error_var, standardized: false })
    }

    /// Builds the model with error variances chosen so every marginal
    /// variance is one.
    pub fn new_standardized(dag: Dag, coefs: &[(usize, usize, f64)]) -> Result<LinearSem> {
        let n = dag.len();
        LinearSem::new(dag, coefs, vec![1.0; n])?.standardize()
    }

    /// Marks the model as standardized after checking every implied variance
    /// is one to within [`EXACT_TOL`].
    pub fn assert_standardized(mut self) -> Result<LinearSem> {
        let cov = self.implied_covariance();
        for v in 0..self.dag.len() {
            if (cov.get(v, v) - 1.0).abs() > EXACT_TOL {
                return Err(Error::InvalidModel(format!(
                    "variance of `{}` is {}, not 1",
                    self.dag.name(v),
                    cov.get(v, v)
                )));
            }
        }
        self.standardized = true;
        Ok(self)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn names(&self) -> &[String] {
        self.dag.names()
    }

    pub fn len(&self) -> usize {
        self.dag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.is_empty()
    }

    pub fn coef(&self, tail: usize, head: usize) -> Option<f64> {
        self.dag.has_edge(tail, head).then(|| self.coef[(tail, head)])
    }

    pub fn coef_by_name(&self, tail: &str, head: &str) -> Result<f64> {
        let (t, h) = (self.dag.index_of(tail)?, self.dag.index_of(head)?);
        self.coef(t, h).ok_or_else(|| Error::MissingEdge(tail.into(), head.into()))
    }

    /// `(tail, head, coefficient)` in edge order.
    pub fn coefficients(&self) -> Vec<(usize, usize, f64)> {
        self.dag.edges().into_iter().map(|(t, h)| (t, h, self.coef[(t, h)])).collect()
    }

    pub fn error_var(&self, v: usize) -> f64 {
        self.error_var[v]
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Exact covariance, accumulated along a topological order:
    /// `Σ[i][j] = Σ_k B[k][j] Σ[i][k]` for `i` before `j`.
    pub fn implied_covariance(&self) -> CovMatrix {
        let n = self.dag.len();
        let order = self.dag.topological_order();
        let mut s = DMatrix::<f64>::zeros(n, n);
        for (pos, &j) in order.iter().enumerate() {
            let pa: Vec<usize> = self.dag.parents(j).iter().collect();
            for &i in &order[..pos] {
                let c: f64 = pa.iter().map(|&k| self.coef[(k, j)] * s[(i, k)]).sum();
                s[(i, j)] = c;
                s[(j, i)] = c;
            }
            let mut var = self.error_var[j];
            for &k in &pa {
                for &l in &pa {
                    var += self.coef[(k, j)] * self.coef[(l, j)] * s[(k, l)];
                }
            }
            s[(j, j)] = var;
        }
        CovMatrix(s)
    }

    /// Keeps the coefficients and resets each error variance to one minus the
    /// variance explained by the parents.
    pub fn standardize(&self) -> Result<LinearSem> {
        let n = self.dag.len();
        let order = self.dag.topological_order();
        let mut s = DMatrix::<f64>::zeros(n, n);
        let mut error_var = vec![1.0; n];
        for (pos, &j) in order.iter().enumerate() {
            let pa: Vec<usize> = self.dag.parents(j).iter().collect();
            for &i in &order[..pos] {
                let c: f64 = pa.iter().map(|&k| self.coef[(k, j)] * s[(i, k)]).sum();
                s[(i, j)] = c;
                s[(j, i)] = c;
            }
            let mut explained = 0.0;
            for &k in &pa {
                for &l in &pa {
                    explained += self.coef[(k, j)] * self.coef[(l, j)] * s[(k, l)];
                }
            }
            let residual = 1.0 - explained;
            if residual <= 0.0 {
                return Err(Error::Standardize { vertex: self.dag.name(j).to_owned(), residual });
            }
            error_var[j] = residual;
            s[(j, j)] = 1.0;
        }
        Ok(LinearSem { dag: self.dag.clone(), coef: self.coef.clone(), error_var, standardized: true })
    }

    /// `n` draws, generated vertex by vertex in topological order from a
    /// ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Invalid("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.dag.len();
        let mut cols = DMatrix::<f64>::zeros(n, p);
        for j in self.dag.topological_order() {
            let sd = self.error_var[j].sqrt();
            for i in 0..n {
                let e: f64 = StandardNormal.sample(&mut rng);
                cols[(i, j)] = sd * e;
            }
            for k in self.dag.parents(j).iter() {
                let b = self.coef[(k, j)];
                let (src, mut dst) = (cols.column(k).clone_owned(), cols.column_mut(j));
                dst.axpy(b, &src, 1.0);
            }
        }
        Ok(Dataset { names: self.dag.shared_names(), columns: cols, seed })
    }

    /// Same graph and error variances with one coefficient replaced.
    pub fn with_coef(&self, tail: usize, head: usize, b: f64) -> Result<LinearSem> {
        if !self.dag.has_edge(tail, head) {
            return Err(Error::MissingEdge(self.dag.name(tail).into(), self.dag.name(head).into()));
        }
        let mut m = self.clone();
        m.coef[(tail, head)] = b;
        m.standardized = false;
        Ok(m)
    }

    /// Re-expresses the model on a Markov-equivalent (or larger) graph by
    /// regressing each vertex on its new parents under the current
    /// covariance. The joint distribution is unchanged whenever the current
    /// covariance is Markov to `dag`.
    pub fn reparameterize(&self, dag: Dag) -> Result<LinearSem> {
        if !dag.same_vertices(&self.dag) {
            return Err(Error::VertexMismatch);
        }
        let sigma = self.implied_covariance();
        let n = dag.len();
        let mut coef = DMatrix::zeros(n, n);
        let mut error_var = vec![0.0; n];
        for v in 0..n {
            let pa: Vec<usize> = dag.parents(v).iter().collect();
            let mut resid = sigma.get(v, v);
            if !pa.is_empty() {
                let spp = sigma.0.select_rows(&pa).select_columns(&pa);
                let spv = DMatrix::from_fn(pa.len(), 1, |i, _| sigma.get(pa[i], v));
                let beta = spp.cholesky().ok_or(Error::Singular)?.solve(&spv);
                for (i, &k) in pa.iter().enumerate() {
                    coef[(k, v)] = beta[(i, 0)];
                }
                resid -= (spv.transpose() * &beta)[(0, 0)];
            }
            if resid <= 0.0 {
                return Err(Error::Standardize { vertex: dag.name(v).into(), residual: resid });
            }
            error_var[v] = resid;
        }
        Ok(LinearSem { dag, coef, error_var, standardized: self.standardized })
    }
}

/// `n` observations of every vertex; column `j` holds vertex `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Arc<[String]>,
    columns: DMatrix<f64>,
    seed: u64,
}

impl Dataset {
    pub fn new(names: Arc<[String]>, columns: DMatrix<f64>, seed: u64) -> Result<Dataset> {
        if columns.nrows() == 0 {
            return Err(Error::Invalid("a dataset needs at least one row".into()));
        }
        if columns.ncols() != names.len() {
            return Err(Error::Invalid("one column per vertex is required".into()));
        }
        Ok(Dataset { names, columns, seed })
    }

    pub fn n(&self) -> usize {
        self.columns.nrows()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub(crate) fn shared_names(&self) -> Arc<[String]> {
        Arc::clone(&self.names)
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Unbiased sample covariance. Singular whenever `n <= |V|`, so it is
    /// returned as a plain matrix.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n() as f64;
        let means = self.columns.row_mean();
        let mut c = self.columns.tr_mul(&self.columns);
        let p = c.nrows();
        for i in 0..p {
            for j in 0..p {
                c[(i, j)] -= n * means[i] * means[j];
            }
        }
        let denom = if self.n() > 1 { n - 1.0 } else { 1.0 };
        c / denom
    }

    pub fn correlation(&self) -> DMatrix<f64> {
        let c = self.covariance();
        let p = c.nrows();
        DMatrix::from_fn(p, p, |i, j| c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt())
    }
}

fn check_pair(p: &LinearSem, q: &LinearSem) -> Result<()> {
    if p.dag.same_vertices(&q.dag) {
        Ok(())
    } else {
        Err(Error::VertexMismatch)
    }
}

/// `KL(p ‖ q)` between the zero-mean Gaussians the two models imply.
pub fn kl_divergence(p: &LinearSem, q: &LinearSem) -> Result<f64> {
    check_pair(p, q)?;
    let (sp, sq) = (p.implied_covariance(), q.implied_covariance());
    let d = sp.dim() as f64;
    let cp = sp.0.clone().cholesky().ok_or(Error::Singular)?;
    let cq = sq.0.clone().cholesky().ok_or(Error::Singular)?;
    let trace = cq.solve(&sp.0).trace();
    let logdet = |l: &DMatrix<f64>| 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let kl = 0.5 * (trace - d + logdet(&cq.l()) - logdet(&cp.l()));
    Ok(kl.max(0.0))
}

/// Pinsker's bound `min(1, sqrt(KL/2))` on the single-draw total variation
/// distance. This is an upper bound, never the distance itself.
pub fn tv_upper_bound(p: &LinearSem, q: &LinearSem) -> Result<f64> {
    Ok((kl_divergence(p, q)? / 2.0).sqrt().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueKind {
    /// Entailed dependence whose partial correlation is below the tolerance.
    NearViolation,
    /// Entailed independence with a non-zero partial correlation.
    MarkovViolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaithfulnessIssue {
    pub cic: Cic,
    pub partial_correlation: f64,
    pub kind: IssueKind,
}

impl FaithfulnessIssue {
    pub fn describe(&self, names: &[String]) -> String {
        let given: Vec<&str> = self.cic.given.iter().map(|v| names[v].as_str()).collect();
        format!(
            "{} _||_ {} | {{{}}}: pcor {:e} ({:?})",
            names[self.cic.x],
            names[self.cic.y],
            given.join(","),
            self.partial_correlation,
            self.kind
        )
    }
}

/// Checks every statement `x ⫫ y | S` against the implied partial
/// correlations. D-connected pairs with `|pcor| < tol` and d-separated pairs
/// with `|pcor| > 1e-9` are reported.
pub fn faithfulness_report(m: &LinearSem, tol: f64) -> Result<Vec<FaithfulnessIssue>> {
    let g = &m.dag;
    if g.len() > FAITHFULNESS_LIMIT {
        return Err(Error::TooManyVertices { found: g.len(), limit: FAITHFULNESS_LIMIT });
    }
    let cov = m.implied_covariance();
    let mut out = Vec::new();
    for x in 0..g.len() {
        for y in x + 1..g.len() {
            for s in g.all().without(x).without(y).subsets() {
                let sep = d_separated(g, x, y, s)?;
                let r = partial_correlation(&cov, x, y, s)?;
                let kind = if sep && r.abs() > EXACT_TOL {
                    IssueKind::MarkovViolation
                } else if !sep && r.abs() < tol {
                    IssueKind::NearViolation
                } else {
                    continue;
                };
                out.push(FaithfulnessIssue { cic: Cic { x, y, given: s }, partial_correlation: r, kind });
            }
        }
    }
    Ok(out)
}

/// Shorthand for [`faithfulness_report`] returning an error on any issue.
pub fn check_faithful(m: &LinearSem, tol: f64) -> Result<()> {
    let report = faithfulness_report(m, tol)?;
    match report.first() {
        None => Ok(()),
        Some(first) => Err(Error::Unfaithful {
            tol,
            count: report.len(),
            first: first.describe(m.names()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn dag(names: &[&str], edges: &[(&str, &str)]) -> Dag {
        Dag::from_edges(names, edges).unwrap()
    }

    fn two_node(b: f64) -> Result<LinearSem> {
        LinearSem::new_standardized(dag(&["X", "Y"], &[("X", "Y")]), &[(0, 1, b)])
    }

    #[test]
    fn empty_graph_covariance_is_identity() {
        let m = LinearSem::new(Dag::empty(&["A", "B", "C"]).unwrap(), &[], vec![1.0; 3]).unwrap();
        assert_eq!(m.implied_covariance().matrix(), &DMatrix::identity(3, 3));
        let s = m.standardize().unwrap();
        assert!((0..3).all(|v| s.error_var(v) == 1.0));
    }

    #[test]
    fn two_node_standardized() {
        let m = two_node(0.5).unwrap();
        assert!(close(m.error_var(1), 0.75, 1e-15));
        let c = m.implied_covariance();
        for (i, j, want) in [(0, 0, 1.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 1.0)] {
            assert!(close(c.get(i, j), want, 1e-15));
        }
        assert!(matches!(two_node(1.2), Err(Error::Standardize { ref vertex, .. }) if vertex == "Y"));
    }

    #[test]
    fn chain_covariance_follows_trek_rule() {
        let g = dag(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let m = LinearSem::new_standardized(g, &[(0, 1, 0.6), (1, 2, -0.7)]).unwrap();
        assert!(close(m.implied_covariance().get(0, 2), 0.6 * -0.7, 1e-15));
    }

    #[test]
    fn standardize_is_idempotent() {
        let g = dag(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("A", "C")]);
        let m = LinearSem::new(g, &[(0, 1, 0.4), (1, 2, 0.3), (0, 2, -0.2)], vec![2.0, 0.5, 1.5])
            .unwrap();
        let once = m.standardize().unwrap();
        let twice = once.standardize().unwrap();
        for v in 0..3 {
            assert!(close(once.error_var(v), twice.error_var(v), 1e-15));
        }
        assert!(once.assert_standardized().is_ok());
        assert!(m.assert_standardized().is_err());
    }

    #[test]
    fn constructor_validates_coefficients() {
        let g = dag(&["X", "Y"], &[("X", "Y")]);
        assert!(LinearSem::new(g.clone(), &[], vec![1.0; 2]).is_err());
        assert!(LinearSem::new(g.clone(), &[(1, 0, 0.5)], vec![1.0; 2]).is_err());
        assert!(LinearSem::new(g.clone(), &[(0, 1, 0.5), (0, 1, 0.5)], vec![1.0; 2]).is_err());
        assert!(LinearSem::new(g.clone(), &[(0, 1, 0.5)], vec![1.0, 0.0]).is_err());
        assert!(LinearSem::new(g, &[(0, 1, 0.0)], vec![1.0; 2]).is_ok());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = two_node(0.5).unwrap();
        assert_eq!(m.sample(50, 7).unwrap(), m.sample(50, 7).unwrap());
        assert_ne!(m.sample(50, 7).unwrap(), m.sample(50, 8).unwrap());
        assert!(m.sample(0, 1).is_err());
    }

    #[test]
    fn large_sample_correlation_matches_model() {
        let n = 100_000;
        let m = two_node(0.5).unwrap();
        let r = m.sample(n, 11).unwrap().correlation()[(0, 1)];
        assert!((r - 0.5).abs() < 4.0 / (n as f64).sqrt(), "r = {r}");
        let e = LinearSem::new(Dag::empty(&["A", "B", "C"]).unwrap(), &[], vec![1.0; 3]).unwrap();
        let c = e.sample(n, 12).unwrap().correlation();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!(c[(i, j)].abs() < 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn kl_and_tv_bounds() {
        let p = two_node(0.5).unwrap();
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
        assert_eq!(tv_upper_bound(&p, &p).unwrap(), 0.0);
        let q = two_node(0.1).unwrap();
        let (pq, qp) = (kl_divergence(&p, &q).unwrap(), kl_divergence(&q, &p).unwrap());
        assert!(pq > 0.0 && qp > 0.0 && (pq - qp).abs() > 1e-6);
        let far = two_node(0.95).unwrap();
        let far2 = two_node(-0.95).unwrap();
        let t = tv_upper_bound(&far, &far2).unwrap();
        assert!((0.0..=1.0).contains(&t));
        assert_eq!(t, 1.0);
    }

    #[test]
    fn kl_shrinks_toward_edge_deleted_model() {
        // the edge-deleted model is the two-node model with b = 0
        let deleted = two_node(0.0).unwrap();
        let kls: Vec<f64> = [0.1, 0.05, 0.01]
            .iter()
            .map(|&b| kl_divergence(&two_node(b).unwrap(), &deleted).unwrap())
            .collect();
        assert!(kls[0] > kls[1] && kls[1] > kls[2] && kls[2] > 0.0);
        // for a bivariate normal with correlation b, KL to independence is -ln(1 - b²)/2
        assert!(close(kls[2], -(1.0f64 - 1e-4).ln() / 2.0, 1e-12));
        let tvs: Vec<f64> = [0.3, 0.31, 0.301]
            .iter()
            .map(|&b| tv_upper_bound(&two_node(b).unwrap(), &two_node(0.3).unwrap()).unwrap())
            .collect();
        assert!(tvs[0] == 0.0 && tvs[1] > tvs[2] && tvs[2] > 0.0);
    }

    #[test]
    fn path_cancellation_is_reported() {
        // X -> Y -> Z plus X -> Z with b_xz = -b_xy * b_yz makes X, Z marginally uncorrelated
        let g = dag(&["X", "Y", "Z"], &[("X", "Y"), ("Y", "Z"), ("X", "Z")]);
        let (bxy, byz) = (0.6, 0.5);
        let m = LinearSem::new(g, &[(0, 1, bxy), (1, 2, byz), (0, 2, -bxy * byz)], vec![1.0; 3]).unwrap();
        let report = faithfulness_report(&m, 1e-3).unwrap();
        assert!(report
            .iter()
            .any(|i| i.kind == IssueKind::NearViolation && i.cic == Cic { x: 0, y: 2, given: crate::VarSet::EMPTY }));
        assert!(check_faithful(&m, 1e-3).is_err());
    }

    #[test]
    fn reparameterization_preserves_covariance() {
        let g = dag(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let m = LinearSem::new_standardized(g, &[(0, 1, 0.6), (1, 2, 0.4)]).unwrap();
        let back = dag(&["A", "B", "C"], &[("B", "A"), ("C", "B")]);
        let r = m.reparameterize(back).unwrap();
        let (a, b) = (m.implied_covariance(), r.implied_covariance());
        assert!((a.matrix() - b.matrix()).abs().max() < 1e-12);
    }
}
