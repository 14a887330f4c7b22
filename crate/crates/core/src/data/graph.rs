//! Affine stress-strain graphs `σ = Dε + s`, optionally restricted to a
//! halfspace of strains.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{local_sq_distance, LocalState};
use crate::tensor::{ElasticityTensor, SymMatrix};

use super::{LocalDataSet, Nearest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    AtMost,
    AtLeast,
}

/// `direction·ε ≤ bound` or `direction·ε ≥ bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub direction: SymMatrix,
    pub bound: f64,
    pub sense: Sense,
}

impl Halfspace {
    pub fn new(direction: SymMatrix, bound: f64, sense: Sense) -> Self {
        Halfspace { direction, bound, sense }
    }

    /// Signed violation; positive means outside.
    pub fn violation(&self, eps: &SymMatrix) -> f64 {
        let v = self.direction.dot(eps) - self.bound;
        match self.sense {
            Sense::AtMost => v,
            Sense::AtLeast => -v,
        }
    }

    pub fn admits(&self, eps: &SymMatrix, tol: f64) -> bool {
        self.violation(eps) <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineGraphBranch {
    stiffness: ElasticityTensor,
    offset: SymMatrix,
    halfspace: Option<Halfspace>,
}

fn dense(c: &ElasticityTensor, inverse: bool) -> DMatrix<f64> {
    let m = c.size();
    DMatrix::from_fn(m, m, |i, j| {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        if inverse {
            c.voigt_inv_mul(&e)[i]
        } else {
            c.voigt_entry(i, j)
        }
    })
}

impl AffineGraphBranch {
    pub fn new(stiffness: ElasticityTensor, offset: SymMatrix, halfspace: Option<Halfspace>) -> Result<Self> {
        if offset.dim() != stiffness.dim() {
            return Err(Error::DimensionMismatch { expected: stiffness.dim(), found: offset.dim() });
        }
        if let Some(h) = &halfspace {
            if h.direction.dim() != stiffness.dim() {
                return Err(Error::DimensionMismatch { expected: stiffness.dim(), found: h.direction.dim() });
            }
            if !(h.direction.norm() > 0.0) || !h.bound.is_finite() {
                return Err(Error::InvalidArgument("halfspace needs a nonzero direction and finite bound".into()));
            }
        }
        Ok(AffineGraphBranch { stiffness, offset, halfspace })
    }

    /// The linear-elastic graph `σ = Cε`.
    pub fn linear(stiffness: ElasticityTensor) -> Self {
        let dim = stiffness.dim();
        AffineGraphBranch { stiffness, offset: SymMatrix::zeros(dim), halfspace: None }
    }

    pub fn stiffness(&self) -> &ElasticityTensor {
        &self.stiffness
    }

    pub fn offset(&self) -> &SymMatrix {
        &self.offset
    }

    pub fn halfspace(&self) -> Option<&Halfspace> {
        self.halfspace.as_ref()
    }

    /// Graph point above a strain, ignoring the halfspace.
    pub fn point_at(&self, eps: &SymMatrix) -> LocalState {
        LocalState { eps: *eps, sig: self.stiffness.apply(eps) + self.offset }
    }

    /// True for `σ = Cε` with no offset and no restriction.
    pub fn is_linear(&self) -> bool {
        self.halfspace.is_none() && self.offset.packed().iter().all(|x| *x == 0.0)
    }

    /// Hessian of the local distance along the graph, `M + D M⁻¹ D`, in
    /// engineering coordinates.
    pub(crate) fn hessian(&self, metric: &ElasticityTensor) -> DMatrix<f64> {
        let mv = dense(metric, false);
        let minv = dense(metric, true);
        let dv = dense(&self.stiffness, false);
        &mv + &dv * &minv * &dv
    }

    /// Strain of the nearest graph point, unconstrained and in the given metric.
    fn free_minimizer(&self, z: &LocalState, metric: &ElasticityTensor) -> (Vec<f64>, Option<DMatrix<f64>>) {
        let x0 = z.eps.to_engineering();
        let r: Vec<f64> = z.sig.packed().iter().zip(self.offset.packed()).map(|(a, b)| a - b).collect();
        if *metric == self.stiffness {
            let cr = metric.voigt_inv_mul(&r);
            return (x0.iter().zip(&cr).map(|(a, b)| 0.5 * (a + b)).collect(), None);
        }
        let h = self.hessian(metric);
        let mv = dense(metric, false);
        let minv = dense(metric, true);
        let dv = dense(&self.stiffness, false);
        let rhs = &mv * DVector::from_column_slice(&x0) + &dv * (&minv * DVector::from_column_slice(&r));
        let x = h.clone().cholesky().expect("graph Hessian is SPD").solve(&rhs);
        (x.iter().copied().collect(), Some(h))
    }

    /// Nearest graph point in the given metric, clamped to the halfspace.
    pub fn project(&self, z: &LocalState, metric: &ElasticityTensor) -> LocalState {
        let dim = self.stiffness.dim();
        let (mut x, h) = self.free_minimizer(z, metric);
        if let Some(hs) = &self.halfspace {
            let eps = SymMatrix::from_engineering(dim, &x);
            let viol = hs.violation(&eps);
            if viol > 0.0 {
                let d = hs.direction.packed().to_vec();
                let hinv_d: Vec<f64> = match &h {
                    None => metric.voigt_inv_mul(&d).iter().map(|v| 0.5 * v).collect(),
                    Some(h) => {
                        let s = h.clone().cholesky().expect("graph Hessian is SPD").solve(&DVector::from_column_slice(&d));
                        s.iter().copied().collect()
                    }
                };
                let denom: f64 = d.iter().zip(&hinv_d).map(|(a, b)| a * b).sum();
                let t = (hs.direction.dot(&eps) - hs.bound) / denom;
                for (xi, hi) in x.iter_mut().zip(&hinv_d) {
                    *xi -= t * hi;
                }
            }
        }
        self.point_at(&SymMatrix::from_engineering(dim, &x))
    }

    /// Unrestricted squared distance to the full graph; for `M = D` this is
    /// `¼ C⁻¹(σ − Cε − s)·(σ − Cε − s)`.
    pub fn unrestricted_sq_distance(&self, z: &LocalState) -> f64 {
        let r = z.sig - self.stiffness.apply(&z.eps) - self.offset;
        0.25 * self.stiffness.compliance_energy(&r)
    }
}

/// Closed-form nearest point on the branch in the branch's own stiffness metric.
pub fn project_to_affine_graph(z: &LocalState, branch: &AffineGraphBranch) -> Result<LocalState> {
    if z.dim() != branch.stiffness.dim() {
        return Err(Error::DimensionMismatch { expected: branch.stiffness.dim(), found: z.dim() });
    }
    Ok(branch.project(z, &branch.stiffness))
}

impl LocalDataSet for AffineGraphBranch {
    fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    fn nearest(&self, z: &LocalState, metric: &ElasticityTensor) -> Result<Nearest> {
        if z.dim() != self.dim() || metric.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: z.dim() });
        }
        let y = self.project(z, metric);
        let d2 = local_sq_distance(z, &y, metric)?;
        Ok(Nearest { state: y, d2, id: 0 })
    }

    fn contains(&self, z: &LocalState, tol: f64) -> bool {
        if z.dim() != self.dim() {
            return false;
        }
        let r = z.sig - self.stiffness.apply(&z.eps) - self.offset;
        let scale = 1.0 + z.eps.norm() + z.sig.norm();
        r.norm() <= tol * scale && self.halfspace.map_or(true, |h| h.admits(&z.eps, tol * scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1() -> ElasticityTensor {
        ElasticityTensor::scalar(1.0).unwrap()
    }

    #[test]
    fn point_on_graph_is_fixed() {
        let g = AffineGraphBranch::linear(ElasticityTensor::scalar(2.0).unwrap());
        let z = LocalState::scalar(0.7, 1.4);
        let y = project_to_affine_graph(&z, &g).unwrap();
        assert_eq!(y, z);
        assert_eq!(g.nearest(&z, g.stiffness()).unwrap().d2, 0.0);
    }

    #[test]
    fn quarter_residual_distance() {
        let g = AffineGraphBranch::linear(c1());
        let z = LocalState::scalar(0.0, 2.0);
        let n = g.nearest(&z, &c1()).unwrap();
        assert_eq!(n.state, LocalState::scalar(1.0, 1.0));
        assert!((n.d2 - 1.0).abs() < 1e-15);
        assert!((g.unrestricted_sq_distance(&z) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn halfspace_clamp_hits_boundary() {
        let hs = Halfspace::new(SymMatrix::identity(1), 1.0, Sense::AtLeast);
        let g = AffineGraphBranch::new(c1(), SymMatrix::zeros(1), Some(hs)).unwrap();
        let y = project_to_affine_graph(&LocalState::scalar(0.0, 0.0), &g).unwrap();
        assert!((y.eps.packed()[0] - 1.0).abs() < 1e-15);
        assert!((y.sig.packed()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn general_metric_matches_closed_form_when_equal() {
        let c = ElasticityTensor::isotropic(2, 1.0, 0.7).unwrap();
        let g = AffineGraphBranch::new(c.clone(), SymMatrix::diag(&[0.1, -0.2]).unwrap(), None).unwrap();
        let z = LocalState::new(
            SymMatrix::from_packed(2, &[0.3, -0.1, 0.25]).unwrap(),
            SymMatrix::from_packed(2, &[1.0, 0.2, -0.4]).unwrap(),
        )
        .unwrap();
        let a = g.project(&z, &c);
        let (x, _) = {
            let h = g.hessian(&c);
            let mv = dense(&c, false);
            let minv = dense(&c, true);
            let r: Vec<f64> = z.sig.packed().iter().zip(g.offset.packed()).map(|(a, b)| a - b).collect();
            let rhs = &mv * DVector::from_column_slice(&z.eps.to_engineering())
                + &mv * (&minv * DVector::from_column_slice(&r));
            (h.cholesky().unwrap().solve(&rhs), ())
        };
        let b = g.point_at(&SymMatrix::from_engineering(2, x.as_slice()));
        assert!(local_sq_distance(&a, &b, &c).unwrap() < 1e-28);
    }

    #[test]
    fn stationarity_along_graph_in_other_metric() {
        let d = ElasticityTensor::isotropic(2, 2.0, 1.0).unwrap();
        let m = ElasticityTensor::identity(2);
        let g = AffineGraphBranch::new(d, SymMatrix::zeros(2), None).unwrap();
        let z = LocalState::new(SymMatrix::diag(&[0.4, 0.1]).unwrap(), SymMatrix::diag(&[-1.0, 0.5]).unwrap()).unwrap();
        let y = g.project(&z, &m);
        let f = |e: &SymMatrix| local_sq_distance(&z, &g.point_at(e), &m).unwrap();
        for k in 0..3 {
            let mut p = [0.0; 3];
            p[k] = 1e-6;
            let dir = SymMatrix::from_packed(2, &p).unwrap();
            let grad = (f(&(y.eps + dir)) - f(&(y.eps - dir))) / 2e-6;
            assert!(grad.abs() < 1e-8, "slot {k}: {grad}");
        }
    }
}
