//! Two-well data sets: the union of the graphs `σ = C(ε − a)` and
//! `σ = C(ε − b)`, each restricted to the strains where its well is the
//! lower one.

use crate::error::{Error, Result};
use crate::phase::{local_sq_distance, LocalState};
use crate::tensor::{ElasticityTensor, SymMatrix};

use super::graph::{AffineGraphBranch, Halfspace, Sense};
use super::{LocalDataSet, Nearest};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoWellDataSet {
    c: ElasticityTensor,
    a: SymMatrix,
    b: SymMatrix,
    w: f64,
    branches: [AffineGraphBranch; 2],
}

impl TwoWellDataSet {
    pub fn new(c: ElasticityTensor, a: SymMatrix, b: SymMatrix, w: f64) -> Result<Self> {
        if a.dim() != c.dim() || b.dim() != c.dim() {
            return Err(Error::DimensionMismatch { expected: c.dim(), found: a.dim().max(b.dim()) });
        }
        if !w.is_finite() {
            return Err(Error::InvalidArgument("well height offset must be finite".into()));
        }
        let jump = b - a;
        if c.energy(&jump) <= 0.0 {
            return Err(Error::IdenticalWells);
        }
        let dir = c.apply(&jump);
        let bound = 0.5 * c.energy(&b) - 0.5 * c.energy(&a) + w;
        let branch_a = AffineGraphBranch::new(
            c.clone(),
            -c.apply(&a),
            Some(Halfspace::new(dir, bound, Sense::AtMost)),
        )?;
        let branch_b = AffineGraphBranch::new(
            c.clone(),
            -c.apply(&b),
            Some(Halfspace::new(dir, bound, Sense::AtLeast)),
        )?;
        Ok(TwoWellDataSet { c, a, b, w, branches: [branch_a, branch_b] })
    }

    /// Equal-height wells at `±b`.
    pub fn symmetric(c: ElasticityTensor, b: SymMatrix) -> Result<Self> {
        Self::new(c, -b, b, 0.0)
    }

    /// One-dimensional set `{(ε, Cε + σ₀), ε ≤ 0} ∪ {(ε, Cε − σ₀), ε ≥ 0}`.
    pub fn one_dim(c: f64, sigma0: f64) -> Result<Self> {
        let ct = ElasticityTensor::scalar(c)?;
        let b = SymMatrix::from_packed(1, &[sigma0 / c])?;
        Self::symmetric(ct, b)
    }

    pub fn stiffness(&self) -> &ElasticityTensor {
        &self.c
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn b(&self) -> &SymMatrix {
        &self.b
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// Branch 0 is the `a` well, branch 1 the `b` well.
    pub fn branches(&self) -> &[AffineGraphBranch; 2] {
        &self.branches
    }

    /// Tie hyperplane `Cε·(b − a) = W(b) − W(a) + w`, returned as
    /// `(direction, bound)`.
    pub fn tie_locus(&self) -> (SymMatrix, f64) {
        let h = self.branches[0].halfspace().expect("two-well branches are restricted");
        (h.direction, h.bound)
    }

    /// Squared distances to both restricted branches.
    pub fn branch_distances(&self, z: &LocalState, metric: &ElasticityTensor) -> Result<[f64; 2]> {
        Ok([self.branches[0].nearest(z, metric)?.d2, self.branches[1].nearest(z, metric)?.d2])
    }
}

/// Result of reducing unequal well heights to equal ones.
#[derive(Debug, Clone, PartialEq)]
pub struct WellTranslation {
    pub equalized: TwoWellDataSet,
    pub shift: LocalState,
    pub lambda: f64,
}

/// Unequal-height set = equal-height set + `shift`, with
/// `shift = (λ(b−a), λC(b−a))`, `λ = w / ((b−a)·C(b−a))`.
pub fn translate_unequal_wells(set: &TwoWellDataSet) -> Result<WellTranslation> {
    let jump = set.b - set.a;
    let denom = set.c.energy(&jump);
    if denom <= 0.0 {
        return Err(Error::IdenticalWells);
    }
    let lambda = set.w / denom;
    let shift = LocalState { eps: jump.scale(lambda), sig: set.c.apply(&jump).scale(lambda) };
    let equalized = TwoWellDataSet::new(set.c.clone(), set.a, set.b, 0.0)?;
    Ok(WellTranslation { equalized, shift, lambda })
}

impl LocalDataSet for TwoWellDataSet {
    fn dim(&self) -> usize {
        self.c.dim()
    }

    fn nearest(&self, z: &LocalState, metric: &ElasticityTensor) -> Result<Nearest> {
        let ya = self.branches[0].project(z, metric);
        let yb = self.branches[1].project(z, metric);
        let da = local_sq_distance(z, &ya, metric)?;
        let db = local_sq_distance(z, &yb, metric)?;
        Ok(if db < da {
            Nearest { state: yb, d2: db, id: 1 }
        } else {
            Nearest { state: ya, d2: da, id: 0 }
        })
    }

    fn contains(&self, z: &LocalState, tol: f64) -> bool {
        self.branches.iter().any(|b| b.contains(z, tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dim_branches_match_sign_rule() {
        let s = TwoWellDataSet::one_dim(1.0, 1.0).unwrap();
        assert!(s.contains(&LocalState::scalar(-3.0, -2.0), 1e-12));
        assert!(s.contains(&LocalState::scalar(2.0, 1.0), 1e-12));
        assert!(!s.contains(&LocalState::scalar(2.0, 3.0), 1e-12));
        assert!(!s.contains(&LocalState::scalar(-1.0, -2.0), 1e-12));
    }

    #[test]
    fn identical_wells_are_rejected() {
        let c = ElasticityTensor::identity(2);
        let a = SymMatrix::diag(&[1.0, 0.0]).unwrap();
        assert_eq!(TwoWellDataSet::new(c, a, a, 0.0).unwrap_err(), Error::IdenticalWells);
    }

    #[test]
    fn zero_height_gives_zero_shift() {
        let s = TwoWellDataSet::one_dim(1.0, 1.0).unwrap();
        let t = translate_unequal_wells(&s).unwrap();
        assert_eq!(t.shift, LocalState::scalar(0.0, 0.0));
    }

    #[test]
    fn height_two_shift() {
        let c = ElasticityTensor::scalar(1.0).unwrap();
        let a = SymMatrix::from_packed(1, &[-1.0]).unwrap();
        let b = SymMatrix::from_packed(1, &[1.0]).unwrap();
        let s = TwoWellDataSet::new(c, a, b, 2.0).unwrap();
        let t = translate_unequal_wells(&s).unwrap();
        assert_eq!(t.lambda, 0.5);
        assert_eq!(t.shift, LocalState::scalar(1.0, 1.0));
    }

    #[test]
    fn nearest_picks_closer_branch() {
        let s = TwoWellDataSet::one_dim(1.0, 1.0).unwrap();
        let c = s.stiffness().clone();
        let n = s.nearest(&LocalState::scalar(3.0, 2.2), &c).unwrap();
        assert_eq!(n.id, 1);
        let n = s.nearest(&LocalState::scalar(-3.0, -1.8), &c).unwrap();
        assert_eq!(n.id, 0);
    }
}
