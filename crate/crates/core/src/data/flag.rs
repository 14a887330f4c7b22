//! The one-dimensional flag set: the two-well graphs together with the
//! parallelogram they enclose for `|ε| ≤ 2σ₀/C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{local_sq_distance, LocalState};
use crate::tensor::ElasticityTensor;

use super::two_well::TwoWellDataSet;
use super::{LocalDataSet, Nearest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagMembership {
    OnOriginalSet,
    InRelaxedSet,
    Outside,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlagDataSet1D {
    c: f64,
    sigma0: f64,
    wells: Option<TwoWellDataSet>,
}

impl FlagDataSet1D {
    pub fn new(c: f64, sigma0: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("flag modulus must be positive, got {c}")));
        }
        if !(sigma0 >= 0.0) || !sigma0.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma0 must be nonnegative, got {sigma0}")));
        }
        let wells = if sigma0 > 0.0 { Some(TwoWellDataSet::one_dim(c, sigma0)?) } else { None };
        Ok(FlagDataSet1D { c, sigma0, wells })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Strain half-width `2σ₀/C` of the enclosed parallelogram.
    pub fn corner_strain(&self) -> f64 {
        2.0 * self.sigma0 / self.c
    }

    pub fn on_original(&self, eps: f64, sig: f64, tol: f64) -> bool {
        let (c, s0) = (self.c, self.sigma0);
        (eps <= tol && (sig - (c * eps + s0)).abs() <= tol) || (eps >= -tol && (sig - (c * eps - s0)).abs() <= tol)
    }

    /// Closed parallelogram `|ε| ≤ 2σ₀/C` between the graphs and `σ = ±σ₀`.
    pub fn in_parallelogram(&self, eps: f64, sig: f64, tol: f64) -> bool {
        let (c, s0) = (self.c, self.sigma0);
        if eps.abs() > self.corner_strain() + tol {
            return false;
        }
        if eps <= 0.0 {
            sig >= -s0 - tol && sig <= c * eps + s0 + tol
        } else {
            sig >= c * eps - s0 - tol && sig <= s0 + tol
        }
    }

    pub fn classify(&self, eps: f64, sig: f64, tol: f64) -> FlagMembership {
        if self.on_original(eps, sig, tol) {
            FlagMembership::OnOriginalSet
        } else if self.in_parallelogram(eps, sig, tol) {
            FlagMembership::InRelaxedSet
        } else {
            FlagMembership::Outside
        }
    }

    /// Stress interval of the relaxed set above `eps`.
    pub fn stress_interval(&self, eps: f64) -> (f64, f64) {
        let (c, s0) = (self.c, self.sigma0);
        let e0 = self.corner_strain();
        if eps <= -e0 {
            (c * eps + s0, c * eps + s0)
        } else if eps <= 0.0 {
            (-s0, c * eps + s0)
        } else if eps <= e0 {
            (c * eps - s0, s0)
        } else {
            (c * eps - s0, c * eps - s0)
        }
    }
}

fn scalar_of(z: &LocalState) -> (f64, f64) {
    (z.eps.packed()[0], z.sig.packed()[0])
}

impl LocalDataSet for FlagDataSet1D {
    fn dim(&self) -> usize {
        1
    }

    fn nearest(&self, z: &LocalState, metric: &ElasticityTensor) -> Result<Nearest> {
        if z.dim() != 1 || metric.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: z.dim() });
        }
        let (e, s) = scalar_of(z);
        if self.in_parallelogram(e, s, 0.0) {
            return Ok(Nearest { state: *z, d2: 0.0, id: 2 });
        }
        let mut best = match &self.wells {
            Some(w) => w.nearest(z, metric)?,
            None => super::graph::AffineGraphBranch::linear(ElasticityTensor::scalar(self.c)?).nearest(z, metric)?,
        };
        let e0 = self.corner_strain();
        for (lo, hi, level) in [(-e0, 0.0, -self.sigma0), (0.0, e0, self.sigma0)] {
            let y = LocalState::scalar(e.clamp(lo, hi), level);
            let d2 = local_sq_distance(z, &y, metric)?;
            if d2 < best.d2 {
                best = Nearest { state: y, d2, id: 2 };
            }
        }
        Ok(best)
    }

    fn contains(&self, z: &LocalState, tol: f64) -> bool {
        if z.dim() != 1 {
            return false;
        }
        let (e, s) = scalar_of(z);
        self.classify(e, s, tol) != FlagMembership::Outside
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        let f = FlagDataSet1D::new(1.0, 1.0).unwrap();
        assert_eq!(f.classify(-3.0, -2.0, 1e-9), FlagMembership::OnOriginalSet);
        assert_eq!(f.classify(0.0, 0.0, 1e-9), FlagMembership::InRelaxedSet);
        assert_eq!(f.classify(0.0, 1.5, 1e-9), FlagMembership::Outside);
        assert_eq!(f.classify(0.0, 1.0, 1e-9), FlagMembership::OnOriginalSet);
        assert_eq!(f.classify(1.0, 1.0, 1e-9), FlagMembership::InRelaxedSet);
    }

    #[test]
    fn invalid_parameters() {
        assert!(FlagDataSet1D::new(0.0, 1.0).is_err());
        assert!(FlagDataSet1D::new(1.0, -1.0).is_err());
    }

    #[test]
    fn nearest_is_inside_and_not_beaten_by_a_scan() {
        let f = FlagDataSet1D::new(2.0, 1.0).unwrap();
        let m = ElasticityTensor::scalar(2.0).unwrap();
        for &(e, s) in &[(0.0, 1.5), (3.0, 0.0), (-0.5, -2.0), (0.4, -0.5), (-5.0, 1.0)] {
            let z = LocalState::scalar(e, s);
            let n = f.nearest(&z, &m).unwrap();
            assert!(f.contains(&n.state, 1e-12));
            let mut scan = f64::INFINITY;
            for i in 0..=4000 {
                let ee = -6.0 + 12.0 * i as f64 / 4000.0;
                let (lo, hi) = f.stress_interval(ee);
                for j in 0..=40 {
                    let ss = lo + (hi - lo) * j as f64 / 40.0;
                    scan = scan.min(local_sq_distance(&z, &LocalState::scalar(ee, ss), &m).unwrap());
                }
            }
            assert!(n.d2 <= scan + 1e-12, "({e},{s}): {} vs {}", n.d2, scan);
            assert!(scan - n.d2 < 1e-4);
        }
    }
}
