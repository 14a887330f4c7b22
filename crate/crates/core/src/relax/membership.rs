//! Membership tests for the relaxed two-well sets.

use serde::{Deserialize, Serialize};

use crate::data::{translate_unequal_wells, FlagDataSet1D, FlagMembership, TwoWellDataSet};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::phase::LocalState;
use crate::tensor::SymMatrix;

use super::acoustic::TwoWellRelaxation;

pub const DEFAULT_TOL: f64 = 1e-9;

pub fn membership_flag_1d(flag: &FlagDataSet1D, eps: f64, sig: f64, tol: f64) -> FlagMembership {
    flag.classify(eps, sig, tol.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxedMembership {
    InDlocPlus,
    InDlocMinus,
    InRelaxedInterior,
    Outside,
}

impl RelaxedMembership {
    pub fn is_inside(self) -> bool {
        self != RelaxedMembership::Outside
    }

    pub fn is_original(self) -> bool {
        matches!(self, RelaxedMembership::InDlocPlus | RelaxedMembership::InDlocMinus)
    }
}

/// Coordinates of a state relative to the wells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellCoordinates {
    /// `(ε − C⁻¹σ)·b / |b|²`.
    pub mu: f64,
    /// `σ·b`.
    pub sigma_b: f64,
    /// Norm of the part of `ε − C⁻¹σ` orthogonal to `b`.
    pub off_line: f64,
}

impl TwoWellRelaxation {
    pub fn coordinates(&self, z: &LocalState) -> WellCoordinates {
        let p = z.eps - self.c.apply_inv(&z.sig);
        let bb = self.b.dot(&self.b);
        let mu = p.dot(&self.b) / bb;
        WellCoordinates { mu, sigma_b: z.sig.dot(&self.b), off_line: (p - self.b.scale(mu)).norm() }
    }

    /// Clause-by-clause classification; closed-set convention on every
    /// inequality, `tol` absolute on clause quantities.
    pub fn membership(&self, z: &LocalState, tol: f64) -> RelaxedMembership {
        let w = self.coordinates(z);
        let zn = (z.eps.norm().powi(2) + z.sig.norm().powi(2)).sqrt();
        if !(w.off_line <= DEFAULT_TOL * (1.0 + zn)) {
            return RelaxedMembership::Outside;
        }
        let bn = self.b.norm();
        if (w.mu - 1.0).abs() * bn <= tol && w.sigma_b >= -self.cbb - tol {
            return RelaxedMembership::InDlocPlus;
        }
        if (w.mu + 1.0).abs() * bn <= tol && w.sigma_b <= self.cbb + tol {
            return RelaxedMembership::InDlocMinus;
        }
        let band = self.cbb - self.alpha_minus;
        if w.mu.abs() <= 1.0 + tol && (w.sigma_b + self.alpha_minus * w.mu).abs() <= band + tol {
            return RelaxedMembership::InRelaxedInterior;
        }
        RelaxedMembership::Outside
    }

    /// State `(C⁻¹σ + μb, σ)` on the well line.
    pub fn state_at(&self, sig: SymMatrix, mu: f64) -> LocalState {
        LocalState { eps: self.c.apply_inv(&sig) + self.b.scale(mu), sig }
    }
}

pub fn membership_relaxed_nd(rx: &TwoWellRelaxation, z: &LocalState, tol: f64) -> RelaxedMembership {
    rx.membership(z, tol)
}

/// Relaxation of a general two-well set, reduced to wells `±b` by a
/// translation of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedTwoWell {
    pub relaxation: TwoWellRelaxation,
    /// Subtract from a state of the original set to land in the centred set.
    pub offset: LocalState,
}

impl RelaxedTwoWell {
    pub fn from_set(set: &TwoWellDataSet, exec: Execution) -> Result<Self> {
        let tr = translate_unequal_wells(set)?;
        let half = (*set.b() - *set.a()).scale(0.5);
        if half.norm() == 0.0 {
            return Err(Error::IdenticalWells);
        }
        let mid = (*set.a() + *set.b()).scale(0.5);
        let offset = tr.shift + LocalState { eps: mid, sig: SymMatrix::zeros(mid.dim()) };
        Ok(RelaxedTwoWell { relaxation: TwoWellRelaxation::new(set.stiffness().clone(), half, exec)?, offset })
    }

    pub fn to_centred(&self, z: &LocalState) -> LocalState {
        *z - self.offset
    }

    pub fn from_centred(&self, z: &LocalState) -> LocalState {
        *z + self.offset
    }

    pub fn membership(&self, z: &LocalState, tol: f64) -> RelaxedMembership {
        self.relaxation.membership(&self.to_centred(z), tol)
    }
}
