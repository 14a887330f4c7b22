//! Quadratic functions separating points outside the relaxed set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::cloud::embed;
use crate::error::{Error, Result};
use crate::phase::LocalState;
use crate::tensor::{packed_len, SymMatrix};

use super::acoustic::TwoWellRelaxation;
use super::membership::DEFAULT_TOL;

/// `f(z) = Q(z − z*) + δ(1 − μ(z))`, nonpositive on the relaxed set and
/// positive at `z0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatingCertificate {
    pub rx: TwoWellRelaxation,
    pub z0: LocalState,
    pub z_star: LocalState,
    pub mu0: f64,
    pub delta: f64,
}

/// Coordinates `(σ', μ)` of the energy-orthogonal projection of `z` onto the
/// well line space `{(C⁻¹σ + μb, σ)}`.
pub fn project_to_line_space(rx: &TwoWellRelaxation, z: &LocalState) -> (SymMatrix, f64) {
    let dim = rx.dim();
    let m = packed_len(dim);
    let mut cols: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            let s = SymMatrix::from_packed(dim, &e).expect("packed length");
            embed(&rx.state_at(s, 0.0), &rx.c)
        })
        .collect();
    cols.push(embed(&LocalState { eps: rx.b, sig: SymMatrix::zeros(dim) }, &rx.c));
    let rows = 2 * m;
    let a = DMatrix::from_fn(rows, m + 1, |i, j| cols[j][i]);
    let rhs = DVector::from_vec(embed(z, &rx.c));
    let x = (a.transpose() * &a).cholesky().expect("line space basis is independent").solve(&(a.transpose() * rhs));
    let sig = SymMatrix::from_packed(dim, &x.as_slice()[..m]).expect("packed length");
    (sig, x[m])
}

impl SeparatingCertificate {
    /// `Q(w) = −(σ·b + α−μ)(σ·b + α+μ)` on the line-space part of `w`.
    pub fn quadratic(&self, w: &LocalState) -> f64 {
        let (sig, mu) = project_to_line_space(&self.rx, w);
        let sb = sig.dot(&self.rx.b);
        -(sb + self.rx.alpha_minus * mu) * (sb + self.rx.alpha_plus * mu)
    }

    pub fn eval(&self, z: &LocalState) -> f64 {
        let mu = self.rx.coordinates(z).mu;
        self.quadratic(&(*z - self.z_star)) + self.delta * (1.0 - mu)
    }
}

/// Certificate for `z0` in the strip beyond the upper band:
/// `μ0 ∈ [−1, 1)` and `σ0·b + α−μ0 > Cb·b − α−`.
pub fn separating_certificate(rx: &TwoWellRelaxation, z0: &LocalState) -> Result<SeparatingCertificate> {
    if z0.dim() != rx.dim() {
        return Err(Error::DimensionMismatch { expected: rx.dim(), found: z0.dim() });
    }
    let w = rx.coordinates(z0);
    let zn = (z0.eps.norm().powi(2) + z0.sig.norm().powi(2)).sqrt();
    if w.off_line > DEFAULT_TOL * (1.0 + zn) {
        return Err(Error::NotInRegion("state is off the well line space".into()));
    }
    let gap = w.sigma_b + rx.alpha_minus * w.mu - (rx.cbb - rx.alpha_minus);
    if !(w.mu >= -1.0 && w.mu < 1.0) || !(gap > 0.0) {
        return Err(Error::NotInRegion(format!("state is not in the separation strip (mu = {}, gap = {gap})", w.mu)));
    }
    let z_hat = LocalState { eps: SymMatrix::sym_outer(&rx.c_hat_minus, &rx.nu_minus), sig: rx.sigma_hat() };
    Ok(SeparatingCertificate {
        rx: rx.clone(),
        z0: *z0,
        z_star: *z0 + z_hat.scale(1.0 - w.mu),
        mu0: w.mu,
        delta: 0.5 * gap * gap,
    })
}
