//! Rank-one laminates: splitting a relaxed state into two well states and
//! layering them on a mesh.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Mesh;
use crate::phase::LocalState;
use crate::tensor::{ElasticityTensor, SymMatrix};

use super::acoustic::TwoWellRelaxation;
use super::membership::RelaxedMembership;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaminateDecomposition {
    pub z_minus: LocalState,
    pub z_plus: LocalState,
    /// Weight of `z_plus`: `z = λ z+ + (1−λ) z−`.
    pub lambda: f64,
    pub nu: Vec<f64>,
    pub c: Vec<f64>,
    pub z_hat: LocalState,
}

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn state_norm(z: &LocalState) -> f64 {
    (z.eps.norm().powi(2) + z.sig.norm().powi(2)).sqrt()
}

/// Distance of a jump `dz` from the cone `{(c⊙ν, σ): σν = 0}` at fixed `ν`.
pub fn cone_residual(dz: &LocalState, nu: &[f64]) -> f64 {
    let en = dz.eps.mul_vec(nu);
    let t: f64 = en.iter().zip(nu).map(|(a, b)| a * b).sum();
    let c: Vec<f64> = en.iter().zip(nu).map(|(e, n)| 2.0 * e - t * n).collect();
    (dz.eps - SymMatrix::sym_outer(&c, nu)).norm() + vnorm(&dz.sig.mul_vec(nu))
}

impl LaminateDecomposition {
    /// `|z − (λ z+ + (1−λ) z−)|`.
    pub fn reconstruction_error(&self, z: &LocalState) -> f64 {
        let r = *z - (self.z_plus.scale(self.lambda) + self.z_minus.scale(1.0 - self.lambda));
        state_norm(&r)
    }

    /// Residual of `z+ − z− = (c⊙ν, σ)` with `σν = 0`.
    pub fn connection_residual(&self) -> f64 {
        let d = self.z_plus - self.z_minus;
        let c2: Vec<f64> = self.c.iter().map(|x| 2.0 * x).collect();
        (d.eps - SymMatrix::sym_outer(&c2, &self.nu)).norm() + vnorm(&d.sig.mul_vec(&self.nu))
    }

    /// Constant `K` with `|z±| ≤ K(|z| + 1)`.
    pub fn bound_constant(&self) -> f64 {
        (2.0 * state_norm(&self.z_hat)).max(1.0)
    }
}

/// Split an interior point of the relaxed set into a rank-one connected
/// pair of well states.
pub fn rank_one_decompose(rx: &TwoWellRelaxation, z: &LocalState, tol: f64) -> Result<LaminateDecomposition> {
    if z.dim() != rx.dim() {
        return Err(Error::DimensionMismatch { expected: rx.dim(), found: z.dim() });
    }
    if rx.membership(z, tol) != RelaxedMembership::InRelaxedInterior {
        return Err(Error::NotInRegion("state is not in the relaxed interior".into()));
    }
    let mu = rx.coordinates(z).mu.clamp(-1.0, 1.0);
    let eps_hat = SymMatrix::sym_outer(&rx.c_hat_minus, &rx.nu_minus);
    let z_hat = LocalState { eps: eps_hat, sig: rx.sigma_hat() };
    Ok(LaminateDecomposition {
        z_minus: *z - z_hat.scale(1.0 + mu),
        z_plus: *z + z_hat.scale(1.0 - mu),
        lambda: (1.0 + mu) / 2.0,
        nu: rx.nu_minus.clone(),
        c: rx.c_hat_minus.clone(),
        z_hat,
    })
}

/// A layered piecewise-constant field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaminateField {
    pub states: Vec<LocalState>,
    /// `true` where the element carries `z+`.
    pub plus: Vec<bool>,
    /// Volume fraction of `z+`.
    pub volume_fraction: f64,
    /// Largest energy norm of `∫(z_h − z)` over half-spaces `{x·ν ≤ s}`,
    /// normalized by the total volume.
    pub mean_error: f64,
    /// Energy norm of the volume average of `z_h − z`.
    pub global_mean_error: f64,
    /// Largest cone residual over internal interfaces between phases.
    pub jump_residual: f64,
}

fn energy_norm(z: &LocalState, c: &ElasticityTensor) -> f64 {
    (0.5 * c.energy(&z.eps) + 0.5 * c.compliance_energy(&z.sig)).max(0.0).sqrt()
}

/// Layer `decomp` with `h` periods per unit length along `ν`; each element
/// takes the phase of the layer function at its centroid.
pub fn generate_laminate_field(
    mesh: &Mesh,
    decomp: &LaminateDecomposition,
    h: usize,
    metric: &ElasticityTensor,
) -> Result<LaminateField> {
    if h == 0 {
        return Err(Error::InvalidArgument("h must be at least 1".into()));
    }
    if mesh.dim() != decomp.nu.len() || metric.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: mesh.dim(), found: decomp.nu.len() });
    }
    let nu = &decomp.nu;
    let layer: Vec<f64> =
        (0..mesh.n_elements()).map(|e| mesh.centroid(e).iter().zip(nu).map(|(x, n)| x * n).sum::<f64>()).collect();
    let plus: Vec<bool> = layer
        .iter()
        .map(|s| {
            let f = (h as f64 * s).rem_euclid(1.0);
            f < decomp.lambda
        })
        .collect();
    let states: Vec<LocalState> = plus.iter().map(|&p| if p { decomp.z_plus } else { decomp.z_minus }).collect();
    let vol = mesh.volumes();
    let total: f64 = vol.iter().sum();
    let volume_fraction = plus.iter().zip(vol).filter(|(p, _)| **p).map(|(_, v)| v).sum::<f64>() / total;
    let target = decomp.z_plus.scale(decomp.lambda) + decomp.z_minus.scale(1.0 - decomp.lambda);
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| layer[a].total_cmp(&layer[b]).then(a.cmp(&b)));
    let mut acc = LocalState::zeros(mesh.dim());
    let mut mean_error: f64 = 0.0;
    for &e in &order {
        acc = acc + (states[e] - target).scale(vol[e] / total);
        mean_error = mean_error.max(energy_norm(&acc, metric));
    }
    let global_mean_error = energy_norm(&acc, metric);
    let mut jump_residual: f64 = 0.0;
    for (a, b) in mesh.element_neighbours() {
        if plus[a] != plus[b] {
            jump_residual = jump_residual.max(cone_residual(&(states[a] - states[b]), nu));
        }
    }
    Ok(LaminateField { states, plus, volume_fraction, mean_error, global_mean_error, jump_residual })
}
