//! Symmetric second-order tensors in packed form and elasticity tensors in
//! Voigt form.
//!
//! A [`SymMatrix`] stores the independent tensor components
//! `[11]`, `[11, 22, 12]` or `[11, 22, 33, 23, 13, 12]` for dimension 1, 2
//! or 3. The stored values are always the tensor components themselves, so a
//! strain and a stress share one representation. The Voigt matrix of an
//! [`ElasticityTensor`] acts on *engineering* strain vectors (shear entries
//! doubled) and returns stress vectors, which makes `Cε·ε` in packed form
//! equal to the full tensor contraction.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum packed length (dimension 3).
pub const MAX_PACKED: usize = 6;

/// Packed length `dim·(dim+1)/2`.
pub fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDim(dim))
    }
}

/// `(row, col)` of packed slot `k`.
pub fn packed_index_pair(dim: usize, k: usize) -> (usize, usize) {
    match (dim, k) {
        (_, 0) => (0, 0),
        (_, 1) => (1, 1),
        (2, 2) => (0, 1),
        (3, 2) => (2, 2),
        (3, 3) => (1, 2),
        (3, 4) => (0, 2),
        (3, 5) => (0, 1),
        _ => panic!("packed slot {k} out of range for dim {dim}"),
    }
}

/// Packed slot of tensor entry `(i, j)`.
pub fn packed_slot(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        return i;
    }
    match (dim, i, j) {
        (2, 0, 1) => 2,
        (3, 1, 2) => 3,
        (3, 0, 2) => 4,
        (3, 0, 1) => 5,
        _ => panic!("entry ({i}, {j}) out of range for dim {dim}"),
    }
}

pub fn is_shear_slot(dim: usize, k: usize) -> bool {
    k >= dim
}

/// Symmetric `dim × dim` tensor stored in packed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    c: [f64; MAX_PACKED],
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim).expect("SymMatrix dimension");
        SymMatrix { dim, c: [0.0; MAX_PACKED] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.c[i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        check_dim(dim)?;
        let mut m = Self::zeros(dim);
        m.c[..dim].copy_from_slice(values);
        Ok(m)
    }

    /// Build from packed tensor components.
    pub fn from_packed(dim: usize, packed: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if packed.len() != packed_len(dim) {
            return Err(Error::DimensionMismatch { expected: packed_len(dim), found: packed.len() });
        }
        let mut m = Self::zeros(dim);
        m.c[..packed.len()].copy_from_slice(packed);
        Ok(m)
    }

    /// Build from a full row-major matrix; rejects asymmetric input.
    pub fn from_full(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            for j in 0..i {
                let diff = (rows[i][j] - rows[j][i]).abs();
                let scale = rows[i][j].abs().max(rows[j][i].abs()).max(1.0);
                if diff > 1e-12 * scale {
                    return Err(Error::NotSymmetric { row: i, col: j, diff });
                }
            }
        }
        let mut m = Self::zeros(dim);
        for k in 0..packed_len(dim) {
            let (i, j) = packed_index_pair(dim, k);
            m.c[k] = 0.5 * (rows[i][j] + rows[j][i]);
        }
        Ok(m)
    }

    /// Symmetrized product `c ⊙ ν`, `(c_i ν_j + c_j ν_i) / 2`.
    pub fn sym_outer(c: &[f64], nu: &[f64]) -> Self {
        let dim = c.len();
        assert_eq!(dim, nu.len(), "sym_outer operands must share dimension");
        let mut m = Self::zeros(dim);
        for k in 0..packed_len(dim) {
            let (i, j) = packed_index_pair(dim, k);
            m.c[k] = 0.5 * (c[i] * nu[j] + c[j] * nu[i]);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn packed(&self) -> &[f64] {
        &self.c[..packed_len(self.dim)]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[packed_slot(self.dim, i, j)]
    }

    pub fn to_full(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Full contraction `A·B = Σ_ij A_ij B_ij`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for k in 0..packed_len(self.dim) {
            let w = if is_shear_slot(self.dim, k) { 2.0 } else { 1.0 };
            s += w * self.c[k] * other.c[k];
        }
        s
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.c[..self.dim].iter().sum()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    /// Engineering strain vector (shear slots doubled).
    pub fn to_engineering(&self) -> Vec<f64> {
        (0..packed_len(self.dim))
            .map(|k| if is_shear_slot(self.dim, k) { 2.0 * self.c[k] } else { self.c[k] })
            .collect()
    }

    pub fn from_engineering(dim: usize, v: &[f64]) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..packed_len(dim) {
            m.c[k] = if is_shear_slot(dim, k) { 0.5 * v[k] } else { v[k] };
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.c.iter_mut().for_each(|x| *x *= s);
        m
    }

    pub fn is_finite(&self) -> bool {
        self.packed().iter().all(|x| x.is_finite())
    }

    fn zip(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "SymMatrix dimension mismatch");
        let mut m = *self;
        for k in 0..MAX_PACKED {
            m.c[k] = f(self.c[k], other.c[k]);
        }
        m
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: SymMatrix) -> SymMatrix {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: SymMatrix) -> SymMatrix {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl AddAssign for SymMatrix {
    fn add_assign(&mut self, rhs: SymMatrix) {
        *self = *self + rhs;
    }
}

impl SubAssign for SymMatrix {
    fn sub_assign(&mut self, rhs: SymMatrix) {
        *self = *self - rhs;
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

impl Mul<SymMatrix> for f64 {
    type Output = SymMatrix;
    fn mul(self, rhs: SymMatrix) -> SymMatrix {
        rhs.scale(self)
    }
}

/// Nominal elasticity tensor in Voigt form (engineering-shear convention).
///
/// Construction checks major symmetry and positive definiteness and caches
/// the inverse and the Cholesky factor used by the metric embedding.
/// Serialized as its Voigt rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ElasticityTensor {
    dim: usize,
    m: usize,
    voigt: Vec<f64>,
    inv: Vec<f64>,
    /// Lower Cholesky factor `L` with `voigt = L Lᵀ`.
    chol: Vec<f64>,
    /// `L⁻¹`.
    chol_inv: Vec<f64>,
    min_eig: f64,
    max_eig: f64,
}

impl TryFrom<Vec<Vec<f64>>> for ElasticityTensor {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match rows.len() {
            1 => 1,
            3 => 2,
            6 => 3,
            n => return Err(Error::DimensionMismatch { expected: 3, found: n }),
        };
        Self::from_voigt(dim, &rows)
    }
}

impl From<ElasticityTensor> for Vec<Vec<f64>> {
    fn from(c: ElasticityTensor) -> Self {
        c.voigt_rows()
    }
}

impl ElasticityTensor {
    /// Build from a row-major Voigt matrix of size `m × m`.
    pub fn from_voigt(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        check_dim(dim)?;
        let m = packed_len(dim);
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: rows.len() });
        }
        let mut voigt = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let a = rows[i][j];
                let b = rows[j][i];
                let diff = (a - b).abs();
                if diff > 1e-12 * a.abs().max(b.abs()) {
                    return Err(Error::NotSymmetric { row: i, col: j, diff });
                }
                voigt[i * m + j] = a;
            }
        }
        let mat = DMatrix::from_row_slice(m, m, &voigt);
        let eig = mat.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(min_eig > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min_eig });
        }
        let chol = mat
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { min_eigenvalue: min_eig })?;
        let l = chol.l();
        let inv = chol.inverse();
        let l_inv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite { min_eigenvalue: min_eig })?;
        let row_major = |a: &DMatrix<f64>| -> Vec<f64> {
            let mut v = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    v[i * m + j] = a[(i, j)];
                }
            }
            v
        };
        // Symmetrize the inverse so that C⁻¹ is exactly symmetric.
        let mut inv_rm = row_major(&inv);
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (inv_rm[i * m + j] + inv_rm[j * m + i]);
                inv_rm[i * m + j] = s;
                inv_rm[j * m + i] = s;
            }
        }
        Ok(ElasticityTensor {
            dim,
            m,
            voigt,
            inv: inv_rm,
            chol: row_major(&l),
            chol_inv: row_major(&l_inv),
            min_eig,
            max_eig,
        })
    }

    /// Scalar modulus for the one-dimensional case.
    pub fn scalar(c: f64) -> Result<Self> {
        Self::from_voigt(1, &[vec![c]])
    }

    /// The identity map on symmetric tensors (`σ = ε`). Its Voigt matrix has
    /// `½` on the shear diagonal.
    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let m = packed_len(dim);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i != j { 0.0 } else if is_shear_slot(dim, i) { 0.5 * s } else { s })
                    .collect()
            })
            .collect();
        Self::from_voigt(dim, &rows).expect("scaled identity is SPD for s > 0")
    }

    /// Isotropic tensor `σ = λ tr(ε) I + 2μ ε`.
    pub fn isotropic(dim: usize, lambda: f64, mu: f64) -> Result<Self> {
        check_dim(dim)?;
        let m = packed_len(dim);
        let mut rows = vec![vec![0.0; m]; m];
        for i in 0..dim {
            for j in 0..dim {
                rows[i][j] = lambda + if i == j { 2.0 * mu } else { 0.0 };
            }
        }
        for k in dim..m {
            rows[k][k] = mu;
        }
        Self::from_voigt(dim, &rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Voigt size `m`.
    pub fn size(&self) -> usize {
        self.m
    }

    pub fn voigt_rows(&self) -> Vec<Vec<f64>> {
        (0..self.m).map(|i| self.voigt[i * self.m..(i + 1) * self.m].to_vec()).collect()
    }

    pub fn voigt_entry(&self, i: usize, j: usize) -> f64 {
        self.voigt[i * self.m + j]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eig
    }

    fn matvec(a: &[f64], m: usize, x: &[f64]) -> Vec<f64> {
        (0..m).map(|i| (0..m).map(|j| a[i * m + j] * x[j]).sum()).collect()
    }

    /// Voigt matrix times a Voigt vector.
    pub fn voigt_mul(&self, x: &[f64]) -> Vec<f64> {
        Self::matvec(&self.voigt, self.m, x)
    }

    /// Inverse Voigt matrix times a Voigt vector.
    pub fn voigt_inv_mul(&self, x: &[f64]) -> Vec<f64> {
        Self::matvec(&self.inv, self.m, x)
    }

    /// `Cε`.
    pub fn apply(&self, eps: &SymMatrix) -> SymMatrix {
        assert_eq!(eps.dim(), self.dim, "tensor dimension mismatch");
        let s = self.voigt_mul(&eps.to_engineering());
        SymMatrix::from_packed(self.dim, &s).expect("packed length")
    }

    /// `C⁻¹σ`.
    pub fn apply_inv(&self, sig: &SymMatrix) -> SymMatrix {
        assert_eq!(sig.dim(), self.dim, "tensor dimension mismatch");
        let e = self.voigt_inv_mul(sig.packed());
        SymMatrix::from_engineering(self.dim, &e)
    }

    /// `Cε·ε`.
    pub fn energy(&self, eps: &SymMatrix) -> f64 {
        self.apply(eps).dot(eps)
    }

    /// `C⁻¹σ·σ`.
    pub fn compliance_energy(&self, sig: &SymMatrix) -> f64 {
        self.apply_inv(sig).dot(sig)
    }

    /// Metric-weighted coordinates: `Lᵀ x` for an engineering strain vector.
    pub fn embed_strain(&self, eng: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|i| (0..m).map(|j| self.chol[j * m + i] * eng[j]).sum()).collect()
    }

    /// Metric-weighted coordinates: `L⁻¹ s` for a stress vector.
    pub fn embed_stress(&self, s: &[f64]) -> Vec<f64> {
        Self::matvec(&self.chol_inv, self.m, s)
    }

    /// Inverse of [`Self::embed_strain`].
    pub fn unembed_strain(&self, y: &[f64]) -> Vec<f64> {
        // x = L⁻ᵀ y
        let m = self.m;
        (0..m).map(|i| (0..m).map(|j| self.chol_inv[j * m + i] * y[j]).sum()).collect()
    }

    /// Inverse of [`Self::embed_stress`].
    pub fn unembed_stress(&self, y: &[f64]) -> Vec<f64> {
        Self::matvec(&self.chol, self.m, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_roundtrip_is_exact() {
        let rows = vec![vec![1.5, -0.25, 3.0], vec![-0.25, 2.0, 0.125], vec![3.0, 0.125, -7.0]];
        let m = SymMatrix::from_full(&rows).unwrap();
        assert_eq!(m.to_full(), rows);
        let again = SymMatrix::from_packed(3, m.packed()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let rows = vec![vec![1.0, 2.0], vec![0.0, 1.0]];
        assert!(matches!(SymMatrix::from_full(&rows), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn packed_contraction_matches_full() {
        let a = SymMatrix::from_packed(3, &[1.0, 2.0, 3.0, 0.5, -0.7, 1.1]).unwrap();
        let b = SymMatrix::from_packed(3, &[-1.0, 0.3, 2.0, 1.5, 0.2, -0.4]).unwrap();
        let fa = a.to_full();
        let fb = b.to_full();
        let full: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| fa[i][j] * fb[i][j]).sum();
        assert!((a.dot(&b) - full).abs() < 1e-14);
    }

    #[test]
    fn identity_tensor_maps_strain_to_itself() {
        let c = ElasticityTensor::identity(2);
        let e = SymMatrix::from_packed(2, &[0.3, -0.2, 0.7]).unwrap();
        let s = c.apply(&e);
        for (x, y) in s.packed().iter().zip(e.packed()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((c.energy(&e) - e.dot(&e)).abs() < 1e-15);
    }

    #[test]
    fn apply_inverse_composes_to_identity() {
        let c = ElasticityTensor::isotropic(3, 1.3, 0.8).unwrap();
        let e = SymMatrix::from_packed(3, &[0.1, -0.4, 0.2, 0.05, 0.3, -0.15]).unwrap();
        let back = c.apply_inv(&c.apply(&e));
        assert!((back - e).norm() <= 1e-12 * e.norm());
    }

    #[test]
    fn non_spd_voigt_is_rejected() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(ElasticityTensor::from_voigt(1, &rows), Err(Error::DimensionMismatch { .. })));
        let rows = vec![vec![1.0, 2.0, 0.0], vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!(matches!(ElasticityTensor::from_voigt(2, &rows), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn embedding_reproduces_quadratic_forms() {
        let c = ElasticityTensor::isotropic(2, 0.7, 1.9).unwrap();
        let e = SymMatrix::from_packed(2, &[0.4, -0.1, 0.25]).unwrap();
        let s = SymMatrix::from_packed(2, &[1.0, 0.5, -0.3]).unwrap();
        let ye = c.embed_strain(&e.to_engineering());
        let ys = c.embed_stress(s.packed());
        let ne: f64 = ye.iter().map(|x| x * x).sum();
        let ns: f64 = ys.iter().map(|x| x * x).sum();
        assert!((ne - c.energy(&e)).abs() < 1e-13);
        assert!((ns - c.compliance_energy(&s)).abs() < 1e-13);
        let back = c.unembed_strain(&ye);
        for (a, b) in back.iter().zip(e.to_engineering()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn sym_outer_is_symmetrized() {
        let m = SymMatrix::sym_outer(&[1.0, 2.0], &[0.0, 1.0]);
        assert_eq!(m.to_full(), vec![vec![0.0, 0.5], vec![0.5, 2.0]]);
    }
}
