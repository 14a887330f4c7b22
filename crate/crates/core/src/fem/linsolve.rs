//! Sparse symmetric positive definite solves: envelope (skyline) Cholesky
//! with reverse Cuthill–McKee ordering, and Jacobi-preconditioned conjugate
//! gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinearSolver {
    Cholesky,
    ConjugateGradient {
        #[serde(default = "default_cg_tol")]
        rel_tol: f64,
        #[serde(default)]
        max_iter: Option<usize>,
    },
}

fn default_cg_tol() -> f64 {
    1e-12
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::Cholesky
    }
}

impl LinearSolver {
    pub fn cg() -> Self {
        LinearSolver::ConjugateGradient { rel_tol: default_cg_tol(), max_iter: None }
    }
}

/// Compressed sparse rows, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sum duplicate `(i, j, v)` entries; every entry must lie in `n × n`.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < n && j < n, "triplet out of range");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).filter(|(j, _)| *j == i).map(|(_, v)| v).sum()).collect()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, r) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                r[j] += v;
            }
        }
        d
    }

    /// Reverse Cuthill–McKee permutation: `perm[new] = old`.
    pub fn rcm(&self) -> Vec<usize> {
        let n = self.n;
        let deg: Vec<usize> = (0..n).map(|i| self.row(i).filter(|(j, _)| *j != i).count()).collect();
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut starts: Vec<usize> = (0..n).collect();
        starts.sort_by_key(|&i| (deg[i], i));
        for s in starts {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut head = order.len();
            order.push(s);
            while head < order.len() {
                let v = order[head];
                head += 1;
                let mut nb: Vec<usize> = self.row(v).map(|(j, _)| j).filter(|&j| !seen[j]).collect();
                nb.sort_by_key(|&j| (deg[j], j));
                nb.dedup();
                for j in nb {
                    seen[j] = true;
                    order.push(j);
                }
            }
        }
        order.reverse();
        order
    }
}

/// Envelope Cholesky factor of a permuted SPD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
}

/// Failure of the factorization at a (permuted) pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotFailure {
    pub original_index: usize,
    pub pivot: f64,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix, pivot_tol: f64) -> std::result::Result<Self, PivotFailure> {
        let n = a.n();
        let perm = a.rcm();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (oj, _) in a.row(old) {
                let j = inv[oj];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut l = vec![0.0; start[n]];
        let mut max_diag: f64 = 0.0;
        for old in 0..n {
            let i = inv[old];
            for (oj, v) in a.row(old) {
                let j = inv[oj];
                if j <= i {
                    l[start[i] + j - first[i]] += v;
                }
                if j == i {
                    max_diag = max_diag.max(v.abs());
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = l[start[i] + j - fi];
                for k in k0..j {
                    s -= l[start[i] + k - fi] * l[start[j] + k - fj];
                }
                if j < i {
                    l[start[i] + j - fi] = s / l[start[j + 1] - 1];
                } else {
                    if !(s > pivot_tol * max_diag) {
                        return Err(PivotFailure { original_index: perm[i], pivot: s });
                    }
                    l[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(SkylineCholesky { n, perm, first, start, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.l[self.start[i] + k - fi] * y[k];
            }
            y[i] = s / self.l[self.start[i + 1] - 1];
        }
        for i in (0..n).rev() {
            y[i] /= self.l[self.start[i + 1] - 1];
            let fi = self.first[i];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.l[self.start[i] + k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Stored envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.l.len()
    }
}

/// Jacobi-preconditioned CG. Returns the iterate and iteration count.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = a.n();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let dinv: Vec<f64> = a.diag().iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        let ap = a.mul(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::LinearSolve(format!("matrix is not positive definite along a search direction (pᵀAp = {pap:e})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolve(format!("conjugate gradient did not reach relative tolerance {rel_tol:e} in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn cholesky_solves_tridiagonal() {
        let a = laplacian(50);
        let x0: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).cos()).collect();
        let b = a.mul(&x0);
        let f = SkylineCholesky::factor(&a, 1e-12).unwrap();
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x0) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_agrees_with_cholesky() {
        let a = laplacian(40);
        let b: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let x1 = SkylineCholesky::factor(&a, 1e-12).unwrap().solve(&b);
        let (x2, _) = conjugate_gradient(&a, &b, 1e-13, 1000).unwrap();
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-8 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn singular_matrix_fails_at_a_pivot() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        assert!(SkylineCholesky::factor(&a, 1e-12).is_err());
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(1, vec![(0, 0, 1.0), (0, 0, 2.5)]);
        assert_eq!(a.diag(), vec![3.5]);
    }
}
