//! Rank-one connections between the wells: the acoustic system, `ĉ(ν)` and
//! the extremes of `α̂(ν)` over the unit sphere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{argmax_by_key, argmin_by_key, map_indexed, Execution};
use crate::tensor::{ElasticityTensor, SymMatrix};

pub const ANGLE_SAMPLES: usize = 720;
pub const SPHERE_SAMPLES: usize = 2000;

fn unit(e: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[e] = 1.0;
    v
}

fn check_unit(nu: &[f64]) -> Result<()> {
    let n2: f64 = nu.iter().map(|x| x * x).sum();
    if (n2.sqrt() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, |nu| = {}", n2.sqrt())));
    }
    Ok(())
}

/// `A(ν)c = C(c⊙ν)ν` as an `n × n` matrix.
pub fn acoustic_tensor(c: &ElasticityTensor, nu: &[f64]) -> DMatrix<f64> {
    let n = nu.len();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = c.apply(&SymMatrix::sym_outer(&unit(j, n), nu)).mul_vec(nu);
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    a
}

/// Solution of `A(ν)c = (Cb)ν`.
pub fn c_hat(c: &ElasticityTensor, b: &SymMatrix, nu: &[f64]) -> Result<Vec<f64>> {
    if nu.len() != c.dim() || b.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), found: nu.len() });
    }
    check_unit(nu)?;
    let a = acoustic_tensor(c, nu);
    let rhs = DVector::from_vec(c.apply(b).mul_vec(nu));
    let chol = a.cholesky().ok_or_else(|| Error::LinearSolve("acoustic tensor is not positive definite".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Stress `C(ĉ⊙ν − b)` of the optimal connection.
pub fn connection_stress(c: &ElasticityTensor, b: &SymMatrix, nu: &[f64], ch: &[f64]) -> SymMatrix {
    c.apply(&(SymMatrix::sym_outer(ch, nu) - *b))
}

/// `α̂(ν) = C(ĉ⊙ν − b)·(ĉ⊙ν − b)`.
pub fn alpha_hat(c: &ElasticityTensor, b: &SymMatrix, nu: &[f64]) -> Result<f64> {
    let ch = c_hat(c, b, nu)?;
    Ok(c.energy(&(SymMatrix::sym_outer(&ch, nu) - *b)))
}

/// `σ̂ĉ` at `ν`; tangent to the sphere and half the gradient of `α̂`.
fn extremal_vector(c: &ElasticityTensor, b: &SymMatrix, nu: &[f64]) -> Vec<f64> {
    let ch = c_hat(c, b, nu).expect("unit direction");
    connection_stress(c, b, nu, &ch).mul_vec(&ch)
}

fn angle_slope(c: &ElasticityTensor, b: &SymMatrix, theta: f64) -> f64 {
    let g = extremal_vector(c, b, &angle_dir(theta));
    -theta.sin() * g[0] + theta.cos() * g[1]
}

/// Bisection on the angular slope near `theta`; `None` without a sign change.
fn polish_angle(c: &ElasticityTensor, b: &SymMatrix, theta: f64) -> Option<f64> {
    let (mut lo, mut hi) = (theta - 1e-6, theta + 1e-6);
    let (mut glo, ghi) = (angle_slope(c, b, lo), angle_slope(c, b, hi));
    if glo == 0.0 {
        return Some(lo);
    }
    if glo * ghi > 0.0 {
        return None;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let g = angle_slope(c, b, mid);
        if g == 0.0 {
            return Some(mid);
        }
        if (g > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Newton steps on `σ̂ĉ = 0` in the chart around `nu0`.
fn polish_sphere(c: &ElasticityTensor, b: &SymMatrix, nu0: &[f64], t1: &[f64; 3], t2: &[f64; 3], mut p: [f64; 2]) -> [f64; 2] {
    let g = |p: [f64; 2]| -> [f64; 2] {
        let v = extremal_vector(c, b, &chart(nu0, t1, t2, p));
        let d = |t: &[f64; 3]| v[0] * t[0] + v[1] * t[1] + v[2] * t[2];
        [d(t1), d(t2)]
    };
    let norm = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let mut gp = g(p);
    for _ in 0..8 {
        let h = 1e-7;
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut a = p;
            let mut m = p;
            a[k] += h;
            m[k] -= h;
            let (ga, gm) = (g(a), g(m));
            j[0][k] = (ga[0] - gm[0]) / (2.0 * h);
            j[1][k] = (ga[1] - gm[1]) / (2.0 * h);
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let step = [(j[1][1] * gp[0] - j[0][1] * gp[1]) / det, (j[0][0] * gp[1] - j[1][0] * gp[0]) / det];
        let q = [p[0] - step[0], p[1] - step[1]];
        let gq = g(q);
        if !(norm(gq) < norm(gp)) {
            break;
        }
        p = q;
        gp = gq;
    }
    p
}

fn angle_dir(theta: f64) -> Vec<f64> {
    vec![theta.cos(), theta.sin()]
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    golden_min(&f, lo, hi, tol)
}

/// Nelder–Mead on `R²`; returns the best vertex.
pub fn nelder_mead_2d(f: &dyn Fn([f64; 2]) -> f64, start: [f64; 2], step: f64, max_iter: usize) -> [f64; 2] {
    let mut s: Vec<([f64; 2], f64)> = [start, [start[0] + step, start[1]], [start[0], start[1] + step]]
        .into_iter()
        .map(|p| (p, f(p)))
        .collect();
    let comb = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..max_iter {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = ((s[1].0[0] - s[0].0[0]).abs() + (s[1].0[1] - s[0].0[1]).abs())
            .max((s[2].0[0] - s[0].0[0]).abs() + (s[2].0[1] - s[0].0[1]).abs());
        if size < 1e-13 {
            break;
        }
        let centroid = [(s[0].0[0] + s[1].0[0]) / 2.0, (s[0].0[1] + s[1].0[1]) / 2.0];
        let worst = s[2];
        let xr = comb(centroid, worst.0, -1.0);
        let fr = f(xr);
        if fr < s[0].1 {
            let xe = comb(centroid, worst.0, -2.0);
            let fe = f(xe);
            s[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < s[1].1 {
            s[2] = (xr, fr);
        } else {
            let xc = if fr < worst.1 { comb(centroid, xr, 0.5) } else { comb(centroid, worst.0, 0.5) };
            let fc = f(xc);
            if fc < worst.1.min(fr) {
                s[2] = (xc, fc);
            } else {
                for k in 1..3 {
                    let p = comb(s[0].0, s[k].0, 0.5);
                    s[k] = (p, f(p));
                }
            }
        }
    }
    s.sort_by(|a, b| a.1.total_cmp(&b.1));
    s[0].0
}

/// Fibonacci lattice of `n` points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let phi = golden * i as f64;
            vec![r * phi.cos(), y, r * phi.sin()]
        })
        .collect()
}

fn tangent_basis(nu: &[f64]) -> ([f64; 3], [f64; 3]) {
    let k = (0..3).min_by(|&i, &j| nu[i].abs().total_cmp(&nu[j].abs())).unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let d: f64 = (0..3).map(|i| e[i] * nu[i]).sum();
    let mut t1 = [e[0] - d * nu[0], e[1] - d * nu[1], e[2] - d * nu[2]];
    let n1 = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1.iter_mut().for_each(|x| *x /= n1);
    let t2 = [nu[1] * t1[2] - nu[2] * t1[1], nu[2] * t1[0] - nu[0] * t1[2], nu[0] * t1[1] - nu[1] * t1[0]];
    (t1, t2)
}

fn chart(nu: &[f64], t1: &[f64; 3], t2: &[f64; 3], p: [f64; 2]) -> Vec<f64> {
    let v: Vec<f64> = (0..3).map(|i| nu[i] + p[0] * t1[i] + p[1] * t2[i]).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRange {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub nu_minus: Vec<f64>,
    pub nu_plus: Vec<f64>,
}

/// Extremes of `α̂` over the unit sphere (antipodes identified).
pub fn alpha_range(c: &ElasticityTensor, b: &SymMatrix, exec: Execution) -> Result<AlphaRange> {
    if b.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), found: b.dim() });
    }
    if b.norm() == 0.0 {
        return Err(Error::InvalidArgument("b must be nonzero".into()));
    }
    let a = |nu: &[f64]| alpha_hat(c, b, nu).expect("unit direction");
    match c.dim() {
        1 => {
            let v = a(&[1.0]);
            Ok(AlphaRange { alpha_minus: v, alpha_plus: v, nu_minus: vec![1.0], nu_plus: vec![1.0] })
        }
        2 => {
            let h = std::f64::consts::PI / ANGLE_SAMPLES as f64;
            let vals = map_indexed(exec, ANGLE_SAMPLES, |i| a(&angle_dir(i as f64 * h)));
            let refine = |i: usize, sign: f64| -> (f64, Vec<f64>) {
                let th0 = i as f64 * h;
                let th = golden_min(&|t: f64| sign * a(&angle_dir(t)), th0 - h, th0 + h, 1e-12);
                let th = polish_angle(c, b, th).unwrap_or(th);
                let (v_ref, v_grid) = (a(&angle_dir(th)), vals[i]);
                if sign * v_ref <= sign * v_grid + 1e-14 * v_grid.abs().max(1.0) {
                    (v_ref, angle_dir(th))
                } else {
                    (v_grid, angle_dir(th0))
                }
            };
            let (am, nm) = refine(argmin_by_key(&vals).unwrap(), 1.0);
            let (ap, np) = refine(argmax_by_key(&vals).unwrap(), -1.0);
            Ok(AlphaRange { alpha_minus: am, alpha_plus: ap.max(am), nu_minus: nm, nu_plus: np })
        }
        3 => {
            let dirs = fibonacci_sphere(SPHERE_SAMPLES);
            let vals = map_slice_dirs(exec, &dirs, &a);
            let refine = |i: usize, sign: f64| -> (f64, Vec<f64>) {
                let nu0 = &dirs[i];
                let (t1, t2) = tangent_basis(nu0);
                let p = nelder_mead_2d(&|p| sign * a(&chart(nu0, &t1, &t2, p)), [0.0, 0.0], 0.05, 2000);
                let p = polish_sphere(c, b, nu0, &t1, &t2, p);
                let nu = chart(nu0, &t1, &t2, p);
                let v = a(&nu);
                if sign * v <= sign * vals[i] + 1e-14 * vals[i].abs().max(1.0) {
                    (v, nu)
                } else {
                    (vals[i], nu0.clone())
                }
            };
            let (am, nm) = refine(argmin_by_key(&vals).unwrap(), 1.0);
            let (ap, np) = refine(argmax_by_key(&vals).unwrap(), -1.0);
            Ok(AlphaRange { alpha_minus: am, alpha_plus: ap.max(am), nu_minus: nm, nu_plus: np })
        }
        d => Err(Error::UnsupportedDim(d)),
    }
}

fn map_slice_dirs(exec: Execution, dirs: &[Vec<f64>], a: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Vec<f64> {
    crate::exec::map_slice(exec, dirs, |d| a(d))
}

/// `α̂` sampled at `n` angles in `[0, π)` (2D only).
pub fn alpha_sweep_2d(c: &ElasticityTensor, b: &SymMatrix, n: usize, exec: Execution) -> Result<Vec<(f64, f64)>> {
    if c.dim() != 2 {
        return Err(Error::UnsupportedDim(c.dim()));
    }
    map_indexed(exec, n, |i| {
        let th = std::f64::consts::PI * i as f64 / n as f64;
        alpha_hat(c, b, &angle_dir(th)).map(|v| (th, v))
    })
    .into_iter()
    .collect()
}

/// Relaxation record of an equal-height two-well set with wells `±b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoWellRelaxation {
    pub c: ElasticityTensor,
    pub b: SymMatrix,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub nu_minus: Vec<f64>,
    pub nu_plus: Vec<f64>,
    pub c_hat_minus: Vec<f64>,
    /// `Cb·b`.
    pub cbb: f64,
}

impl TwoWellRelaxation {
    pub fn new(c: ElasticityTensor, b: SymMatrix, exec: Execution) -> Result<Self> {
        let r = alpha_range(&c, &b, exec)?;
        let c_hat_minus = c_hat(&c, &b, &r.nu_minus)?;
        let cbb = c.energy(&b);
        Ok(TwoWellRelaxation {
            c,
            b,
            alpha_minus: r.alpha_minus,
            alpha_plus: r.alpha_plus,
            nu_minus: r.nu_minus,
            nu_plus: r.nu_plus,
            c_hat_minus,
            cbb,
        })
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    /// `σ̂ = C(ĉ(ν−)⊙ν− − b)`.
    pub fn sigma_hat(&self) -> SymMatrix {
        connection_stress(&self.c, &self.b, &self.nu_minus, &self.c_hat_minus)
    }

    /// `|σ̂ν−| + |σ̂ĉ|`, zero at an extremal direction.
    pub fn extremal_residual(&self) -> f64 {
        let s = self.sigma_hat();
        let n2 = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        n2(s.mul_vec(&self.nu_minus)) + n2(s.mul_vec(&self.c_hat_minus))
    }

    /// Wells are compatible when `α−` vanishes.
    pub fn is_compatible(&self) -> bool {
        self.alpha_minus < 1e-10
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id2() -> ElasticityTensor {
        ElasticityTensor::identity(2)
    }

    #[test]
    fn zero_b_gives_zero_c_hat() {
        assert_eq!(c_hat(&id2(), &SymMatrix::zeros(2), &[0.6, 0.8]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn c_hat_hand_example() {
        let b = SymMatrix::diag(&[1.0, 2.0]).unwrap();
        let ch = c_hat(&id2(), &b, &[1.0, 0.0]).unwrap();
        assert!((ch[0] - 1.0).abs() < 1e-14 && ch[1].abs() < 1e-14);
        let s = connection_stress(&id2(), &b, &[1.0, 0.0], &ch);
        assert!((s.packed()[0]).abs() < 1e-14 && (s.packed()[1] + 2.0).abs() < 1e-14 && s.packed()[2].abs() < 1e-14);
        assert!((alpha_hat(&id2(), &b, &[1.0, 0.0]).unwrap() - 4.0).abs() < 1e-13);
        assert!((alpha_hat(&id2(), &b, &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn c_hat_residual_is_small() {
        let c = ElasticityTensor::isotropic(3, 1.3, 0.7).unwrap();
        let b = SymMatrix::from_packed(3, &[0.3, -0.2, 0.5, 0.1, 0.4, -0.3]).unwrap();
        let nu = [0.48, 0.6, 0.64];
        let ch = c_hat(&c, &b, &nu).unwrap();
        let r = connection_stress(&c, &b, &nu, &ch).mul_vec(&nu);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn alpha_range_examples() {
        let r = alpha_range(&id2(), &SymMatrix::diag(&[1.0, 2.0]).unwrap(), Execution::Parallel).unwrap();
        assert!((r.alpha_minus - 1.0).abs() < 1e-8, "{r:?}");
        assert!((r.alpha_plus - 4.0).abs() < 1e-6, "{r:?}");
        let r = alpha_range(&id2(), &SymMatrix::diag(&[1.0, -1.0]).unwrap(), Execution::Parallel).unwrap();
        assert!(r.alpha_minus <= 1e-10, "{r:?}");
        let r = alpha_range(&id2(), &SymMatrix::diag(&[1.0, 1.0]).unwrap(), Execution::Parallel).unwrap();
        assert!((r.alpha_minus - 1.0).abs() < 1e-8 && (r.alpha_plus - 1.0).abs() < 1e-8, "{r:?}");
        assert!(alpha_range(&id2(), &SymMatrix::zeros(2), Execution::Parallel).is_err());
    }

    #[test]
    fn extremal_certificate_holds_at_minimum() {
        let rx = TwoWellRelaxation::new(id2(), SymMatrix::diag(&[1.0, 2.0]).unwrap(), Execution::Parallel).unwrap();
        assert!(rx.extremal_residual() < 1e-8);
        assert!(rx.alpha_minus < rx.cbb);
        let rx = TwoWellRelaxation::new(
            ElasticityTensor::isotropic(3, 1.0, 1.0).unwrap(),
            SymMatrix::diag(&[1.0, 2.0, 3.0]).unwrap(),
            Execution::Parallel,
        )
        .unwrap();
        assert!(rx.extremal_residual() < 1e-8, "{}", rx.extremal_residual());
        assert!(rx.alpha_minus <= rx.alpha_plus && rx.alpha_minus < rx.cbb);
    }

    #[test]
    fn policies_agree() {
        let c = ElasticityTensor::isotropic(3, 0.5, 1.0).unwrap();
        let b = SymMatrix::diag(&[1.0, -0.5, 2.0]).unwrap();
        assert_eq!(alpha_range(&c, &b, Execution::Sequential).unwrap(), alpha_range(&c, &b, Execution::Parallel).unwrap());
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let p = nelder_mead_2d(&|p| (p[0] - 0.3).powi(2) + 2.0 * (p[1] + 0.1).powi(2), [0.0, 0.0], 0.1, 500);
        assert!((p[0] - 0.3).abs() < 1e-6 && (p[1] + 0.1).abs() < 1e-6);
    }
}
