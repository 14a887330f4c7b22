//! The one-dimensional two-well problem reduced to two phases with
//! constant strain each and a common stress.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::acoustic::golden_section;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSolution {
    pub d2_min: f64,
    /// Volume fraction of the phase on the `σ = Cε − σ₀`, `ε ≥ 0` branch.
    pub lambda_a: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub sigma_bar: f64,
}

fn check(c: f64, sigma0: f64, eps_bar: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() || !(sigma0 >= 0.0) || !sigma0.is_finite() || !eps_bar.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid reduced problem (C = {c}, sigma0 = {sigma0}, eps = {eps_bar})")));
    }
    Ok(())
}

/// Solve the `k × k` leading block of `a x = b` by elimination with partial
/// pivoting.
fn solve_small(mut a: [[f64; 3]; 3], mut b: [f64; 3], k: usize) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..k {
        let p = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Minimum at fixed `λ`. Both phases share the strain deviation from their
/// nearest branch points `x_A ≥ 0`, `x_B ≤ 0`, which leaves a quadratic in
/// `(x_A, x_B, σ̄)`.
fn inner(c: f64, s0: f64, eps_bar: f64, lambda: f64, fixed_sigma: Option<f64>) -> ReducedSolution {
    let (la, lb) = (lambda, 1.0 - lambda);
    let terms: [(f64, [f64; 3], f64); 3] = [
        (0.5 * c, [la, lb, 0.0], -eps_bar),
        (la * 0.5 / c, [-c, 0.0, 1.0], s0),
        (lb * 0.5 / c, [0.0, -c, 1.0], -s0),
    ];
    let cost = |v: &[f64; 3]| -> f64 { terms.iter().map(|(w, a, r)| w * (a[0] * v[0] + a[1] * v[1] + a[2] * v[2] + r).powi(2)).sum() };
    let mut h = [[0.0; 3]; 3];
    let mut g = [0.0; 3];
    for (w, a, r) in &terms {
        for i in 0..3 {
            g[i] += 2.0 * w * r * a[i];
            for j in 0..3 {
                h[i][j] += 2.0 * w * a[i] * a[j];
            }
        }
    }
    let mut best: Option<(f64, [f64; 3])> = None;
    for mask in 0..4u8 {
        let mut v = [0.0, 0.0, fixed_sigma.unwrap_or(0.0)];
        let free: Vec<usize> =
            (0..3).filter(|&i| !(i == 0 && mask & 1 != 0 || i == 1 && mask & 2 != 0 || i == 2 && fixed_sigma.is_some())).collect();
        let k = free.len();
        if k > 0 {
            let mut a = [[0.0; 3]; 3];
            let mut rhs = [0.0; 3];
            for (p, &i) in free.iter().enumerate() {
                rhs[p] = -g[i] - (0..3).filter(|j| !free.contains(j)).map(|j| h[i][j] * v[j]).sum::<f64>();
                for (q, &j) in free.iter().enumerate() {
                    a[p][q] = h[i][j];
                }
            }
            let Some(x) = solve_small(a, rhs, k) else { continue };
            for (p, &i) in free.iter().enumerate() {
                v[i] = x[p];
            }
        }
        if !v.iter().all(|x| x.is_finite()) || v[0] < -1e-12 || v[1] > 1e-12 {
            continue;
        }
        v[0] = v[0].max(0.0);
        v[1] = v[1].min(0.0);
        let f = cost(&v);
        if best.as_ref().map_or(true, |(b, _)| f < *b) {
            best = Some((f, v));
        }
    }
    let (f, v) = best.expect("the all-bounds-active system is solvable");
    let t = eps_bar - la * v[0] - lb * v[1];
    ReducedSolution { d2_min: f.max(0.0), lambda_a: lambda, eps_a: v[0] + t, eps_b: v[1] + t, sigma_bar: v[2] }
}

fn better(a: ReducedSolution, b: ReducedSolution) -> ReducedSolution {
    if b.d2_min < a.d2_min {
        b
    } else {
        a
    }
}

fn solve(c: f64, s0: f64, eps_bar: f64, fixed_sigma: Option<f64>) -> ReducedSolution {
    let f = |l: f64| inner(c, s0, eps_bar, l, fixed_sigma);
    let ends = better(f(0.0), f(1.0));
    match fixed_sigma {
        // Convex in λ at fixed stress.
        Some(_) => better(ends, f(golden_section(|l| f(l).d2_min, 0.0, 1.0, 1e-13))),
        None => {
            let n = 200;
            let grid: Vec<ReducedSolution> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
            let i = (0..=n).fold(0, |b, i| if grid[i].d2_min < grid[b].d2_min { i } else { b });
            let lo = i.saturating_sub(1) as f64 / n as f64;
            let hi = (i + 1).min(n) as f64 / n as f64;
            better(better(ends, grid[i]), f(golden_section(|l| f(l).d2_min, lo, hi, 1e-13)))
        }
    }
}

/// Global minimum of the two-phase problem with mean strain `eps_bar`.
pub fn reduced_1d_two_well_solve(c: f64, sigma0: f64, eps_bar: f64) -> Result<ReducedSolution> {
    check(c, sigma0, eps_bar)?;
    Ok(solve(c, sigma0, eps_bar, None))
}

/// Same with the common stress held at `sigma_bar`.
pub fn reduced_1d_two_well_solve_fixed_stress(c: f64, sigma0: f64, eps_bar: f64, sigma_bar: f64) -> Result<ReducedSolution> {
    check(c, sigma0, eps_bar)?;
    if !sigma_bar.is_finite() {
        return Err(Error::InvalidArgument("sigma_bar must be finite".into()));
    }
    Ok(solve(c, sigma0, eps_bar, Some(sigma_bar)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FlagDataSet1D, FlagMembership};

    #[test]
    fn outer_branch_example() {
        let r = reduced_1d_two_well_solve(1.0, 1.0, 5.0).unwrap();
        assert!(r.d2_min < 1e-12);
        assert!((r.sigma_bar - 4.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn every_mean_strain_is_attainable() {
        for e in [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0] {
            assert!(reduced_1d_two_well_solve(1.0, 1.0, e).unwrap().d2_min < 1e-12, "{e}");
        }
    }

    #[test]
    fn fixed_stress_outside_flag() {
        let r = reduced_1d_two_well_solve_fixed_stress(1.0, 1.0, 0.0, 1.5).unwrap();
        assert!(r.d2_min >= 0.05, "{r:?}");
    }

    #[test]
    fn zero_set_matches_flag_membership() {
        let flag = FlagDataSet1D::new(1.0, 1.0).unwrap();
        for i in 0..=100 {
            for j in 0..=100 {
                let e = -4.0 + 0.08 * i as f64;
                let s = -4.0 + 0.08 * j as f64;
                let zero = reduced_1d_two_well_solve_fixed_stress(1.0, 1.0, e, s).unwrap().d2_min < 1e-12;
                let inside = flag.classify(e, s, 1e-9) != FlagMembership::Outside;
                assert_eq!(zero, inside, "({e}, {s})");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(reduced_1d_two_well_solve(0.0, 1.0, 0.0).is_err());
        assert!(reduced_1d_two_well_solve(1.0, -1.0, 0.0).is_err());
    }
}
