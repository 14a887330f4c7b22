//! The acceptance suite, shared by the `acceptance` test target and
//! `dde selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{AffineGraphBranch, FlagDataSet1D, FlagMembership, MaterialData, SamplingSpec};
use crate::error::Result;
use crate::exec::Execution;
use crate::fem::{assemble, markers, BoundaryData, DiscreteConstraintSpace, Mesh};
use crate::phase::{field_sq_distance, field_sq_norm, LocalState};
use crate::relax::{
    alpha_range, generate_laminate_field, membership_flag_1d, rank_one_decompose, reduced_1d_two_well_solve,
    reduced_1d_two_well_solve_fixed_stress, separating_certificate, RelaxedMembership, TwoWellRelaxation,
};
use crate::solver::{convergence_study, solve_data_driven, solve_multistart, SolverConfig};
use crate::tensor::{packed_len, ElasticityTensor, SymMatrix};

pub const CLASSICAL_REL_TOL: f64 = 1e-10;
pub const CLASSICAL_D2_TOL: f64 = 1e-18;
pub const CONVERGENCE_MIN_EXPONENT: f64 = 0.8;
pub const PLATEAU_BAND: (f64, f64) = (0.2, 5.0);
pub const REDUCED_ZERO_TOL: f64 = 1e-12;
pub const REDUCED_OUTSIDE_MIN: f64 = 0.05;
pub const FLAG_TOL: f64 = 1e-9;
pub const ALPHA_MINUS_TOL: f64 = 1e-8;
pub const ALPHA_PLUS_TOL: f64 = 1e-6;
pub const COMPATIBLE_TOL: f64 = 1e-10;
pub const DECOMPOSITION_TOL: f64 = 1e-8;
pub const MEMBERSHIP_TOL: f64 = 1e-8;
pub const CERTIFICATE_TOL: f64 = 1e-8;
pub const LAMINATE_MIN_FACTOR: f64 = 1.6;
pub const HELMHOLTZ_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-14;
pub const MULTISTART_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!("[{}] criterion {} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

fn outcome(id: usize, name: &'static str, r: Result<(bool, String)>) -> CriterionOutcome {
    match r {
        Ok((passed, detail)) => CriterionOutcome { id, name, passed, detail },
        Err(e) => CriterionOutcome { id, name, passed: false, detail: format!("error: {e}") },
    }
}

fn bar(n: usize, c: f64, eps_bar: f64, f: f64) -> Result<DiscreteConstraintSpace> {
    let mesh = Mesh::bar1d(n, 1.0)?;
    let mut bc = BoundaryData::new().fix(&mesh, markers::LEFT, 0, 0.0)?.fix(&mesh, markers::RIGHT, 0, eps_bar)?;
    if f != 0.0 {
        bc = bc.uniform_body_force(&mesh, &[f])?;
    }
    assemble(&mesh, &ElasticityTensor::scalar(c)?, &bc)
}

fn rect(n: usize) -> Result<DiscreteConstraintSpace> {
    let mesh = Mesh::rect2d(n, n, 1.0, 1.0)?;
    let bc = BoundaryData::new().clamp(&mesh, markers::LEFT, &[0.0, 0.0])?.traction(&mesh, markers::RIGHT, &[1.0, 0.0])?;
    assemble(&mesh, &ElasticityTensor::identity(2), &bc)
}

fn graph(space: &DiscreteConstraintSpace) -> MaterialData {
    MaterialData::Graph(AffineGraphBranch::linear(space.stiffness().clone()))
}

fn state_norm(z: &LocalState) -> f64 {
    (z.eps.norm().powi(2) + z.sig.norm().powi(2)).sqrt()
}

fn random_sym(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SymMatrix {
    let p: Vec<f64> = (0..packed_len(dim)).map(|_| rng.random_range(-scale..scale)).collect();
    SymMatrix::from_packed(dim, &p).expect("packed length")
}

/// Voigt matrix `AAᵀ + I` with entries of `A` uniform in `[-1, 1]`.
pub fn random_spd(rng: &mut ChaCha8Rng, dim: usize) -> ElasticityTensor {
    let m = packed_len(dim);
    let a: Vec<f64> = (0..m * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| (0..m).map(|k| a[i * m + k] * a[j * m + k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    ElasticityTensor::from_voigt(dim, &rows).expect("SPD by construction")
}

/// Stress with `σ·b` moved to `target`.
fn stress_with_sb(rng: &mut ChaCha8Rng, b: &SymMatrix, target: f64, scale: f64) -> SymMatrix {
    let s = random_sym(rng, b.dim(), scale);
    s + b.scale((target - s.dot(b)) / b.dot(b))
}

/// Random point of the relaxed interior: `|μ| < 1`, inside the band.
fn random_interior(rng: &mut ChaCha8Rng, rx: &TwoWellRelaxation) -> LocalState {
    let mu = rng.random_range(-0.95..0.95);
    let half = rx.cbb - rx.alpha_minus;
    let sb = -rx.alpha_minus * mu + rng.random_range(-0.95..0.95) * half;
    rx.state_at(stress_with_sb(rng, &rx.b, sb, 1.0), mu)
}

/// Random point of the relaxed set, split between the two wells and the
/// interior.
fn random_relaxed(rng: &mut ChaCha8Rng, rx: &TwoWellRelaxation) -> LocalState {
    let k = rx.cbb;
    let t = rng.random_range(0.0..4.0 * k);
    match rng.random_range(0..3) {
        0 => rx.state_at(stress_with_sb(rng, &rx.b, t - k, 1.0), 1.0),
        1 => rx.state_at(stress_with_sb(rng, &rx.b, k - t, 1.0), -1.0),
        _ => random_interior(rng, rx),
    }
}

/// Criterion 1: exact graph data reproduces the classical solution.
pub fn classical_recovery(traces: &mut Vec<Vec<f64>>) -> CriterionOutcome {
    outcome(1, "classical recovery", (|| {
        let mut ok = true;
        let mut parts = Vec::new();
        for (label, space) in [("bar", bar(20, 2.0, 0.5, 0.0)?), ("rect", rect(8)?)] {
            let r = solve_data_driven(&space, &graph(&space), &SolverConfig::default())?;
            let classical = space.solve_classical()?;
            let rel = field_sq_distance(&r.z, &classical)?.sqrt() / field_sq_norm(&classical).sqrt();
            ok &= rel <= CLASSICAL_REL_TOL && r.d2 < CLASSICAL_D2_TOL;
            parts.push(format!("{label}: rel {rel:.2e}, d2 {:.2e}", r.d2));
            traces.push(r.trace);
        }
        Ok((ok, parts.join("; ")))
    })())
}

/// Criterion 2: sampled graph clouds converge, and plateau at fixed `t`.
pub fn sampling_convergence(traces: &mut Vec<Vec<f64>>) -> CriterionOutcome {
    outcome(2, "sampling convergence", (|| {
        let space = bar(20, 2.0, 0.5, 1.0)?;
        let set = graph(&space);
        let bounds = vec![[-1.0, 1.5]];
        let specs: Vec<SamplingSpec> =
            [0.2, 0.1, 0.05, 0.025].iter().map(|&r| SamplingSpec::new(r, 0.0, bounds.clone(), 0)).collect::<Result<_>>()?;
        let table = convergence_study(&space, &set, &specs, &SolverConfig::default())?;
        traces.extend(table.traces.iter().cloned());
        let decreasing = table.rows.windows(2).all(|w| w[1].error < w[0].error);
        let exponent = table.exponent.unwrap_or(f64::NAN);
        let t = 0.05;
        let specs: Vec<SamplingSpec> =
            [0.05, 0.025, 0.0125].iter().map(|&r| SamplingSpec::new(r, t, bounds.clone(), 3)).collect::<Result<_>>()?;
        let plateau = convergence_study(&space, &set, &specs, &SolverConfig::default())?;
        traces.extend(plateau.traces.iter().cloned());
        let last = plateau.rows.last().map_or(f64::NAN, |r| r.error);
        let in_band = last >= PLATEAU_BAND.0 * t && last <= PLATEAU_BAND.1 * t;
        let errs: Vec<String> = table.rows.iter().map(|r| format!("{:.3e}", r.error)).collect();
        Ok((
            decreasing && exponent >= CONVERGENCE_MIN_EXPONENT && in_band,
            format!("errors [{}], exponent {exponent:.3}, plateau error {last:.3e} at t = {t}", errs.join(", ")),
        ))
    })())
}

/// Criterion 3: zero set of the reduced problem equals the flag set.
pub fn flag_relaxation() -> CriterionOutcome {
    outcome(3, "1D flag relaxation", (|| {
        let mut worst: f64 = 0.0;
        for e in [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0] {
            worst = worst.max(reduced_1d_two_well_solve(1.0, 1.0, e)?.d2_min);
        }
        let outside = reduced_1d_two_well_solve_fixed_stress(1.0, 1.0, 0.0, 1.5)?.d2_min;
        let flag = FlagDataSet1D::new(1.0, 1.0)?;
        let mut disagreements = 0;
        for i in 0..=100 {
            for j in 0..=100 {
                let e = -4.0 + 0.08 * i as f64;
                let s = -4.0 + 0.08 * j as f64;
                let zero = reduced_1d_two_well_solve_fixed_stress(1.0, 1.0, e, s)?.d2_min < REDUCED_ZERO_TOL;
                let inside = membership_flag_1d(&flag, e, s, FLAG_TOL) != FlagMembership::Outside;
                disagreements += usize::from(zero != inside);
            }
        }
        Ok((
            worst < REDUCED_ZERO_TOL && outside >= REDUCED_OUTSIDE_MIN && disagreements == 0,
            format!("max d2 over mean strains {worst:.2e}, fixed-stress d2 {outside:.4}, grid disagreements {disagreements}"),
        ))
    })())
}

/// Criterion 4: exact extremes of the incompatibility measure.
pub fn alpha_exactness(exec: Execution) -> CriterionOutcome {
    outcome(4, "alpha extremes", (|| {
        let c = ElasticityTensor::identity(2);
        let r12 = alpha_range(&c, &SymMatrix::diag(&[1.0, 2.0])?, exec)?;
        let r1m = alpha_range(&c, &SymMatrix::diag(&[1.0, -1.0])?, exec)?;
        let r11 = alpha_range(&c, &SymMatrix::diag(&[1.0, 1.0])?, exec)?;
        let ok = (r12.alpha_minus - 1.0).abs() <= ALPHA_MINUS_TOL
            && (r12.alpha_plus - 4.0).abs() <= ALPHA_PLUS_TOL
            && r1m.alpha_minus <= COMPATIBLE_TOL
            && (r11.alpha_minus - 1.0).abs() <= ALPHA_MINUS_TOL
            && (r11.alpha_plus - 1.0).abs() <= ALPHA_MINUS_TOL;
        Ok((
            ok,
            format!(
                "diag(1,2): [{:.10}, {:.8}]; diag(1,-1): {:.2e}; diag(1,1): [{:.10}, {:.10}]",
                r12.alpha_minus, r12.alpha_plus, r1m.alpha_minus, r11.alpha_minus, r11.alpha_plus
            ),
        ))
    })())
}

/// Criterion 5: rank-one splitting of random interior points.
pub fn rank_one_decomposition(exec: Execution, seed: u64) -> CriterionOutcome {
    outcome(5, "rank-one decomposition", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut worst, mut failures) = (0.0f64, 0);
        let mut count = 0;
        for dim in [2, 3] {
            for _ in 0..4 {
                let rx = TwoWellRelaxation::new(random_spd(&mut rng, dim), random_sym(&mut rng, dim, 1.0), exec)?;
                for _ in 0..25 {
                    let z = random_interior(&mut rng, &rx);
                    let d = rank_one_decompose(&rx, &z, MEMBERSHIP_TOL)?;
                    let tol = MEMBERSHIP_TOL * (1.0 + state_norm(&z));
                    worst = worst.max(d.reconstruction_error(&z)).max(d.connection_residual());
                    let inside_lambda = d.lambda > 0.0 && d.lambda < 1.0;
                    let wells = rx.membership(&d.z_plus, tol) == RelaxedMembership::InDlocPlus
                        && rx.membership(&d.z_minus, tol) == RelaxedMembership::InDlocMinus;
                    failures += usize::from(!(inside_lambda && wells));
                    count += 1;
                }
            }
        }
        Ok((
            worst < DECOMPOSITION_TOL && failures == 0,
            format!("{count} points, max residual {worst:.2e}, membership failures {failures}"),
        ))
    })())
}

/// Criterion 6: separating quadratics for points in the strip.
pub fn separating_certificates(exec: Execution, seed: u64) -> CriterionOutcome {
    outcome(6, "separating certificate", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let relaxations = [
            TwoWellRelaxation::new(ElasticityTensor::identity(2), SymMatrix::diag(&[1.0, 2.0])?, exec)?,
            TwoWellRelaxation::new(random_spd(&mut rng, 2), random_sym(&mut rng, 2, 1.0), exec)?,
        ];
        let samples: Vec<Vec<LocalState>> =
            relaxations.iter().map(|rx| (0..5000).map(|_| random_relaxed(&mut rng, rx)).collect()).collect();
        let (mut min_at_point, mut max_on_set) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..50 {
            let (rx, set) = (&relaxations[k % 2], &samples[k % 2]);
            let mu = rng.random_range(-1.0..1.0);
            let gap = rng.random_range(0.05..1.0) * rx.cbb;
            let sb = rx.cbb - rx.alpha_minus - rx.alpha_minus * mu + gap;
            let z0 = rx.state_at(stress_with_sb(&mut rng, &rx.b, sb, 1.0), mu);
            let cert = separating_certificate(rx, &z0)?;
            min_at_point = min_at_point.min(cert.eval(&z0));
            max_on_set = max_on_set.max(set.iter().map(|z| cert.eval(z)).fold(f64::NEG_INFINITY, f64::max));
        }
        Ok((
            min_at_point > 0.0 && max_on_set <= CERTIFICATE_TOL,
            format!("min f at strip points {min_at_point:.3e}, max f on 10000 relaxed samples {max_on_set:.3e}"),
        ))
    })())
}

/// Criterion 7: laminate mean error decays with the number of layers.
pub fn laminate_realizability(exec: Execution) -> CriterionOutcome {
    outcome(7, "laminate realizability", (|| {
        let c = ElasticityTensor::scalar(1.0)?;
        let rx = TwoWellRelaxation::new(c.clone(), SymMatrix::diag(&[1.0])?, exec)?;
        let z = rx.state_at(SymMatrix::diag(&[0.3])?, 0.5);
        let d = rank_one_decompose(&rx, &z, MEMBERSHIP_TOL)?;
        let mesh = Mesh::bar1d(64, 1.0)?;
        let mut errs = Vec::new();
        let mut failures = 0;
        for h in [4, 8, 16] {
            let field = generate_laminate_field(&mesh, &d, h, &c)?;
            failures += field.states.iter().filter(|s| !rx.membership(s, MEMBERSHIP_TOL).is_original()).count();
            errs.push(field.mean_error);
        }
        let factors: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        Ok((
            factors.iter().all(|f| *f >= LAMINATE_MIN_FACTOR) && failures == 0,
            format!(
                "mean errors [{}], factors [{}], membership failures {failures}",
                errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", "),
                factors.iter().map(|f| format!("{f:.2}")).collect::<Vec<_>>().join(", ")
            ),
        ))
    })())
}

/// Criterion 8: discrete Helmholtz orthogonality on both meshes.
pub fn helmholtz_orthogonality(seed: u64) -> CriterionOutcome {
    outcome(8, "Helmholtz orthogonality", (|| {
        let b = bar(20, 2.0, 0.5, 0.0)?.helmholtz_orthogonality_check(50, seed)?;
        let r = rect(8)?.helmholtz_orthogonality_check(50, seed)?;
        Ok((b < HELMHOLTZ_TOL && r < HELMHOLTZ_TOL, format!("bar {b:.2e}, rect {r:.2e}")))
    })())
}

/// Criterion 9: monotone traces across the suite, and agreement of
/// multi-start runs on exact graph data.
pub fn solver_descent(traces: &mut Vec<Vec<f64>>) -> CriterionOutcome {
    outcome(9, "solver descent", (|| {
        let space = bar(20, 2.0, 0.5, 1.0)?;
        let m = solve_multistart(&space, &graph(&space), &SolverConfig { starts: 8, ..Default::default() })?;
        traces.push(m.best.trace.clone());
        let lo = m.runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let hi = m.runs.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let classical = space.solve_classical()?;
        let err = field_sq_distance(&m.best.z, &classical)?.sqrt();
        let bad = traces.iter().filter(|t| !t.windows(2).all(|w| w[1] <= w[0] + TRACE_TOL)).count();
        Ok((
            bad == 0 && m.runs.len() == 8 && hi - lo <= MULTISTART_TOL && err <= MULTISTART_TOL,
            format!("{} traces, {bad} increasing; multistart d2 spread {:.2e}, error {err:.2e}", traces.len(), hi - lo),
        ))
    })())
}

/// Every criterion in order.
pub fn run_all(exec: Execution, seed: u64) -> Vec<CriterionOutcome> {
    let mut traces = Vec::new();
    let mut out = vec![
        classical_recovery(&mut traces),
        sampling_convergence(&mut traces),
        flag_relaxation(),
        alpha_exactness(exec),
        rank_one_decomposition(exec, seed),
        separating_certificates(exec, seed.wrapping_add(1)),
        laminate_realizability(exec),
        helmholtz_orthogonality(seed),
    ];
    out.push(solver_descent(&mut traces));
    out
}
