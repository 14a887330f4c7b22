//! Alternating minimization of the distance between the constraint set and
//! a material data set.
//!
//! Each iteration assigns to every integration point its nearest data state
//! and then projects the assigned field back onto the constraint set. Both
//! half-steps minimize `Σ w d²(z, y)` in one block, so the recorded distance
//! never increases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::sampling::SampleSource;
use crate::data::{nearest_field, sample, LocalDataSet, MaterialData, PointCloudDataSet, SamplingSpec};
use crate::error::{Error, Result};
use crate::exec::{argmin_by_key, map_indexed, Execution};
use crate::fem::{DiscreteConstraintSpace, Residuals};
use crate::phase::{field_sq_distance, field_sq_norm, LocalState, StateField};
use crate::tensor::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Classical,
    Zero,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop when the relative decrease of d² falls below this.
    pub tol: f64,
    /// Stop when d² ≤ floor · max(1, ‖z‖²).
    pub d2_floor: f64,
    pub init: Init,
    pub seed: u64,
    /// Number of seeded starts for [`solve_multistart`].
    pub starts: usize,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 500,
            tol: 1e-12,
            d2_floor: 1e-24,
            init: Init::Classical,
            seed: 0,
            starts: 8,
            execution: Execution::Parallel,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.d2_floor >= 0.0) {
            return Err(Error::InvalidArgument("d2_floor must be nonnegative".into()));
        }
        if self.starts == 0 {
            return Err(Error::InvalidArgument("starts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AssignmentRepeated,
    DistanceStalled,
    DistanceFloor,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// Constraint-set field.
    pub z: StateField,
    /// Nearest data states of `z`.
    pub y: StateField,
    pub d2: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub stop: StopReason,
    pub assignment: Vec<usize>,
    pub residuals: Residuals,
}

fn check_dims<D: LocalDataSet + ?Sized>(space: &DiscreteConstraintSpace, set: &D) -> Result<()> {
    if set.dim() != space.stiffness().dim() {
        return Err(Error::DimensionMismatch { expected: space.stiffness().dim(), found: set.dim() });
    }
    Ok(())
}

fn random_field(space: &DiscreteConstraintSpace, scale: f64, seed: u64) -> StateField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = space.stiffness().dim();
    let m = space.stiffness().size();
    let draw = |rng: &mut ChaCha8Rng| -> SymMatrix {
        let v: Vec<f64> = (0..m).map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect();
        SymMatrix::from_packed(dim, &v).expect("packed length")
    };
    let states = (0..space.n_elements()).map(|_| LocalState { eps: draw(&mut rng), sig: draw(&mut rng) }).collect();
    StateField::new(states, space.weights().to_vec(), space.stiffness().clone()).expect("space weights are valid")
}

/// Typical state magnitude used to scale random starts.
fn state_scale(space: &DiscreteConstraintSpace) -> Result<f64> {
    let z = space.solve_classical()?;
    let vol: f64 = space.weights().iter().sum();
    Ok((field_sq_norm(&z) / vol).sqrt().max(1.0))
}

fn initial_field<D: LocalDataSet + ?Sized>(space: &DiscreteConstraintSpace, set: &D, cfg: &SolverConfig) -> Result<StateField> {
    match cfg.init {
        Init::Classical => space.solve_classical(),
        Init::Zero => space.project_onto_e(&space.zero_field()),
        Init::Random => {
            let r = random_field(space, state_scale(space)?, cfg.seed);
            let near = nearest_field(&r, set, cfg.execution)?;
            let y = r.with_states(near.iter().map(|n| n.state).collect())?;
            space.project_onto_e(&y)
        }
    }
}

/// Alternating nearest-data assignment and projection onto the constraint set.
pub fn solve_data_driven<D: LocalDataSet + ?Sized>(
    space: &DiscreteConstraintSpace,
    set: &D,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    check_dims(space, set)?;
    let mut z = initial_field(space, set, cfg)?;
    let mut trace = Vec::new();
    let mut prev_ids: Option<Vec<usize>> = None;
    let finite = set.is_finite_set();
    loop {
        let near = nearest_field(&z, set, cfg.execution)?;
        let d2: f64 = near.iter().zip(z.weights()).map(|(n, w)| w * n.d2).sum();
        let ids: Vec<usize> = near.iter().map(|n| n.id).collect();
        let y = z.with_states(near.iter().map(|n| n.state).collect())?;
        trace.push(d2);
        let k = trace.len();
        let stop = if finite && prev_ids.as_ref() == Some(&ids) {
            Some(StopReason::AssignmentRepeated)
        } else if d2 <= cfg.d2_floor * field_sq_norm(&z).max(1.0) {
            Some(StopReason::DistanceFloor)
        } else if k >= 2 && trace[k - 2] - d2 <= cfg.tol * trace[k - 2] {
            Some(StopReason::DistanceStalled)
        } else if k >= cfg.max_iters {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        if let Some(stop) = stop {
            let residuals = space.residuals(&z)?;
            return Ok(SolverResult {
                z,
                y,
                d2,
                iterations: k,
                trace,
                converged: stop != StopReason::MaxIterations,
                stop,
                assignment: ids,
                residuals,
            });
        }
        prev_ids = Some(ids);
        z = space.project_onto_e(&y)?;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartResult {
    pub best: SolverResult,
    pub best_seed: u64,
    /// `(seed, d2, converged)` for every start, in seed order.
    pub runs: Vec<(u64, f64, bool)>,
}

/// `cfg.starts` seeded random starts; the smallest d² wins, earlier seeds on ties.
pub fn solve_multistart<D: LocalDataSet + ?Sized>(
    space: &DiscreteConstraintSpace,
    set: &D,
    cfg: &SolverConfig,
) -> Result<MultiStartResult> {
    cfg.validate()?;
    let results: Vec<Result<SolverResult>> = map_indexed(cfg.execution, cfg.starts, |i| {
        let c = SolverConfig {
            init: Init::Random,
            seed: cfg.seed.wrapping_add(i as u64),
            execution: Execution::Sequential,
            ..cfg.clone()
        };
        solve_data_driven(space, set, &c)
    });
    let results: Vec<SolverResult> = results.into_iter().collect::<Result<_>>()?;
    let keys: Vec<f64> = results.iter().map(|r| r.d2).collect();
    let i = argmin_by_key(&keys).expect("at least one start");
    let runs = results
        .iter()
        .enumerate()
        .map(|(k, r)| (cfg.seed.wrapping_add(k as u64), r.d2, r.converged))
        .collect();
    Ok(MultiStartResult { best_seed: cfg.seed.wrapping_add(i as u64), best: results.into_iter().nth(i).unwrap(), runs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    ClosedForm,
    DataDriven,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub d2: f64,
    pub z: StateField,
    pub method: DistanceMethod,
}

/// Minimum over the constraint set of the distance to `set`. The exact
/// linear-elastic graph is handled by one classical solve and the closed
/// form; everything else runs the data-driven solver from the configured
/// start and from `cfg.starts` random starts, keeping the best.
pub fn distance_to_dataset(space: &DiscreteConstraintSpace, set: &MaterialData, cfg: &SolverConfig) -> Result<DistanceResult> {
    check_dims(space, set)?;
    if set.is_linear_graph_for(space.stiffness()) {
        let z = space.solve_classical()?;
        let MaterialData::Graph(g) = set else { unreachable!() };
        let d2 = z.states().iter().zip(z.weights()).map(|(s, w)| w * g.unrestricted_sq_distance(s)).sum();
        return Ok(DistanceResult { d2, z, method: DistanceMethod::ClosedForm });
    }
    let first = solve_data_driven(space, set, cfg)?;
    let best = if cfg.starts > 1 {
        let m = solve_multistart(space, set, cfg)?;
        if m.best.d2 < first.d2 {
            m.best
        } else {
            first
        }
    } else {
        first
    };
    Ok(DistanceResult { d2: best.d2, z: best.z, method: DistanceMethod::DataDriven })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub rho: f64,
    pub t: f64,
    pub d2: f64,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log(error) against log(rho).
    pub exponent: Option<f64>,
    /// Every solver trace, in row order.
    pub traces: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        crate::io::csv_string(&["rho", "t", "d2", "error"], self.rows.iter().map(|r| vec![r.rho, r.t, r.d2, r.error]))
    }
}

/// Slope of the least-squares line through `(ln x, ln y)` over positive pairs.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Reference solution of the limit problem for an analytic set.
pub fn limit_solution(space: &DiscreteConstraintSpace, exact: &MaterialData, cfg: &SolverConfig) -> Result<StateField> {
    if exact.is_linear_graph_for(space.stiffness()) {
        return space.solve_classical();
    }
    Ok(solve_data_driven(space, exact, cfg)?.z)
}

/// One data-driven solve per data set, each compared against `limit`.
pub fn convergence_rows(
    space: &DiscreteConstraintSpace,
    limit: &StateField,
    sets: &[(f64, f64, MaterialData)],
    cfg: &SolverConfig,
) -> Result<ConvergenceTable> {
    let mut rows = Vec::with_capacity(sets.len());
    let mut traces = Vec::with_capacity(sets.len());
    for (rho, t, set) in sets {
        let r = solve_data_driven(space, set, cfg)?;
        let error = field_sq_distance(&r.z, limit)?.sqrt();
        rows.push(ConvergenceRow { rho: *rho, t: *t, d2: r.d2, error, iterations: r.iterations, converged: r.converged });
        traces.push(r.trace);
    }
    let rhos: Vec<f64> = rows.iter().map(|r| r.rho).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(ConvergenceTable { exponent: log_log_slope(&rhos, &errs), rows, traces })
}

fn sample_material(exact: &MaterialData, spec: &SamplingSpec) -> Result<PointCloudDataSet> {
    let src: &dyn SampleSource = match exact {
        MaterialData::Graph(g) => g,
        MaterialData::TwoWell(t) => t,
        _ => return Err(Error::InvalidArgument("only graph and two-well data sets can be sampled".into())),
    };
    sample(src, spec)
}

/// Sample `exact` once per spec, solve, and compare with the limit solution.
pub fn convergence_study(
    space: &DiscreteConstraintSpace,
    exact: &MaterialData,
    specs: &[SamplingSpec],
    cfg: &SolverConfig,
) -> Result<ConvergenceTable> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("convergence study needs at least one sampling spec".into()));
    }
    for w in specs.windows(2) {
        if w[1].rho > w[0].rho || w[1].t > w[0].t {
            return Err(Error::InvalidArgument("sampling specs must be ordered by nonincreasing rho and t".into()));
        }
    }
    let limit = limit_solution(space, exact, cfg)?;
    let sets: Vec<(f64, f64, MaterialData)> = specs
        .iter()
        .map(|s| Ok((s.rho, s.t, MaterialData::Cloud(sample_material(exact, s)?))))
        .collect::<Result<_>>()?;
    convergence_rows(space, &limit, &sets, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub c: f64,
    pub b: f64,
    /// Largest `c(‖y‖+‖z‖) − b − ‖y−z‖` on the validation pairs; ≤ 0 means no
    /// violation.
    pub max_violation: f64,
    pub train_pairs: usize,
    pub validation_pairs: usize,
}

fn random_pair<D: LocalDataSet + ?Sized>(
    space: &DiscreteConstraintSpace,
    set: &D,
    scale: f64,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let metric = space.stiffness();
    let ry = random_field(space, scale, seed.wrapping_mul(2).wrapping_add(1));
    let y_states: Vec<LocalState> = ry.states().iter().map(|s| set.nearest(s, metric).map(|n| n.state)).collect::<Result<_>>()?;
    let y = ry.with_states(y_states)?;
    let z = space.project_onto_e(&random_field(space, scale, seed.wrapping_mul(2)))?;
    let gap = field_sq_distance(&y, &z)?.sqrt();
    Ok((gap, field_sq_norm(&y).sqrt(), field_sq_norm(&z).sqrt()))
}

/// Fit `‖y−z‖ ≥ c(‖y‖+‖z‖) − b` on random pairs at unit scale and check it on
/// fresh pairs at scales up to `max_scale`.
pub fn transversality_diagnostic<D: LocalDataSet + ?Sized>(
    space: &DiscreteConstraintSpace,
    set: &D,
    pairs: usize,
    max_scale: f64,
    seed: u64,
) -> Result<TransversalityReport> {
    check_dims(space, set)?;
    if pairs < 2 || !(max_scale >= 1.0) {
        return Err(Error::InvalidArgument("transversality needs ≥ 2 pairs and max_scale ≥ 1".into()));
    }
    let mut train = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let scale = 1.0 + i as f64 / pairs as f64;
        train.push(random_pair(space, set, scale, seed.wrapping_add(i as u64))?);
    }
    let c = 0.5 * train.iter().map(|(g, ny, nz)| g / (ny + nz).max(f64::MIN_POSITIVE)).fold(f64::INFINITY, f64::min);
    let b = train.iter().map(|(g, ny, nz)| c * (ny + nz) - g).fold(0.0, f64::max);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..pairs {
        let scale = max_scale.powf(i as f64 / (pairs - 1) as f64);
        let (g, ny, nz) = random_pair(space, set, scale, seed.wrapping_add((pairs + i) as u64))?;
        worst = worst.max(c * (ny + nz) - b - g);
    }
    Ok(TransversalityReport { c, b, max_violation: worst, train_pairs: pairs, validation_pairs: pairs })
}
