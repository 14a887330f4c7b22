//! Grid sampling of analytic data sets into point clouds with a controlled
//! covering radius `rho` and a controlled deviation `t` from the exact set.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::LocalState;
use crate::tensor::{is_shear_slot, packed_len, ElasticityTensor, SymMatrix};

use super::cloud::PointCloudDataSet;
use super::graph::AffineGraphBranch;
use super::two_well::TwoWellDataSet;
use super::LocalDataSet;

/// Hard cap on the number of grid nodes per branch.
pub const MAX_GRID_POINTS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub rho: f64,
    pub t: f64,
    /// `[lo, hi]` for every packed strain component.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
}

impl SamplingSpec {
    pub fn new(rho: f64, t: f64, bounds: Vec<[f64; 2]>, seed: u64) -> Result<Self> {
        let s = SamplingSpec { rho, t, bounds, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidArgument(format!("t must be nonnegative, got {}", self.t)));
        }
        for (k, [lo, hi]) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                return Err(Error::DegenerateBox(format!("component {k}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Analytic sets that can be sampled branch by branch.
pub trait SampleSource {
    fn sampling_branches(&self) -> Vec<&AffineGraphBranch>;
    fn sampling_metric(&self) -> &ElasticityTensor;
}

impl SampleSource for AffineGraphBranch {
    fn sampling_branches(&self) -> Vec<&AffineGraphBranch> {
        vec![self]
    }
    fn sampling_metric(&self) -> &ElasticityTensor {
        self.stiffness()
    }
}

impl SampleSource for TwoWellDataSet {
    fn sampling_branches(&self) -> Vec<&AffineGraphBranch> {
        self.branches().iter().collect()
    }
    fn sampling_metric(&self) -> &ElasticityTensor {
        self.stiffness()
    }
}

/// Engineering-coordinate grid spacing for one branch: adjacent samples are
/// at most `rho` apart in the energy metric.
pub fn grid_spacing(branch: &AffineGraphBranch, metric: &ElasticityTensor, rho: f64) -> f64 {
    let h = branch.hessian(metric) * 0.5;
    let lmax = h.symmetric_eigen().eigenvalues.iter().cloned().fold(0.0, f64::max);
    rho / (metric.size() as f64 * lmax).sqrt()
}

struct Grid {
    axes: Vec<Vec<f64>>,
}

impl Grid {
    fn new(dim: usize, bounds: &[[f64; 2]], delta_eng: f64) -> Result<Self> {
        let mut axes = Vec::new();
        let mut total: usize = 1;
        for (k, [lo, hi]) in bounds.iter().enumerate() {
            let step = if is_shear_slot(dim, k) { 0.5 * delta_eng } else { delta_eng };
            let n = ((hi - lo) / step).ceil() as usize + 1;
            total = total.saturating_mul(n);
            if total > MAX_GRID_POINTS {
                return Err(Error::InvalidArgument(format!(
                    "sampling grid exceeds {MAX_GRID_POINTS} nodes; increase rho or shrink the box"
                )));
            }
            axes.push((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect());
        }
        Ok(Grid { axes })
    }

    fn for_each(&self, mut f: impl FnMut(&[f64])) {
        let m = self.axes.len();
        let mut idx = vec![0usize; m];
        let mut p = vec![0.0; m];
        loop {
            for k in 0..m {
                p[k] = self.axes[k][idx[k]];
            }
            f(&p);
            let mut k = 0;
            loop {
                if k == m {
                    return;
                }
                idx[k] += 1;
                if idx[k] < self.axes[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Exact-set points on the grid of one branch. Grid nodes outside the
/// branch's halfspace but within `reach` of it are moved onto its boundary.
fn branch_grid_points(
    branch: &AffineGraphBranch,
    metric: &ElasticityTensor,
    bounds: &[[f64; 2]],
    delta: f64,
    reach: f64,
) -> Result<Vec<LocalState>> {
    let dim = metric.dim();
    let grid = Grid::new(dim, bounds, delta)?;
    let clamp = branch.halfspace().map(|hs| {
        let h: DMatrix<f64> = branch.hessian(metric) * 0.5;
        let d = DVector::from_column_slice(hs.direction.packed());
        let hinv_d = h.cholesky().expect("graph Hessian is SPD").solve(&d);
        let dhd = d.dot(&hinv_d);
        (*hs, hinv_d, dhd)
    });
    let mut out = Vec::new();
    grid.for_each(|p| {
        let mut eps = SymMatrix::from_packed(dim, p).expect("grid point length");
        if let Some((hs, hinv_d, dhd)) = &clamp {
            let viol = hs.violation(&eps);
            if viol > 0.0 {
                if viol * viol / dhd > reach * reach {
                    return;
                }
                let t = (hs.direction.dot(&eps) - hs.bound) / dhd;
                let mut x = eps.to_engineering();
                for (xi, hi) in x.iter_mut().zip(hinv_d.iter()) {
                    *xi -= t * hi;
                }
                eps = SymMatrix::from_engineering(dim, &x);
            }
        }
        out.push(branch.point_at(&eps));
    });
    Ok(out)
}

/// Offset by exactly `t` (energy metric) along a random unit normal of the
/// branch graph at `p`.
fn perturb(p: &LocalState, branch: &AffineGraphBranch, metric: &ElasticityTensor, t: f64, rng: &mut ChaCha8Rng) -> LocalState {
    let m = metric.size();
    let q: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
    let dq = branch.stiffness().voigt_mul(&metric.unembed_strain(&q));
    let pp: Vec<f64> = metric.embed_stress(&dq).iter().map(|v| -v).collect();
    let norm = (pp.iter().chain(&q).map(|v| v * v).sum::<f64>()).sqrt();
    if norm == 0.0 {
        return *p;
    }
    let s = t * std::f64::consts::SQRT_2 / norm;
    let dx: Vec<f64> = metric.unembed_strain(&pp).iter().map(|v| v * s).collect();
    let ds: Vec<f64> = metric.unembed_stress(&q).iter().map(|v| v * s).collect();
    let dim = metric.dim();
    LocalState {
        eps: p.eps + SymMatrix::from_engineering(dim, &dx),
        sig: p.sig + SymMatrix::from_packed(dim, &ds).expect("packed length"),
    }
}

/// Sample an analytic set into a point cloud under its own metric.
pub fn sample<S: SampleSource + ?Sized>(set: &S, spec: &SamplingSpec) -> Result<PointCloudDataSet> {
    spec.validate()?;
    let metric = set.sampling_metric().clone();
    let dim = metric.dim();
    if spec.bounds.len() != packed_len(dim) {
        return Err(Error::DegenerateBox(format!(
            "box has {} ranges, strain has {} components",
            spec.bounds.len(),
            packed_len(dim)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::new();
    let branches = set.sampling_branches();
    for branch in &branches {
        let delta = grid_spacing(branch, &metric, spec.rho);
        let exact = branch_grid_points(branch, &metric, &spec.bounds, delta, spec.rho)?;
        for p in exact {
            points.push(if spec.t > 0.0 { perturb(&p, branch, &metric, spec.t, &mut rng) } else { p });
        }
    }
    let provenance = serde_json::json!({
        "generator": "grid",
        "rho": spec.rho,
        "t": spec.t,
        "box": spec.bounds,
        "seed": spec.seed,
        "branches": branches.len(),
    });
    PointCloudDataSet::with_provenance(points, metric, provenance)
}

/// Largest distance from `probes` to the cloud (a covering-radius estimate).
pub fn covering_radius(cloud: &PointCloudDataSet, probes: &[LocalState]) -> Result<f64> {
    let mut r: f64 = 0.0;
    for p in probes {
        r = r.max(cloud.nearest(p, cloud.metric())?.d2.sqrt());
    }
    Ok(r)
}

/// Dense exact-set probes over the box, `per_axis` nodes per strain
/// component, restricted to each branch's halfspace.
pub fn probe_points<S: SampleSource + ?Sized>(set: &S, bounds: &[[f64; 2]], per_axis: usize) -> Vec<LocalState> {
    let metric = set.sampling_metric();
    let dim = metric.dim();
    let mut out = Vec::new();
    for branch in set.sampling_branches() {
        let axes: Vec<Vec<f64>> = bounds
            .iter()
            .map(|[lo, hi]| (0..per_axis).map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1).max(1) as f64).collect())
            .collect();
        let grid = Grid { axes };
        grid.for_each(|p| {
            let eps = SymMatrix::from_packed(dim, p).expect("probe length");
            if branch.halfspace().map_or(true, |h| h.admits(&eps, 0.0)) {
                out.push(branch.point_at(&eps));
            }
        });
    }
    out
}
