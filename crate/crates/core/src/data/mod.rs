//! Local material data sets and nearest-point queries in the energy metric.

pub mod cloud;
pub mod flag;
pub mod graph;
pub mod kdtree;
pub mod sampling;
pub mod two_well;

pub use cloud::PointCloudDataSet;
pub use flag::{FlagDataSet1D, FlagMembership};
pub use graph::{project_to_affine_graph, AffineGraphBranch, Halfspace, Sense};
pub use sampling::{sample, SamplingSpec};
pub use two_well::{translate_unequal_wells, TwoWellDataSet, WellTranslation};

use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::phase::{LocalState, StateField};
use crate::tensor::ElasticityTensor;

/// Nearest member of a data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub state: LocalState,
    pub d2: f64,
    /// Branch label for analytic sets, point index for clouds.
    pub id: usize,
}

pub trait LocalDataSet: Send + Sync {
    fn dim(&self) -> usize;

    /// Nearest member of the set to `z` in the energy metric of `metric`.
    fn nearest(&self, z: &LocalState, metric: &ElasticityTensor) -> Result<Nearest>;

    fn contains(&self, z: &LocalState, tol: f64) -> bool;

    /// Finite sets have a finite number of possible assignments.
    fn is_finite_set(&self) -> bool {
        false
    }
}

/// Any of the supported data sets.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialData {
    Graph(AffineGraphBranch),
    TwoWell(TwoWellDataSet),
    Flag(FlagDataSet1D),
    Cloud(PointCloudDataSet),
}

impl MaterialData {
    fn inner(&self) -> &dyn LocalDataSet {
        match self {
            MaterialData::Graph(g) => g,
            MaterialData::TwoWell(t) => t,
            MaterialData::Flag(f) => f,
            MaterialData::Cloud(c) => c,
        }
    }

    /// The exact linear-elastic graph `σ = Cε` with the given stiffness.
    pub fn is_linear_graph_for(&self, c: &ElasticityTensor) -> bool {
        matches!(self, MaterialData::Graph(g) if g.is_linear() && g.stiffness() == c)
    }
}

impl LocalDataSet for MaterialData {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn nearest(&self, z: &LocalState, metric: &ElasticityTensor) -> Result<Nearest> {
        self.inner().nearest(z, metric)
    }
    fn contains(&self, z: &LocalState, tol: f64) -> bool {
        self.inner().contains(z, tol)
    }
    fn is_finite_set(&self) -> bool {
        self.inner().is_finite_set()
    }
}

/// Pointwise nearest members of a whole field.
pub fn nearest_field<D: LocalDataSet + ?Sized>(field: &StateField, set: &D, exec: Execution) -> Result<Vec<Nearest>> {
    if set.dim() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: set.dim() });
    }
    let metric = field.metric();
    map_slice(exec, field.states(), |z| set.nearest(z, metric)).into_iter().collect()
}

/// `Σ w · d²(z_e, D)`.
pub fn field_distance_sq<D: LocalDataSet + ?Sized>(field: &StateField, set: &D, exec: Execution) -> Result<f64> {
    let near = nearest_field(field, set, exec)?;
    Ok(near.iter().zip(field.weights()).map(|(n, w)| w * n.d2).sum())
}
