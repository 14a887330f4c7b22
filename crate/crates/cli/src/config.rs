//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use dde_core::data::{AffineGraphBranch, FlagDataSet1D, MaterialData, PointCloudDataSet, SamplingSpec, TwoWellDataSet};
use dde_core::fem::{assemble, markers, BoundaryData, DiscreteConstraintSpace, Mesh};
use dde_core::solver::SolverConfig;
use dde_core::{ElasticityTensor, SymMatrix};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Bar1d { elements: usize, length: f64 },
    Rect2d { nx: usize, ny: usize, lx: f64, ly: f64 },
    Mesh { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialConfig {
    LinearGraph { c: ElasticityTensor },
    /// Wells at transformation strains `a` and `b` (packed), heights differing
    /// by `w`.
    TwoWell { c: ElasticityTensor, a: Vec<f64>, b: Vec<f64>, w: f64 },
    Flag { c: f64, sigma0: f64 },
    PointCloud { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Marker {
    Id(u32),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletConfig {
    pub marker: Marker,
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionConfig {
    pub marker: Marker,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub dirichlet: Vec<DirichletConfig>,
    pub traction: Vec<TractionConfig>,
    pub body_force: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub material: MaterialConfig,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Vec<SamplingSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn keyed<T>(key: &str, r: dde_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Input(format!("{key}: {e}")))
}

/// Parse a JSON document, naming the file on failure.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// `path` relative to the directory of the config file.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(path)
    }
}

fn marker_id(m: &Marker, key: &str) -> Result<u32, Failure> {
    match m {
        Marker::Id(i) => Ok(*i),
        Marker::Name(n) => match n.as_str() {
            "left" => Ok(markers::LEFT),
            "right" => Ok(markers::RIGHT),
            "bottom" => Ok(markers::BOTTOM),
            "top" => Ok(markers::TOP),
            other => Err(Failure::Input(format!("{key}: unknown marker `{other}`"))),
        },
    }
}

pub fn sym(dim: usize, v: &[f64], key: &str) -> Result<SymMatrix, Failure> {
    keyed(key, SymMatrix::from_packed(dim, v))
}

impl ProblemConfig {
    pub fn mesh(&self, base: &Path) -> Result<Mesh, Failure> {
        match self {
            ProblemConfig::Bar1d { elements, length } => keyed("problem", Mesh::bar1d(*elements, *length)),
            ProblemConfig::Rect2d { nx, ny, lx, ly } => keyed("problem", Mesh::rect2d(*nx, *ny, *lx, *ly)),
            ProblemConfig::Mesh { path } => keyed("problem.path", Mesh::load(&resolve(base, path))),
        }
    }
}

impl MaterialConfig {
    pub fn build(&self, base: &Path) -> Result<MaterialData, Failure> {
        Ok(match self {
            MaterialConfig::LinearGraph { c } => MaterialData::Graph(AffineGraphBranch::linear(c.clone())),
            MaterialConfig::TwoWell { c, a, b, w } => {
                let a = sym(c.dim(), a, "material.a")?;
                let b = sym(c.dim(), b, "material.b")?;
                MaterialData::TwoWell(keyed("material", TwoWellDataSet::new(c.clone(), a, b, *w))?)
            }
            MaterialConfig::Flag { c, sigma0 } => MaterialData::Flag(keyed("material", FlagDataSet1D::new(*c, *sigma0))?),
            MaterialConfig::PointCloud { path } => {
                MaterialData::Cloud(keyed("material.path", PointCloudDataSet::load(&resolve(base, path)))?)
            }
        })
    }

    /// Stiffness used for the constraint space and the energy metric.
    pub fn stiffness(&self, data: &MaterialData) -> Result<ElasticityTensor, Failure> {
        Ok(match (self, data) {
            (MaterialConfig::LinearGraph { c }, _) | (MaterialConfig::TwoWell { c, .. }, _) => c.clone(),
            (MaterialConfig::Flag { c, .. }, _) => keyed("material.c", ElasticityTensor::scalar(*c))?,
            (_, MaterialData::Cloud(cloud)) => cloud.metric().clone(),
            _ => return Err(Failure::Input("material: no stiffness".into())),
        })
    }
}

impl BoundaryConfig {
    pub fn build(&self, mesh: &Mesh) -> Result<BoundaryData, Failure> {
        let mut bc = BoundaryData::new();
        for (i, d) in self.dirichlet.iter().enumerate() {
            let key = format!("boundary.dirichlet[{i}]");
            bc = keyed(&key, bc.fix(mesh, marker_id(&d.marker, &key)?, d.component, d.value))?;
        }
        for (i, t) in self.traction.iter().enumerate() {
            let key = format!("boundary.traction[{i}]");
            bc = keyed(&key, bc.traction(mesh, marker_id(&t.marker, &key)?, &t.value))?;
        }
        if self.body_force.iter().any(|f| *f != 0.0) {
            bc = keyed("boundary.body_force", bc.uniform_body_force(mesh, &self.body_force))?;
        } else if self.body_force.len() != mesh.dim() {
            return Err(Failure::Input(format!("boundary.body_force: expected {} components", mesh.dim())));
        }
        Ok(bc)
    }
}

/// Everything a run needs, built from a validated config.
pub struct Experiment {
    pub space: DiscreteConstraintSpace,
    pub data: MaterialData,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let cfg: ExperimentConfig = read_json(path)?;
        keyed("solver", cfg.solver.validate())?;
        for (i, s) in cfg.sampling.iter().flatten().enumerate() {
            keyed(&format!("sampling[{i}]"), s.validate())?;
        }
        Ok(cfg)
    }

    /// Override every seed in the config.
    pub fn set_seed(&mut self, seed: u64) {
        self.solver.seed = seed;
        for s in self.sampling.iter_mut().flatten() {
            s.seed = seed;
        }
    }

    pub fn build(&self, base: &Path) -> Result<Experiment, Failure> {
        let mesh = self.problem.mesh(base)?;
        let data = self.material.build(base)?;
        let c = self.material.stiffness(&data)?;
        if c.dim() != mesh.dim() {
            return Err(Failure::Input(format!("material: dimension {} does not match the mesh ({})", c.dim(), mesh.dim())));
        }
        let bc = self.boundary.build(&mesh)?;
        let space = keyed("boundary", assemble(&mesh, &c, &bc))?;
        Ok(Experiment { space, data })
    }
}
