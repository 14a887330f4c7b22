//! Finite point clouds of local states with kd-tree nearest queries.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_string, state_header};
use crate::phase::{local_sq_distance, LocalState};
use crate::tensor::ElasticityTensor;

use super::kdtree::KdTree;
use super::{LocalDataSet, Nearest};

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudDataSet {
    points: Vec<LocalState>,
    metric: ElasticityTensor,
    tree: KdTree,
    provenance: serde_json::Value,
}

/// JSON sidecar stored next to a cloud CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSidecar {
    pub dim: usize,
    pub metric: Vec<Vec<f64>>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

/// Embedded coordinates `(Lᵀx/√2, L⁻¹s/√2)`; their squared Euclidean
/// distance is the energy distance.
pub fn embed(z: &LocalState, metric: &ElasticityTensor) -> Vec<f64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = metric.embed_strain(&z.eps.to_engineering());
    v.extend(metric.embed_stress(z.sig.packed()));
    v.iter_mut().for_each(|x| *x *= r);
    v
}

impl PointCloudDataSet {
    pub fn new(points: Vec<LocalState>, metric: ElasticityTensor) -> Result<Self> {
        Self::with_provenance(points, metric, serde_json::Value::Null)
    }

    pub fn with_provenance(points: Vec<LocalState>, metric: ElasticityTensor, provenance: serde_json::Value) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataSet);
        }
        let dim = metric.dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
        }
        if points.iter().any(|p| !p.eps.is_finite() || !p.sig.is_finite()) {
            return Err(Error::InvalidArgument("point cloud contains non-finite values".into()));
        }
        let k = 2 * metric.size();
        let coords: Vec<f64> = points.iter().flat_map(|p| embed(p, &metric)).collect();
        let tree = KdTree::build(k, coords);
        Ok(PointCloudDataSet { points, metric, tree, provenance })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LocalState] {
        &self.points
    }

    pub fn metric(&self) -> &ElasticityTensor {
        &self.metric
    }

    pub fn provenance(&self) -> &serde_json::Value {
        &self.provenance
    }

    fn finish(&self, z: &LocalState, idx: usize, metric: &ElasticityTensor) -> Result<Nearest> {
        let y = self.points[idx];
        Ok(Nearest { state: y, d2: local_sq_distance(z, &y, metric)?, id: idx })
    }

    /// Linear scan in the cloud's own metric.
    pub fn nearest_brute_force(&self, z: &LocalState) -> Result<Nearest> {
        self.check(z)?;
        let (i, _) = self.tree.nearest_brute_force(&embed(z, &self.metric)).ok_or(Error::EmptyDataSet)?;
        self.finish(z, i, &self.metric)
    }

    fn check(&self, z: &LocalState) -> Result<()> {
        if z.dim() != self.metric.dim() {
            return Err(Error::DimensionMismatch { expected: self.metric.dim(), found: z.dim() });
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        csv_string(&state_header(self.metric.dim()), self.points.iter().map(|p| p.to_row()))
    }

    pub fn sidecar(&self) -> CloudSidecar {
        CloudSidecar { dim: self.metric.dim(), metric: self.metric.voigt_rows(), provenance: self.provenance.clone() }
    }

    /// Parse CSV text whose header names the packed components.
    pub fn from_csv(text: &str, metric: ElasticityTensor, provenance: serde_json::Value) -> Result<Self> {
        let dim = metric.dim();
        let expected = state_header(dim);
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> =
            rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
        if header != expected {
            return Err(Error::Parse(format!("expected header {}, found {}", expected.join(","), header.join(","))));
        }
        let mut points = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let row: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", line + 1))))
                .collect::<Result<_>>()?;
            points.push(LocalState::from_row(dim, &row)?);
        }
        Self::with_provenance(points, metric, provenance)
    }

    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Write `<name>.csv` and its `<name>.json` sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv())?;
        let side = serde_json::to_string_pretty(&self.sidecar()).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(Self::sidecar_path(csv_path), side)?;
        Ok(())
    }

    /// Read a cloud CSV and its sidecar.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let side_text = std::fs::read_to_string(Self::sidecar_path(csv_path))?;
        let side: CloudSidecar = serde_json::from_str(&side_text).map_err(|e| Error::Parse(e.to_string()))?;
        let metric = ElasticityTensor::from_voigt(side.dim, &side.metric)?;
        let text = std::fs::read_to_string(csv_path)?;
        Self::from_csv(&text, metric, side.provenance)
    }
}

impl LocalDataSet for PointCloudDataSet {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn nearest(&self, z: &LocalState, metric: &ElasticityTensor) -> Result<Nearest> {
        self.check(z)?;
        if *metric == self.metric {
            let (i, _) = self.tree.nearest(&embed(z, metric)).ok_or(Error::EmptyDataSet)?;
            return self.finish(z, i, metric);
        }
        let mut best: Option<Nearest> = None;
        for (i, p) in self.points.iter().enumerate() {
            let d2 = local_sq_distance(z, p, metric)?;
            if best.as_ref().map_or(true, |b| d2 < b.d2) {
                best = Some(Nearest { state: *p, d2, id: i });
            }
        }
        best.ok_or(Error::EmptyDataSet)
    }

    fn contains(&self, z: &LocalState, tol: f64) -> bool {
        self.nearest(z, &self.metric).map_or(false, |n| n.d2 <= tol * tol)
    }

    fn is_finite_set(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_cloud() {
        let c = ElasticityTensor::scalar(1.0).unwrap();
        let cloud = PointCloudDataSet::new(vec![LocalState::scalar(0.0, 0.0), LocalState::scalar(1.0, 1.0)], c.clone()).unwrap();
        let n = cloud.nearest(&LocalState::scalar(0.9, 0.9), &c).unwrap();
        assert_eq!(n.id, 1);
        assert_eq!(n.state, LocalState::scalar(1.0, 1.0));
        assert!((n.d2 - 0.01).abs() < 1e-15);
    }

    #[test]
    fn empty_cloud_is_an_error() {
        let c = ElasticityTensor::scalar(1.0).unwrap();
        assert_eq!(PointCloudDataSet::new(vec![], c).unwrap_err(), Error::EmptyDataSet);
    }

    #[test]
    fn embedding_distance_is_energy_distance() {
        let c = ElasticityTensor::isotropic(2, 1.3, 0.6).unwrap();
        let a = LocalState::from_row(2, &[0.1, -0.4, 0.3, 2.0, 0.5, -1.0]).unwrap();
        let b = LocalState::from_row(2, &[-0.2, 0.7, 0.05, -1.0, 0.25, 0.3]).unwrap();
        let e = super::super::kdtree::sq_euclid(&embed(&a, &c), &embed(&b, &c));
        assert!((e - local_sq_distance(&a, &b, &c).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn csv_round_trip() {
        let c = ElasticityTensor::isotropic(2, 1.0, 1.0).unwrap();
        let pts = vec![
            LocalState::from_row(2, &[0.1, 0.2, 0.3, 1.0 / 3.0, -2.0, 1e-17]).unwrap(),
            LocalState::from_row(2, &[-0.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap(),
        ];
        let cloud = PointCloudDataSet::new(pts, c.clone()).unwrap();
        let back = PointCloudDataSet::from_csv(&cloud.to_csv(), c, serde_json::Value::Null).unwrap();
        assert_eq!(back.points(), cloud.points());
    }

    #[test]
    fn bad_header_is_rejected() {
        let c = ElasticityTensor::scalar(1.0).unwrap();
        let err = PointCloudDataSet::from_csv("eps,sig\n1,1\n", c, serde_json::Value::Null).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = std::env::temp_dir().join(format!("dde-cloud-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cloud.csv");
        let c = ElasticityTensor::scalar(3.0).unwrap();
        let cloud = PointCloudDataSet::with_provenance(
            vec![LocalState::scalar(0.5, 1.5)],
            c,
            serde_json::json!({"generator": "test", "seed": 3}),
        )
        .unwrap();
        cloud.save(&path).unwrap();
        let back = PointCloudDataSet::load(&path).unwrap();
        assert_eq!(back, cloud);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
