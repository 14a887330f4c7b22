//! Dirichlet data, tractions and body forces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dirichlet {
    pub node: usize,
    pub component: usize,
    pub value: f64,
}

/// Constant traction on one boundary facet (index into `Mesh::facets`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traction {
    pub facet: usize,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryData {
    pub dirichlet: Vec<Dirichlet>,
    pub neumann: Vec<Traction>,
    /// One vector per element; empty means no body force.
    pub body_force: Vec<Vec<f64>>,
}

impl BoundaryData {
    pub fn new() -> Self {
        Self::default()
    }

    /// Prescribe `component` of the displacement on every node of `marker`.
    pub fn fix(mut self, mesh: &Mesh, marker: u32, component: usize, value: f64) -> Result<Self> {
        let nodes = mesh.marker_nodes(marker);
        if nodes.is_empty() {
            return Err(Error::InvalidBoundary(format!("no boundary facets carry marker {marker}")));
        }
        for node in nodes {
            self.dirichlet.push(Dirichlet { node, component, value });
        }
        Ok(self)
    }

    /// Prescribe the full displacement vector on `marker`.
    pub fn clamp(mut self, mesh: &Mesh, marker: u32, value: &[f64]) -> Result<Self> {
        if value.len() != mesh.dim() {
            return Err(Error::InvalidBoundary(format!("displacement needs {} components", mesh.dim())));
        }
        for (c, v) in value.iter().enumerate() {
            self = self.fix(mesh, marker, c, *v)?;
        }
        Ok(self)
    }

    pub fn traction(mut self, mesh: &Mesh, marker: u32, value: &[f64]) -> Result<Self> {
        if value.len() != mesh.dim() {
            return Err(Error::InvalidBoundary(format!("traction needs {} components", mesh.dim())));
        }
        let mut any = false;
        for (k, f) in mesh.facets().iter().enumerate() {
            if f.marker == marker {
                self.neumann.push(Traction { facet: k, value: value.to_vec() });
                any = true;
            }
        }
        if !any {
            return Err(Error::InvalidBoundary(format!("no boundary facets carry marker {marker}")));
        }
        Ok(self)
    }

    pub fn uniform_body_force(mut self, mesh: &Mesh, f: &[f64]) -> Result<Self> {
        if f.len() != mesh.dim() {
            return Err(Error::InvalidBoundary(format!("body force needs {} components", mesh.dim())));
        }
        self.body_force = vec![f.to_vec(); mesh.n_elements()];
        Ok(self)
    }

    /// Same dof bookkeeping, all data set to zero.
    pub fn homogeneous(&self) -> Self {
        BoundaryData {
            dirichlet: self.dirichlet.iter().map(|d| Dirichlet { value: 0.0, ..*d }).collect(),
            neumann: Vec::new(),
            body_force: Vec::new(),
        }
    }

    /// Check against the mesh; returns the Dirichlet map as `(dof, value)`
    /// sorted and deduplicated.
    pub fn validate(&self, mesh: &Mesh) -> Result<Vec<(usize, f64)>> {
        let dim = mesh.dim();
        if self.dirichlet.is_empty() {
            return Err(Error::InvalidBoundary("the Dirichlet boundary must not be empty".into()));
        }
        let mut fixed: Vec<(usize, f64)> = Vec::with_capacity(self.dirichlet.len());
        for d in &self.dirichlet {
            if d.node >= mesh.n_nodes() || d.component >= dim {
                return Err(Error::InvalidBoundary(format!("Dirichlet entry ({}, {}) is out of range", d.node, d.component)));
            }
            if !d.value.is_finite() {
                return Err(Error::InvalidBoundary(format!("Dirichlet value at node {} is not finite", d.node)));
            }
            fixed.push((d.node * dim + d.component, d.value));
        }
        fixed.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(fixed.len());
        for (dof, v) in fixed {
            match out.last() {
                Some(&(d, w)) if d == dof => {
                    if w != v {
                        return Err(Error::InvalidBoundary(format!(
                            "node {} component {} is prescribed twice with different values",
                            dof / dim,
                            dof % dim
                        )));
                    }
                }
                _ => out.push((dof, v)),
            }
        }
        let is_fixed = |dof: usize| out.binary_search_by(|p| p.0.cmp(&dof)).is_ok();
        for t in &self.neumann {
            let facet = mesh
                .facets()
                .get(t.facet)
                .ok_or_else(|| Error::InvalidBoundary(format!("traction references missing facet {}", t.facet)))?;
            if t.value.len() != dim || t.value.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidBoundary(format!("traction on facet {} must have {dim} finite components", t.facet)));
            }
            for (c, v) in t.value.iter().enumerate() {
                if *v != 0.0 && facet.nodes.iter().all(|&n| is_fixed(n * dim + c)) {
                    return Err(Error::InvalidBoundary(format!(
                        "facet {} carries a traction in component {c} but all its nodes are Dirichlet-fixed in it",
                        t.facet
                    )));
                }
            }
        }
        if !self.body_force.is_empty() {
            if self.body_force.len() != mesh.n_elements() {
                return Err(Error::InvalidBoundary(format!(
                    "body force has {} entries for {} elements",
                    self.body_force.len(),
                    mesh.n_elements()
                )));
            }
            if self.body_force.iter().any(|f| f.len() != dim || f.iter().any(|v| !v.is_finite())) {
                return Err(Error::InvalidBoundary(format!("body force vectors must have {dim} finite components")));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::markers;

    #[test]
    fn empty_dirichlet_is_rejected() {
        let m = Mesh::bar1d(2, 1.0).unwrap();
        assert!(BoundaryData::new().validate(&m).is_err());
    }

    #[test]
    fn conflicting_values_are_rejected() {
        let m = Mesh::bar1d(2, 1.0).unwrap();
        let bc = BoundaryData::new().fix(&m, markers::LEFT, 0, 0.0).unwrap().fix(&m, markers::LEFT, 0, 1.0).unwrap();
        assert!(bc.validate(&m).is_err());
        let bc = BoundaryData::new().fix(&m, markers::LEFT, 0, 0.0).unwrap().fix(&m, markers::LEFT, 0, 0.0).unwrap();
        assert_eq!(bc.validate(&m).unwrap(), vec![(0, 0.0)]);
    }

    #[test]
    fn traction_on_fixed_facet_is_rejected() {
        let m = Mesh::bar1d(2, 1.0).unwrap();
        let bc = BoundaryData::new()
            .fix(&m, markers::RIGHT, 0, 0.0)
            .unwrap()
            .traction(&m, markers::RIGHT, &[1.0])
            .unwrap();
        assert!(matches!(bc.validate(&m), Err(Error::InvalidBoundary(_))));
    }

    #[test]
    fn unknown_marker() {
        let m = Mesh::bar1d(2, 1.0).unwrap();
        assert!(BoundaryData::new().fix(&m, 9, 0, 0.0).is_err());
    }
}
