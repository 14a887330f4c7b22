//! Local states `(ε, σ)`, discrete state fields and the energy metric
//! `½Cε·ε + ½C⁻¹σ·σ`.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ElasticityTensor, SymMatrix};

/// A point `(ε, σ)` of the local phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalState {
    pub eps: SymMatrix,
    pub sig: SymMatrix,
}

impl LocalState {
    pub fn new(eps: SymMatrix, sig: SymMatrix) -> Result<Self> {
        if eps.dim() != sig.dim() {
            return Err(Error::DimensionMismatch { expected: eps.dim(), found: sig.dim() });
        }
        Ok(LocalState { eps, sig })
    }

    pub fn zeros(dim: usize) -> Self {
        LocalState { eps: SymMatrix::zeros(dim), sig: SymMatrix::zeros(dim) }
    }

    /// One-dimensional state from scalars.
    pub fn scalar(eps: f64, sig: f64) -> Self {
        LocalState {
            eps: SymMatrix::from_packed(1, &[eps]).unwrap(),
            sig: SymMatrix::from_packed(1, &[sig]).unwrap(),
        }
    }

    pub fn dim(&self) -> usize {
        self.eps.dim()
    }

    pub fn scale(&self, s: f64) -> Self {
        LocalState { eps: self.eps.scale(s), sig: self.sig.scale(s) }
    }

    /// Packed strain components followed by packed stress components.
    pub fn to_row(&self) -> Vec<f64> {
        self.eps.packed().iter().chain(self.sig.packed()).copied().collect()
    }

    pub fn from_row(dim: usize, row: &[f64]) -> Result<Self> {
        let m = crate::tensor::packed_len(dim);
        if row.len() != 2 * m {
            return Err(Error::DimensionMismatch { expected: 2 * m, found: row.len() });
        }
        LocalState::new(SymMatrix::from_packed(dim, &row[..m])?, SymMatrix::from_packed(dim, &row[m..])?)
    }
}

impl Add for LocalState {
    type Output = LocalState;
    fn add(self, rhs: LocalState) -> LocalState {
        LocalState { eps: self.eps + rhs.eps, sig: self.sig + rhs.sig }
    }
}

impl Sub for LocalState {
    type Output = LocalState;
    fn sub(self, rhs: LocalState) -> LocalState {
        LocalState { eps: self.eps - rhs.eps, sig: self.sig - rhs.sig }
    }
}

fn check_state_dim(z: &LocalState, c: &ElasticityTensor) -> Result<()> {
    if z.eps.dim() != c.dim() || z.sig.dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), found: z.eps.dim() });
    }
    Ok(())
}

/// `½Cε·ε + ½C⁻¹σ·σ`.
pub fn local_sq_norm(z: &LocalState, c: &ElasticityTensor) -> Result<f64> {
    check_state_dim(z, c)?;
    Ok(0.5 * c.energy(&z.eps) + 0.5 * c.compliance_energy(&z.sig))
}

/// Squared energy distance between two local states.
pub fn local_sq_distance(a: &LocalState, b: &LocalState, c: &ElasticityTensor) -> Result<f64> {
    check_state_dim(a, c)?;
    check_state_dim(b, c)?;
    local_sq_norm(&(*a - *b), c)
}

/// Per-element states with positive volume weights, metrized by `metric`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    states: Vec<LocalState>,
    weights: Vec<f64>,
    metric: ElasticityTensor,
}

impl StateField {
    pub fn new(states: Vec<LocalState>, weights: Vec<f64>, metric: ElasticityTensor) -> Result<Self> {
        if states.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), found: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("weights must be positive, found {w}")));
        }
        for z in &states {
            check_state_dim(z, &metric)?;
        }
        Ok(StateField { states, weights, metric })
    }

    /// A field of zero states with the given weights.
    pub fn zeros(weights: Vec<f64>, metric: ElasticityTensor) -> Result<Self> {
        let states = vec![LocalState::zeros(metric.dim()); weights.len()];
        Self::new(states, weights, metric)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[LocalState] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn metric(&self) -> &ElasticityTensor {
        &self.metric
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Same weights and metric, new states.
    pub fn with_states(&self, states: Vec<LocalState>) -> Result<Self> {
        Self::new(states, self.weights.clone(), self.metric.clone())
    }

    pub fn scale(&self, s: f64) -> Self {
        StateField {
            states: self.states.iter().map(|z| z.scale(s)).collect(),
            weights: self.weights.clone(),
            metric: self.metric.clone(),
        }
    }

    fn check_compatible(&self, other: &StateField) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn sub(&self, other: &StateField) -> Result<StateField> {
        self.check_compatible(other)?;
        let states = self.states.iter().zip(&other.states).map(|(a, b)| *a - *b).collect();
        Ok(StateField { states, weights: self.weights.clone(), metric: self.metric.clone() })
    }

    pub fn add(&self, other: &StateField) -> Result<StateField> {
        self.check_compatible(other)?;
        let states = self.states.iter().zip(&other.states).map(|(a, b)| *a + *b).collect();
        Ok(StateField { states, weights: self.weights.clone(), metric: self.metric.clone() })
    }

    /// Weighted mean state.
    pub fn mean(&self) -> LocalState {
        let total: f64 = self.weights.iter().sum();
        let mut acc = LocalState::zeros(self.dim());
        for (z, w) in self.states.iter().zip(&self.weights) {
            acc = acc + z.scale(*w / total);
        }
        acc
    }

    /// Energy inner product `Σ w (½Cε·ε' + ½C⁻¹σ·σ')`.
    pub fn inner(&self, other: &StateField) -> Result<f64> {
        self.check_compatible(other)?;
        let c = &self.metric;
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .zip(&self.weights)
            .map(|((a, b), w)| w * 0.5 * (c.apply(&a.eps).dot(&b.eps) + c.apply_inv(&a.sig).dot(&b.sig)))
            .sum())
    }
}

/// `Σ w · local_sq_norm`.
pub fn field_sq_norm(field: &StateField) -> f64 {
    field
        .states
        .iter()
        .zip(&field.weights)
        .map(|(z, w)| w * local_sq_norm(z, &field.metric).expect("field states share the metric dimension"))
        .sum()
}

/// Squared energy distance between two fields on the same discretization.
pub fn field_sq_distance(a: &StateField, b: &StateField) -> Result<f64> {
    Ok(field_sq_norm(&a.sub(b)?))
}

/// Plain L² norm of the packed components, `Σ w (|ε|² + |σ|²)`, square-rooted.
pub fn field_l2_norm(field: &StateField) -> f64 {
    field
        .states
        .iter()
        .zip(&field.weights)
        .map(|(z, w)| w * (z.eps.dot(&z.eps) + z.sig.dot(&z.sig)))
        .sum::<f64>()
        .sqrt()
}
