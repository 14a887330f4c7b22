//! Classical relaxation of the 1D two-well energy by its convex envelope.

use serde::{Deserialize, Serialize};

use crate::data::{FlagDataSet1D, FlagMembership};
use crate::error::Result;

/// One piece of `W**`: `½C(ε − well)²` on `[lo, hi]`, or zero when `well`
/// is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePiece {
    pub lo: f64,
    pub hi: f64,
    pub well: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexEnvelope1D {
    pub c: f64,
    pub sigma0: f64,
}

impl ConvexEnvelope1D {
    pub fn new(c: f64, sigma0: f64) -> Result<Self> {
        FlagDataSet1D::new(c, sigma0)?;
        Ok(ConvexEnvelope1D { c, sigma0 })
    }

    fn half_gap(&self) -> f64 {
        self.sigma0 / self.c
    }

    /// `W(ε) = min(½C(ε + σ₀/C)², ½C(ε − σ₀/C)²)`.
    pub fn energy(&self, eps: f64) -> f64 {
        let b = self.half_gap();
        0.5 * self.c * (eps + b).powi(2).min((eps - b).powi(2))
    }

    pub fn envelope(&self, eps: f64) -> f64 {
        let b = self.half_gap();
        0.5 * self.c * (eps.abs() - b).max(0.0).powi(2)
    }

    /// Derivative of `W**`.
    pub fn stress(&self, eps: f64) -> f64 {
        let b = self.half_gap();
        self.c * eps.signum() * (eps.abs() - b).max(0.0)
    }

    pub fn pieces(&self) -> [EnvelopePiece; 3] {
        let b = self.half_gap();
        [
            EnvelopePiece { lo: f64::NEG_INFINITY, hi: -b, well: Some(-b) },
            EnvelopePiece { lo: -b, hi: b, well: None },
            EnvelopePiece { lo: b, hi: f64::INFINITY, well: Some(b) },
        ]
    }

    /// Graph of the envelope stress.
    pub fn contains(&self, eps: f64, sig: f64, tol: f64) -> bool {
        (sig - self.stress(eps)).abs() <= tol
    }

    /// A state in the flag set but off the envelope graph.
    pub fn witness(&self) -> (f64, f64) {
        (0.0, self.sigma0 / 2.0)
    }

    pub fn witness_is_valid(&self, tol: f64) -> Result<bool> {
        let (e, s) = self.witness();
        let flag = FlagDataSet1D::new(self.c, self.sigma0)?;
        Ok(flag.classify(e, s, tol) != FlagMembership::Outside && !self.contains(e, s, tol))
    }
}

pub fn convex_envelope_1d(c: f64, sigma0: f64) -> Result<ConvexEnvelope1D> {
    ConvexEnvelope1D::new(c, sigma0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_values() {
        let w = convex_envelope_1d(2.0, 1.0).unwrap();
        assert_eq!(w.envelope(0.0), 0.0);
        let e = 2.0 * 1.0 / 2.0;
        assert!((w.envelope(e) - 1.0 / (2.0 * 2.0)).abs() < 1e-15);
        assert!(w.envelope(0.3) <= w.energy(0.3));
        for i in 0..100 {
            let x = -3.0 + 0.06 * i as f64;
            assert!(w.envelope(x) <= w.energy(x) + 1e-15);
        }
    }

    #[test]
    fn witness_separates_the_relaxations() {
        let w = convex_envelope_1d(1.0, 1.0).unwrap();
        assert_eq!(w.witness(), (0.0, 0.5));
        assert!(w.witness_is_valid(1e-9).unwrap());
        assert!(w.contains(0.2, 0.0, 1e-12));
        assert!(w.contains(3.0, 2.0, 1e-12));
    }

    #[test]
    fn pieces_are_contiguous() {
        let p = convex_envelope_1d(1.0, 2.0).unwrap().pieces();
        assert_eq!(p[0].hi, p[1].lo);
        assert_eq!(p[1].hi, p[2].lo);
        assert!(convex_envelope_1d(-1.0, 1.0).is_err());
    }
}
