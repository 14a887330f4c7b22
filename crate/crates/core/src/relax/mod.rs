//! Relaxation of two-well data sets.

pub mod acoustic;
pub mod certificate;
pub mod envelope;
pub mod laminate;
pub mod membership;
pub mod reduced1d;

pub use acoustic::{alpha_hat, alpha_range, alpha_sweep_2d, c_hat, AlphaRange, TwoWellRelaxation};
pub use certificate::{separating_certificate, SeparatingCertificate};
pub use envelope::{convex_envelope_1d, ConvexEnvelope1D, EnvelopePiece};
pub use laminate::{cone_residual, generate_laminate_field, rank_one_decompose, LaminateDecomposition, LaminateField};
pub use membership::{membership_flag_1d, membership_relaxed_nd, RelaxedMembership, RelaxedTwoWell, WellCoordinates};
pub use reduced1d::{reduced_1d_two_well_solve, reduced_1d_two_well_solve_fixed_stress, ReducedSolution};

/// Boundary of the relaxed set in the `(σ·b, μ)` plane as labelled
/// polylines; `extent` is the length kept of each unbounded well ray.
pub fn boundary_polyline(rx: &TwoWellRelaxation, extent: f64) -> Vec<(&'static str, f64, f64)> {
    let (k, a) = (rx.cbb, rx.alpha_minus);
    vec![
        ("plus_well", -k, 1.0),
        ("plus_well", k + extent, 1.0),
        ("minus_well", -k - extent, -1.0),
        ("minus_well", k, -1.0),
        ("band", -k, 1.0),
        ("band", k - 2.0 * a, 1.0),
        ("band", k, -1.0),
        ("band", -k + 2.0 * a, -1.0),
        ("band", -k, 1.0),
    ]
}
