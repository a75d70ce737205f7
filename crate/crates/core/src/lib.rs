//! Numerical workbench for Kaehler geometry on model manifolds.
//!
//! The crate computes curvature and Chern forms of discretized Kaehler
//! metrics, the perturbed scalar curvature `S(omega,t)` built from higher
//! Chern forms, Bando/Futaki-type characters and the perturbed Mabuchi
//! energy, a Calabi-type gradient flow toward constant `S(omega,t)`, the
//! fourth-order Lichnerowicz operator with its holomorphy-potential kernel,
//! and a finite-dimensional Kempf-Ness/GIT sandbox for the moment-map
//! stability picture.
//!
//! Model manifolds are periodic complex tori (spectral differentiation),
//! a polar chart grid on CP^1 (fourth-order finite differences), and
//! analytic Fubini-Study data on CP^2 (exact pointwise input, no grid).

pub mod algebra;
pub mod chart;
pub mod curvature;
pub mod error;
pub mod field;
pub mod flow;
pub mod fs;
pub mod invariants;
pub mod io;
pub mod kempf_ness;
pub mod lichnerowicz;
pub mod lobpcg;
pub mod poisson;
pub mod reduce;
pub mod report;
pub mod rng;
pub mod suite;
pub mod torus;

pub use algebra::{char_coefficients, form_det, mixed_cm, wedge, MatrixPQForm, PQForm};
pub use error::{KgError, Result};
pub use field::{Grid, MetricField, ScalarField};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// `sqrt(-1)` as a [`C64`].
pub const I: C64 = C64::new(0.0, 1.0);

/// Conversion factor from the canonical top coefficient of an `(m,m)`-form
/// (on `dz^1..dz^m ^ dzbar^1..dzbar^m`) to the real density against
/// `dx^1 dy^1 .. dx^m dy^m`.
///
/// `dz^I ^ dzbar^I = (-1)^{m(m-1)/2} (-2i)^m dx^1 dy^1 .. dx^m dy^m`.
pub fn top_volume_factor(m: usize) -> C64 {
    let sign = if (m * (m - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut f = C64::new(1.0, 0.0);
    for _ in 0..m {
        f *= C64::new(0.0, -2.0);
    }
    f * sign
}
