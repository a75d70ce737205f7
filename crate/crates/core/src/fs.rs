//! Closed-form Fubini-Study geometry on CP^1 and CP^2.
//!
//! Normalization: `g = (1/2pi) d d-bar log(1 + |z|^2)`, so `[omega]` is
//! `c_1(O(1))`, `int_{CP^1} omega = 1`, `int_{CP^2} omega^2 = 1`, and the
//! total Chern form is `(1 + omega)^{m+1}` truncated to degree (m,m).
//!
//! CP^2 is served purely as analytic pointwise data (no grid): metric,
//! inverse, curvature matrix, and Kaehler form at arbitrary chart points.

use crate::algebra::{MatrixPQForm, PQForm};
use crate::field::{Grid, ScalarField};
use crate::rng::CounterRng;
use crate::{C64, I};
use std::sync::Arc;

/// Curvature coefficient on `dz ^ dzbar` for CP^1 Fubini-Study:
/// `Theta = 2/(1+r^2)^2 dz ^ dzbar` (normalization independent).
pub fn cp1_theta_coeff(r2: f64) -> f64 {
    2.0 / ((1.0 + r2) * (1.0 + r2))
}

/// `(log g_FS)_{z zbar}` for the CP^1 chart density.
pub fn cp1_log_density_hess(r2: f64) -> f64 {
    -2.0 / ((1.0 + r2) * (1.0 + r2))
}

/// Analytic pointwise Fubini-Study data at a chart point of CP^m.
#[derive(Debug, Clone)]
pub struct FsPoint {
    pub m: usize,
    pub z: Vec<C64>,
    /// metric matrix `[g_{i jbar}]` (our 1/2pi normalization)
    pub g: Vec<C64>,
    /// plain matrix inverse of `g`
    pub ginv: Vec<C64>,
    /// curvature matrix `Theta^i_j` as an End-valued (1,1)-form
    pub theta: MatrixPQForm,
    /// Kaehler form at the point
    pub omega: PQForm,
}

/// Evaluate the closed-form FS data at a chart point (m = 1 or 2).
pub fn fs_point(z: &[C64]) -> FsPoint {
    let m = z.len();
    assert!((1..=2).contains(&m));
    let two_pi = std::f64::consts::TAU;
    let d: f64 = 1.0 + z.iter().map(|w| w.norm_sqr()).sum::<f64>();
    let mut g = vec![C64::new(0.0, 0.0); m * m];
    let mut ginv = vec![C64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            let delta = if i == j { 1.0 } else { 0.0 };
            g[i * m + j] =
                (C64::new(delta / d, 0.0) - z[i].conj() * z[j] / (d * d)) / two_pi;
            ginv[i * m + j] =
                (C64::new(delta, 0.0) + z[i].conj() * z[j]) * d * two_pi;
        }
    }
    // Theta^i_j = [ (delta_ij delta_kl + delta_ik delta_jl)/D
    //              - (delta_ij zbar_k + delta_ik zbar_j) z_l / D^2 ] dz^k ^ dzbar^l
    let mut theta = MatrixPQForm::zero(m, 1, 1);
    for i in 0..m {
        for j in 0..m {
            let mut entry = PQForm::zero(m, 1, 1);
            for k in 0..m {
                for l in 0..m {
                    let dij = if i == j { 1.0 } else { 0.0 };
                    let dik = if i == k { 1.0 } else { 0.0 };
                    let dkl = if k == l { 1.0 } else { 0.0 };
                    let djl = if j == l { 1.0 } else { 0.0 };
                    let c = C64::new((dij * dkl + dik * djl) / d, 0.0)
                        - (z[k].conj() * dij + z[j].conj() * dik) * z[l] / (d * d);
                    entry.set(1 << k, 1 << l, c);
                }
            }
            theta.set(i, j, entry);
        }
    }
    let mut omega = PQForm::zero(m, 1, 1);
    for k in 0..m {
        for l in 0..m {
            omega.set(1 << k, 1 << l, I * g[k * m + l]);
        }
    }
    FsPoint { m, z: z.to_vec(), g, ginv, theta, omega }
}

/// Deterministic sample set for CP^2 pipeline checks: the origin, axis
/// points, and seeded pseudo-random chart points.
pub fn cp2_samples(seed: u64, extra: usize) -> Vec<FsPoint> {
    let mut pts: Vec<Vec<C64>> = vec![
        vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        vec![C64::new(0.7, 0.0), C64::new(0.0, 0.0)],
        vec![C64::new(0.0, 0.0), C64::new(0.0, -1.3)],
        vec![C64::new(0.5, 0.2), C64::new(-0.4, 0.9)],
    ];
    let mut rng = CounterRng::new(seed).stream("cp2-samples");
    for _ in 0..extra {
        pts.push(vec![rng.complex_normal(), rng.complex_normal()]);
    }
    pts.iter().map(|p| fs_point(p)).collect()
}

/// The three rotation Hamiltonians on CP^1 in chart coordinates
/// (components of the unit-sphere embedding; each has zero FS mean):
/// `n1 = 2x/(1+r^2)`, `n2 = 2y/(1+r^2)`, `n3 = (r^2-1)/(1+r^2)`.
pub fn cp1_rotation_hamiltonians(grid: &Arc<Grid>) -> [ScalarField; 3] {
    let chart = grid.as_chart().expect("rotation hamiltonians live on the CP^1 chart");
    let mk = |f: &dyn Fn(C64) -> f64| {
        ScalarField::from_fn(grid.clone(), |idx| C64::new(f(chart.z(idx)), 0.0))
    };
    let n1 = mk(&|z: C64| 2.0 * z.re / (1.0 + z.norm_sqr()));
    let n2 = mk(&|z: C64| 2.0 * z.im / (1.0 + z.norm_sqr()));
    let n3 = mk(&|z: C64| (z.norm_sqr() - 1.0) / (1.0 + z.norm_sqr()));
    [n1, n2, n3]
}

/// Potential of the Moebius pull-back `z -> lambda z` of the FS metric:
/// `phi = (1/2pi) log((1+|lambda z|^2)/(1+|z|^2))`, smooth on all of CP^1.
/// The resulting metric has constant curvature exactly, which makes it a
/// sharp oracle for the finite-difference pipeline.
pub fn cp1_mobius_potential(grid: &Arc<Grid>, lambda: f64) -> ScalarField {
    let chart = grid.as_chart().expect("moebius potential lives on the CP^1 chart");
    ScalarField::from_fn(grid.clone(), |idx| {
        let r2 = chart.z(idx).norm_sqr();
        let v = ((1.0 + lambda * lambda * r2) / (1.0 + r2)).ln() / std::f64::consts::TAU;
        C64::new(v, 0.0)
    })
}
