//! Curvature of the Chern connection, Chern forms, the perturbed scalar
//! curvature `S(omega,t)`, its topological average `sigma(t)`, and the
//! pointwise admissibility check for the t-perturbed pairing.
//!
//! Conventions (fixed once): `omega = i g_{i jbar} dz^i ^ dzbar^j`;
//! `Theta = dbar(g^{-1} dg)` in the Kaehler gauge, with tensor components
//! `Theta^i_j = -d_lbar(g^{i sbar} d_k g_{j sbar}) dz^k ^ dzbar^l`;
//! `c_k` from `det(I + t (i/2pi) Theta)`;
//! `S(omega,t) omega^m / (2 m pi) = sum_k t^{k-1} c_k ^ omega^{m-k}`.

use crate::algebra::{char_coefficients, form_det, mixed_cm, wedge_pow, MatrixPQForm, PQForm};
use crate::error::{KgError, Result};
use crate::field::{integrate_scalar, integrate_top, FormField, Grid, MetricField, ScalarField};
use crate::fs::{cp1_log_density_hess, cp1_theta_coeff, FsPoint};
use crate::reduce::pairwise_sum_c;
use crate::torus::DerivOp;
use crate::{C64, I};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Connection and curvature data of a metric field.
pub struct CurvatureData {
    pub grid: std::sync::Arc<Grid>,
    m: usize,
    /// `A^i_{j,k}` packed as `((node*m + i)*m + j)*m + k`
    connection: Vec<C64>,
    /// `Theta^i_{j, k lbar}` packed as `(((node*m + i)*m + j)*m + k)*m + l`
    theta: Vec<C64>,
    /// Ricci form `i R_{k lbar} dz^k ^ dzbar^l`, `R = -ddbar log det g`
    pub ricci: FormField,
    /// Chern forms `c_0 .. c_m`
    pub chern: Vec<FormField>,
}

impl CurvatureData {
    /// Curvature matrix at one node as an endomorphism-valued (1,1)-form.
    pub fn theta_at(&self, node: usize) -> MatrixPQForm {
        let m = self.m;
        let mut out = MatrixPQForm::zero(m, 1, 1);
        for i in 0..m {
            for j in 0..m {
                let mut f = PQForm::zero(m, 1, 1);
                for k in 0..m {
                    for l in 0..m {
                        f.set(
                            1 << k,
                            1 << l,
                            self.theta[(((node * m + i) * m + j) * m + k) * m + l],
                        );
                    }
                }
                out.set(i, j, f);
            }
        }
        out
    }

    pub fn connection_at(&self, node: usize, i: usize, j: usize, k: usize) -> C64 {
        let m = self.m;
        self.connection[((node * m + i) * m + j) * m + k]
    }

    /// Ricci tensor component `R_{k lbar}` at a node.
    pub fn ricci_comp(&self, node: usize, k: usize, l: usize) -> C64 {
        self.ricci.values[node].coeff(1 << k, 1 << l) / I
    }
}

/// Curvature of the Chern connection `Theta = dbar(g^{-1} dg)`, which on a
/// Kaehler manifold coincides with the Levi-Civita curvature.
pub fn curvature(g: &MetricField) -> Result<CurvatureData> {
    match g.grid.as_ref() {
        Grid::Torus(_) => curvature_torus(g),
        Grid::Chart(_) => curvature_chart(g),
    }
}

fn curvature_torus(g: &MetricField) -> Result<CurvatureData> {
    let grid = g.grid.clone();
    let t = grid.as_torus()?;
    let m = t.m;
    let n = t.num_nodes();

    // dG: derivatives of metric components
    let mut dg = vec![vec![C64::new(0.0, 0.0); n]; m * m * m]; // [(j*m+s)*m+k]
    for j in 0..m {
        for s in 0..m {
            let comp: Vec<C64> = (0..n).map(|node| g.g(node, j, s)).collect();
            let ops: Vec<DerivOp> = (0..m).map(DerivOp::Dz).collect();
            let ds = t.apply_ops(&comp, &ops);
            for (k, d) in ds.into_iter().enumerate() {
                dg[(j * m + s) * m + k] = d;
            }
        }
    }

    // connection A^i_{j,k} = g^{i sbar} d_k g_{j sbar}
    let mut conn = vec![C64::new(0.0, 0.0); n * m * m * m];
    for node in 0..n {
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut a = C64::new(0.0, 0.0);
                    for s in 0..m {
                        // g^{i sbar} = (G^{-1})_{si}
                        a += g.ginv(node, s, i) * dg[(j * m + s) * m + k][node];
                    }
                    conn[((node * m + i) * m + j) * m + k] = a;
                }
            }
        }
    }

    // Theta^i_{j,k lbar} = -d_lbar A^i_{j,k}
    let mut theta = vec![C64::new(0.0, 0.0); n * m * m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let comp: Vec<C64> =
                    (0..n).map(|node| conn[((node * m + i) * m + j) * m + k]).collect();
                let ops: Vec<DerivOp> = (0..m).map(DerivOp::Dzbar).collect();
                let ds = t.apply_ops(&comp, &ops);
                for (l, d) in ds.into_iter().enumerate() {
                    for node in 0..n {
                        theta[(((node * m + i) * m + j) * m + k) * m + l] = -d[node];
                    }
                }
            }
        }
    }

    // Ricci from log det g
    let logdet: Vec<C64> = (0..n).map(|node| C64::new(g.det(node).ln(), 0.0)).collect();
    let mut ricci = FormField::zero(grid.clone(), 1, 1);
    for k in 0..m {
        for l in 0..m {
            let h = t.apply_op(&logdet, DerivOp::Mixed(k, l));
            for node in 0..n {
                ricci.values[node].set(1 << k, 1 << l, -I * h[node]);
            }
        }
    }

    let chern = chern_forms(&grid, m, &theta)?;
    Ok(CurvatureData { grid, m, connection: conn, theta, ricci, chern })
}

/// Chart curvature: the ratio `rho = g/g_FS` is a smooth function on the
/// sphere, so `Theta = Theta_FS(analytic) - ddbar log rho` needs only
/// sphere-scalar differentiation (no chart tensor components touched).
fn curvature_chart(g: &MetricField) -> Result<CurvatureData> {
    let grid = g.grid.clone();
    let chart = grid.as_chart()?;
    let n = chart.num_nodes();
    let rho = g
        .chart_ratio()
        .ok_or_else(|| KgError::invalid("chart metric lacks FS ratio data"))?;
    let log_rho: Vec<C64> = rho.iter().map(|r| C64::new(r.re.ln(), 0.0)).collect();
    let hess = chart.hess_mixed(&log_rho);
    let dz_logrho = chart.dz(&log_rho);

    let mut conn = vec![C64::new(0.0, 0.0); n];
    let mut theta = vec![C64::new(0.0, 0.0); n];
    let mut ricci = FormField::zero(grid.clone(), 1, 1);
    for idx in 0..n {
        let z = chart.z(idx);
        let r2 = z.norm_sqr();
        // A = d log g = d log g_FS + d log rho
        conn[idx] = C64::new(-2.0, 0.0) * z.conj() / (1.0 + r2) + dz_logrho[idx];
        // Theta = -(log g)_{z zbar} = Theta_FS - (log rho)_{z zbar}
        theta[idx] = C64::new(cp1_theta_coeff(r2), 0.0) - hess[idx];
        // m = 1: Ricci form = i R dz^dzbar with R = -(log det g)_{z zbar}
        let r_comp = -C64::new(cp1_log_density_hess(r2), 0.0) - hess[idx];
        ricci.values[idx].set(0b1, 0b1, I * r_comp);
    }
    let chern = chern_forms(&grid, 1, &theta)?;
    Ok(CurvatureData { grid, m: 1, connection: conn, theta, ricci, chern })
}

fn chern_forms(grid: &std::sync::Arc<Grid>, m: usize, theta: &[C64]) -> Result<Vec<FormField>> {
    let n = grid.num_nodes();
    let mut chern: Vec<FormField> = (0..=m).map(|k| FormField::zero(grid.clone(), k, k)).collect();
    let scale = I / (2.0 * PI);
    for node in 0..n {
        let mut b = MatrixPQForm::zero(m, 1, 1);
        for i in 0..m {
            for j in 0..m {
                let mut f = PQForm::zero(m, 1, 1);
                for k in 0..m {
                    for l in 0..m {
                        f.set(
                            1 << k,
                            1 << l,
                            theta[(((node * m + i) * m + j) * m + k) * m + l] * scale,
                        );
                    }
                }
                b.set(i, j, f);
            }
        }
        let cs = char_coefficients(&b)?;
        for (k, c) in cs.into_iter().enumerate() {
            chern[k].values[node] = c;
        }
    }
    Ok(chern)
}

/// Perturbed scalar curvature with diagnostics.
pub struct PerturbedScalar {
    pub t: f64,
    /// `S(omega, t)`, real scalar field
    pub s: ScalarField,
    /// topological average of `S(omega,t)`
    pub sigma: f64,
    /// `int (S - sigma)^2 omega^m`
    pub calabi_energy: f64,
    /// set when the t-admissibility margin is not positive
    pub admissibility_warning: Option<String>,
}

/// Integrals `int c_k ^ omega^{m-k}` for k = 0..m (real parts; the
/// imaginary parts vanish for real metrics and are checked by callers).
pub fn chern_integrals(curv: &CurvatureData, g: &MetricField) -> Result<Vec<f64>> {
    let m = g.m();
    let omega = g.omega();
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let tail = omega.wedge_pow(m - k)?;
        let prod = curv.chern[k].wedge(&tail)?;
        out.push(integrate_top(&prod)?.re);
    }
    Ok(out)
}

/// `sigma(t) = sum_k t^{k-1} int c_k ^ omega^{m-k} / int omega^m`:
/// metric-independent within the Kaehler class.
pub fn sigma(g: &MetricField, t: f64) -> Result<f64> {
    let curv = curvature(g)?;
    sigma_from(&curv, g, t)
}

pub fn sigma_from(curv: &CurvatureData, g: &MetricField, t: f64) -> Result<f64> {
    let ints = chern_integrals(curv, g)?;
    let vol = g.total_volume();
    let m = g.m();
    let mut s = 0.0;
    for k in 1..=m {
        s += t.powi(k as i32 - 1) * ints[k];
    }
    Ok(s / vol)
}

/// `S(omega,t)` by the Chern-sum route (primary; stable at t = 0), with
/// sigma, the Calabi-type energy, and an admissibility warning attached.
pub fn perturbed_scalar(g: &MetricField, t: f64) -> Result<PerturbedScalar> {
    let curv = curvature(g)?;
    let mut out = perturbed_scalar_from(&curv, g, t)?;
    let adm = admissible_t_from(&curv, g, t)?;
    if !adm.ok {
        out.admissibility_warning = Some(format!(
            "t = {} outside the admissible range: margin {:.3e} at node {}",
            t, adm.margin, adm.worst_node
        ));
    }
    Ok(out)
}

/// Chern-sum route without the admissibility scan (used in flow loops
/// after an up-front admissibility check).
pub fn perturbed_scalar_fast(g: &MetricField, t: f64) -> Result<PerturbedScalar> {
    let curv = curvature(g)?;
    perturbed_scalar_from(&curv, g, t)
}

pub fn perturbed_scalar_from(
    curv: &CurvatureData,
    g: &MetricField,
    t: f64,
) -> Result<PerturbedScalar> {
    let m = g.m();
    let n = g.grid.num_nodes();
    let omega = g.omega();
    let mut num = vec![C64::new(0.0, 0.0); n];
    for k in 1..=m {
        let tail = omega.wedge_pow(m - k)?;
        let prod = curv.chern[k].wedge(&tail)?;
        let tk = t.powi(k as i32 - 1);
        for node in 0..n {
            num[node] += prod.values[node].top() * tk;
        }
    }
    let om_top = omega.wedge_pow(m)?;
    let s_vals: Vec<C64> = (0..n)
        .map(|node| {
            let d = om_top.values[node].top();
            if d.norm() == 0.0 {
                C64::new(f64::NAN, 0.0)
            } else {
                num[node] / d * (2.0 * m as f64 * PI)
            }
        })
        .collect();
    if s_vals.iter().any(|v| v.re.is_nan()) {
        return Err(KgError::invalid("omega^m vanishes at a node (degenerate metric)"));
    }
    let s_field = ScalarField::new(g.grid.clone(), s_vals, false);
    let defect = s_field.reality_defect();
    if defect > 1e-7 {
        return Err(KgError::invalid(format!(
            "perturbed scalar not real: defect {defect:.3e}"
        )));
    }
    let s_field = s_field.into_real();
    let sig = sigma_from(curv, g, t)?;
    let dev = s_field.add_scalar(C64::new(-sig, 0.0));
    let dev2 = ScalarField::from_fn(g.grid.clone(), |i| {
        C64::new(dev.values[i].re * dev.values[i].re, 0.0)
    });
    let calabi = integrate_scalar(&dev2, g).re;
    Ok(PerturbedScalar {
        t,
        s: s_field,
        sigma: sig,
        calabi_energy: calabi,
        admissibility_warning: None,
    })
}

/// Determinant route of Eq-(19) type:
/// `S = 2 m pi (det(omega I + t B) - omega^m) / (t omega^m)` for `t != 0`;
/// at `t = 0` the first-derivative polarization
/// `m c_m(B, omega I, .., omega I)` replaces the difference quotient.
pub fn perturbed_scalar_det_route(g: &MetricField, t: f64) -> Result<ScalarField> {
    let curv = curvature(g)?;
    perturbed_scalar_det_route_from(&curv, g, t)
}

pub fn perturbed_scalar_det_route_from(
    curv: &CurvatureData,
    g: &MetricField,
    t: f64,
) -> Result<ScalarField> {
    let m = g.m();
    let n = g.grid.num_nodes();
    let omega = g.omega();
    let om_top = omega.wedge_pow(m)?;
    let scale = I / (2.0 * PI);
    let mut vals = vec![C64::new(0.0, 0.0); n];
    for node in 0..n {
        let b = curv.theta_at(node).scale(scale);
        let om = omega.values[node];
        let w_id = MatrixPQForm::scalar_times_identity(m, &om);
        let denom = om_top.values[node].top();
        let s = if t != 0.0 {
            let w = w_id.add(&b.scale(C64::new(t, 0.0)));
            let det = form_det(&w)?;
            (det.top() - denom) / t / denom * (2.0 * m as f64 * PI)
        } else {
            let mut slots: Vec<&MatrixPQForm> = Vec::with_capacity(m);
            slots.push(&b);
            for _ in 1..m {
                slots.push(&w_id);
            }
            let c = mixed_cm(&slots)?;
            c.top() * (m as f64) / denom * (2.0 * m as f64 * PI)
        };
        vals[node] = s;
    }
    let s_field = ScalarField::new(g.grid.clone(), vals, false);
    let defect = s_field.reality_defect();
    if defect > 1e-7 {
        return Err(KgError::invalid(format!(
            "perturbed scalar (determinant route) not real: defect {defect:.3e}"
        )));
    }
    Ok(s_field.into_real())
}

/// Report of the pointwise t-admissibility check.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub ok: bool,
    /// minimum eigenvalue of the pairing density over all nodes
    pub margin: f64,
    pub worst_node: usize,
}

/// Check that the Hermitian pairing density induced by
/// `m c_m(nu-bar x mu slot, omega I + t B, ..)` is positive definite at
/// every node; returns the minimum eigenvalue margin.
pub fn admissible_t(g: &MetricField, t: f64) -> Result<AdmissibilityReport> {
    let curv = curvature(g)?;
    admissible_t_from(&curv, g, t)
}

pub fn admissible_t_from(
    curv: &CurvatureData,
    g: &MetricField,
    t: f64,
) -> Result<AdmissibilityReport> {
    let m = g.m();
    let n = g.grid.num_nodes();
    let omega = g.omega();
    let om_top = omega.wedge_pow(m)?;
    let scale = I / (2.0 * PI);
    let mut margin = f64::INFINITY;
    let mut worst = 0usize;
    for node in 0..n {
        let b = curv.theta_at(node).scale(scale);
        let gmat: Vec<C64> = {
            let mut v = vec![C64::new(0.0, 0.0); m * m];
            for i in 0..m {
                for j in 0..m {
                    v[i * m + j] = g.g(node, i, j);
                }
            }
            v
        };
        let me = admissibility_min_eig(
            &gmat,
            &b,
            &omega.values[node],
            om_top.values[node].top(),
            t,
        )?;
        if me < margin {
            margin = me;
            worst = node;
        }
    }
    Ok(AdmissibilityReport { ok: margin > 0.0, margin, worst_node: worst })
}

/// Pointwise admissibility margin from raw data (shared by grid metrics
/// and the analytic CP^2 samples). `b = (i/2pi) Theta`.
pub fn admissibility_min_eig(
    gmat: &[C64],
    b: &MatrixPQForm,
    omega: &PQForm,
    om_top: C64,
    t: f64,
) -> Result<f64> {
    let m = b.m;
    let w = MatrixPQForm::scalar_times_identity(m, omega).add(&b.scale(C64::new(t, 0.0)));
    // G[i][j][k][l] = m c_m(E^i_j x (i/2pi) dz^k dzbar^l, W, .., W) / omega^m
    let mut gg = vec![C64::new(0.0, 0.0); m * m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let mut e = MatrixPQForm::zero(m, 1, 1);
                    e.set(i, j, PQForm::basis(m, 1 << k, 1 << l).scale(I / (2.0 * PI)));
                    let mut slots: Vec<&MatrixPQForm> = Vec::with_capacity(m);
                    slots.push(&e);
                    for _ in 1..m {
                        slots.push(&w);
                    }
                    let c = mixed_cm(&slots)?;
                    gg[((i * m + j) * m + k) * m + l] = c.top() * (m as f64) / om_top;
                }
            }
        }
    }
    // H_{(b,k),(i,l)} = sum_j g_{j bbar} G[i][j][k][l]
    let dim = m * m;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for bi in 0..m {
        for k in 0..m {
            for i in 0..m {
                for l in 0..m {
                    let mut v = C64::new(0.0, 0.0);
                    for j in 0..m {
                        // g_{j bbar} = conj(g_{b jbar})
                        v += gmat[bi * m + j].conj() * gg[((i * m + j) * m + k) * m + l];
                    }
                    h[(bi * m + k, i * m + l)] = v;
                }
            }
        }
    }
    // hermiticity check, then symmetrize and take the smallest eigenvalue
    let herm_defect = (0..dim)
        .flat_map(|a| (0..dim).map(move |c| (a, c)))
        .map(|(a, c)| (h[(a, c)] - h[(c, a)].conj()).norm())
        .fold(0.0, f64::max);
    let scale_h = (0..dim)
        .flat_map(|a| (0..dim).map(move |c| (a, c)))
        .map(|(a, c)| h[(a, c)].norm())
        .fold(0.0, f64::max);
    if herm_defect > 1e-8 * scale_h.max(1e-30) {
        return Err(KgError::invalid(format!(
            "admissibility pairing not hermitian: defect {herm_defect:.3e}"
        )));
    }
    Ok(hermitian_min_eig(&h))
}

/// Smallest eigenvalue of a Hermitian complex matrix via realification.
pub fn hermitian_min_eig(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = (h[(i, j)] + h[(j, i)].conj()) / 2.0;
            r[(i, j)] = v.re;
            r[(i, j + n)] = -v.im;
            r[(i + n, j)] = v.im;
            r[(i + n, j + n)] = v.re;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(r);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Perturbed scalar curvature of CP^2 from analytic Fubini-Study data at a
/// sample point (exact-input pipeline check; no CP^2 grid exists).
pub fn cp2_perturbed_scalar(p: &FsPoint, t: f64) -> Result<f64> {
    let m = 2;
    let b = p.theta.scale(I / (2.0 * PI));
    let cs = char_coefficients(&b)?;
    let om2 = wedge_pow(&p.omega, 2)?;
    let denom = om2.top();
    let c1w = crate::algebra::wedge(&cs[1], &p.omega)?;
    let num = c1w.top() + cs[2].top() * t;
    let s = num / denom * (2.0 * m as f64 * PI);
    if s.im.abs() > 1e-10 * s.re.abs().max(1.0) {
        return Err(KgError::invalid("cp2 perturbed scalar not real"));
    }
    Ok(s.re)
}

/// `sigma(t)` for CP^2 via the constant pointwise ratios of the FS metric
/// and the normalization `int omega^2 = 1` (cross-sample consistency is
/// asserted by the caller's tests).
pub fn cp2_sigma(p: &FsPoint, t: f64) -> Result<f64> {
    let b = p.theta.scale(I / (2.0 * PI));
    let cs = char_coefficients(&b)?;
    let om2 = wedge_pow(&p.omega, 2)?;
    let denom = om2.top();
    let r1 = (crate::algebra::wedge(&cs[1], &p.omega)?.top() / denom).re;
    let r2 = (cs[2].top() / denom).re;
    Ok(r1 + t * r2)
}

/// Admissibility margin for CP^2 analytic data at a sample point.
pub fn cp2_admissibility_margin(p: &FsPoint, t: f64) -> Result<f64> {
    let b = p.theta.scale(I / (2.0 * PI));
    let om2 = wedge_pow(&p.omega, 2)?;
    admissibility_min_eig(&p.g, &b, &p.omega, om2.top(), t)
}

/// Locate the admissibility threshold `t*` on CP^2 by bisection on the
/// margin's sign (analytic FS input; the margin is node-independent by
/// homogeneity, verified across samples in tests).
pub fn cp2_admissibility_threshold(p: &FsPoint, t_hi: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = t_hi;
    if cp2_admissibility_margin(p, lo)? <= 0.0 {
        return Err(KgError::invalid("margin not positive at t = 0"));
    }
    if cp2_admissibility_margin(p, hi)? > 0.0 {
        return Err(KgError::invalid("margin still positive at t_hi"));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cp2_admissibility_margin(p, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mean of `S(omega,t)` against `omega^m`, for the identity
/// `<S> = 2 m pi sigma(t)`.
pub fn mean_s(ps: &PerturbedScalar, g: &MetricField) -> f64 {
    (integrate_scalar(&ps.s, g) / g.total_volume()).re
}

/// Pointwise real part of a (1,1)-form field reality defect, for the
/// `c_1` reality invariant.
pub fn form_reality_defect(f: &FormField) -> f64 {
    let v: Vec<C64> = f.values.iter().map(|p| C64::new(p.reality_defect(), 0.0)).collect();
    let _ = pairwise_sum_c(&v);
    f.values.iter().map(|p| p.reality_defect()).fold(0.0, f64::max)
}
