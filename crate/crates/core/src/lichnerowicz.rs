//! The fourth-order operator
//! `L_g u = Delta^2 u + R^{jbar i} grad_jbar grad_i u + grad^{jbar} S grad_jbar u`,
//! whose kernel consists of the holomorphy potentials, plus the L2
//! projections onto the potential span and the potential transformation
//! between metrics in one Kaehler class.
//!
//! `S` is the unperturbed scalar curvature. The operator is applied
//! matrix-free; the kernel extraction runs LOBPCG on the realified
//! (real/imaginary pair) operator, which is real-symmetric, and pairs the
//! eigenfunctions back into complex potentials.

use crate::curvature::{curvature, perturbed_scalar_from};
use crate::error::{KgError, Result};
use crate::field::{
    d_antiholo, d_holo, hess_mixed, integrate_scalar, weighted_mean, Grid, MetricField,
    ScalarField,
};
use crate::invariants::gradient_field;
use crate::lobpcg::{lobpcg, LobpcgOptions, LobpcgResult, Operators};
use crate::poisson::ChartSolver;
use crate::rng::CounterRng;
use crate::torus::DerivOp;
use crate::C64;
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

/// First nonkernel eigenvalue of the flat model (torus: `pi^4`; CP^1 FS:
/// the l = 2 value `96 pi^2`), used to scale the kernel tolerance.
pub fn flat_model_gap(grid: &Grid) -> f64 {
    match grid {
        Grid::Torus(_) => PI.powi(4),
        Grid::Chart(_) => 96.0 * PI * PI,
    }
}

/// Default kernel tolerance: `1e-4 *` the flat-model gap.
pub fn default_kernel_tol(grid: &Grid) -> f64 {
    1e-4 * flat_model_gap(grid)
}

/// Strength of the pole-regularity term in the chart stiffness. Ring
/// weights shrink like 1/nr^2; scaling the penalty the same way keeps the
/// pushed spurious eigenvalues far above the kernel tolerance at every
/// resolution.
fn pole_penalty_strength(nr: usize) -> f64 {
    10.0 * (nr as f64) * (nr as f64)
}

/// Coefficient data for the factored symmetric form `L = D* G D` with
/// `D u = dbar(grad' u)`; this is the operator the kernel eigensolver
/// iterates (exactly symmetric and positive semidefinite by construction,
/// with the same kernel as the expansion form).
enum FactoredData {
    /// `dginv[(node, i, l, j)] = d_lbar g^{i jbar}` plus the metric inverse
    Torus { dginv: Vec<C64> },
    /// m = 1: `D u = a1 u_psi + a2 u_psipsi + a3 u_th + a4 u_thth + a5 u_psith`
    Chart { a: [Vec<C64>; 5] },
}

/// Assembled data for applying `L_g` matrix-free.
pub struct OperatorHandle {
    pub g: MetricField,
    /// unperturbed scalar curvature `S(omega, 0)`
    pub s0: ScalarField,
    /// `d S / dz^i`
    ds: Vec<ScalarField>,
    /// per node,  matrix `K_{ij} = sum_{a,b} g^{i bbar} g^{a jbar} R_{a bbar}`
    /// contracting the mixed Hessian in the Ricci term
    kmat: Vec<C64>,
    factored: FactoredData,
    applications: AtomicU64,
}

impl OperatorHandle {
    pub fn new(g: &MetricField) -> Result<Self> {
        let curv = curvature(g)?;
        let ps = perturbed_scalar_from(&curv, g, 0.0)?;
        let s0 = ps.s;
        let ds = d_holo(&s0)?;
        let m = g.m();
        let n = g.grid.num_nodes();
        let mut kmat = vec![C64::new(0.0, 0.0); n * m * m];
        for node in 0..n {
            for i in 0..m {
                for j in 0..m {
                    let mut v = C64::new(0.0, 0.0);
                    for a in 0..m {
                        for b in 0..m {
                            // g^{i bbar} = (G^{-1})_{bi}, g^{a jbar} = (G^{-1})_{ja}
                            v += g.ginv(node, b, i)
                                * g.ginv(node, j, a)
                                * curv.ricci_comp(node, a, b);
                        }
                    }
                    kmat[node * m * m + i * m + j] = v;
                }
            }
        }
        let factored = match g.grid.as_ref() {
            Grid::Torus(t) => {
                // d_lbar g^{i jbar} for all (i, j, l)
                let mut dginv = vec![C64::new(0.0, 0.0); n * m * m * m];
                for i in 0..m {
                    for j in 0..m {
                        let comp: Vec<C64> = (0..n).map(|node| g.ginv(node, j, i)).collect();
                        let ops: Vec<DerivOp> = (0..m).map(DerivOp::Dzbar).collect();
                        let ds_ = t.apply_ops(&comp, &ops);
                        for (l, d) in ds_.into_iter().enumerate() {
                            for node in 0..n {
                                dginv[((node * m + i) * m + l) * m + j] = d[node];
                            }
                        }
                    }
                }
                FactoredData::Torus { dginv }
            }
            Grid::Chart(c) => {
                let rho = g
                    .chart_ratio()
                    .ok_or_else(|| KgError::invalid("chart metric lacks FS ratio"))?;
                let rho_zbar = c.dzbar(rho);
                let i_unit = C64::new(0.0, 1.0);
                let mut a: [Vec<C64>; 5] =
                    std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
                for idx in 0..n {
                    let z = c.z(idx);
                    let r2 = z.norm_sqr();
                    let r = r2.sqrt();
                    let d = 1.0 + r2;
                    let gfs = crate::field::fs_density_cp1(r2);
                    let gval = g.g(idx, 0, 0);
                    let ginv = C64::new(1.0, 0.0) / gval;
                    let dg = C64::new(-2.0, 0.0) * z * gfs / d * rho[idx] + gfs * rho_zbar[idx];
                    let dginv = -dg / (gval * gval);
                    let j = idx / c.ntheta;
                    let cc = 1.0 + c.psi[j].cos();
                    let c_psi = -c.psi[j].sin();
                    let th = c.theta(idx % c.ntheta);
                    let e1 = C64::new(0.0, th).exp();
                    let e2 = C64::new(0.0, 2.0 * th).exp();
                    // D u = dginv u_zbar + ginv u_zbarzbar, expanded in
                    // (psi, theta) derivatives
                    a[0][idx] = dginv * e1 * (0.5 * cc)
                        + ginv * e2 * (0.25 * (cc * c_psi - cc / r));
                    a[1][idx] = ginv * e2 * (0.25 * cc * cc);
                    a[2][idx] = dginv * e1 * (i_unit * 0.5 / r)
                        + ginv * e2 * (-i_unit * 0.5 / (r * r));
                    a[3][idx] = ginv * e2 * (-0.25 / (r * r));
                    a[4][idx] = ginv * e2 * (i_unit * 0.5 * cc / r);
                }
                FactoredData::Chart { a }
            }
        };
        Ok(OperatorHandle {
            g: g.clone(),
            s0,
            ds,
            kmat,
            factored,
            applications: AtomicU64::new(0),
        })
    }

    /// `D u = dbar(grad' u)` components, `m^2` blocks of node values.
    fn apply_d(&self, u: &[C64]) -> Vec<Vec<C64>> {
        let g = &self.g;
        let m = g.m();
        let n = g.grid.num_nodes();
        match (&self.factored, g.grid.as_ref()) {
            (FactoredData::Torus { dginv }, Grid::Torus(t)) => {
                let mut first = Vec::with_capacity(m);
                {
                    let ops: Vec<DerivOp> = (0..m).map(DerivOp::DzbarFull).collect();
                    for d in t.apply_ops(u, &ops) {
                        first.push(d);
                    }
                }
                let mut second = vec![Vec::new(); m * m];
                for l in 0..m {
                    for j in l..m {
                        let d = t.apply_op(u, DerivOp::AntiPairFull(l, j));
                        second[l * m + j] = d.clone();
                        if j != l {
                            second[j * m + l] = d;
                        }
                    }
                }
                let mut out = vec![vec![C64::new(0.0, 0.0); n]; m * m];
                for i in 0..m {
                    for l in 0..m {
                        let comp = &mut out[i * m + l];
                        for node in 0..n {
                            let mut v = C64::new(0.0, 0.0);
                            for j in 0..m {
                                v += dginv[((node * m + i) * m + l) * m + j]
                                    * first[j][node]
                                    + g.ginv(node, j, i) * second[l * m + j][node];
                            }
                            comp[node] = v;
                        }
                    }
                }
                out
            }
            (FactoredData::Chart { a }, Grid::Chart(c)) => {
                let up = c.psi_apply(u, false);
                let upp = c.psi_apply(u, true);
                let ut = c.theta_d1(u);
                let utt = c.theta_d2(u);
                let upt = c.psi_apply(&ut, false);
                let mut out = vec![C64::new(0.0, 0.0); n];
                for idx in 0..n {
                    out[idx] = a[0][idx] * up[idx]
                        + a[1][idx] * upp[idx]
                        + a[2][idx] * ut[idx]
                        + a[3][idx] * utt[idx]
                        + a[4][idx] * upt[idx];
                }
                vec![out]
            }
            _ => unreachable!(),
        }
    }

    /// Plain-grid adjoint of [`OperatorHandle::apply_d`].
    fn apply_d_adjoint(&self, v: &[Vec<C64>]) -> Vec<C64> {
        let g = &self.g;
        let m = g.m();
        let n = g.grid.num_nodes();
        match (&self.factored, g.grid.as_ref()) {
            (FactoredData::Torus { dginv }, Grid::Torus(t)) => {
                let mut out = vec![C64::new(0.0, 0.0); n];
                for i in 0..m {
                    for l in 0..m {
                        let comp = &v[i * m + l];
                        for j in 0..m {
                            // (c Dzbar(j))^H = Dzbar(j)^H (cbar .)
                            let scaled1: Vec<C64> = (0..n)
                                .map(|node| {
                                    dginv[((node * m + i) * m + l) * m + j].conj() * comp[node]
                                })
                                .collect();
                            let t1 =
                                t.apply_ops_adjoint(&scaled1, &[DerivOp::DzbarFull(j)]);
                            let scaled2: Vec<C64> = (0..n)
                                .map(|node| g.ginv(node, j, i).conj() * comp[node])
                                .collect();
                            let t2 =
                                t.apply_ops_adjoint(&scaled2, &[DerivOp::AntiPairFull(l, j)]);
                            for node in 0..n {
                                out[node] += t1[0][node] + t2[0][node];
                            }
                        }
                    }
                }
                out
            }
            (FactoredData::Chart { a }, Grid::Chart(c)) => {
                let comp = &v[0];
                let scaled = |k: usize| -> Vec<C64> {
                    (0..n).map(|idx| a[k][idx].conj() * comp[idx]).collect()
                };
                let mut out = c.psi_apply_transpose(&scaled(0), false);
                for (idx, x) in c.psi_apply_transpose(&scaled(1), true).into_iter().enumerate()
                {
                    out[idx] += x;
                }
                // theta multiplier adjoints: conj(ik) = -ik, conj(-k^2) = -k^2
                for (idx, x) in c.theta_d1(&scaled(2)).into_iter().enumerate() {
                    out[idx] -= x;
                }
                for (idx, x) in c.theta_d2(&scaled(3)).into_iter().enumerate() {
                    out[idx] += x;
                }
                // (S_psi o D_theta)^H = D_theta^H o S_psi^T = -D_theta o S_psi^T
                let tmp = c.psi_apply_transpose(&scaled(4), false);
                for (idx, x) in c.theta_d1(&tmp).into_iter().enumerate() {
                    out[idx] -= x;
                }
                out
            }
            _ => unreachable!(),
        }
    }

    /// Raw factored stiffness `D^H (G D u)` (plain-transpose symmetric
    /// positive semidefinite; its pencil against the volume weights is the
    /// Lichnerowicz operator).
    pub fn apply_stiffness(&self, u: &ScalarField) -> Result<ScalarField> {
        self.applications.fetch_add(1, Ordering::Relaxed);
        let g = &self.g;
        let m = g.m();
        let n = g.grid.num_nodes();
        let du = self.apply_d(&u.values);
        // G: z_{(j,k)} = w sum_{i,l} g_{i jbar} g^{k lbar} T^{i}_{lbar}
        let mut z = vec![vec![C64::new(0.0, 0.0); n]; m * m];
        for node in 0..n {
            let w = g.vol_density(node) * g.grid.node_weight(node);
            for j in 0..m {
                for k in 0..m {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..m {
                        for l in 0..m {
                            // g^{k lbar} = (G^{-1})_{lk}
                            acc += g.g(node, i, j) * g.ginv(node, l, k) * du[i * m + l][node];
                        }
                    }
                    z[j * m + k][node] = acc * w;
                }
            }
        }
        let mut dhz = self.apply_d_adjoint(&z);
        // Pole-regularity term (chart grids): a function smooth on the
        // sphere has angular mode-k amplitude ~ dist^{|k|} at a pole, but
        // collocation along great circles cannot see this, so Hamiltonians
        // of z^k d/dz with k >= 3 (smooth on every great circle, singular
        // on the sphere) land in the discrete kernel. Penalizing the
        // |k| >= 2 mode content of the rings nearest the poles removes
        // them; genuinely smooth fields contribute O(dist^{2|k|}).
        if let Grid::Chart(c) = g.grid.as_ref() {
            if c.r_trunc.is_infinite() {
                let tau = pole_penalty_strength(c.nr);
                for ring in [0, c.nr - 1] {
                    // symmetric form F W F (filter, volume weight, filter)
                    let filtered = c.ring_highpass(&u.values, ring, 1);
                    let weighted: Vec<C64> = filtered
                        .iter()
                        .enumerate()
                        .map(|(kk, val)| {
                            let node = ring * c.ntheta + kk;
                            let w = g.vol_density(node) * g.grid.node_weight(node);
                            val * w
                        })
                        .collect();
                    let refiltered = c.highpass_slice(&weighted, 1);
                    for (kk, val) in refiltered.iter().enumerate() {
                        dhz[ring * c.ntheta + kk] += tau * val;
                    }
                }
            }
        }
        Ok(ScalarField::new(u.grid.clone(), dhz, false))
    }

    /// The factored symmetric action `B^{-1} D^H (G D u)`: same kernel as
    /// the expansion form, exactly self-adjoint in the discrete
    /// L2(omega^m) inner product.
    pub fn apply_factored(&self, u: &ScalarField) -> Result<ScalarField> {
        let g = &self.g;
        let st = self.apply_stiffness(u)?;
        let vals: Vec<C64> = (0..g.grid.num_nodes())
            .map(|node| {
                let w = g.vol_density(node) * g.grid.node_weight(node);
                st.values[node] / w
            })
            .collect();
        Ok(ScalarField::new(u.grid.clone(), vals, false))
    }

    /// Quadratic form `<u, L u> / <u, u>` in the volume inner product,
    /// evaluated through the factored stiffness (kernel membership
    /// indicator that is quadratically small in the discretization error).
    pub fn rayleigh(&self, u: &ScalarField) -> Result<f64> {
        let g = &self.g;
        let st = self.apply_stiffness(u)?;
        let n = g.grid.num_nodes();
        let mut num = 0.0;
        let mut den = 0.0;
        for node in 0..n {
            let w = g.vol_density(node) * g.grid.node_weight(node);
            num += (st.values[node] * u.values[node].conj()).re;
            den += u.values[node].norm_sqr() * w;
        }
        Ok(num / den)
    }

    pub fn applications(&self) -> u64 {
        self.applications.load(Ordering::Relaxed)
    }

    /// `L_g u`; linear, annihilates constants, reduces to `Delta^2` on the
    /// flat torus.
    pub fn apply(&self, u: &ScalarField) -> Result<ScalarField> {
        self.applications.fetch_add(1, Ordering::Relaxed);
        let g = &self.g;
        let m = g.m();
        let n = g.grid.num_nodes();
        let lap = crate::field::laplacian(u, g)?;
        let lap2 = crate::field::laplacian(&lap, g)?;
        let hess = hess_mixed(u)?;
        let du_bar = d_antiholo(u)?;
        let vals: Vec<C64> = (0..n)
            .map(|node| {
                let mut t2 = C64::new(0.0, 0.0);
                for i in 0..m {
                    for j in 0..m {
                        t2 += self.kmat[node * m * m + i * m + j] * hess[i * m + j][node];
                    }
                }
                let mut t3 = C64::new(0.0, 0.0);
                for i in 0..m {
                    for j in 0..m {
                        // g^{i jbar} dS/dz^i du/dzbar^j
                        t3 += g.ginv(node, j, i)
                            * self.ds[i].values[node]
                            * du_bar[j].values[node];
                    }
                }
                lap2.values[node] + t2 + t3
            })
            .collect();
        Ok(ScalarField::new(u.grid.clone(), vals, false))
    }
}

/// L2-orthonormal potential span `1, u_1, .., u_d` (complex coefficients;
/// the `u_i` are mean-zero kernel potentials).
pub struct PotentialBasis {
    pub grid: std::sync::Arc<Grid>,
    /// volume weight per node (density times quadrature weight)
    weights: Vec<f64>,
    /// normalized constant (first basis function)
    pub constant: ScalarField,
    /// mean-zero orthonormal kernel potentials
    pub functions: Vec<ScalarField>,
    /// orthonormality defect of the assembled basis
    pub gram_residual: f64,
    /// eigenvalues below the kernel tolerance (one per realified pair)
    pub eigenvalues_below_tol: Vec<f64>,
    /// solver residuals for those pairs
    pub residuals: Vec<f64>,
}

impl PotentialBasis {
    /// Complex dimension of the mean-zero kernel.
    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn inner(&self, a: &ScalarField, b: &ScalarField) -> C64 {
        let v: Vec<C64> = (0..self.grid.num_nodes())
            .map(|i| a.values[i] * b.values[i].conj() * self.weights[i])
            .collect();
        crate::reduce::pairwise_sum_c(&v)
    }
}

/// `Pi_g f = sum_i (f, u_i) u_i` over the basis including the constant;
/// idempotent, with `(1 - Pi) f` orthogonal to the span.
pub fn project_pi(f: &ScalarField, basis: &PotentialBasis) -> ScalarField {
    let mut out = ScalarField::zeros(f.grid.clone());
    let c = basis.inner(f, &basis.constant);
    out = out.add(&basis.constant.scale(c));
    for u in &basis.functions {
        let c = basis.inner(f, u);
        out = out.add(&u.scale(c));
    }
    out
}

/// Extract all eigenpairs of `L_g` with eigenvalue below `tol`, deflating
/// constants, and assemble the orthonormal potential basis.
pub fn kernel_basis(g: &MetricField, tol: f64, seed: u64) -> Result<PotentialBasis> {
    let op = OperatorHandle::new(g)?;
    kernel_basis_with(&op, tol, seed)
}

pub fn kernel_basis_with(op: &OperatorHandle, tol: f64, seed: u64) -> Result<PotentialBasis> {
    let g = &op.g;
    let grid = g.grid.clone();
    let n = grid.num_nodes();
    let dim = 2 * n;
    let weights: Vec<f64> =
        (0..n).map(|node| g.vol_density(node) * grid.node_weight(node)).collect();

    let to_complex = |v: &[f64]| -> Vec<C64> {
        (0..n).map(|i| C64::new(v[i], v[n + i])).collect()
    };
    let apply_a = |v: &[f64]| -> Vec<f64> {
        let u = ScalarField::new(grid.clone(), to_complex(v), false);
        // raw stiffness D^H G D: plain-transpose symmetric, paired with
        // the B weights this is the pencil form of L
        let lu = op.apply_stiffness(&u).expect("operator application");
        let mut out = vec![0.0; dim];
        for i in 0..n {
            out[i] = lu.values[i].re;
            out[n + i] = lu.values[i].im;
        }
        out
    };
    let apply_b = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for i in 0..n {
            out[i] = v[i] * weights[i];
            out[n + i] = v[n + i] * weights[i];
        }
        out
    };
    // preconditioner: inverse shifted squared model Laplacian
    let chart_solver = match grid.as_ref() {
        Grid::Chart(_) => Some(ChartSolver::new(grid.clone())?),
        _ => None,
    };
    let precond = |v: &[f64]| -> Vec<f64> {
        let u: Vec<C64> = to_complex(v);
        let w = match grid.as_ref() {
            Grid::Torus(t) => {
                // (Delta_flat^2 + 1)^{-1} spectrally
                let spec = t.to_spectral(&u);
                let mut s = spec;
                for (idx, sv) in s.iter_mut().enumerate() {
                    let mut rem = idx;
                    let mut k2 = 0.0;
                    for _ in 0..t.axes() {
                        let i = rem % t.n;
                        rem /= t.n;
                        // full frequencies including Nyquist: the operator
                        // keeps the Nyquist plane, so the smoother must
                        // damp it too
                        let kf = if i <= t.n / 2 { i as f64 } else { i as f64 - t.n as f64 };
                        k2 += kf * kf;
                    }
                    let lam = PI * PI * k2;
                    *sv /= 1.0 + lam * lam;
                }
                t.from_spectral(&s)
            }
            Grid::Chart(_) => {
                let cs = chart_solver.as_ref().unwrap();
                cs.apply_shifted_inverse(&cs.apply_shifted_inverse(&u))
            }
        };
        let mut out = vec![0.0; dim];
        for i in 0..n {
            out[i] = w[i].re;
            out[n + i] = w[i].im;
        }
        out
    };

    // constants (1 and i) deflated, B-normalized
    let total: f64 = weights.iter().sum();
    let cnorm = 1.0 / total.sqrt();
    let mut constraints = DMatrix::<f64>::zeros(dim, 2);
    for i in 0..n {
        constraints[(i, 0)] = cnorm;
        constraints[(n + i, 1)] = cnorm;
    }

    let opts = LobpcgOptions { block: 16, nev: 7, tol: 1e-6, lambda_tol: 1e-7, max_iter: 600 };
    let ops = Operators { apply_a: &apply_a, apply_b: &apply_b, precond: &precond };
    let rng = CounterRng::new(seed).stream("kernel-basis");
    let result: LobpcgResult = lobpcg(dim, &ops, &constraints, &opts, &rng)?;

    // collect eigenpairs below tol
    let mut kept: Vec<(f64, f64, Vec<C64>)> = Vec::new();
    for (k, &lam) in result.eigenvalues.iter().enumerate() {
        if lam < tol {
            let col: Vec<f64> = result.eigenvectors.column(k).iter().cloned().collect();
            kept.push((lam, result.residuals[k], to_complex(&col)));
        }
    }
    // orthonormalize over C against the volume inner product; the
    // realified pairs collapse to complex dimension d here
    let mut basis_funcs: Vec<ScalarField> = Vec::new();
    let mut evals = Vec::new();
    let mut resids = Vec::new();
    let inner = |a: &ScalarField, b: &ScalarField| -> C64 {
        let v: Vec<C64> = (0..n)
            .map(|i| a.values[i] * b.values[i].conj() * weights[i])
            .collect();
        crate::reduce::pairwise_sum_c(&v)
    };
    for (lam, res, vals) in &kept {
        let mut u = ScalarField::new(grid.clone(), vals.clone(), false);
        let mean = weighted_mean(&u, g);
        u = u.add_scalar(-mean);
        for b in &basis_funcs {
            let c = inner(&u, b);
            u = u.sub(&b.scale(c));
        }
        let norm = inner(&u, &u).re.max(0.0).sqrt();
        if norm > 1e-5 {
            basis_funcs.push(u.scale(C64::new(1.0 / norm, 0.0)));
            evals.push(*lam);
            resids.push(*res);
        }
    }
    // second orthonormalization pass and gram residual
    for k in 0..basis_funcs.len() {
        let mut u = basis_funcs[k].clone();
        for b in basis_funcs[..k].iter() {
            let c = inner(&u, b);
            u = u.sub(&b.scale(c));
        }
        let norm = inner(&u, &u).re.sqrt();
        basis_funcs[k] = u.scale(C64::new(1.0 / norm, 0.0));
    }
    let mut gram_residual = 0.0f64;
    for a in 0..basis_funcs.len() {
        for b in 0..basis_funcs.len() {
            let want = if a == b { 1.0 } else { 0.0 };
            gram_residual =
                gram_residual.max((inner(&basis_funcs[a], &basis_funcs[b]) - want).norm());
        }
    }
    let constant = ScalarField::constant(grid.clone(), C64::new(cnorm, 0.0));
    Ok(PotentialBasis {
        grid,
        weights,
        constant,
        functions: basis_funcs,
        gram_residual,
        eigenvalues_below_tol: evals,
        residuals: resids,
    })
}

/// Lemma-5.2 potential transformation `u~ = u + grad' u . grad phi`
/// (componentwise `u + g^{i jbar} u_jbar phi_i`), satisfying
/// `grad_{g~} u~ = grad_g u` and preserving the mean-zero normalization.
pub fn lemma52_transform(
    u: &ScalarField,
    phi: &ScalarField,
    g: &MetricField,
) -> Result<ScalarField> {
    let x = gradient_field(u, g)?;
    let dphi = d_holo(phi)?;
    let mut out = u.clone();
    for i in 0..g.m() {
        out = out.add(&x.components[i].mul(&dphi[i]));
    }
    Ok(out)
}

/// Sup over nodes of the metric-norm difference
/// `|grad_{g1} u1 - grad_{g2} u2|_{g2}` (chart components are gauge, so the
/// comparison is made in the geometric norm).
pub fn gradient_gap(
    u1: &ScalarField,
    g1: &MetricField,
    u2: &ScalarField,
    g2: &MetricField,
) -> Result<f64> {
    let x1 = gradient_field(u1, g1)?;
    let x2 = gradient_field(u2, g2)?;
    let m = g1.m();
    let n = g1.grid.num_nodes();
    let mut worst = 0.0f64;
    for node in 0..n {
        let mut s = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let di = x1.components[i].values[node] - x2.components[i].values[node];
                let dj = x1.components[j].values[node] - x2.components[j].values[node];
                s += (g2.g(node, i, j) * di * dj.conj()).re;
            }
        }
        worst = worst.max(s.max(0.0).sqrt());
    }
    Ok(worst)
}

/// Principal angles between the complex spans of two orthonormal families
/// (via the singular values of the cross-Gram in the `basis` weights).
pub fn principal_angles(a: &PotentialBasis, b: &PotentialBasis) -> Vec<f64> {
    let k = a.functions.len().min(b.functions.len());
    if k == 0 {
        return Vec::new();
    }
    let mut gram = DMatrix::<C64>::zeros(a.functions.len(), b.functions.len());
    for i in 0..a.functions.len() {
        for j in 0..b.functions.len() {
            gram[(i, j)] = a.inner(&a.functions[i], &b.functions[j]);
        }
    }
    let svd = gram.svd(false, false);
    let mut out: Vec<f64> =
        svd.singular_values.iter().map(|s| s.min(1.0).acos()).collect();
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}
