//! Holomorphy potentials, Poisson brackets, the Bando characters `f_k` and
//! total character `F_t`, and the perturbed Mabuchi energy with its
//! derivative identity.
//!
//! Sign conventions follow the displayed pairing
//! `(1/2m pi) int u S(omega,t) omega^m = -F_t(grad' u)` verbatim.

use crate::curvature::{curvature, perturbed_scalar_fast, sigma_from, PerturbedScalar};
use crate::error::{KgError, Result};
use crate::field::{
    d_antiholo, d_holo, integrate_scalar, weighted_mean, Grid, MetricField, ScalarField,
};
use crate::poisson::solve_poisson;
use crate::{C64, I};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Holomorphy acceptance threshold: spectral grids resolve `dbar X` to
/// machine level, chart finite differences do not.
pub fn holomorphy_tol(grid: &Grid) -> f64 {
    match grid {
        Grid::Torus(_) => 1e-8,
        Grid::Chart(_) => 1e-5,
    }
}

/// A candidate holomorphic vector field `X^i d/dz^i` with its measured
/// holomorphy residual and optional Hamiltonian potential.
pub struct HolomorphicVectorField {
    pub components: Vec<ScalarField>,
    /// sup norm of `dbar X`
    pub residual: f64,
    pub hamiltonian: Option<ScalarField>,
}

impl HolomorphicVectorField {
    /// The constant field `d/dz^dir` on a torus (holomorphic, but not
    /// Hamiltonian: the torus has no Hamiltonian holomorphic fields).
    pub fn torus_constant(grid: &std::sync::Arc<Grid>, dir: usize) -> Result<Self> {
        grid.as_torus()?;
        let m = grid.m();
        let components = (0..m)
            .map(|i| {
                ScalarField::constant(
                    grid.clone(),
                    if i == dir { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) },
                )
            })
            .collect();
        Ok(HolomorphicVectorField { components, residual: 0.0, hamiltonian: None })
    }
}

/// `grad' u = g^{i jbar} (du/dzbar^j) d/dz^i` with its holomorphy residual;
/// acceptance is the caller's decision.
pub fn gradient_field(u: &ScalarField, g: &MetricField) -> Result<HolomorphicVectorField> {
    let m = g.m();
    let n = u.grid.num_nodes();
    let du_bar = d_antiholo(u)?;
    let mut components = Vec::with_capacity(m);
    for i in 0..m {
        let vals: Vec<C64> = (0..n)
            .map(|node| {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..m {
                    // g^{i jbar} = (G^{-1})_{ji}
                    s += g.ginv(node, j, i) * du_bar[j].values[node];
                }
                s
            })
            .collect();
        components.push(ScalarField::new(u.grid.clone(), vals, false));
    }
    let residual = holomorphy_residual(&components, u, g)?;
    Ok(HolomorphicVectorField { components, residual, hamiltonian: Some(u.clone()) })
}

/// Sup norm of `dbar X` for `X = grad' u`. On chart grids the derivative
/// of the vector component is expanded through sphere-scalar derivatives
/// of `u` and the metric ratio (chart components are never re-differenced
/// near the poles).
fn holomorphy_residual(
    components: &[ScalarField],
    u: &ScalarField,
    g: &MetricField,
) -> Result<f64> {
    match g.grid.as_ref() {
        Grid::Torus(t) => {
            let mut worst = 0.0f64;
            for comp in components {
                let ops: Vec<crate::torus::DerivOp> =
                    (0..t.m).map(crate::torus::DerivOp::Dzbar).collect();
                let ds = t.apply_ops(&comp.values, &ops);
                for d in ds {
                    let sup = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    worst = worst.max(sup);
                }
            }
            Ok(worst)
        }
        Grid::Chart(c) => {
            // dbar X = dbar(g^{11bar}) u_zbar + g^{11bar} u_zbarzbar
            let rho = g
                .chart_ratio()
                .ok_or_else(|| KgError::invalid("chart metric lacks FS ratio"))?;
            let u_zbar = c.dzbar(&u.values);
            let u_zbzb = c.hess_zbar_zbar(&u.values);
            let rho_zbar = c.dzbar(rho);
            let mut worst = 0.0f64;
            for idx in 0..c.num_nodes() {
                let z = c.z(idx);
                let d = 1.0 + z.norm_sqr();
                let gfs = crate::field::fs_density_cp1(z.norm_sqr());
                let gval = g.g(idx, 0, 0);
                // d_zbar g = (d_zbar g_FS) rho + g_FS d_zbar rho;
                // d_zbar g_FS = -2 z g_FS / (1+r^2)
                let dg = C64::new(-2.0, 0.0) * z * gfs / d * rho[idx] + gfs * rho_zbar[idx];
                let dginv = -dg / (gval * gval);
                let resid = dginv * u_zbar[idx] + u_zbzb[idx] / gval;
                worst = worst.max(resid.norm());
            }
            Ok(worst)
        }
    }
}

/// Poisson bracket `{u,v} = g^{i jbar}(u_jbar v_i - v_jbar u_i)`.
/// For real inputs the value is purely imaginary.
pub fn poisson_bracket(u: &ScalarField, v: &ScalarField, g: &MetricField) -> Result<ScalarField> {
    let m = g.m();
    let n = u.grid.num_nodes();
    let du = d_holo(u)?;
    let dv = d_holo(v)?;
    let dub = d_antiholo(u)?;
    let dvb = d_antiholo(v)?;
    let vals: Vec<C64> = (0..n)
        .map(|node| {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..m {
                for j in 0..m {
                    let gij = g.ginv(node, j, i); // g^{i jbar}
                    s += gij
                        * (dub[j].values[node] * dv[i].values[node]
                            - dvb[j].values[node] * du[i].values[node]);
                }
            }
            s
        })
        .collect();
    Ok(ScalarField::new(u.grid.clone(), vals, false))
}

const MEAN_ZERO_TOL: f64 = 1e-8;

/// Total Bando character `F_t(grad' u) = -(1/2m pi) int u S(omega,t) omega^m`.
///
/// Errors on non-normalized `u` and on potentials whose gradient field
/// fails the holomorphy threshold (the pairing is only a character on
/// holomorphy potentials).
pub fn bando_total(u: &ScalarField, g: &MetricField, t: f64) -> Result<C64> {
    let ps = perturbed_scalar_fast(g, t)?;
    bando_total_with(&ps, u, g)
}

/// As [`bando_total`] with a precomputed perturbed scalar.
pub fn bando_total_with(ps: &PerturbedScalar, u: &ScalarField, g: &MetricField) -> Result<C64> {
    let mean = integrate_scalar(u, g).norm() / g.total_volume();
    if mean > MEAN_ZERO_TOL * u.norm_inf().max(1.0) {
        return Err(KgError::Normalization(format!(
            "int u omega^m = {mean:.3e} (must vanish)"
        )));
    }
    let x = gradient_field(u, g)?;
    let tol = holomorphy_tol(&g.grid);
    if x.residual > tol {
        return Err(KgError::NotHolomorphic { residual: x.residual, tol });
    }
    let m = g.m() as f64;
    let pairing = integrate_scalar(&u.mul(&ps.s), g);
    Ok(-pairing / (2.0 * m * PI))
}

/// `f_1` by the potential route on m = 1 manifolds: solve
/// `i ddbar F_1 = c_1 - H c_1` (harmonic part `H c_1 = (int c_1 / int
/// omega) omega`, constant multiples of the volume form being the only
/// harmonic (1,1)-forms on a surface), then `f_1(X) = int X(F_1) omega`.
pub fn bando_f1_via_potential(x: &HolomorphicVectorField, g: &MetricField) -> Result<C64> {
    let m = g.m();
    if m != 1 {
        return Err(KgError::invalid("f_1 potential route is implemented for m = 1"));
    }
    let tol = holomorphy_tol(&g.grid);
    if x.residual > tol {
        return Err(KgError::NotHolomorphic { residual: x.residual, tol });
    }
    let curv = curvature(g)?;
    let n = g.grid.num_nodes();
    let ints = crate::curvature::chern_integrals(&curv, g)?;
    let sigma_bar = ints[1] / g.total_volume();
    // Delta_g F = -i c1 / g - sigma_bar  (scalar form of c1 - Hc1 = i ddbar F)
    let rhs_vals: Vec<C64> = (0..n)
        .map(|node| {
            let gamma = curv.chern[1].values[node].coeff(0b1, 0b1);
            -I * gamma / g.g(node, 0, 0) - sigma_bar
        })
        .collect();
    let rhs = ScalarField::new(g.grid.clone(), rhs_vals, false);
    let defect = rhs.reality_defect();
    if defect > 1e-7 {
        return Err(KgError::invalid(format!("F_1 source not real: {defect:.3e}")));
    }
    let f1_pot = solve_poisson(&rhs.into_real(), g)?;
    let df = d_holo(&f1_pot)?;
    let lie = x.components[0].mul(&df[0]);
    Ok(integrate_scalar(&lie, g))
}

/// A sampled family of potentials joining `omega_{g0}` to
/// `omega_{g0} + i ddbar phi_1`, with `phi_0 = 0`.
pub enum KahlerPath {
    /// `phi_s = s phi_1`
    Linear { phi1: ScalarField },
    /// cubic reparametrization `p(s) = 3 s^2 - 2 s^3` of the segment
    Reparam { phi1: ScalarField },
    /// `phi_s = s phi_1 + s (1-s) bump` (genuinely distinct image)
    Detour { phi1: ScalarField, bump: ScalarField },
    /// `phi_s = (1-s) phi_from + s phi_to` between two potentials over
    /// one base metric
    Segment { from: ScalarField, to: ScalarField },
}

impl KahlerPath {
    pub fn phi_at(&self, s: f64) -> ScalarField {
        match self {
            KahlerPath::Linear { phi1 } => phi1.scale(C64::new(s, 0.0)),
            KahlerPath::Reparam { phi1 } => {
                phi1.scale(C64::new(3.0 * s * s - 2.0 * s * s * s, 0.0))
            }
            KahlerPath::Detour { phi1, bump } => {
                phi1.scale(C64::new(s, 0.0)).add(&bump.scale(C64::new(s * (1.0 - s), 0.0)))
            }
            KahlerPath::Segment { from, to } => {
                from.scale(C64::new(1.0 - s, 0.0)).add(&to.scale(C64::new(s, 0.0)))
            }
        }
    }

    pub fn phi_dot_at(&self, s: f64) -> ScalarField {
        match self {
            KahlerPath::Linear { phi1 } => phi1.clone(),
            KahlerPath::Reparam { phi1 } => phi1.scale(C64::new(6.0 * s - 6.0 * s * s, 0.0)),
            KahlerPath::Detour { phi1, bump } => {
                phi1.add(&bump.scale(C64::new(1.0 - 2.0 * s, 0.0)))
            }
            KahlerPath::Segment { from, to } => to.sub(from),
        }
    }
}

const MABUCHI_RICHARDSON_TOL: f64 = 1e-8;

/// Perturbed Mabuchi energy
/// `M_t = -int_0^1 ds int phi_dot (S(omega_s,t) - sigma(t)) omega_s^m`
/// by composite Simpson in `s`, doubling the node count until the
/// Richardson gap falls below 1e-8.
pub fn mabuchi_energy(g0: &MetricField, path: &KahlerPath, t: f64) -> Result<f64> {
    let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
    // sigma(t) is metric-independent in the class; evaluate once at the start
    let curv0 = curvature(&metric_at(g0, path, 0.0)?)?;
    let sig = sigma_from(&curv0, g0, t)?;
    let mut sample = |num: u64, den: u64| -> Result<f64> {
        let key = num * (1u64 << 32) / den;
        if let Some(v) = cache.get(&key) {
            return Ok(*v);
        }
        let s = num as f64 / den as f64;
        let gs = metric_at(g0, path, s)?;
        let ps = perturbed_scalar_fast(&gs, t)?;
        let dev = ps.s.add_scalar(C64::new(-sig, 0.0));
        let v = -integrate_scalar(&path.phi_dot_at(s).mul(&dev), &gs).re;
        cache.insert(key, v);
        Ok(v)
    };
    let mut intervals = 8u64; // 9 Simpson nodes
    let mut prev: Option<f64> = None;
    loop {
        let mut acc = sample(0, intervals)? + sample(intervals, intervals)?;
        for j in 1..intervals {
            acc += sample(j, intervals)? * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        let val = acc / (3.0 * intervals as f64);
        if let Some(p) = prev {
            if (val - p).abs() < MABUCHI_RICHARDSON_TOL {
                return Ok(val);
            }
        }
        prev = Some(val);
        intervals *= 2;
        if intervals > 256 {
            return Err(KgError::NoConvergence {
                iters: 256,
                history: vec![prev.unwrap_or(f64::NAN)],
            });
        }
    }
}

fn metric_at(g0: &MetricField, path: &KahlerPath, s: f64) -> Result<MetricField> {
    let phi = path.phi_at(s);
    MetricField::from_potential(g0, &phi)
}

/// Both sides of the Mabuchi derivative identity
/// `d/dr nu_t(omega_r)|_0 = 2 m pi F_t(grad' u)` along `phi_r = r u`.
pub struct DerivativeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

pub fn mabuchi_derivative_check(
    g: &MetricField,
    u: &ScalarField,
    t: f64,
) -> Result<DerivativeCheck> {
    let m = g.m() as f64;
    let u0 = {
        let mean = weighted_mean(u, g);
        u.add_scalar(-mean).into_real()
    };
    let rhs = (2.0 * m * PI * bando_total(&u0, g, t)?).re;
    // Richardson-extrapolated central difference of nu_t(r u) at r = 0
    let nu = |r: f64| -> Result<f64> {
        if r == 0.0 {
            return Ok(0.0);
        }
        let path = KahlerPath::Linear { phi1: u0.scale(C64::new(r, 0.0)) };
        mabuchi_energy(g, &path, t)
    };
    let eps = 1e-3 * (1.0 / u0.norm_inf().max(1e-6)).min(1.0);
    let d1 = (nu(eps)? - nu(-eps)?) / (2.0 * eps);
    let d2 = (nu(eps / 2.0)? - nu(-eps / 2.0)?) / eps;
    let lhs = (4.0 * d2 - d1) / 3.0;
    Ok(DerivativeCheck { lhs, rhs, gap: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartGrid;
    use crate::field::random_potential;
    use crate::fs::{cp1_mobius_potential, cp1_rotation_hamiltonians};
    use crate::rng::CounterRng;
    use crate::torus::TorusGrid;
    use std::sync::Arc;

    fn torus1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::Torus(TorusGrid::new(1, n).unwrap()))
    }

    fn cp1(nr: usize, nt: usize) -> Arc<Grid> {
        Arc::new(Grid::Chart(ChartGrid::full(nr, nt).unwrap()))
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let grid = torus1(16);
        let g = MetricField::flat(grid.clone()).unwrap();
        let u = ScalarField::constant(grid, C64::new(2.0, 0.0));
        let x = gradient_field(&u, &g).unwrap();
        assert!(x.components[0].norm_inf() < 1e-13);
        assert!(x.residual < 1e-13);
    }

    #[test]
    fn cp1_rotation_hamiltonian_gradient() {
        // u = n3: grad' u = 4 pi z d/dz (in the 1/2pi FS normalization)
        let grid = cp1(96, 24);
        let g = MetricField::fubini_study(grid.clone()).unwrap();
        let u = cp1_rotation_hamiltonians(&grid)[2].clone();
        let x = gradient_field(&u, &g).unwrap();
        assert!(x.residual < 1e-5, "residual {}", x.residual);
        let chart = grid.as_chart().unwrap();
        for idx in 0..grid.num_nodes() {
            let z = chart.z(idx);
            if z.norm() > 8.0 {
                continue;
            }
            let want = 4.0 * PI * z;
            assert!(
                (x.components[0].values[idx] - want).norm() < 1e-4 * (1.0 + want.norm()),
                "at {z}: {} vs {}",
                x.components[0].values[idx],
                want
            );
        }
    }

    #[test]
    fn torus_cosine_is_not_holomorphic() {
        let grid = torus1(32);
        let g = MetricField::flat(grid.clone()).unwrap();
        let u = ScalarField::from_fn(grid.clone(), |i| {
            let p = grid.as_torus().unwrap().node_point(i);
            C64::new((2.0 * PI * p[0]).cos(), 0.0)
        });
        let x = gradient_field(&u, &g).unwrap();
        assert!(x.residual > 1.0, "expected a gross residual, got {}", x.residual);
    }

    #[test]
    fn bracket_antisymmetry_and_constants() {
        let grid = torus1(32);
        let g = MetricField::flat(grid.clone()).unwrap();
        let rng = CounterRng::new(4).stream("bracket");
        let t = grid.as_torus().unwrap();
        let u = ScalarField::new(grid.clone(), t.random_band_limited(&rng.substream(0), 3, 1.0), true);
        let c = ScalarField::constant(grid.clone(), C64::new(3.0, 0.0));
        let uu = poisson_bracket(&u, &u, &g).unwrap();
        assert!(uu.norm_inf() < 1e-10);
        let uc = poisson_bracket(&u, &c, &g).unwrap();
        assert!(uc.norm_inf() < 1e-12);
    }

    #[test]
    fn su2_structure_constant() {
        // {n1, n2} = 4 pi i n3 and cyclic
        let grid = cp1(96, 24);
        let g = MetricField::fubini_study(grid.clone()).unwrap();
        let n = cp1_rotation_hamiltonians(&grid);
        let lam = C64::new(0.0, 4.0 * PI);
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let br = poisson_bracket(&n[a], &n[b], &g).unwrap();
            let want = n[c].scale(lam);
            let diff = br.sub(&want).norm_inf();
            assert!(diff < 1e-4, "{{n{a},n{b}}} vs 4 pi i n{c}: {diff}");
        }
    }

    #[test]
    fn jacobi_identity() {
        let grid = torus1(32);
        let g0 = MetricField::flat(grid.clone()).unwrap();
        let rng = CounterRng::new(14).stream("jacobi");
        let phi = random_potential(&grid, &rng.substream(9), 2, 0.05).unwrap();
        let g = MetricField::from_potential(&g0, &phi).unwrap();
        let t = grid.as_torus().unwrap();
        let u = ScalarField::new(grid.clone(), t.random_band_limited(&rng.substream(0), 2, 1.0), true);
        let v = ScalarField::new(grid.clone(), t.random_band_limited(&rng.substream(1), 2, 1.0), true);
        let w = ScalarField::new(grid.clone(), t.random_band_limited(&rng.substream(2), 2, 1.0), true);
        let j1 = poisson_bracket(&u, &poisson_bracket(&v, &w, &g).unwrap(), &g).unwrap();
        let j2 = poisson_bracket(&v, &poisson_bracket(&w, &u, &g).unwrap(), &g).unwrap();
        let j3 = poisson_bracket(&w, &poisson_bracket(&u, &v, &g).unwrap(), &g).unwrap();
        let total = j1.add(&j2).add(&j3);
        let scale = j1.norm_inf().max(1.0);
        assert!(total.norm_inf() / scale < 1e-8, "jacobi defect {}", total.norm_inf());
    }

    #[test]
    fn bando_total_vanishes_on_cp1_fs() {
        let grid = cp1(96, 24);
        let g = MetricField::fubini_study(grid.clone()).unwrap();
        let u = cp1_rotation_hamiltonians(&grid)[2].clone();
        let u = {
            let mean = weighted_mean(&u, &g);
            u.add_scalar(-mean).into_real()
        };
        for t in [0.0, 0.1] {
            let f = bando_total(&u, &g, t).unwrap();
            assert!(f.norm() < 1e-9, "F_t = {f}");
        }
    }

    #[test]
    fn bando_total_linearity() {
        // the sup-norm holomorphy gate is pole-limited: radial resolution
        // at the production scale keeps the residual under 1e-5
        let grid = cp1(256, 32);
        let g = MetricField::fubini_study(grid.clone()).unwrap();
        let n = cp1_rotation_hamiltonians(&grid);
        let center = |f: &ScalarField| {
            let mean = weighted_mean(f, &g);
            f.add_scalar(-mean).into_real()
        };
        let u = center(&n[0]);
        let v = center(&n[2]);
        let (a, b) = (1.7, -0.4);
        let au_bv = center(&u.scale(C64::new(a, 0.0)).add(&v.scale(C64::new(b, 0.0))));
        let ps = perturbed_scalar_fast(&g, 0.05).unwrap();
        let f_ab = bando_total_with(&ps, &au_bv, &g).unwrap();
        let fu = bando_total_with(&ps, &u, &g).unwrap();
        let fv = bando_total_with(&ps, &v, &g).unwrap();
        let lin = (f_ab - (fu * a + fv * b)).norm();
        assert!(lin < 1e-10, "linearity defect {lin}");
    }

    #[test]
    fn bando_rejects_bad_inputs() {
        let grid = torus1(32);
        let g = MetricField::flat(grid.clone()).unwrap();
        // nonzero mean
        let u = ScalarField::constant(grid.clone(), C64::new(1.0, 0.0));
        assert!(matches!(bando_total(&u, &g, 0.0), Err(KgError::Normalization(_))));
        // mean-zero but not a holomorphy potential
        let v = ScalarField::from_fn(grid.clone(), |i| {
            let p = grid.as_torus().unwrap().node_point(i);
            C64::new((2.0 * PI * p[0]).cos(), 0.0)
        });
        assert!(matches!(bando_total(&v, &g, 0.0), Err(KgError::NotHolomorphic { .. })));
    }

    #[test]
    fn f1_flat_torus_vanishes() {
        let grid = torus1(32);
        let g = MetricField::flat(grid.clone()).unwrap();
        let x = HolomorphicVectorField::torus_constant(&grid, 0).unwrap();
        let f1 = bando_f1_via_potential(&x, &g).unwrap();
        assert!(f1.norm() < 1e-12, "f1 = {f1}");
    }

    #[test]
    fn f1_perturbed_torus_invariance() {
        let grid = torus1(64);
        let g0 = MetricField::flat(grid.clone()).unwrap();
        let rng = CounterRng::new(5).stream("f1-inv");
        let phi = random_potential(&grid, &rng, 3, 0.05).unwrap();
        let g = MetricField::from_potential(&g0, &phi).unwrap();
        let x = HolomorphicVectorField::torus_constant(&grid, 0).unwrap();
        let f1 = bando_f1_via_potential(&x, &g).unwrap();
        assert!(f1.norm() < 1e-6, "f1 = {f1}");
    }

    #[test]
    fn mabuchi_constant_path_and_reversal() {
        let grid = torus1(32);
        let g = MetricField::flat(grid.clone()).unwrap();
        let zero = ScalarField::zeros(grid.clone());
        let m0 = mabuchi_energy(&g, &KahlerPath::Linear { phi1: zero }, 0.1).unwrap();
        assert!(m0.abs() < 1e-14);
        let rng = CounterRng::new(6).stream("mab-rev");
        let phi1 = random_potential(&grid, &rng, 2, 0.05).unwrap();
        let fwd = mabuchi_energy(&g, &KahlerPath::Linear { phi1: phi1.clone() }, 0.1).unwrap();
        let back = mabuchi_energy(
            &g,
            &KahlerPath::Segment { from: phi1.clone(), to: ScalarField::zeros(grid.clone()) },
            0.1,
        )
        .unwrap();
        assert!((fwd + back).abs() < 1e-8, "out-and-back = {}", fwd + back);
    }

    #[test]
    fn mabuchi_positive_and_quadratic_near_flat() {
        let grid = torus1(32);
        let g = MetricField::flat(grid.clone()).unwrap();
        let mk = |eps: f64| {
            ScalarField::from_fn(grid.clone(), |i| {
                let p = grid.as_torus().unwrap().node_point(i);
                C64::new(eps * (2.0 * PI * p[0]).cos(), 0.0)
            })
        };
        let t = 0.1;
        let v1 = mabuchi_energy(&g, &KahlerPath::Linear { phi1: mk(0.002) }, t).unwrap();
        let v2 = mabuchi_energy(&g, &KahlerPath::Linear { phi1: mk(0.004) }, t).unwrap();
        assert!(v1 > 0.0, "nu_t should be positive near the flat minimum: {v1}");
        let ratio = v2 / v1;
        assert!((ratio - 4.0).abs() < 0.05, "quadratic scaling ratio {ratio}");
    }

    #[test]
    fn derivative_check_trivial_and_fs() {
        let grid = cp1(64, 16);
        let g = MetricField::fubini_study(grid.clone()).unwrap();
        let u = cp1_rotation_hamiltonians(&grid)[2].clone();
        let r = mabuchi_derivative_check(&g, &u, 0.1).unwrap();
        assert!(
            r.gap <= (1e-6f64).max(1e-4 * r.rhs.abs()),
            "lhs {} rhs {} gap {}",
            r.lhs,
            r.rhs,
            r.gap
        );
        let zero = ScalarField::zeros(grid.clone());
        let r0 = mabuchi_derivative_check(&g, &zero, 0.1).unwrap();
        assert!(r0.lhs.abs() < 1e-12 && r0.rhs.abs() < 1e-12);
    }
}
