//! Fields over the discretized manifolds: scalars, pointwise forms, and
//! Hermitian metric fields, plus integration and potential deformations.

use crate::algebra::{subsets, wedge, PQForm};
use crate::chart::ChartGrid;
use crate::error::{KgError, Result};
use crate::reduce::pairwise_sum_c;
use crate::torus::{DerivOp, TorusGrid};
use crate::{top_volume_factor, C64, I};
use std::sync::Arc;

/// A discretized model manifold.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Torus(TorusGrid),
    Chart(ChartGrid),
}

impl Grid {
    pub fn m(&self) -> usize {
        match self {
            Grid::Torus(t) => t.m,
            Grid::Chart(_) => 1,
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            Grid::Torus(t) => t.num_nodes(),
            Grid::Chart(c) => c.num_nodes(),
        }
    }

    pub fn node_weight(&self, idx: usize) -> f64 {
        match self {
            Grid::Torus(t) => t.node_weight(),
            Grid::Chart(c) => c.node_weight(idx),
        }
    }

    pub fn manifold_tag(&self) -> &'static str {
        match self {
            Grid::Torus(_) => "torus",
            Grid::Chart(_) => "cp1",
        }
    }

    pub fn as_torus(&self) -> Result<&TorusGrid> {
        match self {
            Grid::Torus(t) => Ok(t),
            _ => Err(KgError::invalid("operation requires a torus grid")),
        }
    }

    pub fn as_chart(&self) -> Result<&ChartGrid> {
        match self {
            Grid::Chart(c) => Ok(c),
            _ => Err(KgError::invalid("operation requires a chart grid")),
        }
    }
}

/// Complex scalar function on a grid. Fields flagged `real` satisfy the
/// realness invariant `|imag| <= 1e-10 * sup|field|` (checked where the
/// contract promises it, see [`ScalarField::reality_defect`]).
///
/// On chart grids, scalar fields are smooth functions on the sphere: the
/// finite-difference stencils extend them across the poles by the sphere
/// reflection rule.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<C64>,
    pub real: bool,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<C64>, real: bool) -> Self {
        assert_eq!(values.len(), grid.num_nodes());
        ScalarField { grid, values, real }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.num_nodes();
        ScalarField { grid, values: vec![C64::new(0.0, 0.0); n], real: true }
    }

    pub fn constant(grid: Arc<Grid>, c: C64) -> Self {
        let n = grid.num_nodes();
        ScalarField { grid, values: vec![c; n], real: c.im == 0.0 }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(usize) -> C64) -> Self {
        let values: Vec<C64> = (0..grid.num_nodes()).map(f).collect();
        let real = values.iter().all(|v| v.im == 0.0);
        ScalarField { grid, values, real }
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |imag| / max(1, sup|field|)`; the realness invariant bounds
    /// this by 1e-10 for real-flagged fields.
    pub fn reality_defect(&self) -> f64 {
        let sup = self.norm_inf().max(1.0);
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / sup
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: C64) -> Self {
        let values = self.values.iter().map(|v| v * c).collect();
        ScalarField { grid: self.grid.clone(), values, real: self.real && c.im == 0.0 }
    }

    pub fn add_scalar(&self, c: C64) -> Self {
        let values = self.values.iter().map(|v| v + c).collect();
        ScalarField { grid: self.grid.clone(), values, real: self.real && c.im == 0.0 }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        let values =
            self.values.iter().zip(other.values.iter()).map(|(a, b)| f(*a, *b)).collect();
        ScalarField { grid: self.grid.clone(), values, real: false }
    }

    /// Take the real part (used at contract boundaries where realness is
    /// promised, preventing roundoff drift in long iterations).
    pub fn into_real(mut self) -> Self {
        for v in self.values.iter_mut() {
            *v = C64::new(v.re, 0.0);
        }
        self.real = true;
        self
    }

    pub fn conj(&self) -> Self {
        let values = self.values.iter().map(|v| v.conj()).collect();
        ScalarField { grid: self.grid.clone(), values, real: self.real }
    }
}

/// Pointwise (p,q)-form field.
#[derive(Debug, Clone)]
pub struct FormField {
    pub grid: Arc<Grid>,
    pub p: usize,
    pub q: usize,
    pub values: Vec<PQForm>,
}

impl FormField {
    pub fn zero(grid: Arc<Grid>, p: usize, q: usize) -> Self {
        let m = grid.m();
        let n = grid.num_nodes();
        FormField { grid, p, q, values: vec![PQForm::zero(m, p, q); n] }
    }

    pub fn from_scalar(f: &ScalarField) -> Self {
        let m = f.grid.m();
        let values = f.values.iter().map(|&v| PQForm::scalar(m, v)).collect();
        FormField { grid: f.grid.clone(), p: 0, q: 0, values }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(KgError::invalid("wedge: fields on different grids"));
        }
        let values: Result<Vec<PQForm>> = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| wedge(a, b))
            .collect();
        Ok(FormField {
            grid: self.grid.clone(),
            p: self.p + other.p,
            q: self.q + other.q,
            values: values?,
        })
    }

    pub fn wedge_pow(&self, k: usize) -> Result<Self> {
        let m = self.grid.m();
        let mut acc = FormField {
            grid: self.grid.clone(),
            p: 0,
            q: 0,
            values: vec![PQForm::scalar(m, C64::new(1.0, 0.0)); self.values.len()],
        };
        for _ in 0..k {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.p == other.p && self.q == other.q && self.grid == other.grid);
        let values =
            self.values.iter().zip(other.values.iter()).map(|(a, b)| a.add(b)).collect();
        FormField { grid: self.grid.clone(), p: self.p, q: self.q, values }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let values = self.values.iter().map(|f| f.scale(c)).collect();
        FormField { grid: self.grid.clone(), p: self.p, q: self.q, values }
    }

    /// Holomorphic exterior derivative (torus grids only; spectral).
    pub fn d_holo(&self) -> Result<Self> {
        self.d_impl(true)
    }

    /// Antiholomorphic exterior derivative (torus grids only; spectral).
    pub fn d_antiholo(&self) -> Result<Self> {
        self.d_impl(false)
    }

    fn d_impl(&self, holo: bool) -> Result<Self> {
        let torus = self.grid.as_torus()?;
        let m = torus.m;
        let (p_out, q_out) = if holo { (self.p + 1, self.q) } else { (self.p, self.q + 1) };
        let mut out = FormField::zero(self.grid.clone(), p_out, q_out);
        let n = self.grid.num_nodes();
        for &imask in subsets(m, self.p) {
            for &jmask in subsets(m, self.q) {
                let coeff: Vec<C64> =
                    (0..n).map(|node| self.values[node].coeff(imask, jmask)).collect();
                for dir in 0..m {
                    let bit = 1u8 << dir;
                    let (tmask, omask, op): (u8, u8, DerivOp) = if holo {
                        (imask, jmask, DerivOp::Dz(dir))
                    } else {
                        (jmask, imask, DerivOp::Dzbar(dir))
                    };
                    if tmask & bit != 0 {
                        continue;
                    }
                    let _ = omask;
                    let dc = torus.apply_op(&coeff, op);
                    // sign: insert the new index in front of its own block,
                    // then sort; antiholomorphic insertion also passes the
                    // holomorphic block of length p.
                    let mut sign = merge_front_sign(bit, tmask);
                    if !holo && self.p % 2 == 1 {
                        sign = -sign;
                    }
                    let (ni, nj) =
                        if holo { (imask | bit, jmask) } else { (imask, jmask | bit) };
                    for node in 0..n {
                        out.values[node].add_to(ni, nj, dc[node] * sign);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Sign of sorting `[b] ++ mask` where `b` is a single index bit.
fn merge_front_sign(bit: u8, mask: u8) -> f64 {
    let b = bit.trailing_zeros();
    let below = (mask & (bit - 1)).count_ones();
    let _ = b;
    if below % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Hermitian positive metric field `g_{i jbar}` with cached inverse and
/// determinant. On chart grids the field additionally carries the
/// sphere-scalar ratio against the analytic Fubini-Study reference, which
/// is what the curvature pipeline differentiates.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub grid: Arc<Grid>,
    comps: Vec<C64>,
    inv: Vec<C64>,
    det: Vec<f64>,
    chart_ratio: Option<Vec<C64>>,
}

/// Fubini-Study metric density on the CP^1 chart in the normalization
/// `g = (1/2pi) d d-bar log(1+|z|^2)`, so that the class is c_1(O(1)).
pub fn fs_density_cp1(r2: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * (1.0 + r2) * (1.0 + r2))
}

impl MetricField {
    /// Flat metric (identity components) on a torus.
    pub fn flat(grid: Arc<Grid>) -> Result<Self> {
        let t = grid.as_torus()?;
        let m = t.m;
        let n = t.num_nodes();
        let mut comps = vec![C64::new(0.0, 0.0); n * m * m];
        for node in 0..n {
            for i in 0..m {
                comps[node * m * m + i * m + i] = C64::new(1.0, 0.0);
            }
        }
        Self::finalize(grid, comps, None)
    }

    /// Fubini-Study metric on a CP^1 chart grid.
    pub fn fubini_study(grid: Arc<Grid>) -> Result<Self> {
        let c = grid.as_chart()?;
        let n = c.num_nodes();
        let mut comps = vec![C64::new(0.0, 0.0); n];
        for idx in 0..n {
            let r2 = c.z(idx).norm_sqr();
            comps[idx] = C64::new(fs_density_cp1(r2), 0.0);
        }
        let ratio = vec![C64::new(1.0, 0.0); n];
        Self::finalize(grid, comps, Some(ratio))
    }

    /// `g = g0 + (d d-bar phi)` for a real potential; fails with the worst
    /// node if positivity is lost.
    pub fn from_potential(g0: &MetricField, phi: &ScalarField) -> Result<Self> {
        if phi.grid != g0.grid {
            return Err(KgError::invalid("potential on a different grid"));
        }
        if phi.reality_defect() > 1e-10 {
            return Err(KgError::invalid("potential must be real"));
        }
        let m = g0.grid.m();
        let n = g0.grid.num_nodes();
        match g0.grid.as_ref() {
            Grid::Torus(t) => {
                let mut comps = g0.comps.clone();
                for i in 0..m {
                    for j in i..m {
                        let h = t.apply_op(&phi.values, DerivOp::Mixed(i, j));
                        for node in 0..n {
                            comps[node * m * m + i * m + j] += h[node];
                            if j != i {
                                comps[node * m * m + j * m + i] += h[node].conj();
                            }
                        }
                    }
                }
                Self::finalize(g0.grid.clone(), comps, None)
            }
            Grid::Chart(c) => {
                let h = c.hess_mixed(&phi.values);
                let mut comps = g0.comps.clone();
                for node in 0..n {
                    comps[node] += C64::new(h[node].re, 0.0);
                }
                let ratio: Vec<C64> = (0..n)
                    .map(|idx| {
                        let r2 = c.z(idx).norm_sqr();
                        comps[idx] / fs_density_cp1(r2)
                    })
                    .collect();
                Self::finalize(g0.grid.clone(), comps, Some(ratio))
            }
        }
    }

    fn finalize(grid: Arc<Grid>, comps: Vec<C64>, ratio: Option<Vec<C64>>) -> Result<Self> {
        let m = grid.m();
        let n = grid.num_nodes();
        let mut inv = vec![C64::new(0.0, 0.0); comps.len()];
        let mut det = vec![0.0; n];
        let mut worst = (usize::MAX, f64::INFINITY);
        for node in 0..n {
            let base = node * m * m;
            // hermiticity
            for i in 0..m {
                for j in 0..m {
                    let defect = (comps[base + i * m + j] - comps[base + j * m + i].conj()).norm();
                    if defect > 1e-12 * (1.0 + comps[base].norm()) {
                        return Err(KgError::invalid(format!(
                            "metric not hermitian at node {node}: defect {defect:.3e}"
                        )));
                    }
                }
            }
            let min_eig = match m {
                1 => comps[base].re,
                2 => {
                    let a = comps[base].re;
                    let d = comps[base + 3].re;
                    let b = comps[base + 1];
                    let mid = (a + d) / 2.0;
                    let rad = ((a - d) / 2.0).hypot(b.norm());
                    mid - rad
                }
                _ => unreachable!(),
            };
            if min_eig < worst.1 {
                worst = (node, min_eig);
            }
            match m {
                1 => {
                    det[node] = comps[base].re;
                    inv[base] = C64::new(1.0 / comps[base].re, 0.0);
                }
                2 => {
                    let a = comps[base];
                    let b = comps[base + 1];
                    let c = comps[base + 2];
                    let d = comps[base + 3];
                    let dd = a * d - b * c;
                    det[node] = dd.re;
                    let idd = C64::new(1.0, 0.0) / dd;
                    inv[base] = d * idd;
                    inv[base + 1] = -b * idd;
                    inv[base + 2] = -c * idd;
                    inv[base + 3] = a * idd;
                }
                _ => unreachable!(),
            }
        }
        if worst.1 <= 0.0 {
            return Err(KgError::NotPositive { node: worst.0, min_eig: worst.1 });
        }
        Ok(MetricField { grid, comps, inv, det, chart_ratio: ratio })
    }

    pub fn m(&self) -> usize {
        self.grid.m()
    }

    pub fn g(&self, node: usize, i: usize, j: usize) -> C64 {
        let m = self.m();
        self.comps[node * m * m + i * m + j]
    }

    /// Inverse metric `g^{i jbar}` with `g^{i jbar} g_{k jbar} = delta_{ik}`.
    pub fn ginv(&self, node: usize, i: usize, j: usize) -> C64 {
        let m = self.m();
        // comps stores the matrix [g_{i jbar}]_{ij}; inv stores its matrix
        // inverse B with sum_j B_{ij} g_{j kbar}... we store plain matrix
        // inverse: (g^{-1})_{ij}; the contraction conventions used by
        // callers are documented per call site.
        self.inv[node * m * m + i * m + j]
    }

    pub fn det(&self, node: usize) -> f64 {
        self.det[node]
    }

    /// Smallest eigenvalue of the metric matrix at a node.
    pub fn min_eig(&self, node: usize) -> f64 {
        let m = self.m();
        let base = node * m * m;
        match m {
            1 => self.comps[base].re,
            2 => {
                let a = self.comps[base].re;
                let d = self.comps[base + 3].re;
                let b = self.comps[base + 1];
                (a + d) / 2.0 - ((a - d) / 2.0).hypot(b.norm())
            }
            _ => unreachable!(),
        }
    }

    /// Real density of `omega^m` against `dx^1 dy^1 ..`: `2^m m! det g`.
    pub fn vol_density(&self, node: usize) -> f64 {
        let m = self.m();
        let fact: f64 = (1..=m).product::<usize>() as f64;
        (2f64).powi(m as i32) * fact * self.det[node]
    }

    /// `int omega^m` over the manifold.
    pub fn total_volume(&self) -> f64 {
        let v: Vec<C64> = (0..self.grid.num_nodes())
            .map(|node| C64::new(self.vol_density(node) * self.grid.node_weight(node), 0.0))
            .collect();
        pairwise_sum_c(&v).re
    }

    /// Sphere-scalar ratio `g / g_FS` on chart grids.
    pub fn chart_ratio(&self) -> Option<&[C64]> {
        self.chart_ratio.as_deref()
    }

    /// The Kaehler form `omega = i g_{i jbar} dz^i ^ dzbar^j` as a field.
    pub fn omega(&self) -> FormField {
        let m = self.m();
        let mut out = FormField::zero(self.grid.clone(), 1, 1);
        for node in 0..self.grid.num_nodes() {
            for i in 0..m {
                for j in 0..m {
                    out.values[node].set(1 << i, 1 << j, I * self.g(node, i, j));
                }
            }
        }
        out
    }
}

/// Integrate a top-degree form field over the manifold (deterministic
/// pairwise reduction; real output for real forms).
pub fn integrate_top(form: &FormField) -> Result<C64> {
    let m = form.grid.m();
    if form.p != m || form.q != m {
        return Err(KgError::invalid(format!(
            "integrate: need an ({m},{m})-form, got ({},{})",
            form.p, form.q
        )));
    }
    let factor = top_volume_factor(m);
    let v: Vec<C64> = (0..form.grid.num_nodes())
        .map(|node| form.values[node].top() * factor * form.grid.node_weight(node))
        .collect();
    Ok(pairwise_sum_c(&v))
}

/// `int f omega_g^m`.
pub fn integrate_scalar(f: &ScalarField, g: &MetricField) -> C64 {
    assert_eq!(f.grid, g.grid);
    let v: Vec<C64> = (0..f.grid.num_nodes())
        .map(|node| f.values[node] * g.vol_density(node) * f.grid.node_weight(node))
        .collect();
    pairwise_sum_c(&v)
}

/// Volume-weighted mean `int f omega^m / int omega^m`.
pub fn weighted_mean(f: &ScalarField, g: &MetricField) -> C64 {
    integrate_scalar(f, g) / g.total_volume()
}

/// Subtract the volume-weighted mean.
pub fn project_mean_zero(f: &ScalarField, g: &MetricField) -> ScalarField {
    let mean = weighted_mean(f, g);
    f.add_scalar(-mean)
}

/// Random real potential, band-limited on tori / low spherical-harmonic
/// polynomial on the CP^1 chart, rescaled so the sup norm of its mixed
/// Hessian equals `hess_amplitude`. Scaling by the Hessian (not the
/// potential) is what keeps `g0 + ddbar phi` safely positive.
pub fn random_potential(
    grid: &Arc<Grid>,
    rng: &crate::rng::CounterRng,
    kmax: usize,
    hess_amplitude: f64,
) -> Result<ScalarField> {
    let raw = match grid.as_ref() {
        Grid::Torus(t) => {
            ScalarField::new(grid.clone(), t.random_band_limited(rng, kmax, 1.0), true)
        }
        Grid::Chart(c) => {
            let mut r = rng.clone();
            let n: Vec<Vec<f64>> = (0..grid.num_nodes())
                .map(|idx| {
                    let z = c.z(idx);
                    let d = 1.0 + z.norm_sqr();
                    vec![2.0 * z.re / d, 2.0 * z.im / d, (z.norm_sqr() - 1.0) / d]
                })
                .collect();
            let lin: Vec<f64> = (0..3).map(|_| r.symmetric()).collect();
            let quad: Vec<f64> = (0..9).map(|_| r.symmetric()).collect();
            ScalarField::from_fn(grid.clone(), |idx| {
                let mut v = 0.0;
                for a in 0..3 {
                    v += lin[a] * n[idx][a];
                    for b in 0..3 {
                        v += quad[a * 3 + b] * n[idx][a] * n[idx][b];
                    }
                }
                C64::new(v, 0.0)
            })
        }
    };
    let h = hess_mixed(&raw)?;
    let sup = h
        .iter()
        .flat_map(|comp| comp.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    Ok(raw.scale(C64::new(hess_amplitude / sup, 0.0)))
}

/// Holomorphic partials `(d f / dz^1, .., d f / dz^m)` of a scalar field.
pub fn d_holo(f: &ScalarField) -> Result<Vec<ScalarField>> {
    match f.grid.as_ref() {
        Grid::Torus(t) => {
            let ops: Vec<DerivOp> = (0..t.m).map(DerivOp::Dz).collect();
            Ok(t.apply_ops(&f.values, &ops)
                .into_iter()
                .map(|v| ScalarField::new(f.grid.clone(), v, false))
                .collect())
        }
        Grid::Chart(c) => Ok(vec![ScalarField::new(f.grid.clone(), c.dz(&f.values), false)]),
    }
}

/// Antiholomorphic partials of a scalar field.
pub fn d_antiholo(f: &ScalarField) -> Result<Vec<ScalarField>> {
    match f.grid.as_ref() {
        Grid::Torus(t) => {
            let ops: Vec<DerivOp> = (0..t.m).map(DerivOp::Dzbar).collect();
            Ok(t.apply_ops(&f.values, &ops)
                .into_iter()
                .map(|v| ScalarField::new(f.grid.clone(), v, false))
                .collect())
        }
        Grid::Chart(c) => Ok(vec![ScalarField::new(f.grid.clone(), c.dzbar(&f.values), false)]),
    }
}

/// Mixed complex Hessian components `d^2 f / dz^i dzbar^j` (m x m per node,
/// row-major in the returned vector).
pub fn hess_mixed(f: &ScalarField) -> Result<Vec<Vec<C64>>> {
    match f.grid.as_ref() {
        Grid::Torus(t) => {
            let mut ops = Vec::new();
            for i in 0..t.m {
                for j in 0..t.m {
                    ops.push(DerivOp::Mixed(i, j));
                }
            }
            Ok(t.apply_ops(&f.values, &ops))
        }
        Grid::Chart(c) => Ok(vec![c.hess_mixed(&f.values)]),
    }
}

/// Complex Laplacian `Delta_g f = g^{i jbar} d_i d_jbar f` (the trace of
/// the mixed Hessian against the metric).
pub fn laplacian(f: &ScalarField, g: &MetricField) -> Result<ScalarField> {
    let m = g.m();
    let h = hess_mixed(f)?;
    let n = f.grid.num_nodes();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for node in 0..n {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                // Delta f = g^{i jbar} f_{i jbar}; with the stored matrix
                // inverse, g^{i jbar} = (g^{-1})_{ji}.
                s += g.ginv(node, j, i) * h[i * m + j][node];
            }
        }
        out[node] = s;
    }
    Ok(ScalarField::new(f.grid.clone(), out, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use std::f64::consts::PI;

    fn torus1(n: usize) -> Arc<Grid> {
        Arc::new(Grid::Torus(TorusGrid::new(1, n).unwrap()))
    }

    #[test]
    fn flat_torus_volume_is_two_per_unit_cell() {
        let grid = torus1(16);
        let g = MetricField::flat(grid.clone()).unwrap();
        assert!((g.total_volume() - 2.0).abs() < 1e-13);
        let omega = g.omega();
        let vol = integrate_top(&omega.wedge_pow(1).unwrap()).unwrap();
        assert!((vol - C64::new(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn flat_torus_m2_volume() {
        let grid = Arc::new(Grid::Torus(TorusGrid::new(2, 8).unwrap()));
        let g = MetricField::flat(grid).unwrap();
        assert!((g.total_volume() - 8.0).abs() < 1e-12);
        let om2 = g.omega().wedge_pow(2).unwrap();
        let vol = integrate_top(&om2).unwrap();
        assert!((vol - C64::new(8.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fs_chart_volume_is_one() {
        let grid = Arc::new(Grid::Chart(ChartGrid::full(64, 32).unwrap()));
        let g = MetricField::fubini_study(grid).unwrap();
        assert!((g.total_volume() - 1.0).abs() < 1e-12, "vol = {}", g.total_volume());
        assert!((g.g(0, 0, 0).re - fs_density_cp1(g.grid.as_chart().unwrap().z(0).norm_sqr())).abs() < 1e-15);
    }

    #[test]
    fn metric_from_potential_cosine() {
        // phi = eps cos(2 pi x): g = 1 - eps pi^2 cos(2 pi x)
        let grid = torus1(32);
        let g0 = MetricField::flat(grid.clone()).unwrap();
        let eps = 1e-3;
        let phi = ScalarField::from_fn(grid.clone(), |i| {
            let p = grid.as_torus().unwrap().node_point(i);
            C64::new(eps * (2.0 * PI * p[0]).cos(), 0.0)
        });
        let g = MetricField::from_potential(&g0, &phi).unwrap();
        for node in 0..grid.num_nodes() {
            let x = grid.as_torus().unwrap().node_point(node)[0];
            let expected = 1.0 - eps * PI * PI * (2.0 * PI * x).cos();
            assert!((g.g(node, 0, 0).re - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn positivity_rejection() {
        let grid = torus1(32);
        let g0 = MetricField::flat(grid.clone()).unwrap();
        // eps large enough that 1 - eps pi^2 < 0
        let eps = 0.2;
        let phi = ScalarField::from_fn(grid.clone(), |i| {
            let p = grid.as_torus().unwrap().node_point(i);
            C64::new(eps * (2.0 * PI * p[0]).cos(), 0.0)
        });
        match MetricField::from_potential(&g0, &phi) {
            Err(KgError::NotPositive { min_eig, .. }) => {
                assert!(min_eig < 0.0);
            }
            other => panic!("expected positivity failure, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn stokes_on_torus() {
        // integral of d-bar(anything smooth) over the torus vanishes
        let grid = torus1(16);
        let t = grid.as_torus().unwrap();
        let rng = CounterRng::new(3).stream("stokes");
        let vals = t.random_band_limited(&rng, 3, 0.5);
        let f = ScalarField::new(grid.clone(), vals, true);
        // build the (1,0)-form f dz^1, take d-bar, integrate
        let mut ff = FormField::zero(grid.clone(), 1, 0);
        for node in 0..grid.num_nodes() {
            ff.values[node].set(0b1, 0, f.values[node]);
        }
        let db = ff.d_antiholo().unwrap();
        let integral = integrate_top(&db).unwrap();
        assert!(integral.norm() < 1e-12, "stokes defect {}", integral.norm());
    }

    #[test]
    fn integration_by_parts_torus() {
        // int (d u) ^ beta = - int u d beta for beta a (0,1)-form, m = 1
        let grid = torus1(32);
        let t = grid.as_torus().unwrap();
        let rng = CounterRng::new(9).stream("parts");
        let u_vals = t.random_band_limited(&rng.substream(1), 4, 1.0);
        let b_vals = t.random_band_limited(&rng.substream(2), 4, 1.0);
        let u = ScalarField::new(grid.clone(), u_vals, true);
        let mut beta = FormField::zero(grid.clone(), 0, 1);
        for node in 0..grid.num_nodes() {
            beta.values[node].set(0, 0b1, b_vals[node]);
        }
        let du = FormField::from_scalar(&u).d_holo().unwrap();
        let lhs = integrate_top(&du.wedge(&beta).unwrap()).unwrap();
        let dbeta = beta.d_holo().unwrap();
        let u_dbeta = FormField::from_scalar(&u).wedge(&dbeta).unwrap();
        let rhs = -integrate_top(&u_dbeta).unwrap();
        assert!((lhs - rhs).norm() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn laplacian_flat_eigenvalue() {
        let grid = torus1(32);
        let g = MetricField::flat(grid.clone()).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |i| {
            let p = grid.as_torus().unwrap().node_point(i);
            C64::new((2.0 * PI * p[0]).cos(), 0.0)
        });
        let lf = laplacian(&f, &g).unwrap();
        for (a, b) in lf.values.iter().zip(f.values.iter()) {
            assert!((a + PI * PI * b).norm() < 1e-10);
        }
    }
}
