//! Polar coordinate-chart grid on the affine chart of CP^1.
//!
//! Radial nodes are Gauss-Legendre points in `u = cos(psi)` where
//! `r = tan(psi/2)` is the chart radius, so quadrature of integrands that
//! are smooth on the sphere is spectrally accurate and nodes avoid both the
//! `r = 0` coordinate singularity and the antipodal pole. Angular nodes are
//! uniform. Radial differentiation is 4th-order finite differences: 5-point
//! Fornberg stencils in `psi` with ghost values across the poles supplied
//! by the sphere reflection `f(-psi, th) = f(psi, th + pi)`. Angular
//! differentiation is spectral (FFT per ring): polar operators divide
//! theta-derivatives by `r^2`, which near the coordinate pole amplifies
//! any angular truncation error beyond tolerance, so the periodic
//! direction uses the exact symbol.
//!
//! Scalar fields on this grid are understood as smooth functions on the
//! sphere; chart tensor components (metric coefficients and the like) are
//! never differentiated directly — geometry code routes them through
//! sphere-scalar ratios against the analytic Fubini-Study reference.

use crate::error::{KgError, Result};
use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
struct Stencil {
    /// radial node index supplying each of the 5 values
    idx: [usize; 5],
    /// whether the value is taken at `theta + pi` (pole reflection)
    flip: [bool; 5],
    w1: [f64; 5],
    w2: [f64; 5],
}

#[derive(Clone)]
pub struct ChartGrid {
    pub nr: usize,
    pub ntheta: usize,
    /// truncation radius; `f64::INFINITY` for the full-sphere grid
    pub r_trunc: f64,
    /// Fubini-Study area mass beyond the truncation radius
    pub tail_mass: f64,
    pub psi: Vec<f64>,
    pub r: Vec<f64>,
    /// Gauss-Legendre weights in u = cos(psi) (already affinely mapped)
    pub gl_w: Vec<f64>,
    stencils: Vec<Stencil>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChartGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartGrid")
            .field("nr", &self.nr)
            .field("ntheta", &self.ntheta)
            .field("r_trunc", &self.r_trunc)
            .finish()
    }
}

impl PartialEq for ChartGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nr == other.nr
            && self.ntheta == other.ntheta
            && self.r_trunc.to_bits() == other.r_trunc.to_bits()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(t) and derivative by recurrence
            let (mut p0, mut p1) = (1.0f64, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, t);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
        x[n - 1 - i] = t; // ascending
        w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Fornberg finite-difference weights on arbitrary nodes `xs` at point
/// `x0`, for derivative orders 0..=maxord.
fn fornberg(xs: &[f64], x0: f64, maxord: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![vec![0.0; maxord + 1]; n]; n];
    c[0][0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            for k in (0..=maxord.min(i)).rev() {
                let prev = if k > 0 { c[i - 1][j][k - 1] } else { 0.0 };
                c[i][j][k] = ((xs[i] - x0) * c[i - 1][j][k] - k as f64 * prev) / c3;
            }
        }
        for k in (0..=maxord.min(i)).rev() {
            let prev = if k > 0 { c[i - 1][i - 1][k - 1] } else { 0.0 };
            c[i][i][k] = c1 / c2 * (k as f64 * prev - (xs[i - 1] - x0) * c[i - 1][i - 1][k]);
        }
        c1 = c2;
    }
    (0..=maxord).map(|k| (0..n).map(|j| c[n - 1][j][k]).collect()).collect()
}

/// Derivative bundle of a sphere-scalar field in grid coordinates.
pub struct ChartDerivs {
    pub d_psi: Vec<C64>,
    pub d_psipsi: Vec<C64>,
    pub d_theta: Vec<C64>,
    pub d_thetatheta: Vec<C64>,
    pub d_psitheta: Vec<C64>,
}

impl ChartGrid {
    /// Full-sphere grid: quadrature covers all of CP^1 (zero tail mass).
    pub fn full(nr: usize, ntheta: usize) -> Result<Self> {
        Self::build(nr, ntheta, None)
    }

    /// Truncated grid covering `r <= r_trunc` (quadrature only; the
    /// outermost stencils fall back to one-sided differences).
    pub fn truncated(nr: usize, ntheta: usize, r_trunc: f64) -> Result<Self> {
        if !(r_trunc > 0.0) {
            return Err(KgError::invalid("chart: truncation radius must be positive"));
        }
        Self::build(nr, ntheta, Some(r_trunc))
    }

    fn build(nr: usize, ntheta: usize, trunc: Option<f64>) -> Result<Self> {
        if nr < 8 || ntheta < 8 || ntheta % 2 != 0 {
            return Err(KgError::invalid(
                "chart: need nr >= 8 and even ntheta >= 8",
            ));
        }
        let (x, xw) = gauss_legendre(nr);
        // map [-1,1] -> [u_min, 1]; u = cos(psi), psi ascending as u descends
        let u_min = match trunc {
            None => -1.0,
            Some(rt) => {
                let pm = 2.0 * rt.atan();
                pm.cos()
            }
        };
        let half = (1.0 - u_min) / 2.0;
        let mut psi = Vec::with_capacity(nr);
        let mut gl_w = Vec::with_capacity(nr);
        for i in 0..nr {
            // descending u <-> ascending psi
            let u = u_min + half * (x[nr - 1 - i] + 1.0);
            psi.push(u.clamp(-1.0, 1.0).acos());
            gl_w.push(xw[nr - 1 - i] * half);
        }
        let r: Vec<f64> = psi.iter().map(|p| (p / 2.0).tan()).collect();
        let full_sphere = trunc.is_none();
        let tail_mass = if full_sphere { 0.0 } else { (1.0 + u_min) / 2.0 };

        // radial stencils
        let mut stencils = Vec::with_capacity(nr);
        for j in 0..nr {
            let mut pts = [0.0f64; 5];
            let mut idx = [0usize; 5];
            let mut flip = [false; 5];
            for s in 0..5usize {
                let off = s as isize - 2;
                let jj = j as isize + off;
                if jj < 0 {
                    // reflect across psi = 0 (always valid: r = 0 is a
                    // coordinate point, not a boundary)
                    let k = (-jj - 1) as usize;
                    pts[s] = -psi[k];
                    idx[s] = k;
                    flip[s] = true;
                } else if jj as usize >= nr {
                    if full_sphere {
                        let k = 2 * nr - 1 - jj as usize;
                        pts[s] = 2.0 * std::f64::consts::PI - psi[k];
                        idx[s] = k;
                        flip[s] = true;
                    } else {
                        // one-sided: shift the whole stencil down
                        // handled below by re-centering
                        pts[s] = f64::NAN;
                        idx[s] = usize::MAX;
                    }
                } else {
                    pts[s] = psi[jj as usize];
                    idx[s] = jj as usize;
                }
            }
            if pts.iter().any(|p| p.is_nan()) {
                // truncated grid near the outer edge: one-sided 5-point set
                let lo = nr - 5;
                for s in 0..5 {
                    pts[s] = psi[lo + s];
                    idx[s] = lo + s;
                    flip[s] = false;
                }
            }
            // reflection must preserve sorted points for fornberg stability:
            // points may be unsorted near the poles; fornberg handles any order
            let ws = fornberg(&pts, psi[j], 2);
            let mut w1 = [0.0; 5];
            let mut w2 = [0.0; 5];
            for s in 0..5 {
                w1[s] = ws[1][s];
                w2[s] = ws[2][s];
            }
            stencils.push(Stencil { idx, flip, w1, w2 });
        }

        let mut planner = FftPlanner::<f64>::new();
        Ok(ChartGrid {
            nr,
            ntheta,
            r_trunc: trunc.unwrap_or(f64::INFINITY),
            tail_mass,
            psi,
            r,
            gl_w,
            stencils,
            fft_fwd: planner.plan_fft_forward(ntheta),
            fft_inv: planner.plan_fft_inverse(ntheta),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nr * self.ntheta
    }

    /// Raw radial stencil of row `j`: node indices, pole-reflection flags,
    /// and first/second derivative weights (used by per-mode solvers).
    pub fn stencil_rows(&self, j: usize) -> ([usize; 5], [bool; 5], [f64; 5], [f64; 5]) {
        let s = &self.stencils[j];
        (s.idx, s.flip, s.w1, s.w2)
    }

    /// Apply the psi-derivative stencil (first or second order).
    pub fn psi_apply(&self, f: &[C64], second: bool) -> Vec<C64> {
        let nt = self.ntheta;
        let half = nt / 2;
        let mut out = vec![C64::new(0.0, 0.0); f.len()];
        for j in 0..self.nr {
            let st = &self.stencils[j];
            let w = if second { &st.w2 } else { &st.w1 };
            for k in 0..nt {
                let mut acc = C64::new(0.0, 0.0);
                for s in 0..5 {
                    let kk = if st.flip[s] { (k + half) % nt } else { k };
                    acc += f[st.idx[s] * nt + kk] * w[s];
                }
                out[j * nt + k] = acc;
            }
        }
        out
    }

    /// Plain-grid transpose of [`ChartGrid::psi_apply`] (scatter form).
    pub fn psi_apply_transpose(&self, v: &[C64], second: bool) -> Vec<C64> {
        let nt = self.ntheta;
        let half = nt / 2;
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for j in 0..self.nr {
            let st = &self.stencils[j];
            let w = if second { &st.w2 } else { &st.w1 };
            for k in 0..nt {
                let val = v[j * nt + k];
                for s in 0..5 {
                    let kk = if st.flip[s] { (k + half) % nt } else { k };
                    out[st.idx[s] * nt + kk] += val * w[s];
                }
            }
        }
        out
    }

    /// First/second spectral theta derivatives, individually.
    pub fn theta_d1(&self, f: &[C64]) -> Vec<C64> {
        self.theta_derivs(f).0
    }

    pub fn theta_d2(&self, f: &[C64]) -> Vec<C64> {
        self.theta_derivs(f).1
    }

    /// High-pass one ring's worth of values: removes all angular modes
    /// `|k| <= keep` (an orthogonal projection on the ring). A function
    /// smooth on the sphere has mode-k amplitude ~ (pole distance)^{|k|}
    /// at the rings nearest a pole, so this isolates pole-regularity
    /// violations.
    pub fn highpass_slice(&self, ring_vals: &[C64], keep: usize) -> Vec<C64> {
        let nt = self.ntheta;
        assert_eq!(ring_vals.len(), nt);
        let mut vals = ring_vals.to_vec();
        self.fft_fwd.process(&mut vals);
        for (i, v) in vals.iter_mut().enumerate() {
            let kabs = if i <= nt / 2 { i } else { nt - i };
            if kabs <= keep {
                *v = C64::new(0.0, 0.0);
            } else {
                *v *= 1.0 / nt as f64;
            }
        }
        self.fft_inv.process(&mut vals);
        vals
    }

    /// [`ChartGrid::highpass_slice`] applied to ring `ring` of a field.
    pub fn ring_highpass(&self, f: &[C64], ring: usize, keep: usize) -> Vec<C64> {
        let nt = self.ntheta;
        self.highpass_slice(&f[ring * nt..(ring + 1) * nt], keep)
    }

    pub fn node(&self, j: usize, k: usize) -> usize {
        j * self.ntheta + k
    }

    pub fn theta(&self, k: usize) -> f64 {
        std::f64::consts::TAU * k as f64 / self.ntheta as f64
    }

    /// Chart coordinate z of a node.
    pub fn z(&self, idx: usize) -> C64 {
        let j = idx / self.ntheta;
        let k = idx % self.ntheta;
        let th = self.theta(k);
        C64::new(self.r[j] * th.cos(), self.r[j] * th.sin())
    }

    /// Quadrature weight for integrals against `dx dy` over the chart.
    pub fn node_weight(&self, idx: usize) -> f64 {
        let j = idx / self.ntheta;
        let h_theta = std::f64::consts::TAU / self.ntheta as f64;
        let one_plus_r2 = 1.0 + self.r[j] * self.r[j];
        self.gl_w[j] * h_theta * one_plus_r2 * one_plus_r2 / 4.0
    }

    /// Spectral theta derivatives per ring: (d_theta, d_thetatheta).
    fn theta_derivs(&self, f: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let nt = self.ntheta;
        let mut d1 = vec![C64::new(0.0, 0.0); f.len()];
        let mut d2 = vec![C64::new(0.0, 0.0); f.len()];
        let mut ring = vec![C64::new(0.0, 0.0); nt];
        let scale = 1.0 / nt as f64;
        for j in 0..self.nr {
            ring.copy_from_slice(&f[j * nt..(j + 1) * nt]);
            self.fft_fwd.process(&mut ring);
            let mut m1 = ring.clone();
            let mut m2 = ring.clone();
            for (i, (a, b)) in m1.iter_mut().zip(m2.iter_mut()).enumerate() {
                let k = if i < nt / 2 {
                    i as f64
                } else if i == nt / 2 {
                    0.0 // Nyquist dropped for the odd derivative
                } else {
                    i as f64 - nt as f64
                };
                let k2 = if i == nt / 2 { (nt as f64 / 2.0).powi(2) } else { k * k };
                *a *= C64::new(0.0, k) * scale;
                *b *= -k2 * scale;
            }
            self.fft_inv.process(&mut m1);
            self.fft_inv.process(&mut m2);
            d1[j * nt..(j + 1) * nt].copy_from_slice(&m1);
            d2[j * nt..(j + 1) * nt].copy_from_slice(&m2);
        }
        (d1, d2)
    }

    /// All five coordinate derivatives of a sphere-scalar field.
    pub fn derivs(&self, f: &[C64]) -> ChartDerivs {
        assert_eq!(f.len(), self.num_nodes());
        let nt = self.ntheta;
        let half = nt / 2;
        let mut d_psi = vec![C64::new(0.0, 0.0); f.len()];
        let mut d_psipsi = vec![C64::new(0.0, 0.0); f.len()];

        for j in 0..self.nr {
            let st = &self.stencils[j];
            for k in 0..nt {
                let mut a1 = C64::new(0.0, 0.0);
                let mut a2 = C64::new(0.0, 0.0);
                for s in 0..5 {
                    let kk = if st.flip[s] { (k + half) % nt } else { k };
                    let v = f[st.idx[s] * nt + kk];
                    a1 += v * st.w1[s];
                    a2 += v * st.w2[s];
                }
                let out = j * nt + k;
                d_psi[out] = a1;
                d_psipsi[out] = a2;
            }
        }
        let (d_theta, d_thetatheta) = self.theta_derivs(f);
        // mixed: psi-derivative of d_theta (theta differentiation commutes
        // with the pole reflection class)
        let mut d_psitheta = vec![C64::new(0.0, 0.0); f.len()];
        for j in 0..self.nr {
            let st = &self.stencils[j];
            for k in 0..nt {
                let mut a1 = C64::new(0.0, 0.0);
                for s in 0..5 {
                    let kk = if st.flip[s] { (k + half) % nt } else { k };
                    a1 += d_theta[st.idx[s] * nt + kk] * st.w1[s];
                }
                d_psitheta[j * nt + k] = a1;
            }
        }
        ChartDerivs { d_psi, d_psipsi, d_theta, d_thetatheta, d_psitheta }
    }

    /// Radial chart derivatives from psi derivatives:
    /// `f_r = c f_psi`, `f_rr = c c_psi f_psi + c^2 f_psipsi`,
    /// with `c = dpsi/dr = 2/(1+r^2) = 1 + cos(psi)` and `c_psi = -sin(psi)`.
    fn radial(&self, j: usize, d: &ChartDerivs, idx: usize) -> (C64, C64) {
        let c = 1.0 + self.psi[j].cos();
        let c_psi = -self.psi[j].sin();
        let f_r = d.d_psi[idx] * c;
        let f_rr = d.d_psi[idx] * (c * c_psi) + d.d_psipsi[idx] * (c * c);
        (f_r, f_rr)
    }

    /// d/dz of a sphere-scalar field (chart (1,0)-component values).
    pub fn dz(&self, f: &[C64]) -> Vec<C64> {
        let d = self.derivs(f);
        self.dz_from(&d)
    }

    pub fn dz_from(&self, d: &ChartDerivs) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.num_nodes()];
        for j in 0..self.nr {
            for k in 0..self.ntheta {
                let idx = j * self.ntheta + k;
                let (f_r, _) = self.radial(j, d, idx);
                let th = self.theta(k);
                let e = C64::new(0.0, -th).exp();
                out[idx] = e * (f_r - C64::new(0.0, 1.0) * d.d_theta[idx] / self.r[j]) * 0.5;
            }
        }
        out
    }

    /// d/dzbar of a sphere-scalar field.
    pub fn dzbar(&self, f: &[C64]) -> Vec<C64> {
        let d = self.derivs(f);
        self.dzbar_from(&d)
    }

    pub fn dzbar_from(&self, d: &ChartDerivs) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.num_nodes()];
        for j in 0..self.nr {
            for k in 0..self.ntheta {
                let idx = j * self.ntheta + k;
                let (f_r, _) = self.radial(j, d, idx);
                let th = self.theta(k);
                let e = C64::new(0.0, th).exp();
                out[idx] = e * (f_r + C64::new(0.0, 1.0) * d.d_theta[idx] / self.r[j]) * 0.5;
            }
        }
        out
    }

    /// Mixed complex Hessian `d^2 f / dz dzbar = (1/4) euclidean laplacian`,
    /// computed in one pass (valid everywhere incluiding near the poles).
    pub fn hess_mixed(&self, f: &[C64]) -> Vec<C64> {
        let d = self.derivs(f);
        self.hess_mixed_from(&d)
    }

    pub fn hess_mixed_from(&self, d: &ChartDerivs) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.num_nodes()];
        for j in 0..self.nr {
            let r = self.r[j];
            for k in 0..self.ntheta {
                let idx = j * self.ntheta + k;
                let (f_r, f_rr) = self.radial(j, d, idx);
                out[idx] = (f_rr + f_r / r + d.d_thetatheta[idx] / (r * r)) * 0.25;
            }
        }
        out
    }

    /// Antiholomorphic Hessian `d^2 f / dzbar^2`.
    pub fn hess_zbar_zbar(&self, f: &[C64]) -> Vec<C64> {
        let d = self.derivs(f);
        let mut out = vec![C64::new(0.0, 0.0); self.num_nodes()];
        let i = C64::new(0.0, 1.0);
        for j in 0..self.nr {
            let r = self.r[j];
            let c = 1.0 + self.psi[j].cos();
            for k in 0..self.ntheta {
                let idx = j * self.ntheta + k;
                let (f_r, f_rr) = self.radial(j, &d, idx);
                let f_rtheta = d.d_psitheta[idx] * c;
                let th = self.theta(k);
                let e2 = C64::new(0.0, 2.0 * th).exp();
                out[idx] = e2
                    * (f_rr - f_r / r - d.d_thetatheta[idx] / (r * r)
                        + i * 2.0 / r * f_rtheta
                        - i * 2.0 / (r * r) * d.d_theta[idx])
                    * 0.25;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ChartGrid {
        ChartGrid::full(64, 32).unwrap()
    }

    #[test]
    fn gl_weights_integrate_sphere_area() {
        let g = grid();
        // FS area form integrates to exactly 1: sum w * h_theta / (4 pi)
        let mut total = 0.0;
        for idx in 0..g.num_nodes() {
            let j = idx / g.ntheta;
            let r2 = g.r[j] * g.r[j];
            // fs density against dx dy: (1/pi) (1+r^2)^{-2}
            total += g.node_weight(idx) / (std::f64::consts::PI * (1.0 + r2) * (1.0 + r2));
        }
        assert!((total - 1.0).abs() < 1e-13, "fs area = {total}");
    }

    #[test]
    fn truncated_tail_mass() {
        let g = ChartGrid::truncated(64, 32, 3.0).unwrap();
        assert!((g.tail_mass - 1.0 / 10.0).abs() < 1e-13);
        let mut total = 0.0;
        for idx in 0..g.num_nodes() {
            let j = idx / g.ntheta;
            let r2 = g.r[j] * g.r[j];
            total += g.node_weight(idx) / (std::f64::consts::PI * (1.0 + r2) * (1.0 + r2));
        }
        assert!((total - 0.9).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_height_function() {
        // u = (r^2-1)/(r^2+1) = -cos(psi): du/dpsi = sin(psi).
        // 4th-order truncation: the error contracts ~16x per refinement.
        let mut errs = Vec::new();
        for nr in [64usize, 128] {
            let g = ChartGrid::full(nr, 16).unwrap();
            let f: Vec<C64> = (0..g.num_nodes())
                .map(|i| {
                    let j = i / g.ntheta;
                    C64::new(-(g.psi[j].cos()), 0.0)
                })
                .collect();
            let d = g.derivs(&f);
            let mut worst = 0.0f64;
            for j in 0..g.nr {
                for k in 0..g.ntheta {
                    let idx = j * g.ntheta + k;
                    worst = worst.max((d.d_psi[idx].re - g.psi[j].sin()).abs());
                    assert!(d.d_theta[idx].norm() < 1e-9);
                }
            }
            errs.push(worst);
        }
        assert!(errs[0] < 1e-6, "coarse error {}", errs[0]);
        assert!(errs[1] < errs[0] / 8.0, "no 4th-order contraction: {:?}", errs);
    }

    #[test]
    fn dz_of_abs_squared() {
        // f = |z|^2: df/dz = zbar. The chart function has a pole at the
        // antipode, so the check stays within a bounded radius.
        let g = ChartGrid::full(128, 32).unwrap();
        let f: Vec<C64> = (0..g.num_nodes()).map(|i| {
            let z = g.z(i);
            C64::new(z.norm_sqr(), 0.0)
        }).collect();
        let d = g.dz(&f);
        for idx in 0..g.num_nodes() {
            let z = g.z(idx);
            if z.norm() > 4.0 {
                continue;
            }
            // relative scale grows like (1+r^2)^2: the chart expression of
            // this function steepens toward the antipode
            let s = 1.0 + z.norm_sqr();
            assert!(
                (d[idx] - z.conj()).norm() < 3e-6 * s * s,
                "at z={} got {} want {}",
                z,
                d[idx],
                z.conj()
            );
        }
    }

    #[test]
    fn hessian_of_spherical_harmonic() {
        // u = -cos(psi) = (|z|^2-1)/(|z|^2+1): d^2 u/dz dzbar = 4/(1+r^2)^3 - 2/(1+r^2)^2
        // derive: u = 1 - 2/(1+r^2); u_z zbar-derivative of u_z:
        // u_z = 2 zbar /(1+r^2)^2; d/dzbar -> 2/(1+r^2)^2 - 8 r^2/(1+r^2)^3... compute directly:
        // d/dzbar [2 zbar (1+z zbar)^{-2}] = 2(1+r^2)^{-2} - 4 zbar z (1+r^2)^{-3} * 2 / ... careful:
        // = 2 (1+r^2)^{-2} + 2 zbar * (-2)(1+r^2)^{-3} z = 2/(1+r^2)^2 - 4 r^2/(1+r^2)^3.
        let g = grid();
        let f: Vec<C64> = (0..g.num_nodes()).map(|i| {
            let j = i / g.ntheta;
            C64::new(-(g.psi[j].cos()), 0.0)
        }).collect();
        let h = g.hess_mixed(&f);
        for idx in 0..g.num_nodes() {
            let r2 = g.z(idx).norm_sqr();
            let expected = 2.0 / ((1.0 + r2) * (1.0 + r2)) - 4.0 * r2 / ((1.0 + r2).powi(3));
            assert!(
                (h[idx].re - expected).abs() < 1e-7 * (1.0 + expected.abs()),
                "r2={} got {} want {}",
                r2,
                h[idx].re,
                expected
            );
            assert!(h[idx].im.abs() < 1e-9);
        }
    }
}
