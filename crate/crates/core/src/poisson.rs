//! Poisson solves `Delta_g u = rhs` with the mean-zero normalization.
//!
//! Torus grids use a flat-Laplacian preconditioned fixed point (spectral
//! inversion of the flat operator, iterative refinement for perturbed
//! metrics). The CP^1 chart reduces exactly: in one complex dimension
//! `Delta_g u = u_{z zbar}/g`, so `Delta_g u = rhs` is
//! `Delta_FS u = rho rhs` with `rho = g/g_FS`, solved directly by an
//! azimuthal FFT and radial factorizations per mode.

use crate::chart::ChartGrid;
use crate::error::{KgError, Result};
use crate::field::{
    integrate_scalar, laplacian, project_mean_zero, weighted_mean, Grid, MetricField,
    ScalarField,
};
use crate::torus::DerivOp;
use crate::C64;
use nalgebra::{DMatrix, DVector, LU};
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

const POISSON_MEAN_TOL: f64 = 1e-8;
const POISSON_RESIDUAL_TOL: f64 = 1e-9;
const POISSON_MAX_ITERS: usize = 400;

/// Solve `Delta_g u = rhs` with `int u omega^m = 0`.
///
/// Fails on right-hand sides with nonzero volume mean (solvability) and on
/// non-convergence, reporting the residual history.
pub fn solve_poisson(rhs: &ScalarField, g: &MetricField) -> Result<ScalarField> {
    let vol = g.total_volume();
    let mean = integrate_scalar(rhs, g).norm() / vol;
    let scale = rhs.norm_inf().max(1e-14);
    if mean > POISSON_MEAN_TOL * scale.max(1.0) {
        return Err(KgError::NonzeroMean { mean, tol: POISSON_MEAN_TOL });
    }
    match g.grid.as_ref() {
        Grid::Torus(t) => {
            let mut u = ScalarField::zeros(rhs.grid.clone());
            let mut history = Vec::new();
            let rhs_norm = l2_norm(rhs, g).max(1e-300);
            for _ in 0..POISSON_MAX_ITERS {
                let lu = laplacian(&u, g)?;
                let resid = rhs.sub(&lu);
                let rnorm = l2_norm(&resid, g) / rhs_norm;
                history.push(rnorm);
                if rnorm <= POISSON_RESIDUAL_TOL {
                    let mut u = project_mean_zero(&u, g);
                    if rhs.real {
                        u = u.into_real();
                    }
                    return Ok(u);
                }
                let corr = t.apply_op(&resid.values, DerivOp::InvFlatLap);
                for (uv, c) in u.values.iter_mut().zip(corr.iter()) {
                    *uv += c;
                }
            }
            Err(KgError::NoConvergence { iters: POISSON_MAX_ITERS, history })
        }
        Grid::Chart(_) => {
            let solver = ChartSolver::new(g.grid.clone())?;
            solver.solve_poisson(rhs, g)
        }
    }
}

/// Metric-volume L2 norm.
pub fn l2_norm(f: &ScalarField, g: &MetricField) -> f64 {
    let sq = ScalarField::from_fn(f.grid.clone(), |i| C64::new(f.values[i].norm_sqr(), 0.0));
    integrate_scalar(&sq, g).re.max(0.0).sqrt()
}

/// Direct solver machinery on a CP^1 chart grid: azimuthal FFT plus dense
/// radial factorizations per Fourier mode of the Fubini-Study Laplacian.
/// Reused as the Poisson solver, the eigensolver preconditioner, and the
/// flow damping kernel.
pub struct ChartSolver {
    grid: Arc<Grid>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// per |mode| LU of Delta_FS (k = 0 pinned to the FS mean)
    poisson_lu: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// per |mode| LU of (Delta_FS - 1)
    shifted_lu: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl ChartSolver {
    pub fn new(grid: Arc<Grid>) -> Result<Self> {
        let chart = grid.as_chart()?.clone();
        let nt = chart.ntheta;
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(nt);
        let inv = planner.plan_fft_inverse(nt);
        let mut poisson_lu = Vec::with_capacity(nt / 2 + 1);
        let mut shifted_lu = Vec::with_capacity(nt / 2 + 1);
        for kabs in 0..=nt / 2 {
            let op = radial_fs_operator(&chart, kabs);
            let mut pinned = op.clone();
            if kabs == 0 {
                // replace the last equation by the FS-mean constraint
                let nr = chart.nr;
                for j in 0..nr {
                    pinned[(nr - 1, j)] = chart.gl_w[j] / 2.0;
                }
            }
            poisson_lu.push(LU::new(pinned));
            let shifted = &op - DMatrix::<f64>::identity(chart.nr, chart.nr);
            shifted_lu.push(LU::new(shifted));
        }
        Ok(ChartSolver { grid, fwd, inv, poisson_lu, shifted_lu })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn chart(&self) -> &ChartGrid {
        match self.grid.as_ref() {
            Grid::Chart(c) => c,
            _ => unreachable!(),
        }
    }

    /// Ring-wise forward FFT: layout stays `j * ntheta + k`, normalized so
    /// that `f(theta) = sum_k fhat_k exp(i k theta)`.
    fn to_modes(&self, f: &[C64]) -> Vec<C64> {
        let chart = self.chart();
        let nt = chart.ntheta;
        let mut out = f.to_vec();
        for j in 0..chart.nr {
            self.fwd.process(&mut out[j * nt..(j + 1) * nt]);
        }
        let s = 1.0 / nt as f64;
        for v in out.iter_mut() {
            *v *= s;
        }
        out
    }

    fn from_modes(&self, modes: &[C64]) -> Vec<C64> {
        let chart = self.chart();
        let nt = chart.ntheta;
        let mut out = modes.to_vec();
        for j in 0..chart.nr {
            self.inv.process(&mut out[j * nt..(j + 1) * nt]);
        }
        out
    }

    fn per_mode_solve(
        &self,
        lus: &[LU<f64, nalgebra::Dyn, nalgebra::Dyn>],
        modes: &mut [C64],
        zero_k0_last_row: bool,
    ) {
        let chart = self.chart();
        let (nr, nt) = (chart.nr, chart.ntheta);
        for k in 0..nt {
            let kabs = if k <= nt / 2 { k } else { nt - k };
            let mut re = DVector::<f64>::zeros(nr);
            let mut im = DVector::<f64>::zeros(nr);
            for j in 0..nr {
                re[j] = modes[j * nt + k].re;
                im[j] = modes[j * nt + k].im;
            }
            if k == 0 && zero_k0_last_row {
                re[nr - 1] = 0.0;
                im[nr - 1] = 0.0;
            }
            let xr = lus[kabs].solve(&re).expect("radial solve");
            let xi = lus[kabs].solve(&im).expect("radial solve");
            for j in 0..nr {
                modes[j * nt + k] = C64::new(xr[j], xi[j]);
            }
        }
    }

    /// Solve `Delta_FS u = h` with the FS-mean of `u` pinned to zero.
    /// The FS mean of `h` is projected out first (solvability slack).
    pub fn solve_fs_poisson(&self, h: &[C64]) -> Vec<C64> {
        let chart = self.chart();
        let (nr, nt) = (chart.nr, chart.ntheta);
        let mut modes = self.to_modes(h);
        let mut mean = C64::new(0.0, 0.0);
        for j in 0..nr {
            mean += modes[j * nt] * (chart.gl_w[j] / 2.0);
        }
        for j in 0..nr {
            modes[j * nt] -= mean;
        }
        self.per_mode_solve(&self.poisson_lu, &mut modes, true);
        self.from_modes(&modes)
    }

    /// Apply `(Delta_FS - 1)^{-1}` (smoothing preconditioner; applied twice
    /// it preconditions fourth-order operators).
    pub fn apply_shifted_inverse(&self, f: &[C64]) -> Vec<C64> {
        let mut modes = self.to_modes(f);
        self.per_mode_solve(&self.shifted_lu, &mut modes, false);
        self.from_modes(&modes)
    }

    /// Chart Poisson for a general metric in the FS class:
    /// `Delta_g u = rhs  <=>  Delta_FS u = rho rhs`.
    pub fn solve_poisson(&self, rhs: &ScalarField, g: &MetricField) -> Result<ScalarField> {
        let rho = g
            .chart_ratio()
            .ok_or_else(|| KgError::invalid("chart metric lacks FS ratio data"))?;
        let scaled: Vec<C64> = rhs.values.iter().zip(rho.iter()).map(|(r, q)| r * q).collect();
        let u_vals = self.solve_fs_poisson(&scaled);
        let mut u = ScalarField::new(self.grid.clone(), u_vals, false);
        let mean = weighted_mean(&u, g);
        u = u.add_scalar(-mean);
        if rhs.real {
            u = u.into_real();
        }
        Ok(u)
    }
}

/// Dense radial representation of `Delta_FS` restricted to azimuthal mode
/// `k`: `Delta_FS = 2 pi (1+r^2)^2 (1/4) [d_rr + (1/r) d_r - k^2/r^2]`,
/// expressed through the psi stencils with pole-reflection parity
/// `(-1)^k`.
fn radial_fs_operator(chart: &ChartGrid, kabs: usize) -> DMatrix<f64> {
    let nr = chart.nr;
    let parity = if kabs % 2 == 0 { 1.0 } else { -1.0 };
    let mut op = DMatrix::<f64>::zeros(nr, nr);
    // theta differentiation is spectral, so the mode symbol is exact
    let theta_symbol = (kabs * kabs) as f64;
    for j in 0..nr {
        let r = chart.r[j];
        let c = 1.0 + chart.psi[j].cos(); // dpsi/dr
        let c_psi = -chart.psi[j].sin();
        let pref = 2.0 * std::f64::consts::PI * (1.0 + r * r) * (1.0 + r * r) / 4.0;
        let a2 = c * c;
        let a1 = c * c_psi + c / r;
        let a0 = -theta_symbol / (r * r);
        let (idx, flip, w1, w2) = chart.stencil_rows(j);
        for s in 0..5 {
            let f = if flip[s] { parity } else { 1.0 };
            op[(j, idx[s])] += pref * (a2 * w2[s] + a1 * w1[s]) * f;
        }
        op[(j, j)] += pref * a0;
    }
    op
}
