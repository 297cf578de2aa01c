use super::{ConformalMap, RadialOps, RadialProfile};
use crate::error::{Error, Result};
use crate::linalg::gmres;
use crate::spectral::{fft, ifft};
use nalgebra::{DVector, Dyn, LU};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Polar tensor grid on the unit disk: the folded Chebyshev radial nodes
/// (`r[0] = 1`) times `k` equispaced angles `θ_j = 2πj/k`. Values are stored
/// row-major by radius.
#[derive(Debug, Clone)]
pub struct DiskGrid {
    pub ops: RadialOps,
    pub k: usize,
    pub theta: Vec<f64>,
}

impl DiskGrid {
    pub fn new(n_cheb: usize, k: usize) -> Result<Self> {
        if k < 8 || k % 2 == 1 {
            return Err(Error::InvalidArgument(format!("angular count must be even and at least 8, got {k}")));
        }
        let ops = RadialOps::new(n_cheb)?;
        let theta = (0..k).map(|j| 2.0 * PI * j as f64 / k as f64).collect();
        Ok(Self { ops, k, theta })
    }

    pub fn m(&self) -> usize {
        self.ops.m()
    }

    pub fn len(&self) -> usize {
        self.m() * self.k
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::from_polar(self.ops.r[i], self.theta[j])
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.m()).flat_map(|i| (0..self.k).map(move |j| (i, j))).map(|(i, j)| self.z(i, j)).collect()
    }

    /// `∫_{B₁} f` from values on the full grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let k = self.k;
        (0..self.m())
            .map(|i| self.ops.weights[i] * values[i * k..(i + 1) * k].iter().sum::<f64>())
            .sum::<f64>()
            * 2.0 * PI
            / k as f64
    }

    pub fn integrate_complex(&self, values: &[Complex64]) -> Complex64 {
        let k = self.k;
        (0..self.m())
            .map(|i| values[i * k..(i + 1) * k].iter().sum::<Complex64>() * self.ops.weights[i])
            .sum::<Complex64>()
            * (2.0 * PI / k as f64)
    }

    /// Index of the reflection `x₁ ↦ -x₁` of angle slot `j`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.k + self.k / 2 - j) % self.k
    }

    fn wavenumber(&self, j: usize) -> usize {
        if j <= self.k / 2 {
            j
        } else {
            self.k - j
        }
    }

    /// Applies a real radial operator mode by mode to interior values
    /// (`(m-1) × k`, radius index starting at the first interior node).
    pub(crate) fn apply_modes(&self, interior: &[f64], mut op: impl FnMut(usize, &DVector<f64>) -> DVector<f64>) -> Vec<f64> {
        let (k, rows) = (self.k, self.m() - 1);
        let mut c: Vec<Complex64> = interior.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for row in c.chunks_mut(k) {
            fft(row);
        }
        for j in 0..k {
            let re = DVector::from_iterator(rows, (0..rows).map(|i| c[i * k + j].re));
            let im = DVector::from_iterator(rows, (0..rows).map(|i| c[i * k + j].im));
            let (re, im) = (op(self.wavenumber(j), &re), op(self.wavenumber(j), &im));
            for i in 0..rows {
                c[i * k + j] = Complex64::new(re[i], im[i]);
            }
        }
        for row in c.chunks_mut(k) {
            ifft(row);
        }
        c.iter().map(|v| v.re / k as f64).collect()
    }

    /// Angular Fourier coefficients `f̂_j(r_i) = (1/k) Σ f e^{-ijθ}` of every row.
    pub fn angular_modes(&self, values: &[f64]) -> Vec<Complex64> {
        let k = self.k;
        let mut c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v / k as f64, 0.0)).collect();
        for row in c.chunks_mut(k) {
            fft(row);
        }
        c
    }
}

/// Field on a [`DiskGrid`], zero on the boundary row for solutions of the
/// Dirichlet problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskField {
    pub values: Vec<f64>,
    pub k: usize,
}

impl DiskField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    pub fn boundary_trace(&self) -> &[f64] {
        &self.values[..self.k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemilinearConfig {
    pub n_cheb: usize,
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub gmres_tol: f64,
}

impl Default for SemilinearConfig {
    fn default() -> Self {
        Self { n_cheb: 41, k: 96, tol: 1e-10, max_iter: 30, gmres_tol: 1e-12 }
    }
}

/// Solution of `ΔF̃ = a|Γ'|²γ(F̃/a)`, `F̃ = 0` on the circle, `∫ΔF̃ = 1`,
/// written as `F̃ = a u` with `Δu = |Γ'|²γ(u)`.
#[derive(Debug, Clone)]
pub struct SemilinearSolution {
    pub field: DiskField,
    pub u: Vec<f64>,
    pub a: f64,
    /// `ΔF̃ = a|Γ'|²γ(u)` on the full grid.
    pub density: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub iterations: usize,
    /// Max norm of the residual after the radial preconditioner.
    pub residual: f64,
}

/// Disk grid, radial initial guess and the mode-diagonal preconditioner
/// `Δ - γ'(u*)` shared by repeated solves.
pub struct DiskSolver {
    pub grid: DiskGrid,
    pub cfg: SemilinearConfig,
    profile: RadialProfile,
    u_star: Vec<f64>,
    lap: Vec<nalgebra::DMatrix<f64>>,
    precond: Vec<LU<f64, Dyn, Dyn>>,
}

impl DiskSolver {
    pub fn new(profile: &RadialProfile, cfg: SemilinearConfig) -> Result<Self> {
        let grid = DiskGrid::new(cfg.n_cheb, cfg.k)?;
        let m = grid.m();
        let u_star: Vec<f64> = grid.ops.r.iter().map(|&r| profile.u_at(r)).collect();
        let dg: Vec<f64> = u_star[1..].iter().map(|&v| profile.strength.deriv(v)).collect();
        let zero = vec![0.0; m - 1];
        let mut lap = Vec::new();
        let mut precond = Vec::new();
        for n in 0..=cfg.k / 2 {
            lap.push(grid.ops.interior_operator(n, &zero));
            precond.push(grid.ops.interior_operator(n, &dg).lu());
        }
        Ok(Self { grid, cfg, profile: profile.clone(), u_star, lap, precond })
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    /// `Δ` on interior values with zero boundary data.
    pub fn laplacian(&self, interior: &[f64]) -> Vec<f64> {
        self.grid.apply_modes(interior, |n, v| &self.lap[n] * v)
    }

    fn precondition(&self, interior: &[f64]) -> Vec<f64> {
        self.grid.apply_modes(interior, |n, v| self.precond[n].solve(v).unwrap_or_else(|| v.clone()))
    }

    /// Newton-GMRES from `initial` (interior values) or the radial profile.
    pub fn solve(&self, map: &ConformalMap, initial: Option<&[f64]>) -> Result<SemilinearSolution> {
        let (grid, k) = (&self.grid, self.grid.k);
        let gamma = self.profile.strength;
        let rows = grid.m() - 1;
        let jac: Vec<f64> = grid.points().iter().map(|&z| map.jacobian(z)).collect();
        let jin = &jac[k..];
        let mut u: Vec<f64> = match initial {
            Some(v) if v.len() == rows * k => v.to_vec(),
            _ => (0..rows * k).map(|p| self.u_star[1 + p / k]).collect(),
        };
        let residual = |u: &[f64]| -> Vec<f64> {
            let l = self.laplacian(u);
            (0..u.len()).map(|p| l[p] - jin[p] * gamma.eval(u[p])).collect()
        };
        // measured after the radial preconditioner: the raw collocation
        // residual carries roundoff amplified by k²/r_min²
        let scaled = |r: &[f64]| self.precondition(r).iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        let mut r = residual(&u);
        let mut res = scaled(&r);
        let mut iterations = 0;
        while res >= self.cfg.tol {
            if iterations == self.cfg.max_iter || !res.is_finite() {
                return Err(Error::NoConvergence { iterations, residual: res });
            }
            let dg: Vec<f64> = (0..u.len()).map(|p| jin[p] * gamma.deriv(u[p])).collect();
            let mut apply = |v: &[f64]| -> Result<Vec<f64>> {
                let l = self.laplacian(v);
                Ok((0..v.len()).map(|p| l[p] - dg[p] * v[p]).collect())
            };
            let mut pre = |v: &[f64]| self.precondition(v);
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let out = gmres(&mut apply, &mut pre, &rhs, self.cfg.gmres_tol, 60, 600)?;
            for (a, b) in u.iter_mut().zip(&out.x) {
                *a += b;
            }
            iterations += 1;
            r = residual(&u);
            res = scaled(&r);
        }
        let mut full = vec![0.0; k];
        full.extend_from_slice(&u);
        if full[k..].iter().any(|&v| !(v < 0.0)) {
            return Err(Error::Inadmissible("disk solution is not negative".into()));
        }
        let g: Vec<f64> = full.iter().zip(&jac).map(|(&v, &j)| j * gamma.eval(v)).collect();
        let a = 1.0 / grid.integrate(&g);
        if !(a > 0.0) {
            return Err(Error::Inadmissible(format!("normalization gives a = {a}")));
        }
        Ok(SemilinearSolution {
            field: DiskField { values: full.iter().map(|v| a * v).collect(), k },
            density: g.iter().map(|v| a * v).collect(),
            u: full,
            a,
            jacobian: jac,
            iterations,
            residual: res,
        })
    }
}

pub fn solve_semilinear(map: &ConformalMap, profile: &RadialProfile, cfg: &SemilinearConfig) -> Result<SemilinearSolution> {
    DiskSolver::new(profile, *cfg)?.solve(map, None)
}
