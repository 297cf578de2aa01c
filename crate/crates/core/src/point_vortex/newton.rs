use super::residual::{Direction, Frame, Residual};
use super::{PhysicalParams, PointVortexState, SurfaceGrid};
use crate::error::{Error, Result};
use crate::linalg::{gmres, Factored};
use crate::vortex_green::SurfaceSample;
use crate::spectral::{cos_coefficients, from_cos_coefficients, max_abs, sin_coefficients};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    FixEpsilon,
    /// `tᵀ(u - prev) = ds` in reduced coordinates.
    Arclength { prev: Vec<f64>, tangent: Vec<f64>, ds: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Condition estimates above this count as a singular linearization.
    pub singular_limit: f64,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 25, singular_limit: 1e14, gmres_tol: 1e-11, gmres_restart: 80, gmres_max_iter: 800 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub state: PointVortexState,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub condition_estimate: f64,
}

/// Reduced coordinates: cosine coefficients of the even fields without the
/// Nyquist mode, and without the mean in the periodic case.
///
/// Unknowns are `(ε, η̂, ψ̂, c)`. Residual coordinates are the cosine
/// coefficients of `F1`, the cosine (periodic) or sine (localized)
/// coefficients of `F2`, and `F3`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub periodic: bool,
    pub n: usize,
    pub m: usize,
    pub grid: SurfaceGrid,
}

impl Layout {
    pub fn new(params: &PhysicalParams, grid: SurfaceGrid) -> Self {
        let n = grid.n();
        Self { periodic: params.is_periodic(), n, m: n / 2 - 1, grid }
    }

    fn eta_start(&self) -> usize {
        if self.periodic {
            1
        } else {
            0
        }
    }

    fn n_eta(&self) -> usize {
        self.m + 1 - self.eta_start()
    }

    pub fn n_unknowns(&self) -> usize {
        2 + self.n_eta() + self.m
    }

    pub fn n_equations(&self) -> usize {
        1 + self.n_eta() + self.m
    }

    pub fn to_u(&self, s: &PointVortexState) -> Vec<f64> {
        let ce = cos_coefficients(&s.eta);
        let cp = cos_coefficients(&s.psi);
        let mut u = vec![s.epsilon];
        u.extend_from_slice(&ce[self.eta_start()..=self.m]);
        u.extend_from_slice(&cp[1..=self.m]);
        u.push(s.c);
        u
    }

    fn fields(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ne = self.n_eta();
        let mut ce = vec![0.0; self.n / 2 + 1];
        ce[self.eta_start()..=self.m].copy_from_slice(&u[1..1 + ne]);
        let mut cp = vec![0.0; self.n / 2 + 1];
        cp[1..=self.m].copy_from_slice(&u[1 + ne..1 + ne + self.m]);
        (from_cos_coefficients(&ce, self.n), from_cos_coefficients(&cp, self.n))
    }

    pub fn to_state(&self, u: &[f64]) -> PointVortexState {
        let (eta, psi) = self.fields(u);
        PointVortexState { epsilon: u[0], eta, psi, c: u[u.len() - 1], grid: self.grid }
    }

    pub fn direction(&self, u: &[f64]) -> Direction {
        let (zeta, phi) = self.fields(u);
        Direction { d_epsilon: u[0], zeta, phi, dc: u[u.len() - 1] }
    }

    pub fn reduce(&self, r: &Residual) -> Vec<f64> {
        let c1 = cos_coefficients(&r.f1);
        let mut out: Vec<f64> = c1[self.eta_start()..=self.m].to_vec();
        if self.periodic {
            out.extend_from_slice(&cos_coefficients(&r.f2)[1..=self.m]);
        } else {
            out.extend_from_slice(&sin_coefficients(&r.f2)[..self.m]);
        }
        out.push(r.f3);
        out
    }

    /// Max norm of the residual restricted to the retained modes.
    pub fn projected_norm(&self, r: &Residual) -> f64 {
        let red = self.reduce(r);
        let ne = self.n_eta();
        let mut c1 = vec![0.0; self.n / 2 + 1];
        c1[self.eta_start()..=self.m].copy_from_slice(&red[..ne]);
        let f1 = from_cos_coefficients(&c1, self.n);
        let f2 = if self.periodic {
            let mut c2 = vec![0.0; self.n / 2 + 1];
            c2[1..=self.m].copy_from_slice(&red[ne..ne + self.m]);
            from_cos_coefficients(&c2, self.n)
        } else {
            let l = self.grid.periodic().l();
            self.grid
                .nodes()
                .iter()
                .map(|x| (0..self.m).map(|k| red[ne + k] * ((k + 1) as f64 * x / l).sin()).sum())
                .collect()
        };
        max_abs(&f1).max(max_abs(&f2)).max(red[red.len() - 1].abs())
    }

    pub fn unit(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.n_unknowns()];
        e[i] = 1.0;
        e
    }
}

/// Projected max norm of a residual, as used for Newton convergence.
pub(crate) fn projected_residual_norm(params: &PhysicalParams, grid: SurfaceGrid, r: &Residual) -> f64 {
    Layout::new(params, grid).projected_norm(r)
}

/// Dense Jacobian in reduced coordinates (all columns, including `ε`).
pub(crate) fn dense_jacobian(frame: &Frame, layout: &Layout) -> Result<DMatrix<f64>> {
    let nu = layout.n_unknowns();
    let ne = layout.n_equations();
    let mut j = DMatrix::zeros(ne, nu);
    for col in 0..nu {
        let r = frame.jacobian_apply(&layout.direction(&layout.unit(col)))?;
        let red = layout.reduce(&r);
        for (row, v) in red.iter().enumerate() {
            j[(row, col)] = *v;
        }
    }
    Ok(j)
}

fn drop_first_column(j: &DMatrix<f64>) -> DMatrix<f64> {
    j.columns(1, j.ncols() - 1).into_owned()
}

pub(crate) fn bordered(j: &DMatrix<f64>, t: &[f64]) -> DMatrix<f64> {
    let mut b = j.clone().insert_row(j.nrows(), 0.0);
    for (k, v) in t.iter().enumerate() {
        b[(j.nrows(), k)] = *v;
    }
    b
}

/// Newton iteration on `F = 0` plus the chosen constraint.
pub fn newton_solve(initial: &PointVortexState, params: &PhysicalParams, constraint: &Constraint, cfg: &NewtonConfig) -> Result<NewtonReport> {
    let layout = Layout::new(params, initial.grid);
    let mut u = layout.to_u(initial);
    let mut history = Vec::new();
    let mut condition = f64::NAN;
    for it in 0..=cfg.max_iter {
        let state = layout.to_state(&u);
        let frame = Frame::new(&state, params)?;
        let r = frame.residual()?;
        let norm = layout.projected_norm(&r);
        if !norm.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residual: norm });
        }
        history.push(norm);
        let arc = match constraint {
            Constraint::FixEpsilon => 0.0,
            Constraint::Arclength { prev, tangent, ds } => {
                tangent.iter().zip(u.iter().zip(prev)).map(|(t, (a, b))| t * (a - b)).sum::<f64>() - ds
            }
        };
        if norm < cfg.tol && arc.abs() < cfg.tol {
            return Ok(NewtonReport { state, iterations: it, residual_history: history, condition_estimate: condition });
        }
        if it == cfg.max_iter {
            break;
        }
        let rhs: Vec<f64> = layout.reduce(&r).into_iter().map(|v| -v).collect();
        let step = if layout.periodic {
            let j = dense_jacobian(&frame, &layout)?;
            match constraint {
                Constraint::FixEpsilon => {
                    let f = Factored::new(&drop_first_column(&j))?;
                    condition = f.condition;
                    if condition > cfg.singular_limit {
                        return Err(Error::Singular { condition });
                    }
                    let d = f.solve(&DVector::from_vec(rhs))?;
                    std::iter::once(0.0).chain(d.iter().cloned()).collect::<Vec<f64>>()
                }
                Constraint::Arclength { tangent, .. } => {
                    let f = Factored::new(&bordered(&j, tangent))?;
                    condition = f.condition;
                    if condition > cfg.singular_limit {
                        return Err(Error::Singular { condition });
                    }
                    let mut b = rhs;
                    b.push(-arc);
                    f.solve(&DVector::from_vec(b))?.as_slice().to_vec()
                }
            }
        } else {
            if !matches!(constraint, Constraint::FixEpsilon) {
                return Err(Error::InvalidArgument("the localized solver supports fixed ε only".into()));
            }
            let d = gmres_step(&frame, &layout, params, &rhs, cfg)?;
            std::iter::once(0.0).chain(d).collect()
        };
        for (a, b) in u.iter_mut().zip(&step) {
            *a += b;
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iter, residual: *history.last().unwrap_or(&f64::NAN) })
}

/// Newton-GMRES step for fixed `ε`, right-preconditioned by the
/// linearization at the trivial state.
fn gmres_step(frame: &Frame, layout: &Layout, params: &PhysicalParams, rhs: &[f64], cfg: &NewtonConfig) -> Result<Vec<f64>> {
    let mut apply = |v: &[f64]| -> Result<Vec<f64>> {
        let mut full = vec![0.0];
        full.extend_from_slice(v);
        Ok(layout.reduce(&frame.jacobian_apply(&layout.direction(&full))?))
    };
    let mut precond = |r: &[f64]| trivial_precondition(layout, params, r, true);
    let out = gmres(&mut apply, &mut precond, rhs, cfg.gmres_tol, cfg.gmres_restart, cfg.gmres_max_iter)?;
    if !(out.residual < 1e-6) {
        return Err(Error::NoConvergence { iterations: out.iterations, residual: out.residual });
    }
    Ok(out.x)
}

/// Inverse of the linearization at the trivial state, mode by mode. Without
/// `with_c` the `c` unknown and the `F3` row are absent.
fn trivial_precondition(layout: &Layout, params: &PhysicalParams, r: &[f64], with_c: bool) -> Vec<f64> {
    let l = layout.grid.periodic().l();
    let ne = layout.n_eta();
    let m = layout.m;
    let (g, a2) = (params.g, params.alpha * params.alpha);
    let mut out = vec![0.0; r.len()];
    for k in 0..ne {
        let kk = k as f64 / l;
        out[k] = r[k] / (g + a2 * kk * kk);
    }
    let mut dflat = 0.0;
    for k in 1..=m {
        let kk = k as f64 / l;
        let phi = -r[ne + k - 1] / kk;
        out[ne + k - 1] = phi;
        dflat += phi * kk * (-kk).exp();
    }
    if with_c {
        out[ne + m] = r[ne + m] - dflat;
    }
    out
}

/// Newton-GMRES on `(F1, F2)` alone for fixed `ε` and `c` (localized), with
/// `∇𝐆` on the surface supplied by `sampler(x, η)`.
pub(crate) fn surface_solve(
    initial: &PointVortexState,
    params: &PhysicalParams,
    sampler: &dyn Fn(&[f64], &[f64]) -> Result<SurfaceSample>,
    cfg: &NewtonConfig,
) -> Result<NewtonReport> {
    if params.is_periodic() {
        return Err(Error::InvalidArgument("surface-only solves are localized".into()));
    }
    let layout = Layout::new(params, initial.grid);
    let nodes = initial.grid.nodes();
    let mut u = layout.to_u(initial);
    let nu = u.len();
    let mut history = Vec::new();
    for it in 0..=cfg.max_iter {
        let state = layout.to_state(&u);
        let frame = Frame::with_sample(&state, params, sampler(&nodes, &state.eta)?)?;
        let mut r = frame.residual()?;
        r.f3 = 0.0;
        let norm = layout.projected_norm(&r);
        if !norm.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residual: norm });
        }
        history.push(norm);
        if norm < cfg.tol {
            return Ok(NewtonReport { state, iterations: it, residual_history: history, condition_estimate: f64::NAN });
        }
        if it == cfg.max_iter {
            break;
        }
        let mut rhs: Vec<f64> = layout.reduce(&r).into_iter().map(|v| -v).collect();
        rhs.pop();
        let mut apply = |v: &[f64]| -> Result<Vec<f64>> {
            let mut full = vec![0.0];
            full.extend_from_slice(v);
            full.push(0.0);
            let mut out = layout.reduce(&frame.jacobian_apply(&layout.direction(&full))?);
            out.pop();
            Ok(out)
        };
        let mut precond = |r: &[f64]| trivial_precondition(&layout, params, r, false);
        let out = gmres(&mut apply, &mut precond, &rhs, cfg.gmres_tol, cfg.gmres_restart, cfg.gmres_max_iter)?;
        if !(out.residual < 1e-6) {
            return Err(Error::NoConvergence { iterations: out.iterations, residual: out.residual });
        }
        for (a, b) in u[1..nu - 1].iter_mut().zip(&out.x) {
            *a += b;
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iter, residual: *history.last().unwrap_or(&f64::NAN) })
}

/// Dense Jacobian at a converged state with its null tangent oriented
/// along `reference` (or along `+ε` when absent).
pub(crate) fn tangent_at(state: &PointVortexState, params: &PhysicalParams, reference: Option<&[f64]>, sign: f64) -> Result<(Vec<f64>, f64)> {
    let layout = Layout::new(params, state.grid);
    let frame = Frame::new(state, params)?;
    let j = dense_jacobian(&frame, &layout)?;
    let border: Vec<f64> = match reference {
        Some(t) => t.to_vec(),
        None => layout.unit(0),
    };
    let f = Factored::new(&bordered(&j, &border))?;
    let mut rhs = vec![0.0; layout.n_unknowns()];
    rhs[layout.n_equations()] = 1.0;
    let t = f.solve(&DVector::from_vec(rhs))?;
    let norm = t.norm();
    let s = if reference.is_some() { 1.0 } else { sign };
    Ok((t.iter().map(|v| s * v / norm).collect(), f.condition))
}
