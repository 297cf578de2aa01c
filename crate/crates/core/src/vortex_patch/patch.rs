use super::hfunc::y_coefficient;
use super::{
    build_conformal_map, eval_h, linearized_h_spectrum, solve_radial_profile, ConformalMap, DiskSolver, PatchFarField,
    RadialConfig, RadialProfile, SemilinearConfig, SemilinearSolution, ShapeCoeffs, StrengthFn,
};
use crate::dtn::{eval_interior_gradient, DtnOperator, HarmonicExtension};
use crate::error::{Error, Result};
use crate::json17;
use crate::point_vortex::{
    asymptotic_predictor, dtn_config, projected_residual_norm, surface_solve, Direction, Frame, NewtonConfig,
    PhysicalParams, PointVortexState, SurfaceGrid,
};
use crate::spectral::{derivative_values, max_abs, LineGrid, PeriodicField};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchConfig {
    pub radial: RadialConfig,
    pub disk: SemilinearConfig,
    /// Highest shape mode `n` of `βₙ`.
    pub n_beta: usize,
    pub half_width: f64,
    pub n_line: usize,
    /// Bound on the scaled residual `(F1/ε, F2/ε, F3)`.
    pub tol: f64,
    pub max_iter: usize,
    pub newton: NewtonConfig,
    pub max_epsilon: f64,
    pub max_delta: f64,
    pub max_tau: f64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            radial: RadialConfig::default(),
            disk: SemilinearConfig::default(),
            n_beta: 32,
            half_width: 200.0,
            n_line: 4096,
            tol: 1e-9,
            max_iter: 40,
            newton: NewtonConfig::default(),
            max_epsilon: 0.05,
            max_delta: 0.1,
            max_tau: 0.2,
        }
    }
}

/// Patch unknowns in the scaled variables `η = εη̃`, `ψ = εψ̃`, `c = εc̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchState {
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    pub c_tilde: f64,
    pub beta: ShapeCoeffs,
    pub eta_tilde: Vec<f64>,
    pub psi_tilde: Vec<f64>,
    pub grid: LineGrid,
    pub a: f64,
    /// Shift giving `f̃∘Γ` zero mean on the circle.
    pub mu: f64,
}

impl PatchState {
    pub fn c(&self) -> f64 {
        self.epsilon * self.c_tilde
    }

    pub fn eta(&self) -> Vec<f64> {
        self.eta_tilde.iter().map(|v| self.epsilon * v).collect()
    }

    pub fn psi(&self) -> Vec<f64> {
        self.psi_tilde.iter().map(|v| self.epsilon * v).collect()
    }

    pub fn surface(&self) -> PointVortexState {
        PointVortexState { epsilon: self.epsilon, eta: self.eta(), psi: self.psi(), c: self.c(), grid: SurfaceGrid::Line(self.grid) }
    }

    /// `δΓ(e^{iθ_k})` at `n` equispaced angles from `θ = 0`.
    pub fn boundary_curve(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        let map = build_conformal_map(&self.beta)?;
        Ok(map.boundary_curve(n).into_iter().map(|(x, y)| (self.delta * x, self.delta * y)).collect())
    }

    pub fn to_json(&self, n_boundary: usize) -> Result<Value> {
        let curve: Vec<[f64; 2]> = self.boundary_curve(n_boundary)?.into_iter().map(|(x, y)| [x, y]).collect();
        Ok(json!({
            "epsilon": self.epsilon,
            "delta": self.delta,
            "tau": self.tau,
            "c": self.c(),
            "beta_coeffs": self.beta.values(),
            "eta_values": self.eta(),
            "psi_values": self.psi(),
            "a": self.a,
            "mu": self.mu,
            "boundary_curve": curve,
        }))
    }
}

/// Writes the state as one JSON object with `meta` added under its own key.
pub fn write_patch_json(path: &Path, state: &PatchState, n_boundary: usize, meta: &Value) -> Result<()> {
    let mut v = state.to_json(n_boundary)?;
    v["meta"] = meta.clone();
    std::fs::write(path, json17::to_string(&v) + "\n")?;
    Ok(())
}

/// Columns `theta, x1, x2` after a `#` comment line holding `meta`.
pub fn write_boundary_csv(path: &Path, state: &PatchState, n_boundary: usize, meta: &Value) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# {}", json17::to_string(meta))?;
    writeln!(f, "theta,x1,x2")?;
    for (k, (x, y)) in state.boundary_curve(n_boundary)?.into_iter().enumerate() {
        let t = 2.0 * PI * k as f64 / n_boundary as f64;
        writeln!(f, "{},{},{}", json17::fmt_f64(t), json17::fmt_f64(x), json17::fmt_f64(y))?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchResidual {
    /// `F1/ε`, `F2/ε` (their `ε → 0` limits when `ε = 0`).
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// Projected max norm of `(F1, F2)/ε`, as used for convergence.
    pub surface_norm: f64,
    /// `F3` at `θ_k = 2πk/K`.
    pub f3: Vec<f64>,
    /// `Y₁` coefficient of `F3` divided by `δ`.
    pub h: f64,
    pub mu: f64,
}

impl PatchResidual {
    pub fn norm(&self) -> f64 {
        self.surface_norm.max(max_abs(&self.f3))
    }
}

#[derive(Debug, Clone)]
pub struct PatchSolution {
    pub state: PatchState,
    pub residual: PatchResidual,
    pub map: ConformalMap,
    pub disk: SemilinearSolution,
    pub far: PatchFarField,
    pub iterations: usize,
    /// Max norm of `F3` at each outer iteration.
    pub history: Vec<f64>,
}

impl PatchSolution {
    /// `∫_D ω / ε`
    pub fn vorticity_mass(&self) -> f64 {
        self.far.mass
    }
}

struct Derived {
    map: ConformalMap,
    sol: SemilinearSolution,
    far: PatchFarField,
}

/// Radial profile, disk solver and resolvent spectrum shared by patch solves
/// with one strength function.
pub struct PatchContext {
    pub params: PhysicalParams,
    pub cfg: PatchConfig,
    pub disk: DiskSolver,
    /// `κ₁..κ_{n_beta}`
    pub kappa: Vec<f64>,
}

impl PatchContext {
    pub fn new(params: &PhysicalParams, gamma: &StrengthFn, cfg: PatchConfig) -> Result<Self> {
        if params.is_periodic() {
            return Err(Error::InvalidArgument("the vortex patch is implemented for the localized setting".into()));
        }
        if cfg.n_beta < 3 || cfg.n_beta >= cfg.disk.k / 2 {
            return Err(Error::InvalidArgument(format!("n_beta must lie in 3..{}", cfg.disk.k / 2)));
        }
        let profile = solve_radial_profile(gamma, &cfg.radial).map_err(|e| e.layer("radial profile"))?;
        let kappa = linearized_h_spectrum(&profile, cfg.n_beta).map_err(|e| e.layer("resolvent"))?;
        let disk = DiskSolver::new(&profile, cfg.disk)?;
        Ok(Self { params: *params, cfg, disk, kappa })
    }

    pub fn profile(&self) -> &RadialProfile {
        self.disk.profile()
    }

    pub fn line_grid(&self) -> Result<LineGrid> {
        LineGrid::new(self.cfg.half_width, self.cfg.n_line)
    }

    fn derive(&self, beta: &ShapeCoeffs, delta: f64, warm: Option<&[f64]>) -> Result<Derived> {
        let map = build_conformal_map(beta).map_err(|e| e.layer("conformal map"))?;
        let sol = self.disk.solve(&map, warm).map_err(|e| e.layer("disk"))?;
        let far = PatchFarField::new(&map, &self.disk.grid, &sol.density, delta).map_err(|e| e.layer("far field"))?;
        Ok(Derived { map, sol, far })
    }

    fn extension(&self, st: &PatchState) -> Result<HarmonicExtension> {
        let eta = PeriodicField { grid: st.grid.periodic(), values: st.eta() };
        DtnOperator::new(&eta, &dtn_config())?.extend(&st.psi_tilde)
    }

    fn surface_residual(&self, st: &PatchState, d: &Derived) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let grid = SurfaceGrid::Line(st.grid);
        let nodes = st.grid.nodes();
        let (mut r, scale) = if st.epsilon != 0.0 {
            let s = st.surface();
            let smp = d.far.sample_surface(&nodes, &s.eta)?;
            (Frame::with_sample(&s, &self.params, smp)?.residual()?, 1.0 / st.epsilon)
        } else {
            let s = PointVortexState::trivial(grid);
            let smp = d.far.sample_surface(&nodes, &s.eta)?;
            let dir = Direction { d_epsilon: 1.0, zeta: st.eta_tilde.clone(), phi: st.psi_tilde.clone(), dc: st.c_tilde };
            (Frame::with_sample(&s, &self.params, smp)?.jacobian_apply(&dir)?, 1.0)
        };
        r.f3 = 0.0;
        let norm = projected_residual_norm(&self.params, grid, &r) * scale.abs();
        Ok((r.f1.iter().map(|v| v * scale).collect(), r.f2.iter().map(|v| v * scale).collect(), norm))
    }

    /// `F3` on the circle, `μ` and `h`.
    fn boundary_residual(&self, st: &PatchState, d: &Derived) -> Result<(Vec<f64>, f64, f64)> {
        let ext = self.extension(st)?;
        let k = self.disk.grid.k;
        if st.delta == 0.0 {
            let (_, d2) = eval_interior_gradient(&ext, (0.0, 0.0))?;
            return Ok((vec![0.0; k], 2f64.ln() / (2.0 * PI), st.c_tilde + 1.0 / (4.0 * PI) + d2));
        }
        let h = eval_h(&d.map, &self.disk.grid, &d.sol.density, k)?;
        let two_i = Complex64::new(0.0, 2.0);
        let b: Vec<f64> = h
            .theta
            .iter()
            .zip(&h.values)
            .map(|(&t, &hv)| {
                let g = d.map.boundary_point(t);
                let p = g * st.delta;
                ext.value(p.re, p.im) + st.c_tilde * st.delta * g.im - (p - two_i).norm().ln() / (2.0 * PI) + hv
            })
            .collect();
        let mu = -b.iter().sum::<f64>() / k as f64;
        let f3 = derivative_values(&b, 1.0, 1);
        let hval = y_coefficient(&f3, 1) / st.delta;
        Ok((f3, mu, hval))
    }

    fn assemble(&self, st: &PatchState, d: &Derived) -> Result<PatchResidual> {
        let (f1, f2, surface_norm) = self.surface_residual(st, d).map_err(|e| e.layer("surface residual"))?;
        let (f3, mu, h) = self.boundary_residual(st, d).map_err(|e| e.layer("boundary residual"))?;
        Ok(PatchResidual { f1, f2, surface_norm, f3, h, mu })
    }

    pub fn residual(&self, st: &PatchState) -> Result<PatchResidual> {
        if st.eta_tilde.len() != st.grid.n() || st.psi_tilde.len() != st.grid.n() {
            return Err(Error::InvalidArgument("surface fields do not match the grid".into()));
        }
        let d = self.derive(&st.beta, st.delta, None)?;
        self.assemble(st, &d)
    }

    fn check_box(&self, epsilon: f64, delta: f64, tau: f64) -> Result<()> {
        let c = &self.cfg;
        if !(epsilon.abs() <= c.max_epsilon && (0.0..=c.max_delta).contains(&delta) && tau.abs() <= c.max_tau) {
            return Err(Error::InvalidArgument(format!(
                "(ε, δ, τ) = ({epsilon}, {delta}, {tau}) outside the box |ε| ≤ {}, 0 ≤ δ ≤ {}, |τ| ≤ {}",
                c.max_epsilon, c.max_delta, c.max_tau
            )));
        }
        Ok(())
    }

    /// Lyapunov-Schmidt iteration: the `sin 2θ` amplitude of `β` is pinned
    /// to `δτ`; the surface is solved by Newton for the current patch, the
    /// remaining modes of `F3` update `β` through the diagonal linearization
    /// `-(n/2π)κₙ`, and its `Y₁` mode updates `c̃`.
    pub fn solve(&self, epsilon: f64, delta: f64, tau: f64) -> Result<PatchSolution> {
        self.check_box(epsilon, delta, tau)?;
        let grid = self.line_grid()?;
        let n = grid.n();
        let mut beta = ShapeCoeffs::zeros(self.cfg.n_beta);
        let mut state = PatchState {
            epsilon,
            delta,
            tau,
            c_tilde: -1.0 / (4.0 * PI),
            beta: beta.clone(),
            eta_tilde: vec![0.0; n],
            psi_tilde: vec![0.0; n],
            grid,
            a: self.profile().a_star,
            mu: 0.0,
        };
        if delta == 0.0 {
            if epsilon != 0.0 || tau != 0.0 {
                return Err(Error::InvalidArgument("δ = 0 is only the trivial state ε = τ = 0".into()));
            }
            let d = self.derive(&beta, 0.0, None)?;
            let residual = self.assemble(&state, &d)?;
            state.mu = residual.mu;
            return Ok(PatchSolution { state, residual, map: d.map, disk: d.sol, far: d.far, iterations: 0, history: vec![] });
        }
        beta.set(2, -delta * tau);
        if epsilon != 0.0 {
            let pred = asymptotic_predictor(epsilon, &self.params, SurfaceGrid::Line(grid)).map_err(|e| e.layer("predictor"))?;
            state.eta_tilde = pred.eta.iter().map(|v| v / epsilon).collect();
            state.psi_tilde = pred.psi.iter().map(|v| v / epsilon).collect();
        }
        let nodes = grid.nodes();
        let newton = NewtonConfig { tol: (epsilon.abs() * self.cfg.tol).min(self.cfg.newton.tol), ..self.cfg.newton };
        let mut warm: Option<Vec<f64>> = None;
        let mut history = Vec::new();
        for it in 0..self.cfg.max_iter {
            state.beta = beta.clone();
            let d = self.derive(&beta, delta, warm.as_deref())?;
            warm = Some(d.sol.u[self.disk.grid.k..].to_vec());
            state.a = d.sol.a;
            if epsilon != 0.0 {
                let sampler = |x: &[f64], e: &[f64]| d.far.sample_surface(x, e);
                let rep = surface_solve(&state.surface(), &self.params, &sampler, &newton).map_err(|e| e.layer("surface"))?;
                state.eta_tilde = rep.state.eta.iter().map(|v| v / epsilon).collect();
                state.psi_tilde = rep.state.psi.iter().map(|v| v / epsilon).collect();
            } else {
                // ε → 0 limit of the surface equations: η̃ = 0, ψ̃' = -∂₁𝐆
                state.psi_tilde = nodes.iter().map(|&x| d.far.eval(x, 1.0).map(|g| -g)).collect::<Result<_>>()?;
            }
            let (f3, mu, h) = self.boundary_residual(&state, &d).map_err(|e| e.layer("boundary residual"))?;
            state.mu = mu;
            let f3_norm = max_abs(&f3);
            history.push(f3_norm);
            if !f3_norm.is_finite() {
                break;
            }
            if f3_norm < self.cfg.tol {
                let residual = self.assemble(&state, &d)?;
                if residual.norm() < 10.0 * self.cfg.tol {
                    return Ok(PatchSolution { state, residual, map: d.map, disk: d.sol, far: d.far, iterations: it, history });
                }
            }
            state.c_tilde -= h;
            for m in 2..self.cfg.n_beta {
                let y = y_coefficient(&f3, m);
                let gain = -(m as f64) / (2.0 * PI) * self.kappa[m - 1];
                beta.set(m + 1, beta.get(m + 1) - y / gain);
            }
        }
        Err(Error::NoConvergence { iterations: self.cfg.max_iter, residual: history.last().copied().unwrap_or(f64::NAN) }
            .layer("patch"))
    }
}

pub fn solve_patch(
    epsilon: f64,
    delta: f64,
    tau: f64,
    params: &PhysicalParams,
    gamma: &StrengthFn,
    cfg: &PatchConfig,
) -> Result<PatchSolution> {
    PatchContext::new(params, gamma, *cfg)?.solve(epsilon, delta, tau)
}

pub fn patch_residual(state: &PatchState, ctx: &PatchContext) -> Result<PatchResidual> {
    ctx.residual(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex_green::Setting;

    fn ctx() -> PatchContext {
        let params = PhysicalParams::new(9.81, 1.0, Setting::Localized).unwrap();
        let cfg = PatchConfig { n_line: 1024, half_width: 100.0, ..PatchConfig::default() };
        PatchContext::new(&params, &StrengthFn::quadratic(), cfg).unwrap()
    }

    #[test]
    fn trivial_state() {
        let c = ctx();
        let s = c.solve(0.0, 0.0, 0.0).unwrap();
        assert!((s.state.c_tilde + 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((s.state.mu - 2f64.ln() / (2.0 * PI)).abs() < 1e-15);
        assert!(s.residual.norm() < 1e-12, "{:?}", s.residual.norm());
        assert!(c.solve(0.01, 0.0, 0.0).is_err());
        assert!(c.solve(0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn disk_boundary_residual_matches_closed_form() {
        let c = ctx();
        let grid = c.line_grid().unwrap();
        let n = grid.n();
        let delta = 0.02;
        let st = PatchState {
            epsilon: 0.0,
            delta,
            tau: 0.0,
            c_tilde: -0.07,
            beta: ShapeCoeffs::zeros(c.cfg.n_beta),
            eta_tilde: vec![0.0; n],
            psi_tilde: vec![0.0; n],
            grid,
            a: c.profile().a_star,
            mu: 0.0,
        };
        let r = c.residual(&st).unwrap();
        let k = r.f3.len();
        for (j, v) in r.f3.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / k as f64;
            let w = Complex64::from_polar(delta, t) - Complex64::new(0.0, 2.0);
            // ∂θ[c̃δ sin θ - (1/2π) log|δe^{iθ} - 2i|]
            let exact = st.c_tilde * delta * t.cos() - (w.conj() * Complex64::new(0.0, 1.0) * Complex64::from_polar(delta, t)).re / (2.0 * PI * w.norm_sqr());
            assert!((v - exact).abs() < 1e-10, "{v} {exact}");
        }
    }

    #[test]
    fn converged_patch() {
        let c = ctx();
        let s = c.solve(0.01, 0.05, 0.1).unwrap();
        assert!(s.residual.norm() < 1e-8);
        assert!((s.vorticity_mass() - 1.0).abs() < 1e-8);
        assert!((s.state.beta.get(2) + 0.05 * 0.1).abs() < 1e-15);
        // symmetric surface
        let e = &s.state.eta_tilde;
        assert!((e[1] - e[e.len() - 1]).abs() < 1e-10);
    }

    #[test]
    fn speed_tends_to_point_vortex_limit() {
        let c = ctx();
        let d = |delta: f64| (c.solve(0.0, delta, 0.0).unwrap().state.c_tilde + 1.0 / (4.0 * PI)).abs();
        let (a, b) = (d(0.04), d(0.02));
        assert!(b < a);
    }
}
