use super::StrengthFn;
use crate::error::{Error, Result};
use crate::linalg::{cheb_diff, cheb_interp, cheb_interp_row, cheb_points, gauss_legendre, smallest_singular_value};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Chebyshev collocation in `r` on `[-1, 1]` folded onto the `(N+1)/2`
/// positive nodes, so that functions of definite parity are smooth at
/// `r = 0` and no node sits on the pole.
#[derive(Debug, Clone)]
pub struct RadialOps {
    pub n_cheb: usize,
    /// Positive nodes, descending, `r[0] = 1`.
    pub r: Vec<f64>,
    d1: [DMatrix<f64>; 2],
    d2: [DMatrix<f64>; 2],
    /// `∫₀¹ f r dr ≈ Σ weights[i] f(r_i)` for even `f`.
    pub weights: Vec<f64>,
}

fn fold(d: &DMatrix<f64>, n: usize, m: usize, parity: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| d[(i, j)] + parity * d[(i, n - j)])
}

impl RadialOps {
    pub fn new(n_cheb: usize) -> Result<Self> {
        if n_cheb % 2 == 0 || n_cheb < 5 {
            return Err(Error::InvalidArgument(format!("radial Chebyshev order must be odd and at least 5, got {n_cheb}")));
        }
        let m = (n_cheb + 1) / 2;
        let x = cheb_points(n_cheb);
        let d = cheb_diff(n_cheb);
        let dd = &d * &d;
        let d1 = [fold(&d, n_cheb, m, 1.0), fold(&d, n_cheb, m, -1.0)];
        let d2 = [fold(&dd, n_cheb, m, 1.0), fold(&dd, n_cheb, m, -1.0)];
        let (gx, gw) = gauss_legendre(n_cheb + 2);
        let mut weights = vec![0.0; m];
        for (t, w) in gx.iter().zip(&gw) {
            let rg = 0.5 * (t + 1.0);
            let row = cheb_interp_row(n_cheb, rg);
            for i in 0..m {
                weights[i] += 0.5 * w * rg * (row[i] + row[n_cheb - i]);
            }
        }
        Ok(Self { n_cheb, r: x[..m].to_vec(), d1, d2, weights })
    }

    pub fn m(&self) -> usize {
        self.r.len()
    }

    fn idx(odd: bool) -> usize {
        usize::from(odd)
    }

    /// `∂ᵣ` of a function of the given parity, sampled at the positive nodes.
    pub fn derivative(&self, values: &[f64], odd: bool) -> Vec<f64> {
        (&self.d1[Self::idx(odd)] * DVector::from_column_slice(values)).as_slice().to_vec()
    }

    /// `∂ᵣ² + ∂ᵣ/r - n²/r² - V` on the interior nodes, with a zero value at `r = 1`.
    pub fn interior_operator(&self, n: usize, potential: &[f64]) -> DMatrix<f64> {
        let odd = n % 2 == 1;
        let (d1, d2) = (&self.d1[Self::idx(odd)], &self.d2[Self::idx(odd)]);
        let m = self.m();
        let nn = (n * n) as f64;
        DMatrix::from_fn(m - 1, m - 1, |a, b| {
            let (i, j) = (a + 1, b + 1);
            let ri = self.r[i];
            let mut v = d2[(i, j)] + d1[(i, j)] / ri;
            if i == j {
                v -= nn / (ri * ri) + potential[a];
            }
            v
        })
    }

    pub fn interpolate(&self, values: &[f64], odd: bool, t: f64) -> f64 {
        let n = self.n_cheb;
        let p = if odd { -1.0 } else { 1.0 };
        let mut full = vec![0.0; n + 1];
        for (i, v) in values.iter().enumerate() {
            full[i] = *v;
            full[n - i] = p * v;
        }
        cheb_interp(&full, t)
    }

    pub fn integrate_r(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialConfig {
    /// Odd Chebyshev order on `[-1, 1]`.
    pub n_cheb: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Modes `0..=n_check` tested for nondegeneracy.
    pub n_check: usize,
    pub sigma_floor: f64,
    pub shoot_steps: usize,
    /// Largest `|u(0)|` tried when bracketing by shooting.
    pub max_amplitude: f64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self { n_cheb: 127, tol: 1e-12, max_iter: 50, n_check: 20, sigma_floor: 1e-6, shoot_steps: 400, max_amplitude: 1e4 }
    }
}

/// Radial solution `F̃* = a* u` of `ΔF̃ = a γ(F̃/a)` on the unit disk.
///
/// `u` solves the parameter-free problem `Δu = γ(u)`, `u(1) = 0`, and `a*`
/// is fixed by unit total vorticity.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub ops: RadialOps,
    pub u: Vec<f64>,
    pub a_star: f64,
    pub f_star: Vec<f64>,
    pub df_star: Vec<f64>,
    pub newton_iterations: usize,
    pub residual: f64,
    /// Smallest singular value over the checked modes.
    pub min_sigma: f64,
    pub strength: StrengthFn,
}

impl RadialProfile {
    pub fn r(&self) -> &[f64] {
        &self.ops.r
    }

    /// `∂ᵣF̃*(1)`
    pub fn boundary_slope(&self) -> f64 {
        self.df_star[0]
    }

    pub fn f_at(&self, r: f64) -> f64 {
        self.ops.interpolate(&self.f_star, false, r)
    }

    pub fn u_at(&self, r: f64) -> f64 {
        self.ops.interpolate(&self.u, false, r)
    }

    /// Range `[min u, 0]` visited by `F̃*/a*`.
    pub fn range(&self) -> (f64, f64) {
        (self.u.iter().cloned().fold(0.0, f64::min), 0.0)
    }
}

/// One shot of `u'' + u'/r = γ(u)`, `u(0) = -v0`, `u'(0) = 0`, by RK4 from a
/// series start. Returns `u(1)`, `u'(1)` and the path, or the first radius at
/// which `u` turns positive.
pub(crate) struct Shot {
    pub u1: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub du1: f64,
    pub crossing: Option<f64>,
    pub path: Vec<f64>,
}

pub(crate) fn shoot(gamma: &StrengthFn, v0: f64, steps: usize) -> Shot {
    let h = 1.0 / steps as f64;
    let u0 = -v0;
    let (g0, dg0) = (gamma.eval(u0), gamma.deriv(u0));
    let (a, b) = (g0 / 4.0, g0 * dg0 / 64.0);
    let mut u = u0 + a * h * h + b * h.powi(4);
    let mut w = 2.0 * a * h + 4.0 * b * h.powi(3);
    let mut path = Vec::with_capacity(steps + 1);
    path.push(u0);
    path.push(u);
    let f = |r: f64, u: f64, w: f64| (w, gamma.eval(u) - w / r);
    for k in 1..steps {
        let r = k as f64 * h;
        let (k1u, k1w) = f(r, u, w);
        let (k2u, k2w) = f(r + 0.5 * h, u + 0.5 * h * k1u, w + 0.5 * h * k1w);
        let (k3u, k3w) = f(r + 0.5 * h, u + 0.5 * h * k2u, w + 0.5 * h * k2w);
        let (k4u, k4w) = f(r + h, u + h * k3u, w + h * k3w);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        path.push(u);
        if !(u <= 0.0) && k + 1 < steps {
            return Shot { u1: f64::NAN, du1: f64::NAN, crossing: Some(r + h), path };
        }
    }
    Shot { u1: u, du1: w, crossing: None, path }
}

fn shot_defect(gamma: &StrengthFn, v0: f64, steps: usize) -> f64 {
    let s = shoot(gamma, v0, steps);
    match s.crossing {
        Some(r) => 1.0 - r,
        None if s.u1.is_finite() => s.u1,
        None => 1.0,
    }
}

/// Bisection for the amplitude whose shot first vanishes at `r = 1`.
pub(crate) fn shooting_amplitude(gamma: &StrengthFn, steps: usize, max_amplitude: f64) -> Result<f64> {
    let mut lo = 0.05;
    if shot_defect(gamma, lo, steps) >= 0.0 {
        return Err(Error::Inadmissible(format!("{}: no small negative radial state to start from", gamma.name)));
    }
    let mut hi = lo;
    loop {
        hi *= 1.5;
        if hi > max_amplitude {
            return Err(Error::Inadmissible(format!(
                "{}: no negative radial solution with |u(0)| ≤ {max_amplitude}",
                gamma.name
            )));
        }
        if shot_defect(gamma, hi, steps) >= 0.0 {
            break;
        }
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shot_defect(gamma, mid, steps) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn solve_radial_profile(gamma: &StrengthFn, cfg: &RadialConfig) -> Result<RadialProfile> {
    gamma.validate(1.0)?;
    let ops = RadialOps::new(cfg.n_cheb)?;
    let m = ops.m();
    let v0 = shooting_amplitude(gamma, cfg.shoot_steps, cfg.max_amplitude)?;
    let shot = shoot(gamma, v0, cfg.shoot_steps);
    let steps = cfg.shoot_steps as f64;
    let mut ui: Vec<f64> = ops.r[1..]
        .iter()
        .map(|&r| {
            let s = r * steps;
            let k = (s.floor() as usize).min(cfg.shoot_steps - 1);
            let t = s - k as f64;
            let hi = shot.path.get(k + 1).copied().unwrap_or(0.0);
            (1.0 - t) * shot.path[k] + t * hi
        })
        .collect();
    let lap = ops.interior_operator(0, &vec![0.0; m - 1]);
    let mut iterations = 0;
    let mut res = f64::INFINITY;
    for it in 0..=cfg.max_iter {
        let lu = &lap * DVector::from_column_slice(&ui);
        let r: Vec<f64> = (0..m - 1).map(|i| lu[i] - gamma.eval(ui[i])).collect();
        res = r.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        iterations = it;
        if res < cfg.tol {
            break;
        }
        if it == cfg.max_iter || !res.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residual: res });
        }
        let mut jac = lap.clone();
        for i in 0..m - 1 {
            jac[(i, i)] -= gamma.deriv(ui[i]);
        }
        let step = jac
            .lu()
            .solve(&DVector::from_vec(r))
            .ok_or(Error::Singular { condition: f64::INFINITY })?;
        for i in 0..m - 1 {
            ui[i] -= step[i];
        }
        // the collocation residual floors near N⁴ times roundoff, so a
        // negligible update also counts as converged
        let scale = ui.iter().fold(1.0, |a: f64, v| a.max(v.abs()));
        if step.amax() < 1e-12 * scale && it > 0 {
            let lu = &lap * DVector::from_column_slice(&ui);
            res = (0..m - 1).fold(0.0, |a: f64, i| a.max((lu[i] - gamma.eval(ui[i])).abs()));
            iterations = it + 1;
            break;
        }
    }
    let mut u = vec![0.0];
    u.extend_from_slice(&ui);
    if u[1..].iter().any(|&v| !(v < 0.0)) {
        return Err(Error::Inadmissible(format!("{}: radial solution is not negative", gamma.name)));
    }
    let du = ops.derivative(&u, false);
    if du[..m].iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Inadmissible(format!("{}: radial solution is not increasing", gamma.name)));
    }
    gamma.check_positive(u[1..].iter().cloned())?;
    let g: Vec<f64> = u.iter().map(|&v| gamma.eval(v)).collect();
    let a_star = 1.0 / (2.0 * PI * ops.integrate_r(&g));
    let mut min_sigma = f64::INFINITY;
    let dg: Vec<f64> = ui.iter().map(|&v| gamma.deriv(v)).collect();
    for n in 0..=cfg.n_check {
        let sigma = smallest_singular_value(&ops.interior_operator(n, &dg));
        if !(sigma > cfg.sigma_floor) {
            return Err(Error::Degenerate { mode: n, sigma });
        }
        min_sigma = min_sigma.min(sigma);
    }
    Ok(RadialProfile {
        f_star: u.iter().map(|v| a_star * v).collect(),
        df_star: du.iter().map(|v| a_star * v).collect(),
        ops,
        u,
        a_star,
        newton_iterations: iterations,
        residual: res,
        min_sigma,
        strength: *gamma,
    })
}
