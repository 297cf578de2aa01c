//! Stream function of a unit point vortex at the origin paired with an
//! opposite image vortex at `(0, 2)`, on the line or repeated with period
//! `2πL` in `x₁`.

use crate::error::{Error, Result};
use crate::spectral::{derivative_values, PeriodicField};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    Localized,
    Periodic { l: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexGreen {
    pub setting: Setting,
}

/// Surface samples of `∇𝐆` and its Hessian at `(x_j, 1 + η_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSample {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub h11: Vec<f64>,
    pub h12: Vec<f64>,
    pub h22: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    /// `(-η', 1)·∇𝐆`
    pub normal: PeriodicField,
    /// `∂₁𝐆`
    pub tangential: PeriodicField,
}

const SINGULAR_RADIUS: f64 = 1e-12;

// log|sin w| without overflow for large |Im w|
fn log_abs_sin(w: Complex64) -> f64 {
    let (a, b) = (w.re, w.im.abs());
    let s = a.sin();
    let e = (-2.0 * b).exp();
    let em = -(-2.0 * b).exp_m1();
    b - std::f64::consts::LN_2 + 0.5 * (em * em + 4.0 * e * s * s).ln()
}

fn cot(w: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if w.im >= 0.0 {
        let q = (2.0 * i * w).exp();
        i * (q + 1.0) / (q - 1.0)
    } else {
        let p = (-2.0 * i * w).exp();
        i * (1.0 + p) / (1.0 - p)
    }
}

impl VortexGreen {
    pub fn localized() -> Self {
        Self { setting: Setting::Localized }
    }

    pub fn periodic(l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("L must be positive, got {l}")));
        }
        Ok(Self { setting: Setting::Periodic { l } })
    }

    fn check(&self, x1: f64, x2: f64) -> Result<()> {
        let r1 = match self.setting {
            Setting::Localized => x1,
            Setting::Periodic { l } => {
                let p = 2.0 * PI * l;
                x1 - p * (x1 / p).round()
            }
        };
        if r1.hypot(x2) < SINGULAR_RADIUS || r1.hypot(x2 - 2.0) < SINGULAR_RADIUS {
            return Err(Error::Domain(format!("Green's function singular at ({x1}, {x2})")));
        }
        Ok(())
    }

    pub fn eval(&self, x1: f64, x2: f64) -> Result<f64> {
        self.check(x1, x2)?;
        Ok(match self.setting {
            Setting::Localized => {
                (x1.hypot(x2).ln() - x1.hypot(x2 - 2.0).ln()) / (2.0 * PI)
            }
            Setting::Periodic { l } => {
                let z = Complex64::new(x1, x2);
                let zi = Complex64::new(x1, x2 - 2.0);
                (log_abs_sin(z / (2.0 * l)) - log_abs_sin(zi / (2.0 * l))) / (2.0 * PI)
            }
        })
    }

    /// `f'` of the complex potential `f` with `𝐆 = Re f`.
    fn dpot(&self, x1: f64, x2: f64) -> Complex64 {
        match self.setting {
            Setting::Localized => {
                let z = Complex64::new(x1, x2);
                let zi = Complex64::new(x1, x2 - 2.0);
                (z.inv() - zi.inv()) / (2.0 * PI)
            }
            Setting::Periodic { l } => {
                let z = Complex64::new(x1, x2) / (2.0 * l);
                let zi = Complex64::new(x1, x2 - 2.0) / (2.0 * l);
                (cot(z) - cot(zi)) / (4.0 * PI * l)
            }
        }
    }

    fn d2pot(&self, x1: f64, x2: f64) -> Complex64 {
        match self.setting {
            Setting::Localized => {
                let z = Complex64::new(x1, x2);
                let zi = Complex64::new(x1, x2 - 2.0);
                (-(z * z).inv() + (zi * zi).inv()) / (2.0 * PI)
            }
            Setting::Periodic { l } => {
                let z = Complex64::new(x1, x2) / (2.0 * l);
                let zi = Complex64::new(x1, x2 - 2.0) / (2.0 * l);
                let (c, ci) = (cot(z), cot(zi));
                // csc² = 1 + cot²
                -((1.0 + c * c) - (1.0 + ci * ci)) / (8.0 * PI * l * l)
            }
        }
    }

    pub fn grad(&self, x1: f64, x2: f64) -> Result<[f64; 2]> {
        self.check(x1, x2)?;
        let d = self.dpot(x1, x2);
        Ok([d.re, -d.im])
    }

    pub fn hess(&self, x1: f64, x2: f64) -> Result<[[f64; 2]; 2]> {
        self.check(x1, x2)?;
        let d = self.d2pot(x1, x2);
        Ok([[d.re, -d.im], [-d.im, -d.re]])
    }

    /// Gradient and Hessian at `(x_j, 1 + η_j)`.
    pub fn sample_surface(&self, x: &[f64], eta: &[f64]) -> Result<SurfaceSample> {
        let n = x.len();
        let mut s = SurfaceSample {
            g1: vec![0.0; n],
            g2: vec![0.0; n],
            h11: vec![0.0; n],
            h12: vec![0.0; n],
            h22: vec![0.0; n],
        };
        for j in 0..n {
            let y = 1.0 + eta[j];
            let g = self.grad(x[j], y)?;
            let h = self.hess(x[j], y)?;
            s.g1[j] = g[0];
            s.g2[j] = g[1];
            s.h11[j] = h[0][0];
            s.h12[j] = h[0][1];
            s.h22[j] = h[1][1];
        }
        Ok(s)
    }

    pub fn surface_traces(&self, eta: &PeriodicField, eps_scale: f64) -> Result<Traces> {
        let x = eta.grid.nodes();
        let d = derivative_values(&eta.values, eta.grid.l(), 1);
        let s = self.sample_surface(&x, &eta.values)?;
        let normal = (0..x.len()).map(|j| eps_scale * (-d[j] * s.g1[j] + s.g2[j])).collect();
        let tangential = s.g1.iter().map(|v| eps_scale * v).collect();
        Ok(Traces {
            normal: PeriodicField { grid: eta.grid, values: normal },
            tangential: PeriodicField { grid: eta.grid, values: tangential },
        })
    }

    /// Coefficient `c̃₀` of `ε` in the self-induced speed of the vortex.
    pub fn self_speed_constant(&self) -> f64 {
        match self.setting {
            Setting::Localized => -1.0 / (4.0 * PI),
            Setting::Periodic { l } => -1.0 / ((1.0 / l).tanh() * 4.0 * PI * l),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair_term(x1: f64, x2: f64, a: f64) -> f64 {
        let d = x1 - a;
        0.5 * ((d * d + x2 * x2) / (d * d + (x2 - 2.0) * (x2 - 2.0))).ln()
    }

    /// Symmetric truncated P.V. lattice sum, Richardson-extrapolated in K.
    fn lattice_sum(l: f64, x1: f64, x2: f64, k: i64) -> f64 {
        let s = |kk: i64| -> f64 {
            let mut acc = pair_term(x1, x2, 0.0);
            for j in 1..=kk {
                let a = 2.0 * PI * l * j as f64;
                acc += pair_term(x1, x2, a) + pair_term(x1, x2, -a);
            }
            acc / (2.0 * PI)
        };
        2.0 * s(2 * k) - s(k)
    }

    #[test]
    fn localized_values() {
        let g = VortexGreen::localized();
        assert!((g.eval(1.0, 0.0).unwrap() + 5f64.ln() / (4.0 * PI)).abs() < 1e-15);
        assert!(g.eval(0.0, 1.0).unwrap().abs() < 1e-15);
        let d = g.grad(1.0, 0.0).unwrap();
        assert!((d[0] - 0.8 / (2.0 * PI)).abs() < 1e-15);
        assert!((d[1] - 0.4 / (2.0 * PI)).abs() < 1e-15);
        for x2 in [-3.0, -0.5, 0.5, 1.5, 4.0] {
            assert_eq!(g.grad(0.0, x2).unwrap()[0], 0.0);
        }
        assert!(g.eval(0.0, 0.0).is_err());
        assert!(g.grad(0.0, 2.0).is_err());
    }

    #[test]
    fn periodic_matches_lattice_sum() {
        let g = VortexGreen::periodic(1.0).unwrap();
        let exact = lattice_sum(1.0, 0.7, 0.3, 100_000);
        assert!((g.eval(0.7, 0.3).unwrap() - exact).abs() < 1e-8);
        assert!(VortexGreen::periodic(1.0).unwrap().eval(2.0 * PI, 2.0).is_err());
    }

    #[test]
    fn periodicity_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for l in [0.5, 1.0, 2.0] {
            let g = VortexGreen::periodic(l).unwrap();
            for _ in 0..10 {
                let x1 = rng.gen_range(-3.0..3.0);
                let x2 = rng.gen_range(-2.0..1.8);
                let p = 2.0 * PI * l;
                assert!((g.eval(x1 + p, x2).unwrap() - g.eval(x1, x2).unwrap()).abs() < 1e-13);
                assert!((g.eval(-x1, x2).unwrap() - g.eval(x1, x2).unwrap()).abs() < 1e-14);
                let a = g.grad(x1, x2).unwrap();
                let b = g.grad(-x1, x2).unwrap();
                assert!((a[0] + b[0]).abs() < 1e-13 && (a[1] - b[1]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn harmonic_away_from_vortices() {
        let h = 1e-3;
        for g in [VortexGreen::localized(), VortexGreen::periodic(0.8).unwrap()] {
            for (x1, x2) in [(0.4, 0.5), (-1.0, 1.2), (2.0, -1.0), (0.3, 3.0)] {
                let f = |a: f64, b: f64| g.eval(a, b).unwrap();
                let lap = (f(x1 + h, x2) + f(x1 - h, x2) + f(x1, x2 + h) + f(x1, x2 - h) - 4.0 * f(x1, x2)) / (h * h);
                assert!(lap.abs() < 1e-6, "{lap}");
            }
        }
    }

    #[test]
    fn gradient_and_hessian_match_differences() {
        for g in [VortexGreen::localized(), VortexGreen::periodic(1.3).unwrap()] {
            for (x1, x2) in [(0.4, 0.5), (-1.0, 1.2), (2.0, -1.0)] {
                let h = 1e-6;
                let gr = g.grad(x1, x2).unwrap();
                let fd1 = (g.eval(x1 + h, x2).unwrap() - g.eval(x1 - h, x2).unwrap()) / (2.0 * h);
                let fd2 = (g.eval(x1, x2 + h).unwrap() - g.eval(x1, x2 - h).unwrap()) / (2.0 * h);
                assert!((gr[0] - fd1).abs() < 1e-7 && (gr[1] - fd2).abs() < 1e-7);
                let he = g.hess(x1, x2).unwrap();
                let a = g.grad(x1 + h, x2).unwrap();
                let b = g.grad(x1 - h, x2).unwrap();
                let c = g.grad(x1, x2 + h).unwrap();
                let d = g.grad(x1, x2 - h).unwrap();
                assert!((he[0][0] - (a[0] - b[0]) / (2.0 * h)).abs() < 1e-6);
                assert!((he[0][1] - (a[1] - b[1]) / (2.0 * h)).abs() < 1e-6);
                assert!((he[1][1] - (c[1] - d[1]) / (2.0 * h)).abs() < 1e-6);
                assert!((he[0][1] - (c[0] - d[0]) / (2.0 * h)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn gradient_decays_with_depth() {
        let g = VortexGreen::localized();
        let a = g.grad(0.3, -100.0).unwrap();
        let b = g.grad(0.3, -200.0).unwrap();
        let ratio = a[0].hypot(a[1]) / b[0].hypot(b[1]);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
        let p = VortexGreen::periodic(1.0).unwrap();
        let deep = p.grad(0.3, -40.0).unwrap();
        assert!(deep[0].hypot(deep[1]) < 1e-15);
        assert!(p.eval(0.3, -2000.0).unwrap().is_finite());
    }

    #[test]
    fn circulation_is_one() {
        for g in [VortexGreen::localized(), VortexGreen::periodic(0.7).unwrap()] {
            let m = 512;
            let r = 0.1;
            let mut s = 0.0;
            for k in 0..m {
                let t = 2.0 * PI * k as f64 / m as f64;
                let d = g.grad(r * t.cos(), r * t.sin()).unwrap();
                s += (d[0] * t.cos() + d[1] * t.sin()) * r * 2.0 * PI / m as f64;
            }
            assert!((s - 1.0).abs() < 1e-8, "{s}");
        }
    }

    #[test]
    fn flat_surface_traces() {
        let g = VortexGreen::localized();
        assert!((g.grad(0.0, 1.0).unwrap()[1] - 1.0 / PI).abs() < 1e-15);
        let gp = VortexGreen::periodic(1.0).unwrap();
        let grid = PeriodicGrid::new(1.0, 64).unwrap();
        let t = gp.surface_traces(&PeriodicField::zeros(grid), 1.0).unwrap();
        for j in 0..64 {
            let m = grid.mirror(j);
            assert!((t.normal.values[j] - t.normal.values[m]).abs() < 1e-15);
            assert!((t.tangential.values[j] + t.tangential.values[m]).abs() < 1e-15);
            // the image makes 𝐆 vanish on x₂ = 1
            assert!(t.tangential.values[j].abs() < 1e-15);
        }
    }

    #[test]
    fn periodic_flux_equals_unit_vorticity() {
        let l = 1.0;
        let grid = PeriodicGrid::new(l, 128).unwrap();
        let g = VortexGreen::periodic(l).unwrap();
        let eta = PeriodicField::from_fn(grid, |x| 0.1 * (x / l).cos() - 0.05 * (2.0 * x / l).cos());
        let t = g.surface_traces(&eta, 1.0).unwrap();
        assert!((t.normal.integral() - 1.0).abs() < 1e-8);
    }

    fn speed_sum(l: f64, k: i64) -> f64 {
        let a = PI * l;
        let mut s = 1.0;
        for j in (1..=k).rev() {
            s += 2.0 / ((j as f64 * a).powi(2) + 1.0);
        }
        // Euler-Maclaurin tail of the two half-sums beyond K
        let f = |t: f64| 1.0 / ((t * a).powi(2) + 1.0);
        let integral = (PI / 2.0 - (a * k as f64).atan()) / a;
        s + 2.0 * (integral - 0.5 * f(k as f64))
    }

    #[test]
    fn self_speed_constant_values() {
        assert!((VortexGreen::localized().self_speed_constant() + 0.0795774715459).abs() < 1e-12);
        for l in [0.5, 1.0, 2.0] {
            let c = VortexGreen::periodic(l).unwrap().self_speed_constant();
            let oracle = -speed_sum(l, 1_000_000) / (4.0 * PI);
            assert!((c - oracle).abs() < 1e-10, "{l}: {c} vs {oracle}");
        }
        let big = VortexGreen::periodic(1e3).unwrap().self_speed_constant();
        assert!((big + 1.0 / (4.0 * PI)).abs() < 1e-3);
    }
}
