use super::{ConformalMap, DiskGrid};
use crate::error::{Error, Result};
use crate::vortex_green::{SurfaceSample, VortexGreen};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Surface height below which the multipole expansion is not trusted.
pub const SURFACE_FLOOR: f64 = 0.55;
/// Largest `δ|Γ|` allowed on the patch boundary.
pub const PATCH_RADIUS: f64 = 0.45;

/// `𝐆` of a patch `D = δΓ(B₁)` with unit-mass density `ϖ`, together with
/// the point image at `2e₂`.
///
/// Outside `D` the logarithmic potential is
/// `(1/2π)(log|x| - Re Σ_k Mₖ x⁻ᵏ / k)` with `Mₖ = ∫ yᵏ ϖ(y) dy
/// = δᵏ ∫ Γ(z)ᵏ ρ(z) dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFarField {
    pub delta: f64,
    /// `M₁, M₂, ...`
    pub moments: Vec<Complex64>,
    /// `M₀ = ∫ ρ`, which the normalization sets to 1.
    pub mass: f64,
    pub radius: f64,
}

impl PatchFarField {
    pub fn new(map: &ConformalMap, grid: &DiskGrid, density: &[f64], delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("δ must be nonnegative, got {delta}")));
        }
        let radius = delta * map.max_boundary_radius(4 * grid.k);
        if !(radius < PATCH_RADIUS) {
            return Err(Error::Domain(format!("patch reaches |x| = {radius:.3}, beyond {PATCH_RADIUS}")));
        }
        let mass = grid.integrate(density);
        let gz: Vec<Complex64> = grid.points().iter().map(|&z| map.eval(z) * delta).collect();
        let mut pw = vec![Complex64::new(1.0, 0.0); gz.len()];
        let mut moments = Vec::new();
        // terms fall off like (radius / SURFACE_FLOOR)^k
        let ratio = radius / SURFACE_FLOOR;
        let k_max = if ratio > 0.0 { ((1e-17f64).ln() / ratio.ln()).ceil().clamp(1.0, 200.0) as usize } else { 0 };
        for _ in 0..k_max {
            let w: Vec<Complex64> = pw.iter_mut().zip(&gz).zip(density).map(|((p, y), r)| {
                *p *= y;
                *p * r
            }).collect();
            moments.push(grid.integrate_complex(&w));
        }
        Ok(Self { delta, moments, mass, radius })
    }

    fn check(&self, x: Complex64) -> Result<()> {
        if !(x.im > SURFACE_FLOOR) {
            return Err(Error::Domain(format!("surface point at x₂ = {:.3} is below {SURFACE_FLOOR}", x.im)));
        }
        Ok(())
    }

    /// Multipole correction to the point potential, its first and second
    /// complex derivatives.
    fn correction(&self, x: Complex64) -> (Complex64, Complex64, Complex64) {
        let inv = 1.0 / x;
        let mut p = Complex64::new(1.0, 0.0);
        let (mut f, mut d1, mut d2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (i, m) in self.moments.iter().enumerate() {
            let k = (i + 1) as f64;
            p *= inv;
            f -= m * p / k;
            d1 += m * p * inv;
            d2 -= m * p * inv * inv * (k + 1.0);
        }
        let s = 1.0 / (2.0 * PI);
        (f * s, d1 * s, d2 * s)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> Result<f64> {
        let x = Complex64::new(x1, x2);
        self.check(x)?;
        Ok(VortexGreen::localized().eval(x1, x2)? + self.correction(x).0.re)
    }

    pub fn grad(&self, x1: f64, x2: f64) -> Result<[f64; 2]> {
        let x = Complex64::new(x1, x2);
        self.check(x)?;
        let g = VortexGreen::localized().grad(x1, x2)?;
        let d = self.correction(x).1;
        Ok([g[0] + d.re, g[1] - d.im])
    }

    /// Gradient and Hessian at `(x_j, 1 + η_j)`.
    pub fn sample_surface(&self, x: &[f64], eta: &[f64]) -> Result<SurfaceSample> {
        if let Some(m) = eta.iter().cloned().reduce(f64::min) {
            self.check(Complex64::new(0.0, 1.0 + m))?;
        }
        let mut s = VortexGreen::localized().sample_surface(x, eta)?;
        for j in 0..x.len() {
            let (_, d1, d2) = self.correction(Complex64::new(x[j], 1.0 + eta[j]));
            s.g1[j] += d1.re;
            s.g2[j] -= d1.im;
            s.h11[j] += d2.re;
            s.h12[j] -= d2.im;
            s.h22[j] -= d2.re;
        }
        Ok(s)
    }
}
