use super::{build_conformal_map, ConformalMap, DiskGrid, DiskSolver, ShapeCoeffs};
use crate::spectral::derivative_values;
use nalgebra::DMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// `H̃(β)` sampled at `θ_j = 2πj/n` on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction {
    pub theta: Vec<f64>,
    pub values: Vec<f64>,
}

impl BoundaryFunction {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Coefficient of `Y_n = cos((n-1)π/2 + nθ)`, `n ≥ 1`.
    pub fn y_coefficient(&self, n: usize) -> f64 {
        y_coefficient(&self.values, n)
    }
}

pub(crate) fn y_coefficient(values: &[f64], n: usize) -> f64 {
    let k = values.len();
    let s: f64 = values
        .iter()
        .enumerate()
        .map(|(j, v)| v * ShapeCoeffs::basis(n, 2.0 * PI * j as f64 / k as f64))
        .sum();
    2.0 * s / k as f64
}

/// `H̃(w) = (1/2π) ∫_{B₁} log|Γ(w) - Γ(z)| ρ(z) dz` for `|w| = 1`, where
/// `ρ = ΔF̃` is given on `grid`.
///
/// `log|w - z|` is expanded in the moments `∫ zʲ ρ`, and the remaining
/// `log|(Γ(w) - Γ(z))/(w - z)|` is smooth and integrated on the grid.
pub fn eval_h(map: &ConformalMap, grid: &DiskGrid, density: &[f64], n_theta: usize) -> Result<BoundaryFunction> {
    if density.len() != grid.len() {
        return Err(Error::InvalidArgument("density does not match the disk grid".into()));
    }
    let z = grid.points();
    let j_max = grid.k / 2;
    let mut zj = vec![Complex64::new(1.0, 0.0); z.len()];
    let mut moments = Vec::with_capacity(j_max);
    for _ in 0..j_max {
        let weighted: Vec<Complex64> = zj.iter_mut().zip(&z).zip(density).map(|((p, zz), r)| {
            *p *= zz;
            *p * r
        }).collect();
        moments.push(grid.integrate_complex(&weighted));
    }
    let deg = map.degree();
    let theta: Vec<f64> = (0..n_theta).map(|j| 2.0 * PI * j as f64 / n_theta as f64).collect();
    let mut values = Vec::with_capacity(n_theta);
    let mut integrand = vec![0.0; z.len()];
    for &t in &theta {
        let w = Complex64::from_polar(1.0, t);
        let wbar = w.conj();
        let mut far = 0.0;
        let mut wp = Complex64::new(1.0, 0.0);
        for (j, m) in moments.iter().enumerate() {
            wp *= wbar;
            far -= (wp * m).re / (j + 1) as f64;
        }
        if deg >= 2 {
            for (p, zz) in z.iter().enumerate() {
                // Q = Σ aₙ Sₙ with S₁ = 1, S_{n+1} = zⁿ + w Sₙ
                let (mut s, mut zn) = (Complex64::new(1.0, 0.0), *zz);
                let mut q = Complex64::new(1.0, 0.0);
                for a in &map.a[2..] {
                    s = zn + w * s;
                    zn *= zz;
                    q += a * s;
                }
                if q.norm_sqr() == 0.0 {
                    return Err(Error::Domain("boundary point coincides with the image of a node".into()));
                }
                integrand[p] = 0.5 * q.norm_sqr().ln() * density[p];
            }
        } else {
            integrand.iter_mut().for_each(|v| *v = 0.0);
        }
        values.push((far + grid.integrate(&integrand)) / (2.0 * PI));
    }
    Ok(BoundaryFunction { theta, values })
}

/// Central-difference matrix of `β ↦ ∂θ H̃(β)` at `β = 0`. Column `n - 1`
/// is the direction `β_{n+1}`, row `n - 1` the `Yₙ` coefficient,
/// `n = 1..n_max`.
pub fn shape_linearization(solver: &DiskSolver, n_max: usize, lambda: f64) -> Result<DMatrix<f64>> {
    if n_max < 1 || n_max >= solver.grid.k / 2 {
        return Err(Error::InvalidArgument(format!("n_max must lie in 1..{}", solver.grid.k / 2)));
    }
    let n_theta = solver.grid.k;
    let mut m = DMatrix::zeros(n_max, n_max);
    for col in 0..n_max {
        let side = |s: f64| -> Result<Vec<f64>> {
            let mut b = ShapeCoeffs::zeros(n_max + 1);
            b.set(col + 2, s * lambda);
            let map = build_conformal_map(&b)?;
            let sol = solver.solve(&map, None)?;
            Ok(eval_h(&map, &solver.grid, &sol.density, n_theta)?.values)
        };
        let diff: Vec<f64> = side(1.0)?.iter().zip(side(-1.0)?).map(|(p, q)| (p - q) / (2.0 * lambda)).collect();
        let dtheta = derivative_values(&diff, 1.0, 1);
        for row in 0..n_max {
            m[(row, col)] = y_coefficient(&dtheta, row + 1);
        }
    }
    Ok(m)
}

/// Singular values of a linearization matrix, largest first, and the right
/// singular vector of the smallest one.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub singular_values: Vec<f64>,
    pub kernel_vector: Vec<f64>,
}

impl KernelReport {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let svd = m.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let last = *idx.last().expect("nonempty matrix");
        Self {
            singular_values: idx.iter().map(|&i| svd.singular_values[i]).collect(),
            kernel_vector: v_t.row(last).iter().copied().collect(),
        }
    }

    /// Number of singular values below `rel` times the largest.
    pub fn kernel_dimension(&self, rel: f64) -> usize {
        let top = self.singular_values[0];
        self.singular_values.iter().filter(|s| **s < rel * top).count()
    }

    /// `|cos|` of the angle between the kernel vector and the `β₂` direction.
    pub fn alignment_with_second_mode(&self) -> f64 {
        let norm = self.kernel_vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.kernel_vector[0].abs() / norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vortex_patch::{build_conformal_map, solve_radial_profile, DiskSolver, RadialConfig, SemilinearConfig, StrengthFn};

    fn solver() -> DiskSolver {
        let p = solve_radial_profile(&StrengthFn::quadratic(), &RadialConfig::default()).unwrap();
        DiskSolver::new(&p, SemilinearConfig::default()).unwrap()
    }

    fn h_of(s: &DiskSolver, beta: &ShapeCoeffs) -> BoundaryFunction {
        let map = build_conformal_map(beta).unwrap();
        let sol = s.solve(&map, None).unwrap();
        eval_h(&map, &s.grid, &sol.density, 64).unwrap()
    }

    #[test]
    fn trivial_shape_gives_zero() {
        let s = solver();
        let h = h_of(&s, &ShapeCoeffs::zeros(6));
        assert!(h.values.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn direct_quadrature_agrees_with_split() {
        // brute-force midpoint sum; ρ vanishes on the circle so the log
        // singularity at w is mild
        let s = solver();
        let mut b = ShapeCoeffs::zeros(4);
        b.set(2, 0.05);
        b.set(3, -0.03);
        let map = build_conformal_map(&b).unwrap();
        let g = &s.grid;
        let dens: Vec<f64> = g.points().iter().map(|z| (1.0 - z.norm_sqr()).powi(3) * (1.0 + 0.3 * z.im)).collect();
        let h = eval_h(&map, g, &dens, 16).unwrap();
        let (nr, nt) = (400, 800);
        for (j, &t) in h.theta.iter().enumerate().step_by(3) {
            let gw = map.boundary_point(t);
            let mut acc = 0.0;
            for a in 0..nr {
                let r = (a as f64 + 0.5) / nr as f64;
                for c in 0..nt {
                    let z = Complex64::from_polar(r, 2.0 * PI * (c as f64 + 0.5) / nt as f64);
                    let d = (1.0 - z.norm_sqr()).powi(3) * (1.0 + 0.3 * z.im);
                    acc += (gw - map.eval(z)).norm().ln() * d * r;
                }
            }
            acc *= 2.0 * PI / (nr * nt) as f64 / (2.0 * PI);
            assert!((acc - h.values[j]).abs() < 1e-5, "{acc} {}", h.values[j]);
        }
    }

    #[test]
    fn finite_differences_match_variation_formula() {
        let s = solver();
        let kappa = crate::vortex_patch::linearized_h_spectrum(s.profile(), 6).unwrap();
        let lam = 1e-4;
        for n in [1usize, 2, 3, 5] {
            let mut b = ShapeCoeffs::zeros(7);
            b.set(n + 1, lam);
            let h = h_of(&s, &b);
            for (t, v) in h.theta.iter().zip(&h.values) {
                let formula = kappa[n - 1] / (2.0 * PI) * (n as f64 * 0.5 * PI + n as f64 * t).cos();
                assert!((v / lam - formula).abs() < 1e-3, "n={n} {} {formula}", v / lam);
            }
        }
    }

    #[test]
    fn linearization_has_one_dimensional_kernel_along_second_mode() {
        let p = solve_radial_profile(&StrengthFn::quadratic(), &RadialConfig::default()).unwrap();
        let s = DiskSolver::new(&p, SemilinearConfig { tol: 1e-13, ..SemilinearConfig::default() }).unwrap();
        let m = shape_linearization(&s, 8, 1e-5).unwrap();
        let kappa = crate::vortex_patch::linearized_h_spectrum(&p, 8).unwrap();
        for n in 2..=8 {
            let expect = -(n as f64) / (2.0 * PI) * kappa[n - 1];
            assert!((m[(n - 1, n - 1)] - expect).abs() < 1e-6, "{n} {} {expect}", m[(n - 1, n - 1)]);
        }
        let r = KernelReport::new(&m);
        assert_eq!(r.kernel_dimension(1e-8), 1);
        assert!(r.alignment_with_second_mode() > 0.999);
    }
}
