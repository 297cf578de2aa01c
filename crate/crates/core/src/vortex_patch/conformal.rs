use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Smallest `|Γ'|` on the closed disk accepted by [`build_conformal_map`].
pub const UNIVALENCE_FLOOR: f64 = 0.1;

/// Coefficients `βₙ`, `n = 2..=n_max`, of `β(θ) = Σ βₙ cos((n-1)π/2 + nθ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeCoeffs {
    beta: Vec<f64>,
}

impl ShapeCoeffs {
    pub fn zeros(n_max: usize) -> Self {
        Self { beta: vec![0.0; n_max.saturating_sub(1)] }
    }

    /// `values[k]` is `β_{k+2}`.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { beta: values }
    }

    pub fn n_max(&self) -> usize {
        self.beta.len() + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.beta
    }

    pub fn get(&self, n: usize) -> f64 {
        if n < 2 {
            return 0.0;
        }
        self.beta.get(n - 2).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, n: usize, v: f64) {
        assert!(n >= 2 && n <= self.n_max(), "mode {n} outside 2..={}", self.n_max());
        self.beta[n - 2] = v;
    }

    pub fn basis(n: usize, theta: f64) -> f64 {
        ((n as f64 - 1.0) * 0.5 * PI + n as f64 * theta).cos()
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.beta.iter().enumerate().map(|(k, b)| b * Self::basis(k + 2, theta)).sum()
    }

    /// `Σ n^{2s} βₙ²`
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        self.beta.iter().enumerate().map(|(k, b)| ((k + 2) as f64).powf(2.0 * s) * b * b).sum()
    }
}

/// `Γ(z) = z + Σ_{n≥2} i^{n-1} βₙ zⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMap {
    /// `a[n]` multiplies `zⁿ`; `a[0] = 0`, `a[1] = 1`.
    pub a: Vec<Complex64>,
    pub shape: ShapeCoeffs,
    pub min_derivative: f64,
}

fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl ConformalMap {
    pub fn identity() -> Self {
        Self {
            a: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            shape: ShapeCoeffs::zeros(1),
            min_derivative: 1.0,
        }
    }

    pub fn degree(&self) -> usize {
        self.a.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.a.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        self.a
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (n, c)| acc * z + c * n as f64)
    }

    pub fn jacobian(&self, z: Complex64) -> f64 {
        self.deriv(z).norm_sqr()
    }

    pub fn boundary_point(&self, theta: f64) -> Complex64 {
        self.eval(Complex64::from_polar(1.0, theta))
    }

    /// `Γ(e^{iθ_k})` on `n` equispaced angles `θ_k = 2πk/n`.
    pub fn boundary_curve(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let p = self.boundary_point(2.0 * PI * k as f64 / n as f64);
                (p.re, p.im)
            })
            .collect()
    }

    pub fn max_boundary_radius(&self, n: usize) -> f64 {
        (0..n).map(|k| self.boundary_point(2.0 * PI * k as f64 / n as f64).norm()).fold(0.0, f64::max)
    }
}

fn sampled_min_derivative(map: &ConformalMap) -> f64 {
    let n_theta = 16 * map.degree().max(8);
    let mut m = f64::INFINITY;
    for i in 0..=16 {
        let r = i as f64 / 16.0;
        for k in 0..n_theta {
            m = m.min(map.deriv(Complex64::from_polar(r, 2.0 * PI * k as f64 / n_theta as f64)).norm());
        }
    }
    m
}

pub fn build_conformal_map(beta: &ShapeCoeffs) -> Result<ConformalMap> {
    if beta.values().iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidArgument("shape coefficients must be finite".into()));
    }
    let mut a = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    for n in 2..=beta.n_max() {
        a.push(i_pow(n - 1) * beta.get(n));
    }
    let mut map = ConformalMap { a, shape: beta.clone(), min_derivative: 1.0 };
    map.min_derivative = sampled_min_derivative(&map);
    if !(map.min_derivative > UNIVALENCE_FLOOR) {
        return Err(Error::ShapeTooDeformed { min_derivative: map.min_derivative });
    }
    Ok(map)
}
