//! Uniform grids on a periodic interval and on a truncated line, with
//! FFT-based derivatives, Fourier multipliers and symmetry projections.
//!
//! Nodes are `x_j = -πL + 2πL j / n`. Coefficients follow the physical basis
//! `e^{i m x / L}`, so `f(x_j) = Σ_m c_m e^{i m x_j / L}` with
//! `m ∈ (-n/2, n/2]`. The Nyquist mode is treated as a cosine.

use crate::error::{Error, Result};
use crate::json17;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde_json::{json, Value};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Plain forward DFT, `X_k = Σ_j x_j e^{-2πi jk/n}`.
pub fn fft(data: &mut [Complex64]) {
    plan(data.len(), false).process(data);
}

/// Unnormalized inverse DFT, `x_j = Σ_k X_k e^{2πi jk/n}`.
pub fn ifft(data: &mut [Complex64]) {
    plan(data.len(), true).process(data);
}

/// Signed wavenumber of FFT slot `k` on an `n`-point grid.
#[inline]
pub fn mode_of(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    l: f64,
    n: usize,
}

impl PeriodicGrid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("period scale must be positive, got {l}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!("n_modes must be even and >= 8, got {n}")));
        }
        Ok(Self { l, n })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        2.0 * PI * self.l
    }

    pub fn spacing(&self) -> f64 {
        self.period() / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -PI * self.l + 2.0 * PI * self.l * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Index of the node at `-x_j`.
    #[inline]
    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for a grid of {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self { grid, values: vec![0.0; grid.n()] }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    /// Coefficients `c_m` in FFT slot order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        coefficients(&self.values)
    }

    pub fn from_coefficients(grid: PeriodicGrid, coeffs: &[Complex64]) -> Self {
        Self { grid, values: from_coefficients(coeffs) }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    /// Trigonometric interpolant at an arbitrary abscissa.
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate(&self.coefficients(), self.grid.l(), x)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "grid": { "L": self.grid.l(), "n": self.grid.n() },
            "values": self.values,
        })
    }

    pub fn to_json_string(&self) -> String {
        json17::to_string(&self.to_json())
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let l = v["grid"]["L"]
            .as_f64()
            .ok_or_else(|| Error::Parse("missing grid.L".into()))?;
        let n = v["grid"]["n"]
            .as_u64()
            .ok_or_else(|| Error::Parse("missing grid.n".into()))? as usize;
        let values = parse_values(&v["values"])?;
        Self::new(PeriodicGrid::new(l, n)?, values)
    }
}

pub(crate) fn parse_values(v: &Value) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Parse("values must be an array".into()))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| Error::Parse("non-numeric value".into())))
        .collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `c_m = (1/n) Σ_j f_j e^{-i m x_j / L}` in FFT slot order.
pub fn coefficients(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    let scale = 1.0 / n as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        // e^{-i m x_j/L} = (-1)^m e^{-2πi jm/n} because x_0 = -πL.
        let sign = if mode_of(k, n) % 2 == 0 { 1.0 } else { -1.0 };
        *c *= scale * sign;
    }
    buf
}

pub fn from_coefficients(coeffs: &[Complex64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| if mode_of(k, n) % 2 == 0 { c } else { -c })
        .collect();
    ifft(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

pub fn interpolate(coeffs: &[Complex64], l: f64, x: f64) -> f64 {
    let n = coeffs.len();
    let mut s = coeffs[0].re;
    for k in 1..n / 2 {
        let e = Complex64::from_polar(1.0, k as f64 * x / l);
        s += 2.0 * (coeffs[k] * e).re;
    }
    let m = (n / 2) as f64;
    s + coeffs[n / 2].re * (m * x / l).cos()
}

fn apply_symbol(values: &[f64], symbol: impl Fn(i64) -> Complex64) -> Vec<f64> {
    let mut c = coefficients(values);
    let n = values.len();
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= symbol(mode_of(k, n));
    }
    from_coefficients(&c)
}

/// Spectral derivative of nodal values; odd orders drop the Nyquist mode.
pub fn derivative_values(values: &[f64], l: f64, order: u32) -> Vec<f64> {
    let n = values.len() as i64;
    apply_symbol(values, |m| {
        if order % 2 == 1 && m == n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, m as f64 / l).powu(order)
        }
    })
}

pub fn derivative(f: &PeriodicField, order: i64) -> Result<PeriodicField> {
    if order <= 0 {
        return Err(Error::InvalidArgument(format!("derivative order must be positive, got {order}")));
    }
    Ok(PeriodicField {
        grid: f.grid,
        values: derivative_values(&f.values, f.grid.l(), order as u32),
    })
}

pub fn multiplier_values(values: &[f64], symbol: impl Fn(i64) -> f64) -> Vec<f64> {
    apply_symbol(values, |m| Complex64::new(symbol(m), 0.0))
}

pub fn fourier_multiplier(f: &PeriodicField, symbol: impl Fn(i64) -> f64) -> PeriodicField {
    PeriodicField { grid: f.grid, values: multiplier_values(&f.values, symbol) }
}

pub fn mean_zero_values(values: &[f64]) -> Vec<f64> {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| v - m).collect()
}

pub fn project_mean_zero(f: &PeriodicField) -> PeriodicField {
    PeriodicField { grid: f.grid, values: mean_zero_values(&f.values) }
}

pub fn parity_values(values: &[f64], parity: Parity) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            let r = values[(n - j) % n];
            match parity {
                Parity::Even => 0.5 * (values[j] + r),
                Parity::Odd => 0.5 * (values[j] - r),
            }
        })
        .collect()
}

pub fn project_parity(f: &PeriodicField, parity: Parity) -> PeriodicField {
    PeriodicField { grid: f.grid, values: parity_values(&f.values, parity) }
}

/// Product of two band-limited fields with 3/2-rule zero padding.
pub fn dealiased_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    assert_eq!(n, b.len());
    let m = 3 * n / 2;
    let pad = |v: &[f64]| -> Vec<f64> {
        let c = coefficients(v);
        let mut p = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..n {
            let mo = mode_of(k, n);
            if mo == n as i64 / 2 {
                // split the Nyquist cosine between ±n/2
                p[n / 2] += 0.5 * c[k];
                p[m - n / 2] += 0.5 * c[k];
            } else {
                let slot = if mo >= 0 { mo as usize } else { (m as i64 + mo) as usize };
                p[slot] = c[k];
            }
        }
        from_coefficients(&p)
    };
    let pa = pad(a);
    let pb = pad(b);
    let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    let cp = coefficients(&prod);
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let mo = mode_of(k, n);
        if mo == n as i64 / 2 {
            c[k] = cp[n / 2] + cp[m - n / 2];
        } else {
            let slot = if mo >= 0 { mo as usize } else { (m as i64 + mo) as usize };
            c[k] = cp[slot];
        }
    }
    from_coefficients(&c)
}

/// Cosine coefficients `u_k`, `k = 0..=n/2`, of an even field:
/// `f(x) = Σ_k u_k cos(k x / L)`.
pub fn cos_coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let c = coefficients(values);
    (0..=n / 2)
        .map(|k| if k == 0 || k == n / 2 { c[k].re } else { 2.0 * c[k].re })
        .collect()
}

/// Sine coefficients `v_k`, `k = 1..n/2`, of an odd field.
pub fn sin_coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let c = coefficients(values);
    (1..n / 2).map(|k| -2.0 * c[k].im).collect()
}

pub fn from_cos_coefficients(u: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    for (k, &uk) in u.iter().enumerate() {
        if k == 0 || k == n / 2 {
            c[k] = Complex64::new(uk, 0.0);
        } else {
            c[k] = Complex64::new(0.5 * uk, 0.0);
            c[n - k] = Complex64::new(0.5 * uk, 0.0);
        }
    }
    from_coefficients(&c)
}

/// Symmetric truncated line `[-half_width, half_width)` with periodic wrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid {
    half_width: f64,
    n: usize,
}

impl LineGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("half_width must be positive, got {half_width}")));
        }
        PeriodicGrid::new(half_width / PI, n)?;
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The same nodes seen as one period of length `2·half_width`.
    pub fn periodic(&self) -> PeriodicGrid {
        PeriodicGrid { l: self.half_width / PI, n: self.n }
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.periodic().nodes()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }
}

pub const DEFAULT_DECAY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LineField {
    pub grid: LineGrid,
    pub values: Vec<f64>,
}

impl LineField {
    pub fn new(grid: LineGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument("length mismatch".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: LineGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.nodes().into_iter().map(f).collect() }
    }

    pub fn as_periodic(&self) -> PeriodicField {
        PeriodicField { grid: self.grid.periodic(), values: self.values.clone() }
    }

    /// Largest magnitude at the two ends of the interval.
    pub fn boundary_magnitude(&self) -> f64 {
        let n = self.values.len();
        // x_0 = -half_width; the last node sits one spacing short of +half_width
        self.values[0].abs().max(self.values[n - 1].abs())
    }

    pub fn decays(&self, tol: f64) -> bool {
        self.boundary_magnitude() <= tol
    }

    pub fn to_json(&self) -> Value {
        json!({
            "grid": { "half_width": self.grid.half_width(), "n": self.grid.n() },
            "values": self.values,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let hw = v["grid"]["half_width"]
            .as_f64()
            .ok_or_else(|| Error::Parse("missing grid.half_width".into()))?;
        let n = v["grid"]["n"]
            .as_u64()
            .ok_or_else(|| Error::Parse("missing grid.n".into()))? as usize;
        Self::new(LineGrid::new(hw, n)?, parse_values(&v["values"])?)
    }
}

pub fn project_parity_line(f: &LineField, parity: Parity) -> LineField {
    LineField { grid: f.grid, values: parity_values(&f.values, parity) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(l: f64, n: usize) -> PeriodicGrid {
        PeriodicGrid::new(l, n).unwrap()
    }

    #[test]
    fn nodes_follow_the_stated_formula() {
        let g = grid(1.5, 16);
        for j in 0..16 {
            let x = -PI * 1.5 + 2.0 * PI * 1.5 * j as f64 / 16.0;
            assert_eq!(g.node(j), x);
        }
        assert!(PeriodicGrid::new(1.0, 6).is_err());
        assert!(PeriodicGrid::new(1.0, 9).is_err());
        assert!(PeriodicGrid::new(-1.0, 16).is_err());
    }

    #[test]
    fn derivative_of_cosine() {
        let l = 1.7;
        let g = grid(l, 32);
        let f = PeriodicField::from_fn(g, |x| (x / l).cos());
        let d = derivative(&f, 1).unwrap();
        for (x, v) in g.nodes().iter().zip(&d.values) {
            assert!((v + (x / l).sin() / l).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let f = PeriodicField::from_fn(grid(1.0, 16), |_| 3.0);
        assert!(derivative(&f, 1).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn second_derivative_matches_refined_finite_differences() {
        let l = 0.8;
        let g = grid(l, 32);
        let f = |x: f64| (3.0 * x / l).cos();
        let d2 = derivative(&PeriodicField::from_fn(g, f), 2).unwrap();
        let h = 1e-4;
        for (x, v) in g.nodes().iter().zip(&d2.values) {
            let fd = (f(x + h) - 2.0 * f(*x) + f(x - h)) / (h * h);
            assert!((v - fd).abs() < 1e-4 * (9.0 / (l * l)), "{v} vs {fd}");
        }
    }

    #[test]
    fn nonpositive_order_rejected() {
        let f = PeriodicField::zeros(grid(1.0, 8));
        assert!(derivative(&f, 0).is_err());
        assert!(derivative(&f, -1).is_err());
    }

    #[test]
    fn multiplier_examples() {
        let l = 1.3;
        let g = grid(l, 32);
        let f = PeriodicField::from_fn(g, |x| (2.0 * x / l).cos());
        let id = fourier_multiplier(&f, |_| 1.0);
        for (a, b) in id.values.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-14);
        }
        let abs = fourier_multiplier(&f, |m| m.abs() as f64 / l);
        for (a, b) in abs.values.iter().zip(&f.values) {
            assert!((a - 2.0 / l * b).abs() < 1e-13);
        }
        let (gr, al) = (1.0, 0.7);
        let h = PeriodicField::from_fn(g, |x| (x / l).sin().exp());
        let inv = fourier_multiplier(&h, |m| 1.0 / (gr + al * al * (m as f64 / l).powi(2)));
        let back = fourier_multiplier(&inv, |m| gr + al * al * (m as f64 / l).powi(2));
        for (a, b) in back.values.iter().zip(&h.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_projection_examples() {
        let l = 1.0;
        let g = grid(l, 16);
        assert!(project_mean_zero(&PeriodicField::from_fn(g, |_| 5.0)).max_abs() < 1e-15);
        let c = PeriodicField::from_fn(g, |x| (x / l).cos());
        let shifted = PeriodicField::from_fn(g, |x| 3.0 + (x / l).cos());
        let p = project_mean_zero(&shifted);
        for (a, b) in p.values.iter().zip(&c.values) {
            assert!((a - b).abs() < 1e-14);
        }
        let q = project_mean_zero(&c);
        for (a, b) in q.values.iter().zip(&c.values) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn parity_projection_examples() {
        let l = 2.0;
        let g = grid(l, 16);
        let s = PeriodicField::from_fn(g, |x| (x / l).sin());
        let c = PeriodicField::from_fn(g, |x| (x / l).cos());
        assert!(project_parity(&s, Parity::Even).max_abs() < 1e-15);
        let ce = project_parity(&c, Parity::Even);
        for (a, b) in ce.values.iter().zip(&c.values) {
            assert!((a - b).abs() < 1e-15);
        }
        let cs = PeriodicField::from_fn(g, |x| (x / l).cos() + (x / l).sin());
        let odd = project_parity(&cs, Parity::Odd);
        for (a, b) in odd.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn cosine_coefficients_round_trip() {
        let g = grid(1.0, 16);
        let f = PeriodicField::from_fn(g, |x| 0.3 + (2.0 * x).cos() - 0.2 * (8.0 * x).cos());
        let u = cos_coefficients(&f.values);
        assert!((u[0] - 0.3).abs() < 1e-14 && (u[2] - 1.0).abs() < 1e-14 && (u[8] + 0.2).abs() < 1e-14);
        let back = from_cos_coefficients(&u, 16);
        for (a, b) in back.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_reproduces_band_limited_function() {
        let l = 1.1;
        let g = grid(l, 16);
        let f = |x: f64| (x / l).cos() - 0.5 * (3.0 * x / l).sin();
        let fld = PeriodicField::from_fn(g, f);
        let c = fld.coefficients();
        for x in [0.123, -2.0, 3.3] {
            assert!((interpolate(&c, l, x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn dealiased_product_is_exact_for_band_limited_factors() {
        let g = grid(1.0, 16);
        let a = PeriodicField::from_fn(g, |x| (3.0 * x).cos());
        let b = PeriodicField::from_fn(g, |x| (4.0 * x).cos());
        let p = dealiased_product(&a.values, &b.values);
        // cos3x cos4x = (cos x + cos 7x)/2, all within band
        for (x, v) in g.nodes().iter().zip(&p) {
            assert!((v - 0.5 * (x.cos() + (7.0 * x).cos())).abs() < 1e-14);
        }
        let c = PeriodicField::from_fn(g, |x| (6.0 * x).cos());
        let q = dealiased_product(&c.values, &c.values);
        // cos²6x = (1 + cos 12x)/2; mode 12 is beyond n/2 and is removed
        for v in &q {
            assert!((v - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = grid(0.7, 8);
        let f = PeriodicField::from_fn(g, |x| (x * 1.3).sin() / 3.0);
        let s = f.to_json_string();
        let v: Value = serde_json::from_str(&s).unwrap();
        let back = PeriodicField::from_json(&v).unwrap();
        assert_eq!(back, f);
        let lg = LineGrid::new(200.0, 16).unwrap();
        let lf = LineField::from_fn(lg, |x| 1.0 / (1.0 + x * x));
        let v: Value = serde_json::from_str(&json17::to_string(&lf.to_json())).unwrap();
        assert_eq!(LineField::from_json(&v).unwrap(), lf);
    }

    #[test]
    fn line_grid_is_symmetric_and_uniform() {
        let lg = LineGrid::new(200.0, 64).unwrap();
        let x = lg.nodes();
        assert!((x[0] + 200.0).abs() < 1e-12);
        for j in 1..64 {
            assert!((x[j] + x[64 - j]).abs() < 1e-11);
            assert!((x[j] - x[j - 1] - lg.spacing()).abs() < 1e-11);
        }
        let f = LineField::from_fn(lg, |x| (x * x - 1.0) / (1.0 + x * x).powi(2));
        assert!(f.decays(DEFAULT_DECAY_TOL * 1e4));
        let odd = project_parity_line(&LineField::from_fn(lg, |x| x / (1.0 + x * x)), Parity::Even);
        assert!(odd.values.iter().skip(1).all(|v| v.abs() < 1e-15));
    }

    fn smooth_field(a: &[f64], l: f64, n: usize) -> PeriodicField {
        PeriodicField::from_fn(grid(l, n), |x| {
            a.iter()
                .enumerate()
                .map(|(k, &ak)| ak * ((k as f64 + 1.0) * x / l + 0.3 * k as f64).cos())
                .sum::<f64>()
        })
    }

    proptest! {
        #[test]
        fn parseval(a in prop::collection::vec(-1.0f64..1.0, 5), l in 0.5f64..3.0) {
            let f = smooth_field(&a, l, 32);
            let lhs = f.values.iter().map(|v| v * v).sum::<f64>() / 32.0;
            let rhs: f64 = f.coefficients().iter().map(|c| c.norm_sqr()).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
        }

        #[test]
        fn round_trip(a in prop::collection::vec(-1.0f64..1.0, 5)) {
            let f = smooth_field(&a, 1.0, 32);
            let back = from_coefficients(&f.coefficients());
            let scale = f.max_abs().max(1e-300);
            for (x, y) in back.iter().zip(&f.values) {
                prop_assert!((x - y).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn first_twice_equals_second(a in prop::collection::vec(-1.0f64..1.0, 5), l in 0.5f64..3.0) {
            let f = smooth_field(&a, l, 32);
            let d11 = derivative(&derivative(&f, 1).unwrap(), 1).unwrap();
            let d2 = derivative(&f, 2).unwrap();
            let scale = d2.max_abs().max(1e-300);
            for (x, y) in d11.values.iter().zip(&d2.values) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn projections_commute_with_derivative(a in prop::collection::vec(-1.0f64..1.0, 5), c in -2.0f64..2.0) {
            let mut f = smooth_field(&a, 1.0, 32);
            f.values.iter_mut().enumerate().for_each(|(j, v)| *v += c + 0.1 * (j as f64 * 0.7).sin());
            let f = PeriodicField::from_coefficients(f.grid, &{
                let mut co = f.coefficients();
                co[16] = Complex64::new(0.0, 0.0);
                co
            });
            for order in 1..=2 {
                let a1 = derivative(&project_mean_zero(&f), order).unwrap();
                let a2 = project_mean_zero(&derivative(&f, order).unwrap());
                let b1 = derivative(&project_parity(&f, Parity::Even), order).unwrap();
                let b2 = project_parity(&derivative(&f, order).unwrap(), if order % 2 == 1 { Parity::Odd } else { Parity::Even });
                for j in 0..32 {
                    prop_assert!((a1.values[j] - a2.values[j]).abs() < 1e-11);
                    prop_assert!((b1.values[j] - b2.values[j]).abs() < 1e-11);
                }
            }
        }

        #[test]
        fn projections_are_idempotent(a in prop::collection::vec(-1.0f64..1.0, 8)) {
            let f = PeriodicField::new(grid(1.0, 8), a).unwrap();
            let m = project_mean_zero(&f);
            let mm = project_mean_zero(&m);
            let e = project_parity(&f, Parity::Even);
            let ee = project_parity(&e, Parity::Even);
            for j in 0..8 {
                prop_assert!((m.values[j] - mm.values[j]).abs() < 1e-12);
                prop_assert!((e.values[j] - ee.values[j]).abs() < 1e-12);
            }
        }
    }
}
