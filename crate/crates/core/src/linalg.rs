//! Small dense linear algebra helpers shared by the solvers.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// LU factorization with a Hager-style 1-norm condition estimate.
pub struct Factored {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub condition: f64,
}

impl Factored {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() || n == 0 {
            return Err(Error::InvalidArgument("square nonempty matrix required".into()));
        }
        let norm1 = (0..n).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let lu = a.clone().lu();
        let lu_t = a.transpose().lu();
        let mut f = Self { lu, lu_t, condition: f64::INFINITY };
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        let inv_norm = f.inverse_norm1_estimate(n).unwrap_or(f64::INFINITY);
        f.condition = norm1 * inv_norm;
        if !f.condition.is_finite() {
            return Err(Error::Singular { condition: f.condition });
        }
        Ok(f)
    }

    fn inverse_norm1_estimate(&self, n: usize) -> Option<f64> {
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.lu.solve(&x)?;
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            if !est.is_finite() {
                return None;
            }
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.lu_t.solve(&xi)?;
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |(bj, bm), (i, v)| {
                if v.abs() > bm {
                    (i, v.abs())
                } else {
                    (bj, bm)
                }
            });
            if zmax <= z.dot(&x) {
                break;
            }
            x.fill(0.0);
            x[j] = 1.0;
        }
        Some(est)
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu
            .solve(b)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or(Error::Singular { condition: self.condition })
    }
}

/// Restarted GMRES with right preconditioning: solves `A M y = b`, `x = M y`.
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub fn gmres(
    apply: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    precond: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x, iterations: 0, residual: 0.0 });
    }
    let mut total = 0;
    let mut r = b.to_vec();
    loop {
        let beta = norm2(&r);
        if beta <= rel_tol * bnorm || total >= max_iter {
            return Ok(GmresOutcome { x, iterations: total, residual: beta / bnorm });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            let zk = precond(&v[k]);
            let mut w = apply(&zk)?;
            z.push(zk);
            // modified Gram-Schmidt, applied twice for stability
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    h[i][k] += hij;
                    axpy(-hij, vi, &mut w);
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            if den == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / den;
                sn[k] = h[k + 1][k] / den;
            }
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= rel_tol * bnorm || total >= max_iter || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &z[i], &mut x);
        }
        let ax = apply(&x)?;
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Chebyshev extreme points `cos(jπ/N)`, `j = 0..=N`, descending from 1.
pub fn cheb_points(n: usize) -> Vec<f64> {
    (0..=n).map(|j| (j as f64 * PI / n as f64).cos()).collect()
}

/// Chebyshev differentiation matrix on `cheb_points(n)`.
pub fn cheb_diff(n: usize) -> DMatrix<f64> {
    let x = cheb_points(n);
    let c = |i: usize| -> f64 {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        if i == 0 || i == n {
            2.0 * s
        } else {
            s
        }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}

/// Barycentric interpolation from `cheb_points(n)` values to `t`.
pub fn cheb_interp(values: &[f64], t: f64) -> f64 {
    let n = values.len() - 1;
    let x = cheb_points(n);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..=n {
        let d = t - x[j];
        if d == 0.0 {
            return values[j];
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            w *= 0.5;
        }
        num += w / d * values[j];
        den += w / d;
    }
    num / den
}

/// Row of barycentric weights so that `Σ_j row[j] v_j` interpolates at `t`.
pub fn cheb_interp_row(n: usize, t: f64) -> Vec<f64> {
    let x = cheb_points(n);
    let mut row = vec![0.0; n + 1];
    if let Some(j) = x.iter().position(|&xj| xj == t) {
        row[j] = 1.0;
        return row;
    }
    let mut den = 0.0;
    for j in 0..=n {
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            w *= 0.5;
        }
        row[j] = w / (t - x[j]);
        den += row[j];
    }
    row.iter_mut().for_each(|v| *v /= den);
    row
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

pub fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |m, &s| m.min(s))
}
