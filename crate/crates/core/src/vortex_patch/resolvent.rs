use super::RadialProfile;
use crate::error::{Error, Result};
use crate::json17::fmt_f64;
use nalgebra::DVector;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

/// Solution `qₙ` of `(∂ᵣ² + ∂ᵣ/r - n²/r² - γ'(u*)) q = a* γ(u*) rⁿ`,
/// `q(1) = 0`, and the coefficient `κₙ = 1 - 2π((n+1)/n) qₙ'(1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialResolvent {
    pub n: usize,
    /// Values at the profile's radial nodes.
    pub q: Vec<f64>,
    pub slope: f64,
    pub kappa: f64,
}

pub fn solve_resolvent(profile: &RadialProfile, n: usize) -> Result<RadialResolvent> {
    if n == 0 {
        return Err(Error::InvalidArgument("resolvent mode must be at least 1".into()));
    }
    let ops = &profile.ops;
    let gamma = &profile.strength;
    let m = ops.m();
    let u = &profile.u[1..];
    let dg: Vec<f64> = u.iter().map(|&v| gamma.deriv(v)).collect();
    let rhs = DVector::from_iterator(
        m - 1,
        u.iter().zip(&ops.r[1..]).map(|(&v, &r)| profile.a_star * gamma.eval(v) * r.powi(n as i32)),
    );
    let sol = ops
        .interior_operator(n, &dg)
        .lu()
        .solve(&rhs)
        .ok_or(Error::Degenerate { mode: n, sigma: 0.0 })?;
    let mut q = vec![0.0];
    q.extend(sol.iter().cloned());
    let slope = ops.derivative(&q, n % 2 == 1)[0];
    let nf = n as f64;
    Ok(RadialResolvent { n, q, slope, kappa: 1.0 - 2.0 * PI * (nf + 1.0) / nf * slope })
}

/// `κ₁..κ_{n_max}`; mode `n` of `∂_θ D_βH̃(0)` acts by `-(n/2π) κₙ`.
pub fn linearized_h_spectrum(profile: &RadialProfile, n_max: usize) -> Result<Vec<f64>> {
    (1..=n_max).map(|n| solve_resolvent(profile, n).map(|r| r.kappa)).collect()
}

/// CSV with columns `r, F*, q1..qn` at the radial nodes.
pub fn write_radial_fixture(path: &Path, profile: &RadialProfile, resolvents: &[RadialResolvent]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = vec!["r".to_string(), "F_star".to_string()];
    header.extend(resolvents.iter().map(|r| format!("q{}", r.n)));
    writeln!(f, "{}", header.join(","))?;
    for i in 0..profile.ops.m() {
        let mut row = vec![fmt_f64(profile.ops.r[i]), fmt_f64(profile.f_star[i])];
        row.extend(resolvents.iter().map(|r| fmt_f64(r.q[i])));
        writeln!(f, "{}", row.join(","))?;
    }
    f.flush()?;
    Ok(())
}
