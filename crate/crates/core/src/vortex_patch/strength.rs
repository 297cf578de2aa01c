use crate::error::{Error, Result};

/// Vorticity strength function `γ` with `ω̃ = γ(f̃)` inside the patch.
#[derive(Debug, Clone, Copy)]
pub struct StrengthFn {
    pub name: &'static str,
    pub gamma: fn(f64) -> f64,
    pub dgamma: fn(f64) -> f64,
    /// Smoothness order `N`; `u32::MAX` for analytic functions.
    pub order: u32,
}

fn quad_g(t: f64) -> f64 {
    -t + t * t
}

fn quad_dg(t: f64) -> f64 {
    -1.0 + 2.0 * t
}

fn exp_g(t: f64) -> f64 {
    -t * (-t).exp()
}

fn exp_dg(t: f64) -> f64 {
    (t - 1.0) * (-t).exp()
}

impl StrengthFn {
    /// `γ₀(t) = -t + t²`
    pub fn quadratic() -> Self {
        Self { name: "quadratic", gamma: quad_g, dgamma: quad_dg, order: u32::MAX }
    }

    /// `γ₁(t) = -t e^{-t}`
    pub fn exponential() -> Self {
        Self { name: "exponential", gamma: exp_g, dgamma: exp_dg, order: u32::MAX }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "quadratic" => Some(Self::quadratic()),
            "exponential" => Some(Self::exponential()),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.gamma)(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        (self.dgamma)(t)
    }

    /// Pointwise conditions: `γ(0) = 0`, `γ'(0) < 0` and `γ > 0` sampled on `[-range, 0)`.
    pub fn validate(&self, range: f64) -> Result<()> {
        if self.eval(0.0).abs() > 1e-14 {
            return Err(Error::Inadmissible(format!("{}: γ(0) = {:e}", self.name, self.eval(0.0))));
        }
        if !(self.deriv(0.0) < 0.0) {
            return Err(Error::Inadmissible(format!("{}: γ'(0) = {} is not negative", self.name, self.deriv(0.0))));
        }
        self.check_positive((1..=200).map(|k| -range * k as f64 / 200.0))
    }

    pub fn check_positive(&self, ts: impl IntoIterator<Item = f64>) -> Result<()> {
        for t in ts {
            if t < 0.0 && !(self.eval(t) > 0.0) {
                return Err(Error::Inadmissible(format!("{}: γ({t}) = {} is not positive", self.name, self.eval(t))));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_admissible_pointwise() {
        for g in [StrengthFn::quadratic(), StrengthFn::exponential()] {
            g.validate(50.0).unwrap();
            for t in [-2.0, -0.3, 0.0, 0.7] {
                let h = 1e-6;
                let fd = (g.eval(t + h) - g.eval(t - h)) / (2.0 * h);
                assert!((fd - g.deriv(t)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn wrong_sign_rejected() {
        fn g(t: f64) -> f64 {
            t
        }
        fn dg(_: f64) -> f64 {
            1.0
        }
        let s = StrengthFn { name: "linear", gamma: g, dgamma: dg, order: u32::MAX };
        assert!(matches!(s.validate(1.0), Err(Error::Inadmissible(_))));
        assert!(StrengthFn::by_name("cubic").is_none());
    }
}
