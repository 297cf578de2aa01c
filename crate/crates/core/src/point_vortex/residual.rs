use super::{PhysicalParams, PointVortexState};
use crate::dtn::{eval_interior_gradient, DtnConfig, DtnOperator, HarmonicExtension, ShapeBackend};
use crate::error::Result;
use crate::spectral::{derivative_values, max_abs};
use crate::vortex_green::SurfaceSample;

/// Bernoulli, kinematic and speed residuals.
///
/// Periodic: `F1` has its mean removed and `F2 = -∂ₓ(kinematic)`.
/// Localized: `F1` uses `b = g` and `F2` is the kinematic residual itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: f64,
}

impl Residual {
    pub fn norm(&self) -> f64 {
        max_abs(&self.f1).max(max_abs(&self.f2)).max(self.f3.abs())
    }
}

/// Direction `(e, ζ, φ, d)` in `(ε, η, ψ, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub d_epsilon: f64,
    pub zeta: Vec<f64>,
    pub phi: Vec<f64>,
    pub dc: f64,
}

impl Direction {
    pub fn zero(n: usize) -> Self {
        Self { d_epsilon: 0.0, zeta: vec![0.0; n], phi: vec![0.0; n], dc: 0.0 }
    }
}

pub(crate) fn dtn_config() -> DtnConfig {
    DtnConfig { shape_backend: ShapeBackend::Analytic, ..DtnConfig::default() }
}

/// Everything the residual and its linearization share at one state.
pub(crate) struct Frame<'a> {
    pub state: &'a PointVortexState,
    pub params: &'a PhysicalParams,
    pub op: DtnOperator,
    pub l: f64,
    pub deta: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub w: Vec<f64>,
    pub g_psi: Vec<f64>,
    pub ext: HarmonicExtension,
    pub s: SurfaceSample,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `∂₂ψ_ℋ` and `∂₁ψ_ℋ` on the surface
    pub bs: Vec<f64>,
    pub vs: Vec<f64>,
    pub c0: f64,
}

impl<'a> Frame<'a> {
    pub fn new(state: &'a PointVortexState, params: &'a PhysicalParams) -> Result<Self> {
        state.check(params, dtn_config().separation)?;
        let s = params.green().sample_surface(&state.grid.nodes(), &state.eta)?;
        Self::with_sample(state, params, s)
    }

    /// Frame with a caller-supplied `∇𝐆` sample on the surface.
    pub fn with_sample(state: &'a PointVortexState, params: &'a PhysicalParams, s: SurfaceSample) -> Result<Self> {
        let cfg = dtn_config();
        let eta = state.eta_field();
        let l = eta.grid.l();
        let op = DtnOperator::new(&eta, &cfg)?;
        let ext = op.extend(&state.psi)?;
        let g_psi = op.apply_ext(&ext);
        let deta = op.deta.clone();
        let dpsi = derivative_values(&state.psi, l, 1);
        let green = params.green();
        let n = state.eta.len();
        let eps = state.epsilon;
        let mut w = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut p = vec![0.0; n];
        for j in 0..n {
            w[j] = 1.0 + deta[j] * deta[j];
            q[j] = g_psi[j] + eps * (-deta[j] * s.g1[j] + s.g2[j]);
            p[j] = dpsi[j] - deta[j] * g_psi[j] + eps * w[j] * s.g1[j];
        }
        let (bs, vs) = op.surface_bv(&g_psi, &dpsi);
        Ok(Self { state, params, op, l, deta, dpsi, w, g_psi, ext, s, q, p, bs, vs, c0: green.self_speed_constant() })
    }

    fn curvature(&self) -> Vec<f64> {
        let t: Vec<f64> = self.deta.iter().zip(&self.w).map(|(d, w)| d / w.sqrt()).collect();
        derivative_values(&t, self.l, 1).into_iter().map(|v| -v).collect()
    }

    /// `cQ + ½Q² - P²/(2w)`, the part of `F1` that enters `b`.
    fn quadratic(&self) -> Vec<f64> {
        let c = self.state.c;
        (0..self.q.len())
            .map(|j| c * self.q[j] + 0.5 * self.q[j] * self.q[j] - self.p[j] * self.p[j] / (2.0 * self.w[j]))
            .collect()
    }

    pub fn residual(&self) -> Result<Residual> {
        let st = self.state;
        let g = self.params.g;
        let a2 = self.params.alpha * self.params.alpha;
        let kappa = self.curvature();
        let quad = self.quadratic();
        let n = quad.len();
        let mut f1: Vec<f64> = (0..n).map(|j| quad[j] + g * st.eta[j] + a2 * kappa[j]).collect();
        let mut kin: Vec<f64> = (0..n)
            .map(|j| st.c * self.deta[j] + self.dpsi[j] + st.epsilon * (self.s.g1[j] + self.deta[j] * self.s.g2[j]))
            .collect();
        if self.params.is_periodic() {
            let m = f1.iter().sum::<f64>() / n as f64;
            f1.iter_mut().for_each(|v| *v -= m);
            kin = derivative_values(&kin, self.l, 1).into_iter().map(|v| -v).collect();
        }
        let (_, d2) = eval_interior_gradient(&self.ext, (0.0, 0.0))?;
        let f3 = st.c + d2 - st.epsilon * self.c0;
        Ok(Residual { f1, f2: kin, f3 })
    }

    pub fn bernoulli_constant(&self) -> f64 {
        if !self.params.is_periodic() {
            return self.params.g;
        }
        let quad = self.quadratic();
        self.params.g + quad.iter().sum::<f64>() / quad.len() as f64
    }

    pub fn jacobian_apply(&self, dir: &Direction) -> Result<Residual> {
        let st = self.state;
        let n = st.eta.len();
        let (e, zeta, phi, d) = (dir.d_epsilon, &dir.zeta, &dir.phi, dir.dc);
        let eps = st.epsilon;
        let c = st.c;
        let g = self.params.g;
        let a2 = self.params.alpha * self.params.alpha;
        let s = &self.s;
        let dz = derivative_values(zeta, self.l, 1);
        let dphi = derivative_values(phi, self.l, 1);

        // δ(𝒢ψ) = 𝒢(φ - ζB) - ∂ₓ(ζV), and δψ_ℋ is the extension of φ - ζB
        let trace: Vec<f64> = (0..n).map(|j| phi[j] - zeta[j] * self.bs[j]).collect();
        let dext = self.op.extend(&trace)?;
        let g_trace = self.op.apply_ext(&dext);
        let zv: Vec<f64> = (0..n).map(|j| zeta[j] * self.vs[j]).collect();
        let dzv = derivative_values(&zv, self.l, 1);
        let dgpsi: Vec<f64> = (0..n).map(|j| g_trace[j] - dzv[j]).collect();

        let mut db = vec![0.0; n];
        let mut dkin = vec![0.0; n];
        let mut curv_arg = vec![0.0; n];
        for j in 0..n {
            let (ep, w) = (self.deta[j], self.w[j]);
            let zj = zeta[j];
            let dq = dgpsi[j] + e * (-ep * s.g1[j] + s.g2[j]) + eps * (-dz[j] * s.g1[j] - ep * zj * s.h12[j] + zj * s.h22[j]);
            let dp = dphi[j] - dz[j] * self.g_psi[j] - ep * dgpsi[j]
                + e * w * s.g1[j]
                + eps * (2.0 * ep * dz[j] * s.g1[j] + w * zj * s.h12[j]);
            let (q, p) = (self.q[j], self.p[j]);
            db[j] = d * q + (c + q) * dq - p * dp / w + p * p * ep * dz[j] / (w * w) + g * zj;
            dkin[j] = d * ep + c * dz[j] + dphi[j]
                + e * (s.g1[j] + ep * s.g2[j])
                + eps * (zj * s.h12[j] + dz[j] * s.g2[j] + ep * zj * s.h22[j]);
            curv_arg[j] = dz[j] / (w * w.sqrt());
        }
        let dkappa = derivative_values(&curv_arg, self.l, 1);
        for j in 0..n {
            db[j] -= a2 * dkappa[j];
        }
        if self.params.is_periodic() {
            let m = db.iter().sum::<f64>() / n as f64;
            db.iter_mut().for_each(|v| *v -= m);
            dkin = derivative_values(&dkin, self.l, 1).into_iter().map(|v| -v).collect();
        }
        let (_, d2) = eval_interior_gradient(&dext, (0.0, 0.0))?;
        let f3 = d + d2 - e * self.c0;
        Ok(Residual { f1: db, f2: dkin, f3 })
    }
}

pub fn residual(state: &PointVortexState, params: &PhysicalParams) -> Result<Residual> {
    Frame::new(state, params)?.residual()
}

pub fn bernoulli_constant(state: &PointVortexState, params: &PhysicalParams) -> Result<f64> {
    Ok(Frame::new(state, params)?.bernoulli_constant())
}

pub fn jacobian_apply(state: &PointVortexState, params: &PhysicalParams, dir: &Direction) -> Result<Residual> {
    Frame::new(state, params)?.jacobian_apply(dir)
}
