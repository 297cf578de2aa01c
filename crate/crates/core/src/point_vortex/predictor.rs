use super::{PhysicalParams, PointVortexState, SurfaceGrid};
use crate::error::Result;
use crate::spectral::multiplier_values;

fn inverse_helmholtz(params: &PhysicalParams, grid: &SurfaceGrid, rhs: &[f64]) -> Vec<f64> {
    let l = grid.periodic().l();
    let (g, a2) = (params.g, params.alpha * params.alpha);
    multiplier_values(rhs, |m| 1.0 / (g + a2 * (m as f64 / l).powi(2)))
}

/// Leading-order small-`ε` solution: `c = ε c̃₀`, `ψ = 0`, `η = ε² η_*`.
pub fn asymptotic_predictor(epsilon: f64, params: &PhysicalParams, grid: SurfaceGrid) -> Result<PointVortexState> {
    let mut st = PointVortexState::trivial(grid);
    if epsilon == 0.0 {
        return Ok(st);
    }
    let green = params.green();
    let c0 = green.self_speed_constant();
    let x = grid.nodes();
    // on x₂ = 1 the tangential derivative vanishes, so only ∂₂𝐆 enters
    let mut src = Vec::with_capacity(x.len());
    for &xj in &x {
        let g2 = green.grad(xj, 1.0)?[1];
        src.push(c0 * g2 + 0.5 * g2 * g2);
    }
    if params.is_periodic() {
        let m = src.iter().sum::<f64>() / src.len() as f64;
        src.iter_mut().for_each(|v| *v -= m);
    }
    let eta_star = inverse_helmholtz(params, &grid, &src);
    st.epsilon = epsilon;
    st.c = epsilon * c0;
    st.eta = eta_star.iter().map(|v| -epsilon * epsilon * v).collect();
    Ok(st)
}
