use super::newton::{tangent_at, Layout};
use super::{newton_solve, Constraint, NewtonConfig, PhysicalParams, PointVortexState};
use crate::error::{Error, Result};
use crate::spectral::max_abs;
use crate::linalg::norm2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationConfig {
    pub ds: f64,
    pub n_steps: usize,
    pub max_halvings: usize,
    pub newton: NewtonConfig,
    pub blowup_threshold: f64,
    pub eps_floor: f64,
    pub nontrivial_floor: f64,
    pub separation_floor: f64,
    pub stop_on_flag: bool,
    /// `+1` follows increasing `ε` from the seed, `-1` decreasing.
    pub direction: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            ds: 1e-2,
            n_steps: 20,
            max_halvings: 8,
            newton: NewtonConfig::default(),
            blowup_threshold: 1e2,
            eps_floor: 1e-6,
            nontrivial_floor: 1e-4,
            separation_floor: 0.05,
            stop_on_flag: true,
            direction: 1.0,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ds > 0.0 && self.ds.is_finite()) {
            return Err(Error::InvalidArgument(format!("ds must be positive, got {}", self.ds)));
        }
        if !(self.newton.tol > 0.0) || self.newton.max_iter == 0 {
            return Err(Error::InvalidArgument("Newton tolerance and iteration cap must be positive".into()));
        }
        if self.direction != 1.0 && self.direction != -1.0 {
            return Err(Error::InvalidArgument("direction must be +1 or -1".into()));
        }
        for (name, v) in [
            ("blowup_threshold", self.blowup_threshold),
            ("eps_floor", self.eps_floor),
            ("nontrivial_floor", self.nontrivial_floor),
            ("separation_floor", self.separation_floor),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Which of the three global alternatives a point signals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags {
    /// `‖(ε, η, ψ, c)‖∞` above the blowup threshold.
    pub blowup: bool,
    /// `|ε|` below the floor while `(η, ψ)` stays nontrivial.
    pub irrotational: bool,
    /// `1 + η(0)` below the separation floor.
    pub separation: bool,
}

impl Flags {
    pub fn any(&self) -> bool {
        self.blowup || self.irrotational || self.separation
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.blowup {
            v.push("blowup");
        }
        if self.irrotational {
            v.push("irrotational");
        }
        if self.separation {
            v.push("separation");
        }
        v
    }

    pub fn from_names(names: &[String]) -> Self {
        let has = |s: &str| names.iter().any(|n| n == s);
        Self { blowup: has("blowup"), irrotational: has("irrotational"), separation: has("separation") }
    }

    pub fn evaluate(state: &PointVortexState, cfg: &ContinuationConfig) -> Self {
        let amp = max_abs(&state.eta).max(max_abs(&state.psi));
        Self {
            blowup: state.norm() > cfg.blowup_threshold,
            irrotational: state.epsilon.abs() < cfg.eps_floor && amp > cfg.nontrivial_floor,
            separation: state.height_at_crest_axis() < cfg.separation_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub state: PointVortexState,
    pub arclength: f64,
    pub residual_norm: f64,
    pub jacobian_condition_estimate: f64,
    pub flags: Flags,
    /// Unit tangent in reduced coordinates, used to continue from here.
    pub tangent: Vec<f64>,
    pub ds_next: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Completed,
    Flagged(Flags),
    StepUnderflow { ds: f64, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub params: PhysicalParams,
    pub seed: BranchPoint,
    pub points: Vec<BranchPoint>,
    pub stop: StopReason,
}

impl Branch {
    pub fn last(&self) -> &BranchPoint {
        self.points.last().unwrap_or(&self.seed)
    }
}

/// Pseudo-arclength continuation from a converged seed state.
pub fn continue_branch(seed: &PointVortexState, params: &PhysicalParams, cfg: &ContinuationConfig) -> Result<Branch> {
    cfg.validate()?;
    if !params.is_periodic() {
        return Err(Error::InvalidArgument("continuation is implemented for the periodic setting".into()));
    }
    let rep = newton_solve(seed, params, &Constraint::FixEpsilon, &cfg.newton)?;
    let (tangent, cond) = tangent_at(&rep.state, params, None, cfg.direction)?;
    let seed_point = BranchPoint {
        flags: Flags::evaluate(&rep.state, cfg),
        state: rep.state,
        arclength: 0.0,
        residual_norm: *rep.residual_history.last().unwrap(),
        jacobian_condition_estimate: cond,
        tangent,
        ds_next: cfg.ds,
        newton_iterations: rep.iterations,
    };
    let mut branch = Branch { params: *params, seed: seed_point, points: Vec::new(), stop: StopReason::Completed };
    extend_branch(&mut branch, cfg, cfg.n_steps)?;
    Ok(branch)
}

/// Appends up to `steps` points to `branch`, continuing from its last point.
pub fn extend_branch(branch: &mut Branch, cfg: &ContinuationConfig, steps: usize) -> Result<()> {
    cfg.validate()?;
    let params = branch.params;
    branch.stop = StopReason::Completed;
    for _ in 0..steps {
        let last = branch.last().clone();
        let layout = Layout::new(&params, last.state.grid);
        let u_prev = layout.to_u(&last.state);
        let mut ds = last.ds_next;
        let mut halvings = 0;
        let accepted = loop {
            let pred: Vec<f64> = u_prev.iter().zip(&last.tangent).map(|(u, t)| u + ds * t).collect();
            let constraint = Constraint::Arclength { prev: u_prev.clone(), tangent: last.tangent.clone(), ds };
            let attempt = newton_solve(&layout.to_state(&pred), &params, &constraint, &cfg.newton)
                .and_then(|rep| tangent_at(&rep.state, &params, Some(&last.tangent), 1.0).map(|t| (rep, t)));
            match attempt {
                Ok(ok) => break Ok(ok),
                Err(e) => {
                    halvings += 1;
                    if halvings > cfg.max_halvings {
                        break Err((ds, e.to_string()));
                    }
                    ds *= 0.5;
                }
            }
        };
        match accepted {
            Ok((rep, (tangent, cond))) => {
                let u_new = layout.to_u(&rep.state);
                let chord: Vec<f64> = u_new.iter().zip(&u_prev).map(|(a, b)| a - b).collect();
                let ds_next = if rep.iterations <= 3 { (2.0 * ds).min(cfg.ds) } else { ds };
                let flags = Flags::evaluate(&rep.state, cfg);
                branch.points.push(BranchPoint {
                    arclength: last.arclength + norm2(&chord),
                    residual_norm: *rep.residual_history.last().unwrap(),
                    jacobian_condition_estimate: cond,
                    flags,
                    tangent,
                    ds_next,
                    newton_iterations: rep.iterations,
                    state: rep.state,
                });
                if flags.any() && cfg.stop_on_flag {
                    branch.stop = StopReason::Flagged(flags);
                    return Ok(());
                }
            }
            Err((ds, message)) => {
                branch.stop = StopReason::StepUnderflow { ds, message };
                return Ok(());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_vortex::{asymptotic_predictor, residual, SurfaceGrid};
    use crate::spectral::PeriodicGrid;
    use crate::vortex_green::Setting;

    fn setup(n: usize) -> (PhysicalParams, SurfaceGrid) {
        (
            PhysicalParams::new(1.0, 1.0, Setting::Periodic { l: 1.0 }).unwrap(),
            SurfaceGrid::Periodic(PeriodicGrid::new(1.0, n).unwrap()),
        )
    }

    #[test]
    fn first_point_matches_predictor() {
        let (p, g) = setup(64);
        let cfg = ContinuationConfig { ds: 1e-3, n_steps: 3, ..Default::default() };
        let b = continue_branch(&PointVortexState::trivial(g), &p, &cfg).unwrap();
        assert_eq!(b.points.len(), 3);
        let first = &b.points[0].state;
        let pred = asymptotic_predictor(first.epsilon, &p, g).unwrap();
        assert!((first.c - pred.c).abs() < first.epsilon * first.epsilon);
        for w in b.points.windows(2) {
            assert!(w[1].arclength > w[0].arclength);
        }
        for pt in &b.points {
            assert!(pt.residual_norm < 1e-10);
            assert!(residual(&pt.state, &p).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn reversed_direction_mirrors_branch() {
        let (p, g) = setup(32);
        let cfg = ContinuationConfig { ds: 2e-2, n_steps: 3, ..Default::default() };
        let up = continue_branch(&PointVortexState::trivial(g), &p, &cfg).unwrap();
        let down = continue_branch(&PointVortexState::trivial(g), &p, &ContinuationConfig { direction: -1.0, ..cfg }).unwrap();
        for (a, b) in up.points.iter().zip(&down.points) {
            assert!(a.state.epsilon > 0.0 && b.state.epsilon < 0.0);
            assert!((a.state.epsilon + b.state.epsilon).abs() < 1e-10);
            assert!((a.state.c + b.state.c).abs() < 1e-10);
            for j in 0..32 {
                assert!((a.state.eta[j] - b.state.eta[j]).abs() < 1e-10);
                assert!((a.state.psi[j] + b.state.psi[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn halving_the_step_reaches_the_same_point() {
        let (p, g) = setup(32);
        let a = continue_branch(&PointVortexState::trivial(g), &p, &ContinuationConfig { ds: 1e-3, n_steps: 3, ..Default::default() }).unwrap();
        let b = continue_branch(&PointVortexState::trivial(g), &p, &ContinuationConfig { ds: 5e-4, n_steps: 6, ..Default::default() }).unwrap();
        let (x, y) = (&a.last().state, &b.last().state);
        let d = (x.epsilon - y.epsilon).abs().max((x.c - y.c).abs());
        let de = x.eta.iter().zip(&y.eta).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max);
        assert!(d.max(de) < 1e-6, "{d} {de}");
    }

    #[test]
    fn lowered_thresholds_raise_flags() {
        let (p, g) = setup(32);
        let base = ContinuationConfig { ds: 5e-2, n_steps: 10, ..Default::default() };
        let b = continue_branch(&PointVortexState::trivial(g), &p, &ContinuationConfig { blowup_threshold: 0.12, ..base }).unwrap();
        assert!(matches!(b.stop, StopReason::Flagged(f) if f.blowup && !f.separation));
        assert!(b.last().state.norm() > 0.12);
        let b = continue_branch(&PointVortexState::trivial(g), &p, &ContinuationConfig { separation_floor: 0.9999, ..base }).unwrap();
        assert!(matches!(b.stop, StopReason::Flagged(f) if f.separation));
        let b = continue_branch(
            &PointVortexState::trivial(g),
            &p,
            &ContinuationConfig { eps_floor: 1.0, nontrivial_floor: 1e-5, ..base },
        )
        .unwrap();
        assert!(matches!(b.stop, StopReason::Flagged(f) if f.irrotational));
        assert!(ContinuationConfig { ds: 0.0, ..base }.validate().is_err());
    }
}
