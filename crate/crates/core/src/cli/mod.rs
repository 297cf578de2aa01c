//! Command-line front end: `continue`, `patch` and `verify`.
//!
//! Exit codes are 0 on success, 1 when a solve or check fails and 2 for
//! usage or configuration errors.

pub mod config;
pub mod verify;

pub use config::{load_config, parse_config, LoadedConfig, Problem, RunConfig};

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::point_vortex::{
    asymptotic_predictor, continue_branch, extend_branch, newton_solve, read_branch, write_branch, Branch, BranchPoint,
    Constraint, ContinuationConfig, Flags, PhysicalParams, PointVortexState, StopReason, SurfaceGrid,
};
use crate::spectral::max_abs;
use crate::vortex_patch::{write_boundary_csv, write_patch_json, PatchContext};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

// stdout writes that ignore a closed pipe
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const BOUNDARY_POINTS: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "vortex-waves", version, about = "Traveling water waves with a point vortex or a small vortex patch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continue a point-vortex branch and write it as newline-delimited JSON.
    Continue {
        #[arg(long)]
        config: PathBuf,
        /// Branch file to extend up to `continuation.n_steps` points.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Solve for a vortex patch and write its state and boundary curve.
    Patch {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run verification checks and print measured values.
    Verify {
        #[arg(default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(verify::SUITES))]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Outcome of a command: exit code 1 or 2 with a diagnostic.
#[derive(Debug)]
pub enum Failure {
    Solve(String),
    Usage(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Solve(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn solve(e: Error) -> Failure {
    Failure::Solve(e.to_string())
}

pub fn run<I: IntoIterator<Item = T>, T: Into<OsString> + Clone>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let out = match cli.command {
        Command::Continue { config, resume } => load(&config).and_then(|c| cmd_continue(&c, resume.as_deref())),
        Command::Patch { config } => load(&config).and_then(|c| cmd_patch(&c)),
        Command::Verify { suite, seed } => cmd_verify(&suite, seed),
    };
    match out {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Solve(m) => eprintln!("error: {m}"),
                Failure::Usage(m) => eprintln!("configuration error: {m}"),
            }
            f.code()
        }
    }
}

fn load(path: &Path) -> std::result::Result<LoadedConfig, Failure> {
    load_config(path).map_err(usage)
}

/// Config hash, library version and the full config, embedded in every output.
pub fn output_meta(lc: &LoadedConfig) -> Value {
    json!({
        "version": VERSION,
        "config_sha256": lc.hash,
        "config": serde_json::to_value(&lc.config).unwrap_or(Value::Null),
    })
}

fn output_dir(cfg: &RunConfig) -> std::result::Result<&Path, Failure> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Failure::Solve(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    Ok(&cfg.output_dir)
}

pub fn cmd_continue(lc: &LoadedConfig, resume: Option<&Path>) -> std::result::Result<(), Failure> {
    let cfg = &lc.config;
    if cfg.problem == Problem::VortexPatch {
        return Err(Failure::Usage("`continue` needs a point-vortex problem; use `patch` for the vortex patch".into()));
    }
    let params = cfg.params().map_err(usage)?;
    let grid = cfg.surface_grid().map_err(usage)?;
    let ccfg = cfg.continuation_config();
    let mut branch = match resume {
        Some(path) => {
            let (_, b) = read_branch(path).map_err(usage)?;
            if b.params != params || b.seed.state.grid != grid {
                return Err(Failure::Usage(format!("{} was computed with different parameters or grid", path.display())));
            }
            b
        }
        None => seed_branch(cfg, &params, grid).map_err(solve)?,
    };
    let remaining = ccfg.n_steps.saturating_sub(branch.points.len());
    let step = if params.is_periodic() {
        extend_branch(&mut branch, &ccfg, remaining)
    } else {
        sweep_localized(&mut branch, cfg, remaining)
    };
    step.map_err(solve)?;
    let path = output_dir(cfg)?.join("branch.ndjson");
    write_branch(&path, &branch, &output_meta(lc)).map_err(solve)?;
    print_summary(&branch);
    say!("branch written to {}", path.display());
    match &branch.stop {
        StopReason::Completed => Ok(()),
        StopReason::Flagged(f) => {
            say!("stopped by alternative: {}", f.names().join(", "));
            Ok(())
        }
        StopReason::StepUnderflow { ds, message } => Err(Failure::Solve(format!("step size underflow at ds = {ds:.3e}: {message}"))),
    }
}

fn seed_branch(cfg: &RunConfig, params: &PhysicalParams, grid: SurfaceGrid) -> Result<Branch> {
    let ccfg = cfg.continuation_config();
    if params.is_periodic() {
        return continue_branch(&PointVortexState::trivial(grid), params, &ContinuationConfig { n_steps: 0, ..ccfg });
    }
    let state = PointVortexState::trivial(grid);
    let seed = BranchPoint {
        flags: Flags::evaluate(&state, &ccfg),
        state,
        arclength: 0.0,
        residual_norm: 0.0,
        jacobian_condition_estimate: f64::NAN,
        tangent: Vec::new(),
        ds_next: ccfg.ds,
        newton_iterations: 0,
    };
    Ok(Branch { params: *params, seed, points: Vec::new(), stop: StopReason::Completed })
}

/// Natural-parameter steps `ε_k = ±k ds` for the localized problem, each
/// warm-started from the previous point (or the asymptotic predictor).
fn sweep_localized(branch: &mut Branch, cfg: &RunConfig, steps: usize) -> Result<()> {
    let ccfg = cfg.continuation_config();
    let params = branch.params;
    branch.stop = StopReason::Completed;
    for _ in 0..steps {
        let k = branch.points.len() + 1;
        let eps = ccfg.direction * ccfg.ds * k as f64;
        let last = branch.last().clone();
        let init = if branch.points.is_empty() {
            asymptotic_predictor(eps, &params, last.state.grid)?
        } else {
            PointVortexState { epsilon: eps, ..last.state.clone() }
        };
        let rep = match newton_solve(&init, &params, &Constraint::FixEpsilon, &ccfg.newton) {
            Ok(r) => r,
            Err(e) => {
                branch.stop = StopReason::StepUnderflow { ds: ccfg.ds, message: e.to_string() };
                return Ok(());
            }
        };
        let s = &rep.state;
        let diff: Vec<f64> = std::iter::once(s.epsilon - last.state.epsilon)
            .chain(s.eta.iter().zip(&last.state.eta).map(|(a, b)| a - b))
            .chain(s.psi.iter().zip(&last.state.psi).map(|(a, b)| a - b))
            .chain(std::iter::once(s.c - last.state.c))
            .collect();
        let flags = Flags::evaluate(s, &ccfg);
        branch.points.push(BranchPoint {
            arclength: last.arclength + norm2(&diff),
            residual_norm: *rep.residual_history.last().unwrap_or(&0.0),
            jacobian_condition_estimate: rep.condition_estimate,
            flags,
            tangent: Vec::new(),
            ds_next: ccfg.ds,
            newton_iterations: rep.iterations,
            state: rep.state,
        });
        if flags.any() && ccfg.stop_on_flag {
            branch.stop = StopReason::Flagged(flags);
            return Ok(());
        }
    }
    Ok(())
}

fn print_summary(branch: &Branch) {
    say!("{:>5} {:>14} {:>14} {:>12} {:>12}  flags", "point", "epsilon", "c", "max|eta|", "1+eta(0)");
    for (i, p) in std::iter::once(&branch.seed).chain(&branch.points).enumerate() {
        let s = &p.state;
        say!(
            "{i:>5} {:>14.6e} {:>14.6e} {:>12.4e} {:>12.8} {}",
            s.epsilon,
            s.c,
            max_abs(&s.eta),
            s.height_at_crest_axis(),
            p.flags.names().join(",")
        );
    }
}

pub fn cmd_patch(lc: &LoadedConfig) -> std::result::Result<(), Failure> {
    let cfg = &lc.config;
    if cfg.problem != Problem::VortexPatch {
        return Err(Failure::Usage("`patch` needs problem = \"vortex-patch\"".into()));
    }
    let params = cfg.params().map_err(usage)?;
    let strength = cfg.strength();
    let q = &cfg.patch;
    let ctx = PatchContext::new(&params, &strength, cfg.patch_config()).map_err(solve)?;
    let sol = ctx.solve(q.epsilon, q.delta, q.tau).map_err(solve)?;
    let dir = output_dir(cfg)?;
    let meta = output_meta(lc);
    let json_path = dir.join(format!("patch_{}.json", strength.name));
    let csv_path = dir.join(format!("patch_{}_boundary.csv", strength.name));
    write_patch_json(&json_path, &sol.state, BOUNDARY_POINTS, &meta).map_err(solve)?;
    write_boundary_csv(&csv_path, &sol.state, BOUNDARY_POINTS, &meta).map_err(solve)?;
    let st = &sol.state;
    say!("strength        {}", strength.name);
    say!("(eps, delta, tau) = ({}, {}, {})", st.epsilon, st.delta, st.tau);
    say!("iterations      {}", sol.iterations);
    say!("residual        {:.3e}", sol.residual.norm());
    say!("c               {:.12e}", st.c());
    say!("c/eps + 1/4pi   {:.6e}", st.c_tilde + 1.0 / (4.0 * std::f64::consts::PI));
    say!("mass / eps      {:.12}", sol.vorticity_mass());
    say!("mu              {:.12e}", st.mu);
    say!("written {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

pub fn cmd_verify(suite: &str, seed: u64) -> std::result::Result<(), Failure> {
    let ids = verify::suite(suite).ok_or_else(|| Failure::Usage(format!("unknown suite {suite:?}")))?;
    let mut failed = Vec::new();
    for c in verify::CRITERIA.iter().filter(|c| ids.contains(&c.id)) {
        let t = Instant::now();
        let check = c.run(seed);
        let secs = t.elapsed().as_secs_f64();
        say!("criterion {:>2} {:<36} {} ({secs:.1} s)", c.id, c.name, if check.passed { "PASS" } else { "FAIL" });
        for l in &check.lines {
            say!("    {l}");
        }
        if !check.passed {
            failed.push(format!("{} ({})", c.id, c.name));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solve(format!("failed checks: {}", failed.join(", "))))
    }
}
