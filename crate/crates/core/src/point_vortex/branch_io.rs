//! Branch files are newline-delimited JSON: one header line holding the
//! parameters, grid, stop reason, caller metadata and seed, then one line per
//! continuation point.

use super::{Branch, BranchPoint, Flags, PhysicalParams, PointVortexState, StopReason, SurfaceGrid};
use crate::error::{Error, Result};
use crate::json17;
use crate::spectral::{parse_values, LineGrid, PeriodicGrid};
use crate::vortex_green::Setting;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchHeader {
    /// Caller-supplied metadata, echoed verbatim.
    pub meta: Value,
}

fn grid_json(grid: &SurfaceGrid) -> Value {
    match grid {
        SurfaceGrid::Periodic(g) => json!({ "kind": "periodic", "L": g.l(), "n": g.n() }),
        SurfaceGrid::Line(g) => json!({ "kind": "line", "half_width": g.half_width(), "n": g.n() }),
    }
}

fn grid_from_json(v: &Value) -> Result<SurfaceGrid> {
    let n = v["n"].as_u64().ok_or_else(|| Error::Parse("missing grid.n".into()))? as usize;
    match v["kind"].as_str() {
        Some("periodic") => Ok(SurfaceGrid::Periodic(PeriodicGrid::new(num(&v["L"], "grid.L")?, n)?)),
        Some("line") => Ok(SurfaceGrid::Line(LineGrid::new(num(&v["half_width"], "grid.half_width")?, n)?)),
        _ => Err(Error::Parse("unknown grid kind".into())),
    }
}

fn num(v: &Value, name: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Parse(format!("missing {name}")))
}

fn params_json(p: &PhysicalParams) -> Value {
    let setting = match p.setting {
        Setting::Localized => json!({ "kind": "localized" }),
        Setting::Periodic { l } => json!({ "kind": "periodic", "L": l }),
    };
    json!({ "g": p.g, "alpha": p.alpha, "setting": setting })
}

fn params_from_json(v: &Value) -> Result<PhysicalParams> {
    let setting = match v["setting"]["kind"].as_str() {
        Some("localized") => Setting::Localized,
        Some("periodic") => Setting::Periodic { l: num(&v["setting"]["L"], "setting.L")? },
        _ => return Err(Error::Parse("unknown setting".into())),
    };
    PhysicalParams::new(num(&v["g"], "g")?, num(&v["alpha"], "alpha")?, setting)
}

fn point_json(p: &BranchPoint) -> Value {
    json!({
        "epsilon": p.state.epsilon,
        "c": p.state.c,
        "eta_values": p.state.eta,
        "psi_values": p.state.psi,
        "residual_norm": p.residual_norm,
        "flags": p.flags.names(),
        "arclength": p.arclength,
        "ds_next": p.ds_next,
        "newton_iterations": p.newton_iterations,
        "jacobian_condition_estimate": p.jacobian_condition_estimate,
        "tangent": p.tangent,
    })
}

fn point_from_json(v: &Value, grid: SurfaceGrid) -> Result<BranchPoint> {
    let flags: Vec<String> = v["flags"]
        .as_array()
        .ok_or_else(|| Error::Parse("missing flags".into()))?
        .iter()
        .filter_map(|f| f.as_str().map(String::from))
        .collect();
    let state = PointVortexState {
        epsilon: num(&v["epsilon"], "epsilon")?,
        eta: parse_values(&v["eta_values"])?,
        psi: parse_values(&v["psi_values"])?,
        c: num(&v["c"], "c")?,
        grid,
    };
    if state.eta.len() != grid.n() || state.psi.len() != grid.n() {
        return Err(Error::Parse("field length does not match the grid".into()));
    }
    Ok(BranchPoint {
        state,
        arclength: num(&v["arclength"], "arclength")?,
        residual_norm: num(&v["residual_norm"], "residual_norm")?,
        // a singular Jacobian is written as null
        jacobian_condition_estimate: v["jacobian_condition_estimate"].as_f64().unwrap_or(f64::INFINITY),
        flags: Flags::from_names(&flags),
        tangent: parse_values(&v["tangent"])?,
        ds_next: num(&v["ds_next"], "ds_next")?,
        newton_iterations: v["newton_iterations"].as_u64().unwrap_or(0) as usize,
    })
}

fn stop_json(s: &StopReason) -> Value {
    match s {
        StopReason::Completed => json!({ "kind": "completed" }),
        StopReason::Flagged(f) => json!({ "kind": "flagged", "flags": f.names() }),
        StopReason::StepUnderflow { ds, message } => json!({ "kind": "step_underflow", "ds": ds, "message": message }),
    }
}

fn stop_from_json(v: &Value) -> Result<StopReason> {
    Ok(match v["kind"].as_str() {
        Some("completed") => StopReason::Completed,
        Some("flagged") => {
            let names: Vec<String> = v["flags"]
                .as_array()
                .map(|a| a.iter().filter_map(|f| f.as_str().map(String::from)).collect())
                .unwrap_or_default();
            StopReason::Flagged(Flags::from_names(&names))
        }
        Some("step_underflow") => StopReason::StepUnderflow {
            ds: num(&v["ds"], "stop.ds")?,
            message: v["message"].as_str().unwrap_or_default().to_string(),
        },
        _ => return Err(Error::Parse("unknown stop reason".into())),
    })
}

pub fn write_branch(path: &Path, branch: &Branch, meta: &Value) -> Result<()> {
    let header = json!({
        "params": params_json(&branch.params),
        "grid": grid_json(&branch.seed.state.grid),
        "stop": stop_json(&branch.stop),
        "meta": meta,
        "seed": point_json(&branch.seed),
    });
    let mut out = String::new();
    out.push_str(&json17::to_string(&header));
    out.push('\n');
    for p in &branch.points {
        out.push_str(&json17::to_string(&point_json(p)));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_branch(path: &Path) -> Result<(BranchHeader, Branch)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Value = serde_json::from_str(lines.next().ok_or_else(|| Error::Parse("empty branch file".into()))?)?;
    let params = params_from_json(&header["params"])?;
    let grid = grid_from_json(&header["grid"])?;
    let seed = point_from_json(&header["seed"], grid)?;
    let mut points = Vec::new();
    for line in lines {
        points.push(point_from_json(&serde_json::from_str(line)?, grid)?);
    }
    let branch = Branch { params, seed, points, stop: stop_from_json(&header["stop"])? };
    Ok((BranchHeader { meta: header["meta"].clone() }, branch))
}

/// Writes `x, η, ψ` columns for one point.
pub fn write_profile_csv(path: &Path, point: &BranchPoint) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "x1,eta,psi")?;
    for ((x, e), p) in point.state.grid.nodes().iter().zip(&point.state.eta).zip(&point.state.psi) {
        writeln!(f, "{},{},{}", json17::fmt_f64(*x), json17::fmt_f64(*e), json17::fmt_f64(*p))?;
    }
    f.flush()?;
    Ok(())
}
