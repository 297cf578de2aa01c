//! Vortex patch in the localized setting: radial profile, resolvent
//! spectrum, conformal boundary parametrization and the coupled patch solve.

mod conformal;
mod disk;
mod far_field;
mod hfunc;
mod patch;
mod radial;
mod resolvent;
mod strength;

pub use conformal::{build_conformal_map, ConformalMap, ShapeCoeffs, UNIVALENCE_FLOOR};
pub use disk::{solve_semilinear, DiskField, DiskGrid, DiskSolver, SemilinearConfig, SemilinearSolution};
pub use far_field::{PatchFarField, PATCH_RADIUS, SURFACE_FLOOR};
pub use hfunc::{eval_h, shape_linearization, BoundaryFunction, KernelReport};
pub use patch::{
    patch_residual, solve_patch, write_boundary_csv, write_patch_json, PatchConfig, PatchContext, PatchResidual, PatchSolution,
    PatchState,
};
pub use radial::{solve_radial_profile, RadialConfig, RadialOps, RadialProfile};
pub use resolvent::{linearized_h_spectrum, solve_resolvent, write_radial_fixture, RadialResolvent};
pub use strength::StrengthFn;
