//! Explicit geometric primitives and their topology description functions.
//!
//! Sign convention for every TDF in this crate: positive inside material,
//! zero on the boundary, negative outside. Void TDFs are positive *outside*
//! the void, i.e. in the remaining solid.

pub mod component;
pub mod cpf;
pub mod lattice;
pub mod shell;
pub mod spline;
pub mod voids;

pub use component::{ComponentParams, ComponentPartials};
pub use cpf::CpfField;
pub use lattice::{lattice_tdf, LatticeSpec, Prototype};
pub use shell::{structure_tdf, Aggregation, ShellSpec, ShellTables};
pub use voids::{
    build_radius_table, void_tdf, void_tdf_partials, RadiusTable, VoidCurve, SAMPLES_PER_CONTROL,
};
