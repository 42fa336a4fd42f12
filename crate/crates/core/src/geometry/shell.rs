//! Shell/infill composition of the per-family TDFs.
//!
//! With `phi_0` the smooth minimum over void TDFs, `phi_0_ext` the same over
//! the offset (expanded) voids and `phi_gs` the graded lattice field, the
//! composite structure is
//!
//! `phi_1 = ksmax(-phi_0_ext, phi_gs)` - infill plus the shell interior,
//! `phi_s = ksmin(phi_0, phi_1)` - final structure.
//!
//! The band `phi_0 > 0 > phi_0_ext` between a void and its offset copy is
//! the coating shell: there `-phi_0_ext > 0` makes `phi_1` positive
//! regardless of the lattice, and `phi_0 > 0` keeps the point out of the
//! void, so the shell is always solid.

use super::lattice::{lattice_tdf, LatticeSpec};
use super::voids::{build_radius_table, void_tdf, RadiusTable, VoidCurve};
use crate::error::GeometryError;
use crate::ks;

/// Smooth aggregation exponents used throughout the composition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregation {
    pub l_plus: f64,
    pub l_minus: f64,
}

impl Default for Aggregation {
    fn default() -> Self {
        Aggregation {
            l_plus: ks::L_PLUS,
            l_minus: ks::L_MINUS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShellSpec {
    pub voids: Vec<VoidCurve>,
    /// Shell thickness: offset applied to every control radius.
    pub delta: f64,
    /// Radius-table sampling density (samples per control point).
    pub samples_per_control: usize,
}

impl ShellSpec {
    /// Offset copies of all voids (the `ext` family).
    pub fn expanded_voids(&self) -> Result<Vec<VoidCurve>, GeometryError> {
        self.voids
            .iter()
            .enumerate()
            .map(|(j, v)| v.offset_by(self.delta, j))
            .collect()
    }

    pub fn build_tables(&self) -> Result<ShellTables, GeometryError> {
        let expanded = self.expanded_voids()?;
        let original = self
            .voids
            .iter()
            .enumerate()
            .map(|(j, v)| build_radius_table(v, j, self.samples_per_control))
            .collect::<Result<Vec<_>, _>>()?;
        let ext = expanded
            .iter()
            .enumerate()
            .map(|(j, v)| build_radius_table(v, j, self.samples_per_control))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ShellTables {
            expanded,
            original,
            ext,
        })
    }
}

/// Radius tables for both void families, rebuilt whenever the design moves.
#[derive(Clone, Debug)]
pub struct ShellTables {
    pub expanded: Vec<VoidCurve>,
    pub original: Vec<RadiusTable>,
    pub ext: Vec<RadiusTable>,
}

/// `(phi_0, phi_0_ext)` at a point.
pub fn shell_tdfs(
    point: [f64; 2],
    spec: &ShellSpec,
    tables: &ShellTables,
    l_minus: f64,
) -> (f64, f64) {
    let mut acc0 = ks::Accumulator::new(l_minus);
    let mut acc_ext = ks::Accumulator::new(l_minus);
    for (j, v) in spec.voids.iter().enumerate() {
        acc0.push(void_tdf(point, v, &tables.original[j]));
        acc_ext.push(void_tdf(point, &tables.expanded[j], &tables.ext[j]));
    }
    (acc0.finish(), acc_ext.finish())
}

/// Composes the two aggregation stages above `phi_0`, `phi_0_ext`, `phi_gs`.
pub fn compose(phi_0: f64, phi_0_ext: f64, phi_gs: f64, agg: Aggregation) -> (f64, f64) {
    let phi_1 = ks::aggregate(&[-phi_0_ext, phi_gs], agg.l_plus);
    let phi_s = ks::aggregate(&[phi_0, phi_1], agg.l_minus);
    (phi_1, phi_s)
}

/// Full composite TDF at one point. Convenience path for tests and plots;
/// the field sampler batches this over the grid instead.
pub fn structure_tdf(
    point: [f64; 2],
    lattice: &LatticeSpec,
    shell: &ShellSpec,
    tables: &ShellTables,
    agg: Aggregation,
) -> f64 {
    let (phi_0, phi_0_ext) = shell_tdfs(point, shell, tables, agg.l_minus);
    let phi_gs = lattice_tdf(point, lattice, agg.l_plus);
    compose(phi_0, phi_0_ext, phi_gs, agg).1
}
