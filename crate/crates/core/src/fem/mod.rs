//! Plane-stress statics on the regular grid: assembly over ersatz element
//! densities, boundary-condition elimination, and the linear solve.

pub mod element;
pub mod solver;

pub use element::{energy, stiffness_with_rule, unit_stiffness, Material};
pub use solver::{pcg, BandedMatrix};

use crate::error::FemError;
use crate::exec;
use crate::field::Grid;

/// Largest reduced system handed to the direct factorization; anything
/// bigger goes through conjugate gradients.
pub const DIRECT_DOF_LIMIT: usize = 100_000;

const PCG_REL_TOL: f64 = 1e-9;
const PCG_MAX_ITERS: usize = 100_000;

/// Maps natural dofs (2 per node, node-major in grid order) to contiguous
/// solver indices over the free dofs, renumbered along the shorter grid
/// axis to keep the band tight.
pub struct DofMap {
    /// Natural dof to solver index; `usize::MAX` marks a fixed dof.
    pub solver_index: Vec<usize>,
    /// Solver index back to natural dof.
    pub natural_dof: Vec<usize>,
    pub semibandwidth: usize,
}

const FIXED: usize = usize::MAX;

pub fn build_dof_map(grid: &Grid, fixed: &[bool]) -> DofMap {
    let nodes = grid.node_count();
    assert_eq!(fixed.len(), 2 * nodes);
    let column_major = grid.ny < grid.nx;
    let order = |node: usize| -> usize {
        if column_major {
            let (ix, iy) = grid.node_coords(node);
            ix * (grid.ny + 1) + iy
        } else {
            node
        }
    };
    let mut nodes_sorted: Vec<usize> = (0..nodes).collect();
    nodes_sorted.sort_by_key(|&n| order(n));

    let mut solver_index = vec![FIXED; 2 * nodes];
    let mut natural_dof = Vec::new();
    for &node in &nodes_sorted {
        for comp in 0..2 {
            let dof = 2 * node + comp;
            if !fixed[dof] {
                solver_index[dof] = natural_dof.len();
                natural_dof.push(dof);
            }
        }
    }

    let mut sb = 0usize;
    for e in 0..grid.elem_count() {
        let mut lo = usize::MAX;
        let mut hi = 0usize;
        for &n in &grid.elem_nodes(e) {
            for comp in 0..2 {
                let s = solver_index[2 * n + comp];
                if s != FIXED {
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
            }
        }
        if lo != usize::MAX {
            sb = sb.max(hi - lo);
        }
    }

    DofMap {
        solver_index,
        natural_dof,
        semibandwidth: sb,
    }
}

/// Assembles the reduced stiffness matrix over free dofs. Elements are
/// visited in index order so the accumulation is reproducible.
pub fn assemble(
    grid: &Grid,
    densities: &[f64],
    k_unit: &[[f64; 8]; 8],
    map: &DofMap,
) -> BandedMatrix {
    let mut a = BandedMatrix::new(map.natural_dof.len(), map.semibandwidth);
    for e in 0..grid.elem_count() {
        let rho = densities[e];
        let nodes = grid.elem_nodes(e);
        let mut dofs = [FIXED; 8];
        for (i, &n) in nodes.iter().enumerate() {
            dofs[2 * i] = map.solver_index[2 * n];
            dofs[2 * i + 1] = map.solver_index[2 * n + 1];
        }
        for r in 0..8 {
            if dofs[r] == FIXED {
                continue;
            }
            for c in 0..8 {
                if dofs[c] != FIXED && dofs[r] >= dofs[c] {
                    a.add(dofs[r], dofs[c], rho * k_unit[r][c]);
                }
            }
        }
    }
    a
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Displacements in natural dof order; fixed dofs are zero.
    pub u: Vec<f64>,
    pub compliance: f64,
    /// Relative residual of the reduced system.
    pub residual: f64,
    /// Free dof count.
    pub dofs: usize,
    /// Iterations taken by the iterative path, zero for the direct one.
    pub solver_iterations: usize,
}

/// Solves `K u = f` with homogeneous constraints on `fixed` dofs and
/// returns displacements plus the external work `f . u`.
pub fn solve_static(
    grid: &Grid,
    densities: &[f64],
    material: &Material,
    fixed: &[bool],
    load: &[f64],
) -> Result<Solution, FemError> {
    let k_unit = unit_stiffness(grid.dx, grid.dy, material);
    let map = build_dof_map(grid, fixed);
    let a = assemble(grid, densities, &k_unit, &map);
    let n = map.natural_dof.len();
    let b: Vec<f64> = map.natural_dof.iter().map(|&d| load[d]).collect();

    let (x, iters) = if n <= DIRECT_DOF_LIMIT {
        let factor = assemble(grid, densities, &k_unit, &map).cholesky()?;
        (factor.solve(&b), 0)
    } else {
        pcg(&a, &b, PCG_REL_TOL, PCG_MAX_ITERS)?
    };

    let norm_b = exec::sum(n, |i| b[i] * b[i]).sqrt();
    let residual = if norm_b > 0.0 {
        let ax = a.matvec(&x);
        exec::sum(n, |i| (ax[i] - b[i]).powi(2)).sqrt() / norm_b
    } else {
        0.0
    };

    let mut u = vec![0.0; 2 * grid.node_count()];
    for (s, &d) in map.natural_dof.iter().enumerate() {
        u[d] = x[s];
    }
    let compliance = exec::sum(u.len(), |i| load[i] * u[i]);

    Ok(Solution {
        u,
        compliance,
        residual,
        dofs: n,
        solver_iterations: iters,
    })
}

/// Gathers one element's displacement vector from the natural-numbered
/// global solution.
#[inline]
pub fn gather_element(grid: &Grid, u: &[f64], e: usize) -> [f64; 8] {
    let nodes = grid.elem_nodes(e);
    let mut ue = [0.0; 8];
    for (i, &n) in nodes.iter().enumerate() {
        ue[2 * i] = u[2 * n];
        ue[2 * i + 1] = u[2 * n + 1];
    }
    ue
}

/// Per-element `u_e' k u_e` at full density (no ersatz factor).
pub fn element_energies(grid: &Grid, u: &[f64], k_unit: &[[f64; 8]; 8]) -> Vec<f64> {
    exec::map_collect(grid.elem_count(), |e| {
        energy(k_unit, &gather_element(grid, u, e))
    })
}
