//! One full forward evaluation: design vector to geometry, sampled
//! fields, ersatz densities, the static solves, and the three responses
//! (compliance, solid volume, infill-region volume).

use crate::error::{FemError, GeometryError};
use crate::fem::{self, Material};
use crate::field::{self, FieldSet, Grid, HeavisideParams};
use crate::geometry::{LatticeSpec, ShellSpec, ShellTables};
use crate::problems::Problem;

#[derive(Debug)]
pub enum EvalError {
    Geometry(GeometryError),
    Fem(FemError),
}

impl From<GeometryError> for EvalError {
    fn from(e: GeometryError) -> Self {
        EvalError::Geometry(e)
    }
}

impl From<FemError> for EvalError {
    fn from(e: FemError) -> Self {
        EvalError::Fem(e)
    }
}

impl std::fmt::Display for EvalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalError::Geometry(e) => write!(f, "{e}"),
            EvalError::Fem(e) => write!(f, "{e}"),
        }
    }
}

pub struct Evaluation {
    pub lattice: LatticeSpec,
    pub shell: ShellSpec,
    pub tables: ShellTables,
    pub fields: FieldSet,
    pub densities: Vec<f64>,
    /// One solution per load case, problem order.
    pub solutions: Vec<fem::Solution>,
    /// Weighted compliance over all cases.
    pub compliance: f64,
    pub volume: f64,
    pub infill_volume: f64,
}

/// Full forward pass for design `x` on the problem's grid.
pub fn evaluate(problem: &Problem, x: &[f64]) -> Result<Evaluation, EvalError> {
    evaluate_on(
        problem,
        x,
        &problem.grid,
        &problem.heaviside,
    )
}

/// Forward pass on an arbitrary grid (mesh-refinement re-analysis).
pub fn evaluate_on(
    problem: &Problem,
    x: &[f64],
    grid: &Grid,
    hp: &HeavisideParams,
) -> Result<Evaluation, EvalError> {
    let (lattice, shell) = problem.space.decode(x);
    let tables = shell.build_tables()?;
    let fields = field::sample_fields(grid, &lattice, &shell, &tables, problem.aggregation);
    let densities = field::element_densities(grid, &fields.phi_s, hp);
    let solutions = solve_cases(problem, grid, &densities)?;
    let compliance = problem
        .load_cases
        .iter()
        .zip(&solutions)
        .map(|(c, s)| c.weight * s.compliance)
        .sum();
    let volume = field::volume(grid, &fields.phi_s, hp);
    let infill_volume = field::volume(grid, &fields.phi_0_ext, hp);
    Ok(Evaluation {
        lattice,
        shell,
        tables,
        fields,
        densities,
        solutions,
        compliance,
        volume,
        infill_volume,
    })
}

/// Solves every load case against one assembled stiffness matrix; the
/// direct path factors once and back-substitutes per case.
pub fn solve_cases(
    problem: &Problem,
    grid: &Grid,
    densities: &[f64],
) -> Result<Vec<fem::Solution>, FemError> {
    let material: &Material = &problem.material;
    let fixed = crate::problems::fixed_dofs_on(grid, &problem.supports);
    let map = fem::build_dof_map(grid, &fixed);
    let k_unit = fem::unit_stiffness(grid.dx, grid.dy, material);
    let n = map.natural_dof.len();

    let loads: Vec<Vec<f64>> = problem
        .load_cases
        .iter()
        .map(|c| crate::problems::load_vector_on(grid, c))
        .collect();
    let reduced: Vec<Vec<f64>> = loads
        .iter()
        .map(|f| map.natural_dof.iter().map(|&d| f[d]).collect())
        .collect();

    let a = fem::assemble(grid, densities, &k_unit, &map);
    let xs: Vec<(Vec<f64>, usize)> = if n <= fem::DIRECT_DOF_LIMIT {
        let factor = fem::assemble(grid, densities, &k_unit, &map).cholesky()?;
        reduced.iter().map(|b| (factor.solve(b), 0)).collect()
    } else {
        let mut out = Vec::with_capacity(reduced.len());
        for b in &reduced {
            out.push(fem::pcg(&a, b, 1e-9, 100_000)?);
        }
        out
    };

    let mut solutions = Vec::with_capacity(xs.len());
    for ((xr, iters), load) in xs.into_iter().zip(&loads) {
        let norm_b = crate::exec::sum(n, |i| {
            let d = map.natural_dof[i];
            load[d] * load[d]
        })
        .sqrt();
        let residual = if norm_b > 0.0 {
            let ax = a.matvec(&xr);
            crate::exec::sum(n, |i| {
                let b = load[map.natural_dof[i]];
                (ax[i] - b) * (ax[i] - b)
            })
            .sqrt()
                / norm_b
        } else {
            0.0
        };
        let mut u = vec![0.0; 2 * grid.node_count()];
        for (s, &d) in map.natural_dof.iter().enumerate() {
            u[d] = xr[s];
        }
        let compliance = crate::exec::sum(u.len(), |i| load[i] * u[i]);
        solutions.push(fem::Solution {
            u,
            compliance,
            residual,
            dofs: n,
            solver_iterations: iters,
        });
    }
    Ok(solutions)
}
