//! Configuration files and run artifacts: the config format, iteration
//! CSV, density graymaps, boundary contours with SVG export, and control
//! point tables. Every writer has a reader for its own format, and
//! identical runs produce byte-identical files (nothing here depends on
//! time, environment, or thread count).

mod config;
mod contour;
mod history;
mod points;
mod raster;

use std::path::Path;

use crate::field::Grid;
use crate::geometry::ShellSpec;
use crate::optimizer::{IterationRecord, RunResult};
use crate::problems::Problem;

pub use config::{parse_config, parse_config_str, serialize_config, ProblemConfig};
pub use contour::{
    boundaries_svg, extract_boundaries, parse_boundaries_svg, polygon_area, read_boundaries_svg,
    write_boundaries_svg, Polyline,
};
pub use history::{
    history_csv, parse_history_csv, read_history_csv, write_history_csv, HISTORY_HEADER,
};
pub use points::{
    control_points_csv, parse_control_points_csv, read_control_points_csv,
    write_control_points_csv, ControlPointRow, POINTS_HEADER,
};
pub use raster::{density_pgm, parse_pgm, read_density_raster, write_density_raster};

/// Everything a finished run emits, gathered from the final evaluation.
pub struct RunOutputs {
    pub history: Vec<IterationRecord>,
    pub grid: Grid,
    /// Per-element ersatz density, element order.
    pub densities: Vec<f64>,
    /// Zero contours of the composed structure field.
    pub polylines: Vec<Polyline>,
    pub shell: ShellSpec,
    pub domain: [f64; 2],
}

pub fn collect_outputs(problem: &Problem, result: &RunResult) -> RunOutputs {
    RunOutputs {
        history: result.history.clone(),
        grid: problem.grid,
        densities: result.evaluation.densities.clone(),
        polylines: extract_boundaries(&result.evaluation.fields.phi_s, &problem.grid),
        shell: result.evaluation.shell.clone(),
        domain: problem.domain,
    }
}

/// Writes the standard artifact set into `dir` (created if missing):
/// `history.csv`, `density.pgm`, `boundaries.svg`, `control_points.csv`.
pub fn write_all(outputs: &RunOutputs, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_history_csv(&outputs.history, &dir.join("history.csv"))?;
    write_density_raster(&outputs.densities, &outputs.grid, &dir.join("density.pgm"))?;
    write_boundaries_svg(&outputs.polylines, outputs.domain, &dir.join("boundaries.svg"))?;
    write_control_points_csv(&outputs.shell, &dir.join("control_points.csv"))?;
    Ok(())
}
