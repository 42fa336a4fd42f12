//! The benchmark problem definitions: domain, mesh, loads, supports,
//! lattice layout, initial voids, and constraint levels, at full scale
//! (the published mesh sizes) or desk scale (coarsened for fast runs).

use crate::design::{DesignSpace, GeometryTemplate, Layout};
use crate::error::ConfigError;
use crate::fem::Material;
use crate::field::{Grid, HeavisideParams};
use crate::geometry::{build_radius_table, Aggregation, VoidCurve, SAMPLES_PER_CONTROL};
use crate::io::ProblemConfig;
use crate::mma::MmaOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Desk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadMode {
    Simultaneous,
    Averaged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    TwoComp,
    FourComp,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLoad {
    pub pos: [f64; 2],
    pub force: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadCase {
    pub loads: Vec<PointLoad>,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    /// Fixes all nodes on the grid line `pos[axis] == value`.
    Edge { axis: usize, value: f64, fix: [bool; 2] },
    /// Fixes the node nearest to a physical point.
    Point { pos: [f64; 2], fix: [bool; 2] },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRules {
    /// Convergence threshold on the max relative variable change.
    pub threshold: f64,
    pub min_iters: usize,
    pub max_iters: usize,
}

impl Default for StopRules {
    fn default() -> Self {
        StopRules {
            threshold: 0.05,
            min_iters: 30,
            max_iters: 300,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub domain: [f64; 2],
    pub grid: Grid,
    pub material: Material,
    pub load_cases: Vec<LoadCase>,
    pub supports: Vec<Support>,
    pub space: DesignSpace,
    pub initial: Vec<f64>,
    /// Solid volume cap as a fraction of the domain volume.
    pub v_bar_frac: f64,
    /// Infill-region floor as a fraction of the domain volume; `None`
    /// disables the constraint.
    pub v_lower_frac: Option<f64>,
    pub heaviside: HeavisideParams,
    pub aggregation: Aggregation,
    pub mma: MmaOptions,
    pub stop: StopRules,
}

impl Problem {
    pub fn domain_volume(&self) -> f64 {
        self.domain[0] * self.domain[1]
    }

    pub fn fixed_dofs(&self) -> Vec<bool> {
        fixed_dofs_on(&self.grid, &self.supports)
    }

    pub fn load_vector(&self, case: &LoadCase) -> Vec<f64> {
        load_vector_on(&self.grid, case)
    }

    /// Same problem on a mesh refined by an integer factor (used for
    /// re-analysis, not for optimization).
    pub fn refined(&self, factor: usize) -> Problem {
        let grid = Grid::new(
            self.grid.nx * factor,
            self.grid.ny * factor,
            self.domain[0],
            self.domain[1],
        );
        let heaviside = HeavisideParams::for_grid(&grid);
        Problem {
            grid,
            heaviside,
            ..self.clone()
        }
    }
}

pub fn fixed_dofs_on(grid: &Grid, supports: &[Support]) -> Vec<bool> {
    let mut fixed = vec![false; 2 * grid.node_count()];
    for s in supports {
        match *s {
            Support::Edge { axis, value, fix } => {
                let d = if axis == 0 { grid.dx } else { grid.dy };
                for node in 0..grid.node_count() {
                    if (grid.node_pos(node)[axis] - value).abs() < 0.5 * d {
                        for c in 0..2 {
                            if fix[c] {
                                fixed[2 * node + c] = true;
                            }
                        }
                    }
                }
            }
            Support::Point { pos, fix } => {
                let node = grid.nearest_node(pos);
                for c in 0..2 {
                    if fix[c] {
                        fixed[2 * node + c] = true;
                    }
                }
            }
        }
    }
    fixed
}

pub fn load_vector_on(grid: &Grid, case: &LoadCase) -> Vec<f64> {
    let mut f = vec![0.0; 2 * grid.node_count()];
    for load in &case.loads {
        let node = grid.nearest_node(load.pos);
        f[2 * node] += load.force[0];
        f[2 * node + 1] += load.force[1];
    }
    f
}

/// Distance from an interior point to the rectangle boundary along a
/// direction.
pub fn ray_to_rect(center: [f64; 2], angle: f64, rect: [f64; 4]) -> f64 {
    let (dx, dy) = (angle.cos(), angle.sin());
    let tx = if dx > 1e-12 {
        (rect[1] - center[0]) / dx
    } else if dx < -1e-12 {
        (rect[0] - center[0]) / dx
    } else {
        f64::INFINITY
    };
    let ty = if dy > 1e-12 {
        (rect[3] - center[1]) / dy
    } else if dy < -1e-12 {
        (rect[2] - center[1]) / dy
    } else {
        f64::INFINITY
    };
    tx.min(ty)
}

/// Distance from a point to the outline of a rectangle: zero on the
/// outline, positive inside or out.
fn dist_to_outline(p: [f64; 2], rect: [f64; 4]) -> f64 {
    let out_x = (rect[0] - p[0]).max(p[0] - rect[1]).max(0.0);
    let out_y = (rect[2] - p[1]).max(p[1] - rect[3]).max(0.0);
    if out_x > 0.0 || out_y > 0.0 {
        return (out_x * out_x + out_y * out_y).sqrt();
    }
    (p[0] - rect[0])
        .min(rect[1] - p[0])
        .min(p[1] - rect[2])
        .min(rect[3] - p[1])
}

/// Grows the boundary control radius nearest each load or point-support
/// position that the initial curve leaves outside, until the point sits
/// just inside the curve and the coat band of elements around it is
/// solid. Mid-edge attachments already lie on the curve and are left
/// alone; this only matters near the rounded-off rectangle corners
/// (simple supports at domain corners). Points farther than half a shell
/// thickness from the target rectangle are skipped, so a deliberately
/// separated boundary stays separated.
fn cover_point_attachments(
    radii: &mut [f64],
    center: [f64; 2],
    rect: [f64; 4],
    delta: f64,
    points: &[[f64; 2]],
) {
    let n = radii.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    // A control pushed far past its neighbors can fold the sampled curve
    // out of star shape; such trials count as overshoot so the search
    // backs off and the returned radii always describe a valid curve.
    let radius_at = |radii: &[f64], psi: f64| -> f64 {
        let curve = VoidCurve {
            center,
            radii: radii.to_vec(),
            degree: 2,
            inverted: true,
        };
        match build_radius_table(&curve, 0, SAMPLES_PER_CONTROL) {
            Ok(table) => table.lookup(psi).r,
            Err(_) => f64::INFINITY,
        }
    };
    for &p in points {
        if dist_to_outline(p, rect) > 0.5 * delta {
            continue;
        }
        let rel = [p[0] - center[0], p[1] - center[1]];
        let dist = (rel[0] * rel[0] + rel[1] * rel[1]).sqrt();
        if dist < delta {
            continue;
        }
        let psi = rel[1].atan2(rel[0]);
        let have = radius_at(radii, psi);
        if have >= dist - 1e-9 {
            continue;
        }
        let target = dist + 0.3 * delta;
        let k = ((psi.rem_euclid(two_pi) / two_pi * n as f64).round() as usize) % n;
        // The nearest control carries at least half the basis weight at
        // this angle, so the curve radius there grows with it and a
        // bracketed bisection to the target converges.
        let mut lo = radii[k];
        let mut hi = radii[k] + 2.5 * (target - have);
        for _ in 0..8 {
            radii[k] = hi;
            if radius_at(radii, psi) >= target {
                break;
            }
            hi += target - have;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            radii[k] = mid;
            if radius_at(radii, psi) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        radii[k] = hi;
    }
}

const CONTROLS: usize = 12;

impl ProblemConfig {
    /// Builds the runnable problem: validates the configuration, lays out
    /// the design vector, and places the initial design.
    pub fn build(&self) -> Result<Problem, ConfigError> {
        self.validate()?;
        let [l, h] = self.domain;
        let grid = Grid::new(self.mesh[0], self.mesh[1], l, h);
        let pitch = [l / self.cells[0] as f64, h / self.cells[1] as f64];
        let n_voids = self.void_grid[0] * self.void_grid[1] + 1;
        let layout = Layout::new(
            self.components,
            self.movable_centers,
            self.shared_cpf,
            self.cpf_terms[0],
            self.cpf_terms[1],
            vec![self.controls; n_voids],
        );
        let mut inverted = vec![false; n_voids];
        inverted[n_voids - 1] = true;
        let anchors = vec![[0.5 * pitch[0], 0.5 * pitch[1]]; self.components];
        let template = GeometryTemplate {
            cells: self.cells,
            pitch,
            exponent: self.lattice_exponent,
            anchors,
            domain: self.domain,
            inverted,
            degree: self.degree,
            delta: self.delta,
        };
        let space = DesignSpace::new(layout, template);
        let initial = initial_design(&space, self);
        Ok(Problem {
            name: self.name.clone(),
            domain: self.domain,
            grid,
            material: self.material,
            load_cases: self.load_cases.clone(),
            supports: self.supports.clone(),
            space,
            initial,
            v_bar_frac: self.v_bar,
            v_lower_frac: self.v_lower,
            heaviside: self.heaviside,
            aggregation: self.aggregation,
            mma: self.mma,
            stop: self.stop,
        })
    }
}

/// Shared settings of every benchmark: defaults everywhere, the band
/// matched to the mesh, and the MMA step capped at the band half-width so
/// no boundary outruns the region its sensitivities see in one iteration.
fn benchmark_config(
    name: &str,
    domain: [f64; 2],
    mesh: [usize; 2],
    supports: Vec<Support>,
    load_cases: Vec<LoadCase>,
) -> ProblemConfig {
    let grid = Grid::new(mesh[0], mesh[1], domain[0], domain[1]);
    let heaviside = HeavisideParams::for_grid(&grid);
    ProblemConfig {
        name: name.to_string(),
        seed: 0,
        domain,
        mesh,
        material: Material::default(),
        load_cases,
        supports,
        cells: [1, 1],
        components: 2,
        movable_centers: false,
        shared_cpf: true,
        cpf_terms: [4, 4],
        lattice_exponent: 6,
        delta: 0.05,
        void_grid: [1, 1],
        controls: CONTROLS,
        degree: 2,
        boundary_inset: [0.0; 4],
        v_bar: 0.3,
        v_lower: Some(0.5),
        heaviside,
        aggregation: Aggregation::default(),
        mma: MmaOptions {
            move_cap: Some(heaviside.epsilon),
            ..MmaOptions::default()
        },
        stop: StopRules::default(),
    }
}

fn initial_design(space: &DesignSpace, b: &ProblemConfig) -> Vec<f64> {
    use crate::design::VarKind;
    let [l, h] = b.domain;
    let pitch = space.template.pitch;
    let p = pitch[0].max(pitch[1]);
    let half_len = 0.3 * (pitch[0] * pitch[0] + pitch[1] * pitch[1]).sqrt();
    let angles: [f64; 4] = [
        std::f64::consts::FRAC_PI_4,
        -std::f64::consts::FRAC_PI_4,
        0.0,
        std::f64::consts::FRAC_PI_2,
    ];
    let [gx, gy] = b.void_grid;
    let vx = l / gx as f64;
    let vy = h / gy as f64;
    let r0 = 0.3 * vx.min(vy);
    let n_voids = gx * gy + 1;
    let boundary_center = [l / 2.0, h / 2.0];
    let rect = [
        b.boundary_inset[0],
        l - b.boundary_inset[1],
        b.boundary_inset[2],
        h - b.boundary_inset[3],
    ];
    // Control points sit on the rectangle itself. A quadratic spline
    // through collinear controls reproduces the straight edge exactly, so
    // the curve coincides with the boundary along each edge's interior
    // (where loads and clamps attach, with the coat just inside) and only
    // rounds off the corners.
    let mut boundary_radii: Vec<f64> = (0..b.controls)
        .map(|k| {
            let psi = 2.0 * std::f64::consts::PI * k as f64 / b.controls as f64;
            ray_to_rect(boundary_center, psi, rect)
        })
        .collect();
    let mut attach: Vec<[f64; 2]> = Vec::new();
    for case in &b.load_cases {
        for load in &case.loads {
            attach.push(load.pos);
        }
    }
    for s in &b.supports {
        if let Support::Point { pos, .. } = *s {
            attach.push(pos);
        }
    }
    cover_point_attachments(&mut boundary_radii, boundary_center, rect, b.delta, &attach);

    let mut x = Vec::with_capacity(space.layout.len());
    for kind in space.layout.kinds() {
        let v = match *kind {
            VarKind::HalfLength { .. } => half_len,
            VarKind::Angle { comp } => angles[comp],
            VarKind::WidthStart { .. } | VarKind::WidthEnd { .. } => 0.08 * p,
            VarKind::CompCenter { axis, .. } => 0.5 * pitch[axis],
            VarKind::Cpf { .. } => 0.0,
            VarKind::VoidCenter { void, axis } => {
                if void == n_voids - 1 {
                    boundary_center[axis]
                } else {
                    let (i, j) = (void % gx, void / gx);
                    if axis == 0 {
                        (i as f64 + 0.5) * vx
                    } else {
                        (j as f64 + 0.5) * vy
                    }
                }
            }
            VarKind::VoidRadius { void, control } => {
                if void == n_voids - 1 {
                    boundary_radii[control]
                } else {
                    r0
                }
            }
        };
        x.push(v);
    }
    // Derived placements can sit a rounding error outside a bound.
    space.clamp(&mut x);
    x
}

pub fn short_beam_config(scale: Scale) -> ProblemConfig {
    let (mesh, cells) = match scale {
        Scale::Paper => ([500, 300], [40, 24]),
        Scale::Desk => ([120, 72], [10, 6]),
    };
    // Published runs leave a visible gap between the initial boundary and
    // the clamped edge; coarse meshes cannot resolve it.
    let gap = if scale == Scale::Paper { 0.125 } else { 0.0 };
    ProblemConfig {
        cells,
        delta: 0.08,
        void_grid: [4, 2],
        boundary_inset: [gap, 0.0, 0.0, 0.0],
        v_bar: 0.3,
        ..benchmark_config(
            "short_beam",
            [5.0, 3.0],
            mesh,
            vec![Support::Edge {
                axis: 0,
                value: 0.0,
                fix: [true, true],
            }],
            vec![LoadCase {
                loads: vec![PointLoad {
                    pos: [5.0, 1.5],
                    force: [0.0, -1.0],
                }],
                weight: 1.0,
            }],
        )
    }
}

pub fn short_beam(scale: Scale) -> Problem {
    short_beam_config(scale).build().expect("preset is valid")
}

pub fn mbb_beam_config(scale: Scale) -> ProblemConfig {
    let (mesh, cells) = match scale {
        Scale::Paper => ([960, 240], [64, 16]),
        Scale::Desk => ([240, 60], [16, 4]),
    };
    ProblemConfig {
        cells,
        delta: 0.06,
        void_grid: [6, 2],
        ..benchmark_config(
            "mbb_beam",
            [8.0, 2.0],
            mesh,
            vec![
                Support::Point {
                    pos: [0.0, 0.0],
                    fix: [true, true],
                },
                Support::Point {
                    pos: [8.0, 0.0],
                    fix: [false, true],
                },
            ],
            vec![LoadCase {
                loads: vec![PointLoad {
                    pos: [4.0, 2.0],
                    force: [0.0, -1.0],
                }],
                weight: 1.0,
            }],
        )
    }
}

pub fn mbb_beam(scale: Scale) -> Problem {
    mbb_beam_config(scale).build().expect("preset is valid")
}

pub fn multi_load_config(
    scale: Scale,
    voids: usize,
    cells: CellKind,
    mode: LoadMode,
) -> ProblemConfig {
    let mesh = match scale {
        Scale::Paper => [600, 300],
        Scale::Desk => [200, 100],
    };
    let (cell_grid, nc, movable) = match cells {
        CellKind::TwoComp => ([16, 8], 2, false),
        CellKind::FourComp => ([8, 4], 4, true),
    };
    let void_grid = match voids {
        8 => [4, 2],
        12 => [4, 3],
        18 => [6, 3],
        other => panic!("unsupported void count {other}"),
    };
    let positions = [[0.5, 1.0], [1.0, 1.0], [1.5, 1.0]];
    let load_cases = match mode {
        LoadMode::Simultaneous => vec![LoadCase {
            loads: positions
                .iter()
                .map(|&pos| PointLoad {
                    pos,
                    force: [0.0, -1.0],
                })
                .collect(),
            weight: 1.0,
        }],
        LoadMode::Averaged => positions
            .iter()
            .map(|&pos| LoadCase {
                loads: vec![PointLoad {
                    pos,
                    force: [0.0, -1.0],
                }],
                weight: 1.0 / 3.0,
            })
            .collect(),
    };
    ProblemConfig {
        cells: cell_grid,
        components: nc,
        movable_centers: movable,
        delta: 0.05,
        void_grid,
        ..benchmark_config(
            "multi_load",
            [2.0, 1.0],
            mesh,
            vec![
                Support::Point {
                    pos: [0.0, 0.0],
                    fix: [true, true],
                },
                Support::Point {
                    pos: [2.0, 0.0],
                    fix: [false, true],
                },
            ],
            load_cases,
        )
    }
}

pub fn multi_load(scale: Scale, voids: usize, cells: CellKind, mode: LoadMode) -> Problem {
    multi_load_config(scale, voids, cells, mode)
        .build()
        .expect("preset is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_beam_variable_count() {
        let p = short_beam(Scale::Paper);
        assert_eq!(p.space.layout.len(), 150);
        assert_eq!(short_beam(Scale::Desk).space.layout.len(), 150);
    }

    #[test]
    fn mbb_variable_count() {
        let p = mbb_beam(Scale::Paper);
        assert_eq!(p.space.layout.len(), 206);
        assert_eq!(p.space.template.delta, 0.06);
    }

    #[test]
    fn initial_designs_inside_bounds() {
        let problems = [
            short_beam(Scale::Desk),
            short_beam(Scale::Paper),
            mbb_beam(Scale::Desk),
            multi_load(Scale::Desk, 8, CellKind::TwoComp, LoadMode::Simultaneous),
            multi_load(Scale::Desk, 12, CellKind::TwoComp, LoadMode::Averaged),
            multi_load(Scale::Desk, 18, CellKind::FourComp, LoadMode::Averaged),
        ];
        for p in &problems {
            assert_eq!(p.initial.len(), p.space.layout.len(), "{}", p.name);
            for i in 0..p.initial.len() {
                assert!(
                    p.initial[i] >= p.space.lower[i] && p.initial[i] <= p.space.upper[i],
                    "{} var {i}",
                    p.name
                );
            }
            assert!(p.v_bar_frac < 1.0);
        }
    }

    #[test]
    fn load_and_support_placement() {
        let p = mbb_beam(Scale::Desk);
        let fixed = p.fixed_dofs();
        let pin = p.grid.nearest_node([0.0, 0.0]);
        let roller = p.grid.nearest_node([8.0, 0.0]);
        assert!(fixed[2 * pin] && fixed[2 * pin + 1]);
        assert!(!fixed[2 * roller] && fixed[2 * roller + 1]);
        assert_eq!(fixed.iter().filter(|&&b| b).count(), 3);

        let f = p.load_vector(&p.load_cases[0]);
        let top_mid = p.grid.nearest_node([4.0, 2.0]);
        assert_eq!(f[2 * top_mid + 1], -1.0);
        assert_eq!(f.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn clamped_edge_fixes_all_left_nodes() {
        let p = short_beam(Scale::Desk);
        let fixed = p.fixed_dofs();
        let count = fixed.iter().filter(|&&b| b).count();
        assert_eq!(count, 2 * (p.grid.ny + 1));
    }

    #[test]
    fn averaged_mode_weights() {
        let p = multi_load(Scale::Desk, 8, CellKind::TwoComp, LoadMode::Averaged);
        assert_eq!(p.load_cases.len(), 3);
        for c in &p.load_cases {
            assert!((c.weight - 1.0 / 3.0).abs() < 1e-15);
            assert_eq!(c.loads.len(), 1);
        }
        let s = multi_load(Scale::Desk, 8, CellKind::TwoComp, LoadMode::Simultaneous);
        assert_eq!(s.load_cases.len(), 1);
        assert_eq!(s.load_cases[0].loads.len(), 3);
    }

    #[test]
    fn four_comp_has_movable_centers() {
        let p = multi_load(Scale::Desk, 18, CellKind::FourComp, LoadMode::Averaged);
        assert!(p.space.layout.movable_centers);
        assert_eq!(p.space.layout.n_components, 4);
        // Centers start midway through the allowed window.
        use crate::design::VarKind;
        for (i, kind) in p.space.layout.kinds().iter().enumerate() {
            if let VarKind::CompCenter { axis, .. } = kind {
                let pitch = p.space.template.pitch[*axis];
                assert!((p.initial[i] - 0.5 * pitch).abs() < 1e-12);
                assert!((p.space.lower[i] - 0.49 * pitch).abs() < 1e-12);
                assert!((p.space.upper[i] - 0.51 * pitch).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constructors_are_deterministic() {
        let a = short_beam(Scale::Desk);
        let b = short_beam(Scale::Desk);
        assert_eq!(a.initial, b.initial);
        assert_eq!(a.space.lower, b.space.lower);
        assert_eq!(a.space.upper, b.space.upper);
    }

    #[test]
    fn ray_to_rect_basics() {
        let rect = [0.0, 5.0, 0.0, 3.0];
        let c = [2.5, 1.5];
        assert!((ray_to_rect(c, 0.0, rect) - 2.5).abs() < 1e-12);
        assert!((ray_to_rect(c, std::f64::consts::FRAC_PI_2, rect) - 1.5).abs() < 1e-12);
        let corner = (2.5f64 * 2.5 + 1.5 * 1.5).sqrt();
        let diag = (1.5f64).atan2(2.5);
        assert!((ray_to_rect(c, diag, rect) - corner).abs() < 1e-12);
    }

    #[test]
    fn refinement_scales_grid_and_band() {
        let p = short_beam(Scale::Desk);
        let r = p.refined(2);
        assert_eq!(r.grid.nx, 240);
        assert_eq!(r.grid.ny, 144);
        assert!((r.heaviside.epsilon - p.heaviside.epsilon / 2.0).abs() < 1e-12);
        assert_eq!(r.initial, p.initial);
    }
}
