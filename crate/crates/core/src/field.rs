//! Regular grid, Heaviside projection, and nodal sampling of the composite
//! TDF family.
//!
//! The design domain is meshed with uniform Q4 elements; every TDF is
//! sampled at grid nodes and projected by a regularized Heaviside. Element
//! densities average the projected corner values, with the projection
//! raised to a small power `q` so that near-void corners contribute
//! `alpha^q` stiffness (the ersatz weak material) while plain averages are
//! used for volume bookkeeping.

use crate::exec;
use crate::geometry::{
    shell, void_tdf, Aggregation, LatticeSpec, ShellSpec, ShellTables,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    /// Element counts along x and y.
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: [f64; 2],
}

impl Grid {
    pub fn new(nx: usize, ny: usize, length: f64, height: f64) -> Self {
        Grid {
            nx,
            ny,
            dx: length / nx as f64,
            dy: height / ny as f64,
            origin: [0.0, 0.0],
        }
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn elem_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        iy * (self.nx + 1) + ix
    }

    #[inline]
    pub fn node_coords(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    #[inline]
    pub fn node_pos(&self, node: usize) -> [f64; 2] {
        let (ix, iy) = self.node_coords(node);
        [
            self.origin[0] + ix as f64 * self.dx,
            self.origin[1] + iy as f64 * self.dy,
        ]
    }

    /// Corner nodes of element `e`, counterclockwise from the lower left.
    #[inline]
    pub fn elem_nodes(&self, e: usize) -> [usize; 4] {
        let ex = e % self.nx;
        let ey = e / self.nx;
        let n0 = self.node_index(ex, ey);
        [n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1]
    }

    /// Number of elements sharing a node: 4 interior, 2 edge, 1 corner.
    #[inline]
    pub fn node_valence(&self, node: usize) -> usize {
        let (ix, iy) = self.node_coords(node);
        let cx = if ix == 0 || ix == self.nx { 1 } else { 2 };
        let cy = if iy == 0 || iy == self.ny { 1 } else { 2 };
        cx * cy
    }

    /// Nearest grid node to a physical point.
    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let ix = ((p[0] - self.origin[0]) / self.dx).round().clamp(0.0, self.nx as f64) as usize;
        let iy = ((p[1] - self.origin[1]) / self.dy).round().clamp(0.0, self.ny as f64) as usize;
        self.node_index(ix, iy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeavisideParams {
    /// Transition half-width.
    pub epsilon: f64,
    /// Floor value approached below the band.
    pub alpha: f64,
    /// Stiffness penal exponent `q`.
    pub penal: i32,
}

impl HeavisideParams {
    /// Default band: three cell widths.
    pub fn for_grid(grid: &Grid) -> Self {
        HeavisideParams {
            epsilon: 3.0 * grid.dx.min(grid.dy),
            alpha: 1e-3,
            penal: 2,
        }
    }
}

/// Regularized Heaviside: 1 above the band, `alpha` below, and a C1 cubic
/// blend `3(1-alpha)/4 (x/e - x^3/(3 e^3)) + (1+alpha)/2` inside.
#[inline]
pub fn heaviside(x: f64, hp: &HeavisideParams) -> f64 {
    let e = hp.epsilon;
    if x > e {
        1.0
    } else if x < -e {
        hp.alpha
    } else {
        0.75 * (1.0 - hp.alpha) * (x / e - x * x * x / (3.0 * e * e * e))
            + 0.5 * (1.0 + hp.alpha)
    }
}

/// Derivative of [`heaviside`]: zero outside the band.
#[inline]
pub fn heaviside_deriv(x: f64, hp: &HeavisideParams) -> f64 {
    let e = hp.epsilon;
    if x.abs() > e {
        0.0
    } else {
        0.75 * (1.0 - hp.alpha) * (1.0 / e - x * x / (e * e * e))
    }
}

/// All nodal fields needed by the analysis and the sensitivity chain.
#[derive(Clone, Debug)]
pub struct FieldSet {
    pub phi_s: Vec<f64>,
    pub phi_0: Vec<f64>,
    pub phi_0_ext: Vec<f64>,
    pub phi_1: Vec<f64>,
    pub phi_gs: Vec<f64>,
    /// Per-void TDFs, `[void][node]`.
    pub phi_voids: Vec<Vec<f64>>,
    pub phi_voids_ext: Vec<Vec<f64>>,
    /// Perturbed x per component per grid column, `[component][ix]`.
    pub xt: Vec<Vec<f64>>,
    /// Perturbed y per component per grid row, `[component][iy]`.
    pub yt: Vec<Vec<f64>>,
}

/// Samples every field at every grid node. The perturbation maps are
/// separable (x depends on x only, y on y only), so they are tabulated per
/// grid column/row once per component.
pub fn sample_fields(
    grid: &Grid,
    lattice: &LatticeSpec,
    shell_spec: &ShellSpec,
    tables: &ShellTables,
    agg: Aggregation,
) -> FieldSet {
    let nodes = grid.node_count();
    let trig = lattice.trig();
    let offsets = lattice.offsets();

    let xt: Vec<Vec<f64>> = lattice
        .components
        .iter()
        .map(|c| {
            (0..=grid.nx)
                .map(|ix| {
                    let x = grid.origin[0] + ix as f64 * grid.dx;
                    c.cpf.perturb([x, 0.0])[0]
                })
                .collect()
        })
        .collect();
    let yt: Vec<Vec<f64>> = lattice
        .components
        .iter()
        .map(|c| {
            (0..=grid.ny)
                .map(|iy| {
                    let y = grid.origin[1] + iy as f64 * grid.dy;
                    c.cpf.perturb([0.0, y])[1]
                })
                .collect()
        })
        .collect();

    let phi_gs = exec::map_collect(nodes, |i| {
        let (ix, iy) = grid.node_coords(i);
        let perturbed: Vec<[f64; 2]> = (0..lattice.components.len())
            .map(|k| [xt[k][ix], yt[k][iy]])
            .collect();
        lattice.tdf_at_perturbed(&perturbed, &trig, &offsets, agg.l_plus)
    });

    let phi_voids: Vec<Vec<f64>> = shell_spec
        .voids
        .iter()
        .enumerate()
        .map(|(j, v)| {
            exec::map_collect(nodes, |i| void_tdf(grid.node_pos(i), v, &tables.original[j]))
        })
        .collect();
    let phi_voids_ext: Vec<Vec<f64>> = tables
        .expanded
        .iter()
        .enumerate()
        .map(|(j, v)| exec::map_collect(nodes, |i| void_tdf(grid.node_pos(i), v, &tables.ext[j])))
        .collect();

    let phi_0 = exec::map_collect(nodes, |i| {
        let vals: Vec<f64> = phi_voids.iter().map(|f| f[i]).collect();
        crate::ks::aggregate(&vals, agg.l_minus)
    });
    let phi_0_ext = exec::map_collect(nodes, |i| {
        let vals: Vec<f64> = phi_voids_ext.iter().map(|f| f[i]).collect();
        crate::ks::aggregate(&vals, agg.l_minus)
    });

    let mut phi_1 = vec![0.0; nodes];
    let mut phi_s = vec![0.0; nodes];
    let composed = exec::map_collect(nodes, |i| {
        shell::compose(phi_0[i], phi_0_ext[i], phi_gs[i], agg)
    });
    for (i, (p1, ps)) in composed.into_iter().enumerate() {
        phi_1[i] = p1;
        phi_s[i] = ps;
    }

    FieldSet {
        phi_s,
        phi_0,
        phi_0_ext,
        phi_1,
        phi_gs,
        phi_voids,
        phi_voids_ext,
        xt,
        yt,
    }
}

/// Ersatz element densities: mean of `H(phi)^q` over the four corners.
pub fn element_densities(grid: &Grid, phi: &[f64], hp: &HeavisideParams) -> Vec<f64> {
    exec::map_collect(grid.elem_count(), |e| {
        let n = grid.elem_nodes(e);
        n.iter()
            .map(|&i| heaviside(phi[i], hp).powi(hp.penal))
            .sum::<f64>()
            / 4.0
    })
}

/// Volume of the region `phi > 0`, by corner-averaged plain Heaviside.
pub fn volume(grid: &Grid, phi: &[f64], hp: &HeavisideParams) -> f64 {
    let cell = grid.dx * grid.dy / 4.0;
    exec::sum(grid.node_count(), |i| {
        heaviside(phi[i], hp) * grid.node_valence(i) as f64 * cell
    })
}

/// Mean projected density over the infill region (`phi_0_ext > 0` nodes).
pub fn infill_mean_density(phi_s: &[f64], phi_0_ext: &[f64], hp: &HeavisideParams) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (s, e) in phi_s.iter().zip(phi_0_ext) {
        if *e > 0.0 {
            sum += heaviside(*s, hp);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp() -> HeavisideParams {
        HeavisideParams {
            epsilon: 0.125,
            alpha: 1e-3,
            penal: 2,
        }
    }

    #[test]
    fn grid_indexing() {
        let g = Grid::new(4, 3, 2.0, 1.5);
        assert_eq!(g.node_count(), 20);
        assert_eq!(g.elem_count(), 12);
        assert_eq!(g.elem_nodes(0), [0, 1, 6, 5]);
        assert_eq!(g.elem_nodes(5), [6, 7, 12, 11]);
        assert_eq!(g.node_valence(0), 1);
        assert_eq!(g.node_valence(g.node_index(2, 0)), 2);
        assert_eq!(g.node_valence(g.node_index(2, 1)), 4);
        let p = g.node_pos(g.node_index(2, 1));
        assert_eq!(p, [1.0, 0.5]);
        assert_eq!(g.nearest_node([1.01, 0.52]), g.node_index(2, 1));
    }

    #[test]
    fn heaviside_values() {
        let hp = hp();
        assert_eq!(heaviside(1.0, &hp), 1.0);
        assert_eq!(heaviside(-1.0, &hp), 1e-3);
        assert!((heaviside(0.0, &hp) - 0.5 * (1.0 + 1e-3)).abs() < 1e-15);
        // C1 junctions.
        assert!((heaviside(hp.epsilon, &hp) - 1.0).abs() < 1e-15);
        assert!((heaviside(-hp.epsilon, &hp) - 1e-3).abs() < 1e-15);
        assert!(heaviside_deriv(hp.epsilon, &hp).abs() < 1e-12);
    }

    #[test]
    fn heaviside_derivative_matches_fd() {
        let hp = hp();
        let h = 1e-7;
        for i in -20..=20 {
            let x = i as f64 * 0.01;
            if (x.abs() - hp.epsilon).abs() < 2.0 * h {
                continue;
            }
            let fd = (heaviside(x + h, &hp) - heaviside(x - h, &hp)) / (2.0 * h);
            let an = heaviside_deriv(x, &hp);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "x={x}");
        }
    }

    #[test]
    fn heaviside_monotone() {
        let hp = hp();
        let mut prev = f64::NEG_INFINITY;
        for i in -300..=300 {
            let v = heaviside(i as f64 * 0.001, &hp);
            // The cubic can overshoot its plateau by an ulp at the band edge.
            assert!(v >= prev - 1e-14);
            assert!(v >= 1e-3 - 1e-14 && v <= 1.0 + 1e-14);
            prev = v;
        }
    }

    #[test]
    fn solid_field_volume_is_domain_area() {
        let g = Grid::new(40, 30, 2.0, 1.5);
        let phi = vec![1.0; g.node_count()];
        let v = volume(&g, &phi, &hp());
        assert!((v - 3.0).abs() < 1e-12);
        let rho = element_densities(&g, &phi, &hp());
        assert!(rho.iter().all(|&r| (r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn half_plane_volume() {
        let (l, h) = (2.0, 1.5);
        let g = Grid::new(64, 48, l, h);
        let hp = HeavisideParams::for_grid(&g);
        let phi: Vec<f64> = (0..g.node_count())
            .map(|i| g.node_pos(i)[0] - l / 2.0)
            .collect();
        let v = volume(&g, &phi, &hp);
        assert!((v - l * h / 2.0).abs() < 2.0 * hp.epsilon * h);
    }

    #[test]
    fn void_corner_density_at_floor() {
        let g = Grid::new(4, 4, 1.0, 1.0);
        let phi = vec![-10.0; g.node_count()];
        let rho = element_densities(&g, &phi, &hp());
        for r in rho {
            assert!((r - 1e-6).abs() < 1e-18);
        }
    }
}
