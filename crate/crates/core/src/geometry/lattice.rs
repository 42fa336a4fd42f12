//! Graded lattice: prototype components replicated over unit cells.
//!
//! Each prototype lives in cell (0, 0) and is copied by integer multiples of
//! the cell pitch. Grading happens through the prototype's coordinate
//! perturbation field: the whole lattice family of component `k` is
//! evaluated at the perturbed point, so one smooth map bends every copy
//! coherently. The lattice TDF is the smooth maximum over all copies of all
//! prototypes; nesting the per-prototype and per-cell aggregations with the
//! same exponent collapses into one flat log-sum-exp.

use super::component::ComponentParams;
use super::cpf::CpfField;
use crate::ks;

#[derive(Clone, Debug, PartialEq)]
pub struct Prototype {
    pub params: ComponentParams,
    pub cpf: CpfField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    /// Cell counts (nx, ny).
    pub cells: [usize; 2],
    /// Cell pitch; the lattice tiles `[0, nx*pitch_x] x [0, ny*pitch_y]`.
    pub pitch: [f64; 2],
    pub components: Vec<Prototype>,
}

impl LatticeSpec {
    pub fn cell_count(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    /// Total copies: prototypes times cells.
    pub fn copy_count(&self) -> usize {
        self.components.len() * self.cell_count()
    }

    /// Cell offsets in row-major order (x fastest).
    pub fn offsets(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.cell_count());
        for j in 0..self.cells[1] {
            for i in 0..self.cells[0] {
                out.push([i as f64 * self.pitch[0], j as f64 * self.pitch[1]]);
            }
        }
        out
    }

    /// Hoisted per-prototype trig pairs for hot loops.
    pub fn trig(&self) -> Vec<(f64, f64)> {
        self.components
            .iter()
            .map(|p| p.params.angle.sin_cos())
            .collect()
    }

    /// Lattice TDF given already-perturbed evaluation points, one per
    /// prototype.
    pub fn tdf_at_perturbed(
        &self,
        perturbed: &[[f64; 2]],
        trig: &[(f64, f64)],
        offsets: &[[f64; 2]],
        l_plus: f64,
    ) -> f64 {
        let mut acc = ks::Accumulator::new(l_plus);
        for (k, proto) in self.components.iter().enumerate() {
            let pt = perturbed[k];
            let (sin_t, cos_t) = trig[k];
            let p = &proto.params;
            for off in offsets {
                acc.push(tdf_shifted_prepared(p, pt, *off, sin_t, cos_t));
            }
        }
        acc.finish()
    }
}

#[inline]
fn tdf_shifted_prepared(
    p: &ComponentParams,
    point: [f64; 2],
    offset: [f64; 2],
    sin_t: f64,
    cos_t: f64,
) -> f64 {
    let dx = point[0] - (p.center[0] + offset[0]);
    let dy = point[1] - (p.center[1] + offset[1]);
    let xp = cos_t * dx + sin_t * dy;
    let yp = -sin_t * dx + cos_t * dy;
    let b_raw = 0.5 * (p.width_start + p.width_end)
        + (p.width_end - p.width_start) * xp / (2.0 * p.half_length);
    let b = b_raw.max(1e-9 * p.half_length);
    let u = xp / p.half_length;
    let v = yp / b;
    1.0 - (u.powi(p.exponent) + v.powi(p.exponent)).powf(1.0 / p.exponent as f64)
}

/// Graded lattice TDF at a point.
pub fn lattice_tdf(point: [f64; 2], spec: &LatticeSpec, l_plus: f64) -> f64 {
    let perturbed: Vec<[f64; 2]> = spec
        .components
        .iter()
        .map(|p| p.cpf.perturb(point))
        .collect();
    spec.tdf_at_perturbed(&perturbed, &spec.trig(), &spec.offsets(), l_plus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_lattice(cells: [usize; 2], pitch: f64, n1: usize, n2: usize) -> LatticeSpec {
        let domain = [cells[0] as f64 * pitch, cells[1] as f64 * pitch];
        let a = 0.6 * pitch * std::f64::consts::SQRT_2 / 2.0;
        let mk = |angle: f64| Prototype {
            params: ComponentParams {
                center: [0.5 * pitch, 0.5 * pitch],
                half_length: a,
                angle,
                width_start: 0.08 * pitch,
                width_end: 0.08 * pitch,
                exponent: 6,
            },
            cpf: CpfField::zero(n1, n2, domain),
        };
        LatticeSpec {
            cells,
            pitch: [pitch, pitch],
            components: vec![
                mk(std::f64::consts::FRAC_PI_4),
                mk(-std::f64::consts::FRAC_PI_4),
            ],
        }
    }

    #[test]
    fn matches_exact_maximum_within_bound() {
        let spec = x_lattice([4, 3], 0.5, 2, 2);
        let bound = (spec.copy_count() as f64).ln() / 50.0;
        for i in 0..40 {
            for j in 0..30 {
                let p = [i as f64 * 0.05, j as f64 * 0.05];
                let got = lattice_tdf(p, &spec, 50.0);
                let exact = spec
                    .components
                    .iter()
                    .flat_map(|proto| {
                        spec.offsets()
                            .into_iter()
                            .map(move |off| proto.params.tdf_shifted(p, off))
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(got >= exact - 1e-12);
                assert!(got <= exact + bound);
            }
        }
    }

    #[test]
    fn prototype_center_value_is_nearly_one() {
        let spec = x_lattice([4, 3], 0.5, 2, 2);
        let bound = (spec.copy_count() as f64).ln() / 50.0;
        let v = lattice_tdf([0.25, 0.25], &spec, 50.0);
        assert!(v >= 1.0 - 1e-12 && v <= 1.0 + bound);
    }

    #[test]
    fn periodic_without_perturbation() {
        let spec = x_lattice([8, 6], 0.5, 2, 2);
        // Interior points, at least two cells from the tiling edge.
        for i in 0..10 {
            for j in 0..8 {
                let p = [1.1 + i as f64 * 0.09, 1.1 + j as f64 * 0.07];
                let a = lattice_tdf(p, &spec, 50.0);
                let b = lattice_tdf([p[0] + 0.5, p[1]], &spec, 50.0);
                let c = lattice_tdf([p[0], p[1] + 0.5], &spec, 50.0);
                assert!((a - b).abs() < 1e-9, "at {p:?}: {a} vs {b}");
                assert!((a - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn perturbation_ties_to_unperturbed_field() {
        let mut spec = x_lattice([4, 3], 0.5, 3, 3);
        for proto in &mut spec.components {
            proto.cpf.alpha[1] = [0.04, -0.03];
            proto.cpf.beta[2] = [0.02, 0.05];
        }
        let zero = x_lattice([4, 3], 0.5, 3, 3);
        for i in 0..15 {
            let p = [0.13 * i as f64, 0.11 * i as f64];
            let moved = spec.components[0].cpf.perturb(p);
            assert!((lattice_tdf(p, &spec, 50.0) - lattice_tdf(moved, &zero, 50.0)).abs() < 1e-12);
        }
    }
}
