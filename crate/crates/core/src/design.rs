//! Design-vector layout: the ordered flattening of all geometric
//! parameters, their box bounds, and the mapping to and from the
//! geometry structures consumed by the field sampler.
//!
//! Order: one block per prototype component (half-length, angle, start
//! width, end width, then center coordinates when movable, then that
//! component's perturbation coefficients when they are not shared), a
//! single shared perturbation block when they are, then one block per
//! void (center x, center y, control radii).

use crate::geometry::{ComponentParams, CpfField, LatticeSpec, Prototype, ShellSpec, VoidCurve};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    HalfLength { comp: usize },
    Angle { comp: usize },
    WidthStart { comp: usize },
    WidthEnd { comp: usize },
    CompCenter { comp: usize, axis: usize },
    /// `comp: None` marks the shared perturbation block. `axis` 0 shifts
    /// x, 1 shifts y; `trig` 0 is the cosine coefficient, 1 the sine.
    Cpf {
        comp: Option<usize>,
        axis: usize,
        harmonic: usize,
        trig: usize,
    },
    VoidCenter { void: usize, axis: usize },
    VoidRadius { void: usize, control: usize },
}

impl VarKind {
    /// True for variables of the lattice background; the infill-region
    /// volume does not depend on these at all.
    pub fn is_infill(&self) -> bool {
        !matches!(self, VarKind::VoidCenter { .. } | VarKind::VoidRadius { .. })
    }

    pub fn is_cpf(&self) -> bool {
        matches!(self, VarKind::Cpf { .. })
    }
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub n_components: usize,
    pub movable_centers: bool,
    pub shared_cpf: bool,
    pub n1: usize,
    pub n2: usize,
    pub void_controls: Vec<usize>,
    kinds: Vec<VarKind>,
}

impl Layout {
    pub fn new(
        n_components: usize,
        movable_centers: bool,
        shared_cpf: bool,
        n1: usize,
        n2: usize,
        void_controls: Vec<usize>,
    ) -> Self {
        let mut kinds = Vec::new();
        for k in 0..n_components {
            kinds.push(VarKind::HalfLength { comp: k });
            kinds.push(VarKind::Angle { comp: k });
            kinds.push(VarKind::WidthStart { comp: k });
            kinds.push(VarKind::WidthEnd { comp: k });
            if movable_centers {
                kinds.push(VarKind::CompCenter { comp: k, axis: 0 });
                kinds.push(VarKind::CompCenter { comp: k, axis: 1 });
            }
            if !shared_cpf {
                push_cpf(&mut kinds, Some(k), n1, n2);
            }
        }
        if shared_cpf {
            push_cpf(&mut kinds, None, n1, n2);
        }
        for (j, &n) in void_controls.iter().enumerate() {
            kinds.push(VarKind::VoidCenter { void: j, axis: 0 });
            kinds.push(VarKind::VoidCenter { void: j, axis: 1 });
            for c in 0..n {
                kinds.push(VarKind::VoidRadius { void: j, control: c });
            }
        }
        Layout {
            n_components,
            movable_centers,
            shared_cpf,
            n1,
            n2,
            void_controls,
            kinds,
        }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }
}

fn push_cpf(kinds: &mut Vec<VarKind>, comp: Option<usize>, n1: usize, n2: usize) {
    for (axis, count) in [(0, n1), (1, n2)] {
        for harmonic in 0..count {
            for trig in 0..2 {
                kinds.push(VarKind::Cpf {
                    comp,
                    axis,
                    harmonic,
                    trig,
                });
            }
        }
    }
}

/// Everything about the geometry that is not a design variable.
#[derive(Clone, Debug)]
pub struct GeometryTemplate {
    pub cells: [usize; 2],
    pub pitch: [f64; 2],
    pub exponent: i32,
    /// Component centers within the first cell; used directly when
    /// centers are not design variables.
    pub anchors: Vec<[f64; 2]>,
    pub domain: [f64; 2],
    pub inverted: Vec<bool>,
    pub degree: usize,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct DesignSpace {
    pub layout: Layout,
    pub template: GeometryTemplate,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DesignSpace {
    pub fn new(layout: Layout, template: GeometryTemplate) -> Self {
        let [l, h] = template.domain;
        let pitch_max = template.pitch[0].max(template.pitch[1]);
        let pitch_min = template.pitch[0].min(template.pitch[1]);
        let dd = template.delta;
        let mut lower = Vec::with_capacity(layout.len());
        let mut upper = Vec::with_capacity(layout.len());
        for kind in layout.kinds() {
            let (lo, hi) = match *kind {
                VarKind::HalfLength { .. } => (0.1 * pitch_min, 2.0 * pitch_max),
                VarKind::Angle { .. } => (-std::f64::consts::PI, std::f64::consts::PI),
                VarKind::WidthStart { .. } | VarKind::WidthEnd { .. } => {
                    (0.02 * pitch_min, 0.8 * pitch_max)
                }
                VarKind::CompCenter { axis, .. } => {
                    (0.49 * template.pitch[axis], 0.51 * template.pitch[axis])
                }
                VarKind::Cpf { axis, .. } => {
                    // A quarter of the lattice span along the shifted axis.
                    let span = pitch_min * template.cells[axis] as f64;
                    (-0.25 * span, 0.25 * span)
                }
                VarKind::VoidCenter { axis, .. } => {
                    let extent = template.domain[axis];
                    (dd, extent - dd)
                }
                VarKind::VoidRadius { void, .. } => {
                    if template.inverted[void] {
                        // The outer boundary must be able to wrap the whole
                        // domain, corners included.
                        (2.0 * dd, 1.25 * (l * l / 4.0 + h * h / 4.0).sqrt())
                    } else {
                        (2.0 * dd, 0.9 * l.min(h))
                    }
                }
            };
            lower.push(lo);
            upper.push(hi);
        }
        DesignSpace {
            layout,
            template,
            lower,
            upper,
        }
    }

    /// Central-difference step used by the gradient checker, sized per
    /// variable class.
    pub fn fd_steps(&self) -> Vec<f64> {
        let scale = self.template.domain[0].min(self.template.domain[1]);
        let pitch = self.template.pitch[0].max(self.template.pitch[1]);
        self.layout
            .kinds()
            .iter()
            .map(|kind| match kind {
                VarKind::HalfLength { .. }
                | VarKind::WidthStart { .. }
                | VarKind::WidthEnd { .. } => 1e-5 * pitch,
                VarKind::Angle { .. } => 1e-5,
                _ => 1e-5 * scale,
            })
            .collect()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Builds the lattice and shell geometry described by `x`.
    pub fn decode(&self, x: &[f64]) -> (LatticeSpec, ShellSpec) {
        assert_eq!(x.len(), self.layout.len());
        let t = &self.template;
        let nc = self.layout.n_components;
        let mut params: Vec<ComponentParams> = t
            .anchors
            .iter()
            .map(|&anchor| ComponentParams {
                center: anchor,
                half_length: 0.0,
                angle: 0.0,
                width_start: 0.0,
                width_end: 0.0,
                exponent: t.exponent,
            })
            .collect();
        let n_cpfs = if self.layout.shared_cpf { 1 } else { nc };
        let mut cpfs = vec![CpfField::zero(self.layout.n1, self.layout.n2, t.domain); n_cpfs];
        let mut voids: Vec<VoidCurve> = t
            .inverted
            .iter()
            .zip(&self.layout.void_controls)
            .map(|(&inv, &n)| VoidCurve {
                center: [0.0, 0.0],
                radii: vec![0.0; n],
                degree: t.degree,
                inverted: inv,
            })
            .collect();

        for (i, kind) in self.layout.kinds().iter().enumerate() {
            let v = x[i];
            match *kind {
                VarKind::HalfLength { comp } => params[comp].half_length = v,
                VarKind::Angle { comp } => params[comp].angle = v,
                VarKind::WidthStart { comp } => params[comp].width_start = v,
                VarKind::WidthEnd { comp } => params[comp].width_end = v,
                VarKind::CompCenter { comp, axis } => params[comp].center[axis] = v,
                VarKind::Cpf {
                    comp,
                    axis,
                    harmonic,
                    trig,
                } => {
                    let field = &mut cpfs[comp.unwrap_or(0)];
                    let coeffs = if axis == 0 {
                        &mut field.alpha
                    } else {
                        &mut field.beta
                    };
                    coeffs[harmonic][trig] = v;
                }
                VarKind::VoidCenter { void, axis } => voids[void].center[axis] = v,
                VarKind::VoidRadius { void, control } => voids[void].radii[control] = v,
            }
        }

        let components = params
            .into_iter()
            .enumerate()
            .map(|(k, p)| Prototype {
                params: p,
                cpf: cpfs[if self.layout.shared_cpf { 0 } else { k }].clone(),
            })
            .collect();
        (
            LatticeSpec {
                cells: t.cells,
                pitch: t.pitch,
                components,
            },
            ShellSpec {
                voids,
                delta: t.delta,
                samples_per_control: crate::geometry::SAMPLES_PER_CONTROL,
            },
        )
    }

    /// Inverse of [`decode`]; panics if the geometry does not fit the
    /// layout.
    pub fn encode(&self, lattice: &LatticeSpec, shell: &ShellSpec) -> Vec<f64> {
        self.layout
            .kinds()
            .iter()
            .map(|kind| match *kind {
                VarKind::HalfLength { comp } => lattice.components[comp].params.half_length,
                VarKind::Angle { comp } => lattice.components[comp].params.angle,
                VarKind::WidthStart { comp } => lattice.components[comp].params.width_start,
                VarKind::WidthEnd { comp } => lattice.components[comp].params.width_end,
                VarKind::CompCenter { comp, axis } => lattice.components[comp].params.center[axis],
                VarKind::Cpf {
                    comp,
                    axis,
                    harmonic,
                    trig,
                } => {
                    let field = &lattice.components[comp.unwrap_or(0)].cpf;
                    let coeffs = if axis == 0 { &field.alpha } else { &field.beta };
                    coeffs[harmonic][trig]
                }
                VarKind::VoidCenter { void, axis } => shell.voids[void].center[axis],
                VarKind::VoidRadius { void, control } => shell.voids[void].radii[control],
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(shared: bool, movable: bool) -> DesignSpace {
        let layout = Layout::new(2, movable, shared, 4, 4, vec![12; 9]);
        let template = GeometryTemplate {
            cells: [10, 6],
            pitch: [0.5, 0.5],
            exponent: 6,
            anchors: vec![[0.25, 0.25]; 2],
            domain: [5.0, 3.0],
            inverted: {
                let mut v = vec![false; 9];
                v[8] = true;
                v
            },
            degree: 2,
            delta: 0.08,
        };
        DesignSpace::new(layout, template)
    }

    #[test]
    fn shared_block_counts() {
        let s = space(true, false);
        // 2 components x 4 scalars, one shared 16-wide block, 9 voids x 14.
        assert_eq!(s.layout.len(), 8 + 16 + 9 * 14);
        let per_comp = Layout::new(2, false, false, 4, 4, vec![12; 9]);
        assert_eq!(per_comp.len(), 2 * (4 + 16) + 9 * 14);
        let movable = Layout::new(4, true, true, 4, 4, vec![12; 13]);
        assert_eq!(movable.len(), 4 * 6 + 16 + 13 * 14);
    }

    #[test]
    fn decode_encode_round_trip() {
        for (shared, movable) in [(true, false), (false, false), (true, true)] {
            let s = space(shared, movable);
            let x: Vec<f64> = (0..s.layout.len())
                .map(|i| {
                    let f = ((i * 37 + 11) % 101) as f64 / 101.0;
                    s.lower[i] + f * (s.upper[i] - s.lower[i])
                })
                .collect();
            let (lattice, shell) = s.decode(&x);
            let back = s.encode(&lattice, &shell);
            assert_eq!(x, back);
        }
    }

    #[test]
    fn decode_places_values() {
        let s = space(true, false);
        let mut x = vec![0.0; s.layout.len()];
        for i in 0..x.len() {
            x[i] = s.lower[i].max(0.0).min(s.upper[i]);
        }
        x[0] = 0.7; // first component half-length
        x[8] = 0.11; // shared alpha, h=0, cosine
        x[8 + 16] = 1.25; // first void center x
        x[8 + 16 + 2] = 0.6; // first void radius
        let (lattice, shell) = s.decode(&x);
        assert_eq!(lattice.components[0].params.half_length, 0.7);
        assert_eq!(lattice.components[0].cpf.alpha[0][0], 0.11);
        assert_eq!(lattice.components[1].cpf.alpha[0][0], 0.11);
        assert_eq!(shell.voids[0].center[0], 1.25);
        assert_eq!(shell.voids[0].radii[0], 0.6);
        assert!(shell.voids[8].inverted);
    }

    #[test]
    fn bounds_respect_classes() {
        let s = space(true, true);
        for (i, kind) in s.layout.kinds().iter().enumerate() {
            assert!(s.lower[i] < s.upper[i], "{kind:?}");
            match *kind {
                VarKind::Angle { .. } => {
                    assert_eq!(s.upper[i], std::f64::consts::PI);
                }
                VarKind::VoidRadius { void, .. } => {
                    assert_eq!(s.lower[i], 0.16);
                    if void == 8 {
                        // The inverted boundary can reach past the corners.
                        assert!(s.upper[i] > (2.5f64 * 2.5 + 1.5 * 1.5).sqrt());
                    } else {
                        assert!((s.upper[i] - 2.7).abs() < 1e-12);
                    }
                }
                VarKind::CompCenter { axis, .. } => {
                    assert_eq!(s.lower[i], 0.49 * s.template.pitch[axis]);
                }
                _ => {}
            }
        }
    }

    #[test]
    fn infill_classification() {
        let s = space(true, false);
        let infill: usize = s.layout.kinds().iter().filter(|k| k.is_infill()).count();
        assert_eq!(infill, 8 + 16);
        assert_eq!(s.layout.len() - infill, 9 * 14);
    }
}
