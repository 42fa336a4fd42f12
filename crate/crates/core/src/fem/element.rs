//! Bilinear quadrilateral stiffness for rectangular plane-stress elements.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub youngs: f64,
    pub poisson: f64,
    pub thickness: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            youngs: 1.0,
            poisson: 0.3,
            thickness: 1.0,
        }
    }
}

/// Corner reference coordinates, counterclockwise from the lower left.
const XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

/// Element stiffness for a `dx` by `dy` rectangle at full density.
///
/// Two-point Gauss quadrature per axis, which is exact here: the Jacobian
/// is constant, so every integrand entry is at most quadratic per axis.
pub fn unit_stiffness(dx: f64, dy: f64, m: &Material) -> [[f64; 8]; 8] {
    let g = 1.0 / 3f64.sqrt();
    stiffness_with_rule(dx, dy, m, &[(-g, 1.0), (g, 1.0)])
}

/// Same integral under an arbitrary 1D Gauss rule, tensored over both axes.
pub fn stiffness_with_rule(
    dx: f64,
    dy: f64,
    m: &Material,
    rule: &[(f64, f64)],
) -> [[f64; 8]; 8] {
    let e = m.youngs / (1.0 - m.poisson * m.poisson);
    let d = [
        [e, e * m.poisson, 0.0],
        [e * m.poisson, e, 0.0],
        [0.0, 0.0, e * (1.0 - m.poisson) / 2.0],
    ];
    let det = dx * dy / 4.0;

    let mut k = [[0.0; 8]; 8];
    for &(xi, wx) in rule {
        for &(eta, wy) in rule {
            let mut b = [[0.0; 8]; 3];
            for i in 0..4 {
                let dndx = 0.25 * XI[i] * (1.0 + ETA[i] * eta) * 2.0 / dx;
                let dndy = 0.25 * ETA[i] * (1.0 + XI[i] * xi) * 2.0 / dy;
                b[0][2 * i] = dndx;
                b[1][2 * i + 1] = dndy;
                b[2][2 * i] = dndy;
                b[2][2 * i + 1] = dndx;
            }
            let w = wx * wy * det * m.thickness;
            for r in 0..8 {
                for c in 0..8 {
                    let mut v = 0.0;
                    for p in 0..3 {
                        for q in 0..3 {
                            v += b[p][r] * d[p][q] * b[q][c];
                        }
                    }
                    k[r][c] += w * v;
                }
            }
        }
    }
    k
}

/// Quadratic form `u_e' k u_e` for one element's displacement vector.
#[inline]
pub fn energy(k: &[[f64; 8]; 8], ue: &[f64; 8]) -> f64 {
    let mut acc = 0.0;
    for r in 0..8 {
        let mut row = 0.0;
        for c in 0..8 {
            row += k[r][c] * ue[c];
        }
        acc += ue[r] * row;
    }
    acc
}
