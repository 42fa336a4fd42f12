//! Coordinate perturbation fields.
//!
//! A lattice prototype is graded by evaluating its TDF at a perturbed point
//! `(x + f(x), y + g(y))` where `f` and `g` are truncated trigonometric
//! series over the design domain:
//!
//! `f(x) = sum_h a[h][0] cos(h pi/L (x - L/2)) + a[h][1] sin(h pi/L (x - L/2))`
//!
//! and likewise for `g` over the height. The `h = 0` sine basis is
//! identically zero; its coefficient is kept in the layout (with zero
//! gradient) so harmonics stay paired.

#[derive(Clone, Debug, PartialEq)]
pub struct CpfField {
    /// Per-harmonic (cos, sin) coefficients of the x map.
    pub alpha: Vec<[f64; 2]>,
    /// Per-harmonic (cos, sin) coefficients of the y map.
    pub beta: Vec<[f64; 2]>,
    /// Design domain extents (L, H) that set the base wavelength.
    pub domain: [f64; 2],
}

impl CpfField {
    pub fn zero(n1: usize, n2: usize, domain: [f64; 2]) -> Self {
        CpfField {
            alpha: vec![[0.0; 2]; n1],
            beta: vec![[0.0; 2]; n2],
            domain,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.iter().chain(&self.beta).all(|c| c == &[0.0, 0.0])
    }

    pub fn perturb(&self, point: [f64; 2]) -> [f64; 2] {
        [
            point[0] + series(&self.alpha, point[0], self.domain[0]),
            point[1] + series(&self.beta, point[1], self.domain[1]),
        ]
    }

    /// Basis value multiplying `alpha[harmonic][trig]` in the x map; this is
    /// also `d x~ / d alpha[harmonic][trig]`.
    pub fn basis_x(&self, x: f64, harmonic: usize, trig: usize) -> f64 {
        basis(x, self.domain[0], harmonic, trig)
    }

    /// Basis value multiplying `beta[harmonic][trig]` in the y map.
    pub fn basis_y(&self, y: f64, harmonic: usize, trig: usize) -> f64 {
        basis(y, self.domain[1], harmonic, trig)
    }
}

fn series(coeff: &[[f64; 2]], coord: f64, extent: f64) -> f64 {
    let mut total = 0.0;
    for (h, c) in coeff.iter().enumerate() {
        let arg = h as f64 * std::f64::consts::PI / extent * (coord - 0.5 * extent);
        total += c[0] * arg.cos() + c[1] * arg.sin();
    }
    total
}

fn basis(coord: f64, extent: f64, harmonic: usize, trig: usize) -> f64 {
    let arg = harmonic as f64 * std::f64::consts::PI / extent * (coord - 0.5 * extent);
    if trig == 0 {
        arg.cos()
    } else {
        arg.sin()
    }
}
