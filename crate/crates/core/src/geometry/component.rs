//! A single movable component: a rectangle-like solid with linearly varying
//! width, described in a rotated local frame.
//!
//! The TDF is `1 - ((x'/a)^p + (y'/b(x'))^p)^(1/p)` with the local frame
//! `x' =  cos(t)(x - x0) + sin(t)(y - y0)`,
//! `y' = -sin(t)(x - x0) + cos(t)(y - y0)`
//! and half-width `b(x') = (t1 + t2)/2 + (t2 - t1) x' / (2a)`: `t1` at the
//! `x' = -a` end, `t2` at `x' = +a`. The p-th root keeps the field close to
//! a scaled radial coordinate, so values are O(1) near the component.

/// Guard so the half-width never reaches zero when `b(x')` is extrapolated
/// far outside the component.
const MIN_WIDTH_FRACTION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentParams {
    /// Prototype center (x, y).
    pub center: [f64; 2],
    /// Half-length `a` along the local x axis.
    pub half_length: f64,
    /// Rotation angle in radians.
    pub angle: f64,
    /// Half-width at the `x' = -a` end.
    pub width_start: f64,
    /// Half-width at the `x' = +a` end.
    pub width_end: f64,
    /// Even norm exponent `p`.
    pub exponent: i32,
}

/// Derivatives of the TDF at one evaluation point. `d_point` is the gradient
/// with respect to the (perturbed) evaluation point; center derivatives are
/// its negation.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComponentPartials {
    pub phi: f64,
    pub d_point: [f64; 2],
    pub d_half_length: f64,
    pub d_angle: f64,
    pub d_width_start: f64,
    pub d_width_end: f64,
}

impl ComponentParams {
    pub fn tdf(&self, point: [f64; 2]) -> f64 {
        self.tdf_shifted(point, [0.0, 0.0])
    }

    /// TDF of this component translated by `offset` (lattice cell placement).
    pub fn tdf_shifted(&self, point: [f64; 2], offset: [f64; 2]) -> f64 {
        let (sin_t, cos_t) = self.angle.sin_cos();
        let dx = point[0] - (self.center[0] + offset[0]);
        let dy = point[1] - (self.center[1] + offset[1]);
        let xp = cos_t * dx + sin_t * dy;
        let yp = -sin_t * dx + cos_t * dy;
        let (b, _) = self.half_width_at(xp);
        1.0 - pnorm(xp / self.half_length, yp / b, self.exponent)
    }

    /// TDF value and parameter derivatives at a (possibly cell-shifted)
    /// evaluation point. The trig pair is passed in so lattice loops can hoist
    /// it out of the per-cell iteration.
    pub fn tdf_partials(
        &self,
        point: [f64; 2],
        offset: [f64; 2],
        sin_t: f64,
        cos_t: f64,
    ) -> ComponentPartials {
        let a = self.half_length;
        let p = self.exponent;
        let dx = point[0] - (self.center[0] + offset[0]);
        let dy = point[1] - (self.center[1] + offset[1]);
        let xp = cos_t * dx + sin_t * dy;
        let yp = -sin_t * dx + cos_t * dy;
        let (b, clamped) = self.half_width_at(xp);

        let u = xp / a;
        let v = yp / b;
        let t = pnorm(u, v, p);
        let phi = 1.0 - t;
        if t == 0.0 {
            // Exactly on the component center line intersection: the p-norm
            // has a conical point; a symmetric difference quotient vanishes,
            // so zero is the consistent derivative choice.
            return ComponentPartials {
                phi,
                ..Default::default()
            };
        }

        // Ratios |u/t|, |v/t| <= 1 keep everything finite for extreme inputs.
        let ru = (u / t).powi(p - 1);
        let rv = (v / t).powi(p - 1);
        // Partials of phi in the local frame, half-width held fixed.
        let phi_xp = -ru / a;
        let phi_yp = -rv / b;
        let phi_a = ru * u / a;
        let phi_b = rv * v / b;

        // Half-width dependence on x', a, t1, t2.
        let (b_xp, b_a, b_t1, b_t2) = if clamped {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let spread = self.width_end - self.width_start;
            (
                spread / (2.0 * a),
                -spread * xp / (2.0 * a * a),
                0.5 - xp / (2.0 * a),
                0.5 + xp / (2.0 * a),
            )
        };

        // Total local-frame derivative includes the width taper.
        let total_xp = phi_xp + phi_b * b_xp;
        let d_point = [
            total_xp * cos_t - phi_yp * sin_t,
            total_xp * sin_t + phi_yp * cos_t,
        ];
        // dx'/d(theta) = y', dy'/d(theta) = -x'.
        let d_angle = total_xp * yp - phi_yp * xp;

        ComponentPartials {
            phi,
            d_point,
            d_half_length: phi_a + phi_b * b_a,
            d_angle,
            d_width_start: phi_b * b_t1,
            d_width_end: phi_b * b_t2,
        }
    }

    fn half_width_at(&self, xp: f64) -> (f64, bool) {
        let b = 0.5 * (self.width_start + self.width_end)
            + (self.width_end - self.width_start) * xp / (2.0 * self.half_length);
        let floor = MIN_WIDTH_FRACTION * self.half_length;
        if b < floor {
            (floor, true)
        } else {
            (b, false)
        }
    }
}

fn pnorm(u: f64, v: f64, p: i32) -> f64 {
    (u.powi(p) + v.powi(p)).powf(1.0 / p as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ComponentParams {
        ComponentParams {
            center: [1.0, 0.5],
            half_length: 0.4,
            angle: 0.3,
            width_start: 0.05,
            width_end: 0.09,
            exponent: 6,
        }
    }

    #[test]
    fn unit_value_at_center() {
        let c = sample();
        assert_eq!(c.tdf(c.center), 1.0);
    }

    #[test]
    fn zero_on_boundary_points() {
        let c = sample();
        let (s, co) = c.angle.sin_cos();
        // Tip: x' = a, y' = 0.
        let tip = [c.center[0] + c.half_length * co, c.center[1] + c.half_length * s];
        assert!(c.tdf(tip).abs() < 1e-12);
        // Mid-width point: x' = 0, y' = b(0) = (t1 + t2)/2.
        let b0 = 0.5 * (c.width_start + c.width_end);
        let mid = [c.center[0] - b0 * s, c.center[1] + b0 * co];
        assert!(c.tdf(mid).abs() < 1e-12);
    }

    #[test]
    fn sign_matches_unrooted_form() {
        // 1 - s and 1 - s^(1/p) always share their sign.
        let c = sample();
        let p = c.exponent;
        for i in 0..40 {
            for j in 0..40 {
                let pt = [0.2 + i as f64 * 0.04, -0.3 + j as f64 * 0.04];
                let (s, co) = c.angle.sin_cos();
                let dx = pt[0] - c.center[0];
                let dy = pt[1] - c.center[1];
                let xp = co * dx + s * dy;
                let yp = -s * dx + co * dy;
                let b = 0.5 * (c.width_start + c.width_end)
                    + (c.width_end - c.width_start) * xp / (2.0 * c.half_length);
                if b <= 0.0 {
                    continue;
                }
                let unrooted = 1.0 - ((xp / c.half_length).powi(p) + (yp / b).powi(p));
                let rooted = c.tdf(pt);
                if unrooted.abs() > 1e-9 {
                    assert_eq!(unrooted > 0.0, rooted > 0.0, "at {pt:?}");
                }
            }
        }
    }

    #[test]
    fn rotation_equivariance() {
        let mut c = sample();
        let pts = [[1.3, 0.55], [0.9, 0.4], [1.05, 0.62], [2.0, -1.0]];
        for pt in pts {
            c.angle = 0.0;
            let base = c.tdf(pt);
            for theta in [0.4, -1.1, 2.9] {
                c.angle = theta;
                let (s, co) = theta.sin_cos();
                let d = [pt[0] - c.center[0], pt[1] - c.center[1]];
                let rotated = [
                    c.center[0] + co * d[0] - s * d[1],
                    c.center[1] + s * d[0] + co * d[1],
                ];
                assert!((c.tdf(rotated) - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let c = sample();
        let pt = [1.25, 0.62];
        let (s, co) = c.angle.sin_cos();
        let got = c.tdf_partials(pt, [0.0, 0.0], s, co);
        let h = 1e-6;

        let fd_pt_x =
            (c.tdf([pt[0] + h, pt[1]]) - c.tdf([pt[0] - h, pt[1]])) / (2.0 * h);
        let fd_pt_y =
            (c.tdf([pt[0], pt[1] + h]) - c.tdf([pt[0], pt[1] - h])) / (2.0 * h);
        assert!((got.d_point[0] - fd_pt_x).abs() < 1e-8);
        assert!((got.d_point[1] - fd_pt_y).abs() < 1e-8);

        let fd = |f: &dyn Fn(&mut ComponentParams, f64)| {
            let mut cp = c;
            f(&mut cp, h);
            let plus = cp.tdf(pt);
            let mut cm = c;
            f(&mut cm, -h);
            let minus = cm.tdf(pt);
            (plus - minus) / (2.0 * h)
        };
        assert!((got.d_half_length - fd(&|c, d| c.half_length += d)).abs() < 1e-8);
        assert!((got.d_angle - fd(&|c, d| c.angle += d)).abs() < 1e-8);
        assert!((got.d_width_start - fd(&|c, d| c.width_start += d)).abs() < 1e-8);
        assert!((got.d_width_end - fd(&|c, d| c.width_end += d)).abs() < 1e-8);
        // Center derivatives are the negated point gradient.
        assert!((-got.d_point[0] - fd(&|c, d| c.center[0] += d)).abs() < 1e-8);
        assert!((-got.d_point[1] - fd(&|c, d| c.center[1] += d)).abs() < 1e-8);
    }

    #[test]
    fn width_floor_keeps_field_finite() {
        let mut c = sample();
        c.width_start = 0.0;
        c.width_end = 0.0;
        let v = c.tdf([5.0, 5.0]);
        assert!(v.is_finite());
        assert!(v < 0.0);
    }
}
