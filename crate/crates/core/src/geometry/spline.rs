//! Closed uniform B-splines evaluated by de Boor's triangular recursion.
//!
//! Control points wrap around: a curve with `n` points has `n` spans, and
//! the normalized parameter `mu` in `[0, 1)` walks the whole loop once.

/// Highest spline degree the fixed-size basis buffers accommodate.
pub const MAX_DEGREE: usize = 7;

/// Nonzero basis values and their `mu` derivatives, written into caller
/// buffers so hot loops avoid allocation. Fills `degree + 1` entries of
/// each slice and returns the index of the first contributing control
/// point; entries apply to consecutive (wrapping) controls.
pub fn basis_closed_into(n: usize, degree: usize, mu: f64, w: &mut [f64], dw: &mut [f64]) -> usize {
    assert!(n > degree, "need more control points than the degree");
    assert!(degree <= MAX_DEGREE);
    let t = mu.rem_euclid(1.0) * n as f64 + degree as f64;
    let span = (t.floor() as usize).min(degree + n - 1);
    // Cox-de Boor on the integer knot vector t_i = i.
    w[0] = 1.0;
    let mut lower = [0.0; MAX_DEGREE + 1];
    for d in 1..=degree {
        if d == degree {
            lower[..d].copy_from_slice(&w[..d]);
        }
        let mut saved = 0.0;
        for r in 0..d {
            let left = t - (span + 1 + r) as f64 + d as f64; // t - t[span+1-d+r]
            let right = (span + 1 + r) as f64 - t; // t[span+1+r] - t
            let temp = w[r] / (right + left);
            w[r] = saved + right * temp;
            saved = left * temp;
        }
        w[d] = saved;
    }
    // On uniform knots N'_{j,d}(t) = N_{j,d-1}(t) - N_{j+1,d-1}(t); the
    // degree-(d-1) window starts one control later, hence the shift. The
    // parameter map t = mu n adds the factor n.
    for i in 0..=degree {
        let a = if i >= 1 { lower[i - 1] } else { 0.0 };
        let b = if i < degree { lower[i] } else { 0.0 };
        dw[i] = n as f64 * (a - b);
    }
    (span - degree) % n
}

/// Allocating convenience wrapper around [`basis_closed_into`].
pub fn basis_closed(n: usize, degree: usize, mu: f64) -> (usize, Vec<f64>) {
    let mut w = vec![0.0; degree + 1];
    let mut dw = vec![0.0; degree + 1];
    let first = basis_closed_into(n, degree, mu, &mut w, &mut dw);
    (first, w)
}

/// Point on the closed spline through `points` at parameter `mu` in `[0, 1)`.
pub fn eval_closed(points: &[[f64; 2]], degree: usize, mu: f64) -> [f64; 2] {
    eval_closed_with_deriv(points, degree, mu).0
}

/// Point and parameter tangent of the closed spline at `mu`.
pub fn eval_closed_with_deriv(points: &[[f64; 2]], degree: usize, mu: f64) -> ([f64; 2], [f64; 2]) {
    let n = points.len();
    let mut w = [0.0; MAX_DEGREE + 1];
    let mut dw = [0.0; MAX_DEGREE + 1];
    let first = basis_closed_into(n, degree, mu, &mut w, &mut dw);
    let mut out = [0.0, 0.0];
    let mut tang = [0.0, 0.0];
    for i in 0..=degree {
        let p = points[(first + i) % n];
        out[0] += w[i] * p[0];
        out[1] += w[i] * p[1];
        tang[0] += dw[i] * p[0];
        tang[1] += dw[i] * p[1];
    }
    (out, tang)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polygon(n: usize, r: f64) -> Vec<[f64; 2]> {
        (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [r * a.cos(), r * a.sin()]
            })
            .collect()
    }

    #[test]
    fn quadratic_matches_closed_form() {
        // Uniform quadratic segment: ((1-u)^2 q0 + (-2u^2+2u+1) q1 + u^2 q2)/2.
        let pts = polygon(7, 2.0);
        let n = pts.len();
        for s in 0..n {
            for u in [0.0, 0.2, 0.5, 0.9] {
                let mu = (s as f64 + u) / n as f64;
                let got = eval_closed(&pts, 2, mu);
                let q0 = pts[s];
                let q1 = pts[(s + 1) % n];
                let q2 = pts[(s + 2) % n];
                let w = [
                    0.5 * (1.0 - u) * (1.0 - u),
                    0.5 * (-2.0 * u * u + 2.0 * u + 1.0),
                    0.5 * u * u,
                ];
                let expect = [
                    w[0] * q0[0] + w[1] * q1[0] + w[2] * q2[0],
                    w[0] * q0[1] + w[1] * q1[1] + w[2] * q2[1],
                ];
                assert!((got[0] - expect[0]).abs() < 1e-13, "span {s} u {u}");
                assert!((got[1] - expect[1]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        for degree in [1, 2, 3] {
            for i in 0..50 {
                let mu = i as f64 / 50.0;
                let (_, w) = basis_closed(12, degree, mu);
                let sum: f64 = w.iter().sum();
                assert!((sum - 1.0).abs() < 1e-13);
                assert!(w.iter().all(|&x| x >= -1e-15));
            }
        }
    }

    #[test]
    fn periodic_in_mu() {
        let pts = polygon(9, 1.5);
        for i in 0..20 {
            let mu = i as f64 / 20.0;
            let a = eval_closed(&pts, 2, mu);
            let b = eval_closed(&pts, 2, mu + 1.0);
            assert!((a[0] - b[0]).abs() < 1e-12);
            assert!((a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_is_continuous_across_spans() {
        let pts = polygon(12, 1.0);
        for s in 1..=12 {
            let before = eval_closed(&pts, 2, (s as f64 - 1e-9) / 12.0);
            let after = eval_closed(&pts, 2, (s as f64 + 1e-9) / 12.0);
            assert!((before[0] - after[0]).abs() < 1e-7);
            assert!((before[1] - after[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn basis_derivatives_match_finite_differences() {
        let n = 9;
        let h = 1e-7;
        for degree in 1..=3usize {
            for k in 0..40 {
                let mu = 0.013 + k as f64 * 0.024;
                let mut w = [0.0; MAX_DEGREE + 1];
                let mut dw = [0.0; MAX_DEGREE + 1];
                let first = basis_closed_into(n, degree, mu, &mut w, &mut dw);
                let (fp, wp) = basis_closed(n, degree, mu + h);
                let (fm, wm) = basis_closed(n, degree, mu - h);
                // Keep clear of span switches where the window shifts.
                if fp != first || fm != first {
                    continue;
                }
                let mut sum = 0.0;
                for i in 0..=degree {
                    let fd = (wp[i] - wm[i]) / (2.0 * h);
                    assert!((dw[i] - fd).abs() < 1e-5, "degree {degree}: {} vs {fd}", dw[i]);
                    sum += dw[i];
                }
                // Differentiated partition of unity.
                assert!(sum.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tangent_matches_curve_finite_differences() {
        let pts = [
            [2.0, 0.1],
            [0.9, 1.8],
            [-1.2, 1.1],
            [-2.2, -0.3],
            [-0.4, -1.7],
            [1.3, -1.2],
        ];
        let h = 1e-7;
        for k in 0..60 {
            let mu = k as f64 / 60.0 + 0.003;
            let (_, tang) = eval_closed_with_deriv(&pts, 2, mu);
            let p = eval_closed(&pts, 2, mu + h);
            let m = eval_closed(&pts, 2, mu - h);
            for axis in 0..2 {
                let fd = (p[axis] - m[axis]) / (2.0 * h);
                assert!((tang[axis] - fd).abs() < 1e-5, "{} vs {fd}", tang[axis]);
            }
        }
    }
}
