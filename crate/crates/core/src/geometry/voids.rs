//! Star-shaped voids bounded by closed B-spline curves.
//!
//! A void is defined by `n` control radii `d_k` placed at fixed angles
//! `2 pi k / n` around a movable center. The boundary is the closed
//! quadratic (by default) B-spline through those control points, and the TDF
//! is `dist(x, center) - r(psi)` where `r` is the curve radius at the polar
//! angle of `x`: negative inside the void, positive in the surrounding
//! solid. An inverted curve swaps the roles (solid inside), which is how the
//! structure's outer boundary is described.
//!
//! `r(psi)` has no closed form, so each curve carries a dense table of
//! sampled polar angles at uniform parameter steps. A lookup brackets the
//! query angle in that table and then solves `angle(mu) = psi` on the exact
//! spline with a fixed, small number of Newton updates, returning the exact
//! radius together with its angular slope and control-radius derivatives.
//! Because every output comes from the same resolved parameter, finite
//! differences of any composition reproduce the analytic derivatives at
//! rounding level, with no seams at the sample angles.

use super::spline;
use crate::error::GeometryError;

/// Table samples per control point.
pub const SAMPLES_PER_CONTROL: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct VoidCurve {
    pub center: [f64; 2],
    /// Control radii `d_k` at angles `2 pi k / n`, counterclockwise.
    pub radii: Vec<f64>,
    /// Spline degree `q`.
    pub degree: usize,
    /// Inverted curves are solid inside (outer boundary role).
    pub inverted: bool,
}

impl VoidCurve {
    pub fn control_angle(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.radii.len() as f64
    }

    /// Absolute control point positions.
    pub fn control_points(&self) -> Vec<[f64; 2]> {
        self.radii
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let (s, c) = self.control_angle(k).sin_cos();
                [self.center[0] + d * c, self.center[1] + d * s]
            })
            .collect()
    }

    /// Curve with every control radius offset by the shell thickness:
    /// outward for a plain void, inward for an inverted boundary, so the
    /// enclosed solid shrinks either way.
    pub fn offset_by(&self, delta: f64, index: usize) -> Result<VoidCurve, GeometryError> {
        let step = if self.inverted { -delta } else { delta };
        let radii: Vec<f64> = self.radii.iter().map(|d| d + step).collect();
        if let Some(&bad) = radii.iter().find(|&&d| d <= 0.0) {
            return Err(GeometryError::ShellExceedsBoundary {
                void: index,
                radius: bad,
            });
        }
        Ok(VoidCurve {
            radii,
            ..self.clone()
        })
    }
}

/// Polar model of one curve: the sampled angle table brackets queries, the
/// stored control geometry answers them exactly.
#[derive(Clone, Debug)]
pub struct RadiusTable {
    /// Unwrapped polar angles at uniform parameter steps, strictly
    /// increasing, plus one virtual closing entry a full turn up.
    angles: Vec<f64>,
    /// Control points relative to the center; the polar model never
    /// depends on the center position.
    rel: Vec<[f64; 2]>,
    /// `(sin, cos)` of each control angle.
    trig: Vec<(f64, f64)>,
    degree: usize,
}

/// One resolved lookup: radius, local slope `dr/dpsi`, and the spline
/// state at the resolved parameter for control-radius derivatives.
pub struct RadiusLookup<'a> {
    table: &'a RadiusTable,
    pub r: f64,
    pub slope: f64,
    /// Curve point relative to the center.
    b: [f64; 2],
    /// Nonzero basis weights starting at control `first`.
    w: [f64; spline::MAX_DEGREE + 1],
    first: usize,
}

impl RadiusTable {
    /// Radius of the curve at polar angle `psi`. The angle table gives a
    /// bracketing initial guess; a fixed number of Newton updates then
    /// solves `angle(mu) = psi` on the spline itself. Two updates already
    /// reach rounding level from that guess, and the fixed count keeps
    /// evaluation deterministic.
    pub fn lookup(&self, psi: f64) -> RadiusLookup<'_> {
        const NEWTON_STEPS: usize = 3;
        let two_pi = 2.0 * std::f64::consts::PI;
        let n = self.rel.len();
        let start = self.angles[0];
        let q = start + (psi - start).rem_euclid(two_pi);
        let seg = self
            .angles
            .partition_point(|&a| a <= q)
            .saturating_sub(1)
            .min(self.angles.len() - 2);
        let n_samples = (self.angles.len() - 1) as f64;
        let (a0, a1) = (self.angles[seg], self.angles[seg + 1]);
        let mut mu = (seg as f64 + (q - a0) / (a1 - a0)) / n_samples;
        // Newton stays inside the bracketing segment give or take half a
        // neighbor; anything further means the step was unsound.
        let lo = (seg as f64 - 0.5) / n_samples;
        let hi = (seg as f64 + 1.5) / n_samples;
        let mut w = [0.0; spline::MAX_DEGREE + 1];
        let mut dw = [0.0; spline::MAX_DEGREE + 1];
        let mut first = 0;
        let mut b = [0.0; 2];
        let mut bp = [0.0; 2];
        for step in 0..=NEWTON_STEPS {
            first = spline::basis_closed_into(n, self.degree, mu, &mut w, &mut dw);
            b = [0.0, 0.0];
            bp = [0.0, 0.0];
            for i in 0..=self.degree {
                let p = self.rel[(first + i) % n];
                b[0] += w[i] * p[0];
                b[1] += w[i] * p[1];
                bp[0] += dw[i] * p[0];
                bp[1] += dw[i] * p[1];
            }
            if step == NEWTON_STEPS {
                break;
            }
            let r2 = b[0] * b[0] + b[1] * b[1];
            let dpsi_dmu = (b[0] * bp[1] - b[1] * bp[0]) / r2;
            let mut diff = (b[1].atan2(b[0]) - q).rem_euclid(two_pi);
            if diff > std::f64::consts::PI {
                diff -= two_pi;
            }
            mu = (mu - diff / dpsi_dmu).clamp(lo, hi);
        }
        let r = (b[0] * b[0] + b[1] * b[1]).sqrt();
        let dr_dmu = (b[0] * bp[0] + b[1] * bp[1]) / r;
        let dpsi_dmu = (b[0] * bp[1] - b[1] * bp[0]) / (r * r);
        RadiusLookup {
            table: self,
            r,
            slope: dr_dmu / dpsi_dmu,
            b,
            w,
            first,
        }
    }

    pub fn n_controls(&self) -> usize {
        self.rel.len()
    }
}

impl RadiusLookup<'_> {
    /// Derivative of the radius with respect to control radius `k` at
    /// fixed query angle. Moving `d_k` also drags the angle
    /// parameterization along the curve; holding the angle fixed cancels
    /// that drift through the implicit parameter, hence the slope term.
    pub fn dr_dd(&self, k: usize) -> f64 {
        let n = self.table.rel.len();
        let (sk, ck) = self.table.trig[k];
        let r = self.r;
        let mut dr = 0.0;
        let mut dpsi = 0.0;
        for i in 0..=self.table.degree {
            if (self.first + i) % n != k {
                continue;
            }
            dr += self.w[i] * (self.b[0] * ck + self.b[1] * sk) / r;
            dpsi += self.w[i] * (self.b[0] * sk - self.b[1] * ck) / (r * r);
        }
        dr - self.slope * dpsi
    }
}

/// Samples the spline and assembles the polar table. Fails if the sampled
/// boundary is not star-shaped around the center or touches it.
pub fn build_radius_table(
    curve: &VoidCurve,
    index: usize,
    samples_per_control: usize,
) -> Result<RadiusTable, GeometryError> {
    let n = curve.radii.len();
    let n_samples = n * samples_per_control;
    // Control points relative to the center: the polar model never depends
    // on the center position.
    let rel: Vec<[f64; 2]> = curve
        .radii
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let (s, c) = curve.control_angle(k).sin_cos();
            [d * c, d * s]
        })
        .collect();

    let trig: Vec<(f64, f64)> = (0..n).map(|k| curve.control_angle(k).sin_cos()).collect();

    let mut angles = Vec::with_capacity(n_samples + 1);
    for s in 0..n_samples {
        let mu = s as f64 / n_samples as f64;
        let b = spline::eval_closed(&rel, curve.degree, mu);
        let r = (b[0] * b[0] + b[1] * b[1]).sqrt();
        if r <= 0.0 {
            return Err(GeometryError::NonPositiveRadius {
                void: index,
                radius: r,
            });
        }
        angles.push(b[1].atan2(b[0]));
    }

    unwrap_angles(&mut angles, index)?;

    // Virtual closing entry: the first angle, one turn later.
    let closing = angles[0] + 2.0 * std::f64::consts::PI;
    angles.push(closing);

    Ok(RadiusTable {
        angles,
        rel,
        trig,
        degree: curve.degree,
    })
}

/// Rewrites raw `atan2` angles as a strictly increasing sequence winding
/// exactly once around the center.
fn unwrap_angles(angles: &mut [f64], index: usize) -> Result<(), GeometryError> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut winding = 0.0;
    for s in 1..angles.len() {
        let step = (angles[s] - angles[s - 1]).rem_euclid(two_pi);
        if step <= 0.0 || step >= std::f64::consts::PI {
            return Err(GeometryError::NotStarShaped {
                void: index,
                sample: s,
            });
        }
        angles[s] = angles[s - 1] + step;
        winding += step;
    }
    let closing = (angles[0] + two_pi) - angles[angles.len() - 1];
    if closing <= 0.0 || closing >= std::f64::consts::PI || (winding + closing - two_pi).abs() > 1e-9
    {
        return Err(GeometryError::NotStarShaped {
            void: index,
            sample: 0,
        });
    }
    Ok(())
}

/// TDF of a void at `point`. For a plain void: `dist - r(psi)`; inverted
/// curves negate it.
pub fn void_tdf(point: [f64; 2], curve: &VoidCurve, table: &RadiusTable) -> f64 {
    let dx = point[0] - curve.center[0];
    let dy = point[1] - curve.center[1];
    let dist = (dx * dx + dy * dy).sqrt();
    let psi = if dist < 1e-12 { 0.0 } else { dy.atan2(dx) };
    let raw = dist - table.lookup(psi).r;
    if curve.inverted {
        -raw
    } else {
        raw
    }
}

/// TDF plus derivatives with respect to the control radii and the center.
pub struct VoidPartials<'a> {
    pub phi: f64,
    lookup: Option<RadiusLookup<'a>>,
    sign: f64,
    d_center: [f64; 2],
}

impl VoidPartials<'_> {
    pub fn d_radius(&self, k: usize) -> f64 {
        match &self.lookup {
            // phi = sign * (dist - r): radius derivative is -sign * dr/dd.
            Some(l) => -self.sign * l.dr_dd(k),
            None => 0.0,
        }
    }

    pub fn d_center(&self) -> [f64; 2] {
        self.d_center
    }
}

pub fn void_tdf_partials<'a>(
    point: [f64; 2],
    curve: &VoidCurve,
    table: &'a RadiusTable,
) -> VoidPartials<'a> {
    let sign = if curve.inverted { -1.0 } else { 1.0 };
    let dx = point[0] - curve.center[0];
    let dy = point[1] - curve.center[1];
    let dist = (dx * dx + dy * dy).sqrt();
    if dist < 1e-12 {
        // At the center the distance term has a conical point; a symmetric
        // difference quotient vanishes there.
        let l = table.lookup(0.0);
        return VoidPartials {
            phi: sign * (dist - l.r),
            lookup: Some(l),
            sign,
            d_center: [0.0, 0.0],
        };
    }
    let psi = dy.atan2(dx);
    let l = table.lookup(psi);
    let phi = sign * (dist - l.r);
    // d dist / d center = -delta/dist; d psi / d center = (dy, -dx)/dist^2.
    let d_center = [
        sign * (-dx / dist - l.slope * dy / (dist * dist)),
        sign * (-dy / dist + l.slope * dx / (dist * dist)),
    ];
    VoidPartials {
        phi,
        lookup: Some(l),
        sign,
        d_center,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, r: f64) -> VoidCurve {
        VoidCurve {
            center: [1.0, 2.0],
            radii: vec![r; n],
            degree: 2,
            inverted: false,
        }
    }

    fn wavy() -> VoidCurve {
        VoidCurve {
            center: [0.5, -0.25],
            radii: vec![
                0.9, 1.1, 0.8, 1.3, 1.0, 0.7, 1.2, 0.95, 1.05, 0.85, 1.15, 1.0,
            ],
            degree: 2,
            inverted: false,
        }
    }

    #[test]
    fn regular_polygon_radius_nearly_constant() {
        let c = circle(12, 2.0);
        let t = build_radius_table(&c, 0, 64).unwrap();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..500 {
            let r = t.lookup(i as f64 * 0.0126).r;
            min = min.min(r);
            max = max.max(r);
        }
        let mean = 0.5 * (min + max);
        assert!(max < 2.0, "inscribed curve must stay inside the polygon");
        assert!((max - min) / mean < 0.005);
    }

    #[test]
    fn lookup_is_periodic() {
        // Adding 2 pi in f64 already perturbs the argument by an ulp, so the
        // comparison is at rounding level, not bitwise.
        let t = build_radius_table(&wavy(), 0, 64).unwrap();
        for i in 0..50 {
            let psi = -3.0 + i as f64 * 0.13;
            let a = t.lookup(psi).r;
            let b = t.lookup(psi + 2.0 * std::f64::consts::PI).r;
            let c = t.lookup(psi - 2.0 * std::f64::consts::PI).r;
            assert!((a - b).abs() < 1e-12);
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_partials_match_table_rebuild() {
        let v = wavy();
        let t = build_radius_table(&v, 0, 64).unwrap();
        let h = 1e-6;
        for k in [0, 3, 7, 11] {
            let mut plus = v.clone();
            plus.radii[k] += h;
            let mut minus = v.clone();
            minus.radii[k] -= h;
            let tp = build_radius_table(&plus, 0, 64).unwrap();
            let tm = build_radius_table(&minus, 0, 64).unwrap();
            for i in 0..200 {
                let psi = 0.00412 + i as f64 * 0.0311;
                let fd = (tp.lookup(psi).r - tm.lookup(psi).r) / (2.0 * h);
                let got = t.lookup(psi).dr_dd(k);
                let denom = fd.abs().max(1e-3);
                assert!(
                    (got - fd).abs() / denom < 1e-5,
                    "k={k} psi={psi}: {got} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn uniform_inflation_scales_radius() {
        let c = circle(12, 2.0);
        let t = build_radius_table(&c, 0, 64).unwrap();
        let h = 1e-6;
        let mut plus = c.clone();
        let mut minus = c.clone();
        for k in 0..12 {
            plus.radii[k] += h;
            minus.radii[k] -= h;
        }
        let tp = build_radius_table(&plus, 0, 64).unwrap();
        let tm = build_radius_table(&minus, 0, 64).unwrap();
        for i in 0..100 {
            let psi = 0.003 + i as f64 * 0.0628;
            let fd = (tp.lookup(psi).r - tm.lookup(psi).r) / (2.0 * h);
            let l = t.lookup(psi);
            let sum: f64 = (0..12).map(|k| l.dr_dd(k)).sum();
            assert!((sum - fd).abs() / fd.abs() < 1e-6, "psi={psi}");
        }
    }

    #[test]
    fn tdf_signs() {
        let v = wavy();
        let t = build_radius_table(&v, 0, 64).unwrap();
        // Center: -r(0).
        let at_center = void_tdf(v.center, &v, &t);
        assert!((at_center + t.lookup(0.0).r).abs() < 1e-14);
        // Far outside: positive.
        assert!(void_tdf([10.0, 10.0], &v, &t) > 0.0);
        // Inverted flips.
        let mut inv = v.clone();
        inv.inverted = true;
        assert!((void_tdf(inv.center, &inv, &t) - t.lookup(0.0).r).abs() < 1e-14);
        assert!(void_tdf([10.0, 10.0], &inv, &t) < 0.0);
    }

    #[test]
    fn near_circle_tdf_tracks_signed_distance() {
        let v = circle(12, 2.0);
        let t = build_radius_table(&v, 0, 64).unwrap();
        for i in 0..100 {
            let a = i as f64 * 0.0628;
            let rho = 0.5 + (i % 7) as f64 * 0.5;
            let p = [v.center[0] + rho * a.cos(), v.center[1] + rho * a.sin()];
            let phi = void_tdf(p, &v, &t);
            assert!((phi - (rho - 2.0)).abs() < 0.08);
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let v = wavy();
        let t = build_radius_table(&v, 0, 64).unwrap();
        let pts = [[1.4, 0.3], [0.1, -1.2], [-0.4, 0.2], [2.0, 1.0]];
        let h = 1e-7;
        for p in pts {
            let got = void_tdf_partials(p, &v, &t);
            for k in 0..12 {
                let mut plus = v.clone();
                plus.radii[k] += h;
                let mut minus = v.clone();
                minus.radii[k] -= h;
                let tp = build_radius_table(&plus, 0, 64).unwrap();
                let tm = build_radius_table(&minus, 0, 64).unwrap();
                let fd = (void_tdf(p, &plus, &tp) - void_tdf(p, &minus, &tm)) / (2.0 * h);
                assert!((got.d_radius(k) - fd).abs() < 1e-6, "k={k} at {p:?}");
            }
            for axis in 0..2 {
                let mut plus = v.clone();
                plus.center[axis] += h;
                let mut minus = v.clone();
                minus.center[axis] -= h;
                // The polar table does not depend on the center.
                let fd = (void_tdf(p, &plus, &t) - void_tdf(p, &minus, &t)) / (2.0 * h);
                assert!((got.d_center()[axis] - fd).abs() < 1e-6, "axis={axis} at {p:?}");
            }
        }
    }

    #[test]
    fn offset_grows_void_and_shrinks_inverted() {
        let v = wavy();
        let grown = v.offset_by(0.1, 0).unwrap();
        assert!(grown.radii.iter().zip(&v.radii).all(|(a, b)| a > b));
        let mut inv = v.clone();
        inv.inverted = true;
        let shrunk = inv.offset_by(0.1, 0).unwrap();
        assert!(shrunk.radii.iter().zip(&inv.radii).all(|(a, b)| a < b));
        let err = inv.offset_by(2.0, 3).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("void 3"), "{msg}");
    }

    #[test]
    fn unwrap_rejects_backwards_angles() {
        let mut bad = vec![0.0, 0.3, 0.2, 1.0];
        assert!(unwrap_angles(&mut bad, 5).is_err());
    }

    #[test]
    fn partials_hold_at_sample_angles() {
        // Queries landing exactly on table angles used to see one-sided
        // interpolation slopes; the parameter inversion has no seams there.
        let v = wavy();
        let t = build_radius_table(&v, 0, 64).unwrap();
        let h = 1e-6;
        for s in (0..t.angles.len()).step_by(97) {
            let psi = t.angles[s];
            for k in [2, 9] {
                let mut plus = v.clone();
                plus.radii[k] += h;
                let mut minus = v.clone();
                minus.radii[k] -= h;
                let tp = build_radius_table(&plus, 0, 64).unwrap();
                let tm = build_radius_table(&minus, 0, 64).unwrap();
                let fd = (tp.lookup(psi).r - tm.lookup(psi).r) / (2.0 * h);
                let got = t.lookup(psi).dr_dd(k);
                assert!((got - fd).abs() < 1e-7, "s={s} k={k}: {got} vs {fd}");
            }
        }
    }
}
