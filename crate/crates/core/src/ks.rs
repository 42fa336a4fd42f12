//! Kreisselmeier-Steinhauser smooth aggregation.
//!
//! `ks(v, l) = ln(sum_i exp(l * v_i)) / l` approaches `max(v)` for large
//! positive `l` and `min(v)` for large negative `l`, with the sandwich bound
//! `max(v) <= ks(v, l) <= max(v) + ln(n)/l` (inequalities flipped for
//! `l < 0`). Everything is evaluated in shifted log space so arbitrarily
//! large `|l * v_i|` cannot overflow.

/// Default aggregation exponent for smooth maxima.
pub const L_PLUS: f64 = 50.0;
/// Default aggregation exponent for smooth minima.
pub const L_MINUS: f64 = -50.0;

/// Smooth aggregate of `values` with exponent `l` (> 0 for max-like, < 0 for
/// min-like).
///
/// Panics on an empty slice or `l == 0`; both are contract violations.
pub fn aggregate(values: &[f64], l: f64) -> f64 {
    assert!(!values.is_empty(), "K-S aggregate of an empty slice");
    assert!(l != 0.0, "K-S aggregate with zero exponent");
    let m = shift(values, l);
    let sum: f64 = values.iter().map(|&v| (l * v - m).exp()).sum();
    (m + sum.ln()) / l
}

/// Derivative weights `d ks / d v_i = exp(l * (v_i - ks))`: a softmax that
/// sums to one. Weights smaller than `1e-300` are flushed to exact zero so
/// downstream products cannot produce subnormal noise.
pub fn weights(values: &[f64], l: f64) -> Vec<f64> {
    assert!(!values.is_empty(), "K-S weights of an empty slice");
    let m = shift(values, l);
    let exps: Vec<f64> = values.iter().map(|&v| (l * v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter()
        .map(|&e| {
            let w = e / sum;
            if w < 1e-300 {
                0.0
            } else {
                w
            }
        })
        .collect()
}

/// Single derivative weight for a value `v_i` given the already-aggregated
/// result, `exp(l * (v_i - ks))`, with the same flush-to-zero rule.
#[inline]
pub fn weight_of(value: f64, ks_value: f64, l: f64) -> f64 {
    let w = (l * (value - ks_value)).exp();
    if w < 1e-300 {
        0.0
    } else {
        w
    }
}

/// Streaming log-sum-exp accumulator; used by hot loops that cannot afford
/// to materialize a slice per node.
#[derive(Clone, Copy, Debug)]
pub struct Accumulator {
    l: f64,
    shift: f64,
    sum: f64,
    count: usize,
}

impl Accumulator {
    pub fn new(l: f64) -> Self {
        assert!(l != 0.0, "K-S aggregate with zero exponent");
        Accumulator {
            l,
            shift: f64::NEG_INFINITY,
            sum: 0.0,
            count: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, value: f64) {
        let s = self.l * value;
        if s > self.shift {
            self.sum = self.sum * (self.shift - s).exp() + 1.0;
            self.shift = s;
        } else {
            self.sum += (s - self.shift).exp();
        }
        self.count += 1;
    }

    pub fn finish(self) -> f64 {
        assert!(self.count > 0, "K-S aggregate of an empty sequence");
        (self.shift + self.sum.ln()) / self.l
    }
}

fn shift(values: &[f64], l: f64) -> f64 {
    values
        .iter()
        .map(|&v| l * v)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_values_offset_by_log_count() {
        let v = [0.7; 5];
        let got = aggregate(&v, 50.0);
        assert!((got - (0.7 + (5f64).ln() / 50.0)).abs() < 1e-14);
    }

    #[test]
    fn near_max_for_positive_l() {
        let got = aggregate(&[0.0, 1.0], 50.0);
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn near_min_for_negative_l() {
        let got = aggregate(&[0.3, -0.2, 0.7], -50.0);
        assert!(got <= -0.2 + 1e-15);
        assert!((got - (-0.2)).abs() <= (3f64).ln() / 50.0);
    }

    #[test]
    fn huge_magnitudes_do_not_overflow() {
        let got = aggregate(&[-4e13, 2.0, -7.0], 50.0);
        assert!((got - 2.0).abs() < 1e-12);
        let got = aggregate(&[1e13, -3.0], -50.0);
        assert!((got - (-3.0)).abs() < 1e-12);
    }

    #[test]
    fn accumulator_matches_slice_form() {
        let v = [0.3, -0.2, 0.7, 0.1, -5.0];
        for &l in &[50.0, -50.0, 7.0] {
            let mut acc = Accumulator::new(l);
            for &x in &v {
                acc.push(x);
            }
            assert!((acc.finish() - aggregate(&v, l)).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_are_softmax() {
        let v = [0.4, 0.1, 0.39];
        let w = weights(&v, 50.0);
        let sum: f64 = w.iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
        assert!(w[0] > w[2] && w[2] > w[1]);
        let ks = aggregate(&v, 50.0);
        for (x, wi) in v.iter().zip(&w) {
            assert!((wi - weight_of(*x, ks, 50.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn tiny_weights_flush_to_zero() {
        let w = weights(&[0.0, -1e6], 50.0);
        assert_eq!(w[1], 0.0);
        assert!((w[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    #[should_panic(expected = "empty")]
    fn empty_input_panics() {
        aggregate(&[], 50.0);
    }
}
