//! Method of moving asymptotes: separable convex subproblems around the
//! current iterate, solved in the dual of the two-constraint case by
//! coordinate bisection on the multipliers.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmaOptions {
    /// Initial asymptote offset as a fraction of the box width.
    pub asym_init: f64,
    /// Growth factor while the variable keeps moving the same way.
    pub asym_expand: f64,
    /// Shrink factor when the variable oscillates.
    pub asym_contract: f64,
    /// Per-iteration move cap as a fraction of the box width.
    pub move_limit: f64,
    /// Absolute per-iteration move cap in design units, applied on top of
    /// `move_limit`. Geometric variables displace boundaries by roughly
    /// their own change, and the sensitivity field only sees one
    /// transition band's worth of surroundings, so steps beyond the band
    /// half-width outrun the gradient's validity. `None` disables it.
    pub move_cap: Option<f64>,
    /// Dual bisection tolerance.
    pub bisect_tol: f64,
}

impl Default for MmaOptions {
    fn default() -> Self {
        MmaOptions {
            asym_init: 0.5,
            asym_expand: 1.2,
            asym_contract: 0.7,
            move_limit: 0.1,
            move_cap: None,
            bisect_tol: 1e-10,
        }
    }
}

pub struct MmaStep {
    pub x: Vec<f64>,
    /// True when no multiplier could make the approximate constraints
    /// feasible and the step only drives the violation down.
    pub restoration: bool,
}

pub struct Mma {
    pub options: MmaOptions,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub low: Vec<f64>,
    pub upp: Vec<f64>,
    xold1: Vec<f64>,
    xold2: Vec<f64>,
    iter: usize,
}

const LAMBDA_CAP: f64 = 1e12;
/// Minimum curvature injected into every separable term; large enough to
/// damp the limit cycle a pure first-order approximation sustains near a
/// stationary point.
const RAA0: f64 = 1e-3;
/// Closest approach of an asymptote to the iterate, as a box fraction.
const ASYM_FLOOR: f64 = 1e-3;

impl Mma {
    pub fn new(lb: Vec<f64>, ub: Vec<f64>, options: MmaOptions) -> Self {
        assert_eq!(lb.len(), ub.len());
        let n = lb.len();
        Mma {
            options,
            lb,
            ub,
            low: vec![0.0; n],
            upp: vec![0.0; n],
            xold1: vec![0.0; n],
            xold2: vec![0.0; n],
            iter: 0,
        }
    }

    /// One outer iteration: builds the approximation at `x` from the
    /// objective gradient and the constraint values/gradients (as
    /// `g_i <= 0`), and returns the subproblem minimizer.
    pub fn step(&mut self, x: &[f64], df0: &[f64], g: &[f64], dg: &[Vec<f64>]) -> MmaStep {
        let n = x.len();
        let m = g.len();
        let o = self.options;
        self.iter += 1;

        for j in 0..n {
            let range = (self.ub[j] - self.lb[j]).max(1e-10);
            if self.iter <= 2 {
                self.low[j] = x[j] - o.asym_init * range;
                self.upp[j] = x[j] + o.asym_init * range;
            } else {
                let trend = (x[j] - self.xold1[j]) * (self.xold1[j] - self.xold2[j]);
                let gamma = if trend > 0.0 {
                    o.asym_expand
                } else if trend < 0.0 {
                    o.asym_contract
                } else {
                    1.0
                };
                self.low[j] = x[j] - gamma * (self.xold1[j] - self.low[j]);
                self.upp[j] = x[j] + gamma * (self.upp[j] - self.xold1[j]);
                self.low[j] = self.low[j].clamp(x[j] - 10.0 * range, x[j] - ASYM_FLOOR * range);
                self.upp[j] = self.upp[j].clamp(x[j] + ASYM_FLOOR * range, x[j] + 10.0 * range);
            }
        }
        self.xold2 = self.xold1.clone();
        self.xold1 = x.to_vec();

        // Inner box: move limit and a margin inside the asymptotes.
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        for j in 0..n {
            let range = self.ub[j] - self.lb[j];
            let mut step = o.move_limit * range;
            if let Some(cap) = o.move_cap {
                step = step.min(cap);
            }
            alpha[j] = self.lb[j]
                .max(self.low[j] + 0.1 * (x[j] - self.low[j]))
                .max(x[j] - step);
            beta[j] = self.ub[j]
                .min(self.upp[j] - 0.1 * (self.upp[j] - x[j]))
                .min(x[j] + step);
            if alpha[j] > beta[j] {
                alpha[j] = x[j];
                beta[j] = x[j];
            }
        }

        // Separable coefficients; the tiny mixing terms keep every
        // variable strictly convex in the subproblem.
        let coeff = |grad: f64, j: usize| -> (f64, f64) {
            let range = (self.ub[j] - self.lb[j]).max(1e-5);
            let gp = grad.max(0.0);
            let gm = (-grad).max(0.0);
            let du = self.upp[j] - x[j];
            let dl = x[j] - self.low[j];
            (
                (1.001 * gp + 0.001 * gm + RAA0 / range) * du * du,
                (1.001 * gm + 0.001 * gp + RAA0 / range) * dl * dl,
            )
        };
        let mut p0 = vec![0.0; n];
        let mut q0 = vec![0.0; n];
        for j in 0..n {
            let (p, q) = coeff(df0[j], j);
            p0[j] = p;
            q0[j] = q;
        }
        let mut pc = vec![vec![0.0; n]; m];
        let mut qc = vec![vec![0.0; n]; m];
        // Constant making each approximation exact at the current point.
        let mut r = vec![0.0; m];
        for i in 0..m {
            for j in 0..n {
                let (p, q) = coeff(dg[i][j], j);
                pc[i][j] = p;
                qc[i][j] = q;
            }
            let at_x: f64 = (0..n)
                .map(|j| pc[i][j] / (self.upp[j] - x[j]) + qc[i][j] / (x[j] - self.low[j]))
                .sum();
            r[i] = g[i] - at_x;
        }

        let primal = |lambda: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|j| {
                    let mut p = p0[j];
                    let mut q = q0[j];
                    for i in 0..m {
                        p += lambda[i] * pc[i][j];
                        q += lambda[i] * qc[i][j];
                    }
                    let (sp, sq) = (p.sqrt(), q.sqrt());
                    let xj = (sp * self.low[j] + sq * self.upp[j]) / (sp + sq);
                    xj.clamp(alpha[j], beta[j])
                })
                .collect()
        };
        let residual = |i: usize, xs: &[f64]| -> f64 {
            r[i] + (0..n)
                .map(|j| pc[i][j] / (self.upp[j] - xs[j]) + qc[i][j] / (xs[j] - self.low[j]))
                .sum::<f64>()
        };

        let mut lambda = vec![0.0; m];
        let mut restoration = false;
        for _ in 0..60 {
            let mut moved: f64 = 0.0;
            for i in 0..m {
                let mut probe = lambda.clone();
                probe[i] = 0.0;
                if residual(i, &primal(&probe)) <= 0.0 {
                    moved = moved.max((lambda[i] - 0.0).abs());
                    lambda[i] = 0.0;
                    continue;
                }
                let mut lo = 0.0;
                let mut hi = 1.0f64.max(2.0 * lambda[i]);
                loop {
                    probe[i] = hi;
                    if residual(i, &primal(&probe)) <= 0.0 || hi >= LAMBDA_CAP {
                        break;
                    }
                    hi *= 2.0;
                }
                if hi >= LAMBDA_CAP {
                    restoration = true;
                } else {
                    while hi - lo > o.bisect_tol * hi.max(1.0) {
                        let mid = 0.5 * (lo + hi);
                        probe[i] = mid;
                        if residual(i, &primal(&probe)) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                }
                moved = moved.max((lambda[i] - hi).abs() / hi.max(1.0));
                lambda[i] = hi.min(LAMBDA_CAP);
            }
            if moved < o.bisect_tol {
                break;
            }
        }

        MmaStep {
            x: primal(&lambda),
            restoration,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inactive(n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        (vec![-1.0], vec![vec![0.0; n]])
    }

    #[test]
    fn quadratic_converges_to_minimum() {
        let mut mma = Mma::new(vec![0.0], vec![1.0], MmaOptions::default());
        let mut x = vec![0.9];
        for _ in 0..30 {
            let df = vec![2.0 * (x[0] - 0.3)];
            let (g, dg) = inactive(1);
            x = mma.step(&x, &df, &g, &dg).x;
        }
        assert!((x[0] - 0.3).abs() < 1e-4, "x = {}", x[0]);
    }

    #[test]
    fn linear_program_lands_on_constraint() {
        // Minimize -x1 - x2 subject to x1 + x2 <= 1 on [0,1]^2.
        let mut mma = Mma::new(vec![0.0; 2], vec![1.0; 2], MmaOptions::default());
        let mut x = vec![0.2, 0.1];
        for _ in 0..50 {
            let df = vec![-1.0, -1.0];
            let g = vec![x[0] + x[1] - 1.0];
            let dg = vec![vec![1.0, 1.0]];
            let step = mma.step(&x, &df, &g, &dg);
            assert!(!step.restoration);
            x = step.x;
        }
        assert!((x[0] + x[1] - 1.0).abs() < 1e-6, "sum = {}", x[0] + x[1]);
    }

    #[test]
    fn iterates_respect_bounds() {
        let lb = vec![-1.0, 0.0, 2.0];
        let ub = vec![1.0, 0.5, 2.0]; // last variable has a frozen box
        let mut mma = Mma::new(lb.clone(), ub.clone(), MmaOptions::default());
        let mut x = vec![0.0, 0.25, 2.0];
        for k in 0..20 {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            let df = vec![5.0 * s, -3.0 * s, s];
            let (g, dg) = inactive(3);
            x = mma.step(&x, &df, &g, &dg).x;
            for j in 0..3 {
                assert!(x[j] >= lb[j] - 1e-15 && x[j] <= ub[j] + 1e-15);
                assert!(x[j].is_finite());
            }
        }
        assert_eq!(x[2], 2.0);
    }

    #[test]
    fn oscillation_contracts_asymptotes() {
        let mut mma = Mma::new(vec![0.0], vec![1.0], MmaOptions::default());
        // Alternating gradient drives an oscillating iterate.
        let mut x = vec![0.5];
        let mut widths = Vec::new();
        for k in 0..8 {
            let df = vec![if k % 2 == 0 { 1.0 } else { -1.0 }];
            let (g, dg) = inactive(1);
            x = mma.step(&x, &df, &g, &dg).x;
            widths.push(mma.upp[0] - mma.low[0]);
        }
        // After the warmup the interval keeps shrinking by the contract factor.
        assert!(widths[7] < widths[3]);
        let ratio = widths[7] / widths[6];
        assert!(ratio < 0.75, "ratio = {ratio}");
    }

    #[test]
    fn unreachable_constraint_flags_restoration() {
        let mut mma = Mma::new(vec![0.0], vec![1.0], MmaOptions::default());
        let x = vec![0.5];
        let df = vec![0.0];
        let g = vec![5.0]; // cannot be brought to zero within the box
        let dg = vec![vec![1.0]];
        let step = mma.step(&x, &df, &g, &dg);
        assert!(step.restoration);
        assert!(step.x[0] < 0.5); // still pushes against the violation
    }

    #[test]
    fn single_step_obeys_move_limit() {
        let mut mma = Mma::new(vec![0.0], vec![10.0], MmaOptions::default());
        let x = vec![5.0];
        let df = vec![100.0];
        let (g, dg) = inactive(1);
        let next = mma.step(&x, &df, &g, &dg).x;
        assert!((next[0] - x[0]).abs() <= 0.1 * 10.0 + 1e-12);
    }
}
