//! Outer optimization loop: evaluate, differentiate, take one MMA step,
//! record, repeat until the design stops moving.
//!
//! The objective gradient is compliance's divided by the current
//! compliance (the gradient of log C), so the MMA curvature heuristics
//! see an O(1) function regardless of mesh or load scale and stay
//! scaled even when compliance moves by orders of magnitude. Constraints
//! enter as `g <= 0`: the solid volume cap `V / V_bar - 1` and, when
//! enabled, the infill-region floor `1 - V_in / V_lower`.

use crate::analysis::{evaluate, EvalError, Evaluation};
use crate::error::RunError;
use crate::mma::Mma;
use crate::problems::{Problem, StopRules};
use crate::sensitivity::gradients;

/// One line of the iteration history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iter: usize,
    pub compliance: f64,
    /// Solid volume as a fraction of the domain volume.
    pub volume_fraction: f64,
    /// Infill-region volume as a fraction of the domain volume.
    pub infill_volume_fraction: f64,
    /// Max over variables of the step just taken, relative to the
    /// variable magnitude (with a small floor against zero crossings).
    pub max_rel_change: f64,
    /// The MMA subproblem was infeasible and the step only reduced the
    /// constraint violation.
    pub restoration: bool,
}

/// Everything a finished run hands to the output layer.
pub struct RunResult {
    pub design: Vec<f64>,
    pub history: Vec<IterationRecord>,
    /// Evaluation at the final design (fields, solutions, measures).
    pub evaluation: Evaluation,
    pub initial_compliance: f64,
}

/// Stop test over the recorded history: converged once the latest step
/// moved no variable by more than the threshold (after the minimum
/// iteration count), or unconditionally at the iteration cap.
pub fn converged(history: &[IterationRecord], rules: StopRules) -> bool {
    let Some(last) = history.last() else {
        return false;
    };
    if last.iter >= rules.max_iters {
        return true;
    }
    last.iter >= rules.min_iters && last.max_rel_change < rules.threshold
}

pub fn run(problem: &Problem) -> Result<RunResult, RunError> {
    run_with(problem, |_, _| {})
}

/// Like [`run`], but calls `observer` with every fresh record and the
/// design it describes (progress reporting, mid-run inspection).
pub fn run_with(
    problem: &Problem,
    mut observer: impl FnMut(&IterationRecord, &[f64]),
) -> Result<RunResult, RunError> {
    let space = &problem.space;
    let mut mma = Mma::new(space.lower.clone(), space.upper.clone(), problem.mma);
    let mut x = problem.initial.clone();
    let v_d = problem.domain_volume();
    let v_bar = problem.v_bar_frac * v_d;
    let v_lower = problem.v_lower_frac.map(|f| f * v_d);

    let mut ev = eval_checked(problem, &x, 0)?;
    let initial_compliance = ev.compliance;
    let mut history = Vec::new();

    loop {
        let iter = history.len() + 1;
        let g = gradients(problem, &ev);
        // Scale by the current compliance (the gradient of log C): keeps
        // the subproblem O(1) even when early steps move C by orders of
        // magnitude.
        let df0: Vec<f64> = g.compliance.iter().map(|d| d / ev.compliance).collect();
        let mut cons = vec![ev.volume / v_bar - 1.0];
        let mut dcons = vec![g.volume.iter().map(|d| d / v_bar).collect::<Vec<f64>>()];
        if let Some(vl) = v_lower {
            cons.push(1.0 - ev.infill_volume / vl);
            dcons.push(g.infill_volume.iter().map(|d| -d / vl).collect());
        }
        if df0.iter().any(|d| !d.is_finite())
            || dcons.iter().flatten().any(|d| !d.is_finite())
        {
            return Err(RunError::NonFinite {
                iteration: iter,
                quantity: "gradient".into(),
                design: x,
            });
        }

        let step = mma.step(&x, &df0, &cons, &dcons);
        let max_rel_change = max_rel_change(space.lower.as_slice(), &space.upper, &x, &step.x);
        x = step.x;
        ev = eval_checked(problem, &x, iter)?;

        let record = IterationRecord {
            iter,
            compliance: ev.compliance,
            volume_fraction: ev.volume / v_d,
            infill_volume_fraction: ev.infill_volume / v_d,
            max_rel_change,
            restoration: step.restoration,
        };
        observer(&record, &x);
        history.push(record);
        if converged(&history, problem.stop) {
            break;
        }
    }

    Ok(RunResult {
        design: x,
        history,
        evaluation: ev,
        initial_compliance,
    })
}

/// Largest per-variable relative change, floored by a fraction of the box
/// width so variables passing through zero do not blow it up.
fn max_rel_change(lb: &[f64], ub: &[f64], old: &[f64], new: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..old.len() {
        let floor = 1e-3 * (ub[j] - lb[j]);
        worst = worst.max((new[j] - old[j]).abs() / (old[j].abs() + floor));
    }
    worst
}

fn eval_checked(problem: &Problem, x: &[f64], iteration: usize) -> Result<Evaluation, RunError> {
    let ev = evaluate(problem, x).map_err(|e| match e {
        EvalError::Geometry(source) => RunError::Geometry {
            iteration,
            source,
            design: x.to_vec(),
        },
        EvalError::Fem(source) => RunError::Fem {
            iteration,
            source,
            design: x.to_vec(),
        },
    })?;
    for (quantity, value) in [
        ("compliance", ev.compliance),
        ("volume", ev.volume),
        ("infill volume", ev.infill_volume),
    ] {
        if !value.is_finite() {
            return Err(RunError::NonFinite {
                iteration,
                quantity: quantity.into(),
                design: x.to_vec(),
            });
        }
    }
    Ok(ev)
}
