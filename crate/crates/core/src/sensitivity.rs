//! Analytic gradients of compliance and the two volume measures.
//!
//! All three objective quantities depend on the design only through the
//! nodal values of the composed field and of the expanded void envelope,
//! and the regularized Heaviside has compact support, so the chain rule
//! reduces every gradient to a sum over nodes inside a transition band.
//! Each band node contributes through the smooth-aggregation weights of
//! the composition tree, then through the geometric partials of the
//! individual components and voids.
//!
//! `gradients` is the production path: one fused pass over the band that
//! accumulates all variables at once. `mmc_node_partial` and
//! `mmv_node_partial` walk the same chain for a single variable at a
//! single node and exist as the reference route for tests.

use crate::analysis::{evaluate, EvalError, Evaluation};
use crate::design::VarKind;
use crate::exec;
use crate::fem::{element_energies, unit_stiffness};
use crate::field::{heaviside, heaviside_deriv};
use crate::geometry::void_tdf_partials;
use crate::problems::Problem;

/// Aggregation weights this small cannot move any result; treating them
/// as zero lets whole copies and voids be skipped.
const WEIGHT_FLUSH: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityError {
    /// Variable index outside the design vector.
    UnknownVariable { var: usize },
    /// Variable exists but belongs to the other family of node partials.
    WrongVariableClass { var: usize },
}

impl std::fmt::Display for SensitivityError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SensitivityError::UnknownVariable { var } => {
                write!(f, "design variable index {var} out of range")
            }
            SensitivityError::WrongVariableClass { var } => {
                write!(f, "design variable {var} belongs to the other partial family")
            }
        }
    }
}

impl std::error::Error for SensitivityError {}

/// Gradient of each objective quantity, ordered like the design vector.
pub struct Gradients {
    pub compliance: Vec<f64>,
    pub volume: Vec<f64>,
    pub infill_volume: Vec<f64>,
}

/// Design-vector index of every variable of each geometric role. Built
/// once per gradient pass by scanning the layout, so the accumulation
/// loops never search.
struct VarMap {
    half: Vec<usize>,
    angle: Vec<usize>,
    width_start: Vec<usize>,
    width_end: Vec<usize>,
    center: Vec<Option<[usize; 2]>>,
    /// `[comp][2*harmonic + trig]`; with a shared perturbation block all
    /// components alias the same indices.
    alpha: Vec<Vec<usize>>,
    beta: Vec<Vec<usize>>,
    void_center: Vec<[usize; 2]>,
    void_radius: Vec<Vec<usize>>,
}

impl VarMap {
    fn build(layout: &crate::design::Layout) -> Self {
        let nc = layout.n_components;
        let nv = layout.void_controls.len();
        let mut map = VarMap {
            half: vec![usize::MAX; nc],
            angle: vec![usize::MAX; nc],
            width_start: vec![usize::MAX; nc],
            width_end: vec![usize::MAX; nc],
            center: vec![None; nc],
            alpha: vec![vec![usize::MAX; 2 * layout.n1]; nc],
            beta: vec![vec![usize::MAX; 2 * layout.n2]; nc],
            void_center: vec![[usize::MAX; 2]; nv],
            void_radius: layout
                .void_controls
                .iter()
                .map(|&n| vec![usize::MAX; n])
                .collect(),
        };
        for (i, kind) in layout.kinds().iter().enumerate() {
            match *kind {
                VarKind::HalfLength { comp } => map.half[comp] = i,
                VarKind::Angle { comp } => map.angle[comp] = i,
                VarKind::WidthStart { comp } => map.width_start[comp] = i,
                VarKind::WidthEnd { comp } => map.width_end[comp] = i,
                VarKind::CompCenter { comp, axis } => {
                    let entry = map.center[comp].get_or_insert([usize::MAX; 2]);
                    entry[axis] = i;
                }
                VarKind::Cpf {
                    comp,
                    axis,
                    harmonic,
                    trig,
                } => {
                    let slot = 2 * harmonic + trig;
                    let comps: Vec<usize> = match comp {
                        Some(k) => vec![k],
                        None => (0..nc).collect(),
                    };
                    for k in comps {
                        if axis == 0 {
                            map.alpha[k][slot] = i;
                        } else {
                            map.beta[k][slot] = i;
                        }
                    }
                }
                VarKind::VoidCenter { void, axis } => map.void_center[void][axis] = i,
                VarKind::VoidRadius { void, control } => map.void_radius[void][control] = i,
            }
        }
        map
    }
}

/// Everything a node-level partial needs, cached once per design:
/// the sampled fields, case-weighted nodal strain energies, the
/// transition-band node list, and tabulated perturbation basis values.
/// Built from an [`Evaluation`], so it cannot go stale against the
/// displacement solution it is paired with.
pub struct ChainContext<'a> {
    pub problem: &'a Problem,
    pub ev: &'a Evaluation,
    map: VarMap,
    /// Case-weighted `u_e' k u_e` summed over the elements touching each
    /// node, at full density.
    node_energy: Vec<f64>,
    /// Nodes where either the structural field or the expanded envelope
    /// lies inside the Heaviside transition band.
    band: Vec<usize>,
    offsets: Vec<[f64; 2]>,
    trig: Vec<(f64, f64)>,
    /// Perturbation basis values per grid column `[ix][2*harmonic + trig]`.
    basis_x: Vec<Vec<f64>>,
    /// Same per grid row.
    basis_y: Vec<Vec<f64>>,
}

impl<'a> ChainContext<'a> {
    pub fn new(problem: &'a Problem, ev: &'a Evaluation) -> Self {
        let grid = &problem.grid;
        let hp = &problem.heaviside;
        let k_unit = unit_stiffness(grid.dx, grid.dy, &problem.material);

        let mut elem_energy = vec![0.0; grid.elem_count()];
        for (case, sol) in problem.load_cases.iter().zip(&ev.solutions) {
            let per_case = element_energies(grid, &sol.u, &k_unit);
            for (total, e) in elem_energy.iter_mut().zip(per_case) {
                *total += case.weight * e;
            }
        }
        let nx = grid.nx;
        let node_energy = exec::map_collect(grid.node_count(), |i| {
            let (ix, iy) = grid.node_coords(i);
            let mut sum = 0.0;
            for ey in iy.saturating_sub(1)..=iy.min(grid.ny - 1) {
                for ex in ix.saturating_sub(1)..=ix.min(nx - 1) {
                    sum += elem_energy[ey * nx + ex];
                }
            }
            sum
        });

        let band = (0..grid.node_count())
            .filter(|&i| {
                ev.fields.phi_s[i].abs() <= hp.epsilon
                    || ev.fields.phi_0_ext[i].abs() <= hp.epsilon
            })
            .collect();

        let layout = &problem.space.layout;
        let cpf = &ev.lattice.components[0].cpf;
        let basis_x = (0..=grid.nx)
            .map(|ix| {
                let x = grid.origin[0] + ix as f64 * grid.dx;
                (0..2 * layout.n1)
                    .map(|s| cpf.basis_x(x, s / 2, s % 2))
                    .collect()
            })
            .collect();
        let basis_y = (0..=grid.ny)
            .map(|iy| {
                let y = grid.origin[1] + iy as f64 * grid.dy;
                (0..2 * layout.n2)
                    .map(|s| cpf.basis_y(y, s / 2, s % 2))
                    .collect()
            })
            .collect();

        ChainContext {
            problem,
            ev,
            map: VarMap::build(layout),
            node_energy,
            band,
            offsets: ev.lattice.offsets(),
            trig: ev.lattice.trig(),
            basis_x,
            basis_y,
        }
    }

    /// Density-chain prefactors at a node: the multiplier each nodal
    /// field partial picks up in (compliance, volume, infill volume).
    fn node_weights(&self, node: usize) -> (f64, f64, f64) {
        let hp = &self.problem.heaviside;
        let grid = &self.problem.grid;
        let phi_s = self.ev.fields.phi_s[node];
        let phi_0e = self.ev.fields.phi_0_ext[node];
        let area_w = 0.25 * grid.dx * grid.dy * grid.node_valence(node) as f64;
        let (a_c, a_v) = if phi_s.abs() <= hp.epsilon {
            let h = heaviside(phi_s, hp);
            let dh = heaviside_deriv(phi_s, hp);
            let q = hp.penal;
            (
                0.25 * q as f64 * h.powi(q - 1) * dh * self.node_energy[node],
                area_w * dh,
            )
        } else {
            (0.0, 0.0)
        };
        let a_vin = if phi_0e.abs() <= hp.epsilon {
            area_w * heaviside_deriv(phi_0e, hp)
        } else {
            0.0
        };
        (a_c, a_v, a_vin)
    }
}

fn flush(w: f64) -> f64 {
    if w < WEIGHT_FLUSH {
        0.0
    } else {
        w
    }
}

/// Aggregation weights of the composition tree at one node. Every branch
/// weight is `exp(l * (argument - aggregate))`, which the log-sum-exp
/// construction keeps in (0, 1].
struct TreeWeights {
    /// Structural field toward the material region field.
    s0: f64,
    /// Structural field toward the complement branch.
    s1: f64,
    /// Complement branch toward the negated expanded envelope.
    e1: f64,
    /// Complement branch toward the lattice field.
    g1: f64,
}

fn tree_weights(ev: &Evaluation, agg: crate::geometry::Aggregation, node: usize) -> TreeWeights {
    let f = &ev.fields;
    TreeWeights {
        s0: flush((agg.l_minus * (f.phi_0[node] - f.phi_s[node])).exp()),
        s1: flush((agg.l_minus * (f.phi_1[node] - f.phi_s[node])).exp()),
        e1: flush((agg.l_plus * (-f.phi_0_ext[node] - f.phi_1[node])).exp()),
        g1: flush((agg.l_plus * (f.phi_gs[node] - f.phi_1[node])).exp()),
    }
}

/// All three gradients in one fused pass over the transition band.
pub fn gradients(problem: &Problem, ev: &Evaluation) -> Gradients {
    let ctx = ChainContext::new(problem, ev);
    accumulate(&ctx)
}

/// Compliance gradient alone; thin wrapper over the fused pass.
pub fn compliance_gradient(ctx: &ChainContext) -> Vec<f64> {
    accumulate(ctx).compliance
}

/// Both volume gradients; thin wrapper over the fused pass.
pub fn volume_gradients(ctx: &ChainContext) -> (Vec<f64>, Vec<f64>) {
    let g = accumulate(ctx);
    (g.volume, g.infill_volume)
}

fn accumulate(ctx: &ChainContext) -> Gradients {
    let n = ctx.problem.space.layout.len();
    let flat = exec::accumulate(ctx.band.len(), 3 * n, |b, acc| {
        node_contribution(ctx, ctx.band[b], acc);
    });
    let volume = flat[n..2 * n].to_vec();
    let infill_volume = flat[2 * n..].to_vec();
    let mut compliance = flat;
    compliance.truncate(n);
    Gradients {
        compliance,
        volume,
        infill_volume,
    }
}

/// Adds one band node's contribution to all three gradient blocks.
/// `acc` holds compliance, volume and infill-volume entries back to back.
fn node_contribution(ctx: &ChainContext, node: usize, acc: &mut [f64]) {
    let n = ctx.problem.space.layout.len();
    let f = &ctx.ev.fields;
    let agg = ctx.problem.aggregation;
    let grid = &ctx.problem.grid;
    let (ix, iy) = grid.node_coords(node);
    let pos = grid.node_pos(node);
    let (a_c, a_v, a_vin) = ctx.node_weights(node);
    let w = tree_weights(ctx.ev, agg, node);

    // ds is the node partial of the structural field, de of the expanded
    // envelope. Compliance decreases when density rises, hence the sign.
    let mut add = |var: usize, ds: f64, de: f64| {
        acc[var] -= a_c * ds;
        acc[n + var] += a_v * ds;
        acc[2 * n + var] += a_vin * de;
    };

    // Lattice branch: the structural field sees component variables only
    // through the complement aggregate, never the expanded envelope.
    let fg = if a_c != 0.0 || a_v != 0.0 {
        w.s1 * w.g1
    } else {
        0.0
    };
    if fg != 0.0 {
        let phi_gs = f.phi_gs[node];
        for (k, proto) in ctx.ev.lattice.components.iter().enumerate() {
            let pt = [f.xt[k][ix], f.yt[k][iy]];
            let (sin_t, cos_t) = ctx.trig[k];
            let p = &proto.params;
            let mut d_half = 0.0;
            let mut d_angle = 0.0;
            let mut d_w1 = 0.0;
            let mut d_w2 = 0.0;
            let mut d_pt = [0.0; 2];
            for off in &ctx.offsets {
                let pp = p.tdf_partials(pt, *off, sin_t, cos_t);
                let om = flush((agg.l_plus * (pp.phi - phi_gs)).exp());
                if om == 0.0 {
                    continue;
                }
                d_half += om * pp.d_half_length;
                d_angle += om * pp.d_angle;
                d_w1 += om * pp.d_width_start;
                d_w2 += om * pp.d_width_end;
                d_pt[0] += om * pp.d_point[0];
                d_pt[1] += om * pp.d_point[1];
            }
            add(ctx.map.half[k], fg * d_half, 0.0);
            add(ctx.map.angle[k], fg * d_angle, 0.0);
            add(ctx.map.width_start[k], fg * d_w1, 0.0);
            add(ctx.map.width_end[k], fg * d_w2, 0.0);
            if let Some(c) = ctx.map.center[k] {
                // Moving the center shifts the evaluation point the
                // opposite way.
                add(c[0], -fg * d_pt[0], 0.0);
                add(c[1], -fg * d_pt[1], 0.0);
            }
            for (slot, &var) in ctx.map.alpha[k].iter().enumerate() {
                add(var, fg * d_pt[0] * ctx.basis_x[ix][slot], 0.0);
            }
            for (slot, &var) in ctx.map.beta[k].iter().enumerate() {
                add(var, fg * d_pt[1] * ctx.basis_y[iy][slot], 0.0);
            }
        }
    }

    // Void branch: each void reaches the structural field twice, through
    // the material region directly and through the negated expanded
    // envelope, and reaches the infill measure through the envelope only.
    for j in 0..ctx.ev.shell.voids.len() {
        let w0 = flush((agg.l_minus * (f.phi_voids[j][node] - f.phi_0[node])).exp());
        let w0e = flush((agg.l_minus * (f.phi_voids_ext[j][node] - f.phi_0_ext[node])).exp());
        let c_orig = if a_c != 0.0 || a_v != 0.0 {
            w.s0 * w0
        } else {
            0.0
        };
        let c_ext = if a_c != 0.0 || a_v != 0.0 {
            -(w.s1 * w.e1 * w0e)
        } else {
            0.0
        };
        let c_in = if a_vin != 0.0 { w0e } else { 0.0 };
        if c_orig == 0.0 && c_ext == 0.0 && c_in == 0.0 {
            continue;
        }
        let orig = (c_orig != 0.0)
            .then(|| void_tdf_partials(pos, &ctx.ev.shell.voids[j], &ctx.ev.tables.original[j]));
        let ext = (c_ext != 0.0 || c_in != 0.0)
            .then(|| void_tdf_partials(pos, &ctx.ev.tables.expanded[j], &ctx.ev.tables.ext[j]));

        let controls = ctx.ev.shell.voids[j].radii.len();
        for k in 0..controls {
            let mut ds = 0.0;
            let mut de = 0.0;
            if let Some(o) = &orig {
                ds += c_orig * o.d_radius(k);
            }
            if let Some(x) = &ext {
                ds += c_ext * x.d_radius(k);
                de = c_in * x.d_radius(k);
            }
            add(ctx.map.void_radius[j][k], ds, de);
        }
        let mut dc = [0.0; 2];
        let mut dce = [0.0; 2];
        if let Some(o) = &orig {
            let d = o.d_center();
            dc[0] += c_orig * d[0];
            dc[1] += c_orig * d[1];
        }
        if let Some(x) = &ext {
            let d = x.d_center();
            dc[0] += c_ext * d[0];
            dc[1] += c_ext * d[1];
            dce = [c_in * d[0], c_in * d[1]];
        }
        add(ctx.map.void_center[j][0], dc[0], dce[0]);
        add(ctx.map.void_center[j][1], dc[1], dce[1]);
    }
}

/// Node partial of the structural field for one lattice variable,
/// walked independently of the fused pass. Reference route for tests.
pub fn mmc_node_partial(
    ctx: &ChainContext,
    node: usize,
    var: usize,
) -> Result<f64, SensitivityError> {
    let layout = &ctx.problem.space.layout;
    let kinds = layout.kinds();
    if var >= kinds.len() {
        return Err(SensitivityError::UnknownVariable { var });
    }
    let f = &ctx.ev.fields;
    let agg = ctx.problem.aggregation;
    let (ix, iy) = ctx.problem.grid.node_coords(node);
    let w = tree_weights(ctx.ev, agg, node);
    let fg = w.s1 * w.g1;
    let phi_gs = f.phi_gs[node];

    // Weighted sum of one component partial channel over all copies.
    let copy_sum = |k: usize, channel: &dyn Fn(&crate::geometry::ComponentPartials) -> f64| {
        let pt = [f.xt[k][ix], f.yt[k][iy]];
        let (sin_t, cos_t) = ctx.trig[k];
        let p = &ctx.ev.lattice.components[k].params;
        let mut total = 0.0;
        for off in &ctx.offsets {
            let pp = p.tdf_partials(pt, *off, sin_t, cos_t);
            let om = flush((agg.l_plus * (pp.phi - phi_gs)).exp());
            if om != 0.0 {
                total += om * channel(&pp);
            }
        }
        total
    };

    let partial = match kinds[var] {
        VarKind::HalfLength { comp } => copy_sum(comp, &|pp| pp.d_half_length),
        VarKind::Angle { comp } => copy_sum(comp, &|pp| pp.d_angle),
        VarKind::WidthStart { comp } => copy_sum(comp, &|pp| pp.d_width_start),
        VarKind::WidthEnd { comp } => copy_sum(comp, &|pp| pp.d_width_end),
        VarKind::CompCenter { comp, axis } => -copy_sum(comp, &|pp| pp.d_point[axis]),
        VarKind::Cpf {
            comp,
            axis,
            harmonic,
            trig,
        } => {
            let comps: Vec<usize> = match comp {
                Some(k) => vec![k],
                None => (0..layout.n_components).collect(),
            };
            let mut total = 0.0;
            for k in comps {
                let basis = if axis == 0 {
                    ctx.basis_x[ix][2 * harmonic + trig]
                } else {
                    ctx.basis_y[iy][2 * harmonic + trig]
                };
                total += copy_sum(k, &|pp| pp.d_point[axis]) * basis;
            }
            total
        }
        VarKind::VoidCenter { .. } | VarKind::VoidRadius { .. } => {
            return Err(SensitivityError::WrongVariableClass { var });
        }
    };
    Ok(fg * partial)
}

/// Node partials of the structural field and the expanded envelope for
/// one void variable. Reference route for tests.
pub fn mmv_node_partial(
    ctx: &ChainContext,
    node: usize,
    var: usize,
    tables: &crate::geometry::ShellTables,
) -> Result<(f64, f64), SensitivityError> {
    let kinds = ctx.problem.space.layout.kinds();
    if var >= kinds.len() {
        return Err(SensitivityError::UnknownVariable { var });
    }
    let (j, channel) = match kinds[var] {
        VarKind::VoidCenter { void, axis } => (void, Channel::Center(axis)),
        VarKind::VoidRadius { void, control } => (void, Channel::Radius(control)),
        _ => return Err(SensitivityError::WrongVariableClass { var }),
    };
    let f = &ctx.ev.fields;
    let agg = ctx.problem.aggregation;
    let pos = ctx.problem.grid.node_pos(node);
    let w = tree_weights(ctx.ev, agg, node);
    let w0 = flush((agg.l_minus * (f.phi_voids[j][node] - f.phi_0[node])).exp());
    let w0e = flush((agg.l_minus * (f.phi_voids_ext[j][node] - f.phi_0_ext[node])).exp());

    let orig = void_tdf_partials(pos, &ctx.ev.shell.voids[j], &tables.original[j]);
    let ext = void_tdf_partials(pos, &tables.expanded[j], &tables.ext[j]);
    let (d_orig, d_ext) = match channel {
        Channel::Center(axis) => (orig.d_center()[axis], ext.d_center()[axis]),
        Channel::Radius(k) => (orig.d_radius(k), ext.d_radius(k)),
    };
    let d_phi0 = w0 * d_orig;
    let d_phi0e = w0e * d_ext;
    let d_phi1 = -w.e1 * d_phi0e;
    let d_phi_s = w.s0 * d_phi0 + w.s1 * d_phi1;
    Ok((d_phi_s, d_phi0e))
}

enum Channel {
    Center(usize),
    Radius(usize),
}

/// One variable's row of the finite-difference report; entries are
/// (compliance, volume, infill volume).
pub struct FdEntry {
    pub var: usize,
    pub step: f64,
    pub analytic: [f64; 3],
    pub numeric: [f64; 3],
}

pub struct FdReport {
    pub entries: Vec<FdEntry>,
    /// Infinity norm of each full analytic gradient, for the
    /// negligible-entry cutoff.
    pub grad_inf: [f64; 3],
}

/// Entries smaller than this fraction of the gradient norm are checked
/// absolutely rather than relatively. Central differences of the full
/// forward pass carry solver roundoff scaled by the objective value, and
/// symmetric designs produce exact-zero gradient entries whose numeric
/// estimate is pure noise; measured noise floors sit around 1e-7 of the
/// compliance gradient norm, so entries below 1e-4 of the norm cannot be
/// resolved to three digits by the oracle.
const NEGLIGIBLE_FRACTION: f64 = 1e-4;

impl FdReport {
    /// Worst relative deviation over all rows and measures. Entries whose
    /// analytic and numeric values are both negligible against the
    /// gradient norm are held to an absolute tolerance instead and do not
    /// enter the relative maximum.
    pub fn max_rel_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for entry in &self.entries {
            for m in 0..3 {
                if let Some(rel) = self.rel_error(entry, m) {
                    worst = worst.max(rel);
                }
            }
        }
        worst
    }

    /// Relative deviation of one measure, or `None` when the entry falls
    /// under the absolute-tolerance rule (reported by `absolute_ok`).
    pub fn rel_error(&self, entry: &FdEntry, measure: usize) -> Option<f64> {
        let a = entry.analytic[measure];
        let n = entry.numeric[measure];
        let scale = a.abs().max(n.abs());
        if scale < NEGLIGIBLE_FRACTION * self.grad_inf[measure] {
            return None;
        }
        Some((a - n).abs() / scale)
    }

    /// True when every negligible entry still agrees absolutely, with the
    /// tolerance scaled by the gradient norm so it is two orders below the
    /// negligibility cutoff. This catches systematic errors hiding under
    /// the cutoff while tolerating oracle noise.
    pub fn absolute_ok(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| {
            (0..3).all(|m| {
                let bound = tol * self.grad_inf[m].max(1.0);
                self.rel_error(e, m).is_some() || (e.analytic[m] - e.numeric[m]).abs() < bound
            })
        })
    }
}

/// Central-difference probe of the analytic gradients: re-evaluates the
/// full forward pass at `x +- h` per requested variable. This is the
/// independent oracle the gradient tests gate on.
pub fn finite_difference_check(
    problem: &Problem,
    x: &[f64],
    vars: &[usize],
) -> Result<FdReport, EvalError> {
    let ev = evaluate(problem, x)?;
    let g = gradients(problem, &ev);
    let steps = problem.space.fd_steps();
    let mut entries = Vec::with_capacity(vars.len());
    for &var in vars {
        let h = steps[var];
        let mut xp = x.to_vec();
        xp[var] += h;
        let plus = evaluate(problem, &xp)?;
        xp[var] = x[var] - h;
        let minus = evaluate(problem, &xp)?;
        let numeric = [
            (plus.compliance - minus.compliance) / (2.0 * h),
            (plus.volume - minus.volume) / (2.0 * h),
            (plus.infill_volume - minus.infill_volume) / (2.0 * h),
        ];
        entries.push(FdEntry {
            var,
            step: h,
            analytic: [g.compliance[var], g.volume[var], g.infill_volume[var]],
            numeric,
        });
    }
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(FdReport {
        entries,
        grad_inf: [
            inf(&g.compliance),
            inf(&g.volume),
            inf(&g.infill_volume),
        ],
    })
}
