//! One step of the linear IEQ scheme.
//!
//! Given `(Qⁿ, Qⁿ⁻¹, rⁿ)` the step freezes `P̄ = P((3/2)Qⁿ − (1/2)Qⁿ⁻¹)`,
//! solves `𝔸(Qⁿ⁺¹) = 𝔽(Qⁿ)` with
//!
//! ```text
//! 𝔸(X) = X/Δt − (M L₁/2) Δh X + (M/2)(P̄:X) P̄ − M (L₂+L₃)/4 α_h(X)
//! 𝔽(Q) = Q/Δt + (M L₁/2) Δh Q + (M/2)(P̄:Q) P̄ − M r P̄ + M (L₂+L₃)/4 α_h(Q)
//! ```
//!
//! and then sets `rⁿ⁺¹ = rⁿ + P̄:(Qⁿ⁺¹ − Qⁿ)` nodewise. The energy
//! `E = L₁/2 ‖∇h Q‖² + (L₂+L₃)/2 ‖div_h Q‖² + ½‖r‖²` then satisfies
//! `Eⁿ⁺¹ − Eⁿ = −Δt M ‖H‖²` up to the linear-solve residual.

use std::fmt::Write as _;

use crate::fields::{
    alpha_h, div_norm_sq_h, dot_h, grad_norm_h, laplacian_h, norm_h, par_nodes_mut, QTensorField,
    ScalarField,
};
use crate::linsolve::{cg_solve, SolverConfig, SpdOperator};
use crate::potential::{p_bar, ModelParams};
use crate::{Error, Result};

/// Absolute tolerance on nodal trace and asymmetry during a run.
pub const STRUCTURE_TOLERANCE: f64 = 1e-11;

/// The time-stepping state `(n, Qⁿ, Qⁿ⁻¹, rⁿ)`.
#[derive(Clone, Debug)]
pub struct SchemeState {
    pub step: usize,
    pub q: QTensorField,
    pub q_prev: QTensorField,
    pub r: ScalarField,
    pub params: ModelParams,
}

impl SchemeState {
    /// Starts a run from projected initial data; `Q⁻¹ := Q⁰`.
    pub fn new(q0: QTensorField, r0: ScalarField, params: ModelParams) -> Result<Self> {
        params.validate()?;
        q0.grid().ensure_matches(r0.grid())?;
        if params.dim != q0.grid().dim() {
            return Err(Error::Argument("parameter and grid dimensions differ".into()));
        }
        if !q0.is_finite() || !r0.is_finite() {
            return Err(Error::Argument("initial data contains non-finite values".into()));
        }
        if q0.boundary_max_abs() != 0.0 {
            return Err(Error::Argument("Q must vanish on boundary and ghost nodes".into()));
        }
        let drift = q0.trace_drift().max(q0.sym_drift());
        if drift > STRUCTURE_TOLERANCE {
            return Err(Error::Integrity {
                step: 0,
                trace_drift: q0.trace_drift(),
                sym_drift: q0.sym_drift(),
                tolerance: STRUCTURE_TOLERANCE,
            });
        }
        if r0.min_real() <= 0.0 {
            return Err(Error::Argument("r must be positive at every node".into()));
        }
        Ok(SchemeState {
            step: 0,
            q_prev: q0.clone(),
            q: q0,
            r: r0,
            params,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.params.dt
    }

    pub fn energy(&self) -> f64 {
        energy(&self.q, &self.r, &self.params)
    }
}

/// Per-step audit record.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Index of the new time level `n + 1`.
    pub step: usize,
    pub time: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `Δt M ‖H^{n+½}‖_h²`.
    pub dissipation: f64,
    /// `(Eⁿ⁺¹ − Eⁿ) + Δt M ‖H^{n+½}‖_h²`.
    pub dissipation_residual: f64,
    /// `Δt ‖𝔽 − 𝔸Qⁿ⁺¹‖_h ‖H‖_h`, the size the residual can reach from an
    /// inexact solve alone.
    pub residual_bound: f64,
    pub trace_drift: f64,
    pub sym_drift: f64,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    /// Max-abs `rⁿ⁺¹ − rⁿ − P̄:(Qⁿ⁺¹ − Qⁿ)`.
    pub r_update_defect: f64,
    /// `‖D⁺_t Qⁿ‖_h`.
    pub time_derivative_norm: f64,
    /// `‖𝔽(Qⁿ)‖_h`.
    pub rhs_norm: f64,
    /// `‖H^{n+½}‖_h`.
    pub potential_norm: f64,
}

impl StepReport {
    /// `Δt · tol · ‖𝔽‖_h · ‖H‖_h`: what [`StepReport::residual_bound`] can
    /// reach when the solve stops exactly at relative tolerance `tol`.
    pub fn a_priori_bound(&self, dt: f64, tol: f64) -> f64 {
        dt * tol * self.rhs_norm * self.potential_norm
    }
}

impl StepReport {
    pub const CSV_HEADER: &'static str =
        "step,time,energy,dissipation_residual,trace_drift,sym_drift,cg_iters,cg_residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.17e},{:.6e},{:.6e},{:.6e},{},{:.6e}",
            self.step,
            self.time,
            self.energy_after,
            self.dissipation_residual,
            self.trace_drift,
            self.sym_drift,
            self.solver_iterations,
            self.solver_residual
        )
    }

    /// Row for the initial level, before any step.
    pub fn initial_csv_row(state: &SchemeState) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "0,{:.12e},{:.17e},{:.6e},{:.6e},{:.6e},0,{:.6e}",
            state.time(),
            state.energy(),
            0.0,
            state.q.trace_drift(),
            state.q.sym_drift(),
            0.0
        );
        s
    }
}

/// `𝔸` with a frozen `P̄`, as a matrix-free operator.
pub struct SchemeOperator<'a> {
    pub p_bar: &'a QTensorField,
    pub params: &'a ModelParams,
}

impl SpdOperator for SchemeOperator<'_> {
    fn apply(&self, x: &QTensorField) -> QTensorField {
        apply_a(x, self.p_bar, self.params)
    }

    /// `1/Δt + M L₁ d/h² + (M/2)|P̄|² + M (L₂+L₃)/(4h²)`, one value per node.
    fn node_diagonal(&self) -> Option<ScalarField> {
        let prm = self.params;
        let grid = *self.p_bar.grid();
        let h2 = grid.h() * grid.h();
        let base = 1.0 / prm.dt
            + prm.m * prm.l1 * grid.dim() as f64 / h2
            + prm.m * prm.l23() / (4.0 * h2);
        let mut diag = ScalarField::zeros(grid);
        diag.fill(1.0);
        for (_, p) in grid.interior_nodes() {
            let pb = self.p_bar.tensor(p);
            diag.set_value(p, base + 0.5 * prm.m * pb.ddot(&pb));
        }
        Some(diag)
    }
}

/// Nodewise `(P̄:X) P̄`.
fn projected<'a>(x: &'a QTensorField, p_bar: &'a QTensorField) -> impl Fn(usize) -> f64 + 'a {
    let c = x.ncomp();
    move |p| {
        let (xn, pn) = (&x.data()[p * c..(p + 1) * c], &p_bar.data()[p * c..(p + 1) * c]);
        xn.iter().zip(pn).map(|(a, b)| a * b).sum()
    }
}

/// Applies `𝔸` at interior nodes; boundary output zero.
pub fn apply_a(x: &QTensorField, p_bar: &QTensorField, params: &ModelParams) -> QTensorField {
    let grid = *x.grid();
    let c = x.ncomp();
    let lap = laplacian_h(x);
    let alpha = (params.l23() != 0.0).then(|| alpha_h(x));
    let inv_dt = 1.0 / params.dt;
    let k_lap = 0.5 * params.m * params.l1;
    let k_alpha = 0.25 * params.m * params.l23();
    let k_p = 0.5 * params.m;
    let pdot = projected(x, p_bar);
    let mut out = QTensorField::zeros(grid);
    let (xd, ld, pd) = (x.data(), lap.data(), p_bar.data());
    par_nodes_mut(&grid, out.data_mut(), c, 1, grid.n_interior() as isize, |p, o| {
        let s = k_p * pdot(p);
        for (k, ok) in o.iter_mut().enumerate() {
            let i = p * c + k;
            let mut v = xd[i] * inv_dt - k_lap * ld[i] + s * pd[i];
            if let Some(a) = &alpha {
                v -= k_alpha * a.data()[i];
            }
            *ok = v;
        }
    });
    out
}

/// Right-hand side `𝔽(Qⁿ)`.
pub fn build_f(state: &SchemeState, p_bar: &QTensorField) -> QTensorField {
    let params = &state.params;
    let q = &state.q;
    let grid = *q.grid();
    let c = q.ncomp();
    let lap = laplacian_h(q);
    let alpha = (params.l23() != 0.0).then(|| alpha_h(q));
    let inv_dt = 1.0 / params.dt;
    let k_lap = 0.5 * params.m * params.l1;
    let k_alpha = 0.25 * params.m * params.l23();
    let k_p = 0.5 * params.m;
    let pdot = projected(q, p_bar);
    let mut out = QTensorField::zeros(grid);
    let (qd, ld, pd, rd) = (q.data(), lap.data(), p_bar.data(), state.r.data());
    par_nodes_mut(&grid, out.data_mut(), c, 1, grid.n_interior() as isize, |p, o| {
        let s = k_p * pdot(p) - params.m * rd[p];
        for (k, ok) in o.iter_mut().enumerate() {
            let i = p * c + k;
            let mut v = qd[i] * inv_dt + k_lap * ld[i] + s * pd[i];
            if let Some(a) = &alpha {
                v += k_alpha * a.data()[i];
            }
            *ok = v;
        }
    });
    out
}

/// Discrete energy `L₁/2 ‖∇h Q‖² + (L₂+L₃)/2 ‖div_h Q‖² + ½‖r‖²`.
pub fn energy(q: &QTensorField, r: &ScalarField, params: &ModelParams) -> f64 {
    let mut e = 0.5 * params.l1 * grad_norm_h(q).powi(2) + 0.5 * dot_h(r, r);
    if params.l23() != 0.0 {
        e += 0.5 * params.l23() * div_norm_sq_h(q);
    }
    e
}

/// `H^{n+½} = L₁ Δh Q^{n+½} − r^{n+½} P̄ + (L₂+L₃)/2 α_h(Q^{n+½})` from the
/// two solved levels, with `r^{n+½} = (rⁿ⁺¹ + rⁿ)/2`.
pub fn chemical_potential(
    q_new: &QTensorField,
    q_old: &QTensorField,
    r_new: &ScalarField,
    r_old: &ScalarField,
    p_bar: &QTensorField,
    params: &ModelParams,
) -> QTensorField {
    let grid = *q_new.grid();
    let c = q_new.ncomp();
    let q_half = QTensorField::lin_comb(0.5, q_new, 0.5, q_old);
    let lap = laplacian_h(&q_half);
    let alpha = (params.l23() != 0.0).then(|| alpha_h(&q_half));
    let mut h = QTensorField::zeros(grid);
    let (ld, pd, rn, ro) = (lap.data(), p_bar.data(), r_new.data(), r_old.data());
    par_nodes_mut(&grid, h.data_mut(), c, 1, grid.n_interior() as isize, |p, o| {
        let r_half = 0.5 * (rn[p] + ro[p]);
        for (k, ok) in o.iter_mut().enumerate() {
            let i = p * c + k;
            let mut v = params.l1 * ld[i] - r_half * pd[i];
            if let Some(a) = &alpha {
                v += 0.5 * params.l23() * a.data()[i];
            }
            *ok = v;
        }
    });
    h
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub trace_drift: f64,
    pub sym_drift: f64,
    pub min_r: f64,
    pub max_q_frobenius: f64,
}

pub fn diagnostics(state: &SchemeState) -> Diagnostics {
    Diagnostics {
        trace_drift: state.q.trace_drift(),
        sym_drift: state.q.sym_drift(),
        min_r: state.r.min_real(),
        max_q_frobenius: state.q.max_frobenius(),
    }
}

/// Advances `state` by one step in place.
pub fn step_in_place(state: &mut SchemeState, cfg: &SolverConfig) -> Result<StepReport> {
    let n = state.step;
    let params = state.params;
    let grid = *state.q.grid();
    let pb = p_bar(&state.q, &state.q_prev, &params).map_err(|e| e.at_step(n + 1))?;
    let rhs = build_f(state, &pb);
    let op = SchemeOperator {
        p_bar: &pb,
        params: &params,
    };
    let solved = cg_solve(&op, &rhs, &state.q, cfg).map_err(|e| e.at_step(n + 1))?;
    let mut q_new = solved.solution;
    q_new.zero_boundary();

    // second equation of the scheme, evaluated directly
    let mut r_new = state.r.clone();
    let c = q_new.ncomp();
    let mut r_defect = 0.0f64;
    for (_, p) in grid.interior_nodes() {
        let mut inc = 0.0;
        for k in p * c..(p + 1) * c {
            inc += pb.data()[k] * (q_new.data()[k] - state.q.data()[k]);
        }
        let v = state.r.value(p) + inc;
        r_new.set_value(p, v);
        r_defect = r_defect.max((v - state.r.value(p) - inc).abs());
    }

    let h = chemical_potential(&q_new, &state.q, &r_new, &state.r, &pb, &params);
    let h_norm = norm_h(&h);
    let energy_before = state.energy();
    let energy_after = energy(&q_new, &r_new, &params);
    let dissipation = params.dt * params.m * h_norm * h_norm;
    let solve_residual = {
        let applied = apply_a(&q_new, &pb, &params);
        norm_h(&QTensorField::lin_comb(1.0, &rhs, -1.0, &applied))
    };
    let dq = QTensorField::lin_comb(1.0 / params.dt, &q_new, -1.0 / params.dt, &state.q);

    let trace_drift = q_new.trace_drift();
    let sym_drift = q_new.sym_drift();
    if trace_drift > STRUCTURE_TOLERANCE || sym_drift > STRUCTURE_TOLERANCE {
        return Err(Error::Integrity {
            step: n + 1,
            trace_drift,
            sym_drift,
            tolerance: STRUCTURE_TOLERANCE,
        });
    }

    let report = StepReport {
        step: n + 1,
        time: (n + 1) as f64 * params.dt,
        energy_before,
        energy_after,
        dissipation,
        dissipation_residual: (energy_after - energy_before) + dissipation,
        residual_bound: params.dt * solve_residual * h_norm,
        trace_drift,
        sym_drift,
        solver_iterations: solved.iterations,
        solver_residual: solved.relative_residual,
        r_update_defect: r_defect,
        time_derivative_norm: norm_h(&dq),
        rhs_norm: norm_h(&rhs),
        potential_norm: h_norm,
    };

    state.q_prev = std::mem::replace(&mut state.q, q_new);
    state.r = r_new;
    state.step = n + 1;
    Ok(report)
}

/// Functional form of [`step_in_place`].
pub fn step(state: &SchemeState, cfg: &SolverConfig) -> Result<(SchemeState, StepReport)> {
    let mut next = state.clone();
    let report = step_in_place(&mut next, cfg)?;
    Ok((next, report))
}

/// Running checks of the a-priori stability bounds along a trajectory.
#[derive(Clone, Debug)]
pub struct StabilityMonitor {
    pub initial_energy: f64,
    pub initial_q_norm: f64,
    pub mobility: f64,
    /// `Δt Σ ‖D⁺_t Qⁿ‖_h²` so far.
    pub time_derivative_sum: f64,
    /// Largest `‖Qᵐ‖_h − (√tₘ (Δt Σ ‖D⁺_t Qⁿ‖²)^{½} + ‖Q⁰‖_h)` seen.
    pub worst_q_bound_gap: f64,
    pub dt: f64,
    pub steps: usize,
}

impl StabilityMonitor {
    pub fn new(state: &SchemeState) -> Self {
        StabilityMonitor {
            initial_energy: state.energy(),
            initial_q_norm: norm_h(&state.q),
            mobility: state.params.m,
            time_derivative_sum: 0.0,
            worst_q_bound_gap: f64::NEG_INFINITY,
            dt: state.params.dt,
            steps: 0,
        }
    }

    pub fn observe(&mut self, report: &StepReport, q_new: &QTensorField) {
        self.steps += 1;
        self.time_derivative_sum += self.dt * report.time_derivative_norm.powi(2);
        let t = self.steps as f64 * self.dt;
        let bound = (t * self.time_derivative_sum).sqrt() + self.initial_q_norm;
        self.worst_q_bound_gap = self.worst_q_bound_gap.max(norm_h(q_new) - bound);
    }

    /// `Δt Σ ‖D⁺_t Q‖² ≤ M E⁰`, which follows from the energy identity and
    /// `D⁺_t Q = M H`.
    pub fn time_derivative_bound_holds(&self, rel_slack: f64) -> bool {
        self.time_derivative_sum <= self.mobility * self.initial_energy * (1.0 + rel_slack)
    }

    pub fn q_bound_holds(&self, abs_slack: f64) -> bool {
        self.worst_q_bound_gap <= abs_slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{project_initial, GridSpec};
    use crate::Tensor;

    fn zero_state(dim: usize, n: usize) -> SchemeState {
        let g = GridSpec::with_intervals(dim, n, 1.0).unwrap();
        let params = ModelParams::standard(dim);
        let (q, r) = project_initial(&g, &params, |_| Tensor::zeros(dim)).unwrap();
        SchemeState::new(q, r, params).unwrap()
    }

    #[test]
    fn zero_field_is_stationary() {
        let mut s = zero_state(2, 8);
        let r0 = s.r.clone();
        let rep = step_in_place(&mut s, &SolverConfig::default()).unwrap();
        assert!(s.q.is_zero());
        assert_eq!(s.r, r0);
        assert_eq!(rep.solver_iterations, 0);
        assert_eq!(rep.dissipation_residual, 0.0);
    }

    #[test]
    fn rhs_vanishes_for_zero_state() {
        let s = zero_state(3, 4);
        let pb = p_bar(&s.q, &s.q_prev, &s.params).unwrap();
        assert!(pb.is_zero());
        assert!(build_f(&s, &pb).is_zero());
    }

    #[test]
    fn energy_of_uniform_r() {
        let s = zero_state(2, 8);
        let g = *s.q.grid();
        let rho2 = 2.0 * s.params.a0;
        let expected = 0.5 * g.cell_volume() * g.real_len() as f64 * rho2;
        assert!((s.energy() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn single_node_perturbation_energy() {
        // Q = v·E at one interior node: ‖∇h Q‖² = 2d·h^{d−2}|Q|², ‖div_h Q‖² adds
        // 2·(2h)^{-2}·h^d per nonzero column entry.
        for dim in [2usize, 3] {
            let g = GridSpec::with_intervals(dim, 6, 1.0).unwrap();
            let mut params = ModelParams::standard(dim);
            params.l1 = 0.3;
            params.l2 = 0.2;
            params.l3 = 0.1;
            let mut q = QTensorField::zeros(g);
            let mut t = Tensor::zeros(dim);
            t.set(0, 1, 0.5);
            t.set(1, 0, 0.5);
            q.set_tensor(g.index([3, 3, 3]), &t);
            let mut r = ScalarField::zeros(g);
            r.fill(1.0);
            let base = energy(&QTensorField::zeros(g), &r, &params);
            let e = energy(&q, &r, &params);
            let hd = g.cell_volume();
            let h = g.h();
            let grad = 2.0 * dim as f64 * hd / (h * h) * t.ddot(&t);
            // divergence: Q_01 feeds (div)_1 along axis 0, Q_10 feeds (div)_0 along axis 1;
            // each appears at two neighbours with magnitude 0.5/(2h)
            let div = 4.0 * hd * (0.5 / (2.0 * h)).powi(2);
            let expected = 0.5 * params.l1 * grad + 0.5 * params.l23() * div;
            assert!(((e - base) - expected).abs() < 1e-12 * expected, "dim {dim}");
        }
    }

    #[test]
    fn diagnostics_report_injected_defects() {
        let mut s = zero_state(2, 6);
        let p = s.q.grid().index([2, 3, 0]);
        s.q.node_mut(p)[0] = 1e-6;
        s.q.node_mut(p)[1] = 3e-7;
        let d = diagnostics(&s);
        assert_eq!(d.trace_drift, 1e-6);
        assert_eq!(d.sym_drift, 3e-7);
        assert_eq!(d.min_r, (1000.0f64).sqrt());
    }
}
