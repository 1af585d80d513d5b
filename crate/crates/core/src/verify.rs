//! Seeded property battery.
//!
//! Each property draws random grid functions from a ChaCha stream, checks
//! one structural identity of the discretization and reports the worst
//! deviation it saw. The battery is what the `verify` command runs; the
//! same generators back the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::{
    alpha_h, diff, div_h, div_norm_sq_h, grad_inner_h, grad_norm_h, inner_h, laplacian_h, norm_h,
    project_initial, Difference, FieldKind, GridField, GridSpec, QTensorField, ScalarField,
};
use crate::linsolve::{asymmetry, dense_assemble, smallest_eigenvalue, SolverConfig};
use crate::potential::{p_of, ModelParams};
use crate::scheme::{step_in_place, SchemeOperator, SchemeState, StabilityMonitor};
use crate::Tensor;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in `[-1, 1]` at every stored node, ghosts included.
pub fn random_field<K: FieldKind>(grid: GridSpec, rng: &mut Rng64) -> GridField<K> {
    let mut f = GridField::<K>::zeros(grid);
    f.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-1.0..=1.0));
    f
}

/// Random field vanishing on boundary and ghost nodes.
pub fn random_dirichlet<K: FieldKind>(grid: GridSpec, rng: &mut Rng64) -> GridField<K> {
    let mut f = random_field::<K>(grid, rng);
    f.zero_boundary();
    f
}

/// Symmetric trace-free tensor with entries of order `scale`.
pub fn random_stf(dim: usize, scale: f64, rng: &mut Rng64) -> Tensor {
    let mut t = Tensor::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            let v = rng.gen_range(-scale..=scale);
            t.set(i, j, v);
            t.set(j, i, v);
        }
    }
    let tr = t.trace() / dim as f64;
    t - Tensor::identity(dim).scale(tr)
}

/// Symmetric trace-free tensor of Frobenius norm `radius` with a uniformly
/// distributed direction.
pub fn random_stf_with_norm(dim: usize, radius: f64, rng: &mut Rng64) -> Tensor {
    loop {
        let t = random_stf(dim, 1.0, rng);
        let f = t.frobenius();
        // rejection to the unit ball makes the direction uniform
        if f > 1e-3 && f <= 1.0 {
            return t.scale(radius / f);
        }
    }
}

/// Symmetric trace-free Dirichlet field with entries of order `scale`.
pub fn random_stf_field(grid: GridSpec, scale: f64, rng: &mut Rng64) -> QTensorField {
    let mut q = QTensorField::zeros(grid);
    for (_, p) in grid.interior_nodes() {
        q.set_tensor(p, &random_stf(grid.dim(), scale, rng));
    }
    q
}

/// `|a − b| / scale`, zero when the scale vanishes.
///
/// The identities below compare inner products of random fields, which can
/// nearly cancel; `scale` is the Cauchy–Schwarz bound of the two sides so
/// that round-off is measured against the size of the summands.
pub fn relative_gap(a: f64, b: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl PropertyOutcome {
    fn new(name: &'static str, worst: f64, tolerance: f64, cases: usize) -> Self {
        PropertyOutcome {
            name,
            passed: worst <= tolerance,
            worst,
            tolerance,
            cases,
        }
    }
}

/// The discrete `α_h` under test.
pub type AlphaOp = fn(&QTensorField) -> QTensorField;

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random field pairs per dimension for the summation-by-parts checks.
    pub fields_per_dim: usize,
    /// Random pairs for the Lipschitz sampling (the growth check uses ten
    /// times as many).
    pub lipschitz_samples: usize,
    /// Random `P̄` fields per dimension for the operator checks.
    pub operator_cases: usize,
    pub alpha: AlphaOp,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 20240601,
            fields_per_dim: 200,
            lipschitz_samples: 100_000,
            operator_cases: 20,
            alpha: alpha_h,
        }
    }
}

pub const SBP_TOLERANCE: f64 = 1e-12;

fn sbp_grids() -> [GridSpec; 2] {
    [
        GridSpec::new(2, 16, [0.0; 3], 1.0).expect("valid grid"),
        GridSpec::new(3, 8, [0.0; 3], 1.0).expect("valid grid"),
    ]
}

/// The three one-dimensional summation-by-parts identities for a Dirichlet
/// `A` and an unconstrained `B`, on every axis.
pub fn check_difference_sbp(opts: &VerifyOptions) -> [PropertyOutcome; 3] {
    let mut r = rng(opts.seed ^ 0x5b9);
    let mut worst = [0.0f64; 3];
    for grid in sbp_grids() {
        for _ in 0..opts.fields_per_dim {
            let a = random_dirichlet::<crate::fields::ScalarKind>(grid, &mut r);
            let b: ScalarField = random_field(grid, &mut r);
            for axis in 1..=grid.dim() {
                let d = |f: &ScalarField, k| diff(f, axis, k).expect("valid axis");
                let ip = |x: &ScalarField, y: &ScalarField| inner_h(x, y).expect("same grid");
                let pairs = [
                    (Difference::Forward, Difference::Backward),
                    (Difference::Backward, Difference::Forward),
                    (Difference::Central, Difference::Central),
                ];
                for (slot, (kb, ka)) in pairs.into_iter().enumerate() {
                    let (db, da) = (d(&b, kb), d(&a, ka));
                    let lhs = ip(&a, &db);
                    let rhs = -ip(&b, &da);
                    let scale = (norm_h(&a) * norm_h(&db)).max(norm_h(&b) * norm_h(&da));
                    worst[slot] = worst[slot].max(relative_gap(lhs, rhs, scale));
                }
            }
        }
    }
    let n = 2 * opts.fields_per_dim;
    [
        PropertyOutcome::new("sbp-forward", worst[0], SBP_TOLERANCE, n),
        PropertyOutcome::new("sbp-backward", worst[1], SBP_TOLERANCE, n),
        PropertyOutcome::new("sbp-central", worst[2], SBP_TOLERANCE, n),
    ]
}

/// `⟨A, Δh B⟩_h = −⟨∇h A, ∇h B⟩_h` for Dirichlet tensor fields.
pub fn check_laplacian_sbp(opts: &VerifyOptions) -> PropertyOutcome {
    let mut r = rng(opts.seed ^ 0x1a9);
    let mut worst = 0.0f64;
    for grid in sbp_grids() {
        for _ in 0..opts.fields_per_dim {
            let a: QTensorField = random_dirichlet(grid, &mut r);
            let b: QTensorField = random_dirichlet(grid, &mut r);
            let lap = laplacian_h(&b);
            let lhs = inner_h(&a, &lap).expect("same grid");
            let rhs = -grad_inner_h(&a, &b).expect("same grid");
            let scale = (norm_h(&a) * norm_h(&lap)).max(grad_norm_h(&a) * grad_norm_h(&b));
            worst = worst.max(relative_gap(lhs, rhs, scale));
        }
    }
    PropertyOutcome::new("laplacian-sbp", worst, SBP_TOLERANCE, 2 * opts.fields_per_dim)
}

/// `⟨A, α_h(B)⟩_h = −2⟨div_h A, div_h B⟩_h` for symmetric trace-free
/// Dirichlet fields.
pub fn check_alpha_sbp(opts: &VerifyOptions) -> PropertyOutcome {
    let mut r = rng(opts.seed ^ 0xa1f);
    let mut worst = 0.0f64;
    for grid in sbp_grids() {
        for _ in 0..opts.fields_per_dim {
            let a = random_stf_field(grid, 1.0, &mut r);
            let b = random_stf_field(grid, 1.0, &mut r);
            let alpha = (opts.alpha)(&b);
            let lhs = inner_h(&a, &alpha).expect("same grid");
            let rhs = -2.0 * inner_h(&div_h(&a), &div_h(&b)).expect("same grid");
            let scale = (norm_h(&a) * norm_h(&alpha)).max(2.0 * (div_norm_sq_h(&a) * div_norm_sq_h(&b)).sqrt());
            worst = worst.max(relative_gap(lhs, rhs, scale));
        }
    }
    PropertyOutcome::new("alpha-sbp", worst, SBP_TOLERANCE, 2 * opts.fields_per_dim)
}

/// Random admissible parameters with non-zero `L₂ + L₃`.
pub fn random_params(dim: usize, rng: &mut Rng64) -> ModelParams {
    let mut p = ModelParams::standard(dim);
    p.l1 = rng.gen_range(1e-3..1.0);
    p.l2 = rng.gen_range(0.0..1.0);
    p.l3 = rng.gen_range(-0.5 * p.l2..1.0);
    p.m = rng.gen_range(0.1..2.0);
    p.dt = 10f64.powf(rng.gen_range(-4.0..-1.0));
    p
}

/// Fixed parameters for the operator checks: all three elastic constants
/// active and entries of moderate size, so that max-abs asymmetry is a
/// meaningful round-off measure.
pub fn operator_params(dim: usize) -> ModelParams {
    let mut p = ModelParams::standard(dim).with_dt(0.01);
    p.l1 = 0.1;
    p.l2 = 0.2;
    p.l3 = 0.1;
    p
}

/// Symmetry (max-abs `M − Mᵀ`) and positivity of the assembled operator
/// on 2D 4² and 3D 3³ grids for random `P̄`.
pub fn check_operator_spd(opts: &VerifyOptions) -> [PropertyOutcome; 2] {
    let mut r = rng(opts.seed ^ 0x0be);
    let mut worst_asym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let grids = [
        GridSpec::new(2, 4, [0.0; 3], 1.0).expect("valid grid"),
        GridSpec::new(3, 3, [0.0; 3], 1.0).expect("valid grid"),
    ];
    for grid in grids {
        for _ in 0..opts.operator_cases {
            let params = operator_params(grid.dim());
            let pb = random_stf_field(grid, 1.0, &mut r);
            let op = SchemeOperator {
                p_bar: &pb,
                params: &params,
            };
            let (m, _) = dense_assemble(&op, &grid).expect("small grid");
            worst_asym = worst_asym.max(asymmetry(&m));
            min_eig = min_eig.min(smallest_eigenvalue(&m));
        }
    }
    let n = 2 * opts.operator_cases;
    [
        PropertyOutcome::new("operator-symmetric", worst_asym, 1e-13, n),
        PropertyOutcome {
            name: "operator-positive",
            passed: min_eig > 0.0,
            worst: min_eig,
            tolerance: 0.0,
            cases: n,
        },
    ]
}

/// Short runs from random smooth data: energy identity against the
/// solve-residual bound, structure drift, exact `r` update and the
/// stability bounds.
pub fn check_runs(opts: &VerifyOptions) -> [PropertyOutcome; 4] {
    let mut r = rng(opts.seed ^ 0xe4e);
    let cfg = SolverConfig::default().with_tolerance(1e-12);
    let (mut energy_gap, mut drift, mut r_defect, mut bound_gap) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut cases = 0;
    for (dim, n) in [(2usize, 12usize), (3, 6)] {
        for _ in 0..3 {
            let mut params = random_params(dim, &mut r);
            params.dt = 1e-2;
            let grid = GridSpec::with_intervals(dim, n, 1.0).expect("valid grid");
            let amp = random_stf(dim, 1.0, &mut r);
            let k = [r.gen_range(1..3) as f64, r.gen_range(1..3) as f64, r.gen_range(1..3) as f64];
            let bump = move |x: [f64; 3]| {
                let mut s = 1.0;
                for a in 0..dim {
                    s *= (std::f64::consts::PI * k[a] * x[a]).sin();
                }
                s
            };
            let (q, r0) = project_initial(&grid, &params, |x| amp.scale(bump(x))).expect("valid data");
            let mut state = SchemeState::new(q, r0, params).expect("valid state");
            let mut monitor = StabilityMonitor::new(&state);
            for _ in 0..20 {
                let rep = step_in_place(&mut state, &cfg).expect("step succeeds");
                monitor.observe(&rep, &state.q);
                let slack = 1e-12 * monitor.initial_energy;
                energy_gap = energy_gap.max((rep.dissipation_residual.abs() - rep.residual_bound - slack).max(0.0));
                drift = drift.max(rep.trace_drift).max(rep.sym_drift);
                r_defect = r_defect.max(rep.r_update_defect);
            }
            if !monitor.time_derivative_bound_holds(1e-10) {
                bound_gap = bound_gap.max(monitor.time_derivative_sum - monitor.mobility * monitor.initial_energy);
            }
            bound_gap = bound_gap.max(monitor.worst_q_bound_gap);
            cases += 1;
        }
    }
    [
        PropertyOutcome::new("energy-identity", energy_gap, 0.0, cases),
        PropertyOutcome::new("structure-preservation", drift, 1e-10, cases),
        PropertyOutcome::new("r-update-exact", r_defect, 1e-12, cases),
        PropertyOutcome::new("stability-bounds", bound_gap, 1e-12, cases),
    ]
}

/// Largest `|P(Q+δQ) − P(Q)|_F / |δQ|_F` over `samples` random pairs with
/// `|Q|_F ≤ 20` and `|δQ|_F ≤ 10`.
///
/// Norms are uniform on `[0, 20]` and `(0, 10]`, directions uniform. Uniform
/// sampling of the balls themselves would leave the region where the ratio
/// peaks (`|Q|_F` of a few units) almost empty.
pub fn lipschitz_ratio_max(dim: usize, samples: usize, seed: u64) -> f64 {
    let params = ModelParams::standard(dim);
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let q = random_stf_with_norm(dim, r.gen_range(0.0..=20.0), &mut r);
        let n: f64 = r.gen_range(0.0..=10.0);
        if n == 0.0 {
            continue;
        }
        let dq = random_stf_with_norm(dim, n, &mut r);
        let a = p_of(&(q + dq), &params).expect("radicand positive for default parameters");
        let b = p_of(&q, &params).expect("radicand positive for default parameters");
        worst = worst.max((a - b).frobenius() / n);
    }
    worst
}

/// Finite maximum ratio that grows by less than 5% when the sample is ten
/// times larger. `worst` reports the relative growth.
pub fn check_lipschitz(opts: &VerifyOptions) -> PropertyOutcome {
    let mut growth = 0.0f64;
    for dim in [2, 3] {
        let small = lipschitz_ratio_max(dim, opts.lipschitz_samples, opts.seed ^ 0x11f);
        let large = lipschitz_ratio_max(dim, 10 * opts.lipschitz_samples, opts.seed ^ 0x22f);
        let g = if small.is_finite() && large.is_finite() {
            (large - small) / small
        } else {
            f64::INFINITY
        };
        growth = growth.max(g);
    }
    PropertyOutcome::new("lipschitz-boundedness", growth, 0.05, 2)
}

/// The full battery in a fixed order.
pub fn run_battery(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    let mut out = Vec::new();
    out.extend(check_difference_sbp(opts));
    out.push(check_laplacian_sbp(opts));
    out.push(check_alpha_sbp(opts));
    out.extend(check_operator_spd(opts));
    out.extend(check_runs(opts));
    out.push(check_lipschitz(opts));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stf_samples_are_structured() {
        let mut r = rng(1);
        for dim in [2, 3] {
            for _ in 0..100 {
                let t = random_stf_with_norm(dim, 7.5, &mut r);
                assert!(t.trace().abs() < 1e-13);
                assert_eq!(t.asymmetry(), 0.0);
                assert!((t.frobenius() - 7.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_fields_vanish_outside() {
        let g = GridSpec::new(2, 5, [0.0; 3], 1.0).unwrap();
        let f: ScalarField = random_dirichlet(g, &mut rng(3));
        assert_eq!(f.boundary_max_abs(), 0.0);
        assert!(!f.is_zero());
    }

    #[test]
    fn relative_gap_basics() {
        assert_eq!(relative_gap(1.0, 2.0, 0.0), 0.0);
        assert_eq!(relative_gap(1.0, 1.0, 3.0), 0.0);
        assert_eq!(relative_gap(2.0, 1.0, 2.0), 0.5);
    }
}
