//! Matrix-free preconditioned conjugate gradient over tensor fields, with a
//! dense-assembly oracle for small grids.
//!
//! CG runs in the `h`-weighted inner product `⟨·,·⟩_h`, so tolerances do not
//! depend on the grid. The Jacobi preconditioner is a per-node scalar: it
//! scales whole matrices, which keeps every search direction symmetric and
//! trace-free.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::fields::{dot_h, norm_h, GridSpec, QTensorField, ScalarField};
use crate::{Error, Result, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Stop when `‖A x − b‖_h ≤ rel_tolerance · ‖b‖_h`.
    pub rel_tolerance: f64,
    /// `None` means `max(500, 10·√unknowns)`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tolerance: 1e-10,
            max_iterations: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(Error::Parameter {
                name: "solver.rel_tolerance",
                value: self.rel_tolerance,
                reason: "must lie in (0, 1)",
            });
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Parameter {
                name: "solver.max_iterations",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    pub fn iteration_limit(&self, grid: &GridSpec) -> usize {
        self.max_iterations.unwrap_or_else(|| {
            let unknowns = grid.interior_len() * grid.dim() * grid.dim();
            ((10.0 * (unknowns as f64).sqrt()).ceil() as usize).max(500)
        })
    }
}

/// A linear operator on tensor fields, self-adjoint and positive definite in
/// `⟨·,·⟩_h` on symmetric trace-free Dirichlet fields.
pub trait SpdOperator: Sync {
    fn apply(&self, x: &QTensorField) -> QTensorField;

    /// Per-node scalar estimate of the operator diagonal, for Jacobi.
    fn node_diagonal(&self) -> Option<ScalarField> {
        None
    }
}

/// Adapts a closure into an [`SpdOperator`] without a diagonal.
pub struct FnOperator<F>(pub F);

impl<F> SpdOperator for FnOperator<F>
where
    F: Fn(&QTensorField) -> QTensorField + Sync,
{
    fn apply(&self, x: &QTensorField) -> QTensorField {
        (self.0)(x)
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub solution: QTensorField,
    pub iterations: usize,
    /// `‖A x − b‖_h / ‖b‖_h` of the returned solution (zero for `b = 0`).
    pub relative_residual: f64,
    /// Iterations where the residual norm rose by more than 10%.
    pub residual_increases: usize,
}

fn precondition(r: &QTensorField, diag: Option<&ScalarField>) -> QTensorField {
    match diag {
        None => r.clone(),
        Some(dg) => {
            let mut z = r.clone();
            let c = z.ncomp();
            let dd = dg.data();
            for (p, chunk) in z.data_mut().chunks_mut(c).enumerate() {
                let inv = 1.0 / dd[p];
                chunk.iter_mut().for_each(|v| *v *= inv);
            }
            z
        }
    }
}

/// Solves `A x = b` by preconditioned CG starting from `x0`.
pub fn cg_solve<A: SpdOperator + ?Sized>(
    op: &A,
    rhs: &QTensorField,
    x0: &QTensorField,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    rhs.grid().ensure_matches(x0.grid())?;
    let grid = *rhs.grid();
    let b_norm = norm_h(rhs);
    if b_norm == 0.0 {
        return Ok(SolveOutcome {
            solution: QTensorField::zeros(grid),
            iterations: 0,
            relative_residual: 0.0,
            residual_increases: 0,
        });
    }
    let target = cfg.rel_tolerance * b_norm;
    let limit = cfg.iteration_limit(&grid);
    let diag = match cfg.preconditioner {
        Preconditioner::Jacobi => op.node_diagonal(),
        Preconditioner::None => None,
    };

    let mut x = x0.clone();
    let mut r = QTensorField::lin_comb(1.0, rhs, -1.0, &op.apply(&x));
    let mut r_norm = norm_h(&r);
    if r_norm <= target {
        return Ok(SolveOutcome {
            solution: x,
            iterations: 0,
            relative_residual: r_norm / b_norm,
            residual_increases: 0,
        });
    }
    let mut z = precondition(&r, diag.as_ref());
    let mut p = z.clone();
    let mut rz = dot_h(&r, &z);
    let mut increases = 0;
    let mut restarted = false;

    for it in 1..=limit {
        let ap = op.apply(&p);
        let curvature = dot_h(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::NotPositiveDefinite {
                curvature,
                iteration: it,
            });
        }
        let alpha = rz / curvature;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let new_norm = norm_h(&r);
        if new_norm > 1.1 * r_norm {
            increases += 1;
            log::debug!("cg residual rose from {r_norm:.3e} to {new_norm:.3e} at iteration {it}");
        }
        r_norm = new_norm;

        if r_norm <= target {
            // the recursive residual can drift from the true one
            let true_r = QTensorField::lin_comb(1.0, rhs, -1.0, &op.apply(&x));
            let true_norm = norm_h(&true_r);
            if true_norm <= target || restarted {
                if true_norm > target {
                    return Err(Error::NonConvergence {
                        iterations: it,
                        residual: true_norm / b_norm,
                    });
                }
                return Ok(SolveOutcome {
                    solution: x,
                    iterations: it,
                    relative_residual: true_norm / b_norm,
                    residual_increases: increases,
                });
            }
            restarted = true;
            r = true_r;
            r_norm = true_norm;
            z = precondition(&r, diag.as_ref());
            p = z.clone();
            rz = dot_h(&r, &z);
            continue;
        }

        z = precondition(&r, diag.as_ref());
        let rz_new = dot_h(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        // p ← z + β p
        p.scale(beta);
        p.axpy(1.0, &z);
    }
    Err(Error::NonConvergence {
        iterations: limit,
        residual: r_norm / b_norm,
    })
}

/// Coordinates of tensor fields in a Frobenius-orthonormal basis of
/// symmetric trace-free matrices at each interior node.
#[derive(Clone, Debug)]
pub struct Flattening {
    grid: GridSpec,
    nodes: Vec<usize>,
    basis: Vec<Tensor>,
}

impl Flattening {
    pub fn new(grid: GridSpec) -> Self {
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let basis = if grid.dim() == 2 {
            vec![
                Tensor::from_row_slice(2, &[s2, 0.0, 0.0, -s2]),
                Tensor::from_row_slice(2, &[0.0, s2, s2, 0.0]),
            ]
        } else {
            let s6 = 1.0 / 6f64.sqrt();
            let off = |i: usize, j: usize| {
                let mut t = Tensor::zeros(3);
                t.set(i, j, s2);
                t.set(j, i, s2);
                t
            };
            vec![
                Tensor::diag(&[s2, -s2, 0.0]),
                Tensor::diag(&[s6, s6, -2.0 * s6]),
                off(0, 1),
                off(0, 2),
                off(1, 2),
            ]
        };
        Flattening {
            grid,
            nodes: grid.interior_nodes().map(|(_, p)| p).collect(),
            basis,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len() * self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(linear node index, basis index)` of unknown `k`.
    pub fn unknown(&self, k: usize) -> (usize, usize) {
        let nb = self.basis.len();
        (self.nodes[k / nb], k % nb)
    }

    pub fn flatten(&self, x: &QTensorField) -> DVector<f64> {
        let nb = self.basis.len();
        DVector::from_fn(self.len(), |k, _| {
            let (p, b) = (self.nodes[k / nb], k % nb);
            x.tensor(p).ddot(&self.basis[b])
        })
    }

    pub fn unflatten(&self, v: &DVector<f64>) -> QTensorField {
        let nb = self.basis.len();
        let mut x = QTensorField::zeros(self.grid);
        for (n, &p) in self.nodes.iter().enumerate() {
            let mut t = Tensor::zeros(self.grid.dim());
            for (b, e) in self.basis.iter().enumerate() {
                t += e.scale(v[n * nb + b]);
            }
            x.set_tensor(p, &t);
        }
        x
    }
}

pub const DENSE_LIMIT: usize = 6;

/// Dense matrix of `op` in the flattened coordinates: column `j` is
/// `op(e_j)`. The matrix is symmetric exactly when `op` is self-adjoint in
/// `⟨·,·⟩_h`.
pub fn dense_assemble<A: SpdOperator + ?Sized>(op: &A, grid: &GridSpec) -> Result<(DMatrix<f64>, Flattening)> {
    if grid.n_interior() > DENSE_LIMIT {
        return Err(Error::GridTooLarge {
            interior: grid.n_interior(),
            limit: DENSE_LIMIT,
        });
    }
    let flat = Flattening::new(*grid);
    let n = flat.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let col = flat.flatten(&op.apply(&flat.unflatten(&e)));
        m.set_column(j, &col);
    }
    Ok((m, flat))
}

/// LU solve of a small dense system.
pub fn direct_solve(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if matrix.nrows() != matrix.ncols() || matrix.nrows() != rhs.len() {
        return Err(Error::Argument(format!(
            "{}x{} matrix with rhs of length {}",
            matrix.nrows(),
            matrix.ncols(),
            rhs.len()
        )));
    }
    matrix.clone().lu().solve(rhs).ok_or(Error::Singular)
}

/// Smallest eigenvalue of the symmetric part of `matrix`.
pub fn smallest_eigenvalue(matrix: &DMatrix<f64>) -> f64 {
    let sym = (matrix + matrix.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Max-abs entry of `M − Mᵀ`.
pub fn asymmetry(matrix: &DMatrix<f64>) -> f64 {
    (matrix - matrix.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize) -> GridSpec {
        GridSpec::with_intervals(2, n, 1.0).unwrap()
    }

    #[test]
    fn zero_rhs_returns_zero_immediately() {
        let g = grid2(8);
        let op = FnOperator(|x: &QTensorField| x.clone());
        let out = cg_solve(&op, &QTensorField::zeros(g), &QTensorField::zeros(g), &SolverConfig::default())
            .unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.solution.is_zero());
    }

    #[test]
    fn hand_system() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let x = direct_solve(&m, &DVector::from_vec(vec![3.0, 3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let id = DMatrix::<f64>::identity(3, 3);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(direct_solve(&id, &b).unwrap(), b);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            direct_solve(&m, &DVector::from_vec(vec![1.0, 1.0])),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn identity_over_dt_assembles_to_scaled_identity() {
        let g = grid2(5);
        let dt = 0.01;
        let op = FnOperator(move |x: &QTensorField| {
            let mut y = x.clone();
            y.scale(1.0 / dt);
            y
        });
        let (m, flat) = dense_assemble(&op, &g).unwrap();
        assert_eq!(flat.len(), 16 * 2);
        let expected = DMatrix::<f64>::identity(32, 32) * (1.0 / dt);
        assert!((m - expected).amax() < 1e-12);
    }

    #[test]
    fn dense_assembly_refuses_large_grids() {
        let op = FnOperator(|x: &QTensorField| x.clone());
        assert!(matches!(
            dense_assemble(&op, &grid2(8)),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn indefinite_operator_is_detected() {
        let g = grid2(6);
        let op = FnOperator(|x: &QTensorField| {
            let mut y = x.clone();
            y.scale(-1.0);
            y
        });
        let mut b = QTensorField::zeros(g);
        b.set_tensor(g.index([2, 2, 0]), &Tensor::diag(&[1.0, -1.0]));
        assert!(matches!(
            cg_solve(&op, &b, &QTensorField::zeros(g), &SolverConfig::default()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn iteration_cap_gives_non_convergence() {
        let g = grid2(6);
        let op = FnOperator(|x: &QTensorField| {
            let mut y = crate::fields::laplacian_h(x);
            y.scale(-1.0);
            y
        });
        let mut b = QTensorField::zeros(g);
        for (k, (_, p)) in g.interior_nodes().enumerate() {
            let v = (k as f64 * 0.7).sin();
            b.set_tensor(p, &Tensor::from_row_slice(2, &[v, 0.3 * v, 0.3 * v, -v]));
        }
        let cfg = SolverConfig {
            max_iterations: Some(1),
            preconditioner: Preconditioner::None,
            ..SolverConfig::default()
        };
        assert!(matches!(
            cg_solve(&op, &b, &QTensorField::zeros(g), &cfg),
            Err(Error::NonConvergence { iterations: 1, .. })
        ));
    }

    #[test]
    fn flatten_round_trip_preserves_structured_fields() {
        let g = GridSpec::with_intervals(3, 3, 1.0).unwrap();
        let flat = Flattening::new(g);
        let mut x = QTensorField::zeros(g);
        for (k, (_, p)) in g.interior_nodes().enumerate() {
            let a = k as f64 * 0.1;
            let t = Tensor::from_row_slice(3, &[a, 0.2, -0.1, 0.2, 0.5 - a, 0.3, -0.1, 0.3, -0.5]);
            x.set_tensor(p, &t);
        }
        let back = flat.unflatten(&flat.flatten(&x));
        assert!(back.max_abs_diff(&x) < 1e-15);
        let v = flat.flatten(&x);
        let n2 = crate::fields::norm_h(&x).powi(2);
        assert!((g.cell_volume() * v.norm_squared() - n2).abs() < 1e-14 * n2);
    }
}
