//! `h`-weighted inner products and norms over real nodes `0..=N+1`.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use super::{FieldKind, GridField, GridSpec, QTensorField};
use crate::Result;

/// Summation order for global reductions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionMode {
    /// Per-slab partial sums combined in slab order; bit-reproducible for
    /// any thread count.
    Deterministic,
    /// Work-stealing tree reduction; summation order may vary run to run.
    Parallel,
}

static DETERMINISTIC: AtomicBool = AtomicBool::new(true);

pub fn set_reduction_mode(mode: ReductionMode) {
    DETERMINISTIC.store(mode == ReductionMode::Deterministic, Ordering::Relaxed);
}

pub fn reduction_mode() -> ReductionMode {
    if DETERMINISTIC.load(Ordering::Relaxed) {
        ReductionMode::Deterministic
    } else {
        ReductionMode::Parallel
    }
}

/// `Σ f(p)` over real nodes, without the `h^d` weight.
pub(crate) fn sum_real_nodes<F>(grid: &GridSpec, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let hi = grid.n_interior() as isize + 1;
    let slab = |i: isize| -> f64 {
        let mut acc = 0.0;
        if grid.dim() == 2 {
            for j in 0..=hi {
                acc += f(grid.index([i, j, 0]));
            }
        } else {
            for j in 0..=hi {
                for k in 0..=hi {
                    acc += f(grid.index([i, j, k]));
                }
            }
        }
        acc
    };
    match reduction_mode() {
        ReductionMode::Deterministic => {
            let partials: Vec<f64> = (0..=hi).into_par_iter().map(slab).collect();
            partials.iter().sum()
        }
        ReductionMode::Parallel => (0..=hi).into_par_iter().map(slab).sum(),
    }
}

/// `⟨A, B⟩_h` without the grid check.
pub(crate) fn dot_h<K: FieldKind>(a: &GridField<K>, b: &GridField<K>) -> f64 {
    let c = a.ncomp();
    let (x, y) = (a.data(), b.data());
    let s = sum_real_nodes(a.grid(), |p| {
        let mut acc = 0.0;
        for k in p * c..(p + 1) * c {
            acc += x[k] * y[k];
        }
        acc
    });
    a.grid().cell_volume() * s
}

/// `⟨A, B⟩_h = h^d Σ A:B` over nodes `0..=N+1`.
pub fn inner_h<K: FieldKind>(a: &GridField<K>, b: &GridField<K>) -> Result<f64> {
    a.grid().ensure_matches(b.grid())?;
    Ok(dot_h(a, b))
}

/// `‖A‖_h`.
pub fn norm_h<K: FieldKind>(a: &GridField<K>) -> f64 {
    dot_h(a, a).sqrt()
}

/// `⟨∇h A, ∇h B⟩_h = Σ_m ⟨D⁻_m A, D⁻_m B⟩_h`.
pub fn grad_inner_h<K: FieldKind>(a: &GridField<K>, b: &GridField<K>) -> Result<f64> {
    a.grid().ensure_matches(b.grid())?;
    let grid = *a.grid();
    let c = a.ncomp();
    let (x, y) = (a.data(), b.data());
    let strides = grid.strides();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let s = sum_real_nodes(&grid, |p| {
        let mut acc = 0.0;
        for &st in &strides[..grid.dim()] {
            for k in 0..c {
                let dx = x[p * c + k] - x[(p - st) * c + k];
                let dy = y[p * c + k] - y[(p - st) * c + k];
                acc += dx * dy;
            }
        }
        acc
    });
    Ok(grid.cell_volume() * s * inv_h2)
}

/// `‖∇h A‖_h`.
pub fn grad_norm_h<K: FieldKind>(a: &GridField<K>) -> f64 {
    grad_inner_h(a, a).expect("same grid").sqrt()
}

/// `‖div_h Q‖_h²`, computed without materializing the divergence.
pub fn div_norm_sq_h(q: &QTensorField) -> f64 {
    let grid = *q.grid();
    let d = grid.dim();
    let c = d * d;
    let u = q.data();
    let strides = grid.strides();
    let inv = 1.0 / (2.0 * grid.h());
    let s = sum_real_nodes(&grid, |p| {
        let mut acc = 0.0;
        for beta in 0..d {
            let mut v = 0.0;
            for (alpha, &st) in strides[..d].iter().enumerate() {
                let k = alpha * d + beta;
                v += u[(p + st) * c + k] - u[(p - st) * c + k];
            }
            v *= inv;
            acc += v * v;
        }
        acc
    });
    grid.cell_volume() * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{div_h, ScalarField};

    #[test]
    fn single_node_norm_is_cell_volume() {
        for dim in [2, 3] {
            let g = GridSpec::with_intervals(dim, 6, 1.0).unwrap();
            let mut a = QTensorField::zeros(g);
            a.at_mut([2, 3, 1])[0] = 0.6;
            a.at_mut([2, 3, 1])[1] = 0.8;
            let n2 = norm_h(&a).powi(2);
            assert!((n2 - g.cell_volume()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = GridSpec::with_intervals(2, 6, 1.0).unwrap();
        let a = ScalarField::zeros(g);
        assert_eq!(norm_h(&a), 0.0);
        assert_eq!(grad_norm_h(&a), 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ScalarField::zeros(GridSpec::with_intervals(2, 6, 1.0).unwrap());
        let b = ScalarField::zeros(GridSpec::with_intervals(2, 8, 1.0).unwrap());
        assert!(inner_h(&a, &b).is_err());
    }

    #[test]
    fn div_norm_matches_materialized_divergence() {
        let g = GridSpec::with_intervals(3, 5, 1.0).unwrap();
        let mut q = QTensorField::zeros(g);
        for (k, (_, p)) in g.interior_nodes().enumerate() {
            for (c, v) in q.node_mut(p).iter_mut().enumerate() {
                *v = ((k * 7 + c * 3) % 11) as f64 - 5.0;
            }
        }
        let direct = norm_h(&div_h(&q)).powi(2);
        assert!((div_norm_sq_h(&q) - direct).abs() <= 1e-12 * direct);
    }
}
