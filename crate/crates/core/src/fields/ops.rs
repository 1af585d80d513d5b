//! Difference operators on grid fields.
//!
//! All stencils read the padded array directly; ghost and boundary values are
//! whatever the input holds (zero for Dirichlet fields). Outputs are written
//! to disjoint nodes, so every operator runs in parallel over outer-axis
//! slabs and is still bit-reproducible.

use rayon::prelude::*;

use super::{FieldKind, GridField, GridSpec, QTensorField, VectorField};
use crate::{Error, Result};

/// One-sided or centered first difference along an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Difference {
    /// `D⁺f_i = (f_{i+1} − f_i)/h`
    Forward,
    /// `D⁻f_i = (f_i − f_{i−1})/h`
    Backward,
    /// `Dᶜf_i = (f_{i+1} − f_{i−1})/(2h)`
    Central,
}

/// Calls `f(p, out_node)` for every node with all indices in `lo..=hi`,
/// in parallel over slabs of the first axis.
pub(crate) fn par_nodes_mut<F>(grid: &GridSpec, out: &mut [f64], ncomp: usize, lo: isize, hi: isize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let s0 = grid.stride(0);
    let dim = grid.dim();
    out.par_chunks_mut(s0 * ncomp)
        .enumerate()
        .for_each(|(slab_id, slab)| {
            let i = slab_id as isize - 1;
            if i < lo || i > hi {
                return;
            }
            let base = slab_id * s0;
            let mut visit = |idx: [isize; 3]| {
                let p = grid.index(idx);
                let off = (p - base) * ncomp;
                f(p, &mut slab[off..off + ncomp]);
            };
            if dim == 2 {
                for j in lo..=hi {
                    visit([i, j, 0]);
                }
            } else {
                for j in lo..=hi {
                    for k in lo..=hi {
                        visit([i, j, k]);
                    }
                }
            }
        });
}

/// `D⁺`, `D⁻` or `Dᶜ` along `axis` (1-based), componentwise, evaluated at
/// every real node `0..=N+1`. Ghost outputs are zero.
pub fn diff<K: FieldKind>(f: &GridField<K>, axis: usize, kind: Difference) -> Result<GridField<K>> {
    let grid = *f.grid();
    if axis == 0 || axis > grid.dim() {
        return Err(Error::Argument(format!(
            "axis {axis} outside 1..={}",
            grid.dim()
        )));
    }
    let s = grid.stride(axis - 1);
    let c = f.ncomp();
    let h = grid.h();
    let u = f.data();
    let mut out = GridField::<K>::zeros(grid);
    let hi = grid.n_interior() as isize + 1;
    par_nodes_mut(&grid, out.data_mut(), c, 0, hi, |p, o| {
        for (k, ok) in o.iter_mut().enumerate() {
            *ok = match kind {
                Difference::Forward => (u[(p + s) * c + k] - u[p * c + k]) / h,
                Difference::Backward => (u[p * c + k] - u[(p - s) * c + k]) / h,
                Difference::Central => (u[(p + s) * c + k] - u[(p - s) * c + k]) / (2.0 * h),
            };
        }
    });
    Ok(out)
}

/// Componentwise `Δh = Σ_α D⁻_α D⁺_α` at interior nodes; boundary output zero.
pub fn laplacian_h<K: FieldKind>(f: &GridField<K>) -> GridField<K> {
    let grid = *f.grid();
    let c = f.ncomp();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let strides = grid.strides();
    let dim = grid.dim();
    let u = f.data();
    let mut out = GridField::<K>::zeros(grid);
    par_nodes_mut(&grid, out.data_mut(), c, 1, grid.n_interior() as isize, |p, o| {
        for (k, ok) in o.iter_mut().enumerate() {
            let centre = u[p * c + k];
            let mut acc = 0.0;
            for &s in &strides[..dim] {
                acc += u[(p + s) * c + k] - 2.0 * centre + u[(p - s) * c + k];
            }
            *ok = acc * inv_h2;
        }
    });
    out
}

/// `Dᶜ_a Dᶜ_b` applied to component `k` at node `p`, times `4h²`.
#[inline]
fn central_second(u: &[f64], c: usize, p: usize, sa: usize, sb: usize, k: usize) -> f64 {
    if sa == sb {
        u[(p + 2 * sa) * c + k] - 2.0 * u[p * c + k] + u[(p - 2 * sa) * c + k]
    } else {
        u[(p + sa + sb) * c + k] - u[(p + sa - sb) * c + k] - u[(p - sa + sb) * c + k]
            + u[(p - sa - sb) * c + k]
    }
}

/// Discrete mixed-derivative elastic term
///
/// ```text
/// α_h(Q)_ws = Σ_β [Dᶜ_w Dᶜ_β Q_sβ + Dᶜ_s Dᶜ_β Q_wβ] − (2/d) δ_ws Σ_βγ Dᶜ_β Dᶜ_γ Q_βγ
/// ```
///
/// at interior nodes. The output is symmetric and trace-free for any input.
pub fn alpha_h(q: &QTensorField) -> QTensorField {
    let grid = *q.grid();
    let d = grid.dim();
    let c = d * d;
    let strides = grid.strides();
    let inv = 1.0 / (4.0 * grid.h() * grid.h());
    let u = q.data();
    let mut out = QTensorField::zeros(grid);
    par_nodes_mut(&grid, out.data_mut(), c, 1, grid.n_interior() as isize, |p, o| {
        // dd[a][b][k] = Dᶜ_a Dᶜ_b of component k
        let mut dd = [[[0.0f64; 9]; 3]; 3];
        for a in 0..d {
            for b in a..d {
                for k in 0..c {
                    let v = central_second(u, c, p, strides[a], strides[b], k) * inv;
                    dd[a][b][k] = v;
                    dd[b][a][k] = v;
                }
            }
        }
        let mut div_div = 0.0;
        for b in 0..d {
            for g in 0..d {
                div_div += dd[b][g][b * d + g];
            }
        }
        for w in 0..d {
            for s in 0..d {
                let mut acc = 0.0;
                for b in 0..d {
                    acc += dd[w][b][s * d + b] + dd[s][b][w * d + b];
                }
                if w == s {
                    acc -= 2.0 / d as f64 * div_div;
                }
                o[w * d + s] = acc;
            }
        }
    });
    out
}

/// Central-difference divergence `(div_h Q)_β = Σ_α Dᶜ_α Q_αβ`, evaluated
/// at every real node `0..=N+1` (boundary values read the ghost layer).
pub fn div_h(q: &QTensorField) -> VectorField {
    let grid = *q.grid();
    let d = grid.dim();
    let c = d * d;
    let strides = grid.strides();
    let inv = 1.0 / (2.0 * grid.h());
    let u = q.data();
    let mut out = VectorField::zeros(grid);
    par_nodes_mut(&grid, out.data_mut(), d, 0, grid.n_interior() as isize + 1, |p, o| {
        for (beta, ob) in o.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (alpha, &s) in strides[..d].iter().enumerate() {
                let k = alpha * d + beta;
                acc += u[(p + s) * c + k] - u[(p - s) * c + k];
            }
            *ob = acc * inv;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;
    use crate::Tensor;

    fn line_grid() -> GridSpec {
        // N = 3, h = 0.25: nodes 0..4 on [0, 1]
        GridSpec::with_intervals(2, 4, 1.0).unwrap()
    }

    #[test]
    fn central_difference_on_slice() {
        let g = line_grid();
        let mut f = ScalarField::zeros(g);
        for (idx, p) in g.real_nodes() {
            let v = [0.0, 1.0, 2.0, 3.0, 0.0][idx[0] as usize];
            f.set_value(p, v);
        }
        let dc = diff(&f, 1, Difference::Central).unwrap();
        assert_eq!(dc.value(g.index([2, 1, 0])), 4.0);
    }

    #[test]
    fn forward_difference_of_constant_interior() {
        let g = GridSpec::with_intervals(2, 8, 1.0).unwrap();
        let mut f = ScalarField::zeros(g);
        for (_, p) in g.interior_nodes() {
            f.set_value(p, 3.0);
        }
        let dp = diff(&f, 2, Difference::Forward).unwrap();
        for (idx, p) in g.nodes(2, 6) {
            assert_eq!(dp.value(p), 0.0, "{idx:?}");
        }
    }

    #[test]
    fn second_difference_exact_on_quadratics() {
        let g = GridSpec::with_intervals(2, 10, 1.0).unwrap();
        let mut f = ScalarField::zeros(g);
        for (idx, p) in g.nodes(-1, 11) {
            let x = g.coord(idx)[0];
            f.set_value(p, x * x);
        }
        let dp = diff(&f, 1, Difference::Forward).unwrap();
        // D⁻ of D⁺ f needs D⁺ f at i−1, available for i ≥ 1
        let dm = diff(&dp, 1, Difference::Backward).unwrap();
        for (_, p) in g.interior_nodes() {
            assert!((dm.value(p) - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_axis_is_rejected() {
        let f = ScalarField::zeros(line_grid());
        assert!(diff(&f, 0, Difference::Forward).is_err());
        assert!(diff(&f, 3, Difference::Forward).is_err());
    }

    #[test]
    fn laplacian_of_parabola() {
        let g = GridSpec::with_intervals(2, 10, 1.0).unwrap();
        let mut q = QTensorField::zeros(g);
        for (idx, p) in g.real_nodes() {
            let x = g.coord(idx)[0];
            let mut t = Tensor::zeros(2);
            t.set(0, 0, x * (1.0 - x));
            q.set_tensor(p, &t);
        }
        let lap = laplacian_h(&q);
        for (_, p) in g.interior_nodes() {
            assert!((lap.tensor(p).get(0, 0) + 2.0).abs() < 1e-11);
            assert_eq!(lap.tensor(p).get(1, 1), 0.0);
        }
        assert_eq!(lap.boundary_max_abs(), 0.0);
    }

    #[test]
    fn zero_in_zero_out() {
        let g = GridSpec::with_intervals(3, 5, 1.0).unwrap();
        let q = QTensorField::zeros(g);
        assert!(laplacian_h(&q).is_zero());
        assert!(alpha_h(&q).is_zero());
        assert!(div_h(&q).is_zero());
    }

    #[test]
    fn divergence_of_linear_component() {
        let g = GridSpec::with_intervals(2, 10, 1.0).unwrap();
        let mut q = QTensorField::zeros(g);
        for (idx, p) in g.interior_nodes() {
            let mut t = Tensor::zeros(2);
            t.set(0, 0, g.coord(idx)[0]);
            q.set_tensor(p, &t);
        }
        let div = div_h(&q);
        for (idx, p) in g.nodes(2, 8) {
            assert!((div.node(p)[0] - 1.0).abs() < 1e-12, "{idx:?}");
            assert_eq!(div.node(p)[1], 0.0);
        }
    }
}
