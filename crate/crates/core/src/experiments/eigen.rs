use crate::fields::{GridSpec, QTensorField, ScalarField, VectorField};
use crate::Tensor;

/// Largest eigenvalue of a symmetric trace-free 2×2 tensor, `√(p² + q²)`
/// with `p = (Q₁₁ − Q₂₂)/2` and `q` the symmetrized off-diagonal.
pub fn largest_eigenvalue(q: &Tensor) -> f64 {
    let p = 0.5 * (q.get(0, 0) - q.get(1, 1));
    let s = 0.5 * (q.get(0, 1) + q.get(1, 0));
    p.hypot(s)
}

/// Unit eigenvector for the largest eigenvalue, first nonzero component
/// non-negative; `None` at an isotropic point.
pub fn director(q: &Tensor) -> Option<[f64; 2]> {
    let p = 0.5 * (q.get(0, 0) - q.get(1, 1));
    let s = 0.5 * (q.get(0, 1) + q.get(1, 0));
    let lambda = p.hypot(s);
    if lambda == 0.0 {
        return None;
    }
    let v = if p >= 0.0 { [lambda + p, s] } else { [s, lambda - p] };
    let len = v[0].hypot(v[1]);
    let mut n = [v[0] / len, v[1] / len];
    if n[0] < 0.0 || (n[0] == 0.0 && n[1] < 0.0) {
        n = [-n[0], -n[1]];
    }
    Some(n)
}

/// `λmax` at every real node.
pub fn lambda_max_field(q: &QTensorField) -> ScalarField {
    let grid: GridSpec = *q.grid();
    let mut out = ScalarField::zeros(grid);
    for (_, p) in grid.real_nodes() {
        out.set_value(p, largest_eigenvalue(&q.tensor(p)));
    }
    out
}

/// Director at every real node, zero where isotropic.
pub fn director_field(q: &QTensorField) -> VectorField {
    let grid = *q.grid();
    let mut out = VectorField::zeros(grid);
    for (_, p) in grid.real_nodes() {
        if let Some(n) = director(&q.tensor(p)) {
            out.node_mut(p).copy_from_slice(&n);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let q = Tensor::from_row_slice(2, &[3.0, 4.0, 4.0, -3.0]);
        assert_eq!(largest_eigenvalue(&q), 5.0);
        assert_eq!(largest_eigenvalue(&Tensor::zeros(2)), 0.0);
        assert!(director(&Tensor::zeros(2)).is_none());
        let q = Tensor::diag(&[0.5, -0.5]);
        assert_eq!(largest_eigenvalue(&q), 0.5);
        assert_eq!(director(&q).unwrap(), [1.0, 0.0]);
        let q = Tensor::diag(&[-0.5, 0.5]);
        assert_eq!(director(&q).unwrap(), [0.0, 1.0]);
    }

    #[test]
    fn director_is_eigenvector() {
        for k in 0..32 {
            let th = k as f64 * 0.2;
            let n = [th.cos(), th.sin()];
            let q = Tensor::uniaxial(&n).scale(1.7);
            let d = director(&q).unwrap();
            let qd = [
                q.get(0, 0) * d[0] + q.get(0, 1) * d[1],
                q.get(1, 0) * d[0] + q.get(1, 1) * d[1],
            ];
            let l = largest_eigenvalue(&q);
            assert!((qd[0] - l * d[0]).abs() < 1e-14 && (qd[1] - l * d[1]).abs() < 1e-14);
            assert!((d[0] * n[0] + d[1] * n[1]).abs() > 1.0 - 1e-14);
            assert!(d[0] > 0.0 || (d[0] == 0.0 && d[1] >= 0.0));
        }
    }
}
