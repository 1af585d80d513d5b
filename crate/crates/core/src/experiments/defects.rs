use std::f64::consts::PI;

use crate::fields::{QTensorField, ScalarField};

/// Default fraction of the median `λmax` below which a node counts as
/// defective.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct Defect {
    pub centroid: [f64; 2],
    pub nodes: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Connected low-`λmax` regions of a 2D field.
///
/// Interior nodes with `λmax < threshold · median` are grouped by
/// 4-neighbour connectivity. Regions that reach the outermost interior ring
/// are dropped: with `Q = 0` on the boundary, `λmax` always dips there.
pub fn locate_defects(lambda: &ScalarField, threshold: f64) -> Vec<Defect> {
    let grid = *lambda.grid();
    assert_eq!(grid.dim(), 2, "defect detection is 2D only");
    let n = grid.n_interior() as isize;
    let med = median(grid.interior_nodes().map(|(_, p)| lambda.value(p)).collect());
    let cut = threshold * med;
    let side = n as usize;
    let flat = |i: isize, j: isize| ((i - 1) * n + (j - 1)) as usize;
    let low: Vec<bool> = grid
        .interior_nodes()
        .map(|(_, p)| lambda.value(p) < cut)
        .collect();
    let mut seen = vec![false; side * side];
    let mut out = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if !low[flat(i, j)] || seen[flat(i, j)] {
                continue;
            }
            seen[flat(i, j)] = true;
            let mut stack = vec![(i, j)];
            let (mut sx, mut sy, mut count, mut touches) = (0.0, 0.0, 0usize, false);
            while let Some((a, b)) = stack.pop() {
                let x = grid.coord([a, b, 0]);
                sx += x[0];
                sy += x[1];
                count += 1;
                touches |= a == 1 || b == 1 || a == n || b == n;
                for (da, db) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (u, v) = (a + da, b + db);
                    if (1..=n).contains(&u) && (1..=n).contains(&v) {
                        let k = flat(u, v);
                        if low[k] && !seen[k] {
                            seen[k] = true;
                            stack.push((u, v));
                        }
                    }
                }
            }
            if !touches {
                out.push(Defect {
                    centroid: [sx / count as f64, sy / count as f64],
                    nodes: count,
                });
            }
        }
    }
    out
}

/// A cluster of grid cells around which the director turns.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargedDefect {
    pub centroid: [f64; 2],
    /// Net winding of the director in units of full turns (`±1/2` for the
    /// elementary nematic defects).
    pub charge: f64,
    pub cells: usize,
}

/// Nematic winding number of every cell `[i, i+1] × [j, j+1]` of interior
/// nodes, indexed `(i − 1)·(N − 1) + (j − 1)`.
///
/// The angle `2θ = atan2(2Q₁₂, Q₁₁ − Q₂₂)` is unwrapped around the four
/// corners; a charge-`s` defect inside the cell contributes `4πs`.
pub fn cell_charges(q: &QTensorField) -> Vec<f64> {
    let grid = *q.grid();
    assert_eq!(grid.dim(), 2, "defect detection is 2D only");
    let n = grid.n_interior() as isize;
    let angle = |i: isize, j: isize| {
        let t = q.tensor_at([i, j, 0]);
        (t.get(0, 1) + t.get(1, 0)).atan2(t.get(0, 0) - t.get(1, 1))
    };
    let wrap = |d: f64| d - 2.0 * PI * (d / (2.0 * PI)).round();
    let mut out = Vec::with_capacity(((n - 1).max(0) * (n - 1).max(0)) as usize);
    for i in 1..n {
        for j in 1..n {
            let c = [angle(i, j), angle(i + 1, j), angle(i + 1, j + 1), angle(i, j + 1)];
            let w: f64 = (0..4).map(|k| wrap(c[(k + 1) % 4] - c[k])).sum();
            out.push(w / (4.0 * PI));
        }
    }
    out
}

/// Clusters of cells with non-zero winding, joined when they share a
/// corner. A `+1` core spread over neighbouring cells counts once; two
/// `+1/2` defects that have separated count twice.
pub fn locate_charged_defects(q: &QTensorField) -> Vec<ChargedDefect> {
    let grid = *q.grid();
    let charges = cell_charges(q);
    let m = grid.n_interior() as isize - 1;
    if m <= 0 {
        return Vec::new();
    }
    let at = |i: isize, j: isize| (i * m + j) as usize;
    let charged: Vec<bool> = charges.iter().map(|c| c.abs() > 0.25).collect();
    let mut seen = vec![false; charges.len()];
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if !charged[at(i, j)] || seen[at(i, j)] {
                continue;
            }
            seen[at(i, j)] = true;
            let mut stack = vec![(i, j)];
            let (mut sx, mut sy, mut total, mut cells) = (0.0, 0.0, 0.0, 0usize);
            while let Some((a, b)) = stack.pop() {
                // cell centre sits half a spacing beyond its lower-left node
                let x = grid.coord([a + 1, b + 1, 0]);
                sx += x[0] + 0.5 * grid.h();
                sy += x[1] + 0.5 * grid.h();
                total += charges[at(a, b)];
                cells += 1;
                for da in -1..=1 {
                    for db in -1..=1 {
                        let (u, v) = (a + da, b + db);
                        if (0..m).contains(&u) && (0..m).contains(&v) && charged[at(u, v)] && !seen[at(u, v)] {
                            seen[at(u, v)] = true;
                            stack.push((u, v));
                        }
                    }
                }
            }
            out.push(ChargedDefect {
                centroid: [sx / cells as f64, sy / cells as f64],
                charge: total,
                cells,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;
    use crate::Tensor;

    fn director_texture(n: usize, centres: &[([f64; 2], f64)]) -> QTensorField {
        let g = GridSpec::with_intervals(2, n, 2.0).unwrap();
        let mut q = QTensorField::zeros(g);
        for (idx, p) in g.interior_nodes() {
            let x = g.coord(idx);
            let th: f64 = centres
                .iter()
                .map(|(c, s)| s * (x[1] - c[1]).atan2(x[0] - c[0]))
                .sum();
            q.set_tensor(p, &Tensor::uniaxial(&[th.cos(), th.sin()]));
        }
        q
    }

    #[test]
    fn half_charges_are_resolved() {
        let q = director_texture(40, &[([0.71, 1.01], 0.5), ([1.31, 1.01], 0.5)]);
        let d = locate_charged_defects(&q);
        assert_eq!(d.len(), 2);
        for (found, want) in d.iter().zip([0.71, 1.31]) {
            assert!((found.charge - 0.5).abs() < 1e-12);
            assert!((found.centroid[0] - want).abs() < 0.05);
        }
        let minus = director_texture(40, &[([1.01, 0.99], -0.5)]);
        let d = locate_charged_defects(&minus);
        assert_eq!(d.len(), 1);
        assert!((d[0].charge + 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_director_has_no_charge() {
        let q = director_texture(20, &[]);
        assert!(locate_charged_defects(&q).is_empty());
        assert!(cell_charges(&q).iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn uniform_field_has_no_defects() {
        let g = GridSpec::with_intervals(2, 20, 1.0).unwrap();
        let mut f = ScalarField::zeros(g);
        f.fill(0.3);
        assert!(locate_defects(&f, DEFAULT_THRESHOLD).is_empty());
        assert!(locate_defects(&ScalarField::zeros(g), DEFAULT_THRESHOLD).is_empty());
    }

    #[test]
    fn seeded_disk_is_found() {
        let g = GridSpec::with_intervals(2, 40, 2.0).unwrap();
        let mut f = ScalarField::zeros(g);
        let c = [1.3, 0.6];
        for (idx, p) in g.real_nodes() {
            let x = g.coord(idx);
            let d = (x[0] - c[0]).hypot(x[1] - c[1]);
            f.set_value(p, if d < 0.15 { 0.01 } else { 1.0 });
        }
        let found = locate_defects(&f, DEFAULT_THRESHOLD);
        assert_eq!(found.len(), 1);
        assert!((found[0].centroid[0] - c[0]).abs() <= g.h());
        assert!((found[0].centroid[1] - c[1]).abs() <= g.h());
    }

    #[test]
    fn boundary_dips_are_ignored() {
        let g = GridSpec::with_intervals(2, 20, 1.0).unwrap();
        let mut f = ScalarField::zeros(g);
        for (idx, p) in g.real_nodes() {
            f.set_value(p, if idx[0] <= 2 { 0.0 } else { 1.0 });
        }
        assert!(locate_defects(&f, DEFAULT_THRESHOLD).is_empty());
    }
}
