use rayon::prelude::*;

use super::{GridSpec, QTensorField, ScalarField};
use crate::potential::{r_of, ModelParams};
use crate::{Error, Result, Tensor};

/// 3-point Gauss–Legendre abscissae and weights on `[-1, 1]`.
const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

const STRUCTURE_TOL: f64 = 1e-12;

/// Tensor-product 3-point Gauss average of `f` over the `h`-cube centered at
/// `centre`.
pub fn cell_average<F>(grid: &GridSpec, centre: [f64; 3], mut f: F) -> f64
where
    F: FnMut([f64; 3]) -> f64,
{
    let half = 0.5 * grid.h();
    let mut acc = 0.0;
    let third = if grid.dim() == 3 { &GAUSS3[..] } else { &GAUSS3[1..2] };
    for &(xa, wa) in &GAUSS3 {
        for &(xb, wb) in &GAUSS3 {
            for &(xc, wc) in third {
                let mut x = centre;
                x[0] += half * xa;
                x[1] += half * xb;
                let mut w = 0.25 * wa * wb;
                if grid.dim() == 3 {
                    x[2] += half * xc;
                    w *= 0.5 * wc;
                }
                acc += w * f(x);
            }
        }
    }
    acc
}

fn check_structure(q: &Tensor, x: [f64; 3]) -> Result<()> {
    let scale = q.frobenius().max(1.0);
    let (asym, trace) = (q.asymmetry(), q.trace().abs());
    if asym > STRUCTURE_TOL * scale || trace > STRUCTURE_TOL * scale {
        return Err(Error::InitialData {
            x: x[0],
            y: x[1],
            z: x[2],
            asym,
            trace,
        });
    }
    Ok(())
}

/// Cell-average projection of continuous initial data.
///
/// Interior nodes receive the averages of `Q₀` and of `r(Q₀(·))` over their
/// cell; boundary and ghost nodes get `Q = 0` and `r = r(0) = √(2A₀)`.
pub fn project_initial<F>(grid: &GridSpec, params: &ModelParams, q0: F) -> Result<(QTensorField, ScalarField)>
where
    F: Fn([f64; 3]) -> Tensor + Sync,
{
    let d = grid.dim();
    if params.dim != d {
        return Err(Error::Argument(format!(
            "model dimension {} does not match grid dimension {d}",
            params.dim
        )));
    }
    let nodes: Vec<([isize; 3], usize)> = grid.interior_nodes().collect();
    let values: Vec<(usize, Tensor, f64)> = nodes
        .par_iter()
        .map(|&(idx, p)| {
            let centre = grid.coord(idx);
            let mut q_avg = Tensor::zeros(d);
            let mut r_avg = 0.0;
            let mut failure = None;
            let mut acc_r = |x: [f64; 3]| -> f64 {
                let q = q0(x);
                if failure.is_none() {
                    if let Err(e) = check_structure(&q, x) {
                        failure = Some(e);
                    }
                }
                match r_of(&q, params) {
                    Ok(r) => r,
                    Err(e) => {
                        failure.get_or_insert(e.at_node(idx));
                        f64::NAN
                    }
                }
            };
            r_avg += cell_average(grid, centre, &mut acc_r);
            if let Some(e) = failure {
                return Err(e);
            }
            for i in 0..d {
                for j in 0..d {
                    let v = cell_average(grid, centre, |x| q0(x).get(i, j));
                    q_avg.set(i, j, v);
                }
            }
            Ok((p, q_avg, r_avg))
        })
        .collect::<Result<_>>()?;

    let mut q = QTensorField::zeros(*grid);
    let mut r = ScalarField::zeros(*grid);
    r.fill(params.r_isotropic());
    for (p, t, rv) in values {
        q.set_tensor(p, &t);
        r.set_value(p, rv);
    }
    Ok((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::standard(2)
    }

    #[test]
    fn zero_data_gives_isotropic_r() {
        let g = GridSpec::with_intervals(2, 8, 2.0).unwrap();
        let (q, r) = project_initial(&g, &params(), |_| Tensor::zeros(2)).unwrap();
        assert!(q.is_zero());
        let r0 = (1000.0f64).sqrt();
        for (_, p) in g.real_nodes() {
            assert!((r.value(p) - r0).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_data_is_reproduced() {
        let g = GridSpec::with_intervals(3, 4, 1.0).unwrap();
        let mut p3 = ModelParams::standard(3);
        p3.l1 = 1.0;
        let t = Tensor::diag(&[0.2, 0.1, -0.3]);
        let (q, _) = project_initial(&g, &p3, |_| t).unwrap();
        for (_, p) in g.interior_nodes() {
            assert!((q.tensor(p) - t).frobenius() < 1e-15);
        }
        assert_eq!(q.boundary_max_abs(), 0.0);
    }

    #[test]
    fn gauss_rule_is_exact_for_quintics() {
        let g = GridSpec::with_intervals(2, 4, 1.0).unwrap();
        let centre = [0.5, 0.25, 0.0];
        let h = g.h();
        // average of x^4 over [c − h/2, c + h/2]
        let avg = cell_average(&g, centre, |x| x[0].powi(4));
        let (a, b) = (centre[0] - h / 2.0, centre[0] + h / 2.0);
        let exact = (b.powi(5) - a.powi(5)) / (5.0 * h);
        assert!((avg - exact).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_symmetric_data() {
        let g = GridSpec::with_intervals(2, 4, 1.0).unwrap();
        let bad = Tensor::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            project_initial(&g, &params(), |_| bad),
            Err(Error::InitialData { .. })
        ));
        let traced = Tensor::diag(&[1.0, 1.0]);
        assert!(project_initial(&g, &params(), |_| traced).is_err());
    }
}
