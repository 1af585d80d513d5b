use proptest::prelude::*;

use qtensor::experiments::{convergence_order, director, largest_eigenvalue};
use qtensor::fields::{alpha_h, inner_h, laplacian_h, read_dump, write_dump};
use qtensor::potential::{p_of, r_of};
use qtensor::verify;
use qtensor::{GridSpec, ModelParams, QTensorField, ScalarField, Tensor};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 32,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn dump_round_trip_is_exact(seed in any::<u64>(), dim in 2usize..=3, n in 1usize..6, t in 0.0..10.0f64) {
        let g = GridSpec::new(dim, n, [0.5, -1.0, 0.0], 1.5).unwrap();
        let mut rng = verify::rng(seed);
        let mut q = verify::random_stf_field(g, 3.0, &mut rng);
        q.zero_boundary();
        let path = std::env::temp_dir().join(format!("qtensor-prop-{seed}-{dim}-{n}.dat"));
        write_dump(&path, &q, "Q", t, &["seed".to_string()]).unwrap();
        let (header, back) = read_dump::<qtensor::fields::TensorKind>(&path).unwrap();
        std::fs::remove_file(&path).ok();
        prop_assert_eq!(header.time, t);
        prop_assert!(header.grid.matches(&g));
        prop_assert_eq!(q.max_abs_diff(&back), 0.0);
    }

    #[test]
    fn stencils_are_linear(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let g = GridSpec::new(3, 4, [0.0; 3], 1.0).unwrap();
        let mut rng = verify::rng(seed);
        let x: QTensorField = verify::random_dirichlet(g, &mut rng);
        let y: QTensorField = verify::random_dirichlet(g, &mut rng);
        let xy = QTensorField::lin_comb(a, &x, b, &y);
        for op in [alpha_h as fn(&QTensorField) -> QTensorField, laplacian_h] {
            let lhs = op(&xy);
            let rhs = QTensorField::lin_comb(a, &op(&x), b, &op(&y));
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * (1.0 + rhs.max_abs()));
        }
    }

    #[test]
    fn alpha_is_symmetric_trace_free_for_any_input(seed in any::<u64>(), dim in 2usize..=3) {
        let g = GridSpec::new(dim, 5, [0.0; 3], 1.0).unwrap();
        let mut rng = verify::rng(seed);
        // general, non-symmetric input
        let x: QTensorField = verify::random_field(g, &mut rng);
        let a = alpha_h(&x);
        prop_assert!(a.trace_drift() <= 1e-11 * (1.0 + a.max_abs()));
        prop_assert!(a.sym_drift() <= 1e-11 * (1.0 + a.max_abs()));
    }

    #[test]
    fn laplacian_is_self_adjoint(seed in any::<u64>()) {
        let g = GridSpec::new(2, 9, [0.0; 3], 2.0).unwrap();
        let mut rng = verify::rng(seed);
        let x: ScalarField = verify::random_dirichlet(g, &mut rng);
        let y: ScalarField = verify::random_dirichlet(g, &mut rng);
        let l = inner_h(&laplacian_h(&x), &y).unwrap();
        let r = inner_h(&x, &laplacian_h(&y)).unwrap();
        prop_assert!((l - r).abs() <= 1e-10 * (1.0 + l.abs()));
    }

    #[test]
    fn p_is_the_derivative_of_r(seed in any::<u64>(), dim in 2usize..=3, size in 0.0..3.0f64) {
        let prm = ModelParams::standard(dim);
        let mut rng = verify::rng(seed);
        let q = verify::random_stf(dim, size, &mut rng);
        let e = verify::random_stf_with_norm(dim, 1.0, &mut rng);
        let eps = 1e-5;
        let fd = (r_of(&(q.clone() + e.scale(eps)), &prm).unwrap() - r_of(&(q.clone() - e.scale(eps)), &prm).unwrap()) / (2.0 * eps);
        let exact = p_of(&q, &prm).unwrap().ddot(&e);
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "fd {} exact {}", fd, exact);
    }

    #[test]
    fn uniaxial_eigenpair(theta in 0.0..std::f64::consts::TAU, s in 0.01..5.0f64) {
        let n = [s * theta.cos(), s * theta.sin()];
        let t = Tensor::uniaxial(&n);
        prop_assert!(t.trace().abs() <= 1e-14 * s * s);
        prop_assert!((largest_eigenvalue(&t) - 0.5 * s * s).abs() <= 1e-12 * s * s);
        let d = director(&t).unwrap();
        let cos = (d[0] * n[0] + d[1] * n[1]).abs() / s;
        prop_assert!((cos - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn geometric_errors_give_their_order(p in 0.5..4.0f64, c in 1e-6..1e3f64) {
        let errors: Vec<f64> = (0..5).map(|k| c * 2f64.powf(-p * k as f64)).collect();
        for o in convergence_order(&errors).into_iter().skip(1) {
            prop_assert!((o.unwrap() - p).abs() <= 1e-9);
        }
    }
}
