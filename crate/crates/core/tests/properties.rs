use proptest::prelude::*;

use curvesolve::augmented::{cokernel_basis, special_system};
use curvesolve::averaging::{closed_form_kernel, Weight};
use curvesolve::diffop::{builtin, ScalarTestFunction, TestFunction, ZOO};
use curvesolve::multipoly::RealPoly;
use curvesolve::ode_kernel::{fundamental_matrix, rough_kernel, Curve};
use curvesolve::solve_verify::polar::PolarRule;
use curvesolve::solve_verify::{apply_operator_s_with, cokernel_moment, project_out_cokernel, VerificationReport};

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d)
}

fn bump(c: &[f64], r: f64, amp: f64) -> TestFunction {
    TestFunction::scalar(ScalarTestFunction::bump(c, r, 8, RealPoly::constant(c.len(), amp)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fundamental_matrix_cocycle(y in point(3), y1 in point(3), a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let s = special_system("tracefree_double_divergence", 3).unwrap();
        let p1 = fundamental_matrix(&s, &y, &y1, a, b).unwrap();
        let p2 = fundamental_matrix(&s, &y, &y1, b, c).unwrap();
        let p3 = fundamental_matrix(&s, &y, &y1, a, c).unwrap();
        prop_assert!((p1 * p2 - p3).amax() < 1e-11);
    }

    #[test]
    fn adjoint_is_an_involution(k in 0usize..ZOO.len()) {
        let (name, min) = ZOO[k];
        let d = min.max(3);
        let p = builtin(name, d).unwrap();
        let back = p.adjoint().adjoint();
        prop_assert_eq!(back.terms().count(), p.terms().count());
        for (a, j, kk, c) in p.terms() {
            prop_assert_eq!(&back.coeff(a, j, kk), c);
        }
    }

    #[test]
    fn rough_kernel_reproduces_gaussians(y in point(2), y1 in point(2), cx in -0.5f64..0.5, sigma in 0.3f64..0.9) {
        prop_assume!((y[0] - y1[0]).hypot(y[1] - y1[1]) > 1e-3);
        let s = special_system("double_divergence", 2).unwrap();
        let f = ScalarTestFunction::gaussian(&[cx, 0.1], sigma, RealPoly::constant(2, 1.0).add(&RealPoly::coordinate(2, 1)));
        let k = rough_kernel(&s, &Curve::Segment, &y, &y1).unwrap();
        let got = k.reproduce(&TestFunction::scalar(f.clone()), 1e-12).unwrap();
        prop_assert!((got[0] - f.eval(&y)).abs() < 1e-9);
    }

    #[test]
    fn conic_solution_is_translation_covariant(x in point(2), a in point(2)) {
        let k = closed_form_kernel("divergence", &Weight::uniform_conic(2), 2).unwrap();
        let rule = PolarRule { angular: 24, radial: 12, max_panel: 0.5 };
        let f = bump(&[0.1, -0.2], 0.6, 1.0);
        let g = bump(&[0.1 + a[0], -0.2 + a[1]], 0.6, 1.0);
        let xa = [x[0] + a[0], x[1] + a[1]];
        let u = apply_operator_s_with(&k, &f, &x, rule).unwrap();
        let v = apply_operator_s_with(&k, &g, &xa, rule).unwrap();
        for i in 0..2 {
            prop_assert!((u[i] - v[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn solution_operator_is_linear(x in point(2), s in -2.0f64..2.0) {
        let w = Weight::bogovskii(&[0.0, 0.0], 1.0, 8).unwrap();
        let k = closed_form_kernel("double_divergence", &w, 2).unwrap();
        let rule = PolarRule { angular: 16, radial: 12, max_panel: 0.5 };
        let f = bump(&[0.3, 0.0], 0.4, 1.0);
        let g = bump(&[-0.2, 0.3], 0.5, 2.0);
        let mut h = f.clone();
        h.add_scaled(&g, s);
        let uf = apply_operator_s_with(&k, &f, &x, rule).unwrap();
        let ug = apply_operator_s_with(&k, &g, &x, rule).unwrap();
        let uh = apply_operator_s_with(&k, &h, &x, rule).unwrap();
        for i in 0..uh.len() {
            prop_assert!((uh[i] - uf[i] - s * ug[i]).abs() < 1e-12 * (1.0 + uh[i].abs()));
        }
    }

    #[test]
    fn conic_kernel_is_homogeneous(z in point(2), lam in 0.1f64..10.0) {
        prop_assume!(z[0].hypot(z[1]) > 1e-2);
        let k = closed_form_kernel("double_divergence", &Weight::conic(&[1.0, 0.0], 2.0, 8).unwrap(), 2).unwrap();
        let y = [0.3, 0.4];
        let a = k.eval_z(&z, &y);
        let zl: Vec<f64> = z.iter().map(|v| lam * v).collect();
        // double divergence: m = 2, so K is homogeneous of degree 2 − d = 0
        let b = k.eval_z(&zl, &y);
        prop_assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn projected_data_has_vanishing_moments(c in point(2), r in 0.2f64..0.8, amp in 0.1f64..3.0) {
        let basis = cokernel_basis("tracefree_double_divergence", 2).unwrap();
        let f = bump(&c, r, amp);
        let g = project_out_cokernel(&f, &basis, &[1.0], &[0.0, 0.0], 1.0).unwrap();
        for z in &basis.elements {
            let zr: Vec<RealPoly> = z.iter().map(|p| p.to_real().unwrap()).collect();
            prop_assert!(cokernel_moment(&g, &zr, &[1.0]).unwrap().abs() < 1e-11 * (1.0 + amp));
        }
    }

    #[test]
    fn report_passes_iff_every_residual_is_within_tolerance(res in prop::collection::vec(-1.0f64..1.0, 0..20), tol in 0.0f64..1.0) {
        let r = VerificationReport::from_residuals("p", "o", &res, tol);
        prop_assert_eq!(r.passed, res.iter().all(|v| v.abs() <= tol));
    }
}
