use std::f64::consts::PI;

use super::*;
use crate::augmented::{cokernel_basis, special_system};
use crate::averaging::{b_eta, closed_form_kernel, synthesize_kernel, Weight};
use crate::diffop::builtin;

fn gaussian(d: usize, sigma: f64) -> TestFunction {
    let c = (2.0 * PI * sigma * sigma).powf(-(d as f64) / 2.0);
    TestFunction::scalar(ScalarTestFunction::gaussian(&vec![0.0; d], sigma, RealPoly::constant(d, c)))
}

fn dipole() -> TestFunction {
    let mut f = ScalarTestFunction::bump(&[0.3, 0.1], 0.35, 8, RealPoly::constant(2, 1.0));
    f.add_scaled(&ScalarTestFunction::bump(&[-0.3, 0.0], 0.35, 8, RealPoly::constant(2, 1.0)), -1.0);
    TestFunction::scalar(f)
}

#[test]
fn zero_data_gives_zero_solution() {
    let w = Weight::uniform_conic(2);
    let k = closed_form_kernel("divergence", &w, 2).unwrap();
    let u = apply_operator_s(&k, &TestFunction::zero(2, 1), &[0.5, 0.5], &QuadratureSpec::default()).unwrap();
    assert_eq!(u, vec![0.0, 0.0]);
}

#[test]
fn conic_divergence_of_gaussian_matches_newtonian_field_2d() {
    let sigma = 0.3;
    let k = closed_form_kernel("divergence", &Weight::uniform_conic(2), 2).unwrap();
    let f = gaussian(2, sigma);
    let quad = QuadratureSpec { angular: 16, radial: 16, ..Default::default() };
    for x in [[2.0, 0.0], [1.2, -1.6], [0.2, 0.1], [-0.5, 0.4]] {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let m = 1.0 - (-r2 / (2.0 * sigma * sigma)).exp();
        let u = apply_operator_s(&k, &f, &x, &quad).unwrap();
        for i in 0..2 {
            let exact = x[i] * m / (2.0 * PI * r2);
            assert!((u[i] - exact).abs() < 1e-9, "{x:?} {u:?} {exact}");
        }
    }
}

#[test]
fn conic_divergence_of_gaussian_matches_newtonian_field_3d() {
    let sigma = 0.3;
    let k = closed_form_kernel("divergence", &Weight::uniform_conic(3), 3).unwrap();
    let f = gaussian(3, sigma);
    let rule = PolarRule { angular: 40, radial: 16, max_panel: 0.3 };
    for x in [[1.0, 1.0, 1.0], [0.2, -0.1, 0.3]] {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = r / (sigma * 2f64.sqrt());
        let m = statrs::function::erf::erf(s) - (2.0 / PI).sqrt() * (r / sigma) * (-s * s).exp();
        let u = apply_operator_s_with(&k, &f, &x, rule).unwrap();
        for i in 0..3 {
            let exact = x[i] * m / (4.0 * PI * r.powi(3));
            assert!((u[i] - exact).abs() < 1e-8, "{x:?} {u:?} {exact}");
        }
    }
}

#[test]
fn bogovskii_divergence_solves_mean_zero_data() {
    let w = Weight::bogovskii(&[0.0, 0.0], 1.0, 8).unwrap();
    let k = closed_form_kernel("divergence", &w, 2).unwrap();
    let p = builtin("divergence", 2).unwrap();
    let f = dipole();
    let rule = PolarRule { angular: 48, radial: 16, max_panel: 0.2 };
    for x in [[0.3, 0.1], [0.0, 0.05], [-0.4, 0.2], [0.5, -0.5]] {
        let du = apply_fd(&p, &|pt: &[f64]| apply_operator_s_with(&k, &f, pt, rule), &x, 0.02).unwrap();
        assert!((du[0] - f.eval(&x)[0]).abs() < 1e-5, "{x:?} {du:?}");
    }
}

#[test]
fn green_identity_double_divergence_bogovskii() {
    let w = Weight::bogovskii(&[0.0, 0.0], 1.0, 8).unwrap();
    let sys = special_system("double_divergence", 2).unwrap();
    let k = closed_form_kernel("double_divergence", &w, 2).unwrap();
    let b = b_eta(&sys, &w).unwrap();
    let mut poly = RealPoly::constant(2, 1.0);
    poly.add_term(MultiIndex(vec![1, 0]), 0.5);
    let phi = TestFunction::scalar(ScalarTestFunction::gaussian(&[0.2, -0.1], 0.5, poly));
    let quad = QuadratureSpec { angular: 8, radial: 12, patch_radius: 0.4, ..Default::default() };
    for y in [[0.1, 0.2], [-0.6, 0.3], [1.4, 0.0]] {
        let study = greens_convergence(&k, &sys.pstar, Some(&b), &phi, &y, &quad, 4).unwrap();
        assert!(study.finest() < 1e-6, "{y:?} {study:?}");
        assert!(study.converges(4.0, 1e-9), "{y:?} {study:?}");
    }
}

#[test]
fn green_identity_synthesized_killing_conic() {
    let w = Weight::conic(&[1.0, 0.3], 1.5, 8).unwrap();
    let sys = special_system("symmetric_divergence", 2).unwrap();
    let k = synthesize_kernel(&sys, &w).unwrap();
    let phi = TestFunction::from_components(
        2,
        vec![
            ScalarTestFunction::gaussian(&[0.0, 0.0], 0.5, RealPoly::constant(2, 1.0)),
            ScalarTestFunction::gaussian(&[0.1, 0.0], 0.4, RealPoly::coordinate(2, 0)),
        ],
    );
    let quad = QuadratureSpec { angular: 64, radial: 16, patch_radius: 0.3, ..Default::default() };
    let r = greens_identity_residual(&k, &sys.pstar, None, &phi, &[0.1, -0.2], &quad);
    assert!(r.unwrap() < 1e-6);
}

#[test]
fn cokernel_projection_cancels_moments() {
    let basis = cokernel_basis("double_divergence", 2).unwrap();
    assert_eq!(basis.len(), 3);
    let f = TestFunction::scalar(ScalarTestFunction::bump(&[0.2, -0.3], 0.5, 8, RealPoly::constant(2, 1.0)));
    let zs: Vec<Vec<RealPoly>> =
        basis.elements.iter().map(|z| z.iter().map(|p| p.to_real().unwrap()).collect()).collect();
    let before: Vec<f64> = zs.iter().map(|z| cokernel_moment(&f, z, &[1.0]).unwrap()).collect();
    assert!(before[0].abs() > 1e-2);
    let g = project_out_cokernel(&f, &basis, &[1.0], &[0.0, 0.1], 0.6).unwrap();
    for z in &zs {
        assert!(cokernel_moment(&g, z, &[1.0]).unwrap().abs() < 1e-11);
    }
    let again = project_out_cokernel(&g, &basis, &[1.0], &[0.0, 0.1], 0.6).unwrap();
    for x in [[0.0, 0.0], [0.2, -0.3], [0.3, 0.4]] {
        assert!((again.eval(&x)[0] - g.eval(&x)[0]).abs() < 1e-10);
    }
}

#[test]
fn divergence_projection_subtracts_mass() {
    let basis = cokernel_basis("divergence", 2).unwrap();
    let f = TestFunction::scalar(ScalarTestFunction::bump(&[0.5, 0.0], 0.3, 8, RealPoly::constant(2, 2.0)));
    let g = project_out_cokernel(&f, &basis, &[1.0], &[-0.5, 0.0], 0.3).unwrap();
    // equal radii: the correction is exactly the translated bump
    assert!((g.eval(&[-0.5, 0.0])[0] + 2.0).abs() < 1e-12);
    assert!((g.eval(&[0.5, 0.0])[0] - 2.0).abs() < 1e-12);
}

#[test]
fn conic_solution_vanishes_outside_cone() {
    let w = Weight::conic(&[1.0, 0.0], 0.4, 8).unwrap();
    let k = closed_form_kernel("divergence", &w, 2).unwrap();
    let f = TestFunction::scalar(ScalarTestFunction::bump(&[0.0, 0.0], 1.0, 8, RealPoly::constant(2, 1.0)));
    let rule = PolarRule { angular: 32, radial: 12, max_panel: 0.5 };
    let samples: Vec<Vec<f64>> =
        (0..40).map(|i| 2.5 * i as f64 / 40.0 * 2.0 * PI).map(|a| vec![2.5 * a.cos(), 2.5 * a.sin()]).collect();
    let region = |x: &[f64]| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let angle = (x[0] / r).acos();
        r <= 1.0 || angle <= 0.4 + (1.0 / r).asin() + 0.05
    };
    let rep = verify_support("conic support", |x| apply_operator_s_with(&k, &f, x, rule).unwrap(), region, &samples, 1e-10);
    assert!(rep.samples > 10);
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn residual_law_for_double_divergence() {
    let w = Weight::bogovskii(&[0.0, 0.0], 1.0, 8).unwrap();
    let sys = special_system("double_divergence", 2).unwrap();
    let k = closed_form_kernel("double_divergence", &w, 2).unwrap();
    let b = b_eta(&sys, &w).unwrap();
    let p = builtin("double_divergence", 2).unwrap();
    let f = TestFunction::scalar(ScalarTestFunction::bump(&[0.2, 0.1], 0.5, 8, RealPoly::constant(2, 1.0)));
    let grid = vec![vec![0.2, 0.1], vec![-0.3, 0.4], vec![0.7, -0.2], vec![1.3, 0.0]];
    let rule = PolarRule { angular: 48, radial: 16, max_panel: 0.25 };
    let rep = residual_matches_beta(&k, &p, Some(&b), &f, &grid, 0.025, rule, 1e-4).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn fd_stencils_are_exact_on_quartics() {
    let p = builtin("double_divergence", 2).unwrap();
    // h = (x1⁴, x1²x2², x2⁴ + x1x2) in pair storage (11, 12, 22)
    let u = |x: &[f64]| -> Result<Vec<f64>> {
        Ok(vec![x[0].powi(4), x[0] * x[0] * x[1] * x[1], x[1].powi(4) + x[0] * x[1]])
    };
    let x = [0.3, -0.7];
    let v = apply_fd(&p, &u, &x, 0.1).unwrap()[0];
    // ∂11 h11 + 2 ∂12 h12 + ∂22 h22
    let exact = 12.0 * x[0] * x[0] + 2.0 * 4.0 * x[0] * x[1] + 12.0 * x[1] * x[1];
    assert!((v - exact).abs() < 1e-10, "{v} {exact}");
}

#[test]
fn report_passes_iff_all_residuals_within_tolerance() {
    let r = VerificationReport::from_residuals("t", "o", &[1e-3, -2e-3], 2e-3);
    assert!(r.passed);
    assert!((r.l2_residual - (2.5e-6f64).sqrt()).abs() < 1e-15);
    assert!(!VerificationReport::from_residuals("t", "o", &[3e-3], 2e-3).passed);
}
