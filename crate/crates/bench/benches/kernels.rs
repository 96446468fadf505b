use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use curvesolve::augmented::special_system;
use curvesolve::averaging::{closed_form_kernel, synthesize_kernel, Weight};
use curvesolve::diffop::builtin;
use curvesolve::fc_cert::{find_certificate, pstar_symbol};
use curvesolve::ode_kernel::{rough_kernel, Curve};
use curvesolve::solve_verify::apply_operator_s_with;
use curvesolve::solve_verify::polar::PolarRule;
use curvesolve_bench::{bump, ring};

fn certificates(c: &mut Criterion) {
    let mut g = c.benchmark_group("certificate_search");
    for (name, d) in [("divergence", 3), ("double_divergence", 3), ("symmetric_divergence", 3)] {
        let ps = pstar_symbol(&builtin(name, d).unwrap());
        g.bench_with_input(BenchmarkId::new(name, d), &ps, |b, ps| b.iter(|| find_certificate(black_box(ps), 6)));
    }
    g.finish();
}

fn kernel_evaluation(c: &mut Criterion) {
    let w = Weight::bogovskii(&[0.0, 0.0], 1.0, 8).unwrap();
    let sys = special_system("double_divergence", 2).unwrap();
    let closed = closed_form_kernel("double_divergence", &w, 2).unwrap();
    let synth = synthesize_kernel(&sys, &w).unwrap();
    let xs = ring(32);
    let y = [0.05, -0.02];
    let mut g = c.benchmark_group("kernel_eval_32pts");
    g.bench_function("closed_form", |b| b.iter(|| xs.iter().map(|x| closed.eval(x, &y).unwrap()[(0, 0)]).sum::<f64>()));
    g.bench_function("synthesized", |b| b.iter(|| xs.iter().map(|x| synth.eval(x, &y).unwrap()[(0, 0)]).sum::<f64>()));
    g.finish();
}

fn rough(c: &mut Criterion) {
    let sys = special_system("tracefree_double_divergence", 3).unwrap();
    c.bench_function("rough_kernel_segment_d3", |b| {
        b.iter(|| rough_kernel(&sys, &Curve::Segment, black_box(&[0.1, 0.2, 0.3]), &[0.9, -0.4, 0.2]).unwrap())
    });
}

fn polar_apply(c: &mut Criterion) {
    let w = Weight::bogovskii(&[0.0, 0.0], 1.0, 8).unwrap();
    let k = closed_form_kernel("divergence", &w, 2).unwrap();
    let f = bump(&[0.3, 0.1], 0.4);
    let mut g = c.benchmark_group("apply_s");
    for angular in [16usize, 32, 64] {
        let rule = PolarRule { angular, radial: 16, max_panel: 0.25 };
        g.bench_with_input(BenchmarkId::from_parameter(angular), &rule, |b, rule| {
            b.iter(|| apply_operator_s_with(&k, &f, black_box(&[0.2, -0.3]), *rule).unwrap())
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = certificates, kernel_evaluation, rough, polar_apply
}
criterion_main!(benches);
