use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pfwillmore::willmore_ref::{curve_step, ClosedCurve};
use pfwillmore::{
    solve_heteroclinic, CurveFlowParams, GchSolver, PhaseState, Potential, ProfileGrid, SolverParams, Spectral,
    TimeScheme,
};
use pfwillmore_bench::circle_field;
use std::hint::black_box;

fn laplacian(c: &mut Criterion) {
    let mut g = c.benchmark_group("laplacian");
    for n in [128, 256, 512] {
        let (grid, u) = circle_field(n, 0.1);
        let spec = Spectral::new(grid);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| spec.laplacian(black_box(u))));
    }
    g.finish();
}

fn solver_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("solver_step_256");
    g.sample_size(10);
    let (grid, u) = circle_field(256, 0.1);
    let p = Potential::standard_quartic();
    let state = PhaseState::new(&grid, u, 0.1).unwrap();
    for (name, scheme, dt) in [
        ("stabilized-imex", TimeScheme::StabilizedImex, 1e-5),
        ("linearized-implicit", TimeScheme::LinearizedImplicit, 1e-3),
        ("implicit-euler", TimeScheme::ImplicitEuler, 1e-3),
    ] {
        let solver = GchSolver::new(grid, p, SolverParams::for_potential(&p, dt).with_scheme(scheme)).unwrap();
        g.bench_function(name, |b| b.iter(|| solver.step(black_box(&state)).unwrap()));
    }
    g.finish();
}

fn profile(c: &mut Criterion) {
    let p = Potential::standard_quartic();
    c.bench_function("heteroclinic_profile", |b| {
        b.iter(|| solve_heteroclinic(&p, ProfileGrid::new(20.0, 0.01).unwrap()).unwrap())
    });
}

fn curve(c: &mut Criterion) {
    let e = ClosedCurve::ellipse([0.0, 0.0], 2.0, 1.0, 512).unwrap();
    let params = CurveFlowParams::semi_implicit(1e-4);
    c.bench_function("curve_step_512", |b| b.iter(|| curve_step(black_box(&e), &params).unwrap()));
}

criterion_group!(benches, laplacian, solver_step, profile, curve);
criterion_main!(benches);
