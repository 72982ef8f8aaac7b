//! Benchmarks of the hot numerical kernels: the collocation residual and
//! Jacobian assembly, one Newton solve of the linearized system, and a
//! single dynamic rescaling step at production resolution.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use supercrit_core::numerics::chebyshev::{build_diff_matrices, build_grid};
use supercrit_core::profile::{assemble_jacobian, assemble_residual, ProblemParams};
use supercrit_core::simulator::{init_from_physical, SimConfig, Stepper};

fn profile_kernels(c: &mut Criterion) {
    let params = ProblemParams::new(3.0, 1.0).unwrap();
    let grid = build_grid(257, 200.0).unwrap();
    let mats = build_diff_matrices(&grid);
    let n = grid.n_points;
    let mut x = nalgebra::DVector::zeros(2 * n + 1);
    for i in 0..n {
        let xi = grid.nodes[i];
        x[i] = 1.885 / (1.0 + 0.3 * xi * xi);
        x[n + i] = -0.2 * xi / (1.0 + xi * xi);
    }
    x[2 * n] = 0.917;

    c.bench_function("profile_residual_n257", |b| {
        b.iter(|| assemble_residual(black_box(&x), &params, &grid, &mats))
    });
    c.bench_function("profile_jacobian_n257", |b| {
        b.iter(|| assemble_jacobian(black_box(&x), &params, &grid, &mats))
    });
    let jac = assemble_jacobian(&x, &params, &grid, &mats);
    let r = assemble_residual(&x, &params, &grid, &mats);
    c.bench_function("newton_linear_solve_n515", |b| {
        b.iter(|| jac.clone().lu().solve(black_box(&r)))
    });
}

fn simulator_kernels(c: &mut Criterion) {
    let params = ProblemParams::new(3.0, 1.0).unwrap();
    let config = SimConfig::defaults(params);
    let mut stepper = Stepper::new(config.clone()).unwrap();
    let mut state = init_from_physical(|r| 5.0 * (-r * r).exp(), &config).unwrap();
    stepper.bootstrap(&mut state).unwrap();

    c.bench_function("rescaling_step_n1000", |b| {
        b.iter(|| {
            stepper.step(black_box(&mut state)).unwrap();
            // keep the focusing bounded during long benchmark loops
            if state.ln_l < -40.0 {
                state.ln_l = -2.0;
            }
        })
    });

    let v: Vec<Complex64> = state.v.clone();
    c.bench_function("compute_a_n1000", |b| {
        b.iter(|| supercrit_core::simulator::compute_a(black_box(&v), &params, config.h))
    });
}

criterion_group!(benches, profile_kernels, simulator_kernels);
criterion_main!(benches);
