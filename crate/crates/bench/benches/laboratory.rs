//! Criterion benchmarks over the laboratory's hot paths: Gram/GNS
//! construction, the heat-kernel character sum, Wick contraction, and the
//! Metropolis samplers.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;
use num_complex::Complex64;

use borchers_core::algebra::MatrixTestFunction;
use borchers_core::gns::{gns_construct, WordBasis};
use borchers_core::matrix_model::{
    eigenvalue_sample, gaussian_matrix_state, gaussian_moment_wick, mc_moments, MatrixModelSpec,
};
use borchers_core::ym2::{partition_function, SurfaceParams};
use borchers_core::SampledSpace;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid4() -> Arc<SampledSpace> {
    Arc::new(
        SampledSpace::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0.25; 4],
            vec![None],
        )
        .unwrap(),
    )
}

fn bench_gns(crit: &mut Criterion) {
    let space = grid4();
    let omega = gaussian_matrix_state(2, Arc::clone(&space)).unwrap();
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let gens = vec![
        MatrixTestFunction::constant(Arc::clone(&space), sx).unwrap(),
        MatrixTestFunction::delta_at(Arc::clone(&space), 1, sz).unwrap(),
    ];
    crit.bench_function("gns_construct_gaussian_mm_len2", |b| {
        b.iter(|| {
            let basis = WordBasis::new(gens.clone(), 2).unwrap();
            black_box(gns_construct(&omega, basis, 1e-10).unwrap())
        })
    });
}

fn bench_ym2(crit: &mut Criterion) {
    let params = SurfaceParams::from_tau(2, 1e-4, 2, 2_000).unwrap();
    crit.bench_function("partition_function_su2_genus2", |b| {
        b.iter(|| black_box(partition_function(&params).unwrap()))
    });
}

fn bench_wick(crit: &mut Criterion) {
    // Degree 6 at N = 3: 15 pairings contracted exactly.
    let word = [(0usize, 1usize), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)];
    crit.bench_function("wick_contraction_degree6", |b| {
        b.iter(|| black_box(gaussian_moment_wick(3, &word).unwrap()))
    });
}

fn bench_samplers(crit: &mut Criterion) {
    let lists = vec![vec![(0, 0), (0, 0)], vec![(0, 1), (1, 0)]];
    crit.bench_function("mc_moments_n2_1k", |b| {
        b.iter(|| {
            let spec = MatrixModelSpec::gaussian(2, 13);
            black_box(mc_moments(&spec, &lists, 1_000).unwrap())
        })
    });
    crit.bench_function("eigenvalue_sample_n10_1k", |b| {
        b.iter(|| {
            let spec = MatrixModelSpec::gaussian(10, 13);
            black_box(eigenvalue_sample(&spec, 1_000).unwrap())
        })
    });
}

criterion_group!(benches, bench_gns, bench_ym2, bench_wick, bench_samplers);
criterion_main!(benches);
