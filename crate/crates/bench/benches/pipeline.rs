use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use magnon_bench::{power_law, seven_ion_couplings, seven_ion_setup};
use magnon_core::analysis::fit_alpha_dispersion;
use magnon_core::bounds::{lr_bound_bessel, lr_bound_series};
use magnon_core::dynamics::{build_hamiltonian, evolve_with, prepare_state, EvolveOptions, Method, Model, QuenchSpec};
use magnon_core::entanglement::{bootstrap, measure_all_bases, reduced_density_matrix, tomography_reconstruct, Statistic, Subsystem};
use magnon_core::ionchain::{couplings_from_config, equilibrium_positions};
use magnon_core::magnon::diagonalize_magnons;

fn ionchain(c: &mut Criterion) {
    let mut g = c.benchmark_group("ionchain");
    for n in [7, 15, 30] {
        g.bench_with_input(BenchmarkId::new("equilibrium_positions", n), &n, |b, &n| b.iter(|| equilibrium_positions(black_box(n))));
    }
    let (trap, beam) = seven_ion_setup();
    g.bench_function("couplings_from_config/7", |b| b.iter(|| couplings_from_config(black_box(&trap), black_box(&beam))));
    g.finish();
}

fn magnons(c: &mut Criterion) {
    let j = power_law(15, 1.07);
    c.bench_function("magnon/diagonalize/15", |b| b.iter(|| diagonalize_magnons(black_box(&j))));
    let d = diagonalize_magnons(&seven_ion_couplings()).dispersion();
    c.bench_function("analysis/fit_alpha_dispersion/7", |b| b.iter(|| fit_alpha_dispersion(black_box(&d), 7)));
}

fn dynamics(c: &mut Criterion) {
    let mut g = c.benchmark_group("dynamics");
    g.sample_size(10);
    let times: Vec<f64> = (1..=20).map(|k| k as f64 * 2e-4).collect();
    for (n, method) in [(10, Method::Spectral), (10, Method::Krylov), (14, Method::Krylov)] {
        let j = power_law(n, 1.36);
        let field = 50.0 * j.max_abs();
        let h = build_hamiltonian(&j, field, Model::Ising).unwrap();
        let psi = prepare_state(&QuenchSpec::local([n / 2]), n).unwrap();
        let opts = EvolveOptions { method, ..EvolveOptions::default() };
        g.bench_function(format!("ising_{method:?}/{n}").to_lowercase(), |b| b.iter(|| evolve_with(&psi, &h, &times, &opts)));
    }
    g.finish();
}

fn bounds(c: &mut Criterion) {
    c.bench_function("bounds/bessel_grid", |b| {
        b.iter(|| {
            (0..=10u64).flat_map(|d| (0..=16).map(move |k| lr_bound_bessel(d, k as f64 * 0.125, 1.0).unwrap())).sum::<f64>()
        })
    });
    c.bench_function("bounds/series_d3_m60", |b| b.iter(|| lr_bound_series(3, black_box(0.25), 1.0, 60, 1e-12)));
}

fn tomography(c: &mut Criterion) {
    let j = seven_ion_couplings();
    let h = build_hamiltonian(&j, 0.0, Model::Xy).unwrap();
    let psi = prepare_state(&QuenchSpec::local([3]), 7).unwrap();
    let state = evolve_with(&psi, &h, &[9e-3], &EvolveOptions::default()).unwrap().states.remove(0);
    let rho = reduced_density_matrix(&state, &[2, 4]).unwrap();
    let records = measure_all_bases(&rho, 1000, 1).unwrap();
    c.bench_function("tomography/reconstruct", |b| b.iter(|| tomography_reconstruct(black_box(&records), Subsystem::Pair(2, 4))));
    let mut g = c.benchmark_group("tomography");
    g.sample_size(10);
    g.bench_function("bootstrap_concurrence/200", |b| b.iter(|| bootstrap(&records, 200, &Statistic::Concurrence, 7)));
    g.finish();
}

criterion_group!(benches, ionchain, magnons, dynamics, bounds, tomography);
criterion_main!(benches);
