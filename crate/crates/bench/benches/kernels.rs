use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ris_crb::fim::{fim_exact, fim_expected, trial_omegas, RisMode};
use ris_crb::spectrum::density::{density_curve, GridSpec};
use ris_crb::spectrum::empirical::{spectral_scenario, spectrum_for};
use ris_crb::spectrum::stieltjes::stieltjes;
use ris_crb::{Complex64, RisDistribution, Scenario, SignalModel, SpectralModel};

fn scenario(n: usize) -> Scenario {
    Scenario {
        thetas: vec![1.1, 0.4, -2.0],
        phis: vec![0.7, 1.5, -1.9, 2.6, -0.1],
        n_elements: n,
        n_slots: 50,
        powers: vec![1.0; 3],
        noise_power: 1.0,
        signal_model: SignalModel::UncorrelatedDiagonal,
        ris: RisDistribution::uniform_phase(0.0, PI),
    }
}

fn fisher(c: &mut Criterion) {
    let mut group = c.benchmark_group("fim");
    for n in [64, 256, 1024] {
        let s = scenario(n);
        let omegas = trial_omegas(&s, 1, 0, RisMode::PerSlot);
        let signals = s.signals(1);
        group.bench_with_input(BenchmarkId::new("exact", n), &n, |b, _| b.iter(|| fim_exact(black_box(&s), &omegas, &signals)));
        group.bench_with_input(BenchmarkId::new("expected", n), &n, |b, _| b.iter(|| fim_expected(black_box(&s))));
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let models = [
        ("constant-modulus", SpectralModel::constant_modulus(0.3, 0.35)),
        ("discrete-amplitude", SpectralModel::discrete_amplitude(0.3, 0.35, 1.0, 3.0, 0.5)),
    ];
    let mut group = c.benchmark_group("stieltjes");
    for (name, model) in &models {
        let z = Complex64::new(0.5 * model.mean_eigenvalue(), 1e-6);
        group.bench_function(*name, |b| b.iter(|| stieltjes(black_box(z), model)));
    }
    group.finish();

    let mut group = c.benchmark_group("density_curve");
    group.sample_size(10);
    for (name, model) in &models {
        let grid = GridSpec::Auto { points: 501 };
        group.bench_function(*name, |b| b.iter(|| density_curve(model, &grid, 1e-6)));
    }
    group.finish();

    let mut group = c.benchmark_group("spectrum_for");
    group.sample_size(10);
    for n in [200, 500] {
        let s = spectral_scenario(&models[0].1, n).expect("valid model");
        let omega = trial_omegas(&s, 1, 0, RisMode::Fixed).swap_remove(0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| spectrum_for(&s, &omega)));
    }
    group.finish();
}

criterion_group!(benches, fisher, spectral);
criterion_main!(benches);
