use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use uhlmann_bench::spin_one_targets;
use uhlmann_core::basisenc::{build_uhlmann_circuit, CircuitOptions, Method};
use uhlmann_core::circuit::{simulate_density, simulate_statevector};
use uhlmann_core::experiment::epsilon_sweep;
use uhlmann_core::noise::{build_noise_model, eagle_like};
use uhlmann_core::synth::{approx_synthesize, qsd_decompose_with, transpile, QsdOptions};
use uhlmann_core::{GateSet, Spin, SpinParams, SynthesisConfig};

fn exact(c: &mut Criterion) {
    let [_, ua] = spin_one_targets(0.4);
    let mut g = c.benchmark_group("qsd");
    g.bench_function("naive", |b| b.iter(|| qsd_decompose_with(black_box(&ua), QsdOptions::naive())));
    g.bench_function("optimized", |b| {
        b.iter(|| qsd_decompose_with(black_box(&ua), QsdOptions::optimized()))
    });
    g.finish();
}

fn approximate(c: &mut Criterion) {
    let [_, ua] = spin_one_targets(0.4);
    let mut g = c.benchmark_group("approx");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for eps in [1e-3, 1e-8] {
        let cfg = SynthesisConfig::with_epsilon(eps);
        g.bench_with_input(BenchmarkId::from_parameter(eps), &cfg, |b, cfg| {
            b.iter(|| approx_synthesize(black_box(&ua), cfg))
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let params = SpinParams::unit(Spin::ONE);
    let opts = CircuitOptions {
        method: Method::Naive,
        ..CircuitOptions::default()
    };
    let circ = build_uhlmann_circuit(&params, 0.4, &opts).expect("circuit").x;
    let isa = transpile(&circ, GateSet::Eagle).expect("transpile");
    let model = build_noise_model(&eagle_like(), GateSet::Eagle).expect("model");
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("statevector", |b| b.iter(|| simulate_statevector(black_box(&isa.without_measurements()))));
    g.bench_function("density_eagle", |b| b.iter(|| simulate_density(black_box(&isa.without_measurements()), Some(&model))));
    g.finish();
}

/// Process-block gate counts over ε, printed once; the timing covers one full sweep.
fn epsilon_trend(c: &mut Criterion) {
    let params = SpinParams::unit(Spin::ONE);
    let temps = [0.2, 0.4, 0.6];
    let epsilons = [1e-3, 1e-5, 1e-8, 1e-10, 1e-15, 1e-20];
    let rows = epsilon_sweep(&params, &temps, &epsilons, GateSet::Eagle, SynthesisConfig::default())
        .expect("epsilon sweep");
    for r in &rows {
        println!(
            "epsilon {:>7.0e}: {:>6.1} process gates, {:>5.1} two-qubit, max distance {:.1e}, {} unconverged",
            r.epsilon, r.process_gates, r.two_qubit_gates, r.max_distance, r.unconverged
        );
    }
    let mut g = c.benchmark_group("epsilon_sweep");
    g.sample_size(10).measurement_time(Duration::from_secs(60));
    g.bench_function("coarse", |b| {
        b.iter(|| epsilon_sweep(&params, &temps, &epsilons[..4], GateSet::Eagle, SynthesisConfig::default()))
    });
    g.finish();
}

criterion_group!(benches, exact, approximate, simulation, epsilon_trend);
criterion_main!(benches);
