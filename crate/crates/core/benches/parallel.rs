use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qdc::analysis::{quenched_capacity, sweep, Problem, QuenchConfig, SweepAxis};
use qdc::capacity::{EncodingStrategy, PartyLayout};
use qdc::channels::{ChannelKind, ChannelSpec, DrawPolicy};
use qdc::exec::Execution;
use qdc::states::ResourceState;
use std::f64::consts::FRAC_1_SQRT_2;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn quench(c: &mut Criterion) {
    let state = ResourceState::Gghz { n_qubits: 4, x: FRAC_1_SQRT_2 };
    let layout = PartyLayout::one_receiver(3).unwrap();
    let spec = ChannelSpec::random(ChannelKind::Depolarizing, 0.5, 0.05, 0.7, DrawPolicy::IndependentPerQubit).unwrap();
    let mut g = c.benchmark_group("quench");
    g.sample_size(10);
    for (name, execution) in MODES {
        let qc = QuenchConfig { realizations: 400, execution, ..QuenchConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &qc, |b, qc| b.iter(|| quenched_capacity(&state, &layout, &spec, qc).unwrap()));
    }
    g.finish();
}

fn p_sweep(c: &mut Criterion) {
    let base = Problem::new(
        ResourceState::WUniform { n_qubits: 3 },
        PartyLayout::one_receiver(2).unwrap(),
        ChannelSpec::dephasing(0.5, 0.0).unwrap(),
        EncodingStrategy::Identity,
    )
    .unwrap();
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.01).collect();
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (name, execution) in MODES {
        g.bench_function(name, |b| b.iter(|| sweep(&base, SweepAxis::P, &grid, None, execution).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, quench, p_sweep);
criterion_main!(benches);
