//! Criterion benchmarks for the market primitives and the full engine.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gridbroker_core::broker::base_price;
use gridbroker_core::neuro::{self, Genome, Topology};
use gridbroker_core::scenario::builtin;
use gridbroker_core::{run_simulation_opts, BrokerPolicy, SimOptions};

fn bench_base_price(c: &mut Criterion) {
    c.bench_function("base_price", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for p_s in [500.0, 2000.0, 4000.0, 8000.0] {
                acc += base_price(black_box(p_s), black_box(1500.0), 0.04, 0.29);
            }
            acc
        })
    });
}

fn bench_forward(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let layered = Topology::layered(2, 7);
    let layered_genome = Genome::random(&layered, &mut rng);
    let full = Topology::fully_connected(2, 7);
    let full_genome = Genome::random(&full, &mut rng);
    let inputs = [0.3, 0.5, 0.04, 0.29, 0.9, 0.7];

    c.bench_function("forward_layered_6_2_7", |b| {
        b.iter(|| neuro::forward(black_box(&layered_genome), &layered, black_box(&inputs)))
    });
    c.bench_function("forward_fully_connected_15", |b| {
        b.iter(|| neuro::forward(black_box(&full_genome), &full, black_box(&inputs)))
    });
}

fn bench_simulated_day(c: &mut Criterion) {
    let cfg = builtin::reference();
    let mut group = c.benchmark_group("simulated_day");
    group.sample_size(10);
    for (name, policy) in [
        ("optimistic", BrokerPolicy::Optimistic),
        ("pessimistic", BrokerPolicy::Pessimistic),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let opts = SimOptions { seed: Some(7), dilation: 1 };
                run_simulation_opts(black_box(&cfg), &policy, &opts).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_base_price, bench_forward, bench_simulated_day);
criterion_main!(benches);
