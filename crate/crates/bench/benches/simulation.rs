use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qkd_core::postprocess::{error_correct, toeplitz_hash, ToeplitzSeed};
use qkd_core::protocol::{exact_qber_oracle, run, OracleOptions, Protocol, SessionConfig};
use qkd_core::quantum::MeasurementBasis;
use qkd_core::rng::Prng;
use qkd_core::states::{named_state, NamedState};
use qkd_core::EveStrategy;

fn protocol_rounds(c: &mut Criterion) {
    let mut group = c.benchmark_group("protocol_1000_rounds");
    let cases = [
        (Protocol::P1, EveStrategy::None, "p1_clean"),
        (Protocol::P2, EveStrategy::None, "p2_clean"),
        (
            Protocol::P2,
            EveStrategy::collective_cnot_default(),
            "p2_cnot",
        ),
        (Protocol::P3Controlled, EveStrategy::None, "p3_clean"),
        (
            Protocol::P3Controlled,
            EveStrategy::BellIntercept,
            "p3_bell",
        ),
    ];
    for (protocol, attack, name) in cases {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            let mut cfg = SessionConfig::new(protocol);
            cfg.rounds = 1000;
            cfg.session_batches = 1;
            cfg.attack = attack;
            cfg.abort_threshold = 0.99;
            cfg.seed = 1;
            b.iter(|| black_box(run(&cfg).unwrap()));
        });
    }
    group.finish();
}

fn exact_oracle(c: &mut Criterion) {
    c.bench_function("oracle_p3_bell_intercept", |b| {
        b.iter(|| {
            black_box(
                exact_qber_oracle(
                    Protocol::P3Controlled,
                    &EveStrategy::BellIntercept,
                    &OracleOptions::default(),
                )
                .unwrap(),
            )
        })
    });
}

fn distribution_oracle(c: &mut Criterion) {
    let reg = named_state(NamedState::TripletAligned);
    let mut probe = reg.clone();
    probe.adjoin_qubit('E', false).unwrap();
    c.bench_function("distribution_4_qubits", |b| {
        b.iter(|| {
            black_box(
                probe
                    .distribution(&[
                        ('A', MeasurementBasis::X),
                        ('B', MeasurementBasis::Z),
                        ('C', MeasurementBasis::X),
                        ('E', MeasurementBasis::Z),
                    ])
                    .unwrap(),
            )
        })
    });
}

fn toeplitz(c: &mut Criterion) {
    let mut rng = Prng::new(2);
    let n = 4096usize;
    let m = 2048usize;
    let seed = ToeplitzSeed {
        bits: (0..n + m - 1).map(|_| rng.next_bool()).collect(),
    };
    let key: Vec<bool> = (0..n).map(|_| rng.next_bool()).collect();
    c.bench_function("toeplitz_hash_4096_to_2048", |b| {
        b.iter(|| black_box(toeplitz_hash(&seed, &key, m)))
    });
}

fn correction(c: &mut Criterion) {
    let mut rng = Prng::new(3);
    let key: Vec<bool> = (0..1024).map(|_| rng.next_bool()).collect();
    let noisy: Vec<bool> = key.iter().map(|&b| b ^ (rng.next_f64() < 0.02)).collect();
    c.bench_function("error_correct_1024_at_2pct", |b| {
        b.iter(|| {
            let mut rng = Prng::new(4);
            black_box(error_correct(&key, &noisy, 16, &mut rng).unwrap())
        })
    });
}

criterion_group!(
    benches,
    protocol_rounds,
    exact_oracle,
    distribution_oracle,
    toeplitz,
    correction
);
criterion_main!(benches);
