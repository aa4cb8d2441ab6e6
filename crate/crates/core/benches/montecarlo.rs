//! Parallel vs sequential trial loops.
//!
//! `sequential` is a plain loop over the same per-trial kernel; `rayon/N`
//! runs the library engine on an N-worker pool. Build with
//! `--no-default-features` to time the engine's own sequential fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use relaysim_core::channel::SystemConfig;
use relaysim_core::montecarlo::{
    draw_link_snrs_with, run_ber_point, run_outage_point, strategy_post_snr, BerOptions,
};
use relaysim_core::numerics::RngStream;
use relaysim_core::oracle::closed_form_consistency;
use relaysim_core::parallel::with_threads;
use relaysim_core::Strategy;

const OUTAGE_TRIALS: u64 = 200_000;
const BER_TRIALS: u64 = 20_000;

fn thread_counts() -> Vec<usize> {
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut counts = vec![1];
    if max > 1 {
        counts.push(max);
    }
    counts
}

fn outage(c: &mut Criterion) {
    let cfg = SystemConfig::symmetric(2, 1.0);
    let mut group = c.benchmark_group("outage_mmse_2x2x2");
    group.throughput(Throughput::Elements(OUTAGE_TRIALS));
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let mut outages = 0u64;
            for t in 0..OUTAGE_TRIALS {
                let mut rng = RngStream::new(1, t).generator();
                let snrs = draw_link_snrs_with(&cfg, &mut rng);
                let g = strategy_post_snr(Strategy::MmseReceiver, &cfg, None, &snrs).unwrap();
                outages += u64::from(g < 1.0);
            }
            black_box(outages)
        })
    });
    for threads in thread_counts() {
        group.bench_with_input(
            BenchmarkId::new("rayon", threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    with_threads(threads, || {
                        run_outage_point(&cfg, Strategy::MmseReceiver, 1.0, 0.0, OUTAGE_TRIALS, 1)
                            .unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

fn ber(c: &mut Criterion) {
    let cfg = SystemConfig::symmetric(3, 1.0);
    let mut group = c.benchmark_group("ber_3x3x3");
    group.throughput(Throughput::Elements(BER_TRIALS));
    group.sample_size(10);
    for strategy in [Strategy::MmseReceiver, Strategy::OptimalRelayFilter] {
        for threads in thread_counts() {
            group.bench_with_input(
                BenchmarkId::new(format!("{strategy}/rayon"), threads),
                &threads,
                |b, &threads| {
                    b.iter(|| {
                        with_threads(threads, || {
                            run_ber_point(
                                &cfg,
                                strategy,
                                0.0,
                                BER_TRIALS,
                                1,
                                &BerOptions::default(),
                            )
                            .unwrap()
                        })
                    })
                },
            );
        }
    }
    group.finish();
}

fn snr_check(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed_form_consistency");
    group.sample_size(10);
    for threads in thread_counts() {
        group.bench_with_input(
            BenchmarkId::new("rayon", threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    with_threads(threads, || {
                        closed_form_consistency(&[1, 2, 3], &[1.0], 500, 1).unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, outage, ber, snr_check);
criterion_main!(benches);
