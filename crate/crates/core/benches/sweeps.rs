//! Thread-pool versus sequential execution of the heavier suites.
//!
//! Without the `parallel` feature both modes run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use wedgeforge::campaign::{Campaign, Suite};
use wedgeforge::config::Config;
use wedgeforge::exec::Mode;

fn campaign(suite: Suite) -> Campaign {
    let mut c = Config::default();
    c.campaign.checks = vec![suite.id().to_string()];
    Campaign::new(c).expect("default configuration is valid")
}

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("suites");
    group.sample_size(10);
    for suite in [Suite::Ccr, Suite::CrossingShift, Suite::OracleDiff, Suite::Smatrix] {
        for mode in [Mode::Parallel, Mode::Sequential] {
            let camp = campaign(suite).with_mode(mode);
            group.bench_with_input(BenchmarkId::new(suite.id(), format!("{mode:?}")), &camp, |b, camp| {
                b.iter(|| black_box(camp.run_suite(suite).expect("suite runs")))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
