use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use incompat::compat::SolverConfig;
use incompat::covariance::weyl_rep;
use incompat::devices::DevicePair;
use incompat::par;
use incompat::robustness::{relative_robustness, CompatOracle, DEVICE_BISECT_TOL};
use incompat::theorems::{monotonicity_suite, run_suite, weyl_pair_and_noise, Theorem};

fn weyl_device_pairs(d: usize) -> (DevicePair, DevicePair) {
    let rep = weyl_rep(d).unwrap();
    let (sharp, noise) = weyl_pair_and_noise(d).unwrap();
    let (q, p) = sharp.observables(&rep).unwrap();
    let (qn, pn) = noise.observables(&rep).unwrap();
    (
        DevicePair::Jm {
            first: q,
            second: p,
        },
        DevicePair::Jm {
            first: qn,
            second: pn,
        },
    )
}

/// Same workloads with the rayon paths on and off.
fn parallel_vs_sequential(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let oracle = CompatOracle::new(cfg.clone());
    let mut group = c.benchmark_group("grid_scan");
    for d in [2, 3] {
        let (x, y) = weyl_device_pairs(d);
        for (label, on) in [("parallel", true), ("sequential", false)] {
            group.bench_with_input(BenchmarkId::new(label, d), &d, |b, _| {
                par::set_parallel(on);
                b.iter(|| relative_robustness(&x, &y, &oracle, DEVICE_BISECT_TOL).unwrap())
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("suites");
    group.sample_size(10);
    for (label, on) in [("parallel", true), ("sequential", false)] {
        group.bench_function(BenchmarkId::new("theorems_d2_vn", label), |b| {
            par::set_parallel(on);
            b.iter(|| run_suite(&[2], Some(Theorem::Vn), &cfg).unwrap())
        });
        group.bench_function(BenchmarkId::new("monotonicity", label), |b| {
            par::set_parallel(on);
            b.iter(|| monotonicity_suite(0, &cfg).unwrap())
        });
    }
    group.finish();
    par::set_parallel(true);
}

fn config() -> Criterion {
    Criterion::default()
        .configure_from_args()
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(5))
        .sample_size(10)
}

criterion_group! {
    name = benches;
    config = config();
    targets = parallel_vs_sequential
}
criterion_main!(benches);
