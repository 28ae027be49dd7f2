use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twisted_fs::multiplier::MultiplierMap;
use twisted_fs::par::ExecMode;
use twisted_fs::suite::{self, SuiteConfig};
use twisted_fs::system::library;
use twisted_fs::{samples, TwistedSystem};

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("pd_kernel");
    for s in [library::m2_inner_klein(), library::s3_permutation()] {
        let s = Arc::new(s);
        let t = samples::pd_sample(&s, &mut ChaCha8Rng::seed_from_u64(1)).map;
        for (label, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(label, s.name()), &t, |b, t| {
                b.iter(|| black_box(t.positive_definite_with(1e-9, mode)))
            });
        }
    }
    group.finish();
}

fn sup_norms(c: &mut Criterion) {
    let mut group = c.benchmark_group("sup_norm");
    group.sample_size(20);
    let s = Arc::new(library::m2_inner_klein());
    let t = samples::pd_sample(&s, &mut ChaCha8Rng::seed_from_u64(2)).map;
    for (label, mode) in MODES {
        group.bench_function(label, |b| b.iter(|| black_box(t.sup_norm_with(mode))));
    }
    group.finish();
}

fn gram_choi(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram_choi");
    group.sample_size(20);
    for s in [library::pauli(), library::m2_inner_klein()] {
        let s = Arc::new(s);
        let t = samples::pd_sample(&s, &mut ChaCha8Rng::seed_from_u64(3)).map;
        let m = MultiplierMap::new(&t);
        for (label, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(label, s.name()), &m, |b, m| {
                b.iter(|| black_box(m.cp_report_with(1e-9, mode)))
            });
        }
    }
    group.finish();
}

fn full_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("suite");
    group.sample_size(10);
    let systems: Vec<Arc<TwistedSystem>> =
        [library::trivial_z2(), library::pauli(), library::flip()]
            .into_iter()
            .map(Arc::new)
            .collect();
    for (label, mode) in MODES {
        let cfg = SuiteConfig {
            samples: 2,
            mode,
            ..SuiteConfig::default()
        };
        group.bench_function(label, |b| b.iter(|| black_box(suite::run(&systems, &cfg))));
    }
    group.finish();
}

criterion_group!(benches, kernels, sup_norms, gram_choi, full_suite);
criterion_main!(benches);
