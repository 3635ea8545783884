use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use zims_core::channel::{draw_channel_set, freq_channel_matrix, ChannelSpec};
use zims_core::frame_timing::{candidate_interval, FrameTiming, User};
use zims_core::linksim::{candidate_sampling_matrix, equivalent_channel_siso};
use zims_core::metrics::{logdet_capacity_bits, squared_singular_values};

fn timing(two_n: usize, alpha: f64) -> FrameTiming {
    let delta_f = 20.0e6 / two_n as f64;
    FrameTiming::from_alpha(delta_f, two_n / 2, alpha, 0.01 / delta_f, 1, two_n).unwrap()
}

fn bench_candidate_interval(c: &mut Criterion) {
    let t = timing(128, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cs = draw_channel_set(&ChannelSpec::siso(1.0, 1e-10, 4, 1e-8), &mut rng).unwrap();
    let d = cs.delay_extrema();
    c.bench_function("candidate_interval", |b| {
        b.iter(|| candidate_interval(black_box(&t), black_box(&d), User::U1, 0).unwrap())
    });
}

fn bench_sampling_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("sampling_matrix");
    for &two_n in &[32usize, 128] {
        let t = timing(two_n, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cs = draw_channel_set(&ChannelSpec::siso(1.0, 1e-10, 4, 1e-8), &mut rng).unwrap();
        let d = cs.delay_extrema();
        group.bench_with_input(BenchmarkId::from_parameter(two_n), &two_n, |b, _| {
            b.iter(|| candidate_sampling_matrix(&t, &d, User::U1, 0, 2.4e9).unwrap())
        });
    }
    group.finish();
}

fn bench_equivalent_channel_svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("equivalent_channel_svd");
    group.sample_size(20);
    for &two_n in &[32usize, 64, 128] {
        let t = timing(two_n, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cs = draw_channel_set(&ChannelSpec::siso(1.0, 1.0, 4, 1e-8), &mut rng).unwrap();
        let d = cs.delay_extrema();
        let v = candidate_sampling_matrix(&t, &d, User::U1, 0, 2.4e9).unwrap();
        let h = freq_channel_matrix(cs.link(User::U2, User::U1, 0, 0), &t, 2.4e9);
        group.bench_with_input(BenchmarkId::from_parameter(two_n), &two_n, |b, _| {
            b.iter(|| equivalent_channel_siso(black_box(&v), black_box(&h)).unwrap())
        });
    }
    group.finish();
}

fn bench_capacity(c: &mut Criterion) {
    let mut group = c.benchmark_group("capacity_logdet");
    group.sample_size(30);
    for &two_n in &[64usize, 128] {
        let t = timing(two_n, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cs = draw_channel_set(&ChannelSpec::siso(1.0, 1.0, 4, 1e-8), &mut rng).unwrap();
        let d = cs.delay_extrema();
        let v = candidate_sampling_matrix(&t, &d, User::U1, 0, 2.4e9).unwrap();
        let h = freq_channel_matrix(cs.link(User::U2, User::U1, 0, 0), &t, 2.4e9);
        let product = &v.matrix * &h;
        let alloc = vec![1e-3; two_n];
        group.bench_with_input(BenchmarkId::new("general", two_n), &two_n, |b, _| {
            b.iter(|| logdet_capacity_bits(black_box(&product), &alloc, 2e-11).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gram_lambdas", two_n), &two_n, |b, _| {
            b.iter(|| squared_singular_values(black_box(&product)))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_candidate_interval,
    bench_sampling_matrix,
    bench_equivalent_channel_svd,
    bench_capacity
);
criterion_main!(benches);
