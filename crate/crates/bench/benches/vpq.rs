use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use vpq_core::grade::{binary_grade_map, variant_layout_26, HqFootprint};
use vpq_core::mask::{exact_mask, project_viewport, ProjectionOptions};
use vpq_core::pooling::{frame_quality, frame_quality_full_raster, window_mean};
use vpq_core::session::{evaluate_session, MaskSource, RandomWalk};
use vpq_core::{FieldOfView, MaskBank, Normalization, Resolution, SessionConfig, SphericalPoint};

fn projection(c: &mut Criterion) {
    let res = Resolution::uhd();
    let fov = FieldOfView::default();
    let mut g = c.benchmark_group("projection");
    for pog in [(180.0, 90.0), (320.0, 110.0), (180.0, 30.0)] {
        let p = SphericalPoint::new(pog.0, pog.1);
        g.bench_with_input(BenchmarkId::new("raster64", format!("{p}")), &p, |b, &p| {
            b.iter(|| project_viewport(black_box(p), fov, res, 64).unwrap())
        });
    }
    for n in [4, 16, 64] {
        g.bench_with_input(BenchmarkId::new("samples", n), &n, |b, &n| {
            b.iter(|| project_viewport(SphericalPoint::new(200.0, 70.0), fov, res, n).unwrap())
        });
    }
    g.sample_size(10);
    g.bench_function("exact", |b| {
        b.iter(|| exact_mask(black_box(SphericalPoint::new(200.0, 70.0)), fov, res))
    });
    g.finish();
}

fn pooling(c: &mut Criterion) {
    let res = Resolution::uhd();
    let layout = variant_layout_26(res).unwrap();
    let grade = binary_grade_map(&layout, 13, &HqFootprint::default()).unwrap();
    let mask = project_viewport(
        SphericalPoint::new(210.0, 80.0),
        FieldOfView::default(),
        res,
        64,
    )
    .unwrap();
    let mut g = c.benchmark_group("pooling");
    g.bench_function("support", |b| {
        b.iter(|| frame_quality(black_box(&mask), &grade, Normalization::MaskArea).unwrap())
    });
    g.sample_size(10);
    g.bench_function("full_raster", |b| {
        b.iter(|| {
            frame_quality_full_raster(black_box(&mask), &grade, Normalization::MaskArea).unwrap()
        })
    });
    let q: Vec<f64> = (0..1800).map(|i| (i % 97) as f64 / 97.0).collect();
    g.bench_function("window_mean_1800", |b| {
        b.iter(|| window_mean(black_box(&q)).unwrap())
    });
    g.finish();
}

fn bank(c: &mut Criterion) {
    let res = Resolution::new(960, 480).unwrap();
    let fov = FieldOfView::default();
    let bank = MaskBank::build(10, 20, fov, res, ProjectionOptions::default()).unwrap();
    let mut g = c.benchmark_group("bank");
    g.bench_function("nearest_10x20", |b| {
        b.iter(|| bank.nearest_index(black_box(SphericalPoint::new(123.4, 56.7))))
    });
    g.sample_size(10);
    g.bench_function("build_10x20_960x480", |b| {
        b.iter(|| MaskBank::build(10, 20, fov, res, ProjectionOptions::default()).unwrap())
    });
    let trace = RandomWalk {
        duration_s: 10.0,
        ..RandomWalk::default()
    }
    .generate()
    .unwrap();
    let config = SessionConfig::new(res).unwrap();
    g.bench_function("session_vaqm_300_frames", |b| {
        b.iter(|| evaluate_session(&trace, &config, MaskSource::Projection).unwrap())
    });
    g.bench_function("session_avaqm_300_frames", |b| {
        b.iter(|| evaluate_session(&trace, &config, MaskSource::Bank(&bank)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, projection, pooling, bank);
criterion_main!(benches);
