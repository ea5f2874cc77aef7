use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use fluidtag_bench::{PeakedLandscape, FREQ};
use fluidtag_core::analysis::fit_cubic;
use fluidtag_core::fitness::{evaluate, Gates, Normalization, Weights};
use fluidtag_core::geometry::{
    make_grid, FixedGeometry, FluidProperties, ParameterSpace, ParameterVector,
};
use fluidtag_core::ic::{code_of_susceptance, ICProfile};
use fluidtag_core::optimizer::{optimize, GridSpec, NormPolicy};

fn bench_quantizer(c: &mut Criterion) {
    let profile = ICProfile::default();
    let omega = std::f64::consts::TAU * FREQ;
    let b_a = -omega * 2.37e-12;
    c.bench_function("code_of_susceptance", |b| {
        b.iter(|| code_of_susceptance(&profile, black_box(b_a), FREQ).unwrap())
    });
}

fn bench_grid(c: &mut Criterion) {
    let space = ParameterSpace::default();
    c.bench_function("make_grid_5x5x4", |b| {
        b.iter(|| make_grid(black_box(&space), [5, 5, 4]).unwrap())
    });
}

fn bench_evaluate(c: &mut Criterion) {
    let landscape = PeakedLandscape::new(ParameterVector::new(3.0, 9.0, 1.5));
    let v = ParameterVector::new(2.0, 10.0, 2.0);
    let norm = Normalization::new(1.0, 19.4);
    c.bench_function("evaluate_candidate", |b| {
        b.iter(|| {
            evaluate(
                &landscape,
                black_box(&v),
                &FixedGeometry::default(),
                &FluidProperties::default(),
                &ICProfile::default(),
                &Weights::default(),
                &Gates::default(),
                &norm,
                FREQ,
            )
            .unwrap()
        })
    });
}

fn bench_search(c: &mut Criterion) {
    let landscape = PeakedLandscape::new(ParameterVector::new(3.4, 8.7, 1.5));
    let ctx = landscape.context();
    let weights = Weights::new(0.0, 1.0, 0.0);

    let mut group = c.benchmark_group("two_step_search");
    for counts in [[5usize, 5, 4], [9, 9, 4]] {
        let spec = GridSpec {
            round1_counts: counts,
            ..GridSpec::default()
        };
        let points = counts.iter().product::<usize>();
        group.bench_with_input(BenchmarkId::from_parameter(points), &spec, |b, spec| {
            b.iter(|| {
                optimize(
                    &ctx,
                    spec,
                    &weights,
                    &Gates::default(),
                    &NormPolicy::RoundLocal,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let points: Vec<(f64, f64)> = (0..101)
        .map(|i| {
            let x = i as f64 / 100.0;
            (x, -500.0 * x + 180.0 * x * x - 120.0 * x * x * x)
        })
        .collect();
    c.bench_function("fit_cubic_101_points", |b| {
        b.iter(|| fit_cubic(black_box(&points)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_quantizer,
    bench_grid,
    bench_evaluate,
    bench_search,
    bench_fit
);
criterion_main!(benches);
