use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use layoutminer_bench::{dataset, event_log, layout, scenario};
use layoutminer_core::analysis::{self, ClusterSource, SdConvention};
use layoutminer_core::{fold_events, EventKind, Pose, Store, StoreOptions, SyncMode, WidgetId};

fn fold(c: &mut Criterion) {
    let mut g = c.benchmark_group("fold");
    for n in [100, 1_000, 10_000] {
        let log = event_log(n, 1);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &log, |b, log| {
            b.iter(|| fold_events(scenario(), black_box(log)).unwrap())
        });
    }
    g.finish();
}

fn cluster(c: &mut Criterion) {
    let mut g = c.benchmark_group("cluster_layout");
    for n in [10, 40, 200] {
        let l = layout(n, 3.0, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &l, |b, l| {
            b.iter(|| analysis::cluster_layout(black_box(l), 0.75).unwrap())
        });
    }
    g.finish();
}

fn analytics(c: &mut Criterion) {
    let ds = dataset(31, 3);
    let mut g = c.benchmark_group("analysis");
    g.bench_function("overview", |b| {
        b.iter(|| analysis::overview(black_box(&ds)).unwrap())
    });
    g.bench_function("category_distribution", |b| {
        b.iter(|| analysis::category_distribution(black_box(&ds), None).unwrap())
    });
    g.bench_function("cluster_statistics/computed", |b| {
        b.iter(|| {
            analysis::cluster_statistics(
                black_box(&ds),
                ClusterSource::Computed(0.75),
                SdConvention::Sample,
            )
            .unwrap()
        })
    });
    g.finish();
}

fn append(c: &mut Criterion) {
    let mut g = c.benchmark_group("store_append");
    let setup = |store: &Store| {
        let id = WidgetId::new("w0");
        let shot = layoutminer_core::Screenshot {
            id: "s0".into(),
            participant_id: "P01".into(),
            image_ref: store.put_blob(b"not an image").unwrap(),
            app_hint: None,
            captured_at_ms: 0,
            redacted: false,
        };
        store.put_screenshot(shot).unwrap();
        store
            .put_widget(layoutminer_core::Widget {
                id: id.clone(),
                screenshot_id: "s0".into(),
                crop: layoutminer_core::CropRegion::FULL,
                image_ref: store.put_blob(b"not an image").unwrap(),
                created_at_ms: 0,
            })
            .unwrap();
        store
            .append_event(&scenario(), &id, EventKind::Add, Pose::IDENTITY, 0)
            .unwrap();
        id
    };
    g.bench_function("in_memory", |b| {
        let store = Store::in_memory();
        let id = setup(&store);
        b.iter(|| {
            store
                .append_event(
                    &scenario(),
                    &id,
                    EventKind::Update,
                    Pose::at(1.0, 1.0, 1.0),
                    1,
                )
                .unwrap()
        })
    });
    for (name, sync) in [
        ("os_buffered", SyncMode::OsBuffered),
        ("fsync", SyncMode::Full),
    ] {
        g.bench_function(name, |b| {
            b.iter_batched_ref(
                || {
                    let dir = tempfile::tempdir().unwrap();
                    let store = Store::open_with(
                        dir.path(),
                        StoreOptions {
                            sync,
                            ..Default::default()
                        },
                    )
                    .unwrap();
                    let id = setup(&store);
                    (dir, store, id)
                },
                |(_, store, id)| {
                    for i in 0..32 {
                        store
                            .append_event(
                                &scenario(),
                                id,
                                EventKind::Update,
                                Pose::at(i as f64, 1.0, 1.0),
                                i,
                            )
                            .unwrap();
                    }
                },
                BatchSize::PerIteration,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, fold, cluster, analytics, append);
criterion_main!(benches);
