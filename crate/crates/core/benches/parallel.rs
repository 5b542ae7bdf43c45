//! Sequential against rayon-parallel execution of the heavy kernels.
//!
//! Outputs are identical under both strategies (see the determinism tests),
//! so only wall-clock time differs. Build without the `parallel` feature and
//! both rows measure the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tessera_core::element::TextureElement;
use tessera_core::extrude::ExtrudeMode;
use tessera_core::mesh::primitives::{capped_cylinder, icosphere};
use tessera_core::pipeline::{build, plan, Config, DemoEvent, DemoFile};
use tessera_core::segment::{distortion_with, RegionIndex, SegmentParams};
use tessera_core::uv::{parametrize, ParamOptions};
use tessera_core::{Exec, Point2, Point3};

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn kernels(c: &mut Criterion) {
    let dense = capped_cylinder(10.0, 20.0, 160, 60, 8);
    let sphere = icosphere(15.0, 3);

    let mut g = c.benchmark_group("distortion");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| distortion_with(black_box(&dense), 3, exec))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("parametrize");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| parametrize(black_box(&sphere), &ParamOptions::default(), exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("region_index");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| RegionIndex::new(black_box(&dense), &SegmentParams::default(), exec).unwrap())
        });
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let mesh = capped_cylinder(10.0, 20.0, 48, 8, 4);
    let element = TextureElement::circle(1.0, 64);
    let mut demo = DemoFile::new(
        [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]
            .iter()
            .map(|a| DemoEvent { anchor: Some(Point2::new(a[0], a[1])), point: None, rotation: 0.0, scale: 1.0 })
            .collect(),
    );
    demo.origin = Some(Point3::new(10.0, 0.0, 10.0));
    demo.window = Some([Point2::new(-4.5, -4.5), Point2::new(4.5, 4.5)]);

    let mut g = c.benchmark_group("imprint_and_extrude");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        let config = Config { exec, ..Config::default() };
        let p = plan(&mesh, &element, &demo, None, &config).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| build(black_box(&mesh), &element, &p, ExtrudeMode::Raised, 1.0, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, pipeline);
criterion_main!(benches);
