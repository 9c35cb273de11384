use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qrlab_bench::{dense, disk, symplectic, trig_form};
use qrlab_core::algebra::comass_norm;
use qrlab_core::degree::degree;
use qrlab_core::homotopy::TOperator;
use qrlab_core::{ComassConfig, MapFamily, Region};

fn algebra(c: &mut Criterion) {
    let (a, b) = (dense(6, 2), dense(6, 3));
    c.bench_function("wedge 2∧3 in R^6", |bch| bch.iter(|| black_box(&a).wedge(black_box(&b)).unwrap()));
    c.bench_function("hodge star 3-form in R^6", |bch| bch.iter(|| black_box(&b).hodge_star()));
    let w = symplectic(3);
    let fast = ComassConfig::fast();
    c.bench_function("comass symplectic R^6 (fast)", |bch| bch.iter(|| comass_norm(black_box(&w), &fast).unwrap()));
}

fn grid(c: &mut Criterion) {
    let dom = disk(64);
    let w = trig_form(&dom);
    c.bench_function("exterior derivative 64²", |bch| bch.iter(|| black_box(&w).exterior_derivative().unwrap()));

    let small = disk(16);
    let ws = trig_form(&small);
    let t = TOperator::canonical(&Region::unit_ball(2), 1).unwrap();
    c.bench_function("homotopy apply 16²", |bch| bch.iter(|| t.apply(black_box(&ws)).unwrap()));
}

fn degrees(c: &mut Criterion) {
    let dom = std::sync::Arc::new(qrlab_core::GridDomain::new(Region::ball(&[0.0, 0.0], 1.2), &[128, 128]).unwrap());
    let f = MapFamily::Winding { k: 3 }.sample(&dom).unwrap();
    let df = f.best_derivative().unwrap();
    let u = Region::unit_ball(2);
    c.bench_function("degree winding k=3 128²", |bch| bch.iter(|| degree(&f, &df, black_box(&[0.5, 0.0]), &u, None).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = algebra, grid, degrees
}
criterion_main!(benches);
