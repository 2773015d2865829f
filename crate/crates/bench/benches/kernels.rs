use std::hint::black_box;

use bosemix_core::ci::CiPropagation;
use bosemix_core::grid::SineWork;
use bosemix_core::meanfield::GroundStateOptions;
use bosemix_core::{
    CiSystem, DrivingProtocol, FewBodyParams, FewBodySolver, GridSpec, MeanField, MixtureModel, SineTransform, C64,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn sine_transform(c: &mut Criterion) {
    let mut g = c.benchmark_group("dst");
    for n in [255usize, 299, 500] {
        let tr = SineTransform::new(n);
        let mut data: Vec<C64> = (0..n).map(|k| C64::new((k as f64).sin(), 0.0)).collect();
        let mut work = SineWork::default();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| tr.apply(black_box(&mut data), &mut work))
        });
    }
    g.finish();
}

fn meanfield_step(c: &mut Criterion) {
    let mf = MeanField::new(MixtureModel::default()).unwrap();
    let (st, _) = mf.ground_state(&GroundStateOptions::default()).unwrap();
    c.bench_function("meanfield/10 steps", |b| {
        b.iter(|| {
            let mut s = st.clone();
            mf.propagate(&mut s, 0.01, 0.001, 100, |_| Ok(())).unwrap();
            s
        })
    });
}

fn fewbody_step(c: &mut Criterion) {
    let p = FewBodyParams {
        grid: GridSpec::new(-30.0, 30.0, 199).unwrap(),
        ..FewBodyParams::default()
    };
    let fb = FewBodySolver::new(p, DrivingProtocol::continuous(20.0, 1.5)).unwrap();
    let st = fb.product_state();
    c.bench_function("fewbody/step 199x199", |b| {
        b.iter(|| {
            let mut s = st.clone();
            fb.propagate(&mut s, 0.01, 0.01, 1, |_| Ok(())).unwrap();
            s
        })
    });
}

fn ci_apply(c: &mut Criterion) {
    let mut m = MixtureModel::default();
    m.bath.count = 10;
    let ci = CiSystem::new(m, 3, 6).unwrap();
    let st = ci.reference_state();
    let mut y = vec![C64::new(0.0, 0.0); st.coeffs.len()];
    c.bench_function("ci/apply 66x21", |b| {
        b.iter(|| ci.apply_hamiltonian(black_box(&st.coeffs), &mut y, 1.0))
    });
    c.bench_function("ci/propagate 1.0", |b| {
        b.iter(|| {
            let mut s = st.clone();
            ci.propagate(&mut s, 1.0, 0.01, 1000, &CiPropagation::default(), |_| Ok(()))
                .unwrap();
            s
        })
    });
}

criterion_group!(benches, sine_transform, meanfield_step, fewbody_step, ci_apply);
criterion_main!(benches);
