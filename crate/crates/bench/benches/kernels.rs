use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use stablekernel::density::invert_density;
use stablekernel::grid::{Lattice, SpaceTimeGrid};
use stablekernel::model::named_preset;
use stablekernel::montecarlo::{simulate_paths, SimConfig};
use stablekernel::parametrix::{build, ParametrixConfig};
use stablekernel::symbol::{eval_symbol, frozen_symbol};

fn symbol(c: &mut Criterion) {
    let spec = named_preset("sinusoidal-1.5").unwrap();
    c.bench_function("symbol/point", |b| b.iter(|| eval_symbol(&spec, &[0.3], &[2.5]).unwrap()));
    let lat = Lattice::new(1, 4096, 14.0 * PI).unwrap();
    c.bench_function("symbol/lattice_4096", |b| b.iter(|| frozen_symbol(&spec, &[0.3], lat).unwrap()));
}

fn density(c: &mut Criterion) {
    let spec = named_preset("sign-asymmetric-1.5").unwrap();
    let grid = SpaceTimeGrid::new(Lattice::new(1, 4096, 14.0 * PI).unwrap(), vec![0.25, 0.5, 1.0]).unwrap();
    c.bench_function("density/invert_4096x3", |b| b.iter(|| invert_density(&spec, &[0.0], &grid).unwrap()));
}

fn parametrix(c: &mut Criterion) {
    let spec = named_preset("sinusoidal-1.5").unwrap();
    let cfg = ParametrixConfig { coarse_n: 64, fine_n: 1024, ..Default::default() };
    let mut g = c.benchmark_group("parametrix");
    g.sample_size(10);
    g.bench_function("build_64", |b| b.iter(|| build(&spec, &cfg).unwrap()));
    g.finish();
}

fn montecarlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("montecarlo");
    g.sample_size(10);
    for name in ["constant-0.75", "sinusoidal-1.5"] {
        let cfg = SimConfig::new(named_preset(name).unwrap(), 2000, 1);
        g.bench_function(format!("paths_2000/{name}"), |b| {
            b.iter_batched(|| cfg.clone(), |c| simulate_paths(&c, 0.0, 1.0).unwrap(), BatchSize::SmallInput)
        });
    }
    g.finish();
}

criterion_group!(benches, symbol, density, parametrix, montecarlo);
criterion_main!(benches);
