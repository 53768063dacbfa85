use criterion::{criterion_group, criterion_main, Criterion};
use gw_minimax::mcsim::{sample_root, sample_stream, OffspringSampler};
use gw_minimax::{find_fixed_points, DistSpec, OffspringDistribution, SimConfig};
use std::hint::black_box;

fn dist(s: &str) -> OffspringDistribution {
    OffspringDistribution::new(DistSpec::parse(s).unwrap()).unwrap()
}

fn eval_f(c: &mut Criterion) {
    let mut g = c.benchmark_group("eval_f");
    for s in [
        "regular:2",
        "finite:1=0.45,3=0.55",
        "geometric:0.3",
        "powerlaw:1.5",
    ] {
        let d = dist(s);
        g.bench_function(s, |b| b.iter(|| d.f(black_box(0.37))));
    }
    g.finish();
}

fn jet_f(c: &mut Criterion) {
    let d = dist("finite:1=0.45,3=0.55");
    c.bench_function("jet_f/order12", |b| {
        b.iter(|| d.jet_f(black_box(0.6), 12).unwrap())
    });
}

fn fixed_points(c: &mut Criterion) {
    let mut g = c.benchmark_group("find_fixed_points");
    g.sample_size(20);
    for s in ["regular:2", "finite:1=0.55,3=0.45"] {
        let d = dist(s);
        g.bench_function(s, |b| {
            b.iter(|| find_fixed_points(black_box(&d), 1e-11).unwrap())
        });
    }
    g.finish();
}

fn root_sample(c: &mut Criterion) {
    let d = dist("regular:2");
    let mut g = c.benchmark_group("sample_root");
    for (name, pruned) in [("depth10", false), ("depth10_pruned", true)] {
        let mut cfg = SimConfig::new(d.clone(), 10, 1, 1);
        cfg.pruned = pruned;
        let off = OffspringSampler::new(&d);
        let mut rng = sample_stream(1, 0);
        g.bench_function(name, |b| {
            b.iter(|| sample_root(&cfg, &off, &mut rng).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, eval_f, jet_f, fixed_points, root_sample);
criterion_main!(benches);
