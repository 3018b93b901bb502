use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use teig_core::eigen::{self, lu::SparseLu, ShiftInvertConfig};
use teig_core::mesh::generate;
use teig_core::{BlockPencil, DomainSpec, MaterialModel, ReducedPencil};

fn assembly(c: &mut Criterion) {
    let a1 = MaterialModel::preset("A1").unwrap();
    let mut g = c.benchmark_group("assemble");
    for level in [1, 2, 3] {
        let mesh = generate(&DomainSpec::from_name("square").unwrap(), level).unwrap();
        g.bench_with_input(BenchmarkId::new("full", level), &mesh, |b, m| {
            b.iter(|| BlockPencil::assemble(m, &a1).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("reduced", level), &mesh, |b, m| {
            b.iter(|| ReducedPencil::assemble(m, &a1).unwrap())
        });
    }
    g.finish();
}

fn factorization(c: &mut Criterion) {
    let a1 = MaterialModel::preset("A1").unwrap();
    let mut g = c.benchmark_group("factorize");
    g.sample_size(10);
    for (domain, level) in [("square", 2), ("square", 3), ("cube", 0)] {
        let mesh = generate(&DomainSpec::from_name(domain).unwrap(), level).unwrap();
        let rp = ReducedPencil::assemble(&mesh, &a1).unwrap();
        let shifted = rp.k.add_scaled(1.0, &rp.m, -4.0).unwrap();
        g.bench_with_input(BenchmarkId::new(domain, level), &shifted, |b, a| {
            b.iter(|| SparseLu::factorize(a).unwrap())
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    for (domain, material, level, count) in [("square", "A1", 2, 1), ("disk", "A1", 1, 6), ("cube", "A6", 0, 6)] {
        let mesh = generate(&DomainSpec::from_name(domain).unwrap(), level).unwrap();
        let a = MaterialModel::preset(material).unwrap();
        let cfg = ShiftInvertConfig::with_count(count);
        g.bench_function(BenchmarkId::new(domain, level), |b| {
            b.iter(|| eigen::solve(&mesh, &a, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, factorization, solve);
criterion_main!(benches);
