use std::hint::black_box;
use std::sync::Arc;

use causal_fa_core::functor_a::apply_a;
use causal_fa_core::functor_f::apply_f;
use causal_fa_core::invariants::region_pool;
use causal_fa_core::klein_gordon::{KernelKind, KgConfig, KgModel, KgTheory, KgTimeOrdered, Propagators};
use causal_fa_core::lattice::{enumerate_convex_subsets, is_cauchy_subregion, PathOracle};
use causal_fa_core::time_order::find_time_ordering;
use causal_fa_core::*;
use criterion::{criterion_group, criterion_main, Criterion};

fn propagators(c: &mut Criterion) {
    let amb = LatticeSpacetime::cylinder(24, 8);
    for m2 in [0.0, 0.25] {
        let cfg = KgConfig::new(&amb, m2, 2).unwrap();
        c.bench_function(&format!("propagators X=8 T=24 m2={m2}"), |b| b.iter(|| Propagators::compute(black_box(&cfg))));
    }
}

fn cauchy(c: &mut Criterion) {
    let amb = LatticeSpacetime::cylinder(8, 4);
    let m = Region::slab(&amb, 1, 6).unwrap();
    let u = Region::slab(&amb, 3, 4).unwrap();
    c.bench_function("cauchy dependence 8x4", |b| b.iter(|| is_cauchy_subregion(black_box(&u), black_box(&m))));
    let subs = enumerate_convex_subsets(&m, 50_000).unwrap();
    c.bench_function("path oracle build + all subsets 8x4", |b| {
        b.iter(|| {
            let oracle = PathOracle::new(&m, 1_000_000).unwrap();
            subs.iter().filter(|s| oracle.verdict(s)).count()
        })
    });
}

fn ordering(c: &mut Criterion) {
    let (amb, pool) = region_pool();
    let tuple = DisjointTuple::new(Region::whole(&amb), vec![pool[1].clone(), pool[4].clone(), pool[2].clone(), pool[0].clone()])
        .unwrap();
    c.bench_function("find_time_ordering n=4", |b| b.iter(|| find_time_ordering(black_box(&tuple))));
}

fn products(c: &mut Criterion) {
    let amb = LatticeSpacetime::cylinder(16, 6);
    let model = KgModel::new(KgConfig::new(&amb, 0.25, 2).unwrap());
    let slab = Region::slab(&amb, 5, 9).unwrap();
    let gens = KgTheory::quantum(&model).generators(&slab).unwrap();
    let cube = |i: usize| {
        let g = Poly::generator(gens[i]);
        g.mul(&g).unwrap().mul(&g).unwrap()
    };
    let (a, b3) = (cube(0), cube(5));
    c.bench_function("star product deg3 x deg3", |b| b.iter(|| model.star_product(black_box(&a), black_box(&b3), KernelKind::Causal)));

    let topfa: Arc<dyn Topfa> = Arc::new(KgTimeOrdered::new(&model));
    let built = apply_a(topfa);
    let (x, y) = (Poly::generator(gens[1]), Poly::generator(gens[7]));
    built.multiply(&slab, &x, &y).unwrap();
    c.bench_function("functor A product (warm)", |b| b.iter(|| built.multiply(&slab, black_box(&x), black_box(&y))));

    let n = Region::slab(&amb, 3, 12).unwrap();
    let tuple = DisjointTuple::new(n, vec![Region::slab(&amb, 9, 11).unwrap(), Region::slab(&amb, 4, 6).unwrap()]).unwrap();
    let f = apply_f(Arc::new(KgTheory::quantum(&model)));
    let later = Poly::generator(f.generators(&tuple.parts()[0]).unwrap()[0]);
    let earlier = Poly::generator(f.generators(&tuple.parts()[1]).unwrap()[0]);
    let inputs = [later, earlier];
    c.bench_function("functor F pair product", |b| b.iter(|| f.product(black_box(&tuple), black_box(&inputs))));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = propagators, cauchy, ordering, products
}
criterion_main!(benches);
