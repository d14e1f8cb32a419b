use std::sync::Arc;

use causal_fa_core::functor_a::{apply_a, check_assoc_unital, check_independence, check_naturality, pm_family};
use causal_fa_core::functor_f::{apply_f, check_fold_independence, check_products_agree, check_rho_independence};
use causal_fa_core::klein_gordon::{check_to_formula, KgConfig, KgModel, KgTheory, KgTimeOrdered};
use causal_fa_core::*;

struct Setup {
    amb: Arc<LatticeSpacetime>,
    model: Arc<KgModel>,
}

fn setup() -> Setup {
    let amb = LatticeSpacetime::cylinder(16, 6);
    let model = KgModel::new(KgConfig::new(&amb, 0.25, 2).unwrap());
    Setup { amb, model }
}

fn small() -> SampleConfig {
    SampleConfig { max_degree: 2, max_total_degree: 4, budget: 40, seed: 11 }
}

fn assert_pass(e: &CheckEntry) {
    assert!(e.pass, "{e:?}");
}

#[test]
fn kg_to_formulas_hold_for_both_orders() {
    let s = setup();
    let n = Region::slab(&s.amb, 3, 12).unwrap();
    let later = Region::slab(&s.amb, 9, 11).unwrap();
    let earlier = Region::slab(&s.amb, 4, 6).unwrap();
    let f = apply_f(Arc::new(KgTheory::quantum(&s.model)));
    let cfg = SampleConfig { max_degree: 3, max_total_degree: 6, budget: 48, seed: 3 };
    for parts in [vec![later.clone(), earlier.clone()], vec![earlier, later]] {
        let tuple = DisjointTuple::new(n.clone(), parts).unwrap();
        let entries = check_to_formula(&s.model, &f, &tuple, &cfg).unwrap();
        assert_eq!(entries.len(), 2);
        entries.iter().for_each(assert_pass);
    }
}

#[test]
fn round_trips_on_a_slab() {
    let s = setup();
    let n = Region::slab(&s.amb, 3, 12).unwrap();
    let kg: Arc<dyn Aqft> = Arc::new(KgTheory::quantum(&s.model));
    let af = apply_a(Arc::new(apply_f(kg.clone())));
    assert_pass(&functor_f::check_multiplications_agree("af", &af, kg.as_ref(), &n, &small()).unwrap());

    let direct: Arc<dyn Topfa> = Arc::new(KgTimeOrdered::new(&s.model));
    let fa = apply_f(Arc::new(apply_a(direct.clone())));
    let tuple =
        DisjointTuple::new(n.clone(), vec![Region::slab(&s.amb, 9, 11).unwrap(), Region::slab(&s.amb, 4, 6).unwrap()]).unwrap();
    assert_pass(&check_products_agree("fa", &fa, direct.as_ref(), &tuple, &small()).unwrap());
}

#[test]
fn built_multiplication_is_split_independent_and_natural() {
    let s = setup();
    let m = Region::slab(&s.amb, 3, 12).unwrap();
    let direct: Arc<dyn Topfa> = Arc::new(KgTimeOrdered::new(&s.model));
    let a = apply_a(direct);
    let fam = pm_family(&m);
    assert!(fam.len() >= 3);
    for pm in &fam[1..] {
        assert_pass(&check_independence(&a, &fam[0], pm, &small()).unwrap());
    }
    let triples = SampleConfig { max_total_degree: 3, ..small() };
    check_assoc_unital(&a, &m, &triples).unwrap().iter().for_each(assert_pass);
    let u = Region::slab(&s.amb, 5, 9).unwrap();
    assert_pass(&check_naturality(&a, &u, &m, &small()).unwrap());
}

#[test]
fn orderings_and_folds_agree_for_disjoint_parts() {
    let s = setup();
    let n = Region::slab(&s.amb, 3, 12).unwrap();
    let d1 = Region::diamond(&s.amb, Point::new(5, 0), Point::new(7, 0)).unwrap();
    let d2 = Region::diamond(&s.amb, Point::new(5, 3), Point::new(7, 3)).unwrap();
    let top = Region::slab(&s.amb, 10, 11).unwrap();
    let tuple = DisjointTuple::new(n, vec![d1, top, d2]).unwrap();
    let all = time_order::all_time_orderings(&tuple);
    assert!(all.len() >= 2);
    let kg = KgTheory::quantum(&s.model);
    assert_pass(&check_rho_independence(&kg, &tuple, &all[0], &all[1], &small()).unwrap());
    assert_pass(&check_fold_independence(&kg, &tuple, &small()).unwrap());
}
