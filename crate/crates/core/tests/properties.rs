use std::sync::{Arc, OnceLock};

use causal_fa_core::invariants::region_pool;
use causal_fa_core::klein_gordon::{green, kg_apply, GreenKind, KernelKind, KgConfig, KgModel, LatticeField};
use causal_fa_core::lattice::{
    cauchy_by_dependence, enumerate_convex_subsets, extend_to_cauchy_surface, ConeMode, Direction, PathOracle,
};
use causal_fa_core::poly::deviation;
use causal_fa_core::time_order::{
    all_time_orderings, block_perm, compose_swaps, factor_into_causal_transpositions, find_time_ordering, sum_perm,
    time_orders,
};
use causal_fa_core::*;
use proptest::prelude::*;

fn perm(n: usize) -> impl Strategy<Value = Perm> {
    Just((1..=n).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Perm::new(&v).unwrap())
}

fn perms3() -> impl Strategy<Value = (Perm, Perm, Perm)> {
    (1usize..=6).prop_flat_map(|n| (perm(n), perm(n), perm(n)))
}

fn lattice() -> impl Strategy<Value = Arc<LatticeSpacetime>> {
    (1usize..=7, 1usize..=12, any::<bool>()).prop_map(|(x, t, cyl)| {
        if cyl {
            LatticeSpacetime::cylinder(t, x)
        } else {
            LatticeSpacetime::strip(t, x)
        }
    })
}

fn lattice_with_points(k: usize) -> impl Strategy<Value = (Arc<LatticeSpacetime>, Vec<Point>)> {
    lattice().prop_flat_map(move |amb| {
        let pts = amb.points();
        (Just(amb), proptest::collection::vec(proptest::sample::select(pts), k))
    })
}

proptest! {
    #[test]
    fn permutations_form_a_group_acting_on_the_right((a, b, c) in perms3()) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        prop_assert!(a.compose(&a.inverse()).is_identity());
        prop_assert!(a.inverse().compose(&a).is_identity());
        let items: Vec<usize> = (0..a.len()).map(|i| 10 * i).collect();
        prop_assert_eq!(b.act(&a.act(&items)), a.compose(&b).act(&items));
    }

    #[test]
    fn block_permutations_respect_composition(rho in (1usize..=4).prop_flat_map(perm), k in proptest::collection::vec(1usize..=3, 4)) {
        let k = &k[..rho.len()];
        let ones = vec![1; rho.len()];
        prop_assert_eq!(block_perm(&rho, &ones).unwrap(), rho.clone());
        prop_assert!(block_perm(&Perm::identity(rho.len()), k).unwrap().is_identity());
        let ids: Vec<Perm> = k.iter().map(|&n| Perm::identity(n)).collect();
        prop_assert!(sum_perm(&ids).unwrap().is_identity());
        // Undoing the block move: sizes after the move are `k ∘ ρ`.
        let moved: Vec<usize> = (0..rho.len()).map(|i| k[rho.apply(i)]).collect();
        let back = block_perm(&rho.inverse(), &moved).unwrap();
        prop_assert!(block_perm(&rho, k).unwrap().compose(&back).is_identity());
    }

    #[test]
    fn causal_order_is_a_partial_order((amb, p) in lattice_with_points(3)) {
        let (a, b, c) = (p[0], p[1], p[2]);
        prop_assert!(amb.causal_le(a, a));
        prop_assert!(!amb.chrono_lt(a, a));
        if amb.causal_le(a, b) && amb.causal_le(b, c) {
            prop_assert!(amb.causal_le(a, c));
        }
        if amb.chrono_lt(a, b) && amb.chrono_lt(b, c) {
            prop_assert!(amb.chrono_lt(a, c));
        }
        if amb.chrono_lt(a, b) {
            prop_assert!(amb.causal_le(a, b));
        }
        if amb.causal_le(a, b) && amb.causal_le(b, a) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn cones_agree_with_the_pointwise_relations((amb, p) in lattice_with_points(2)) {
        let (a, b) = (p[0], p[1]);
        let single = amb.set_of(&[a]).unwrap();
        let (ia, ib) = (amb.index(a), amb.index(b));
        prop_assert_eq!(amb.cone(&single, Direction::Future, ConeMode::Causal).contains(ib), amb.causal_le(a, b));
        prop_assert_eq!(amb.cone(&single, Direction::Future, ConeMode::Chronological).contains(ib), amb.chrono_lt(a, b));
        let other = amb.set_of(&[b]).unwrap();
        prop_assert_eq!(amb.cone(&other, Direction::Past, ConeMode::Causal).contains(ia), amb.causal_le(a, b));
    }

    #[test]
    fn diamonds_are_causally_convex((amb, p) in lattice_with_points(1), pick in any::<prop::sample::Index>()) {
        let a = p[0];
        let future: Vec<Point> = amb.points().into_iter().filter(|&q| amb.causal_le(a, q)).collect();
        let b = *pick.get(&future);
        let d = Region::diamond(&amb, a, b).unwrap();
        prop_assert!(amb.is_causally_convex(d.set()));
        prop_assert!(d.contains(a) && d.contains(b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dependence_matches_paths_on_random_pairs(x in 1usize..=3, t in 1usize..=6, cyl in any::<bool>(), pick in any::<prop::sample::Index>(), sub in any::<prop::sample::Index>()) {
        let amb = if cyl { LatticeSpacetime::cylinder(t, x) } else { LatticeSpacetime::strip(t, x) };
        let regions = enumerate_convex_subsets(&Region::whole(&amb), 50_000).unwrap();
        let m = Region::from_set(&amb, pick.get(&regions).clone()).unwrap();
        let subs = enumerate_convex_subsets(&m, 50_000).unwrap();
        let u = sub.get(&subs);
        let oracle = PathOracle::new(&m, 1_000_000).unwrap();
        prop_assert_eq!(cauchy_by_dependence(u, m.set(), &amb), oracle.verdict(u));
    }

    #[test]
    fn achronal_sets_extend_to_surfaces((amb, pts) in (2usize..=8, 6usize..=14).prop_flat_map(|(x, t)| {
        let amb = LatticeSpacetime::cylinder(t, x);
        let pts = amb.points();
        (Just(amb), proptest::collection::vec(proptest::sample::select(pts), 1..5))
    })) {
        let mut a: Vec<Point> = Vec::new();
        for p in pts {
            if a.iter().all(|q| q.x != p.x && !amb.chrono_lt(p, *q) && !amb.chrono_lt(*q, p)) {
                a.push(p);
            }
        }
        let m = Region::whole(&amb);
        let s = extend_to_cauchy_surface(&a, &m).unwrap();
        let graph = s.graph(&amb);
        for p in &a {
            prop_assert!(graph.contains(p));
        }
        let x = amb.space_extent() as i32;
        for i in 0..x {
            prop_assert!((s.at(i) - s.at((i + 1) % x)).abs() <= 1 || x == 1);
        }
    }

    #[test]
    fn ordering_search_is_sound_and_complete(picks in proptest::collection::vec(0usize..12, 1..=5)) {
        let (amb, pool) = pool();
        let mut idx = Vec::new();
        for i in picks {
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        let tuple = DisjointTuple::new(Region::whole(amb), idx.iter().map(|&i| pool[i].clone()).collect());
        prop_assume!(tuple.is_ok());
        let tuple = tuple.unwrap();
        let all = all_time_orderings(&tuple);
        match find_time_ordering(&tuple) {
            Some(rho) => {
                prop_assert!(time_orders(&tuple, &rho));
                prop_assert!(all.contains(&rho));
            }
            None => prop_assert!(all.is_empty()),
        }
        for (r, r2) in all.iter().zip(all.iter().skip(1)) {
            let swaps = factor_into_causal_transpositions(&tuple, r, r2).unwrap();
            prop_assert_eq!(compose_swaps(tuple.len(), &swaps), r.inverse().compose(r2));
        }
    }

    #[test]
    fn green_operators_invert_the_wave_operator(mass in 0u32..=8, t in 0usize..1000, x in 0usize..6, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let m2 = mass as f64 / 8.0;
        let amb = LatticeSpacetime::cylinder(16, 6);
        let cfg = KgConfig::new(&amb, m2, 2).unwrap();
        let (lo, hi) = cfg.safe_rows();
        let p = Point::new(lo + (t as i32 % (hi - lo + 1)), x as i32);
        let mut f = LatticeField::zeros(&amb);
        f.set(&amb, p, C64::new(re, im));
        let last = amb.time_extent() as i32 - 1;
        for kind in [GreenKind::Retarded, GreenKind::Advanced] {
            let u = green(&cfg, &f, kind).unwrap();
            let pu = causal_fa_core::klein_gordon::kg_apply_extended(&cfg, &u);
            for q in amb.points().into_iter().filter(|q| q.t > 0 && q.t < last) {
                prop_assert!((pu.get(&amb, q) - f.get(&amb, q)).norm() < 1e-10);
            }
            let reach: Vec<Point> = u.support(&amb);
            for q in reach {
                let inside = match kind {
                    GreenKind::Retarded => amb.causal_le(p, q),
                    GreenKind::Advanced => amb.causal_le(q, p),
                };
                prop_assert!(inside, "{q} outside the cone of {p}");
            }
        }
        prop_assert!(kg_apply(&cfg, &f).is_ok());
    }

    #[test]
    fn star_products_are_associative_and_involutive(a in poly(), b in poly(), c in poly()) {
        let model = model();
        let star = |x: &Poly, y: &Poly| model.star_product(x, y, KernelKind::Causal).unwrap();
        prop_assert!(deviation(&star(&star(&a, &b), &c), &star(&a, &star(&b, &c))) < 1e-9);
        prop_assert!(deviation(&star(&a, &b).conj(), &star(&b.conj(), &a.conj())) < 1e-9);
        let dirac = |x: &Poly, y: &Poly| model.star_product(x, y, KernelKind::Dirac).unwrap();
        prop_assert!(deviation(&dirac(&a, &b), &dirac(&b, &a)) < 1e-9);
        prop_assert!(deviation(&star(&Poly::one(), &a), &a) < 1e-12);
    }
}

fn pool() -> &'static (Arc<LatticeSpacetime>, Vec<Region>) {
    static POOL: OnceLock<(Arc<LatticeSpacetime>, Vec<Region>)> = OnceLock::new();
    POOL.get_or_init(region_pool)
}

fn model() -> &'static Arc<KgModel> {
    static MODEL: OnceLock<Arc<KgModel>> = OnceLock::new();
    MODEL.get_or_init(|| KgModel::new(KgConfig::new(&LatticeSpacetime::cylinder(14, 4), 0.25, 2).unwrap()))
}

/// Small complex polynomials in the point generators of the safe rows.
fn poly() -> impl Strategy<Value = Poly> {
    let term = (proptest::collection::vec(8u16..48, 0..=2), -1.0..1.0f64, -1.0..1.0f64);
    proptest::collection::vec(term, 1..=3).prop_map(|terms| {
        let mut p = Poly::zero();
        for (gens, re, im) in terms {
            p.add_term(Monomial::from_gens(&gens), C64::new(re, im));
        }
        p
    })
}
