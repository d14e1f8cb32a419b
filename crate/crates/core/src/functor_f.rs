//! From an AQFT to a time-orderable prefactorization algebra, plus
//! conjugation, involutions and intertwiners.
//!
//! For a time-orderable tuple `f = (f₁,…,fₙ)` into `N` with time-ordering
//! permutation `ρ`, the product is the `n`-fold multiplication of the
//! pushed-forward inputs in the order `ρ(1),…,ρ(n)`, folded from the left.

use std::sync::Arc;

use crate::functor_a::{AqftFromPfa, PmObject};
use crate::lattice::Region;
use crate::poly::{deviation, Gen, Poly, SampleConfig, C64};
use crate::theory::{sample_deviation, spanning_set, Aqft, CheckEntry, TheoryError, TheoryRef, Topfa, TOLERANCE};
use crate::time_order::{find_time_ordering, time_orders, DisjointTuple, Perm, TimeOrderError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fold {
    Left,
    Right,
}

/// Product of `inputs` along the tuple, ordered by `rho`.
pub fn time_ordered_product_with(
    a: &dyn Aqft,
    tuple: &DisjointTuple,
    inputs: &[Poly],
    rho: &Perm,
    fold: Fold,
) -> Result<Poly, TheoryError> {
    if inputs.len() != tuple.len() || rho.len() != tuple.len() {
        return Err(TimeOrderError::SizeMismatch { expected: tuple.len(), got: inputs.len() }.into());
    }
    if !time_orders(tuple, rho) {
        return Err(TimeOrderError::NotTimeOrdering(rho.clone()).into());
    }
    let n = tuple.target();
    let parts = tuple.parts();
    match tuple.len() {
        0 => a.unit(n),
        1 => a.push_forward(&parts[0], n, &inputs[0]),
        _ => {
            let pushed = (0..tuple.len())
                .map(|i| {
                    let j = rho.apply(i);
                    a.push_forward(&parts[j], n, &inputs[j])
                })
                .collect::<Result<Vec<_>, _>>()?;
            match fold {
                Fold::Left => {
                    let mut acc = pushed[0].clone();
                    for x in &pushed[1..] {
                        acc = a.multiply(n, &acc, x)?;
                    }
                    Ok(acc)
                }
                Fold::Right => {
                    let mut acc = pushed[pushed.len() - 1].clone();
                    for x in pushed[..pushed.len() - 1].iter().rev() {
                        acc = a.multiply(n, x, &acc)?;
                    }
                    Ok(acc)
                }
            }
        }
    }
}

/// Product with the deterministic time-ordering permutation.
pub fn time_ordered_product(a: &dyn Aqft, tuple: &DisjointTuple, inputs: &[Poly]) -> Result<Poly, TheoryError> {
    let rho = find_time_ordering(tuple).ok_or(TheoryError::NotTimeOrderable)?;
    time_ordered_product_with(a, tuple, inputs, &rho, Fold::Left)
}

/// The time-orderable prefactorization algebra of an AQFT.
pub struct PfaFromAqft {
    a: Arc<dyn Aqft>,
}

pub fn apply_f(a: Arc<dyn Aqft>) -> PfaFromAqft {
    PfaFromAqft { a }
}

impl PfaFromAqft {
    pub fn source(&self) -> &Arc<dyn Aqft> {
        &self.a
    }
}

impl Topfa for PfaFromAqft {
    fn generators(&self, m: &Region) -> Result<Vec<Gen>, TheoryError> {
        self.a.generators(m)
    }

    fn product(&self, tuple: &DisjointTuple, inputs: &[Poly]) -> Result<Poly, TheoryError> {
        time_ordered_product(self.a.as_ref(), tuple, inputs)
    }
}

fn tuple_spaces(t: TheoryRef<'_>, tuple: &DisjointTuple, degree: usize) -> Result<Vec<Vec<crate::poly::Monomial>>, TheoryError> {
    tuple.parts().iter().map(|p| spanning_set(t, p, degree)).collect()
}

/// The product does not depend on which time-ordering permutation is used.
pub fn check_rho_independence(
    a: &dyn Aqft,
    tuple: &DisjointTuple,
    rho1: &Perm,
    rho2: &Perm,
    cfg: &SampleConfig,
) -> Result<CheckEntry, TheoryError> {
    for rho in [rho1, rho2] {
        if !time_orders(tuple, rho) {
            return Err(TimeOrderError::NotTimeOrdering(rho.clone()).into());
        }
    }
    let spaces = tuple_spaces(TheoryRef::Aqft(a), tuple, cfg.max_degree)?;
    let out = sample_deviation(&spaces, cfg, |x| {
        Ok((
            time_ordered_product_with(a, tuple, x, rho1, Fold::Left)?,
            time_ordered_product_with(a, tuple, x, rho2, Fold::Left)?,
        ))
    })?;
    Ok(out.into_entry("f_rho_independence", tuple.target().ambient()))
}

/// Left and right folds of the `n`-fold multiplication agree.
pub fn check_fold_independence(a: &dyn Aqft, tuple: &DisjointTuple, cfg: &SampleConfig) -> Result<CheckEntry, TheoryError> {
    let rho = find_time_ordering(tuple).ok_or(TheoryError::NotTimeOrderable)?;
    let spaces = tuple_spaces(TheoryRef::Aqft(a), tuple, cfg.max_degree)?;
    let out = sample_deviation(&spaces, cfg, |x| {
        Ok((
            time_ordered_product_with(a, tuple, x, &rho, Fold::Left)?,
            time_ordered_product_with(a, tuple, x, &rho, Fold::Right)?,
        ))
    })?;
    Ok(out.into_entry("f_fold_independence", tuple.target().ambient()))
}

/// Products of two prefactorization algebras agree on a tuple.
pub fn check_products_agree(
    name: &str,
    f: &dyn Topfa,
    g: &dyn Topfa,
    tuple: &DisjointTuple,
    cfg: &SampleConfig,
) -> Result<CheckEntry, TheoryError> {
    let spaces = tuple_spaces(TheoryRef::Topfa(f), tuple, cfg.max_degree)?;
    let out = sample_deviation(&spaces, cfg, |x| Ok((f.product(tuple, x)?, g.product(tuple, x)?)))?;
    Ok(out.into_entry(name, tuple.target().ambient()))
}

/// Multiplications of two AQFTs agree on a region.
pub fn check_multiplications_agree(
    name: &str,
    a: &dyn Aqft,
    b: &dyn Aqft,
    m: &Region,
    cfg: &SampleConfig,
) -> Result<CheckEntry, TheoryError> {
    let span = spanning_set(TheoryRef::Aqft(a), m, cfg.max_degree)?;
    let out = sample_deviation(&[span.clone(), span], cfg, |x| Ok((a.multiply(m, &x[0], &x[1])?, b.multiply(m, &x[0], &x[1])?)))?;
    Ok(out.into_entry(name, m.ambient()))
}

/// Conjugate of the opposite theory: `(a, b) ↦ conj μ(conj b, conj a)`,
/// conjugation being coefficient-wise in the real generator basis.
pub struct ConjugateAqft {
    inner: Arc<dyn Aqft>,
}

pub fn conjugate_aqft(a: Arc<dyn Aqft>) -> ConjugateAqft {
    ConjugateAqft { inner: a }
}

impl ConjugateAqft {
    pub fn inner(&self) -> &Arc<dyn Aqft> {
        &self.inner
    }
}

impl Aqft for ConjugateAqft {
    fn generators(&self, m: &Region) -> Result<Vec<Gen>, TheoryError> {
        self.inner.generators(m)
    }

    fn multiply(&self, m: &Region, a: &Poly, b: &Poly) -> Result<Poly, TheoryError> {
        Ok(self.inner.multiply(m, &b.conj(), &a.conj())?.conj())
    }

    fn unit(&self, m: &Region) -> Result<Poly, TheoryError> {
        Ok(self.inner.unit(m)?.conj())
    }

    fn push_forward(&self, from: &Region, to: &Region, a: &Poly) -> Result<Poly, TheoryError> {
        Ok(self.inner.push_forward(from, to, &a.conj())?.conj())
    }
}

/// Antilinear map on each algebra.
pub trait Involution: Send + Sync {
    fn star(&self, m: &Region, a: &Poly) -> Poly;
}

/// Coefficient conjugation with generators fixed.
pub struct CoefficientConjugation;

impl Involution for CoefficientConjugation {
    fn star(&self, _m: &Region, a: &Poly) -> Poly {
        a.conj()
    }
}

pub struct InvolutiveAqft {
    pub base: Arc<dyn Aqft>,
    pub star: Arc<dyn Involution>,
}

/// `star∘star = id`, `star(μ(a,b)) = μ(star b, star a)`, `star(η) = η` on
/// `M`, and `star` commutes with the listed inclusions.
pub fn check_involution(
    inv: &InvolutiveAqft,
    m: &Region,
    inclusions: &[(Region, Region)],
    cfg: &SampleConfig,
) -> Result<Vec<CheckEntry>, TheoryError> {
    let a = inv.base.as_ref();
    let s = inv.star.as_ref();
    let span = spanning_set(TheoryRef::Aqft(a), m, cfg.max_degree)?;
    let twice = sample_deviation(std::slice::from_ref(&span), cfg, |x| Ok((s.star(m, &s.star(m, &x[0])), x[0].clone())))?;
    let anti = sample_deviation(&[span.clone(), span], cfg, |x| {
        let l = s.star(m, &a.multiply(m, &x[0], &x[1])?);
        let r = a.multiply(m, &s.star(m, &x[1]), &s.star(m, &x[0]))?;
        Ok((l, r))
    })?;
    let unit = a.unit(m)?;
    let amb = m.ambient();
    let mut out = vec![
        twice.into_entry("involution_twice", amb),
        anti.into_entry("involution_antimultiplicative", amb),
        CheckEntry::measured("involution_unit", deviation(&s.star(m, &unit), &unit), TOLERANCE),
    ];
    let mut worst: Option<CheckEntry> = None;
    for (u, v) in inclusions {
        let span = spanning_set(TheoryRef::Aqft(a), u, cfg.max_degree)?;
        let e = sample_deviation(&[span], cfg, |x| {
            Ok((s.star(v, &a.push_forward(u, v, &x[0])?), a.push_forward(u, v, &s.star(u, &x[0]))?))
        })?
        .into_entry("involution_naturality", amb);
        if worst.as_ref().is_none_or(|w| e.deviation > w.deviation) {
            worst = Some(e);
        }
    }
    out.extend(worst);
    Ok(out)
}

/// The involution transferred to `F = 𝔽[A]` is a morphism `F → F̄` with
/// `F̄ = 𝔽[Ā]`. In coordinates the morphism is the linear map
/// `κ = conj ∘ star`, and the check is `κ(F(f)(a₁,…)) = F̄(f)(κ a₁,…)`.
pub fn check_transferred_involution(
    inv: &InvolutiveAqft,
    tuple: &DisjointTuple,
    cfg: &SampleConfig,
) -> Result<CheckEntry, TheoryError> {
    let f = apply_f(inv.base.clone());
    let fbar = apply_f(Arc::new(conjugate_aqft(inv.base.clone())));
    let s = inv.star.as_ref();
    let kappa = |m: &Region, a: &Poly| s.star(m, a).conj();
    let spaces = tuple_spaces(TheoryRef::Aqft(inv.base.as_ref()), tuple, cfg.max_degree)?;
    let n = tuple.target();
    let out = sample_deviation(&spaces, cfg, |x| {
        let l = kappa(n, &f.product(tuple, x)?);
        let mapped: Vec<Poly> = x.iter().zip(tuple.parts()).map(|(p, u)| kappa(u, p)).collect();
        Ok((l, fbar.product(tuple, &mapped)?))
    })?;
    Ok(out.into_entry("involution_transferred", n.ambient()))
}

/// Conjugate factorization product on the time-ordered pair `(Σ₊, Σ₋)`
/// against the conjugated product of `F` on the anti-time-ordered pair
/// `(Σ₋, Σ₊)`, with inputs moved across the surface by the inverse
/// restriction maps. When an inverse does not exist the entry is marked
/// not applicable.
pub fn check_transferred_involution_diagram(
    f: Arc<dyn Topfa>,
    pm: &PmObject,
    cfg: &SampleConfig,
) -> Result<CheckEntry, TheoryError> {
    let name = "involution_diagram";
    let m = pm.region();
    let (plus, minus) = (pm.future(), pm.past());
    let built = crate::functor_a::apply_a(f.clone());
    let fbar = apply_f(Arc::new(conjugate_aqft(Arc::new(built))));
    let helper = crate::functor_a::apply_a(f.clone());
    let to_minus = helper.inverse(minus, m);
    let to_plus = helper.inverse(plus, m);
    let ordered = DisjointTuple::new(m.clone(), vec![plus.clone(), minus.clone()])?;
    let anti = DisjointTuple::new(m.clone(), vec![minus.clone(), plus.clone()])?;
    let incl_plus = DisjointTuple::inclusion(plus, m)?;
    let incl_minus = DisjointTuple::inclusion(minus, m)?;
    let spaces = vec![
        spanning_set(TheoryRef::Topfa(f.as_ref()), plus, cfg.max_degree)?,
        spanning_set(TheoryRef::Topfa(f.as_ref()), minus, cfg.max_degree)?,
    ];
    let result = sample_deviation(&spaces, cfg, |x| {
        let lhs = fbar.product(&ordered, x)?;
        let a = f.product(&incl_plus, &[x[0].conj()])?;
        let b = f.product(&incl_minus, &[x[1].conj()])?;
        let a_past = to_minus.solve(&a)?;
        let b_future = to_plus.solve(&b)?;
        let rhs = f.product(&anti, &[a_past, b_future])?.conj();
        Ok((lhs, rhs))
    });
    match result {
        Ok(out) => Ok(out.into_entry(name, m.ambient())),
        Err(TheoryError::NonCauchyConstant { sigma_min }) => Ok(CheckEntry::degenerate(
            name,
            format!("impossible: requires the inverse of a restriction map (smallest singular value {sigma_min:.3e})"),
        )),
        Err(e) => Err(e),
    }
}

/// Componentwise linear map between two theories over the same regions.
pub trait Intertwiner: Send + Sync {
    fn apply(&self, m: &Region, a: &Poly) -> Poly;
}

/// `φ ↦ −φ` on generators, extended multiplicatively.
pub struct GeneratorParity;

impl Intertwiner for GeneratorParity {
    fn apply(&self, _m: &Region, a: &Poly) -> Poly {
        a.scale_by_degree(|k| C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
    }
}

/// `φ ↦ λφ` on generators, extended multiplicatively. Not an algebra map of
/// a deformed product unless `λ² = 1`.
pub struct GeneratorScaling(pub f64);

impl Intertwiner for GeneratorScaling {
    fn apply(&self, _m: &Region, a: &Poly) -> Poly {
        let l = self.0;
        a.scale_by_degree(|k| C64::new(l.powi(k as i32), 0.0))
    }
}

/// `κ` is an AQFT morphism `A → B`: multiplicative and unital on `M`, and
/// natural for `U ⊆ M`.
pub fn check_aqft_morphism(
    a: &dyn Aqft,
    b: &dyn Aqft,
    k: &dyn Intertwiner,
    u: &Region,
    m: &Region,
    cfg: &SampleConfig,
) -> Result<Vec<CheckEntry>, TheoryError> {
    let span = spanning_set(TheoryRef::Aqft(a), m, cfg.max_degree)?;
    let mult = sample_deviation(&[span.clone(), span], cfg, |x| {
        Ok((k.apply(m, &a.multiply(m, &x[0], &x[1])?), b.multiply(m, &k.apply(m, &x[0]), &k.apply(m, &x[1]))?))
    })?;
    let unit = CheckEntry::measured("morphism_unit", deviation(&k.apply(m, &a.unit(m)?), &b.unit(m)?), TOLERANCE);
    let uspan = spanning_set(TheoryRef::Aqft(a), u, cfg.max_degree)?;
    let nat = sample_deviation(&[uspan], cfg, |x| {
        Ok((k.apply(m, &a.push_forward(u, m, &x[0])?), b.push_forward(u, m, &k.apply(u, &x[0]))?))
    })?;
    let amb = m.ambient();
    Ok(vec![mult.into_entry("morphism_multiplicative", amb), unit, nat.into_entry("morphism_natural", amb)])
}

/// `κ` is a prefactorization morphism `F → G` on one tuple.
pub fn check_topfa_morphism(
    f: &dyn Topfa,
    g: &dyn Topfa,
    k: &dyn Intertwiner,
    tuple: &DisjointTuple,
    cfg: &SampleConfig,
) -> Result<CheckEntry, TheoryError> {
    let spaces = tuple_spaces(TheoryRef::Topfa(f), tuple, cfg.max_degree)?;
    let n = tuple.target();
    let out = sample_deviation(&spaces, cfg, |x| {
        let mapped: Vec<Poly> = x.iter().zip(tuple.parts()).map(|(p, u)| k.apply(u, p)).collect();
        Ok((k.apply(n, &f.product(tuple, x)?), g.product(tuple, &mapped)?))
    })?;
    Ok(out.into_entry("morphism_factorization", n.ambient()))
}

/// Convenience: the AQFT of a prefactorization algebra built from `A`.
pub fn round_trip_aqft(a: Arc<dyn Aqft>) -> AqftFromPfa {
    crate::functor_a::apply_a(Arc::new(apply_f(a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::klein_gordon::{KgConfig, KgModel, KgTheory};
    use crate::lattice::{LatticeSpacetime, Point};
    use crate::poly::Monomial;

    fn setup() -> (Arc<LatticeSpacetime>, Arc<KgModel>) {
        let amb = LatticeSpacetime::cylinder(16, 6);
        let model = KgModel::new(KgConfig::new(&amb, 0.25, 2).unwrap());
        (amb, model)
    }

    fn cfg() -> SampleConfig {
        SampleConfig { max_degree: 2, max_total_degree: 4, budget: 12, seed: 5 }
    }

    #[test]
    fn small_tuples() {
        let (amb, model) = setup();
        let a: Arc<dyn Aqft> = Arc::new(KgTheory::quantum(&model));
        let n = Region::slab(&amb, 3, 12).unwrap();
        let f = apply_f(a.clone());
        let empty = DisjointTuple::new(n.clone(), vec![]).unwrap();
        assert_eq!(deviation(&f.product(&empty, &[]).unwrap(), &Poly::one()), 0.0);
        let u = Region::slab(&amb, 4, 5).unwrap();
        let x = Poly::generator(amb.index(Point::new(4, 1)) as Gen);
        let one = DisjointTuple::inclusion(&u, &n).unwrap();
        assert_eq!(deviation(&f.product(&one, std::slice::from_ref(&x)).unwrap(), &a.push_forward(&u, &n, &x).unwrap()), 0.0);
    }

    #[test]
    fn conjugate_commutator_kernels() {
        let (amb, model) = setup();
        let kg = KgTheory::quantum(&model);
        let a: Arc<dyn Aqft> = Arc::new(kg.clone());
        let n = Region::slab(&amb, 3, 12).unwrap();
        let (p, q) = (amb.index(Point::new(9, 2)) as Gen, amb.index(Point::new(6, 2)) as Gen);
        let (x, y) = (Poly::generator(p), Poly::generator(q));
        let g = kg.commutator_kernel(p, q);
        assert!(g != 0.0);
        let bracket = |t: &dyn Aqft| {
            let xy = t.multiply(&n, &x, &y).unwrap();
            let yx = t.multiply(&n, &y, &x).unwrap();
            xy.sub(&yx).coefficient(&Monomial::one())
        };
        let conj = conjugate_aqft(a.clone());
        assert_eq!(bracket(&conj), C64::new(0.0, g));
        // Conjugation without the order reversal flips the kernel.
        struct Plain(Arc<dyn Aqft>);
        impl Aqft for Plain {
            fn generators(&self, m: &Region) -> Result<Vec<Gen>, TheoryError> {
                self.0.generators(m)
            }
            fn multiply(&self, m: &Region, a: &Poly, b: &Poly) -> Result<Poly, TheoryError> {
                Ok(self.0.multiply(m, &a.conj(), &b.conj())?.conj())
            }
            fn unit(&self, m: &Region) -> Result<Poly, TheoryError> {
                self.0.unit(m)
            }
            fn push_forward(&self, from: &Region, to: &Region, a: &Poly) -> Result<Poly, TheoryError> {
                self.0.push_forward(from, to, a)
            }
        }
        assert_eq!(bracket(&Plain(a.clone())), C64::new(0.0, -g));
        let twice = conjugate_aqft(Arc::new(conjugate_aqft(a.clone())));
        let z = x.scale(C64::new(0.3, 0.7));
        assert_eq!(deviation(&twice.multiply(&n, &z, &y).unwrap(), &a.multiply(&n, &z, &y).unwrap()), 0.0);
        let toy: Arc<dyn Aqft> = Arc::new(KgTheory::classical(&model));
        assert_eq!(
            deviation(&conjugate_aqft(toy.clone()).multiply(&n, &z, &y).unwrap(), &toy.multiply(&n, &z, &y).unwrap()),
            0.0
        );
    }

    #[test]
    fn standard_involution_and_parity_pass() {
        let (amb, model) = setup();
        let a: Arc<dyn Aqft> = Arc::new(KgTheory::quantum(&model));
        let n = Region::slab(&amb, 3, 12).unwrap();
        let u = Region::slab(&amb, 5, 6).unwrap();
        let inv = InvolutiveAqft { base: a.clone(), star: Arc::new(CoefficientConjugation) };
        for e in check_involution(&inv, &n, &[(u.clone(), n.clone())], &cfg()).unwrap() {
            assert!(e.pass, "{e:?}");
        }
        for e in check_aqft_morphism(a.as_ref(), a.as_ref(), &GeneratorParity, &u, &n, &cfg()).unwrap() {
            assert!(e.pass, "{e:?}");
        }
        // Commutators only live on a few pairs near the middle rows, so the
        // degree-one inputs are enumerated.
        let exhaustive = SampleConfig { max_degree: 1, max_total_degree: 2, budget: 400, seed: 1 };
        let bad = check_aqft_morphism(a.as_ref(), a.as_ref(), &GeneratorScaling(2.0), &u, &n, &exhaustive).unwrap();
        assert!(!bad[0].pass, "{bad:?}");
    }
}
