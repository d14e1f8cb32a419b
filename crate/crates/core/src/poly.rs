//! Sparse complex polynomials in commuting generators.
//!
//! Generators are ambient lattice point indices. A monomial is a sorted
//! multiset of generators; a polynomial maps monomials to coefficients.

use std::fmt;

use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

pub type C64 = Complex64;
pub type Gen = u16;

/// Largest total degree a product may reach.
pub const MAX_PRODUCT_DEGREE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("product degree {got} exceeds the cap of {cap}")]
pub struct DegreeCapError {
    pub got: usize,
    pub cap: usize,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(SmallVec<[Gen; 8]>);

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|g| format!("g{g}")).collect();
        write!(f, "{}", parts.join("*"))
    }
}

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn from_gens(gens: &[Gen]) -> Self {
        let mut v: SmallVec<[Gen; 8]> = gens.iter().copied().collect();
        v.sort_unstable();
        Monomial(v)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn gens(&self) -> &[Gen] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut v = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                v.push(a[i]);
                i += 1;
            } else {
                v.push(b[j]);
                j += 1;
            }
        }
        v.extend_from_slice(&a[i..]);
        v.extend_from_slice(&b[j..]);
        Monomial(v)
    }

    /// `self · h`.
    pub fn with_gen(&self, h: Gen) -> Monomial {
        let mut v = self.0.clone();
        let at = v.partition_point(|&g| g <= h);
        v.insert(at, h);
        Monomial(v)
    }

    /// Degree-graded, then lexicographic; the basis order of spanning sets.
    pub fn graded_cmp(&self, other: &Monomial) -> std::cmp::Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

#[derive(Clone, Default)]
pub struct Poly {
    terms: FxHashMap<Monomial, C64>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.sorted_terms().iter().map(|(m, c)| format!("({:.6}{:+.6}i)·{m:?}", c.re, c.im)).collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    pub fn constant(c: C64) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn monomial(m: Monomial) -> Self {
        Self::term(m, C64::new(1.0, 0.0))
    }

    pub fn generator(g: Gen) -> Self {
        Self::monomial(Monomial::from_gens(&[g]))
    }

    pub fn term(m: Monomial, c: C64) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(m).or_default() += c;
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn sorted_terms(&self) -> Vec<(Monomial, C64)> {
        let mut v: Vec<(Monomial, C64)> = self.terms.iter().map(|(m, c)| (m.clone(), *c)).collect();
        v.sort_by(|a, b| a.0.graded_cmp(&b.0));
        v
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn generators(&self) -> Vec<Gen> {
        let mut g: Vec<Gen> = self.terms.keys().flat_map(|m| m.gens().iter().copied()).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), *c);
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    /// Multiplies the degree-`k` part by `f(k)`.
    pub fn scale_by_degree(&self, f: impl Fn(usize) -> C64) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * f(m.degree()))).collect() }
    }

    pub fn conj(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.conj())).collect() }
    }

    /// Drops coefficients with modulus at most `tol`.
    pub fn pruned(&self, tol: f64) -> Poly {
        Poly { terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(m, c)| (m.clone(), *c)).collect() }
    }

    /// Commutative product.
    pub fn mul(&self, other: &Poly) -> Result<Poly, DegreeCapError> {
        let got = self.degree() + other.degree();
        if got > MAX_PRODUCT_DEGREE {
            return Err(DegreeCapError { got, cap: MAX_PRODUCT_DEGREE });
        }
        let mut out = Poly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        Ok(out)
    }

    /// Replaces each generator by a linear combination of generators and
    /// expands. `image(g)` returns the combination for `g`.
    ///
    /// Horner scheme over the sorted monomials: terms sharing a prefix share
    /// the expansion of everything after it.
    pub fn substitute<'a>(&self, image: &dyn Fn(Gen) -> &'a [(Gen, f64)]) -> Poly {
        let mut items: Vec<(&[Gen], C64)> = self.terms.iter().map(|(m, c)| (m.gens(), *c)).collect();
        items.sort_unstable_by(|a, b| a.0.cmp(b.0));
        horner(&items, 0, image)
    }
}

/// `Σ c·image(m[pos..])` for items sharing the prefix `m[..pos]`.
fn horner<'a>(items: &[(&[Gen], C64)], pos: usize, image: &dyn Fn(Gen) -> &'a [(Gen, f64)]) -> Poly {
    let mut out = Poly::zero();
    let mut i = 0;
    while i < items.len() && items[i].0.len() == pos {
        out.add_term(Monomial::one(), items[i].1);
        i += 1;
    }
    while i < items.len() {
        let g = items[i].0[pos];
        let j = i + items[i..].iter().take_while(|(m, _)| m[pos] == g).count();
        let tail = horner(&items[i..j], pos + 1, image);
        for (m, c) in &tail.terms {
            for &(h, w) in image(g) {
                out.add_term(m.with_gen(h), c * w);
            }
        }
        i = j;
    }
    out
}

/// Relative max-norm deviation `‖lhs − rhs‖∞ / max(1, ‖rhs‖∞)`.
pub fn deviation(lhs: &Poly, rhs: &Poly) -> f64 {
    let diff = lhs.sub(rhs).max_abs();
    diff / rhs.max_abs().max(1.0)
}

/// Bi-differential contraction product
/// `· ∘ exp(c ⟨K, d ⊗ d⟩)(a ⊗ b)`: a sum over partial matchings between the
/// factors of each pair of monomials, a matched pair `(v, w)` contributing
/// `c · K(v, w)`. The series terminates after `min(deg a, deg b)` contractions.
pub fn contraction_product(
    a: &Poly,
    b: &Poly,
    c: C64,
    kernel: &dyn Fn(Gen, Gen) -> f64,
) -> Result<Poly, DegreeCapError> {
    let got = a.degree() + b.degree();
    if got > MAX_PRODUCT_DEGREE {
        return Err(DegreeCapError { got, cap: MAX_PRODUCT_DEGREE });
    }
    let mut out = Poly::zero();
    let mut kmat = Vec::new();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            let (ga, gb) = (ma.gens(), mb.gens());
            kmat.clear();
            for &v in ga {
                for &w in gb {
                    kmat.push(c * kernel(v, w));
                }
            }
            let mut rest: SmallVec<[Gen; 16]> = SmallVec::new();
            matchings(ga, gb, &kmat, 0, 0, ca * cb, &mut rest, &mut out);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn matchings(
    ga: &[Gen],
    gb: &[Gen],
    kmat: &[C64],
    i: usize,
    used: u32,
    weight: C64,
    rest: &mut SmallVec<[Gen; 16]>,
    out: &mut Poly,
) {
    if i == ga.len() {
        let mut gens: SmallVec<[Gen; 8]> = rest.iter().copied().collect();
        for (j, &w) in gb.iter().enumerate() {
            if used >> j & 1 == 0 {
                gens.push(w);
            }
        }
        gens.sort_unstable();
        out.add_term(Monomial(gens), weight);
        return;
    }
    rest.push(ga[i]);
    matchings(ga, gb, kmat, i + 1, used, weight, rest, out);
    rest.pop();
    for j in 0..gb.len() {
        if used >> j & 1 == 1 {
            continue;
        }
        let k = kmat[i * gb.len() + j];
        if k == C64::new(0.0, 0.0) {
            continue;
        }
        matchings(ga, gb, kmat, i + 1, used | 1 << j, weight * k, rest, out);
    }
}

/// Truncated space spanned by monomials of degree at most `max_degree` in an
/// ordered generator list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinVec {
    generators: Vec<Gen>,
    max_degree: usize,
}

impl FinVec {
    pub fn new(generators: Vec<Gen>, max_degree: usize) -> Self {
        FinVec { generators, max_degree }
    }

    pub fn generators(&self) -> &[Gen] {
        &self.generators
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Monomials of exactly degree `k`, in graded-lex order.
    pub fn monomials_of_degree(&self, k: usize) -> Vec<Monomial> {
        let n = self.generators.len();
        let mut out = Vec::new();
        let mut idx = vec![0usize; k];
        if k == 0 {
            return vec![Monomial::one()];
        }
        if n == 0 {
            return out;
        }
        loop {
            let gens: Vec<Gen> = idx.iter().map(|&i| self.generators[i]).collect();
            out.push(Monomial::from_gens(&gens));
            let Some(p) = (0..k).rev().find(|&p| idx[p] + 1 < n) else { break };
            let v = idx[p] + 1;
            for q in p..k {
                idx[q] = v;
            }
        }
        out.sort_by(|a, b| a.graded_cmp(b));
        out
    }

    /// The spanning set: all monomials of degree `0..=max_degree`.
    pub fn basis(&self) -> Vec<Monomial> {
        (0..=self.max_degree).flat_map(|k| self.monomials_of_degree(k)).collect()
    }

    pub fn dimension(&self) -> usize {
        self.basis().len()
    }

    pub fn index_of(&self) -> FxHashMap<Monomial, usize> {
        self.basis().into_iter().enumerate().map(|(i, m)| (m, i)).collect()
    }
}

/// How spanning-set tuples are chosen for a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleConfig {
    /// Degree cap of each input's spanning set.
    pub max_degree: usize,
    /// Cap on the summed degree of one input tuple.
    pub max_total_degree: usize,
    pub budget: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { max_degree: 3, max_total_degree: 6, budget: 48, seed: 7 }
    }
}

/// Tuples drawn from the product of spanning sets, restricted to total degree
/// at most `max_total_degree`. Exhaustive when that set is within budget;
/// otherwise stratified by degree pattern with a seeded generator, at least
/// one tuple per pattern. The flag reports which.
pub fn spanning_tuples(spaces: &[Vec<Monomial>], cfg: &SampleConfig) -> (Vec<Vec<Monomial>>, bool) {
    let by_degree: Vec<Vec<Vec<Monomial>>> = spaces
        .iter()
        .map(|s| {
            let top = s.iter().map(Monomial::degree).max().unwrap_or(0);
            (0..=top).map(|k| s.iter().filter(|m| m.degree() == k).cloned().collect()).collect()
        })
        .collect();
    let mut patterns: Vec<Vec<usize>> = vec![vec![]];
    for groups in &by_degree {
        let degs: Vec<usize> = (0..groups.len()).filter(|&k| !groups[k].is_empty()).collect();
        patterns = patterns
            .into_iter()
            .flat_map(|p| degs.iter().map(move |&k| [p.clone(), vec![k]].concat()))
            .filter(|p| p.iter().sum::<usize>() <= cfg.max_total_degree)
            .collect();
    }
    let combos = |pat: &[usize]| -> Option<usize> {
        pat.iter().zip(&by_degree).try_fold(1usize, |acc, (&k, g)| acc.checked_mul(g[k].len()))
    };
    let total = patterns.iter().try_fold(0usize, |acc, p| combos(p).and_then(|c| acc.checked_add(c)));
    if total.is_some_and(|t| t <= cfg.budget) {
        let mut out = Vec::new();
        for pat in &patterns {
            let groups: Vec<&Vec<Monomial>> = pat.iter().zip(&by_degree).map(|(&k, g)| &g[k]).collect();
            let mut idx = vec![0usize; groups.len()];
            loop {
                out.push(idx.iter().zip(&groups).map(|(&i, g)| g[i].clone()).collect());
                let Some(p) = (0..groups.len()).rev().find(|&p| idx[p] + 1 < groups[p].len()) else { break };
                idx[p] += 1;
                for q in p + 1..groups.len() {
                    idx[q] = 0;
                }
            }
        }
        return (out, true);
    }
    let per = (cfg.budget / patterns.len().max(1)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for pat in &patterns {
        let n = combos(pat).unwrap_or(usize::MAX);
        for _ in 0..per.min(n) {
            out.push(pat.iter().zip(&by_degree).map(|(&k, g)| g[k].choose(&mut rng).expect("nonempty").clone()).collect());
        }
    }
    (out, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn monomial_product_is_sorted_merge() {
        let a = Monomial::from_gens(&[3, 1]);
        let b = Monomial::from_gens(&[2, 1]);
        assert_eq!(a.mul(&b), Monomial::from_gens(&[1, 1, 2, 3]));
    }

    #[test]
    fn single_contraction() {
        let k = |v: Gen, w: Gen| if (v, w) == (1, 2) { 3.0 } else { 0.0 };
        let p = contraction_product(&Poly::generator(1), &Poly::generator(2), c(0.0, 0.5), &k).unwrap();
        assert_eq!(p.coefficient(&Monomial::from_gens(&[1, 2])), c(1.0, 0.0));
        assert_eq!(p.coefficient(&Monomial::one()), c(0.0, 1.5));
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn double_contraction_counts_matchings() {
        // x² ⋆ y² with K(x,y) = 1 and c = 1: x²y² + 4xy + 2.
        let k = |_: Gen, _: Gen| 1.0;
        let a = Poly::monomial(Monomial::from_gens(&[0, 0]));
        let b = Poly::monomial(Monomial::from_gens(&[1, 1]));
        let p = contraction_product(&a, &b, c(1.0, 0.0), &k).unwrap();
        assert_eq!(p.coefficient(&Monomial::from_gens(&[0, 0, 1, 1])), c(1.0, 0.0));
        assert_eq!(p.coefficient(&Monomial::from_gens(&[0, 1])), c(4.0, 0.0));
        assert_eq!(p.coefficient(&Monomial::one()), c(2.0, 0.0));
    }

    #[test]
    fn unit_is_neutral() {
        let k = |_: Gen, _: Gen| 1.0;
        let a = Poly::monomial(Monomial::from_gens(&[0, 4])).add(&Poly::generator(2).scale(c(0.0, 2.0)));
        let l = contraction_product(&Poly::one(), &a, c(0.0, 0.5), &k).unwrap();
        let r = contraction_product(&a, &Poly::one(), c(0.0, 0.5), &k).unwrap();
        assert_eq!(deviation(&l, &a), 0.0);
        assert_eq!(deviation(&r, &a), 0.0);
    }

    #[test]
    fn substitution_expands() {
        let images: Vec<Vec<(Gen, f64)>> = vec![vec![(0, 1.0), (1, 1.0)], vec![(1, 2.0)]];
        let p = Poly::monomial(Monomial::from_gens(&[0, 0]));
        let q = p.substitute(&|g| images[g as usize].as_slice());
        assert_eq!(q.coefficient(&Monomial::from_gens(&[0, 0])), c(1.0, 0.0));
        assert_eq!(q.coefficient(&Monomial::from_gens(&[0, 1])), c(2.0, 0.0));
        assert_eq!(q.coefficient(&Monomial::from_gens(&[1, 1])), c(1.0, 0.0));
    }

    #[test]
    fn degree_cap_errors() {
        let big = Poly::monomial(Monomial::from_gens(&[0; 9]));
        assert!(big.mul(&big).is_err());
        assert!(contraction_product(&big, &big, c(1.0, 0.0), &|_, _| 0.0).is_err());
    }

    #[test]
    fn finvec_counts() {
        let v = FinVec::new(vec![5, 7, 9], 3);
        assert_eq!(v.dimension(), 20);
        assert_eq!(v.basis()[0], Monomial::one());
        assert_eq!(v.monomials_of_degree(2).len(), 6);
    }

    #[test]
    fn sampling_is_exhaustive_within_budget() {
        let s = FinVec::new(vec![0, 1], 1).basis();
        let (t, all) = spanning_tuples(&[s.clone(), s], &SampleConfig { max_degree: 1, max_total_degree: 2, budget: 9, seed: 1 });
        assert!(all);
        assert_eq!(t.len(), 9);
    }

    #[test]
    fn sampling_is_deterministic_and_stratified() {
        let s = FinVec::new((0..6).collect(), 3).basis();
        let cfg = SampleConfig { max_degree: 3, max_total_degree: 6, budget: 32, seed: 11 };
        let (a, all) = spanning_tuples(&[s.clone(), s.clone()], &cfg);
        let (b, _) = spanning_tuples(&[s.clone(), s], &cfg);
        assert!(!all);
        assert_eq!(a, b);
        assert!(a.iter().any(|t| t[0].degree() == 0 && t[1].degree() == 3));
    }
}
