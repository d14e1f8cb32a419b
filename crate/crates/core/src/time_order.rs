//! Time-ordered and time-orderable tuples of regions, and the permutation
//! algebra that acts on them.
//!
//! Permutations are written in one-line notation and act on tuples from the
//! right, `(fσ)_i = f_{σ(i)}`. Composition is ordinary composition of maps,
//! `(στ)(i) = σ(τ(i))`, which gives `(fσ)τ = f(στ)`.
//!
//! # Finding a time-ordering
//!
//! A tuple `(U_1, …, U_n)` is time-ordered when `J⁺(U_i) ∩ U_j = ∅` for all
//! `i < j`. The search builds a digraph with an edge `b → a` whenever
//! `J⁺(U_a) ∩ U_b ≠ ∅`, meaning `b` must be listed before `a`. An order is
//! time-ordered exactly when it respects every edge. If some edge `b → a` had
//! `a` listed before `b`, the pair `(a, b)` would violate the condition.
//! Conversely, a violating pair `i < j` yields an edge from the later entry to
//! the earlier one. Kahn's algorithm with a smallest-index rule finds such an
//! order, or reports a cycle.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use thiserror::Error;

use crate::lattice::{ConeMode, Direction, Region};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimeOrderError {
    #[error("not a permutation of 1..={0}: {1:?}")]
    InvalidPerm(usize, Vec<usize>),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("inner tuple {0} targets a region other than the matching outer part")]
    TargetMismatch(usize),
    #[error("parts {0} and {1} overlap")]
    NotDisjoint(usize, usize),
    #[error("part {0} is not contained in the target")]
    NotContained(usize),
    #[error("permutation {0} does not time-order the tuple")]
    NotTimeOrdering(Perm),
    #[error("swap at position {0} exchanges causally related regions")]
    CausalSwap(usize),
    #[error("empty blocks are not allowed in a block sum")]
    EmptyBlock,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    img: Vec<usize>,
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.one_line())
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.one_line())
    }
}

impl Perm {
    /// From one-line notation on `1..=n`.
    pub fn new(one_line: &[usize]) -> Result<Self, TimeOrderError> {
        let n = one_line.len();
        let mut seen = vec![false; n];
        for &v in one_line {
            if v == 0 || v > n || seen[v - 1] {
                return Err(TimeOrderError::InvalidPerm(n, one_line.to_vec()));
            }
            seen[v - 1] = true;
        }
        Ok(Perm { img: one_line.iter().map(|v| v - 1).collect() })
    }

    pub(crate) fn from_images(img: Vec<usize>) -> Self {
        Perm { img }
    }

    pub fn identity(n: usize) -> Self {
        Perm { img: (0..n).collect() }
    }

    /// Swaps positions `j` and `j + 1` (zero-based).
    pub fn adjacent_transposition(n: usize, j: usize) -> Self {
        let mut img: Vec<usize> = (0..n).collect();
        img.swap(j, j + 1);
        Perm { img }
    }

    pub fn len(&self) -> usize {
        self.img.len()
    }

    pub fn is_empty(&self) -> bool {
        self.img.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.img.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn one_line(&self) -> Vec<usize> {
        self.img.iter().map(|v| v + 1).collect()
    }

    /// Zero-based image of a zero-based index.
    pub fn apply(&self, i: usize) -> usize {
        self.img[i]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Perm) -> Perm {
        assert_eq!(self.len(), other.len(), "composing permutations of different degree");
        Perm { img: other.img.iter().map(|&i| self.img[i]).collect() }
    }

    pub fn inverse(&self) -> Perm {
        let mut img = vec![0; self.len()];
        for (i, &v) in self.img.iter().enumerate() {
            img[v] = i;
        }
        Perm { img }
    }

    /// Right action on a tuple: entry `i` of the result is `items[σ(i)]`.
    pub fn act<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.img.iter().map(|&i| items[i].clone()).collect()
    }

    /// All permutations of degree `n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Perm> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Perm { img: cur.clone() });
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
            let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
            cur.swap(i - 1, j);
            cur[i..].reverse();
        }
        out
    }
}

/// Block permutation: moves the contiguous blocks of sizes `k` as `rho0`
/// moves letters. Block `i` of the result is old block `rho0(i)`.
pub fn block_perm(rho0: &Perm, k: &[usize]) -> Result<Perm, TimeOrderError> {
    if k.len() != rho0.len() {
        return Err(TimeOrderError::SizeMismatch { expected: rho0.len(), got: k.len() });
    }
    let mut old_off = vec![0; k.len()];
    for i in 1..k.len() {
        old_off[i] = old_off[i - 1] + k[i - 1];
    }
    let mut img = Vec::with_capacity(k.iter().sum());
    for i in 0..k.len() {
        let b = rho0.apply(i);
        img.extend(old_off[b]..old_off[b] + k[b]);
    }
    Ok(Perm { img })
}

/// Block sum: permutation `perms[i]` acts on block `i`.
pub fn sum_perm(perms: &[Perm]) -> Result<Perm, TimeOrderError> {
    let mut img = Vec::new();
    for p in perms {
        if p.is_empty() {
            return Err(TimeOrderError::EmptyBlock);
        }
        let off = img.len();
        img.extend(p.img.iter().map(|v| v + off));
    }
    Ok(Perm { img })
}

/// Target region with an ordered list of pairwise disjoint parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisjointTuple {
    target: Region,
    parts: Vec<Region>,
}

impl DisjointTuple {
    pub fn new(target: Region, parts: Vec<Region>) -> Result<Self, TimeOrderError> {
        for (i, p) in parts.iter().enumerate() {
            if !p.is_subregion_of(&target) {
                return Err(TimeOrderError::NotContained(i));
            }
            for (j, q) in parts.iter().enumerate().skip(i + 1) {
                if !p.set().is_disjoint(q.set()) {
                    return Err(TimeOrderError::NotDisjoint(i, j));
                }
            }
        }
        Ok(DisjointTuple { target, parts })
    }

    /// The 1-tuple of an inclusion `from ⊆ to`.
    pub fn inclusion(from: &Region, to: &Region) -> Result<Self, TimeOrderError> {
        Self::new(to.clone(), vec![from.clone()])
    }

    pub fn target(&self) -> &Region {
        &self.target
    }

    pub fn parts(&self) -> &[Region] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `fσ`.
    pub fn permuted(&self, sigma: &Perm) -> Result<Self, TimeOrderError> {
        if sigma.len() != self.len() {
            return Err(TimeOrderError::SizeMismatch { expected: self.len(), got: sigma.len() });
        }
        Ok(DisjointTuple { target: self.target.clone(), parts: sigma.act(&self.parts) })
    }
}

fn meets_future_of(a: &Region, b: &Region) -> bool {
    let amb = a.ambient();
    !amb.cone(a.set(), Direction::Future, ConeMode::Causal).is_disjoint(b.set())
}

pub fn is_time_ordered(tuple: &DisjointTuple) -> bool {
    let p = tuple.parts();
    (0..p.len()).all(|i| (i + 1..p.len()).all(|j| !meets_future_of(&p[i], &p[j])))
}

pub fn time_orders(tuple: &DisjointTuple, rho: &Perm) -> bool {
    rho.len() == tuple.len() && tuple.permuted(rho).is_ok_and(|t| is_time_ordered(&t))
}

pub fn find_time_ordering(tuple: &DisjointTuple) -> Option<Perm> {
    let p = tuple.parts();
    let n = p.len();
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for a in 0..n {
        for b in 0..n {
            if a != b && meets_future_of(&p[a], &p[b]) {
                succ[b].push(a);
                indeg[a] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(Reverse(w));
            }
        }
    }
    (order.len() == n).then(|| Perm::from_images(order))
}

/// Every time-ordering permutation, by scanning all of `Σ_n`.
pub fn all_time_orderings(tuple: &DisjointTuple) -> Vec<Perm> {
    Perm::all(tuple.len()).into_iter().filter(|r| time_orders(tuple, r)).collect()
}

/// `f(g_1, …, g_n)`: concatenation of the inner tuples, targeting the outer
/// target.
pub fn compose_tuples(outer: &DisjointTuple, inners: &[DisjointTuple]) -> Result<DisjointTuple, TimeOrderError> {
    if inners.len() != outer.len() {
        return Err(TimeOrderError::SizeMismatch { expected: outer.len(), got: inners.len() });
    }
    let mut parts = Vec::new();
    for (i, (g, part)) in inners.iter().zip(outer.parts()).enumerate() {
        if g.target() != part {
            return Err(TimeOrderError::TargetMismatch(i));
        }
        parts.extend(g.parts().iter().cloned());
    }
    DisjointTuple::new(outer.target().clone(), parts)
}

/// Adjacent swaps carrying the arrangement `fρ` to `fρ′`. Position `j`
/// (one-based) exchanges entries `j` and `j + 1`. Each swap is checked to
/// exchange causally disjoint regions.
pub fn factor_into_causal_transpositions(
    tuple: &DisjointTuple,
    rho: &Perm,
    rho_prime: &Perm,
) -> Result<Vec<usize>, TimeOrderError> {
    for r in [rho, rho_prime] {
        if !time_orders(tuple, r) {
            return Err(TimeOrderError::NotTimeOrdering(r.clone()));
        }
    }
    let parts = tuple.parts();
    let mut cur = rho.img.clone();
    let mut swaps = Vec::new();
    for k in 0..cur.len() {
        let want = rho_prime.apply(k);
        let mut j = cur.iter().position(|&v| v == want).expect("same letters");
        while j > k {
            let (a, b) = (&parts[cur[j - 1]], &parts[cur[j]]);
            if !a.ambient().are_causally_disjoint(a.set(), b.set()) {
                return Err(TimeOrderError::CausalSwap(j));
            }
            cur.swap(j - 1, j);
            swaps.push(j);
            j -= 1;
        }
    }
    Ok(swaps)
}

/// Product of the adjacent transpositions named by one-based positions.
pub fn compose_swaps(n: usize, swaps: &[usize]) -> Perm {
    swaps
        .iter()
        .fold(Perm::identity(n), |acc, &j| acc.compose(&Perm::adjacent_transposition(n, j - 1)))
}
