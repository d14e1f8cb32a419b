//! Deliberately wrong variants of every component the suites exercise.
//!
//! Each fault swaps one or more entries of an [`Implementations`] set; the
//! suites are then rerun on the corrupted set. A fault is caught when at
//! least one check of its suites fails.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::functor_f::{GeneratorScaling, Intertwiner, Involution};
use crate::klein_gordon::{KgModel, KgTheory, Propagators};
use crate::lattice::{LatticeSpacetime, Point, Region};
use crate::poly::{Gen, Monomial, Poly, C64};
use crate::suites::{Implementations, Suite};
use crate::theory::{scaled, Aqft, TheoryError, Topfa};
use crate::time_order::{block_perm, factor_into_causal_transpositions, find_time_ordering, DisjointTuple, Perm, TimeOrderError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Products of two or more factors scaled by 1.1.
    ScaledProduct,
    /// `μ(a, b) + 0.1 ζ(a) ζ(b)`, `ζ` the sum of the degree-one coefficients.
    /// Unital, but `ν(ν(φ, φ), ψ) - ν(φ, ν(φ, ψ)) = 0.1 (ψ - φ)`.
    NonAssociative,
    /// Commutator kernel offset at spacelike pairs, and one retarded entry
    /// set at a spacelike pair.
    CorruptedPropagator,
    /// Green's recursion run with a shifted mass.
    DefectiveRecursion,
    /// Products scaled by `1 + 0.01·t`, `t` the earliest time of the first part.
    SurfaceDependentProduct,
    /// Inclusion maps keep only the constant term, identities included.
    TrivialRestriction,
    /// Proper inclusion maps scaled by 1.1.
    NonFunctorialMap,
    /// Time-ordered products multiplied in reverse order.
    ReversedTimeOrder,
    /// `a ↦ −ā`.
    SignFlippedStar,
    /// `a ↦ (1 + 0.1·t) ā`, `t` the earliest time of the region.
    RegionDependentStar,
    /// Generators scaled by 2.
    ScalingIntertwiner,
    /// `a ↦ (1 + 0.1·t) a`, `t` the earliest time of the region.
    RegionDependentIntertwiner,
    /// `Δt ≥ d − 1` as the causal relation.
    WidenedCausalCone,
    /// Causal and chronological relations exchanged.
    SwappedCones,
    /// Chronological relation cut off beyond two time steps.
    TruncatedChronology,
    /// Every subregion declared Cauchy.
    LenientCauchy,
    /// Search always returns the identity.
    IdentityOrdering,
    /// `ρσ⁻¹` instead of `σ⁻¹ρ`.
    ReversedTransfer,
    /// Block permutation built from `ρ₀⁻¹`.
    InverseBlockPermutation,
    /// Factorization with its last swap dropped.
    DroppedSwap,
}

impl Fault {
    pub const ALL: [Fault; 20] = [
        Fault::ScaledProduct,
        Fault::NonAssociative,
        Fault::CorruptedPropagator,
        Fault::DefectiveRecursion,
        Fault::SurfaceDependentProduct,
        Fault::TrivialRestriction,
        Fault::NonFunctorialMap,
        Fault::ReversedTimeOrder,
        Fault::SignFlippedStar,
        Fault::RegionDependentStar,
        Fault::ScalingIntertwiner,
        Fault::RegionDependentIntertwiner,
        Fault::WidenedCausalCone,
        Fault::SwappedCones,
        Fault::TruncatedChronology,
        Fault::LenientCauchy,
        Fault::IdentityOrdering,
        Fault::ReversedTransfer,
        Fault::InverseBlockPermutation,
        Fault::DroppedSwap,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }

    /// Suites that exercise the corrupted components.
    pub fn suites(self) -> &'static [Suite] {
        use Fault::*;
        match self {
            ScaledProduct | NonAssociative | TrivialRestriction | NonFunctorialMap | CorruptedPropagator => {
                &[Suite::Theory, Suite::FunctorA, Suite::FunctorF, Suite::Involution, Suite::KgFormulas]
            }
            SurfaceDependentProduct => &[Suite::Theory, Suite::FunctorA, Suite::Involution],
            DefectiveRecursion => &[Suite::KgFormulas],
            ReversedTimeOrder => &[Suite::RoundTrip],
            SignFlippedStar | RegionDependentStar => &[Suite::Involution],
            ScalingIntertwiner | RegionDependentIntertwiner => &[Suite::FunctorF],
            WidenedCausalCone | SwappedCones | TruncatedChronology | LenientCauchy => &[Suite::Spacetime],
            IdentityOrdering | ReversedTransfer | InverseBlockPermutation | DroppedSwap => &[Suite::TimeOrder],
        }
    }

    /// The clean set with this fault's components swapped in.
    pub fn corrupt(self, clean: &Implementations) -> Implementations {
        use Fault::*;
        let mut im = clean.clone();
        let aqft = |d| Arc::new(DefectiveAqft { base: clean.aqft.clone(), defect: d }) as Arc<dyn Aqft>;
        let topfa = |d| Arc::new(DefectiveTopfa { base: clean.topfa.clone(), defect: d }) as Arc<dyn Topfa>;
        match self {
            ScaledProduct => {
                im.aqft = aqft(AqftDefect::Scaled);
                im.topfa = topfa(TopfaDefect::Scaled);
            }
            NonAssociative => {
                im.aqft = aqft(AqftDefect::NonAssociative);
                im.topfa = (clean.functor_f)(im.aqft.clone());
            }
            TrivialRestriction => {
                im.aqft = aqft(AqftDefect::TrivialRestriction);
                im.topfa = topfa(TopfaDefect::TrivialRestriction);
            }
            NonFunctorialMap => {
                im.aqft = aqft(AqftDefect::NonFunctorial);
                im.topfa = topfa(TopfaDefect::NonFunctorial);
            }
            CorruptedPropagator => {
                im.aqft = Arc::new(KgTheory::quantum(&clean.model).with_spacelike_offset(0.5));
                im.topfa = (clean.functor_f)(im.aqft.clone());
                im.propagators = Arc::new(corrupted_propagators(&clean.model));
            }
            DefectiveRecursion => {
                let cfg = clean.kg.clone().with_recursion_shift(0.05);
                im.propagators = Arc::new(Propagators::compute(&cfg));
                im.kg = cfg;
            }
            SurfaceDependentProduct => im.topfa = topfa(TopfaDefect::SurfaceDependent),
            ReversedTimeOrder => im.functor_f = reversed_functor_f,
            SignFlippedStar => im.star = Arc::new(SignFlipped),
            RegionDependentStar => im.star = Arc::new(RegionScaledStar),
            ScalingIntertwiner => im.intertwiner = Arc::new(GeneratorScaling(2.0)),
            RegionDependentIntertwiner => im.intertwiner = Arc::new(RegionScaling),
            WidenedCausalCone => im.causal = widened_causal,
            SwappedCones => {
                im.causal = crate::invariants::library_chrono;
                im.chrono = crate::invariants::library_causal;
            }
            TruncatedChronology => im.chrono = truncated_chrono,
            LenientCauchy => im.cauchy = |_, _, _| true,
            IdentityOrdering => im.search = |t| Some(Perm::identity(t.len())),
            ReversedTransfer => im.transfer = |s, r| r.compose(&s.inverse()),
            InverseBlockPermutation => im.block = |r, k| block_perm(&r.inverse(), k),
            DroppedSwap => im.factor = dropped_swap,
        }
        im
    }
}

fn widened_causal(amb: &LatticeSpacetime, p: Point, q: Point) -> bool {
    amb.contains(p) && amb.contains(q) && q.t - p.t >= amb.distance(p.x, q.x) - 1
}

fn truncated_chrono(amb: &LatticeSpacetime, p: Point, q: Point) -> bool {
    amb.chrono_lt(p, q) && q.t - p.t <= 2
}

fn dropped_swap(t: &DisjointTuple, a: &Perm, b: &Perm) -> Result<Vec<usize>, TimeOrderError> {
    let mut s = factor_into_causal_transpositions(t, a, b)?;
    s.pop();
    Ok(s)
}

/// One retarded entry at a spacelike pair near the middle of the window.
fn corrupted_propagators(model: &KgModel) -> Propagators {
    let mut props = model.propagators().clone();
    let amb = props.ambient().clone();
    let (lo, hi) = model.config().safe_rows();
    let t = (lo + hi) / 2;
    let (p, q) = (Point::new(t, 0), Point::new(t, 2.min(amb.space_extent() as i32 - 1)));
    props.set_retarded(amb.index(p), amb.index(q), 0.5);
    props
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AqftDefect {
    Scaled,
    NonAssociative,
    TrivialRestriction,
    NonFunctorial,
}

struct DefectiveAqft {
    base: Arc<dyn Aqft>,
    defect: AqftDefect,
}

fn linear_weight(a: &Poly) -> C64 {
    a.terms().filter(|(m, _)| m.degree() == 1).map(|(_, c)| *c).sum()
}

fn constant_part(a: &Poly) -> Poly {
    Poly::constant(a.coefficient(&Monomial::one()))
}

impl Aqft for DefectiveAqft {
    fn generators(&self, m: &Region) -> Result<Vec<Gen>, TheoryError> {
        self.base.generators(m)
    }

    fn multiply(&self, m: &Region, a: &Poly, b: &Poly) -> Result<Poly, TheoryError> {
        let ab = self.base.multiply(m, a, b)?;
        Ok(match self.defect {
            AqftDefect::Scaled => scaled(&ab, 1.1),
            AqftDefect::NonAssociative => ab.add(&Poly::constant(linear_weight(a) * linear_weight(b) * 0.1)),
            _ => ab,
        })
    }

    fn unit(&self, m: &Region) -> Result<Poly, TheoryError> {
        self.base.unit(m)
    }

    fn push_forward(&self, from: &Region, to: &Region, a: &Poly) -> Result<Poly, TheoryError> {
        let out = self.base.push_forward(from, to, a)?;
        Ok(match self.defect {
            AqftDefect::TrivialRestriction => constant_part(&out),
            AqftDefect::NonFunctorial if from != to => scaled(&out, 1.1),
            _ => out,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TopfaDefect {
    Scaled,
    SurfaceDependent,
    TrivialRestriction,
    NonFunctorial,
}

struct DefectiveTopfa {
    base: Arc<dyn Topfa>,
    defect: TopfaDefect,
}

fn earliest(r: &Region) -> i32 {
    r.time_window().map_or(0, |w| w.0)
}

impl Topfa for DefectiveTopfa {
    fn generators(&self, m: &Region) -> Result<Vec<Gen>, TheoryError> {
        self.base.generators(m)
    }

    fn product(&self, tuple: &DisjointTuple, inputs: &[Poly]) -> Result<Poly, TheoryError> {
        let out = self.base.product(tuple, inputs)?;
        let parts = tuple.parts();
        Ok(match (self.defect, parts.len()) {
            (TopfaDefect::Scaled, n) if n >= 2 => scaled(&out, 1.1),
            (TopfaDefect::SurfaceDependent, n) if n >= 2 => scaled(&out, 1.0 + 0.01 * earliest(&parts[0]) as f64),
            (TopfaDefect::TrivialRestriction, 1) => constant_part(&out),
            (TopfaDefect::NonFunctorial, 1) if &parts[0] != tuple.target() => scaled(&out, 1.1),
            _ => out,
        })
    }
}

/// Multiplies in the reverse of the time order.
struct ReversedPfa {
    a: Arc<dyn Aqft>,
}

fn reversed_functor_f(a: Arc<dyn Aqft>) -> Arc<dyn Topfa> {
    Arc::new(ReversedPfa { a })
}

impl Topfa for ReversedPfa {
    fn generators(&self, m: &Region) -> Result<Vec<Gen>, TheoryError> {
        self.a.generators(m)
    }

    fn product(&self, tuple: &DisjointTuple, inputs: &[Poly]) -> Result<Poly, TheoryError> {
        let rho = find_time_ordering(tuple).ok_or(TheoryError::NotTimeOrderable)?;
        let n = tuple.target();
        if tuple.len() < 2 {
            return crate::functor_f::time_ordered_product(self.a.as_ref(), tuple, inputs);
        }
        let mut acc: Option<Poly> = None;
        for i in (0..tuple.len()).rev() {
            let j = rho.apply(i);
            let x = self.a.push_forward(&tuple.parts()[j], n, &inputs[j])?;
            acc = Some(match acc {
                None => x,
                Some(acc) => self.a.multiply(n, &acc, &x)?,
            });
        }
        Ok(acc.expect("at least two factors"))
    }
}

struct SignFlipped;

impl Involution for SignFlipped {
    fn star(&self, _m: &Region, a: &Poly) -> Poly {
        a.conj().scale(C64::new(-1.0, 0.0))
    }
}

struct RegionScaledStar;

impl Involution for RegionScaledStar {
    fn star(&self, m: &Region, a: &Poly) -> Poly {
        scaled(&a.conj(), 1.0 + 0.1 * earliest(m) as f64)
    }
}

struct RegionScaling;

impl Intertwiner for RegionScaling {
    fn apply(&self, m: &Region, a: &Poly) -> Poly {
        scaled(a, 1.0 + 0.1 * earliest(m) as f64)
    }
}
