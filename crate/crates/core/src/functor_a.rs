//! From a Cauchy constant time-orderable prefactorization algebra to an AQFT.
//!
//! For a region `M` split by a Cauchy surface into disjoint Cauchy
//! subregions `U₊` (future) and `U₋` (past), the multiplication is
//!
//! `μ_M = F(ι_{(U₊,U₋)}) ∘ (F(ι_{U₊})⁻¹ ⊗ F(ι_{U₋})⁻¹)`.
//!
//! The inverses are LU solves on the truncated monomial spaces, one block
//! per degree.

use std::sync::Arc;

use nalgebra::{Dyn, LU};
use rustc_hash::FxHashMap;

use crate::lattice::{is_cauchy_subregion, surface_slabs, CauchySurfaceGraph, ConeMode, Direction, Point, PointSet, Region};
use crate::linalg::{conditioning, CMat, SINGULAR_THRESHOLD};
use crate::poly::{deviation, FinVec, Monomial, Poly, SampleConfig, C64};
use crate::theory::{sample_deviation, spanning_set, Aqft, CheckEntry, Memo, TheoryError, TheoryRef, Topfa, TOLERANCE};
use crate::time_order::DisjointTuple;

/// A region with a future/past pair of Cauchy subregions separated by a
/// surface.
#[derive(Clone, Debug, PartialEq)]
pub struct PmObject {
    m: Region,
    u_plus: Region,
    u_minus: Region,
    surface: CauchySurfaceGraph,
}

impl PmObject {
    pub fn new(m: Region, u_plus: Region, u_minus: Region, surface: CauchySurfaceGraph) -> Result<Self, TheoryError> {
        let amb = m.ambient().clone();
        let graph: Vec<Point> = surface.values().iter().enumerate().map(|(x, &t)| Point::new(t, x as i32)).collect();
        if let Some(&p) = graph.iter().find(|&&p| !m.contains(p)) {
            return Err(TheoryError::Precondition(format!("surface point {p} lies outside the region")));
        }
        let g = amb.set_of(&graph)?;
        let fut = amb.cone(&g, Direction::Future, ConeMode::Chronological);
        let past = amb.cone(&g, Direction::Past, ConeMode::Chronological);
        if !u_plus.set().is_subset(&fut.intersection(m.set())) {
            return Err(TheoryError::Precondition("future part is not above the surface".into()));
        }
        if !u_minus.set().is_subset(&past.intersection(m.set())) {
            return Err(TheoryError::Precondition("past part is not below the surface".into()));
        }
        if !u_plus.set().is_disjoint(u_minus.set()) {
            return Err(TheoryError::Precondition("future and past parts overlap".into()));
        }
        for (u, which) in [(&u_plus, "future"), (&u_minus, "past")] {
            if u.is_empty() || !is_cauchy_subregion(u, &m)? {
                return Err(TheoryError::Precondition(format!("{which} part is not a Cauchy subregion")));
            }
        }
        Ok(PmObject { m, u_plus, u_minus, surface })
    }

    /// `U± = I±(graph σ) ∩ M`.
    pub fn from_surface(m: &Region, surface: CauchySurfaceGraph) -> Result<Self, TheoryError> {
        let (plus, minus) = surface_slabs(&surface, m)?;
        Self::new(m.clone(), plus, minus, surface)
    }

    pub fn region(&self) -> &Region {
        &self.m
    }

    pub fn future(&self) -> &Region {
        &self.u_plus
    }

    pub fn past(&self) -> &Region {
        &self.u_minus
    }

    pub fn surface(&self) -> &CauchySurfaceGraph {
        &self.surface
    }

    /// Componentwise inclusion, the morphisms of the category of such pairs.
    pub fn maps_into(&self, other: &PmObject) -> bool {
        self.m == other.m && self.u_plus.is_subregion_of(&other.u_plus) && self.u_minus.is_subregion_of(&other.u_minus)
    }

    fn key(&self) -> (PointSet, PointSet, PointSet) {
        (self.m.set().clone(), self.u_plus.set().clone(), self.u_minus.set().clone())
    }
}

/// The surface through the middle of every column of `M`, shifted by `delta`.
pub fn mid_surface(m: &Region, delta: i32) -> Result<CauchySurfaceGraph, TheoryError> {
    let amb = m.ambient();
    let x_ext = amb.space_extent();
    let mut lo = vec![i32::MAX; x_ext];
    let mut hi = vec![i32::MIN; x_ext];
    for p in m.points() {
        lo[p.x as usize] = lo[p.x as usize].min(p.t);
        hi[p.x as usize] = hi[p.x as usize].max(p.t);
    }
    if lo.contains(&i32::MAX) {
        return Err(TheoryError::Precondition("region does not meet every column".into()));
    }
    let sigma = lo.iter().zip(&hi).map(|(&l, &h)| l + (h - l) / 2 + delta).collect();
    Ok(CauchySurfaceGraph::new(amb, sigma)?)
}

/// The split at the middle surface of `M`; flat for slabs.
pub fn canonical_pm(m: &Region) -> Result<PmObject, TheoryError> {
    let (lo, hi) = m.time_window().ok_or(TheoryError::Precondition("empty region".into()))?;
    if hi - lo < 2 {
        return Err(TheoryError::Precondition("time window too thin for a future/past split".into()));
    }
    PmObject::from_surface(m, mid_surface(m, 0)?)
}

/// Connecting chain `pm1 → (Σ₊,Σ₋) ← (Σ₊∩Σ'₊, Σ₋∩Σ'₋) → (Σ'₊,Σ'₋) ← pm2`.
pub fn pm_zigzag(pm1: &PmObject, pm2: &PmObject) -> Result<Vec<PmObject>, TheoryError> {
    if pm1.m != pm2.m {
        return Err(TheoryError::Precondition("objects live over different regions".into()));
    }
    if pm1 == pm2 {
        return Ok(vec![pm1.clone()]);
    }
    let m = &pm1.m;
    let s1 = PmObject::from_surface(m, pm1.surface.clone())?;
    let s2 = PmObject::from_surface(m, pm2.surface.clone())?;
    let plus = s1.u_plus.set().intersection(s2.u_plus.set());
    let minus = s1.u_minus.set().intersection(s2.u_minus.set());
    let amb = m.ambient();
    let mid = PmObject::new(
        m.clone(),
        Region::from_set(amb, plus)?,
        Region::from_set(amb, minus)?,
        pm1.surface.pointwise_min(&pm2.surface),
    )?;
    Ok(vec![pm1.clone(), s1, mid, s2, pm2.clone()])
}

struct Block {
    row_index: FxHashMap<Monomial, usize>,
    cols: Vec<Monomial>,
    lu: LU<C64, Dyn, Dyn>,
}

/// Blocks up to this many columns get an SVD singularity test.
const SVD_BLOCK_LIMIT: usize = 400;

/// Inverse of `F(ι_U^M)` on truncated monomial spaces.
pub struct RestrictionInverse {
    f: Arc<dyn Topfa>,
    u: Region,
    m: Region,
    blocks: Memo<usize, Arc<Block>>,
}

impl RestrictionInverse {
    pub fn new(f: Arc<dyn Topfa>, u: &Region, m: &Region) -> Self {
        RestrictionInverse { f, u: u.clone(), m: m.clone(), blocks: Memo::default() }
    }

    fn block(&self, k: usize) -> Result<Arc<Block>, TheoryError> {
        self.blocks.get_or_try_init(&k, || {
            let cols = FinVec::new(self.f.generators(&self.u)?, k).monomials_of_degree(k);
            let rows = FinVec::new(self.f.generators(&self.m)?, k).monomials_of_degree(k);
            if rows.len() != cols.len() {
                return Err(TheoryError::NonCauchyConstant { sigma_min: 0.0 });
            }
            let row_index: FxHashMap<Monomial, usize> = rows.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
            let incl = DisjointTuple::inclusion(&self.u, &self.m)?;
            let mut mat = CMat::zeros(rows.len(), cols.len());
            for (j, c) in cols.iter().enumerate() {
                let image = self.f.product(&incl, &[Poly::monomial(c.clone())])?;
                for (mono, v) in image.terms() {
                    if mono.degree() != k {
                        return Err(TheoryError::Impossible("restriction map does not preserve degree".into()));
                    }
                    let Some(&i) = row_index.get(mono) else {
                        return Err(TheoryError::Impossible("restriction image leaves the spanning set".into()));
                    };
                    mat[(i, j)] += *v;
                }
            }
            if cols.len() <= SVD_BLOCK_LIMIT {
                let c = conditioning(&mat);
                if c.sigma_min < SINGULAR_THRESHOLD {
                    return Err(TheoryError::NonCauchyConstant { sigma_min: c.sigma_min });
                }
            }
            let lu = mat.lu();
            // Large blocks: pivot ratio of the LU factor instead of an SVD.
            let pivots = lu.u().diagonal().map(|c| c.norm());
            let (lo, hi) = (pivots.min(), pivots.max());
            if lo < SINGULAR_THRESHOLD * hi.max(1.0) {
                return Err(TheoryError::NonCauchyConstant { sigma_min: lo });
            }
            Ok(Arc::new(Block { row_index, cols, lu }))
        })
    }

    /// The unique `x` on `U` with `F(ι_U^M)(x) = a`.
    pub fn solve(&self, a: &Poly) -> Result<Poly, TheoryError> {
        let mut by_degree: FxHashMap<usize, Vec<(&Monomial, &C64)>> = FxHashMap::default();
        for (m, c) in a.terms() {
            by_degree.entry(m.degree()).or_default().push((m, c));
        }
        let mut out = Poly::zero();
        for (k, terms) in by_degree {
            let block = self.block(k)?;
            let mut rhs = CMat::zeros(block.cols.len(), 1);
            for (m, c) in terms {
                let Some(&i) = block.row_index.get(m) else {
                    return Err(TheoryError::Precondition("observable is outside the region's spanning set".into()));
                };
                rhs[(i, 0)] = *c;
            }
            let x = block.lu.solve(&rhs).ok_or(TheoryError::NonCauchyConstant { sigma_min: 0.0 })?;
            for (j, c) in block.cols.iter().enumerate() {
                out.add_term(c.clone(), x[(j, 0)]);
            }
        }
        Ok(out)
    }
}

/// The AQFT built from a time-orderable prefactorization algebra.
pub struct AqftFromPfa {
    f: Arc<dyn Topfa>,
    inverses: Memo<(PointSet, PointSet), Arc<RestrictionInverse>>,
    canonical: Memo<PointSet, Arc<PmObject>>,
    tuples: Memo<(PointSet, PointSet, PointSet), Arc<DisjointTuple>>,
}

pub fn apply_a(f: Arc<dyn Topfa>) -> AqftFromPfa {
    AqftFromPfa { f, inverses: Memo::default(), canonical: Memo::default(), tuples: Memo::default() }
}

impl AqftFromPfa {
    pub fn source(&self) -> &Arc<dyn Topfa> {
        &self.f
    }

    pub fn inverse(&self, u: &Region, m: &Region) -> Arc<RestrictionInverse> {
        let key = (u.set().clone(), m.set().clone());
        self.inverses
            .get_or_try_init(&key, || Ok::<_, TheoryError>(Arc::new(RestrictionInverse::new(self.f.clone(), u, m))))
            .expect("infallible")
    }

    pub fn canonical_pm(&self, m: &Region) -> Result<Arc<PmObject>, TheoryError> {
        self.canonical.get_or_try_init(m.set(), || canonical_pm(m).map(Arc::new))
    }

    /// `μ_M` built from a specific split.
    pub fn multiply_with(&self, pm: &PmObject, a: &Poly, b: &Poly) -> Result<Poly, TheoryError> {
        let x = self.inverse(&pm.u_plus, &pm.m).solve(a)?;
        let y = self.inverse(&pm.u_minus, &pm.m).solve(b)?;
        let tuple = self.tuples.get_or_try_init(&pm.key(), || {
            DisjointTuple::new(pm.m.clone(), vec![pm.u_plus.clone(), pm.u_minus.clone()]).map(Arc::new)
        })?;
        self.f.product(&tuple, &[x, y])
    }
}

/// The multiplication of one split, as a standalone value.
pub struct Multiplication<'a> {
    source: &'a AqftFromPfa,
    pm: PmObject,
}

impl Multiplication<'_> {
    pub fn apply(&self, a: &Poly, b: &Poly) -> Result<Poly, TheoryError> {
        self.source.multiply_with(&self.pm, a, b)
    }

    pub fn split(&self) -> &PmObject {
        &self.pm
    }
}

/// Checks that both restrictions of the split are invertible and returns
/// the multiplication.
pub fn build_multiplication<'a>(a: &'a AqftFromPfa, pm: &PmObject) -> Result<Multiplication<'a>, TheoryError> {
    a.inverse(&pm.u_plus, &pm.m).block(1)?;
    a.inverse(&pm.u_minus, &pm.m).block(1)?;
    Ok(Multiplication { source: a, pm: pm.clone() })
}

impl Aqft for AqftFromPfa {
    fn generators(&self, m: &Region) -> Result<Vec<crate::poly::Gen>, TheoryError> {
        self.f.generators(m)
    }

    fn multiply(&self, m: &Region, a: &Poly, b: &Poly) -> Result<Poly, TheoryError> {
        let pm = self.canonical_pm(m)?;
        self.multiply_with(&pm, a, b)
    }

    fn unit(&self, m: &Region) -> Result<Poly, TheoryError> {
        self.f.product(&DisjointTuple::new(m.clone(), Vec::new())?, &[])
    }

    fn push_forward(&self, from: &Region, to: &Region, a: &Poly) -> Result<Poly, TheoryError> {
        self.f.product(&DisjointTuple::inclusion(from, to)?, std::slice::from_ref(a))
    }
}

/// Multiplications built from two splits agree.
pub fn check_independence(
    a: &AqftFromPfa,
    pm1: &PmObject,
    pm2: &PmObject,
    cfg: &SampleConfig,
) -> Result<CheckEntry, TheoryError> {
    if pm1.m != pm2.m {
        return Err(TheoryError::Precondition("objects live over different regions".into()));
    }
    let span = spanning_set(TheoryRef::Aqft(a), &pm1.m, cfg.max_degree)?;
    let out = sample_deviation(&[span.clone(), span], cfg, |x| {
        Ok((a.multiply_with(pm1, &x[0], &x[1])?, a.multiply_with(pm2, &x[0], &x[1])?))
    })?;
    Ok(out.into_entry("a_independence", pm1.m.ambient()))
}

/// Associativity through two stacked splits, `Σ₁` above `Σ₀`:
/// `μ₀(μ₁(a,b),c) = μ₁(a, μ₀(b,c))`, and both unit laws of `μ_M`.
pub fn check_assoc_unital(a: &AqftFromPfa, m: &Region, cfg: &SampleConfig) -> Result<Vec<CheckEntry>, TheoryError> {
    let lower = PmObject::from_surface(m, mid_surface(m, -1)?)?;
    let upper = PmObject::from_surface(m, mid_surface(m, 1)?)?;
    let span = spanning_set(TheoryRef::Aqft(a), m, cfg.max_degree)?;
    let assoc = sample_deviation(&[span.clone(), span.clone(), span.clone()], cfg, |x| {
        let l = a.multiply_with(&lower, &a.multiply_with(&upper, &x[0], &x[1])?, &x[2])?;
        let r = a.multiply_with(&upper, &x[0], &a.multiply_with(&lower, &x[1], &x[2])?)?;
        Ok((l, r))
    })?;
    let unit = a.unit(m)?;
    let left = sample_deviation(std::slice::from_ref(&span), cfg, |x| Ok((a.multiply(m, &unit, &x[0])?, x[0].clone())))?;
    let right = sample_deviation(std::slice::from_ref(&span), cfg, |x| Ok((a.multiply(m, &x[0], &unit)?, x[0].clone())))?;
    let amb = m.ambient();
    Ok(vec![
        assoc.into_entry("a_associativity", amb),
        left.into_entry("a_unit_left", amb),
        right.into_entry("a_unit_right", amb),
    ])
}

/// `μ_M(ι a, ι b) = ι μ_U(a, b)` for `U ⊆ M`.
pub fn check_naturality(a: &AqftFromPfa, u: &Region, m: &Region, cfg: &SampleConfig) -> Result<CheckEntry, TheoryError> {
    if !u.is_subregion_of(m) {
        return Err(TheoryError::Precondition("naturality needs an inclusion".into()));
    }
    let span = spanning_set(TheoryRef::Aqft(a), u, cfg.max_degree)?;
    let out = sample_deviation(&[span.clone(), span], cfg, |x| {
        let l = a.multiply(m, &a.push_forward(u, m, &x[0])?, &a.push_forward(u, m, &x[1])?)?;
        let r = a.push_forward(u, m, &a.multiply(u, &x[0], &x[1])?)?;
        Ok((l, r))
    })?;
    Ok(out.into_entry("a_naturality", m.ambient()))
}

/// The pathology of regions that are not relatively compact cannot occur in
/// a finite lattice; the report says so explicitly.
pub fn naturality_pathology_entry() -> CheckEntry {
    CheckEntry::degenerate(
        "a_naturality_non_relatively_compact",
        "not applicable: every causally convex region of the finite model is relatively compact",
    )
}

/// Unit preservation of the built maps.
pub fn check_unit_maps(a: &AqftFromPfa, u: &Region, m: &Region) -> Result<CheckEntry, TheoryError> {
    let l = a.push_forward(u, m, &a.unit(u)?)?;
    Ok(CheckEntry::measured("a_unit_maps", deviation(&l, &a.unit(m)?), TOLERANCE))
}

/// Distinct splits of `M` used for independence checks: middle surface,
/// shifted one row up and down, and a zig-zag surface.
pub fn pm_family(m: &Region) -> Vec<PmObject> {
    let mut out: Vec<PmObject> = Vec::new();
    let mut push = |pm: Result<PmObject, TheoryError>| {
        if let Ok(pm) = pm {
            if !out.contains(&pm) {
                out.push(pm);
            }
        }
    };
    for d in [0, -1, 1] {
        push(mid_surface(m, d).and_then(|s| PmObject::from_surface(m, s)));
    }
    if let Ok(base) = mid_surface(m, 0) {
        let amb = m.ambient();
        let zig: Vec<i32> = base.values().iter().enumerate().map(|(x, &t)| t + (x % 2) as i32).collect();
        if amb.space_extent().is_multiple_of(2) {
            push(CauchySurfaceGraph::new(amb, zig).map_err(TheoryError::from).and_then(|s| PmObject::from_surface(m, s)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpacetime;

    #[test]
    fn canonical_split_of_a_slab() {
        let amb = LatticeSpacetime::cylinder(12, 6);
        let m = Region::slab(&amb, 0, 9).unwrap();
        let pm = canonical_pm(&m).unwrap();
        assert_eq!(pm.surface().values(), &[4; 6]);
        assert_eq!(pm.future(), &Region::slab(&amb, 5, 9).unwrap());
        assert_eq!(pm.past(), &Region::slab(&amb, 0, 3).unwrap());
        assert!(canonical_pm(&Region::slab(&amb, 3, 3).unwrap()).is_err());
        assert!(canonical_pm(&Region::slab(&amb, 3, 4).unwrap()).is_err());
    }

    #[test]
    fn diamonds_admit_no_split() {
        let amb = LatticeSpacetime::cylinder(16, 8);
        let d = Region::diamond(&amb, Point::new(2, 3), Point::new(8, 3)).unwrap();
        assert!(canonical_pm(&d).is_err());
    }

    #[test]
    fn zigzag_between_flat_surfaces() {
        let amb = LatticeSpacetime::cylinder(12, 6);
        let m = Region::slab(&amb, 0, 9).unwrap();
        let a = PmObject::from_surface(&m, CauchySurfaceGraph::flat(&amb, 4)).unwrap();
        let b = PmObject::from_surface(&m, CauchySurfaceGraph::flat(&amb, 6)).unwrap();
        assert_eq!(pm_zigzag(&a, &a).unwrap().len(), 1);
        let z = pm_zigzag(&a, &b).unwrap();
        assert_eq!(z.len(), 5);
        assert_eq!(z[2].future(), &Region::slab(&amb, 7, 9).unwrap());
        assert_eq!(z[2].past(), &Region::slab(&amb, 0, 3).unwrap());
        assert!(z[0].maps_into(&z[1]));
        assert!(z[2].maps_into(&z[1]));
        assert!(z[2].maps_into(&z[3]));
        assert!(z[4].maps_into(&z[3]));
    }

    #[test]
    fn family_has_distinct_valid_splits() {
        let amb = LatticeSpacetime::cylinder(16, 6);
        let m = Region::slab(&amb, 3, 12).unwrap();
        let fam = pm_family(&m);
        assert!(fam.len() >= 3);
        for (i, a) in fam.iter().enumerate() {
            for b in &fam[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }
}
